#pragma once

#include <map>
#include <memory>
#include <string>

#include "biosearch/engine.hpp"

namespace biosearch {

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

using QueryParams = std::multimap<std::string, std::string>;

/// Request routing and JSON encoding, independent of any socket layer. With
/// no engine every data endpoint answers 503.
class Service {
 public:
  explicit Service(std::shared_ptr<const Engine> engine);

  HttpReply handle(const std::string& method, const std::string& path, const QueryParams& params,
                   const std::string& body) const;

  const Engine* engine() const noexcept { return engine_.get(); }

 private:
  std::shared_ptr<const Engine> engine_;
};

/// Splits "host:port". Throws ConfigError.
std::pair<std::string, int> parse_listen_address(const std::string& listen);

/// Blocking HTTP front end for a Service.
class HttpServer {
 public:
  explicit HttpServer(const Service& service);
  ~HttpServer();

  /// Binds host:port (port 0 picks a free one) and returns the bound port,
  /// or -1 on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(); returns false if the listener failed.
  bool run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace biosearch
