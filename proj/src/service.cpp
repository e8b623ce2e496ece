#include "biosearch/service.hpp"

#include <charconv>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "biosearch/errors.hpp"
#include "biosearch/version.hpp"

namespace biosearch {

using nlohmann::json;

namespace {

/// A request problem that maps straight onto a 4xx/5xx reply.
struct RequestError {
  int status;
  std::string code;
  std::string message;
  std::string field;
};

/// Accessor over either query-string parameters or a JSON body.
class Args {
 public:
  Args(const QueryParams& params, const json* body) : params_(params), body_(body) {}

  std::optional<std::string> str(const std::string& name) const {
    if (body_ != nullptr) {
      auto it = body_->find(name);
      if (it == body_->end() || it->is_null()) return std::nullopt;
      if (!it->is_string()) throw RequestError{400, "bad_request", "must be a string", name};
      return it->get<std::string>();
    }
    auto it = params_.find(name);
    if (it == params_.end()) return std::nullopt;
    return it->second;
  }

  std::string query() const {
    auto q = str("q");
    if (!q) throw RequestError{400, "bad_request", "query parameter is required", "q"};
    return *q;
  }

  std::optional<std::size_t> positive(const std::string& name) const {
    if (body_ != nullptr) {
      auto it = body_->find(name);
      if (it == body_->end() || it->is_null()) return std::nullopt;
      if (!it->is_number_integer() || it->get<long long>() < 1) {
        throw RequestError{400, "bad_request", "must be a positive integer", name};
      }
      return it->get<std::size_t>();
    }
    auto v = str(name);
    if (!v) return std::nullopt;
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || ptr != v->data() + v->size() || out < 1) {
      throw RequestError{400, "bad_request", "must be a positive integer", name};
    }
    return out;
  }

  bool flag(const std::string& name) const {
    if (body_ != nullptr) {
      auto it = body_->find(name);
      if (it == body_->end() || it->is_null()) return false;
      if (!it->is_boolean()) throw RequestError{400, "bad_request", "must be a boolean", name};
      return it->get<bool>();
    }
    auto v = str(name);
    if (!v) return false;
    if (*v == "1" || *v == "true") return true;
    if (*v == "0" || *v == "false") return false;
    throw RequestError{400, "bad_request", "must be 0, 1, true or false", name};
  }

  FacetFilter facets() const {
    FacetFilter filter;
    auto add = [&](const std::string& name, const std::string& value, const std::string& field) {
      auto f = facet_field_from_string(name);
      if (!f) throw RequestError{400, "bad_request", "unknown facet field", field};
      if (!filter.clauses.emplace(*f, value).second) {
        throw RequestError{400, "bad_request", "only one value per facet field", field};
      }
    };
    if (body_ != nullptr) {
      auto it = body_->find("facets");
      if (it == body_->end() || it->is_null()) return filter;
      if (!it->is_object()) throw RequestError{400, "bad_request", "must be an object", "facets"};
      for (const auto& [name, value] : it->items()) {
        if (!value.is_string()) {
          throw RequestError{400, "bad_request", "must be a string", "facets." + name};
        }
        add(name, value.get<std::string>(), "facets." + name);
      }
      return filter;
    }
    for (const auto& [key, value] : params_) {
      if (key.rfind("facet.", 0) != 0) continue;
      add(key.substr(6), value, key);
    }
    return filter;
  }

 private:
  const QueryParams& params_;
  const json* body_;
};

HttpReply json_reply(int status, json body, const Engine* engine) {
  body["engine_version"] = kEngineVersion;
  body["index_fingerprint"] = engine ? json(engine->manifest().fingerprint) : json(nullptr);
  return {status, "application/json", body.dump()};
}

HttpReply error_reply(const RequestError& e, const Engine* engine) {
  json body = {{"error",
                {{"code", e.code},
                 {"message", e.message},
                 {"field", e.field.empty() ? json(nullptr) : json(e.field)}}}};
  return json_reply(e.status, std::move(body), engine);
}

}  // namespace

Service::Service(std::shared_ptr<const Engine> engine) : engine_(std::move(engine)) {}

HttpReply Service::handle(const std::string& method, const std::string& path,
                          const QueryParams& params, const std::string& body) const {
  const Engine* engine = engine_.get();
  try {
    static const std::set<std::string> known = {"/health", "/spell",  "/search",
                                                 "/triplets", "/qa", "/export/graph"};
    if (known.count(path) == 0) throw RequestError{404, "not_found", "no such endpoint", ""};
    const bool post = method == "POST";
    if (method != "GET" && !(post && path != "/health" && path != "/export/graph")) {
      throw RequestError{405, "method_not_allowed", "method not allowed", ""};
    }

    if (path == "/health") {
      if (engine == nullptr) {
        return json_reply(503, {{"status", "unavailable"}, {"reason", "no index loaded"}}, engine);
      }
      return json_reply(200, {{"status", "ok"}, {"index", engine->stats()}}, engine);
    }
    if (engine == nullptr) {
      throw RequestError{503, "index_unavailable", "no index is loaded", ""};
    }

    json parsed;
    if (post) {
      try {
        parsed = json::parse(body);
      } catch (const json::exception& e) {
        throw RequestError{400, "bad_request", std::string("malformed JSON body: ") + e.what(),
                           "body"};
      }
      if (!parsed.is_object()) {
        throw RequestError{400, "bad_request", "body must be a JSON object", "body"};
      }
    }
    const Args args(params, post ? &parsed : nullptr);

    if (path == "/export/graph") {
      std::ostringstream out;
      engine->export_graph(out);
      return {200, "application/x-ndjson", out.str()};
    }
    if (path == "/spell") return json_reply(200, to_json(engine->spell(args.query())), engine);
    if (path == "/search") {
      const std::string q = args.query();
      const auto r = args.positive("r");
      const bool spell = args.flag("spell");
      return json_reply(200, to_json(engine->search(q, r, spell)), engine);
    }
    if (path == "/triplets") {
      const std::string q = args.query();
      const std::size_t k = args.positive("k").value_or(engine->config().retrieval.r);
      const FacetFilter filter = args.facets();
      return json_reply(200, to_json(engine->triplets(q, filter, k)), engine);
    }
    return json_reply(200, to_json(engine->qa(args.query())), engine);
  } catch (const RequestError& e) {
    return error_reply(e, engine);
  } catch (const EmptyQueryError& e) {
    return error_reply({400, "empty_query", e.what(), "q"}, engine);
  } catch (const ParseError& e) {
    return error_reply({400, "bad_request", e.what(), e.field()}, engine);
  } catch (const PluginError& e) {
    spdlog::error("plugin failure on {}: {}", path, e.what());
    return error_reply({502, "plugin_error", e.what(), ""}, engine);
  } catch (const std::exception& e) {
    spdlog::error("request {} {} failed: {}", method, path, e.what());
    return error_reply({500, "internal", e.what(), ""}, engine);
  }
}

std::pair<std::string, int> parse_listen_address(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw ConfigError("listen address '" + listen + "' must be host:port");
  }
  int port = -1;
  const std::string p = listen.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), port);
  if (ec != std::errc() || ptr != p.data() + p.size() || port < 0 || port > 65535) {
    throw ConfigError("listen address '" + listen + "' has a bad port");
  }
  return {listen.substr(0, colon), port};
}

struct HttpServer::Impl {
  explicit Impl(const Service& s) : service(s) {}
  const Service& service;
  httplib::Server server;
};

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    QueryParams params(req.params.begin(), req.params.end());
    const HttpReply reply = impl_->service.handle(req.method, req.path, params, req.body);
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type.c_str());
    res.set_header("X-Engine-Version", kEngineVersion);
    if (const Engine* e = impl_->service.engine()) {
      res.set_header("X-Index-Fingerprint", e->manifest().fingerprint);
    }
  };
  impl_->server.Get(R"(/.*)", handler);
  impl_->server.Post(R"(/.*)", handler);
  impl_->server.Put(R"(/.*)", handler);
  impl_->server.Delete(R"(/.*)", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::run() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace biosearch
