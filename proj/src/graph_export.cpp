#include "biosearch/graph_export.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <tuple>

#include "biosearch/errors.hpp"

namespace biosearch {

using nlohmann::json;

GraphFormat graph_format_from_string(std::string_view s) {
  if (s == "jsonl") return GraphFormat::JsonLines;
  throw ConfigError("unknown graph format '" + std::string(s) + "' (expected jsonl)");
}

std::string node_id(const std::optional<Entity>& entity, std::string_view surface) {
  if (entity) {
    if (entity->entity_type == "Document") return "doc:" + entity->canonical_name;
    if (entity->ontology_id) return "entity:" + *entity->ontology_id;
    return "entity:" + entity->entity_type + ":" + normalize_mention(entity->canonical_name);
  }
  return "mention:" + normalize_mention(surface);
}

namespace {

GraphNode make_node(const std::optional<Entity>& entity, std::string_view surface) {
  GraphNode n;
  n.id = node_id(entity, surface);
  if (entity) {
    n.label = entity->canonical_name;
    n.entity_type = entity->entity_type;
    n.entity_subtype = entity->entity_subtype;
    n.ontology_id = entity->ontology_id;
  } else {
    n.label = std::string(surface);
  }
  return n;
}

}  // namespace

Graph build_graph(std::span<const Triplet> triplets) {
  std::map<std::string, GraphNode> nodes;
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<Provenance>> edges;
  for (const auto& t : triplets) {
    GraphNode s = make_node(t.subject_entity, t.subject);
    GraphNode o = make_node(t.object_entity, t.object);
    auto& prov = edges[{s.id, t.relation, o.id}];
    prov.push_back(t.provenance);
    nodes.emplace(s.id, std::move(s));
    nodes.emplace(o.id, std::move(o));
  }
  Graph g;
  for (auto& [id, node] : nodes) g.nodes.push_back(std::move(node));
  for (auto& [key, prov] : edges) {
    std::sort(prov.begin(), prov.end());
    g.edges.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), std::move(prov)});
  }
  return g;
}

void write_graph(const Graph& graph, std::ostream& out) {
  out << json{{"format", "biosearch-graph"},
              {"version", kGraphFormatVersion},
              {"nodes", graph.nodes.size()},
              {"edges", graph.edges.size()}}
             .dump()
      << '\n';
  for (const auto& n : graph.nodes) {
    json j = {{"kind", "node"},          {"id", n.id},
              {"label", n.label},        {"type", n.entity_type},
              {"subtype", n.entity_subtype}};
    j["ontology_id"] = n.ontology_id ? json(*n.ontology_id) : json(nullptr);
    out << j.dump() << '\n';
  }
  for (const auto& e : graph.edges) {
    json prov = json::array();
    for (const auto& p : e.provenance) {
      json pj = {{"doc_id", p.doc_id}, {"para_id", p.para_id}};
      pj["sentence"] = p.sentence ? json(*p.sentence) : json(nullptr);
      prov.push_back(std::move(pj));
    }
    out << json{{"kind", "edge"},
                {"source", e.source},
                {"relation", e.relation},
                {"target", e.target},
                {"provenance", std::move(prov)}}
               .dump()
        << '\n';
  }
}

void export_graph(std::span<const Triplet> triplets, GraphFormat format, std::ostream& out) {
  switch (format) {
    case GraphFormat::JsonLines: write_graph(build_graph(triplets), out); return;
  }
}

Graph import_graph(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("graph export: missing header");
  std::size_t want_nodes = 0, want_edges = 0;
  try {
    const json h = json::parse(line);
    if (h.value("format", "") != "biosearch-graph") throw FormatError("graph export: bad header");
    if (h.value("version", 0) != kGraphFormatVersion) {
      throw FormatError("graph export: unsupported version");
    }
    want_nodes = h.at("nodes").get<std::size_t>();
    want_edges = h.at("edges").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("graph export: bad header: ") + e.what());
  }

  Graph g;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "node") {
        GraphNode n;
        n.id = j.at("id").get<std::string>();
        n.label = j.at("label").get<std::string>();
        n.entity_type = j.at("type").get<std::string>();
        n.entity_subtype = j.at("subtype").get<std::string>();
        if (!j.at("ontology_id").is_null()) n.ontology_id = j["ontology_id"].get<std::string>();
        g.nodes.push_back(std::move(n));
      } else if (kind == "edge") {
        GraphEdge e;
        e.source = j.at("source").get<std::string>();
        e.relation = j.at("relation").get<std::string>();
        e.target = j.at("target").get<std::string>();
        for (const auto& pj : j.at("provenance")) {
          Provenance p;
          p.doc_id = pj.at("doc_id").get<std::string>();
          p.para_id = pj.at("para_id").get<std::string>();
          if (!pj.at("sentence").is_null()) p.sentence = pj["sentence"].get<int>();
          e.provenance.push_back(std::move(p));
        }
        g.edges.push_back(std::move(e));
      } else {
        throw FormatError("graph export line " + std::to_string(lineno) + ": unknown kind '" +
                          kind + "'");
      }
    } catch (const json::exception& e) {
      throw FormatError("graph export line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (g.nodes.size() != want_nodes || g.edges.size() != want_edges) {
    throw FormatError("graph export: header counts do not match the body");
  }
  return g;
}

}  // namespace biosearch
