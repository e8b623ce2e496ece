#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biosearch/knowledge.hpp"

namespace biosearch {

enum class GraphFormat : std::uint8_t { JsonLines };

/// Only "jsonl" is supported; throws ConfigError otherwise.
GraphFormat graph_format_from_string(std::string_view s);

struct GraphNode {
  std::string id;  // "entity:…", "doc:…" or "mention:…"
  std::string label;
  std::string entity_type;
  std::string entity_subtype;
  std::optional<std::string> ontology_id;

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::string source;
  std::string relation;
  std::string target;
  std::vector<Provenance> provenance;  // sorted, one entry per supporting triplet

  bool operator==(const GraphEdge&) const = default;
};

struct Graph {
  std::vector<GraphNode> nodes;  // sorted by id
  std::vector<GraphEdge> edges;  // sorted by (source, relation, target)

  bool operator==(const Graph&) const = default;
};

/// Node id for one side of a triplet. Linked entities with an ontology id
/// share one node across all mentions; documents map to "doc:" nodes and
/// unlinked mentions to their normalized surface form.
std::string node_id(const std::optional<Entity>& entity, std::string_view surface);

/// Edges are deduplicated on (source, relation, target) and accumulate the
/// provenance of every triplet that produced them.
Graph build_graph(std::span<const Triplet> triplets);

/// A header line, then one line per node and one per edge.
void export_graph(std::span<const Triplet> triplets, GraphFormat format, std::ostream& out);
void write_graph(const Graph& graph, std::ostream& out);

/// Throws FormatError on a malformed file or unknown format version.
Graph import_graph(std::istream& in);

inline constexpr int kGraphFormatVersion = 1;

}  // namespace biosearch
