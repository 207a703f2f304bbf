#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "toporel/topology.hpp"

namespace toporel {

/// Conceptual-neighborhood graph of one type combination. Nodes are exactly
/// the predicates applicable to the combination; edges are undirected.
class NeighborhoodGraph {
 public:
  NeighborhoodGraph(TypeCombo combo, std::vector<std::pair<Predicate, Predicate>> edges);

  TypeCombo combo() const { return combo_; }
  const std::vector<Predicate>& nodes() const { return nodes_; }
  const std::vector<std::pair<Predicate, Predicate>>& edges() const { return edges_; }
  bool has_node(Predicate p) const;
  bool adjacent(Predicate a, Predicate b) const;
  bool connected() const;

  /// Unit-weight shortest path length. Throws NotApplicable for foreign nodes.
  int distance(Predicate a, Predicate b) const;

 private:
  TypeCombo combo_;
  std::vector<Predicate> nodes_;
  std::vector<std::pair<Predicate, Predicate>> edges_;
  std::map<Predicate, std::vector<Predicate>> adjacency_;
};

/// One graph per simple type combination.
class NeighborhoodTable {
 public:
  /// Parses the JSON graph file format (see data/neighborhood_graphs.json).
  /// Throws FormatError when a graph is missing, disconnected, has self
  /// loops or names a predicate not applicable to its combination.
  static NeighborhoodTable from_json(std::string_view text);
  static NeighborhoodTable from_file(const std::string& path);

  const NeighborhoodGraph& graph(TypeCombo combo) const;
  const std::map<TypeCombo, NeighborhoodGraph>& graphs() const { return graphs_; }
  int distance(TypeCombo combo, Predicate a, Predicate b) const { return graph(combo).distance(a, b); }

 private:
  std::map<TypeCombo, NeighborhoodGraph> graphs_;
};

/// The shipped adjacency tables.
const NeighborhoodTable& default_graphs();

int topological_distance(TypeCombo combo, Predicate a, Predicate b);

struct DistanceRecord {
  Predicate predicted;
  Predicate truth;
  TypeCombo combo;
};

struct MeanDistance {
  double value = 0.0;
  std::size_t incorrect = 0;
  /// No incorrect records: value is 0 and carries no information.
  bool empty = true;
};

MeanDistance mean_incorrect_distance(const std::vector<DistanceRecord>& records,
                                     const NeighborhoodTable& table = default_graphs());

}  // namespace toporel
