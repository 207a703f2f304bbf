#include "toporel/neighborhood.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "assets.hpp"
#include "toporel/error.hpp"

namespace toporel {

NeighborhoodGraph::NeighborhoodGraph(TypeCombo combo, std::vector<std::pair<Predicate, Predicate>> edges)
    : combo_(combo), nodes_(applicable_predicates(combo)), edges_(std::move(edges)) {
  for (const auto& [a, b] : edges_) {
    if (a == b) throw FormatError("self loop on " + std::string(predicate_name(a)) + " in " + combo.name());
    for (Predicate p : {a, b}) {
      if (!has_node(p)) {
        throw FormatError(std::string(predicate_name(p)) + " is not applicable to " + combo.name());
      }
    }
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& [p, list] : adjacency_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

bool NeighborhoodGraph::has_node(Predicate p) const {
  return std::find(nodes_.begin(), nodes_.end(), p) != nodes_.end();
}

bool NeighborhoodGraph::adjacent(Predicate a, Predicate b) const {
  auto it = adjacency_.find(a);
  return it != adjacency_.end() && std::binary_search(it->second.begin(), it->second.end(), b);
}

bool NeighborhoodGraph::connected() const {
  for (Predicate p : nodes_) {
    if (distance(nodes_.front(), p) < 0) return false;
  }
  return true;
}

int NeighborhoodGraph::distance(Predicate a, Predicate b) const {
  for (Predicate p : {a, b}) {
    if (!has_node(p)) {
      throw NotApplicable(std::string(predicate_name(p)) + " is not applicable to " + combo_.name());
    }
  }
  std::map<Predicate, int> depth{{a, 0}};
  std::deque<Predicate> queue{a};
  while (!queue.empty()) {
    const Predicate cur = queue.front();
    queue.pop_front();
    if (cur == b) return depth[cur];
    auto it = adjacency_.find(cur);
    if (it == adjacency_.end()) continue;
    for (Predicate next : it->second) {
      if (depth.emplace(next, depth[cur] + 1).second) queue.push_back(next);
    }
  }
  return -1;
}

NeighborhoodTable NeighborhoodTable::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("neighborhood graph file: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "toporel-neighborhood" || doc.value("version", 0) != 1) {
    throw FormatError("neighborhood graph file: expected format toporel-neighborhood version 1");
  }
  NeighborhoodTable table;
  try {
    for (const auto& entry : doc.at("graphs")) {
      const std::string name = entry.at("combo").get<std::string>();
      const auto combo = TypeCombo::parse(name);
      if (!combo) throw FormatError("unknown type combination '" + name + "'");
      std::vector<std::pair<Predicate, Predicate>> edges;
      for (const auto& e : entry.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw FormatError("edge must list two predicates in " + name);
        auto a = parse_predicate(e[0].get<std::string>());
        auto b = parse_predicate(e[1].get<std::string>());
        if (!a || !b) throw FormatError("unknown predicate in " + name);
        edges.emplace_back(*a, *b);
      }
      NeighborhoodGraph graph(*combo, std::move(edges));
      if (entry.contains("nodes")) {
        std::set<Predicate> listed;
        for (const auto& n : entry.at("nodes")) {
          auto p = parse_predicate(n.get<std::string>());
          if (!p) throw FormatError("unknown predicate in " + name);
          listed.insert(*p);
        }
        if (listed != std::set<Predicate>(graph.nodes().begin(), graph.nodes().end())) {
          throw FormatError("nodes of " + name + " differ from its applicable predicates");
        }
      }
      if (!graph.connected()) throw FormatError("graph " + name + " is not connected");
      if (!table.graphs_.emplace(*combo, std::move(graph)).second) {
        throw FormatError("duplicate graph for " + name);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("neighborhood graph file: ") + e.what());
  }
  for (GeometryType a : kSimpleTypes) {
    for (GeometryType b : kSimpleTypes) {
      if (!table.graphs_.count({a, b})) throw FormatError("missing graph for " + TypeCombo{a, b}.name());
    }
  }
  return table;
}

NeighborhoodTable NeighborhoodTable::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

const NeighborhoodGraph& NeighborhoodTable::graph(TypeCombo combo) const {
  auto it = graphs_.find(combo);
  if (it == graphs_.end()) throw NotApplicable("no neighborhood graph for " + combo.name());
  return it->second;
}

const NeighborhoodTable& default_graphs() {
  static const NeighborhoodTable table =
      NeighborhoodTable::from_json(detail::data_assets().at("neighborhood_graphs.json"));
  return table;
}

int topological_distance(TypeCombo combo, Predicate a, Predicate b) {
  return default_graphs().distance(combo, a, b);
}

MeanDistance mean_incorrect_distance(const std::vector<DistanceRecord>& records, const NeighborhoodTable& table) {
  MeanDistance out;
  double sum = 0.0;
  for (const auto& r : records) {
    if (r.predicted == r.truth) continue;
    sum += table.distance(r.combo, r.predicted, r.truth);
    ++out.incorrect;
  }
  if (out.incorrect > 0) {
    out.value = sum / static_cast<double>(out.incorrect);
    out.empty = false;
  }
  return out;
}

}  // namespace toporel
