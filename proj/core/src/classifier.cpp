#include "toporel/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <nlohmann/json.hpp>
#include <thread>

#include "toporel/error.hpp"
#include "toporel/io.hpp"
#include "toporel/rng.hpp"

namespace toporel {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kFormatTag = "toporel-forest";

std::optional<RelationTuple> tuple_from_key(std::string_view key) {
  const auto d1 = key.find('-');
  const auto d2 = d1 == std::string_view::npos ? d1 : key.find('-', d1 + 1);
  if (d2 == std::string_view::npos) return std::nullopt;
  auto a = parse_type_name(key.substr(0, d1));
  auto p = parse_predicate(key.substr(d1 + 1, d2 - d1 - 1));
  auto b = parse_type_name(key.substr(d2 + 1));
  if (!a || !p || !b) return std::nullopt;
  RelationTuple t{*a, *p, *b};
  if (t.key() != key) return std::nullopt;
  return t;
}

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
  if (total == 0) return 0;
  double s = 0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    s += p * p;
  }
  return 1.0 - s;
}

int majority(const std::vector<std::size_t>& counts) {
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

struct Split {
  int feature = -1;
  double threshold = 0;
  double impurity = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<int>& y, std::size_t classes,
              const ForestOptions& options, std::size_t max_features, std::uint64_t seed)
      : x_(x), y_(y), classes_(classes), options_(options), max_features_(max_features), rng_(seed) {}

  DecisionTree build() {
    std::vector<std::size_t> sample(x_.size());
    for (auto& s : sample) s = rng_.uniform_int(x_.size());
    std::sort(sample.begin(), sample.end());
    tree_.nodes.clear();
    grow(sample, 0);
    return std::move(tree_);
  }

 private:
  int grow(const std::vector<std::size_t>& idx, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::vector<std::size_t> counts(classes_, 0);
    for (std::size_t i : idx) ++counts[static_cast<std::size_t>(y_[i])];
    const bool pure = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) <= 1;
    const bool deep = options_.max_depth > 0 && depth >= options_.max_depth;
    std::optional<Split> split;
    if (!pure && !deep && idx.size() >= options_.min_samples_split) split = best_split(idx, counts);
    if (!split) {
      tree_.nodes[static_cast<std::size_t>(id)].label = majority(counts);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (x_[i][static_cast<std::size_t>(split->feature)] <= split->threshold ? left : right).push_back(i);
    }
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  // Best Gini split over a random feature subset; the remaining features are
  // only tried when no sampled feature separates the node.
  std::optional<Split> best_split(const std::vector<std::size_t>& idx, const std::vector<std::size_t>& counts) {
    const std::size_t f = x_.front().size();
    std::vector<std::size_t> order = rng_.sample_indices(f, f);
    std::optional<Split> best;
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k >= max_features_ && best) break;
      consider(order[k], idx, counts, best);
    }
    return best;
  }

  void consider(std::size_t feature, const std::vector<std::size_t>& idx, const std::vector<std::size_t>& counts,
                std::optional<Split>& best) {
    std::vector<std::pair<double, int>> v;
    v.reserve(idx.size());
    for (std::size_t i : idx) v.emplace_back(x_[i][feature], y_[i]);
    std::sort(v.begin(), v.end());
    std::vector<std::size_t> left(classes_, 0), right = counts;
    const std::size_t n = v.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left[static_cast<std::size_t>(v[i].second)];
      --right[static_cast<std::size_t>(v[i].second)];
      if (!(v[i].first < v[i + 1].first)) continue;
      const std::size_t nl = i + 1, nr = n - nl;
      const double imp = (static_cast<double>(nl) * gini(left, nl) + static_cast<double>(nr) * gini(right, nr)) /
                         static_cast<double>(n);
      if (!best || imp < best->impurity) {
        double t = v[i].first + (v[i + 1].first - v[i].first) / 2;
        if (!(t < v[i + 1].first)) t = v[i].first;
        best = Split{static_cast<int>(feature), t, imp};
      }
    }
  }

  const std::vector<std::vector<double>>& x_;
  const std::vector<int>& y_;
  std::size_t classes_;
  const ForestOptions& options_;
  std::size_t max_features_;
  Rng rng_;
  DecisionTree tree_;
};

}  // namespace

int DecisionTree::predict(const std::vector<double>& x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left
                                                                                                      : nodes[i].right);
  }
  return nodes[i].label;
}

RandomForest RandomForest::train(const std::vector<LabeledFeature>& data, const ForestOptions& options) {
  if (data.empty()) throw DataError("training set is empty");
  if (options.estimators == 0) throw DataError("estimator count must be positive");
  const std::size_t len = data.front().feature.size();
  if (len == 0) throw DataError("features must not be empty");
  std::map<std::string, RelationTuple> by_key;
  for (const auto& d : data) {
    if (d.feature.size() != len) {
      throw DataError("feature length mismatch: " + std::to_string(d.feature.size()) + " vs " + std::to_string(len));
    }
    if (!is_valid_combination(d.label)) throw DataError("label " + d.label.to_string() + " is not a valid combination");
    by_key.emplace(d.label.key(), d.label);
  }
  if (by_key.size() < 2) throw DataError("training set needs at least two classes");

  RandomForest forest;
  forest.options_ = options;
  forest.feature_length_ = len;
  std::map<RelationTuple, int> index;
  for (const auto& [key, t] : by_key) {
    index[t] = static_cast<int>(forest.classes_.size());
    forest.classes_.push_back(t);
  }
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& d : data) {
    x.push_back(d.feature);
    y.push_back(index.at(d.label));
  }
  const std::size_t max_features =
      options.max_features ? std::min(options.max_features, len)
                           : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(len))));

  forest.trees_.resize(options.estimators);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), options.estimators));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t t = w; t < options.estimators; t += workers) {
        TreeBuilder b(x, y, forest.classes_.size(), options, max_features, derive_seed(options.seed, t));
        forest.trees_[t] = b.build();
      }
    });
  }
  for (auto& th : pool) th.join();
  return forest;
}

std::vector<std::size_t> RandomForest::votes(const std::vector<double>& feature) const {
  if (feature.size() != feature_length_) {
    throw DimensionMismatch("feature of length " + std::to_string(feature.size()) + ", model expects " +
                            std::to_string(feature_length_));
  }
  std::vector<std::size_t> v(classes_.size(), 0);
  for (const auto& t : trees_) ++v[static_cast<std::size_t>(t.predict(feature))];
  return v;
}

RelationTuple RandomForest::predict(const std::vector<double>& feature) const {
  return classes_[static_cast<std::size_t>(majority(votes(feature)))];
}

std::string RandomForest::serialize() const {
  ordered_json doc;
  doc["format"] = kFormatTag;
  doc["version"] = kFormatVersion;
  doc["estimators"] = options_.estimators;
  doc["max_features"] = options_.max_features;
  doc["min_samples_split"] = options_.min_samples_split;
  doc["max_depth"] = options_.max_depth;
  doc["seed"] = options_.seed;
  doc["feature_length"] = feature_length_;
  doc["classes"] = json::array();
  for (const auto& c : classes_) doc["classes"].push_back(c.key());
  doc["trees"] = json::array();
  for (const auto& t : trees_) {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : t.nodes) {
      if (n.feature < 0) {
        nodes.push_back(ordered_json::array({n.label}));
      } else {
        nodes.push_back(ordered_json::array({n.feature, n.threshold, n.left, n.right}));
      }
    }
    doc["trees"].push_back(nodes);
  }
  return doc.dump() + "\n";
}

RandomForest RandomForest::deserialize(std::string_view text) {
  RandomForest f;
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != kFormatTag) throw FormatError("not a forest model file");
    if (doc.at("version") != kFormatVersion) {
      throw FormatError("model version " + doc.at("version").dump() + " is not supported (expected " +
                        std::to_string(kFormatVersion) + ")");
    }
    f.options_.estimators = doc.at("estimators").get<std::size_t>();
    f.options_.max_features = doc.at("max_features").get<std::size_t>();
    f.options_.min_samples_split = doc.at("min_samples_split").get<std::size_t>();
    f.options_.max_depth = doc.at("max_depth").get<std::size_t>();
    f.options_.seed = doc.at("seed").get<std::uint64_t>();
    f.feature_length_ = doc.at("feature_length").get<std::size_t>();
    for (const auto& k : doc.at("classes")) {
      auto t = tuple_from_key(k.get<std::string>());
      if (!t || !is_valid_combination(*t)) throw FormatError("bad class label " + k.dump());
      f.classes_.push_back(*t);
    }
    for (const auto& jt : doc.at("trees")) {
      DecisionTree t;
      for (const auto& jn : jt) {
        DecisionTree::Node n;
        if (jn.size() == 1) {
          n.label = jn.at(0).get<int>();
        } else if (jn.size() == 4) {
          n.feature = jn.at(0).get<int>();
          n.threshold = jn.at(1).get<double>();
          n.left = jn.at(2).get<int>();
          n.right = jn.at(3).get<int>();
        } else {
          throw FormatError("malformed tree node " + jn.dump());
        }
        t.nodes.push_back(n);
      }
      f.trees_.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
  // Structural checks so predict never walks out of bounds.
  if (f.trees_.size() != f.options_.estimators || f.trees_.empty()) throw FormatError("tree count mismatch");
  for (const auto& t : f.trees_) {
    const int n = static_cast<int>(t.nodes.size());
    if (n == 0) throw FormatError("empty tree");
    for (int i = 0; i < n; ++i) {
      const auto& node = t.nodes[static_cast<std::size_t>(i)];
      if (node.feature < 0) {
        if (node.label < 0 || node.label >= static_cast<int>(f.classes_.size())) throw FormatError("leaf label out of range");
      } else if (node.feature >= static_cast<int>(f.feature_length_) || node.left <= i || node.right <= i ||
                 node.left >= n || node.right >= n) {
        throw FormatError("split node out of range");
      }
    }
  }
  return f;
}

void RandomForest::save(const std::string& path) const { write_file_atomic(path, serialize()); }

RandomForest RandomForest::load(const std::string& path) { return deserialize(read_file(path)); }

std::vector<LabeledFeature> synthetic_benchmark(const SyntheticBenchmarkOptions& options) {
  const auto& tuples = all_relation_tuples();
  if (options.half_dimension < tuples.size()) {
    throw DataError("half dimension must be at least " + std::to_string(tuples.size()));
  }
  Rng rng(options.seed);
  auto gaussian = [&] {
    // Box-Muller on the portable uniform stream.
    const double u1 = 1.0 - rng.uniform01();
    const double u2 = rng.uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  };
  std::vector<LabeledFeature> out;
  for (std::size_t c = 0; c < tuples.size(); ++c) {
    for (std::size_t i = 0; i < options.per_class; ++i) {
      LabeledFeature f;
      f.label = tuples[c];
      f.feature.resize(options.half_dimension * 2);
      for (std::size_t d = 0; d < f.feature.size(); ++d) {
        f.feature[d] = (d == c ? options.signal : 0.0) + options.noise * gaussian();
      }
      out.push_back(std::move(f));
    }
  }
  return out;
}

}  // namespace toporel
