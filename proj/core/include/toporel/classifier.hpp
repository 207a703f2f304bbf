#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "toporel/topology.hpp"

namespace toporel {

/// Feature vector [Enc(A); Enc(B)] with its relation tuple label.
struct LabeledFeature {
  std::vector<double> feature;
  RelationTuple label;
};

struct ForestOptions {
  std::size_t estimators = 100;
  /// Features tried per node; 0 selects floor(sqrt(feature length)).
  std::size_t max_features = 0;
  std::size_t min_samples_split = 2;
  /// 0 grows until pure.
  std::size_t max_depth = 0;
  std::uint64_t seed = 0;
};

/// CART tree stored as a flat node array; node 0 is the root.
struct DecisionTree {
  struct Node {
    /// -1 marks a leaf.
    int feature = -1;
    double threshold = 0;
    int left = -1;
    int right = -1;
    /// Class index (leaves only).
    int label = -1;
  };
  std::vector<Node> nodes;

  int predict(const std::vector<double>& x) const;
};

/// Bagged CART ensemble over Gini splits. Classes are kept sorted by
/// RelationTuple::key(), so the lowest class index is the lexicographically
/// smallest label.
class RandomForest {
 public:
  static constexpr int kFormatVersion = 1;

  /// Throws DataError for an empty set, unequal feature lengths, fewer than
  /// two classes, or a label that is not a valid combination.
  static RandomForest train(const std::vector<LabeledFeature>& data, const ForestOptions& options);

  /// Majority vote; ties go to the lexicographically smallest label.
  /// Throws DimensionMismatch for a feature of the wrong length.
  RelationTuple predict(const std::vector<double>& feature) const;
  /// Vote count per class, in class order.
  std::vector<std::size_t> votes(const std::vector<double>& feature) const;

  const std::vector<RelationTuple>& classes() const { return classes_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t feature_length() const { return feature_length_; }
  const ForestOptions& options() const { return options_; }

  /// JSON document with format tag and version.
  std::string serialize() const;
  /// Throws FormatError for malformed documents or a version mismatch.
  static RandomForest deserialize(std::string_view text);
  void save(const std::string& path) const;
  static RandomForest load(const std::string& path);

 private:
  ForestOptions options_;
  std::size_t feature_length_ = 0;
  std::vector<RelationTuple> classes_;
  std::vector<DecisionTree> trees_;
};

struct SyntheticBenchmarkOptions {
  std::size_t per_class = 20;
  /// Length of each half of the feature vector.
  std::size_t half_dimension = 35;
  double signal = 1.0;
  /// At 0.1 every off-class coordinate stays below signal / 2 with overwhelming
  /// probability, so a single threshold per coordinate separates the classes.
  double noise = 0.1;
  std::uint64_t seed = 0;
};

/// Separable 35-class set: the first half of the feature is a one-hot of the
/// class index over all valid tuples scaled by `signal`, the second half is
/// noise only; Gaussian noise of deviation `noise` is added everywhere.
std::vector<LabeledFeature> synthetic_benchmark(const SyntheticBenchmarkOptions& options);

}  // namespace toporel
