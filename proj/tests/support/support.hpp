#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "toporel/eval.hpp"
#include "toporel/geometry.hpp"
#include "toporel/rng.hpp"
#include "toporel/topology.hpp"

namespace toporel::testing {

struct FixturePair {
  std::string wkt_a;
  std::string wkt_b;
  std::string matrix;
  Predicate predicate;
  int line = 0;
};

/// Hand-derived DE-9IM pairs shipped in tests/fixtures/de9im_pairs.txt.
std::vector<FixturePair> load_fixture_pairs();

std::string source_dir();

/// Point, 2-4 vertex LineString, axis-aligned rectangle or triangle on a small
/// integer grid; always valid.
Geometry random_small_geometry(Rng& rng, int extent = 8);

/// Synthetic corpus, sampled and split with per_combo triplets per tuple.
TaskData synthetic_task_data(std::size_t per_combo, std::uint64_t seed, std::size_t scenes = 0);

/// Fresh empty directory under the system temp dir.
std::string fresh_dir(const std::string& name);

/// Relative path -> content for every regular file below dir.
std::map<std::string, std::string> read_tree(const std::string& dir);

}  // namespace toporel::testing
