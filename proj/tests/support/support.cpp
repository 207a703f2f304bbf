#include "support.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "toporel/dataset.hpp"
#include "toporel/error.hpp"
#include "toporel/io.hpp"

namespace toporel::testing {

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

std::string source_dir() { return TOPOREL_SOURCE_DIR; }

std::vector<FixturePair> load_fixture_pairs() {
  std::vector<FixturePair> out;
  const std::string text = read_file(source_dir() + "/tests/fixtures/de9im_pairs.txt");
  for_each_line(text, [&](std::string_view raw, std::size_t n) {
    const std::string line = trim(std::string(raw));
    if (line.empty() || line[0] == '#') return;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, '|');) fields.push_back(trim(f));
    if (fields.size() != 4) throw FormatError("fixture line " + std::to_string(n) + " needs 4 fields");
    const auto p = parse_predicate(fields[3]);
    if (!p) throw FormatError("fixture line " + std::to_string(n) + " has an unknown predicate");
    out.push_back({fields[0], fields[1], fields[2], *p, static_cast<int>(n)});
  });
  return out;
}

Geometry random_small_geometry(Rng& rng, int extent) {
  auto coord = [&] {
    return Coordinate{static_cast<double>(rng.uniform_range(0, extent)), static_cast<double>(rng.uniform_range(0, extent))};
  };
  switch (rng.uniform_int(4)) {
    case 0: return Geometry::point(coord().x, coord().y);
    case 1: {
      const std::size_t n = 2 + rng.uniform_int(3);
      CoordinateSeq cs{coord()};
      while (cs.size() < n) {
        const Coordinate c = coord();
        if (!(c == cs.back())) cs.push_back(c);
      }
      return LineString{cs};
    }
    case 2: {
      const double x0 = static_cast<double>(rng.uniform_range(0, extent - 1));
      const double y0 = static_cast<double>(rng.uniform_range(0, extent - 1));
      const double x1 = x0 + 1 + static_cast<double>(rng.uniform_int(static_cast<std::uint64_t>(extent - x0)));
      const double y1 = y0 + 1 + static_cast<double>(rng.uniform_int(static_cast<std::uint64_t>(extent - y0)));
      return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}, {}};
    }
    default: {
      for (;;) {
        const Coordinate a = coord(), b = coord(), c = coord();
        const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if (area != 0) return Polygon{{a, b, c, a}, {}};
      }
    }
  }
}

TaskData synthetic_task_data(std::size_t per_combo, std::uint64_t seed, std::size_t scenes) {
  SyntheticCorpusOptions co;
  co.scenes_per_kind = scenes ? scenes : std::max<std::size_t>(per_combo + 3, 8);
  co.seed = seed;
  TaskData data;
  data.corpus = synthesize_corpus(co);
  SampleOptions so;
  so.per_combo = per_combo;
  so.seed = derive_seed(seed, "sample");
  TripletSet set = sample_triplets(data.corpus, so);
  for (auto& e : set.synthesized) data.corpus.add(std::move(e));
  SplitCounts counts{160, 40, 25};
  if (per_combo != 225) {
    const std::size_t eval = std::max<std::size_t>(1, per_combo * 40 / 225);
    const std::size_t fewshot = std::max<std::size_t>(1, per_combo * 25 / 225);
    counts = {per_combo - eval - fewshot, eval, fewshot};
  }
  data.triplets = split(std::move(set.triplets), derive_seed(seed, "split"), counts);
  return data;
}

std::string fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("toporel-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

std::map<std::string, std::string> read_tree(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    out[std::filesystem::relative(e.path(), dir).generic_string()] = read_file(e.path().string());
  }
  return out;
}

}  // namespace toporel::testing
