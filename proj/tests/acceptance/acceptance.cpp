// Prints one PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "raster_oracle.hpp"
#include "support.hpp"
#include "toporel/classifier.hpp"
#include "toporel/cli.hpp"
#include "toporel/dataset.hpp"
#include "toporel/error.hpp"
#include "toporel/eval.hpp"
#include "toporel/io.hpp"
#include "toporel/llm.hpp"
#include "toporel/neighborhood.hpp"
#include "toporel/wkt.hpp"

using namespace toporel;
using namespace toporel::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << what;
    pass = pass && ok;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome fixture_suite() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto pairs = load_fixture_pairs();
  std::set<RelationTuple> covered;
  std::size_t agree = 0;
  for (const auto& p : pairs) {
    const Geometry a = parse_wkt(p.wkt_a), b = parse_wkt(p.wkt_b);
    const Classification c = classify(a, b);
    const std::string oracle = oracle_matrix(a, b);
    const bool ok = c.matrix.to_string() == p.matrix && c.predicate == p.predicate && oracle == p.matrix;
    agree += ok;
    o.require(ok, "line " + std::to_string(p.line) + ": relate " + c.matrix.to_string() + ", oracle " + oracle +
                      ", expected " + p.matrix + "; ");
    covered.insert({a.type(), p.predicate, b.type()});
  }
  const double secs = seconds_since(t0);
  o.require(pairs.size() >= 50, "fewer than 50 pairs; ");
  o.require(covered.size() == all_relation_tuples().size(), "not all 35 tuples covered; ");
  o.require(secs < 10, "too slow; ");
  o.detail << agree << "/" << pairs.size() << " pairs agree with hand matrices and oracle, " << covered.size()
           << "/35 tuples, " << secs << " s";
  return o;
}

Outcome transpose_inverse_laws() {
  Outcome o;
  Rng rng(derive_seed(2024, "acceptance-laws"));
  std::size_t violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const Geometry a = random_small_geometry(rng), b = random_small_geometry(rng);
    const Classification ab = classify(a, b), ba = classify(b, a);
    const bool transposed = ab.matrix == ba.matrix.transposed();
    const bool inv = ab.predicate.has_value() == ba.predicate.has_value() &&
                     (!ab.predicate || *ab.predicate == inverse(*ba.predicate));
    if (!transposed || !inv) {
      if (violations == 0) o.detail << "first violation " << to_wkt(a) << " / " << to_wkt(b) << "; ";
      ++violations;
    }
  }
  o.require(violations == 0, "");
  o.detail << violations << " violations on 1000 pairs";
  return o;
}

Outcome equals_synthesis() {
  Outcome o;
  Rng rng(derive_seed(2024, "acceptance-equals"));
  auto coord = [&] {
    return Coordinate{static_cast<double>(rng.uniform_range(-500, 500)), static_cast<double>(rng.uniform_range(-500, 500))};
  };
  std::size_t ok = 0, lines = 0;
  for (int i = 0; i < 100; ++i) {
    Geometry g;
    if (i % 2 == 0) {
      const std::size_t n = 2 + rng.uniform_int(19);
      CoordinateSeq cs;
      while (cs.size() < n) {
        const Coordinate c = coord();
        if (cs.empty() || !(c == cs.back())) cs.push_back(c);
      }
      g = LineString{cs};
      ++lines;
    } else if (i % 4 == 1) {
      const Coordinate a = coord();
      const double w = 1 + static_cast<double>(rng.uniform_int(200)), h = 1 + static_cast<double>(rng.uniform_int(200));
      g = Polygon{{a, {a.x + w, a.y}, {a.x + w, a.y + h}, {a.x, a.y + h}, a}, {}};
    } else {
      for (;;) {
        const Coordinate a = coord(), b = coord(), c = coord();
        if ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x) == 0) continue;
        g = Polygon{{a, b, c, a}, {}};
        break;
      }
    }
    const Geometry s = synthesize_equal(g, derive_seed(7, static_cast<std::uint64_t>(i)));
    bool good = classify(g, s).predicate == Predicate::Equals && to_wkt(g) != to_wkt(s) &&
                classify(g, parse_wkt(to_wkt(s))).predicate == Predicate::Equals;
    if (const auto* l = g.get_if<LineString>()) {
      const std::size_t n = l->coords.size();
      good = good && s.get_if<LineString>()->coords.size() == n + (n + 9) / 10;
    }
    if (!good && ok == static_cast<std::size_t>(i)) o.detail << "first failure " << to_wkt(g) << "; ";
    ok += good;
  }
  o.require(ok == 100, "");
  o.detail << ok << "/100 synthesized geometries (" << lines
           << " lines) equal after 6-decimal serialization, distinct WKT, vertex growth ceil(10%)";
  return o;
}

Outcome neighborhood_distance() {
  Outcome o;
  const TypeCombo pp{GeometryType::Polygon, GeometryType::Polygon};
  o.require(topological_distance(pp, Predicate::Disjoint, Predicate::Touches) == 1, "D(disjoint,touches) != 1; ");
  o.require(topological_distance(pp, Predicate::Disjoint, Predicate::Overlaps) == 2, "D(disjoint,overlaps) != 2; ");
  std::size_t checks = 0;
  for (const auto& [combo, g] : default_graphs().graphs()) {
    o.require(g.connected(), combo.name() + " disconnected; ");
    for (Predicate a : g.nodes()) {
      for (Predicate b : g.nodes()) {
        const int d = g.distance(a, b);
        o.require(d == g.distance(b, a), combo.name() + " asymmetric; ");
        o.require((d == 0) == (a == b), combo.name() + " identity; ");
        o.require(d == default_graphs().distance(combo.swapped(), inverse(a), inverse(b)), combo.name() + " inverse; ");
        for (Predicate c : g.nodes()) o.require(d <= g.distance(a, c) + g.distance(c, b), combo.name() + " triangle; ");
        ++checks;
      }
    }
  }
  o.detail << "D(P/P,disjoint,touches)=1, D(P/P,disjoint,overlaps)=2; " << default_graphs().graphs().size()
           << " graphs, " << checks << " node pairs checked";
  return o;
}

Outcome dataset_builder() {
  Outcome o;
  auto build = [] {
    const TaskData d = synthetic_task_data(225, 11, 225);
    std::vector<SpatialEntity> entities = d.corpus.entities();
    return std::make_pair(d, entities_to_jsonl(entities) + "\n" + triplets_to_jsonl(d.triplets));
  };
  const auto [data, bytes] = build();
  std::map<RelationTuple, std::array<std::size_t, 3>> counts;
  for (const auto& t : data.triplets) ++counts[t.tuple()][static_cast<std::size_t>(*t.split)];
  bool balanced = counts.size() == 35;
  for (const auto& [tuple, c] : counts) balanced = balanced && c[0] == 160 && c[1] == 40 && c[2] == 25;
  o.require(balanced, "split counts differ from 160/40/25 over 35 tuples; ");
  const auto retrieval = retrieval_corpus(data.triplets);
  o.require(retrieval.size() == 1040, "retrieval corpus has " + std::to_string(retrieval.size()) + "; ");
  const auto violations = verify_triplets(data.corpus, data.triplets);
  o.require(violations.empty(), std::to_string(violations.size()) + " triplets fail verification; ");
  const auto again = build().second;
  o.require(again == bytes, "rebuild with the same seed differs; ");
  o.detail << counts.size() << " tuples x 225 = " << data.triplets.size() << " triplets, retrieval "
           << retrieval.size() << ", " << violations.size() << " verification failures, rebuild identical: "
           << (again == bytes ? "yes" : "no");
  return o;
}

Outcome task1_end_to_end() {
  Outcome o;
  const TaskData data = synthetic_task_data(225, 11, 225);
  auto run = [&](const std::string& errors) {
    LlmClient client(std::make_shared<GeometryAwareMock>(MockErrorSpec::parse(errors)), nullptr, "", 0.0);
    Task1Options opt;
    opt.seed = 5;
    return run_task1(data, client, TemplateSet::builtin(), opt);
  };
  const auto clean = task1_metrics(run(""));
  o.require(clean.format_validity == 1.0 && clean.type_validity == 1.0 && clean.combo_validity == 1.0 &&
                clean.accuracy == 1.0,
            "error-free mock is not perfect; ");

  const auto swapped = run("Point/Polygon:within->touches@1");
  const TypeCombo pp{GeometryType::Point, GeometryType::Polygon};
  const std::size_t w = 1, t = 4;
  std::size_t misplaced = 0, moved = 0;
  for (GeometryType a : kSimpleTypes) {
    for (GeometryType b : kSimpleTypes) {
      const ConfusionMatrix m = confusion(swapped, {a, b});
      misplaced += m.invalid;
      for (std::size_t r = 0; r < kPredicateCount; ++r) {
        for (std::size_t c = 0; c < kPredicateCount; ++c) {
          if (r == c || m.counts[r][c] == 0) continue;
          if (TypeCombo{a, b} == pp && r == w && c == t) {
            moved += m.counts[r][c];
          } else {
            misplaced += m.counts[r][c];
          }
        }
      }
    }
  }
  const auto m = task1_metrics(swapped);
  o.require(moved == 40 && misplaced == 0, "misclassified mass outside (within, touches); ");
  o.require(!m.distance.empty && m.distance.value == 1.0, "Dist(Incorrect) is not 1.0; ");
  o.detail << "error 0: validity " << clean.combo_validity << ", accuracy " << clean.accuracy << "; swap: " << moved
           << " records in Point/Polygon (within -> touches), " << misplaced << " elsewhere, Dist(Incorrect) "
           << m.distance.value;
  return o;
}

Outcome retrieval_metrics() {
  Outcome o;
  const Embedding q{1, 0};
  const std::vector<std::pair<std::string, Embedding>> cands{
      {"c1", {1, 0}}, {"c2", {0.8, 0.6}}, {"c3", {0.6, 0.8}}, {"c4", {0, 1}}};
  const auto unfiltered = rank_candidates("q", q, cands, "c3", {});
  o.require(unfiltered.ranked == std::vector<std::string>{"c1", "c2", "c3", "c4"} && unfiltered.rank == 3u,
            "unfiltered order; ");
  const auto filtered = rank_candidates("q", q, cands, "c3", {"c1", "c3"});
  o.require(filtered.ranked == std::vector<std::string>{"c2", "c3", "c4"} && filtered.rank == 2u, "filtered order; ");
  const auto m = mrr_hits({filtered.rank});
  o.require(m.mrr == 0.5 && m.hits.at(5) == 1.0 && m.hits.at(10) == 1.0 && m.hits.at(20) == 1.0, "single rank 2; ");
  const auto three = mrr_hits({1u, 2u, 4u});
  o.require(std::abs(three.mrr - 1.75 / 3.0) < 1e-15 && three.hits.at(5) == 1.0, "ranks 1,2,4; ");
  const auto six = mrr_hits({6u});
  o.require(six.hits.at(5) == 0.0 && six.hits.at(10) == 1.0 && six.mrr == 1.0 / 6.0, "rank 6; ");
  const auto absent = mrr_hits({std::nullopt});
  o.require(absent.mrr == 0.0 && absent.hits.at(20) == 0.0, "absent target; ");
  const auto self = rank_candidates("q", {0.6, 0.8}, cands, "c3", {});
  o.require(self.rank == 1u && mrr_hits({self.rank}).mrr == 1.0, "query equals target; ");
  o.detail << "ranks unfiltered 3, filtered 2, MRR(1,2,4)=" << three.mrr << ", Hits@5(6)=" << six.hits.at(5)
           << ", Hits@10(6)=" << six.hits.at(10) << ", self MRR " << mrr_hits({self.rank}).mrr;
  return o;
}

Outcome entropy() {
  Outcome o;
  auto run = [](std::vector<Predicate> answers, std::size_t reps) {
    GeometryAwareMock::Script script;
    script.vernacular["is bordered by"] = std::move(answers);
    LlmClient client(std::make_shared<GeometryAwareMock>(MockErrorSpec{}, script), nullptr, "", 0.0);
    const std::vector<ConversionPair> pairs{{"is bordered by", Predicate::Touches, ContextKind::None, "", "", 6}};
    Task3Options opt;
    opt.repetitions = reps;
    return task3_results(pairs, run_task3(pairs, client, TemplateSet::builtin(), opt), true).front();
  };
  const auto single = run({Predicate::Touches}, 10);
  o.require(single.entropy == 0.0 && single.frequency == 10 && single.accuracy == 1.0, "single predicate; ");
  const auto two = run({Predicate::Touches, Predicate::Overlaps}, 10);
  o.require(std::abs(two.entropy - std::log(2.0)) < 1e-9, "uniform over 2; ");
  const auto seven = run(std::vector<Predicate>(kAllPredicates.begin(), kAllPredicates.end()), 14);
  o.require(std::abs(seven.entropy - std::log(7.0)) < 1e-9, "uniform over 7; ");
  o.detail.precision(12);
  o.detail << "single " << single.entropy << ", uniform-2 " << two.entropy << " (ln 2 = " << std::log(2.0)
           << "), uniform-7 " << seven.entropy << " (ln 7 = " << std::log(7.0) << ")";
  return o;
}

Outcome random_forest() {
  Outcome o;
  SyntheticBenchmarkOptions train_opt;
  train_opt.seed = 1;
  SyntheticBenchmarkOptions test_opt;
  test_opt.seed = 2;
  const auto train = synthetic_benchmark(train_opt);
  const auto test = synthetic_benchmark(test_opt);
  ForestOptions fo;
  fo.seed = 42;
  const RandomForest f1 = RandomForest::train(train, fo);
  const RandomForest f2 = RandomForest::train(train, fo);
  o.require(f1.serialize() == f2.serialize(), "models differ across runs; ");
  std::size_t correct = 0, valid = 0;
  for (const auto& x : test) {
    const RelationTuple p = f1.predict(x.feature);
    correct += p == x.label;
    valid += is_valid_combination(p);
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(test.size());
  o.require(acc >= 0.95, "accuracy below 0.95; ");
  o.require(valid == test.size(), "invalid predicted tuple; ");
  o.detail << f1.trees().size() << " trees, held-out accuracy " << acc << " on " << test.size()
           << " samples, valid predictions " << valid << "/" << test.size() << ", serialization identical";
  return o;
}

int cli(const std::vector<std::string>& args, std::ostream& log) {
  std::vector<const char*> argv{"toporel"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) log << "command failed (" << code << "): " << err.str();
  return code;
}

std::map<std::string, std::string> strip_timestamps(std::map<std::string, std::string> files) {
  for (auto& [path, content] : files) {
    if (path.size() < 13 || path.substr(path.size() - 13) != "manifest.json") continue;
    std::istringstream in(content);
    std::string kept;
    for (std::string line; std::getline(in, line);) {
      if (line.find("\"started_at\"") == std::string::npos && line.find("\"finished_at\"") == std::string::npos) {
        kept += line + "\n";
      }
    }
    content = kept;
  }
  return files;
}

Outcome reproducibility() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const std::string root = fresh_dir("acceptance-repro");
  const std::string cache = root + "/cache", runs = root + "/runs";
  const std::string vernacular = source_dir() + "/data/vernacular_demo.jsonl";
  const std::string script = source_dir() + "/data/mock_script_demo.json";
  const std::vector<std::string> common{"--seed", "17", "--cache-dir", cache};
  auto with = [&](std::vector<std::string> args) {
    args.insert(args.end(), common.begin(), common.end());
    return args;
  };
  std::ostringstream log;
  auto full_run = [&] {
    int bad = 0;
    bad += cli(with({"dataset", "synth-corpus", "--scenes", "8", "--out", runs + "/corpus.jsonl"}), log) != 0;
    bad += cli(with({"dataset", "generate", "--input", runs + "/corpus.jsonl", "--per-combo", "5", "--out-dir",
                     runs + "/data"}),
               log) != 0;
    const std::string data = runs + "/data";
    bad += cli(with({"task1", "run", "--data", data, "--style", "few", "--out-dir", runs + "/task1"}), log) != 0;
    bad += cli(with({"task2", "generate", "--data", data, "--samples", "2", "--generation-style", "few_negative",
                     "--out-dir", runs + "/task2-generate"}),
               log) != 0;
    bad += cli(with({"task2", "retrieve", "--data", data, "--mode", "expanded_1", "--out-dir",
                     runs + "/task2-retrieve"}),
               log) != 0;
    bad += cli(with({"task3", "pairs", "--vernacular", vernacular, "--out", runs + "/pairs.jsonl"}), log) != 0;
    bad += cli(with({"task3", "run", "--pairs", runs + "/pairs.jsonl", "--mock-script", script, "--out-dir",
                     runs + "/task3"}),
               log) != 0;
    return bad;
  };
  const int first_failures = full_run();
  const auto first = strip_timestamps(read_tree(runs));
  const int second_failures = full_run();
  const auto second = strip_timestamps(read_tree(runs));
  const double secs = seconds_since(t0);
  o.require(first_failures == 0 && second_failures == 0, log.str());
  std::size_t differing = 0;
  for (const auto& [path, content] : first) {
    auto it = second.find(path);
    if (it == second.end() || it->second != content) {
      if (differing == 0) o.detail << "first difference in " << path << "; ";
      ++differing;
    }
  }
  o.require(differing == 0 && first.size() == second.size(), "");
  o.require(secs < 120, "too slow; ");
  o.detail << first.size() << " files compared (manifest timestamps removed), " << differing << " differ, " << secs
           << " s for both runs";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"DE-9IM fixture suite", fixture_suite},
      {"transpose and inverse laws", transpose_inverse_laws},
      {"equals synthesis", equals_synthesis},
      {"neighborhood distance", neighborhood_distance},
      {"dataset builder", dataset_builder},
      {"Task 1 end to end", task1_end_to_end},
      {"retrieval metrics", retrieval_metrics},
      {"entropy", entropy},
      {"random forest", random_forest},
      {"reproducibility", reproducibility},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail.str()
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
