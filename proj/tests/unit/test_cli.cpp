#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "support.hpp"
#include "toporel/cli.hpp"
#include "toporel/io.hpp"
#include "toporel/prompts.hpp"

using namespace toporel;
using namespace toporel::testing;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::vector<const char*> argv{"toporel"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// Desk-scale dataset shared by the tests below.
const std::string& dataset_dir() {
  static const std::string dir = [] {
    const std::string root = fresh_dir("cli-data");
    REQUIRE(run({"dataset", "synth-corpus", "--scenes", "8", "--seed", "4", "--out", root + "/corpus.jsonl"}).code == 0);
    REQUIRE(run({"dataset", "generate", "--input", root + "/corpus.jsonl", "--per-combo", "5", "--seed", "4",
                 "--out-dir", root + "/data"})
                .code == 0);
    return root + "/data";
  }();
  return dir;
}

}  // namespace

TEST_CASE("relate prints the matrix and predicate") {
  const auto r = run({"relate", "POINT (1 1)", "POLYGON ((0 0, 2 0, 2 2, 0 2, 0 0))"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out == "0FFFFF212 within\n");
  CHECK(run({"relate", "POINT (1", "POINT (1 1)"}).code == cli::kExitInput);
}

TEST_CASE("neighborhood-distance") {
  CHECK(run({"neighborhood-distance", "Polygon/Polygon", "disjoint", "touches"}).out == "1\n");
  CHECK(run({"neighborhood-distance", "Polygon/Polygon", "disjoint", "overlaps"}).out == "2\n");
  CHECK(run({"neighborhood-distance", "Point/Point", "touches", "disjoint"}).code == cli::kExitInput);
  CHECK(run({"neighborhood-distance", "Circle/Point", "equals", "disjoint"}).code == cli::kExitInput);
}

TEST_CASE("argument errors exit with the input code") {
  CHECK(run({}).code == cli::kExitInput);
  CHECK(run({"relate"}).code == cli::kExitInput);
  CHECK(run({"--help"}).code == cli::kExitOk);
}

TEST_CASE("generated datasets verify cleanly") {
  const auto r = run({"dataset", "verify", "--data", dataset_dir()});
  CHECK(r.code == cli::kExitOk);
  for (const char* f : {"entities.jsonl", "triplets.jsonl", "retrieval.jsonl", "manifest.json"}) {
    CHECK(read_tree(dataset_dir()).count(f) == 1);
  }
}

TEST_CASE("verification failures exit with the input code") {
  const std::string dir = fresh_dir("cli-broken");
  const std::string entities = read_file(dataset_dir() + "/entities.jsonl");
  std::string triplets = read_file(dataset_dir() + "/triplets.jsonl");
  const auto pos = triplets.find("\"within\"");
  REQUIRE(pos != std::string::npos);
  triplets.replace(pos, 8, "\"touches\"");
  write_file_atomic(dir + "/entities.jsonl", entities);
  write_file_atomic(dir + "/triplets.jsonl", triplets);
  CHECK(run({"dataset", "verify", "--data", dir}).code == cli::kExitInput);
}

TEST_CASE("configuration and authentication errors exit with code 3") {
  const std::string out = fresh_dir("cli-config");
  CHECK(run({"task1", "run", "--data", dataset_dir(), "--style", "fancy", "--out-dir", out}).code == cli::kExitConfig);
  CHECK(run({"task2", "retrieve", "--data", dataset_dir(), "--mode", "sideways", "--out-dir", out}).code ==
        cli::kExitConfig);
  CHECK(run({"task1", "run", "--data", dataset_dir(), "--backend", "http", "--api-key-env", "TOPOREL_UNSET_KEY",
             "--out-dir", out})
            .code == cli::kExitConfig);
  CHECK(run({"task1", "run", "--data", dataset_dir(), "--mock-errors", "nonsense", "--out-dir", out}).code ==
        cli::kExitConfig);
}

TEST_CASE("item errors exit with code 1 and the run still reports") {
  const std::string dir = fresh_dir("cli-items");
  write_file_atomic(dir + "/empty.jsonl", "");
  const auto r = run({"task1", "run", "--data", dataset_dir(), "--backend", "transcript", "--transcript",
                      dir + "/empty.jsonl", "--out-dir", dir + "/out"});
  CHECK(r.code == cli::kExitItemErrors);
  const auto files = read_tree(dir + "/out");
  REQUIRE(files.count("metrics.json") == 1);
  CHECK(nlohmann::json::parse(files.at("metrics.json")).at("item_errors").get<int>() > 0);
}

TEST_CASE("config files supply defaults and flags win") {
  const std::string dir = fresh_dir("cli-cfg");
  write_file_atomic(dir + "/run.cfg", "# comment\nseed = 9\n");
  REQUIRE(run({"--config", dir + "/run.cfg", "task1", "run", "--data", dataset_dir(), "--out-dir", dir + "/a"}).code ==
          0);
  CHECK(nlohmann::json::parse(read_file(dir + "/a/manifest.json")).at("seed") == 9);
  REQUIRE(run({"--config", dir + "/run.cfg", "task1", "run", "--data", dataset_dir(), "--seed", "5", "--out-dir",
               dir + "/b"})
              .code == 0);
  CHECK(nlohmann::json::parse(read_file(dir + "/b/manifest.json")).at("seed") == 5);
  write_file_atomic(dir + "/bad.cfg", "no_such_option = 1\n");
  CHECK(run({"--config", dir + "/bad.cfg", "relate", "POINT (0 0)", "POINT (0 0)"}).code == cli::kExitConfig);
  CHECK(run({"--config", dir + "/absent.cfg", "relate", "POINT (0 0)", "POINT (0 0)"}).code == cli::kExitConfig);
}

TEST_CASE("manifests pin the run") {
  const std::string dir = fresh_dir("cli-manifest");
  REQUIRE(run({"task1", "run", "--data", dataset_dir(), "--out-dir", dir}).code == 0);
  const auto m = nlohmann::json::parse(read_file(dir + "/manifest.json"));
  for (const char* key : {"command", "config", "datasets", "template_hash", "models", "seed", "started_at",
                          "finished_at"}) {
    CHECK(m.contains(key));
  }
}

TEST_CASE("classifier train and eval through the CLI") {
  const std::string dir = fresh_dir("cli-forest");
  CHECK(run({"classifier", "train", "--data", dataset_dir(), "--model", dir + "/forest.json", "--estimators", "5"})
            .code == cli::kExitOk);
  CHECK(run({"classifier", "eval", "--data", dataset_dir(), "--model", dir + "/forest.json", "--out-dir",
             dir + "/eval"})
            .code == cli::kExitOk);
  // Hash embeddings carry no geometry, so only structural validity is checked here.
  const std::string records = read_file(dir + "/eval/records.jsonl");
  std::size_t n = 0;
  for_each_line(records, [&](std::string_view line, std::size_t) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("format_valid").get<bool>());
    const auto parsed = parse_task1_answer(j.at("parsed").get<std::string>()).tuple;
    REQUIRE(parsed.has_value());
    CHECK(is_valid_combination(*parsed));
    ++n;
  });
  CHECK(n > 0);
}

TEST_CASE("task3 extract applies the direct-relation rule") {
  const std::string dir = fresh_dir("cli-extract");
  write_file_atomic(dir + "/text.txt", "a city Alder in a County Ash County, State Northland");
  write_file_atomic(dir + "/gazetteer.txt", "Alder\nAsh County\nNorthland\n");
  const auto r = run({"task3", "extract", "--text", dir + "/text.txt", "--gazetteer", dir + "/gazetteer.txt"});
  CHECK(r.code == cli::kExitOk);
}
