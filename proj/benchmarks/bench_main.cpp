#include <benchmark/benchmark.h>

#include <cmath>
#include <string>

#include "toporel/classifier.hpp"
#include "toporel/topology.hpp"
#include "toporel/wkt.hpp"

namespace {

using namespace toporel;

// Regular n-gon of radius r around (cx, cy); vertices are rounded so the WKT is exact.
std::string ngon_wkt(int n, double cx, double cy, double r) {
  std::string s = "POLYGON ((";
  for (int i = 0; i <= n; ++i) {
    const double t = 2 * M_PI * (i % n) / n;
    if (i) s += ", ";
    s += format_number(cx + r * std::cos(t), 3) + " " + format_number(cy + r * std::sin(t), 3);
  }
  return s + "))";
}

void BM_RelateOverlappingPolygons(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Geometry a = parse_wkt(ngon_wkt(n, 0, 0, 10));
  const Geometry b = parse_wkt(ngon_wkt(n, 5, 1, 10));
  for (auto _ : state) benchmark::DoNotOptimize(relate(a, b));
  state.SetComplexityN(n);
}
BENCHMARK(BM_RelateOverlappingPolygons)->RangeMultiplier(4)->Range(4, 256)->Complexity();

void BM_ClassifyPrepared(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const PreparedGeometry a(parse_wkt(ngon_wkt(n, 0, 0, 10)));
  const PreparedGeometry b(parse_wkt("LINESTRING (-20 0.5, 20 0.7)"));
  for (auto _ : state) benchmark::DoNotOptimize(classify(a, b));
  state.SetComplexityN(n);
}
BENCHMARK(BM_ClassifyPrepared)->RangeMultiplier(4)->Range(4, 256)->Complexity();

void BM_ParseWkt(benchmark::State& state) {
  const std::string wkt = ngon_wkt(static_cast<int>(state.range(0)), 1, 2, 30);
  for (auto _ : state) benchmark::DoNotOptimize(parse_wkt(wkt));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * wkt.size()));
}
BENCHMARK(BM_ParseWkt)->Arg(16)->Arg(256);

void BM_ForestTrain(benchmark::State& state) {
  SyntheticBenchmarkOptions data_options;
  data_options.seed = 1;
  const auto data = synthetic_benchmark(data_options);
  ForestOptions options;
  options.estimators = static_cast<std::size_t>(state.range(0));
  options.seed = 42;
  for (auto _ : state) benchmark::DoNotOptimize(RandomForest::train(data, options));
}
BENCHMARK(BM_ForestTrain)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_ForestPredict(benchmark::State& state) {
  SyntheticBenchmarkOptions data_options;
  data_options.seed = 1;
  const auto data = synthetic_benchmark(data_options);
  ForestOptions options;
  options.seed = 42;
  const RandomForest model = RandomForest::train(data, options);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(data[i++ % data.size()].feature));
}
BENCHMARK(BM_ForestPredict);

}  // namespace

BENCHMARK_MAIN();
