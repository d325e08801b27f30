// Serial reference vs OpenMP kernels: pair scoring and commutativity checks.

#include <benchmark/benchmark.h>

#include <random>

#include "../tests/running.hpp"
#include "../tests/support.hpp"
#include "tgm/matcher.hpp"

using namespace tgm;
using namespace tgm::testing;

namespace {

// A schema of `n` nodes with four properties each, named from a small
// vocabulary so that names collide the way real schemata do.
TypedGraphSchema synthetic_schema(const std::string& name, int n, unsigned seed) {
  static const char* words[] = {"patient", "region", "code",  "date",     "count", "name",    "hospital",
                                "ward",    "admit",  "total", "country", "id",    "diagnose", "treatment"};
  std::mt19937 rng(seed);
  auto word = [&] { return std::string(words[rng() % std::size(words)]); };
  const DataType types[] = {DataType::string(), DataType::integer(), DataType::decimal(10, 2), DataType::date()};
  TypedGraphSchema s;
  s.name = name;
  for (int i = 0; i < n; ++i) {
    std::vector<Property> props;
    for (int k = 0; k < 4; ++k) props.push_back({word() + "_" + std::to_string(k), types[rng() % 4]});
    s.nodes.push_back(node(word() + std::to_string(i), props));
  }
  for (int i = 1; i < n; ++i) {
    auto from = s.nodes[rng() % i].label;
    s.edges.push_back(edge("e" + std::to_string(i), EdgeKind::Function, s.nodes[i].label, Multiplicity::any(), from,
                           Multiplicity::exactly_one()));
  }
  return s;
}

void score_pairs(benchmark::State& state, bool parallel) {
  auto n = static_cast<int>(state.range(0));
  auto a = synthetic_schema("a", n, 1);
  auto b = synthetic_schema("b", n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(score_all_pairs(a, b, MatchConfig{}, {}, parallel));
  state.SetComplexityN(n);
}

void BM_ScoreAllPairs_Serial(benchmark::State& s) { score_pairs(s, false); }
void BM_ScoreAllPairs_OpenMP(benchmark::State& s) { score_pairs(s, true); }

// The running example's two region paths over a witness of `n` hospital rows.
void commute(benchmark::State& state, bool parallel) {
  static const RunningExample ex = running_example();
  InstanceGraph witness;
  witness.schema_ref = "hospital";
  const char* regions[] = {"North Region", "South Region"};
  for (int i = 0; i < state.range(0); ++i) {
    witness.nodes.push_back(inode("Record#" + std::to_string(i), "Record", {{"region", std::string(regions[i % 2])}}));
  }
  MappingPath p1{{"iso_h2m", "pi_ps2pop"}, ElementRef::parse("hospital:Record.region"),
                 ElementRef::parse("mediated:Population.regionCode")};
  MappingPath p2{{"pi_h2a", "iso_a2m"}, p1.from, p1.to};
  auto ctx = ex.project.context();
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_commutativity(ex.project.rules, p1, p2, witness, ctx, parallel));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Commutativity_Serial(benchmark::State& s) { commute(s, false); }
void BM_Commutativity_OpenMP(benchmark::State& s) { commute(s, true); }

}  // namespace

BENCHMARK(BM_ScoreAllPairs_Serial)->RangeMultiplier(2)->Range(16, 128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScoreAllPairs_OpenMP)->RangeMultiplier(2)->Range(16, 128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Commutativity_Serial)->RangeMultiplier(10)->Range(1000, 100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Commutativity_OpenMP)->RangeMultiplier(10)->Range(1000, 100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
