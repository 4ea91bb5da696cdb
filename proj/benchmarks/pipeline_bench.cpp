#include "vcap/mock.hpp"
#include "vcap/pipeline.hpp"

#include "test_support.hpp"

#include <benchmark/benchmark.h>

namespace {

// Whole mock run; measures orchestration and checkpoint overhead.
void BM_MockRun(benchmark::State& state) {
  auto items = vcap::test::mixed_items(static_cast<std::size_t>(state.range(0)));
  vcap::test::TempDir root("vcap-bench");
  int n = 0;
  for (auto _ : state) {
    auto cfg = vcap::test::run_config(root.path(), items, "run" + std::to_string(n++),
                                      static_cast<std::size_t>(state.range(1)));
    vcap::Pipeline p(cfg, std::make_shared<vcap::MockTransport>(), vcap::test::no_sleep());
    benchmark::DoNotOptimize(p.run());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MockRun)->Args({50, 1})->Args({50, 8})->Unit(benchmark::kMillisecond);

}  // namespace
