// Serial vs OpenMP timings of the per-state FTRL solves and the per-policy
// EstOM solves. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include "linmdp/env_suite.hpp"
#include "linmdp/estom.hpp"
#include "linmdp/ftrl.hpp"
#include "linmdp/parallel.hpp"
#include "linmdp/policy_set.hpp"

using namespace linmdp;

namespace {

LinearMDP bench_instance(int states) {
  EnvSpec spec = desk_spec(11);
  spec.layer_sizes = {1, states, states};
  Rng rng = Rng::derive(spec.seed, 0);
  return gen_linear_mdp(spec, rng);
}

void BM_FtrlStates(benchmark::State& state) {
  const bool serial = state.range(0) == 0;
  const LinearMDP mdp = bench_instance(16);
  Rng rng(3);
  std::vector<Mat> lifted, L;
  for (int s = 0; s < mdp.num_states(); ++s) {
    lifted.push_back(lifted_vectors(mdp, s));
    Mat m = Mat::Random(mdp.dim() + 1, mdp.dim() + 1);
    L.push_back(m + m.transpose());
  }
  std::vector<FtrlSolution> out(lifted.size());
  for (auto _ : state) {
    parallel_for(static_cast<std::ptrdiff_t>(lifted.size()),
                 [&](std::ptrdiff_t s) { out[s] = ftrl_solve(lifted[s], L[s], 0.5); }, serial);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_FtrlStates)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EstomPolicies(benchmark::State& state) {
  const bool serial = state.range(0) == 0;
  const LinearMDP mdp = bench_instance(5);
  Rng rng(5);
  const PolicySet set = build_policy_set(mdp, 2, rng, 16);
  const RegressionData data = saturated_data(mdp, 50.0);
  const auto solvers = layer_solvers(mdp, data);
  std::vector<SampledFunctions> funcs;
  for (const Policy& p : set.policies) funcs.push_back(sample_functions(mdp, p, 32, 32, rng));
  EstomOptions opts;
  opts.zeta = 1e-3;
  std::vector<EstomSolution> out(set.size());
  for (auto _ : state) {
    parallel_for(static_cast<std::ptrdiff_t>(set.size()),
                 [&](std::ptrdiff_t i) { out[i] = estom(mdp, set.policies[i], solvers, data, funcs[i], opts); }, serial);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_EstomPolicies)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
