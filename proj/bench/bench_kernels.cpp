// Timing comparison between the OpenMP kernels and the serial reference:
// quantile process fitting, the bootstrap replicate loop, and the
// specification-test statistic.  Run manually; prints one line per kernel
// and configuration.

#include <chrono>
#include <cstdio>

#include "rankdte/counterfactual.hpp"
#include "rankdte/dataio.hpp"
#include "rankdte/inference.hpp"
#include "rankdte/parallel.hpp"
#include "rankdte/robustness.hpp"

using namespace rankdte;

namespace {

double time_ms(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* kernel, double serial_ms, double parallel_ms) {
  std::printf("%-24s serial %9.1f ms   openmp %9.1f ms   speedup %.2fx\n",
              kernel, serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", (par::set_enabled(true), par::max_threads()));

  const auto sim = io::simulate_dgp(io::DgpConfig::basic(800, 1600, 7));
  const Panel& panel = sim.panel;

  {
    const auto untreated = panel.subset(panel.untreated_indices());
    const auto design = DesignMatrix::with_intercept(untreated.covariates,
                                                     untreated.covariate_names);
    const auto grid = qr::default_tau_grid();
    auto run = [&] { qr::fit_process(design, untreated.y_tm1, grid); };
    par::set_enabled(false);
    const double serial = time_ms(run);
    par::set_enabled(true);
    const double parallel = time_ms(run);
    report("fit_process (99 taus)", serial, parallel);
  }

  {
    boot::BootstrapOptions opts;
    opts.B = 60;
    opts.seed = 11;
    auto estimator = [](const Panel& p) {
      cf::Algorithm1Options a1;
      a1.tau_grid = qr::default_tau_grid();
      Vec out(1);
      out[0] = cf::att(cf::algorithm1(p, a1).pairs);
      return out;
    };
    auto run = [&] { boot::bootstrap(estimator, panel, opts); };
    par::set_enabled(false);
    const double serial = time_ms(run);
    par::set_enabled(true);
    const double parallel = time_ms(run);
    report("bootstrap (B=60)", serial, parallel);
  }

  {
    const auto untreated = panel.subset(panel.untreated_indices());
    const auto design = DesignMatrix::with_intercept(untreated.covariates,
                                                     untreated.covariate_names);
    robust::RotheWiedOptions opts;
    opts.B = 20;
    opts.seed = 5;
    auto run = [&] { robust::rothe_wied_test(design, untreated.y_tm1, opts); };
    par::set_enabled(false);
    const double serial = time_ms(run);
    par::set_enabled(true);
    const double parallel = time_ms(run);
    report("spec test (B=20)", serial, parallel);
  }
  return 0;
}
