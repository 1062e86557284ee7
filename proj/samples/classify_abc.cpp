// Classifies the three-observable scenario for a few state weights and prints
// the free range of the (A=1, B=1, C=-1) cell of the global table.

#include <cstdio>

#include "qctx/contexts.hpp"
#include "qctx/globalfit.hpp"
#include "qctx/scenario.hpp"

int main() {
  for (double p : {0.0, 0.25, 1.0 / 3.0, 0.5, 1.0}) {
    const qctx::Scenario s = qctx::builtin_abc(p);
    const qctx::EmpiricalModel m = qctx::build_empirical_model(s);
    const qctx::LPSystem lp = qctx::assemble_lp(m);
    const qctx::FeasibilityResult r = qctx::solve_feasibility(lp);
    const auto [lo, hi] = qctx::coordinate_range(lp, {1.0, 1.0, -1.0});
    std::printf("p=%.4f  %s  s in [%.6f, %.6f]\n", p, qctx::to_string(r.verdict).c_str(), lo, hi);
  }
}
