// Critical configurations of the reduced energy for a growing number of bubbles, next to the
// limiting scalings h ~ h0 k^{-(N-3)/(N-1)} and mu ~ mu0 k^{(N-2)/(N-4)}.
#include <cstdio>
#include <cstdlib>

#include "dtower/optimizer.hpp"

int main(int argc, char** argv) {
  using namespace dtower;
  const int N = argc > 1 ? std::atoi(argv[1]) : 5;
  const auto V = unit_max_bump();
  const ReductionConstants& c = eval_constants(N);
  std::printf("N = %d   h0 = %.6f   mu0 = %.6e\n", N, c.h0, c.mu0(1.0, V->value(1.0)));
  std::printf("%6s %12s %14s %12s %12s %10s\n", "k", "h*", "mu*", "h* scaled", "mu* scaled", "|grad|");
  for (int k = 32; k <= 4096; k *= 2) {
    try {
      const ParameterBox box = make_boxes(N, k, 1.0, *V, WidthMode::fixed);
      const CriticalPoint cp = solve_critical(N, k, *V, 1.0, box, SolveMode::max);
      std::printf("%6d %12.6e %14.6e %12.6f %12.6e %10.2e\n", k, cp.h_star, cp.mu_star, cp.scaled[1], cp.scaled[2],
                  cp.grad_norm);
    } catch (const std::exception& e) {
      std::printf("%6d  %s\n", k, e.what());
    }
  }
}
