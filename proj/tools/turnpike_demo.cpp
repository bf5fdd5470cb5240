// Solves the optimal rates for a few chain lengths and prints how the rates
// approach 4/sigma^2 away from the ends.

#include <cstdio>

#include "perronopt/optimizer.hpp"
#include "perronopt/verifier.hpp"

int main() {
  for (int n : {3, 20, 100}) {
    const auto sol = perronopt::solve_recursion(n);
    const auto rep = perronopt::verify_solution(sol, {0.05, 0.1});
    std::printf("n=%d sigma=%.6f R=%.6f r=%.6f M=%.4f checks=%zu %s\n", n, sol.sigma, sol.R, sol.profile.r, rep.M,
                rep.checks.size(), rep.all_passed ? "ok" : "FAILED");
    std::printf("  lambda:");
    for (int i = 0; i <= n && i < 6; ++i) std::printf(" %.4f", sol.rates[i]);
    std::printf("%s\n", n >= 6 ? " ..." : "");
    std::printf("  width(0.05)=%d width(0.1)=%d\n", rep.turnpike_width.at(0.05), rep.turnpike_width.at(0.1));
  }
}
