#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "torsion/heat.hpp"
#include "torsion/spectrum.hpp"

namespace torsion {

// Named group of inequality checks with a JSON record.
struct SuiteResult {
    std::string name;
    std::vector<BoundCheck> checks;
    json detail = json::object();
    bool ok = true;  // extra conditions that are not lhs <= rhs
    bool pass() const;
    json to_json() const;
};

// |log phi|/(1+2eps) <= |phi-1| <= |log phi|/(1-2eps) on random samples with sup|phi-1| < eps
SuiteResult lemma_suite(std::uint64_t seed, int trials = 1000, int samples = 64);
// integration-by-parts identity on decaying test fields, |residual| < tol
SuiteResult green_suite(const UGrid& grid = {}, double tol = 1e-6);
// trace/nuclear-norm inequalities: 300 + 200 + 200 random instances
SuiteResult opcalc_suite(std::uint64_t seed);
// lambda_1 >= h^2/4 on the round sphere, scaling transfer of h, pointwise TX-family ratio sandwich
SuiteResult cheeger_suite(const Discretization& d, int p_max = 12);
// refinement growth of ||Delta zbar||^2 for the kink profile against the round profile
SuiteResult divergence_suite(double min_growth = 10.0, double max_drift = 1.05);

// 2^{-2 pi^2/3}, the stated lower constant of the TX-family ratio; the proof gives 2^{-pi^2/6}
double tx_ratio_stated_constant();
double tx_ratio_proof_constant();

}  // namespace torsion
