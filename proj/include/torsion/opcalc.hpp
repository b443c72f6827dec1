#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace torsion::opcalc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Operator on R^n with inner product <x, y> = x^T G y (G SPD).
struct FiniteOperator {
    MatrixXd matrix;
    MatrixXd inner_product;  // empty: Euclidean
};

// L^T T L^{-T} with G = L L^T: the matrix of T in a G-orthonormal frame.
MatrixXd to_orthonormal(const MatrixXd& T, const MatrixXd& G);

VectorXd singular_values(const MatrixXd& T, const MatrixXd& G = {});
VectorXd singular_values_complex(const Eigen::MatrixXcd& T);
double op_norm(const MatrixXd& T, const MatrixXd& G = {});
double nuclear_norm(const MatrixXd& T, const MatrixXd& G = {});
double trace(const MatrixXd& T);
// sum of eigenvalues (finite-dimensional Lidskii)
std::complex<double> eigen_trace(const MatrixXd& T);

// sigma_{n} (0-based) equals the distance to rank-n operators; returns |sigma_n - ||T - T_n|||.
double best_rank_defect(const MatrixXd& T, int n);

struct NormSuiteReport {
    int instances = 0;
    int failures = 0;
    double worst_slack = std::numeric_limits<double>::infinity();  // min of (rhs - lhs) / max(1, rhs)
    bool pass() const { return failures == 0; }
};

// ||A T B||_1 <= ||A|| ||T||_1 ||B||, |Tr T| <= ||T||_1, Tr(AB) = Tr(BA), Tr T = sum eig T
NormSuiteReport norm_inequality(const MatrixXd& A, const MatrixXd& T, const MatrixXd& B,
                                const MatrixXd& G = {});

// Two inner products with ||x||_u / ||x||_v in [1 - eps, 1 + eps]; checks the singular value sandwich.
struct SandwichReport {
    double eps = 0;
    double worst_slack = 0;
    bool pass = true;
};
double equivalence_eps(const MatrixXd& Gu, const MatrixXd& Gv);
SandwichReport sigma_sandwich(const MatrixXd& T, const MatrixXd& Gu, const MatrixXd& Gv);

// Randomized property suites (deterministic in seed).
NormSuiteReport random_trace_suite(std::uint64_t seed, int count, int dim = 12);
NormSuiteReport random_triple_suite(std::uint64_t seed, int count, int dim = 10);
NormSuiteReport random_triangle_suite(std::uint64_t seed, int count, int dim = 10);

}  // namespace torsion::opcalc
