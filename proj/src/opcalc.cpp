#include "torsion/opcalc.hpp"

#include <algorithm>
#include <random>

#include "torsion/common.hpp"

namespace torsion::opcalc {

MatrixXd to_orthonormal(const MatrixXd& T, const MatrixXd& G)
{
    if (G.size() == 0) return T;
    if (G.rows() != T.rows() || G.cols() != T.cols())
        throw ValidationError("inner_product", "dimension mismatch");
    Eigen::LLT<MatrixXd> llt(G);
    if (llt.info() != Eigen::Success) throw ValidationError("inner_product", "not positive definite");
    const MatrixXd L = llt.matrixL();
    // L^T T L^{-T}
    MatrixXd X = L.transpose() * T;
    return L.triangularView<Eigen::Lower>().solve(X.transpose()).transpose();
}

VectorXd singular_values(const MatrixXd& T, const MatrixXd& G)
{
    if (T.rows() != T.cols()) throw ValidationError("matrix", "operator must be square");
    if (T.size() == 0) return VectorXd();
    Eigen::BDCSVD<MatrixXd> svd(to_orthonormal(T, G));
    return svd.singularValues();
}

VectorXd singular_values_complex(const Eigen::MatrixXcd& T)
{
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(T);
    return svd.singularValues();
}

double op_norm(const MatrixXd& T, const MatrixXd& G)
{
    auto s = singular_values(T, G);
    return s.size() ? s(0) : 0.0;
}

double nuclear_norm(const MatrixXd& T, const MatrixXd& G) { return singular_values(T, G).sum(); }

double trace(const MatrixXd& T) { return T.trace(); }

std::complex<double> eigen_trace(const MatrixXd& T)
{
    Eigen::EigenSolver<MatrixXd> es(T, false);
    return es.eigenvalues().sum();
}

double best_rank_defect(const MatrixXd& T, int n)
{
    Eigen::BDCSVD<MatrixXd> svd(T, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (n < 0 || n >= s.size()) throw ValidationError("n", "rank outside [0, dim)");
    VectorXd st = s;
    for (int i = n; i < st.size(); ++i) st(i) = 0;
    MatrixXd Tn = svd.matrixU() * st.asDiagonal() * svd.matrixV().transpose();
    return std::abs(op_norm(T - Tn) - s(n));
}

namespace {

void record(NormSuiteReport& r, double lhs, double rhs, double tol)
{
    const double slack = (rhs - lhs) / std::max(1.0, std::abs(rhs));
    r.worst_slack = std::min(r.worst_slack, slack);
    if (lhs > rhs + tol * std::max(1.0, std::abs(rhs))) ++r.failures;
}

MatrixXd random_matrix(std::mt19937_64& rng, int n)
{
    std::normal_distribution<double> N(0.0, 1.0);
    MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = N(rng);
    return A;
}

MatrixXd random_spd(std::mt19937_64& rng, int n)
{
    MatrixXd A = random_matrix(rng, n);
    return A * A.transpose() / n + MatrixXd::Identity(n, n);
}

}  // namespace

NormSuiteReport norm_inequality(const MatrixXd& A, const MatrixXd& T, const MatrixXd& B, const MatrixXd& G)
{
    NormSuiteReport r;
    const double tol = 1e-12;
    record(r, nuclear_norm(A * T * B, G), op_norm(A, G) * nuclear_norm(T, G) * op_norm(B, G), tol);
    record(r, std::abs(trace(T)), nuclear_norm(T, G), tol);
    // commuting trace and Lidskii as two-sided checks
    const double c = std::abs(trace(A * B) - trace(B * A));
    record(r, c, 1e-12 * std::max(1.0, (A * B).norm()), 0.0);
    const double l = std::abs(eigen_trace(T) - trace(T));
    record(r, l, 1e-10 * std::max(1.0, T.norm()), 0.0);
    r.instances = 1;
    return r;
}

double equivalence_eps(const MatrixXd& Gu, const MatrixXd& Gv)
{
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(Gu, Gv, Eigen::EigenvaluesOnly);
    const auto& mu = es.eigenvalues();
    const double lo = std::sqrt(mu.minCoeff()), hi = std::sqrt(mu.maxCoeff());
    return std::max(1.0 - lo, hi - 1.0);
}

SandwichReport sigma_sandwich(const MatrixXd& T, const MatrixXd& Gu, const MatrixXd& Gv)
{
    SandwichReport r;
    r.eps = equivalence_eps(Gu, Gv);
    if (!(r.eps < 1)) throw ValidationError("inner_product", "inner products not (1 +- eps)-equivalent with eps < 1");
    const VectorXd su = singular_values(T, Gu), sv = singular_values(T, Gv);
    const double lo = (1 - r.eps) / (1 + r.eps), hi = (1 + r.eps) / (1 - r.eps);
    r.worst_slack = std::numeric_limits<double>::infinity();
    for (int n = 0; n < su.size(); ++n) {
        const double scale = std::max(sv(n), 1e-300);
        const double s1 = (su(n) - lo * sv(n)) / scale;
        const double s2 = (hi * sv(n) - su(n)) / scale;
        r.worst_slack = std::min({r.worst_slack, s1, s2});
        const double tol = 1e-12 * std::max(1.0, su(0));
        if (su(n) < lo * sv(n) - tol || su(n) > hi * sv(n) + tol) r.pass = false;
    }
    return r;
}

NormSuiteReport random_trace_suite(std::uint64_t seed, int count, int dim)
{
    std::mt19937_64 rng(seed);
    NormSuiteReport r;
    for (int i = 0; i < count; ++i) {
        MatrixXd A = random_matrix(rng, dim), B = random_matrix(rng, dim);
        NormSuiteReport one;
        record(one, std::abs(trace(A)), nuclear_norm(A), 1e-12);
        record(one, std::abs(trace(A * B) - trace(B * A)), 1e-12 * std::max(1.0, (A * B).norm()), 0.0);
        r.failures += one.failures;
        r.worst_slack = std::min(r.worst_slack, one.worst_slack);
        ++r.instances;
    }
    return r;
}

NormSuiteReport random_triple_suite(std::uint64_t seed, int count, int dim)
{
    std::mt19937_64 rng(seed);
    NormSuiteReport r;
    for (int i = 0; i < count; ++i) {
        MatrixXd A = random_matrix(rng, dim), T = random_matrix(rng, dim), B = random_matrix(rng, dim);
        MatrixXd G = (i % 2) ? random_spd(rng, dim) : MatrixXd();
        auto one = norm_inequality(A, T, B, G);
        r.failures += one.failures;
        r.worst_slack = std::min(r.worst_slack, one.worst_slack);
        ++r.instances;
    }
    return r;
}

NormSuiteReport random_triangle_suite(std::uint64_t seed, int count, int dim)
{
    std::mt19937_64 rng(seed);
    NormSuiteReport r;
    for (int i = 0; i < count; ++i) {
        MatrixXd A = random_matrix(rng, dim), B = random_matrix(rng, dim);
        record(r, nuclear_norm(A + B), nuclear_norm(A) + nuclear_norm(B), 1e-12);
        ++r.instances;
    }
    return r;
}

}  // namespace torsion::opcalc
