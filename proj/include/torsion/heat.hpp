#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "torsion/spectrum.hpp"

namespace torsion {

// theta(t) = sum over positive eigenvalues of e^{-lambda t}.
struct ThetaSeries {
    std::vector<double> lambdas;  // ascending, kernel removed
    double weyl = 1.0;            // counting function ~ weyl * lambda
    // every eigenvalue below cut is present; inf: the list is the whole spectrum
    double cut = std::numeric_limits<double>::infinity();

    static ThetaSeries from(const Spectrum& s);
    double eval(double t) const;
    double operator()(double t) const { return eval(t); }
    // unresolved part, estimated from the counting function
    double tail_bound(double t) const;
};

double theta(const Spectrum& s, double t);
std::string theta_csv(const ThetaSeries& th, const std::vector<double>& ts);

struct FitWindow {
    double t_lo = 0, t_hi = 0;
};
// t_lo: smallest t whose tail bound is below tail_tol; t_hi = 10 t_lo
FitWindow auto_window(const ThetaSeries& th, double tail_tol = 1e-10);

// t theta(t) ~ a_{-1} + a_0 t + a_1 t^2 + ...
struct HeatFit {
    FitWindow window;
    std::vector<double> coeffs;  // a_{-1}, a_0, a_1, ...
    double b_minus1 = 0, b0 = 0;
    double residual = 0;  // max |model - theta| / theta on the window
    // same fit on the lower half window; the difference is the reported error
    double b_minus1_err = 0, b0_err = 0;

    double model(double t) const;
    // (theta - a_{-1}/t - a_0)/t from the fitted polynomial
    double rho_over_t(double t) const;
    // int_0^T rho_over_t
    double rho_over_t_integral(double T) const;
};
HeatFit fit_expansion(const ThetaSeries& th, const FitWindow& w, int degree = 3, int samples = 96);

// sum e^{-lambda t} <x, v>_M v over the resolved eigenpairs of one mode
std::vector<double> heat_apply(const ModeOperator& op, const ModeSpectrum& ms, double t,
                               const std::vector<double>& x);

// ---- dense pencils on a coarse window (matrix-level variation checks)

struct DenseSetup {
    Discretization disc{-8.0, 8.0, 161, -1};
    std::vector<int> modes{-2, -1, 0, 1, 2};
};

struct DensePencil {
    int k = 0;
    ModeOperator shape;
    Eigen::MatrixXd Q, M;
};
std::vector<DensePencil> dense_pencils(const MetricProfile& psi, const BaseProfile& base, const DenseSetup& s);

// Generalized eigendecomposition with V^T M V = I.
struct PencilEigen {
    Eigen::VectorXd lambda;
    Eigen::MatrixXd V, M;
    explicit PencilEigen(const DensePencil& p);
    Eigen::MatrixXd semigroup(double t) const;                    // nodal e^{-tA}
    Eigen::MatrixXd to_basis(const Eigen::MatrixXd& X) const;     // V^{-1} X V
    int kernel_size(double rel = 1e-8) const;
};

// Gauss-Legendre nodes and weights on [a, b]
void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w);

// int_0^t e^{-(t-s) li} e^{-s lj} ds
double duhamel_kernel(double li, double lj, double t);

struct DuhamelRow {
    double eps = 0;
    double lhs_norm = 0, residual = 0, rel_residual = 0;
};
struct DuhamelReport {
    double u = 0, t = 0;
    std::vector<DuhamelRow> rows;
    double rhs_norm = 0;
    double quadrature_vs_closed = 0;  // relative, 32-point graded Gauss vs divided differences
    double observed_order = 0;        // log2 of successive residual ratios (mean)
    bool pass = false;
    json to_json() const;
};
DuhamelReport duhamel_check(const ContinuousFamily& fam, const BaseProfile& base, double u, double t,
                            const DenseSetup& setup = {}, std::vector<double> eps = {1e-2, 5e-3, 2.5e-3},
                            double tol = 1e-4);

struct BoundCheck {
    std::string name;
    double t = std::numeric_limits<double>::quiet_NaN();
    double lhs = 0, rhs = 0;
    double slack() const { return rhs - lhs; }
    bool pass() const { return lhs <= rhs * (1 + 1e-9) + 1e-14; }
    json to_json() const;
};
struct VariationReport {
    std::string family;
    double u = 0;
    double pi_E = 0, delta_E = 0, delta_X = 0;
    std::vector<BoundCheck> checks;
    json info = json::object();
    bool pass() const;
    json to_json() const;
};

// constant of the kernel-derivative bound: 2^{-1/4} B(1/2, 3/4) + 4
double derivenoyau_constant();
// TX variation: ||d/du e^{-tA}|| <= (2 + 2 log 2 / e) delta_X
double tx_semigroup_constant();

VariationReport variation_bounds(const ContinuousFamily& fam, const BaseProfile& base, double u,
                                 const std::vector<double>& ts, const DenseSetup& setup = {},
                                 std::uint64_t seed = 1, int random_vectors = 200);
VariationReport tx_variation_bounds(const BaseFamily& fam, const MetricProfile& psi, double u,
                                    const std::vector<double>& ts, const DenseSetup& setup = {},
                                    std::uint64_t seed = 1, int random_vectors = 200);

// sup_x |(h_n - h_{n+1}) / h_{n+1}| and c1 = max rho' sup h_{n+1} / min(h_n, h_{n+1}) for the TX family
struct DeltaXBound {
    double delta_X = 0, c1 = 0, ratio_sup = 0;
    bool pass() const { return delta_X <= c1 * ratio_sup * (1 + 1e-12); }
};
DeltaXBound delta_x_bound(const BaseFamily& fam, double u, const UGrid& grid);

// operator distances along a family in the common inner product of the limit metric
struct ConvergenceTable {
    std::vector<int> labels;
    std::vector<double> to_limit;     // ||e^{-tA_p} - e^{-tA_lim}||
    std::vector<double> consecutive;  // ||e^{-tA_p} - e^{-tA_{p+1}}||, size n-1
    std::vector<double> envelope;     // ||h_{p+1}/h_p - 1||_sup^{1/2} per consecutive pair
    double rate_constant = 0;         // max consecutive / envelope
    bool monotone = false;
};
ConvergenceTable semigroup_convergence(const std::vector<MetricProfile>& members, const std::vector<int>& labels,
                                       const MetricProfile& limit, const BaseProfile& base, double t,
                                       const DenseSetup& setup = {});
ConvergenceTable resolvent_convergence(const std::vector<MetricProfile>& members, const std::vector<int>& labels,
                                       const MetricProfile& limit, const BaseProfile& base,
                                       const DenseSetup& setup = {});

}  // namespace torsion
