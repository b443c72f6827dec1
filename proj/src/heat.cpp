#include "torsion/heat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "torsion/opcalc.hpp"

namespace torsion {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ThetaSeries ThetaSeries::from(const Spectrum& s)
{
    if (!s.complete && !s.modes.empty())
        throw ValidationError("spectrum", "heat trace needs a resolved spectrum (all eigenvalues below a cut)");
    ThetaSeries th;
    th.lambdas = s.positive();
    std::sort(th.lambdas.begin(), th.lambdas.end());
    th.weyl = s.weyl;
    th.cut = s.lambda_cut;
    return th;
}

double ThetaSeries::eval(double t) const
{
    if (!(t > 0)) throw ValidationError("t", "heat trace needs t > 0");
    // ascending order: sum small terms first
    double s = 0;
    for (auto it = lambdas.rbegin(); it != lambdas.rend(); ++it) s += std::exp(-*it * t);
    return s;
}

double ThetaSeries::tail_bound(double t) const
{
    if (!(t > 0)) throw ValidationError("t", "heat trace needs t > 0");
    if (std::isinf(cut)) return 0.0;
    return weyl * std::exp(-cut * t) / t;
}

double theta(const Spectrum& s, double t) { return ThetaSeries::from(s).eval(t); }

std::string theta_csv(const ThetaSeries& th, const std::vector<double>& ts)
{
    std::ostringstream os;
    os << "t,theta,tail_bound\n";
    for (double t : ts) os << fmt17(t) << ',' << fmt17(th.eval(t)) << ',' << fmt17(th.tail_bound(t)) << '\n';
    return os.str();
}

FitWindow auto_window(const ThetaSeries& th, double tail_tol)
{
    if (th.lambdas.empty()) throw ValidationError("spectrum", "no positive eigenvalues");
    if (std::isinf(th.cut)) {
        const double t = 1e-3 / th.lambdas.back();
        return {t, 10 * t};
    }
    double lo = 1e-12, hi = 1.0;
    while (th.tail_bound(hi) > tail_tol) hi *= 2;
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        (th.tail_bound(mid) > tail_tol ? lo : hi) = mid;
        if (hi / lo < 1 + 1e-12) break;
    }
    return {hi, 10 * hi};
}

namespace {

std::vector<double> poly_fit(const ThetaSeries& th, double a, double b, int degree, int samples)
{
    const int ncol = degree + 2;
    MatrixXd X(samples, ncol);
    VectorXd y(samples);
    for (int i = 0; i < samples; ++i) {
        const double t = a * std::pow(b / a, double(i) / (samples - 1));
        const double x = t / b;
        double p = 1;
        for (int j = 0; j < ncol; ++j, p *= x) X(i, j) = p;
        y(i) = t * th.eval(t);
    }
    VectorXd c = X.colPivHouseholderQr().solve(y);
    std::vector<double> out(ncol);
    for (int j = 0; j < ncol; ++j) out[j] = c(j) / std::pow(b, j);
    return out;
}

}  // namespace

double HeatFit::model(double t) const
{
    double s = 0, p = 1.0 / t;
    for (double c : coeffs) {
        s += c * p;
        p *= t;
    }
    return s;
}

double HeatFit::rho_over_t(double t) const
{
    double s = 0, p = 1;
    for (std::size_t j = 2; j < coeffs.size(); ++j, p *= t) s += coeffs[j] * p;
    return s;
}

double HeatFit::rho_over_t_integral(double T) const
{
    double s = 0, p = T;
    for (std::size_t j = 2; j < coeffs.size(); ++j, p *= T) s += coeffs[j] * p / double(j - 1);
    return s;
}

HeatFit fit_expansion(const ThetaSeries& th, const FitWindow& w, int degree, int samples)
{
    if (!(w.t_lo > 0 && w.t_hi > w.t_lo)) throw ValidationError("t_grid", "fit window must satisfy 0 < t_lo < t_hi");
    if (degree < 0 || samples < degree + 4) throw ValidationError("fit", "too few samples for the fit degree");
    HeatFit f;
    f.window = w;
    f.coeffs = poly_fit(th, w.t_lo, w.t_hi, degree, samples);
    f.b_minus1 = f.coeffs[0];
    f.b0 = f.coeffs[1];
    const auto half = poly_fit(th, w.t_lo, std::sqrt(w.t_lo * w.t_hi), degree, samples);
    f.b_minus1_err = std::abs(half[0] - f.b_minus1);
    f.b0_err = std::abs(half[1] - f.b0);
    for (int i = 0; i < samples; ++i) {
        const double t = w.t_lo * std::pow(w.t_hi / w.t_lo, double(i) / (samples - 1));
        const double v = th.eval(t);
        f.residual = std::max(f.residual, std::abs(f.model(t) - v) / std::abs(v));
    }
    if (!std::isfinite(f.b_minus1) || !std::isfinite(f.b0)) throw NumericalError("heat-trace fit is ill-conditioned");
    return f;
}

std::vector<double> heat_apply(const ModeOperator& op, const ModeSpectrum& ms, double t, const std::vector<double>& x)
{
    if (t < 0) throw ValidationError("t", "semigroup needs t >= 0");
    if (int(x.size()) != op.size()) throw ValidationError("x", "vector size does not match the operator");
    if (ms.vectors.size() != ms.lambdas.size()) throw ValidationError("spectrum", "eigenvectors were not computed");
    const auto Mx = op.M.apply(x);
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t j = 0; j < ms.lambdas.size(); ++j) {
        const auto& v = ms.vectors[j];
        double c = 0;
        for (std::size_t i = 0; i < v.size(); ++i) c += v[i] * Mx[i];
        c *= std::exp(-ms.lambdas[j] * t);
        for (std::size_t i = 0; i < v.size(); ++i) y[i] += c * v[i];
    }
    return y;
}

// ---------------------------------------------------------------- dense pencils

namespace {

double norm2(const MatrixXd& X)
{
    if (X.size() == 0) return 0.0;
    return Eigen::BDCSVD<MatrixXd>(X).singularValues()(0);
}

MatrixXd dense(const Tridiag& T)
{
    const int n = T.size();
    MatrixXd A = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = T.d[i];
        if (i + 1 < n) A(i, i + 1) = A(i + 1, i) = T.e[i];
    }
    return A;
}

MatrixXd dense(const std::vector<std::vector<double>>& K)
{
    const int n = int(K.size());
    MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = K[i][j];
    return A;
}

}  // namespace

std::vector<DensePencil> dense_pencils(const MetricProfile& psi, const BaseProfile& base, const DenseSetup& s)
{
    std::vector<DensePencil> out;
    for (int k : s.modes) {
        auto op = reduce_mode(psi, base, k, s.disc);
        out.push_back({k, op, dense(op.Q), dense(op.M)});
    }
    return out;
}

PencilEigen::PencilEigen(const DensePencil& p) : M(p.M)
{
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(p.Q, p.M);
    if (es.info() != Eigen::Success) throw NumericalError("dense generalized eigensolver failed");
    lambda = es.eigenvalues();
    V = es.eigenvectors();
}

MatrixXd PencilEigen::semigroup(double t) const
{
    VectorXd e = (-t * lambda.array()).exp();
    return V * e.asDiagonal() * V.transpose() * M;
}

MatrixXd PencilEigen::to_basis(const MatrixXd& X) const { return V.transpose() * M * X * V; }

int PencilEigen::kernel_size(double rel) const
{
    const double top = lambda.maxCoeff();
    double first = 0;
    for (int i = 0; i < lambda.size(); ++i)
        if (lambda(i) > 1e-6 * top) {
            first = lambda(i);
            break;
        }
    int n = 0;
    for (int i = 0; i < lambda.size(); ++i)
        if (lambda(i) < rel * first) ++n;
    return n;
}

void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w)
{
    // Golub-Welsch
    MatrixXd J = MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) J(k - 1, k) = J(k, k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(J);
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        x[i] = 0.5 * (a + b) + 0.5 * (b - a) * es.eigenvalues()(i);
        w[i] = (b - a) * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    }
}

double duhamel_kernel(double li, double lj, double t)
{
    const double half = 0.5 * t * (li - lj);
    if (std::abs(half) > 1.0) return (std::exp(-t * lj) - std::exp(-t * li)) / (li - lj);
    const double sinhc = std::abs(half) < 1e-4 ? 1 + half * half / 6 : std::sinh(half) / half;
    return t * std::exp(-0.5 * t * (li + lj)) * sinhc;
}

namespace {

MatrixXd kernel_matrix(const VectorXd& l, double t)
{
    const int n = int(l.size());
    MatrixXd K(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) K(i, j) = duhamel_kernel(l(i), l(j), t);
    return K;
}

// Same kernel by 32-point Gauss-Legendre on panels graded geometrically toward both ends of [0, t].
MatrixXd kernel_matrix_quadrature(const VectorXd& l, double t)
{
    const int n = int(l.size());
    const double lmax = std::max(1.0, l.maxCoeff());
    const int J = std::clamp(int(std::ceil(std::log2(t * lmax))) + 4, 1, 60);
    std::vector<double> cuts{0.0};
    for (int j = J; j >= 1; --j) cuts.push_back(t * std::ldexp(1.0, -j - 1) * 2);
    // cuts now 0, t 2^-J, ..., t/2; mirror
    std::vector<double> all = cuts;
    for (int i = int(cuts.size()) - 2; i >= 0; --i) all.push_back(t - cuts[i]);
    MatrixXd K = MatrixXd::Zero(n, n);
    std::vector<double> gx, gw;
    VectorXd a(n), b(n);
    for (std::size_t p = 0; p + 1 < all.size(); ++p) {
        gauss_legendre(32, all[p], all[p + 1], gx, gw);
        for (int q = 0; q < 32; ++q) {
            const double s = gx[q];
            for (int i = 0; i < n; ++i) {
                a(i) = std::exp(-(t - s) * l(i));
                b(i) = std::exp(-s * l(i));
            }
            K.noalias() += gw[q] * a * b.transpose();
        }
    }
    return K;
}

// d/du of a dense pencil family by the 4-point central difference
struct PencilDerivative {
    MatrixXd dQ, dM;
};
template <class Make>
std::vector<PencilDerivative> pencil_derivative(const Make& make, double u, double eta, std::size_t nmodes)
{
    auto p2 = make(u + 2 * eta), p1 = make(u + eta), m1 = make(u - eta), m2 = make(u - 2 * eta);
    std::vector<PencilDerivative> d(nmodes);
    for (std::size_t i = 0; i < nmodes; ++i) {
        d[i].dQ = (-p2[i].Q + 8 * p1[i].Q - 8 * m1[i].Q + m2[i].Q) / (12 * eta);
        d[i].dM = (-p2[i].M + 8 * p1[i].M - 8 * m1[i].M + m2[i].M) / (12 * eta);
    }
    return d;
}

void check_same_shapes(const std::vector<DensePencil>& a, const std::vector<DensePencil>& b)
{
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].Q.rows() != b[i].Q.rows())
            throw NumericalError("pencils along the family have different boundary constraints");
}

double derivative_step(double u, int first, int last)
{
    // stay inside one interpolation cell
    const double cell = std::floor(u);
    double room = std::min(u - cell, cell + 1 - u);
    if (u <= first || u >= last) room = 0;
    return std::min(1e-3, 0.2 * room);
}

// sup over the assembly quadrature points and a fine grid
template <class F>
double sup_points(const F& f, const Discretization& d)
{
    double s = 0;
    const UGrid g = d.grid();
    for (int i = 0; i + 1 < g.n; ++i)
        for (int j = 0; j < Gauss3::n; ++j) s = std::max(s, std::abs(f(g.at(i) + Gauss3::s[j] * g.h())));
    const UGrid fine{d.u_min, d.u_max, 20001};
    for (int i = 0; i < fine.n; ++i) s = std::max(s, std::abs(f(fine.at(i))));
    return s;
}

// random eigen-coordinates with spectral decay 1 / (1 + lambda / lambda_1), so low modes dominate
VectorXd smooth_random(const VectorXd& l, int nk, std::mt19937_64& rng)
{
    std::normal_distribution<double> N(0, 1);
    const double l1 = nk < l.size() ? std::max(l(nk), 1e-12) : 1.0;
    VectorXd y(l.size());
    for (int j = 0; j < y.size(); ++j) y(j) = N(rng) / (1 + std::max(l(j), 0.0) / l1);
    return y;
}

MatrixXd drop_kernel_cols(const MatrixXd& X, const VectorXd& l, int nk, double power)
{
    const int n = int(l.size());
    MatrixXd Y = X.rightCols(n - nk);
    for (int j = 0; j < n - nk; ++j) Y.col(j) *= std::pow(l(nk + j), -power);
    return Y;
}

}  // namespace

json DuhamelReport::to_json() const
{
    json rows_j = json::array();
    for (const auto& r : rows)
        rows_j.push_back({{"eps", r.eps}, {"lhs_norm", r.lhs_norm}, {"residual", r.residual},
                          {"rel_residual", r.rel_residual}});
    return {{"u", u},
            {"t", t},
            {"rhs_norm", rhs_norm},
            {"rows", rows_j},
            {"quadrature_vs_closed", quadrature_vs_closed},
            {"observed_order", observed_order},
            {"pass", pass}};
}

DuhamelReport duhamel_check(const ContinuousFamily& fam, const BaseProfile& base, double u, double t,
                            const DenseSetup& setup, std::vector<double> eps, double tol)
{
    if (!(t > 0)) throw ValidationError("t", "need t > 0");
    if (eps.empty()) throw ValidationError("eps", "need at least one step");
    std::sort(eps.begin(), eps.end(), std::greater<>());
    if (u - eps.front() < fam.first() || u + eps.front() > fam.last())
        throw ValidationError("family.u", "u +- eps must stay inside the family range");
    auto make = [&](double v) { return dense_pencils(fam.eval(v), base, setup); };
    DuhamelReport R;
    R.u = u;
    R.t = t;
    const auto P = make(u);
    const double eta = derivative_step(u, fam.first(), fam.last());
    const auto dP = pencil_derivative(make, u, eta, P.size());
    std::vector<PencilEigen> E;
    std::vector<MatrixXd> rhs;
    for (std::size_t i = 0; i < P.size(); ++i) {
        E.emplace_back(P[i]);
        const auto& e = E.back();
        // V^{-1} A' V = V^T (Q' - M' A) V
        MatrixXd Ap = e.V.transpose() * dP[i].dQ * e.V - (e.V.transpose() * dP[i].dM * e.V) * e.lambda.asDiagonal();
        MatrixXd D = -Ap.cwiseProduct(kernel_matrix(e.lambda, t));
        MatrixXd Dq = -Ap.cwiseProduct(kernel_matrix_quadrature(e.lambda, t));
        R.rhs_norm = std::max(R.rhs_norm, opcalc::op_norm(D));
        R.quadrature_vs_closed = std::max(R.quadrature_vs_closed, opcalc::op_norm(D - Dq));
        rhs.push_back(std::move(D));
    }
    if (R.rhs_norm > 0) R.quadrature_vs_closed /= R.rhs_norm;
    for (double h : eps) {
        const auto Pp = make(u + h), Pm = make(u - h);
        check_same_shapes(P, Pp);
        check_same_shapes(P, Pm);
        DuhamelRow row;
        row.eps = h;
        for (std::size_t i = 0; i < P.size(); ++i) {
            MatrixXd L = (PencilEigen(Pp[i]).semigroup(t) - PencilEigen(Pm[i]).semigroup(t)) / (2 * h);
            L = E[i].to_basis(L);
            row.lhs_norm = std::max(row.lhs_norm, opcalc::op_norm(L));
            row.residual = std::max(row.residual, opcalc::op_norm(L - rhs[i]));
        }
        row.rel_residual = R.rhs_norm > 0 ? row.residual / R.rhs_norm : row.residual;
        R.rows.push_back(row);
    }
    double order_sum = 0;
    int order_n = 0;
    bool order_ok = true;
    for (std::size_t i = 1; i < R.rows.size(); ++i) {
        const auto& a = R.rows[i - 1];
        const auto& b = R.rows[i];
        if (a.residual > 0 && b.residual > 0) {
            const double o = std::log(a.residual / b.residual) / std::log(a.eps / b.eps);
            order_sum += o;
            ++order_n;
            order_ok = order_ok && o > 1.7 && o < 2.3;
        }
    }
    R.observed_order = order_n ? order_sum / order_n : 0;
    if (R.rhs_norm == 0) {
        R.pass = R.rows.back().lhs_norm == 0;
    } else {
        R.pass = R.rows.back().rel_residual < tol && order_ok;
    }
    return R;
}

json BoundCheck::to_json() const
{
    json j = {{"bound_name", name}, {"lhs", lhs}, {"rhs", rhs}, {"slack", slack()}, {"pass", pass()}};
    if (std::isfinite(t)) j["t"] = t;
    return j;
}

bool VariationReport::pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.pass(); });
}

json VariationReport::to_json() const
{
    json c = json::array();
    for (const auto& b : checks) c.push_back(b.to_json());
    return {{"family", family}, {"u", u},         {"pi_E", pi_E},   {"delta_E", delta_E},
            {"delta_X", delta_X}, {"checks", c}, {"info", info}, {"pass", pass()}};
}

double derivenoyau_constant()
{
    const double beta = std::tgamma(0.5) * std::tgamma(0.75) / std::tgamma(1.25);
    return std::pow(2.0, -0.25) * beta + 4.0;
}

double tx_semigroup_constant() { return 2.0 + 2.0 * std::numbers::ln2 / std::numbers::e; }

VariationReport variation_bounds(const ContinuousFamily& fam, const BaseProfile& base, double u,
                                 const std::vector<double>& ts, const DenseSetup& setup, std::uint64_t seed,
                                 int random_vectors)
{
    VariationReport R;
    R.family = "metric_on_E";
    R.u = u;
    const auto psi = fam.eval(u);
    const auto P = dense_pencils(psi, base, setup);
    R.pi_E = sup_points([&](double x) { return fam.mixed(u, x) / (2 * std::sqrt(base(x))); }, setup.disc);
    R.delta_E = sup_points([&](double x) { return fam.d_du_log(u, x); }, setup.disc);
    const double eta = derivative_step(u, fam.first(), fam.last());
    std::vector<PencilDerivative> dP;
    if (eta > 0)
        dP = pencil_derivative([&](double v) { return dense_pencils(fam.eval(v), base, setup); }, u, eta, P.size());
    std::mt19937_64 rng(seed);
    double f99 = 0, f99_random = 0, kernel_leak = 0;
    std::vector<double> enc(ts.size(), 0.0), dn(ts.size(), 0.0), dng(ts.size(), 0.0);
    for (std::size_t i = 0; i < P.size(); ++i) {
        PencilEigen e(P[i]);
        const int nk = e.kernel_size();
        MatrixXd K = dense(assemble_first_order(P[i].shape, [&](double x) {
            return std::exp(psi(x)) * fam.mixed(u, x);
        }));
        MatrixXd B = e.V.transpose() * K * e.V;
        if (nk > 0) kernel_leak = std::max(kernel_leak, norm2(B.leftCols(nk)));
        f99 = std::max(f99, norm2(drop_kernel_cols(B, e.lambda, nk, 0.5)));
        for (int r = 0; r < random_vectors; ++r) {
            const VectorXd y = smooth_random(e.lambda, nk, rng);
            const double q = (e.lambda.array().max(0.0) * y.array().square()).sum();
            if (q > 0) f99_random = std::max(f99_random, (B * y).squaredNorm() / q);
        }
        MatrixXd Ap;
        if (!dP.empty())
            Ap = e.V.transpose() * dP[i].dQ * e.V - (e.V.transpose() * dP[i].dM * e.V) * e.lambda.asDiagonal();
        for (std::size_t j = 0; j < ts.size(); ++j) {
            const double t = ts[j];
            VectorXd ex = (-t * e.lambda.array()).exp();
            enc[j] = std::max(enc[j], opcalc::op_norm(B * ex.asDiagonal()));
            const MatrixXd Km = kernel_matrix(e.lambda, t);
            dn[j] = std::max(dn[j], opcalc::op_norm(B.cwiseProduct(Km)));
            if (!dP.empty()) dng[j] = std::max(dng[j], opcalc::op_norm(Ap.cwiseProduct(Km)));
        }
    }
    R.checks.push_back({"formule99", std::numeric_limits<double>::quiet_NaN(), f99 * f99, R.pi_E * R.pi_E});
    R.checks.push_back({"formule99_random", std::numeric_limits<double>::quiet_NaN(), f99_random, R.pi_E * R.pi_E});
    const double c = derivenoyau_constant();
    for (std::size_t j = 0; j < ts.size(); ++j) {
        const double t = ts[j];
        R.checks.push_back({"encoreestimation11", t, enc[j], std::exp(-0.5) / std::sqrt(t) * R.pi_E});
        R.checks.push_back({"derivenoyau", t, dn[j], c * std::sqrt(R.delta_E * R.pi_E) * std::pow(t, 0.25)});
        if (!dP.empty())
            R.checks.push_back(
                {"derivenoyau_semigroup", t, dng[j], c * std::sqrt(R.delta_E * R.pi_E) * std::pow(t, 0.25)});
    }
    R.info = {{"kernel_column_norm", kernel_leak}, {"constant_c", c}, {"modes", setup.modes},
              {"n_nodes", setup.disc.n_nodes}};
    return R;
}

VariationReport tx_variation_bounds(const BaseFamily& fam, const MetricProfile& psi, double u,
                                    const std::vector<double>& ts, const DenseSetup& setup, std::uint64_t seed,
                                    int random_vectors)
{
    VariationReport R;
    R.family = "metric_on_TX";
    R.u = u;
    const auto P = dense_pencils(psi, fam.eval(u), setup);
    R.delta_X = sup_points([&](double x) { return fam.d_du_log(u, x); }, setup.disc);
    const double eta = derivative_step(u, fam.first(), fam.last());
    std::vector<PencilDerivative> dP;
    if (eta > 0)
        dP = pencil_derivative([&](double v) { return dense_pencils(psi, fam.eval(v), setup); }, u, eta, P.size());
    std::mt19937_64 rng(seed);
    double blb = 0, blb_random = 0, dq = 0;
    std::vector<double> enc(ts.size(), 0.0), dn(ts.size(), 0.0);
    for (std::size_t i = 0; i < P.size(); ++i) {
        PencilEigen e(P[i]);
        const int nk = e.kernel_size();
        if (dP.empty()) continue;
        dq = std::max(dq, dP[i].dQ.cwiseAbs().maxCoeff());
        // A' = -M^{-1} M' A
        MatrixXd Ap = -(e.V.transpose() * dP[i].dM * e.V) * e.lambda.asDiagonal();
        blb = std::max(blb, norm2(drop_kernel_cols(Ap, e.lambda, nk, 1.0)));
        for (int r = 0; r < random_vectors; ++r) {
            const VectorXd y = smooth_random(e.lambda, nk, rng);
            const double a = (e.lambda.array().max(0.0) * y.array()).matrix().norm();
            if (a > 0) blb_random = std::max(blb_random, (Ap * y).norm() / a);
        }
        for (std::size_t j = 0; j < ts.size(); ++j) {
            const double t = ts[j];
            VectorXd ex = (-t * e.lambda.array()).exp();
            enc[j] = std::max(enc[j], opcalc::op_norm(Ap * ex.asDiagonal()));
            dn[j] = std::max(dn[j], opcalc::op_norm(Ap.cwiseProduct(kernel_matrix(e.lambda, t))));
        }
    }
    R.checks.push_back({"bornelapbelt", std::numeric_limits<double>::quiet_NaN(), blb, R.delta_X});
    R.checks.push_back({"bornelapbelt_random", std::numeric_limits<double>::quiet_NaN(), blb_random, R.delta_X});
    for (std::size_t j = 0; j < ts.size(); ++j) {
        const double t = ts[j];
        R.checks.push_back({"encoreestimation11_tx", t, enc[j], R.delta_X / (std::numbers::e * t)});
        R.checks.push_back({"derivenoyau_tx", t, dn[j], tx_semigroup_constant() * R.delta_X});
    }
    R.info = {{"max_abs_dQ", dq}, {"modes", setup.modes}, {"n_nodes", setup.disc.n_nodes}};
    return R;
}

DeltaXBound delta_x_bound(const BaseFamily& fam, double u, const UGrid& grid)
{
    DeltaXBound b;
    const int n = std::min(int(std::floor(u)), fam.last() - 1);
    const auto& A = fam.member(n);
    const auto& B = fam.member(n + 1);
    double hmax = 0;
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.at(i);
        const double a = A.w(x), c = B.w(x);
        b.delta_X = std::max(b.delta_X, std::abs(fam.d_du_log(u, x)));
        b.ratio_sup = std::max(b.ratio_sup, std::abs((a - c) / c));
        hmax = std::max(hmax, c / std::min(a, c));
    }
    b.c1 = smoothstep_dmax * hmax;
    return b;
}

namespace {

template <class OpOf>
ConvergenceTable convergence(const std::vector<MetricProfile>& members, const std::vector<int>& labels,
                             const MetricProfile& limit, const BaseProfile& base, const DenseSetup& setup,
                             const OpOf& op_of)
{
    if (members.size() != labels.size() || members.size() < 2)
        throw ValidationError("family", "need >= 2 members with matching labels");
    ConvergenceTable T;
    T.labels = labels;
    const auto L = dense_pencils(limit, base, setup);
    std::vector<MatrixXd> lim;
    for (const auto& p : L) lim.push_back(op_of(p));
    std::vector<std::vector<MatrixXd>> ops;
    for (const auto& m : members) {
        auto P = dense_pencils(m, base, setup);
        check_same_shapes(L, P);
        std::vector<MatrixXd> o;
        for (const auto& p : P) o.push_back(op_of(p));
        ops.push_back(std::move(o));
    }
    auto dist = [&](const std::vector<MatrixXd>& a, const std::vector<MatrixXd>& b) {
        double d = 0;
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, opcalc::op_norm(a[i] - b[i], L[i].M));
        return d;
    };
    for (std::size_t i = 0; i < ops.size(); ++i) T.to_limit.push_back(dist(ops[i], lim));
    const UGrid fine{setup.disc.u_min, setup.disc.u_max, 20001};
    for (std::size_t i = 0; i + 1 < ops.size(); ++i) {
        T.consecutive.push_back(dist(ops[i], ops[i + 1]));
        double r = 0;
        for (int j = 0; j < fine.n; ++j) {
            const double x = fine.at(j);
            r = std::max(r, std::abs(std::expm1(members[i + 1].psi(x) - members[i].psi(x))));
        }
        T.envelope.push_back(std::sqrt(r));
        if (T.envelope.back() > 0) T.rate_constant = std::max(T.rate_constant, T.consecutive.back() / T.envelope.back());
    }
    T.monotone = true;
    for (std::size_t i = 1; i < T.to_limit.size(); ++i) T.monotone = T.monotone && T.to_limit[i] < T.to_limit[i - 1];
    return T;
}

}  // namespace

ConvergenceTable semigroup_convergence(const std::vector<MetricProfile>& members, const std::vector<int>& labels,
                                       const MetricProfile& limit, const BaseProfile& base, double t,
                                       const DenseSetup& setup)
{
    return convergence(members, labels, limit, base, setup,
                       [t](const DensePencil& p) { return PencilEigen(p).semigroup(t); });
}

ConvergenceTable resolvent_convergence(const std::vector<MetricProfile>& members, const std::vector<int>& labels,
                                       const MetricProfile& limit, const BaseProfile& base, const DenseSetup& setup)
{
    return convergence(members, labels, limit, base, setup, [](const DensePencil& p) {
        return MatrixXd((p.M + p.Q).ldlt().solve(p.M));
    });
}

}  // namespace torsion
