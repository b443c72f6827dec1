#include "torsion/assembly.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace torsion {

void Discretization::validate(int degree) const
{
    if (!(u_min < u_max)) throw ValidationError("grid", "u_min must be < u_max");
    if (!(u_min < 0 && 0 < u_max)) throw ValidationError("grid", "window must contain u = 0");
    if (n_nodes < 16) throw ValidationError("grid.n", "need at least 16 nodes");
    if (k_max >= 0 && k_max < degree) throw ValidationError("kmax", "k_max must be >= degree");
}

std::vector<double> ModeOperator::nodes() const
{
    std::vector<double> u;
    const UGrid g = disc.grid();
    for (int i = first_node(); i < g.n - (fixed_right ? 1 : 0); ++i) u.push_back(g.at(i));
    return u;
}

std::vector<double> ModeOperator::interpolate(const std::function<double(double)>& f) const
{
    auto u = nodes();
    for (auto& x : u) x = f(x);
    return u;
}

namespace {

using Weight = std::function<double(int, int, double)>;  // (element, gauss point, u)

struct LocalBasis {
    double pa, pb, ga, gb;
};

inline LocalBasis local_basis(double a, double k, double s, double h)
{
    const double ea = std::exp(-a * s * h), eb = std::exp(a * (1 - s) * h);
    return {ea * (1 - s), eb * s, ea * (-1.0 / h + (k - a) * (1 - s)), eb * (1.0 / h + (k - a) * s)};
}

void restrict_to_free(const ModeOperator& op, const Tridiag& full, Tridiag& out)
{
    const int N = full.size();
    const int lo = op.fixed_left ? 1 : 0;
    const int hi = N - (op.fixed_right ? 1 : 0);
    out.d.assign(full.d.begin() + lo, full.d.begin() + hi);
    out.e.assign(full.e.begin() + lo, full.e.begin() + hi - 1);
}

void assemble_into(ModeOperator& op, const Weight& qw, const Weight& mw)
{
    const UGrid g = op.disc.grid();
    const int N = g.n;
    const double h = g.h();
    const double a = op.fit, k = op.k;
    Tridiag Q{std::vector<double>(N, 0.0), std::vector<double>(N - 1, 0.0)};
    Tridiag M = Q;
    for (int i = 0; i + 1 < N; ++i) {
        const double u0 = g.at(i);
        double q00 = 0, q01 = 0, q11 = 0, m00 = 0, m01 = 0, m11 = 0;
        for (int j = 0; j < Gauss3::n; ++j) {
            const double s = Gauss3::s[j];
            const double u = u0 + s * h;
            const double E = qw(i, j, u), W = mw(i, j, u);
            if (!std::isfinite(E) || !std::isfinite(W))
                throw ValidationError("metric", "non-finite profile or weight at u = " + std::to_string(u));
            const auto b = local_basis(a, k, s, h);
            const double wq = Gauss3::w[j] * h;
            q00 += 0.5 * E * wq * b.ga * b.ga;
            q01 += 0.5 * E * wq * b.ga * b.gb;
            q11 += 0.5 * E * wq * b.gb * b.gb;
            m00 += 2 * W * wq * b.pa * b.pa;
            m01 += 2 * W * wq * b.pa * b.pb;
            m11 += 2 * W * wq * b.pb * b.pb;
        }
        Q.d[i] += q00;
        Q.d[i + 1] += q11;
        Q.e[i] += q01;
        M.d[i] += m00;
        M.d[i + 1] += m11;
        M.e[i] += m01;
    }
    restrict_to_free(op, Q, op.Q);
    restrict_to_free(op, M, op.M);
}

ModeOperator mode_shape(const MetricProfile& psi, const BaseProfile& base, int k, const Discretization& d,
                        const ModeOptions& opt)
{
    ModeOperator op;
    op.k = k;
    op.disc = d;
    const int m = psi.degree;
    op.fit = opt.force_fit ? opt.fit : ((k >= 0 && k <= m) ? k : 0);
    if (opt.auto_constraints) {
        // log-slope of the mass density of e^{-ku} at each end
        auto f = [&](double u) { return psi(u) + std::log(base(u)); };
        const double sr = f(d.u_max) - f(d.u_max - 1.0) - 2.0 * k;
        const double sl = f(d.u_min + 1.0) - f(d.u_min) - 2.0 * k;
        op.fixed_right = sr >= -0.5;
        op.fixed_left = sl <= 0.5;
    }
    return op;
}

}  // namespace

ModeOperator reduce_mode(const MetricProfile& psi, const BaseProfile& base, int k,
                         const Discretization& d, const ModeOptions& opt)
{
    d.validate(psi.degree);
    ModeOperator op = mode_shape(psi, base, k, d, opt);
    assemble_into(
        op, [&](int, int, double u) { return std::exp(psi(u)); },
        [&](int, int, double u) { return std::exp(psi(u)) * base(u); });
    return op;
}

std::vector<ModeOperator> assemble_operator_family(const MetricProfile& psi, const BaseProfile& base,
                                                   const Discretization& d)
{
    d.validate(psi.degree);
    const UGrid g = d.grid();
    const double h = g.h();
    std::vector<double> E(std::size_t(g.n - 1) * 3), W(E.size());
    for (int i = 0; i + 1 < g.n; ++i)
        for (int j = 0; j < 3; ++j) {
            double u = g.at(i) + Gauss3::s[j] * h;
            E[i * 3 + j] = std::exp(psi(u));
            W[i * 3 + j] = E[i * 3 + j] * base(u);
        }
    const int K = d.kmax_for(psi.degree);
    std::vector<ModeOperator> ops;
    ops.reserve(2 * K + 1);
    for (int k = -K; k <= K; ++k) {
        ModeOperator op = mode_shape(psi, base, k, d, {});
        assemble_into(
            op, [&](int i, int j, double) { return E[i * 3 + j]; }, [&](int i, int j, double) { return W[i * 3 + j]; });
        ops.push_back(std::move(op));
    }
    return ops;
}

ModeOperator assemble_weighted(const ModeOperator& shape, const std::function<double(double)>& qw,
                               const std::function<double(double)>& mw)
{
    ModeOperator op = shape;
    assemble_into(
        op, [&](int, int, double u) { return qw(u); }, [&](int, int, double u) { return mw(u); });
    return op;
}

std::vector<std::vector<double>> assemble_first_order(const ModeOperator& shape,
                                                      const std::function<double(double)>& weight)
{
    const UGrid g = shape.disc.grid();
    const int N = g.n;
    const double h = g.h();
    std::vector<std::vector<double>> K(N, std::vector<double>(N, 0.0));
    for (int i = 0; i + 1 < N; ++i) {
        for (int j = 0; j < Gauss3::n; ++j) {
            const double s = Gauss3::s[j];
            const double u = g.at(i) + s * h;
            const double c = -0.5 * weight(u) * Gauss3::w[j] * h;
            const auto b = local_basis(shape.fit, shape.k, s, h);
            // rows: test function phi_r, columns: g of trial function
            K[i][i] += c * b.pa * b.ga;
            K[i][i + 1] += c * b.pa * b.gb;
            K[i + 1][i] += c * b.pb * b.ga;
            K[i + 1][i + 1] += c * b.pb * b.gb;
        }
    }
    const int lo = shape.fixed_left ? 1 : 0;
    const int hi = N - (shape.fixed_right ? 1 : 0);
    std::vector<std::vector<double>> out(hi - lo, std::vector<double>(hi - lo));
    for (int r = lo; r < hi; ++r)
        for (int c = lo; c < hi; ++c) out[r - lo][c - lo] = K[r][c];
    return out;
}

std::string dump_csv(const ModeOperator& op)
{
    std::ostringstream os;
    os << "matrix,row,col,value\n";
    auto emit = [&](const char* name, const Tridiag& T) {
        for (int i = 0; i < T.size(); ++i) {
            os << name << ',' << i << ',' << i << ',' << fmt17(T.d[i]) << '\n';
            if (i + 1 < T.size()) {
                os << name << ',' << i << ',' << i + 1 << ',' << fmt17(T.e[i]) << '\n';
                os << name << ',' << i + 1 << ',' << i << ',' << fmt17(T.e[i]) << '\n';
            }
        }
    };
    emit("Q", op.Q);
    emit("M", op.M);
    return os.str();
}

json dump_header(const ModeOperator& op)
{
    return {{"k", op.k},
            {"fit", op.fit},
            {"fixed_left", op.fixed_left},
            {"fixed_right", op.fixed_right},
            {"grid", {{"u_min", op.disc.u_min}, {"u_max", op.disc.u_max}, {"n", op.disc.n_nodes}}}};
}

PolarField apply_strong_form(const std::vector<double>& psi_samples, const BaseProfile& base,
                             const PolarField& f)
{
    const int nu = f.ugrid.n, nt = f.n_theta;
    if (nu < 3 || nt < 3) throw ValidationError("grid", "polar grid too coarse for the stencil");
    if (int(psi_samples.size()) != nu || int(f.f.size()) != nu * nt)
        throw ValidationError("grid", "sample sizes do not match the polar grid");
    const double h = f.ugrid.h();
    const double dt = 2 * std::numbers::pi / nt;
    PolarField out{f.ugrid, nt, std::vector<std::complex<double>>(f.f.size(), 0.0)};
    const std::complex<double> I(0, 1);
    for (int i = 1; i + 1 < nu; ++i) {
        const double u = f.ugrid.at(i);
        const double dpsi = (psi_samples[i + 1] - psi_samples[i - 1]) / (2 * h);
        const double c = -1.0 / (4 * base(u));
        for (int l = 0; l < nt; ++l) {
            const int lp = (l + 1) % nt, lm = (l + nt - 1) % nt;
            auto F = [&](int ii, int ll) { return f.f[std::size_t(ii) * nt + ll]; };
            auto fu = (F(i + 1, l) - F(i - 1, l)) / (2 * h);
            auto fuu = (F(i + 1, l) - 2.0 * F(i, l) + F(i - 1, l)) / (h * h);
            auto ft = (F(i, lp) - F(i, lm)) / (2 * dt);
            auto ftt = (F(i, lp) - 2.0 * F(i, l) + F(i, lm)) / (dt * dt);
            out.f[std::size_t(i) * nt + l] = c * (fuu + ftt + dpsi * (fu - I * ft));
        }
    }
    return out;
}

double polar_norm2(const PolarField& f, const std::vector<double>& psi_samples, const BaseProfile& base,
                   double a, double b)
{
    const int nu = f.ugrid.n, nt = f.n_theta;
    const double h = f.ugrid.h();
    double s = 0;
    for (int i = 1; i + 1 < nu; ++i) {
        const double u = f.ugrid.at(i);
        if (u < a || u > b) continue;
        double row = 0;
        for (int l = 0; l < nt; ++l) row += std::norm(f.f[std::size_t(i) * nt + l]);
        s += 2 * std::exp(psi_samples[i]) * base(u) * h * row / nt;
    }
    return s;
}

DivergenceReport strong_form_divergence(const MetricProfile& psi, const BaseProfile& base, double eps,
                                        int levels, int coarse, int factor, int n_theta)
{
    if (!(eps > 0) || levels < 2 || coarse < 1 || factor < 3 || factor % 2 == 0)
        throw ValidationError("grid", "need eps > 0, levels >= 2, coarse >= 1 and an odd factor >= 3");
    DivergenceReport R;
    long cells = coarse;
    for (int lev = 0; lev < levels; ++lev, cells *= factor) {
        const double h = eps / double(cells);
        const long half = 2 * cells;  // strip of width 2 eps plus a margin
        UGrid g{-(half + 0.5) * h, (half + 0.5) * h, int(2 * half + 2)};
        std::vector<double> ps(g.n);
        for (int i = 0; i < g.n; ++i) ps[i] = psi(g.at(i));
        PolarField f{g, n_theta, std::vector<std::complex<double>>(std::size_t(g.n) * n_theta)};
        for (int i = 0; i < g.n; ++i)
            for (int l = 0; l < n_theta; ++l)
                f.f[std::size_t(i) * n_theta + l] =
                    std::polar(std::exp(-g.at(i)), -2 * std::numbers::pi * l / n_theta);
        R.cells.push_back(int(cells));
        R.norm2.push_back(polar_norm2(apply_strong_form(ps, base, f), ps, base, -eps, eps));
    }
    R.growth = R.norm2.back() / R.norm2.front();
    R.monotone = true;
    for (std::size_t i = 1; i < R.norm2.size(); ++i) R.monotone = R.monotone && R.norm2[i] > R.norm2[i - 1];
    return R;
}

SmoothField gaussian_field(double a, double c, double s)
{
    SmoothField F;
    F.f = [=](double u) { return a * std::exp(-(u - c) * (u - c) / (s * s)); };
    F.df = [=](double u) { return a * std::exp(-(u - c) * (u - c) / (s * s)) * (-2 * (u - c) / (s * s)); };
    F.d2f = [=](double u) {
        double x = u - c;
        return a * std::exp(-x * x / (s * s)) * (4 * x * x / (s * s * s * s) - 2 / (s * s));
    };
    return F;
}

SmoothField sum_fields(const std::vector<SmoothField>& parts)
{
    SmoothField F;
    F.f = [parts](double u) {
        double s = 0;
        for (const auto& p : parts) s += p.f(u);
        return s;
    };
    F.df = [parts](double u) {
        double s = 0;
        for (const auto& p : parts) s += p.df(u);
        return s;
    };
    F.d2f = [parts](double u) {
        double s = 0;
        for (const auto& p : parts) s += p.d2f(u);
        return s;
    };
    return F;
}

SmoothField sech2_field()
{
    SmoothField F;
    F.f = [](double u) {
        double c = std::cosh(u);
        return 1 / (4 * c * c);
    };
    F.df = [](double u) {
        double c = std::cosh(u);
        return -2 * std::tanh(u) / (4 * c * c);
    };
    F.d2f = [](double u) {
        double c = std::cosh(u), t = std::tanh(u);
        return (4 * t * t - 2 / (c * c)) / (4 * c * c);
    };
    return F;
}

double green_identity_check(const SmoothField& phi, const SmoothField& psi, const UGrid& grid)
{
    const double h = grid.h();
    double s = 0;
    for (int i = 0; i + 1 < grid.n; ++i)
        for (int j = 0; j < Gauss3::n; ++j) {
            const double u = grid.at(i) + Gauss3::s[j] * h;
            const double f = phi.f(u), df = phi.df(u), d2f = phi.d2f(u);
            const double p = psi.f(u), d2p = psi.d2f(u);
            s += Gauss3::w[j] * h * (df * df * p + f * d2f * p - 0.5 * f * f * d2p);
        }
    return 0.25 * s;
}

}  // namespace torsion
