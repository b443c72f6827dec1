#include "torsion/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>

namespace torsion {

namespace {

double central_diff(const std::function<double(double)>& f, double u)
{
    const double h = 1e-5 * std::max(1.0, std::abs(u));
    return (f(u + h) - f(u - h)) / (2 * h);
}

}  // namespace

double MetricProfile::slope(double u) const
{
    if (dpsi) return dpsi(u);
    return central_diff(psi, u);
}

double BaseProfile::dlog(double u) const
{
    if (dlogw) return dlogw(u);
    return central_diff([this](double x) { return std::log(w(x)); }, u);
}

double Chi::operator()(int p) const
{
    if (name == "pow2") return std::ldexp(1.0, p);
    if (name == "linear") return double(p);
    int i = p - table_offset;
    if (i < 0 || i >= int(table.size()))
        throw ValidationError("family.chi", "p = " + std::to_string(p) + " outside the chi table");
    return table[i];
}

Chi Chi::from_table(std::vector<double> values, int first_p)
{
    Chi c{"table", std::move(values), first_p};
    c.check_increasing(first_p, first_p + int(c.table.size()) - 1);
    return c;
}

void Chi::check_increasing(int p_lo, int p_hi) const
{
    for (int p = p_lo; p <= p_hi; ++p) {
        double c = (*this)(p);
        if (!(c >= 1.0)) throw ValidationError("family.chi", "chi(p) must be >= 1");
        if (p > p_lo && !(c > (*this)(p - 1)))
            throw ValidationError("family.chi", "chi must be increasing");
    }
}

MetricProfile make_fubini_study(int m)
{
    if (m < 0) throw ValidationError("metric.degree", "degree must be >= 0");
    MetricProfile p;
    p.degree = m;
    p.kind = "fubini_study";
    const double md = m;
    p.psi = [md](double u) { return -md * log1pexp(-2 * u); };
    p.dpsi = [md](double u) { return 2 * md * sigmoid(-2 * u); };
    return p;
}

MetricProfile make_pnorm_exponent(int m, double chi)
{
    if (m < 0) throw ValidationError("metric.degree", "degree must be >= 0");
    if (!(chi >= 1.0)) throw ValidationError("family.chi", "chi(p) must be >= 1");
    MetricProfile p;
    p.degree = m;
    p.kind = "pnorm";
    p.params = {{"chi", chi}};
    const double md = m;
    p.psi = [md, chi](double u) { return -(2 * md / chi) * log1pexp(-chi * u); };
    p.dpsi = [md, chi](double u) { return 2 * md * sigmoid(-chi * u); };
    return p;
}

MetricProfile make_pnorm(int m, const Chi& chi, int p)
{
    const double c = chi(p);
    const bool has_prev = chi.name == "table" ? p - 1 >= chi.table_offset : p - 1 >= 1;
    if (has_prev && !(c > chi(p - 1))) throw ValidationError("family.chi", "chi must be increasing");
    MetricProfile prof = make_pnorm_exponent(m, c);
    prof.params["p"] = p;
    prof.params["chi_map"] = chi.name;
    return prof;
}

MetricProfile make_canonical(int m)
{
    if (m < 0) throw ValidationError("metric.degree", "degree must be >= 0");
    MetricProfile p;
    p.degree = m;
    p.kind = "canonical";
    const double md = m;
    p.psi = [md](double u) { return 2 * md * std::min(u, 0.0); };
    p.dpsi = [md](double u) { return u < 0 ? 2 * md : (u > 0 ? 0.0 : md); };
    return p;
}

MetricProfile make_sqrt_kink(double radius, double width)
{
    if (!(radius > 0 && width > 0)) throw ValidationError("metric", "cutoff radius and width must be positive");
    MetricProfile p;
    p.degree = 0;
    p.kind = "sqrt_kink";
    p.params = {{"radius", radius}, {"width", width}};
    p.psi = [radius, width](double u) {
        const double rho = 1 - smoothstep((std::abs(u) - radius) / width);
        return rho * std::sqrt(std::abs(std::expm1(-u)));
    };
    return p;
}

MetricProfile make_sampled(int m, const UGrid& grid, std::vector<double> psi, std::string kind)
{
    if (int(psi.size()) != grid.n || grid.n < 4)
        throw ValidationError("psi", "sample count must match grid.n (>= 4)");
    for (double v : psi)
        if (!std::isfinite(v)) throw ValidationError("psi", "non-finite sample");
    auto spline = std::make_shared<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
        psi.begin(), psi.end(), grid.u_min, grid.h());
    const double a = grid.u_min, b = grid.u_max;
    const double va = psi.front(), vb = psi.back();
    const double sa = spline->prime(a), sb = spline->prime(b);
    MetricProfile p;
    p.degree = m;
    p.kind = std::move(kind);
    p.params = {{"grid", {{"u_min", grid.u_min}, {"u_max", grid.u_max}, {"n", grid.n}}}};
    auto samples = std::make_shared<std::vector<double>>(std::move(psi));
    const double h = grid.h();
    p.psi = [spline, samples, a, b, va, vb, sa, sb, h](double u) {
        if (u <= a) return va + sa * (u - a);
        if (u >= b) return vb + sb * (u - b);
        // exact at nodes
        double t = (u - a) / h;
        double r = std::round(t);
        if (std::abs(t - r) < 1e-12) return (*samples)[std::size_t(r)];
        return (*spline)(u);
    };
    p.dpsi = [spline, a, b, sa, sb](double u) {
        if (u <= a) return sa;
        if (u >= b) return sb;
        return spline->prime(u);
    };
    return p;
}

MetricProfile profile_difference(const MetricProfile& a, const MetricProfile& b)
{
    MetricProfile p;
    p.degree = a.degree - b.degree;
    p.kind = "difference";
    auto fa = a, fb = b;
    p.psi = [fa, fb](double u) { return fa.psi(u) - fb.psi(u); };
    p.dpsi = [fa, fb](double u) { return fa.slope(u) - fb.slope(u); };
    return p;
}

std::vector<double> sample(const MetricProfile& p, const UGrid& grid)
{
    std::vector<double> v(grid.n);
    for (int i = 0; i < grid.n; ++i) v[i] = p.psi(grid.at(i));
    return v;
}

BaseProfile fs_base()
{
    BaseProfile b;
    b.kind = "fubini_study";
    b.w = [](double u) {
        double c = std::cosh(u);
        return 1.0 / (4 * c * c);
    };
    b.dlogw = [](double u) { return -2 * std::tanh(u); };
    return b;
}

BaseProfile tx_base(double p)
{
    if (!(p > 0)) throw ValidationError("base.p", "p must be positive");
    BaseProfile b;
    b.kind = "tx";
    b.params = {{"p", p}};
    b.w = [p](double u) { return std::exp(-2 * u - (4 / p) * log1pexp(-p * u)); };
    b.dlogw = [p](double u) { return -2 + 4 * sigmoid(-p * u); };
    return b;
}

BaseProfile scaled_base(const BaseProfile& b, double c)
{
    if (!(c > 0)) throw ValidationError("base.scale", "scale must be positive");
    BaseProfile s = b;
    s.params["scale"] = c;
    auto w = b.w;
    s.w = [w, c](double u) { return c * w(u); };
    return s;
}

BaseProfile canonical_tx_base()
{
    BaseProfile b;
    b.kind = "canonical_tx";
    b.w = [](double u) { return std::exp(-2 * std::abs(u)); };
    b.dlogw = [](double u) { return u > 0 ? -2.0 : (u < 0 ? 2.0 : 0.0); };
    return b;
}

namespace {

std::complex<double> horner(const std::vector<std::complex<double>>& c, std::complex<double> z)
{
    std::complex<double> r = 0;
    for (const auto& a : c) r = r * z + a;
    return r;
}

std::complex<double> horner_d(const std::vector<std::complex<double>>& c, std::complex<double> z)
{
    std::complex<double> r = 0;
    const int d = int(c.size()) - 1;
    for (int i = 0; i < d; ++i) r = r * z + c[i] * double(d - i);
    return r;
}

void check_poly(const std::vector<std::complex<double>>& coeffs)
{
    if (coeffs.size() < 3) throw ValidationError("metric.coeffs", "polynomial degree must be >= 2");
    if (std::abs(coeffs[0] - 1.0) > 1e-14) throw ValidationError("metric.coeffs", "polynomial must be monic");
}

}  // namespace

DynamicalResult make_dynamical(const std::vector<std::complex<double>>& coeffs, int n,
                               const MetricProfile& base, const UGrid& grid, int n_theta)
{
    check_poly(coeffs);
    if (n < 0) throw ValidationError("metric.iterations", "must be >= 0");
    DynamicalResult res;
    double cmax = 0;
    for (const auto& c : coeffs) cmax = std::max(cmax, std::abs(c));
    res.escape_radius = 10 * (1 + cmax);
    if (n == 0) {
        res.profile = make_sampled(base.degree, grid, sample(base, grid), "dynamical");
        res.profile.params["iterations"] = 0;
        return res;
    }
    const double d = double(coeffs.size() - 1);
    const double m2 = 2.0 * base.degree;
    const double dn = std::pow(d, -n);
    // psi_0(w) + 2m log|w| -> c0 as |w| -> inf
    const double c0 = base.psi(-60.0) + m2 * 60.0;
    const double R = res.escape_radius;
    std::vector<double> psi(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        const double u = grid.at(i);
        double acc = 0;
        for (int l = 0; l < n_theta; ++l) {
            const double th = 2 * std::numbers::pi * l / n_theta;
            std::complex<double> w = std::polar(std::exp(-u), th);
            double val;
            int j = 0;
            double scale = 1.0;
            while (j < n && std::abs(w) <= R) {
                w = horner(coeffs, w);
                ++j;
                scale /= d;
            }
            if (j == n && std::abs(w) <= R) {
                double aw = std::abs(w);
                double uw = aw > 1e-300 ? -std::log(aw) : 690.0;
                val = dn * base.psi(uw);
            } else {
                val = -m2 * scale * std::log(std::abs(w)) + dn * c0;
                ++res.escaped_points;
            }
            acc += val;
        }
        psi[i] = acc / n_theta;
    }
    res.profile = make_sampled(base.degree, grid, std::move(psi), "dynamical");
    res.profile.params["iterations"] = n;
    res.profile.params["escape_radius"] = R;
    return res;
}

std::complex<double> dynamical_dlog(const std::vector<std::complex<double>>& coeffs, int n,
                                    const MetricProfile& base, std::complex<double> z)
{
    check_poly(coeffs);
    const double d = double(coeffs.size() - 1);
    std::complex<double> w = z, deriv = 1.0;
    for (int j = 0; j < n; ++j) {
        deriv *= horner_d(coeffs, w);
        w = horner(coeffs, w);
    }
    // d/dw psi0(-log|w|) = -psi0'(u) / (2 w)
    const double u = -std::log(std::abs(w));
    std::complex<double> dpsi0 = -base.slope(u) / (2.0 * w);
    return std::pow(d, -n) * deriv * dpsi0;
}

double Cutoff::operator()(double u) const
{
    if (constant) return *constant;
    if (custom) return custom(u);
    const double lo = -std::log(R), hi = -std::log(r);
    double dist = std::max({lo - u, u - hi, 0.0});
    return smoothstep(dist / width);
}

Cutoff Cutoff::constant_value(double c)
{
    Cutoff k;
    k.constant = c;
    return k;
}

std::vector<MetricProfile> blend_metrics(const MetricProfile& singular,
                                         const std::vector<MetricProfile>& smooth_seq,
                                         const Cutoff& cutoff, const UGrid& check_grid)
{
    if (!cutoff.constant) {
        if (!(cutoff.r > 0 && cutoff.r <= cutoff.R)) throw ValidationError("cutoff", "need 0 < r <= R");
        const double lo = -std::log(cutoff.R), hi = -std::log(cutoff.r);
        for (int i = 0; i < check_grid.n; ++i) {
            double u = check_grid.at(i);
            if (u >= lo && u <= hi && std::abs(cutoff(u)) > 0)
                throw ValidationError("cutoff", "cutoff does not vanish on the annulus");
        }
    }
    std::vector<MetricProfile> out;
    out.reserve(smooth_seq.size());
    for (const auto& s : smooth_seq) {
        if (cutoff.constant && *cutoff.constant == 0.0) {
            out.push_back(s);
            continue;
        }
        if (cutoff.constant && *cutoff.constant == 1.0) {
            out.push_back(singular);
            continue;
        }
        MetricProfile b;
        b.degree = s.degree;
        b.kind = "blended";
        auto sg = singular, sm = s;
        auto rho = cutoff;
        b.psi = [sg, sm, rho](double u) {
            double r = rho(u);
            return r * sg.psi(u) + (1 - r) * sm.psi(u);
        };
        out.push_back(std::move(b));
    }
    return out;
}

ContinuousFamily::ContinuousFamily(std::vector<MetricProfile> members, int first_index)
    : members_(std::move(members)), first_(first_index)
{
    if (members_.size() < 2) throw ValidationError("family", "need at least 2 members");
}

ContinuousFamily::Local ContinuousFamily::locate(double u) const
{
    if (u < first_ || u > last()) throw ValidationError("family.u", "parameter outside family range");
    int n = std::min(int(std::floor(u)), last() - 1);
    double x = u - n;
    return {n, smoothstep(x), smoothstep_d(x)};
}

double ContinuousFamily::log_h(double u, double x) const
{
    auto L = locate(u);
    const auto& A = member(L.n);
    const auto& B = member(L.n + 1);
    if (L.rho == 0.0) return A.psi(x);
    if (L.rho == 1.0) return B.psi(x);
    double a = A.psi(x), b = B.psi(x);
    double mx = std::max(a, b);
    return mx + std::log((1 - L.rho) * std::exp(a - mx) + L.rho * std::exp(b - mx));
}

double ContinuousFamily::d_du_log(double u, double x) const
{
    auto L = locate(u);
    if (L.drho == 0.0) return 0.0;
    double l = log_h(u, x);
    double a = member(L.n).psi(x), b = member(L.n + 1).psi(x);
    return L.drho * (std::exp(b - l) - std::exp(a - l));
}

double ContinuousFamily::mixed(double u, double x) const
{
    auto L = locate(u);
    if (L.drho == 0.0) return 0.0;
    const auto& P = member(L.n);
    const auto& Q = member(L.n + 1);
    double l = log_h(u, x);
    double A = std::exp(P.psi(x) - l), B = std::exp(Q.psi(x) - l);
    double pa = P.slope(x), pb = Q.slope(x);
    double lx = (1 - L.rho) * A * pa + L.rho * B * pb;
    return L.drho * ((B * pb - A * pa) - (B - A) * lx);
}

MetricProfile ContinuousFamily::eval(double u) const
{
    auto L = locate(u);
    if (L.rho == 0.0) return member(L.n);
    if (L.rho == 1.0) return member(L.n + 1);
    MetricProfile p;
    p.degree = member(L.n).degree;
    p.kind = "interpolated";
    p.params = {{"u", u}};
    auto self = *this;
    p.psi = [self, u](double x) { return self.log_h(u, x); };
    const auto P = member(L.n), Q = member(L.n + 1);
    const double rho = L.rho;
    p.dpsi = [P, Q, rho](double x) {
        double a = P.psi(x), b = Q.psi(x);
        double mx = std::max(a, b);
        double A = (1 - rho) * std::exp(a - mx), B = rho * std::exp(b - mx);
        return (A * P.slope(x) + B * Q.slope(x)) / (A + B);
    };
    return p;
}

BaseFamily::BaseFamily(std::vector<BaseProfile> members, int first_index)
    : members_(std::move(members)), first_(first_index)
{
    if (members_.size() < 2) throw ValidationError("family", "need at least 2 members");
}

double BaseFamily::w(double u, double x) const
{
    if (u < first_ || u > last()) throw ValidationError("family.u", "parameter outside family range");
    int n = std::min(int(std::floor(u)), last() - 1);
    double r = smoothstep(u - n);
    return (1 - r) * member(n).w(x) + r * member(n + 1).w(x);
}

double BaseFamily::d_du_log(double u, double x) const
{
    if (u < first_ || u > last()) throw ValidationError("family.u", "parameter outside family range");
    int n = std::min(int(std::floor(u)), last() - 1);
    double dr = smoothstep_d(u - n);
    if (dr == 0.0) return 0.0;
    return dr * (member(n + 1).w(x) - member(n).w(x)) / w(u, x);
}

BaseProfile BaseFamily::eval(double u) const
{
    BaseProfile b;
    b.kind = "interpolated_tx";
    b.params = {{"u", u}};
    auto self = *this;
    b.w = [self, u](double x) { return self.w(u, x); };
    return b;
}

double delta_E(const ContinuousFamily& fam, double u, const UGrid& grid)
{
    double s = 0;
    for (int i = 0; i < grid.n; ++i) s = std::max(s, std::abs(fam.d_du_log(u, grid.at(i))));
    return s;
}

double pi_E(const ContinuousFamily& fam, const BaseProfile& base, double u, const UGrid& grid)
{
    double s = 0;
    for (int i = 0; i < grid.n; ++i) {
        double x = grid.at(i);
        s = std::max(s, std::abs(fam.mixed(u, x)) / (2 * std::sqrt(base.w(x))));
    }
    return s;
}

double delta_X(const BaseFamily& fam, double u, const UGrid& grid)
{
    double s = 0;
    for (int i = 0; i < grid.n; ++i) s = std::max(s, std::abs(fam.d_du_log(u, grid.at(i))));
    return s;
}

FamilyDiagnostics diagnostics(const std::vector<MetricProfile>& family, int first_index,
                              const BaseProfile& base, const UGrid& grid,
                              const std::vector<double>& u_samples)
{
    FamilyDiagnostics D;
    D.grid = grid;
    double acc = 0;
    for (std::size_t j = 1; j < family.size(); ++j) {
        const auto& a = family[j - 1];
        const auto& b = family[j];
        double rn = 0, gn = 0;
        bool bad = false;
        for (int i = 0; i < grid.n; ++i) {
            double u = grid.at(i);
            double g = b.psi(u) - a.psi(u);
            double dg = b.slope(u) - a.slope(u);
            if (!std::isfinite(g) || !std::isfinite(dg)) bad = true;
            rn = std::max(rn, std::abs(std::expm1(g)));
            gn = std::max(gn, std::abs(dg) / (2 * std::sqrt(base.w(u))));
        }
        if (bad) rn = gn = std::numeric_limits<double>::quiet_NaN();
        acc += std::sqrt(rn);
        D.index.push_back(first_index + int(j));
        D.ratio_norms.push_back(rn);
        D.grad_norms.push_back(gn);
        D.sum_sqrt_ratio.push_back(acc);
    }
    if (!u_samples.empty()) {
        ContinuousFamily fam(family, first_index);
        for (double u : u_samples) {
            D.u_samples.push_back(u);
            D.delta_E.push_back(delta_E(fam, u, grid));
            D.pi_E.push_back(pi_E(fam, base, u, grid));
        }
    }
    return D;
}

double pnorm_ratio_bound(int m, double chi_prev, double chi_cur)
{
    const double c0 = std::pow(2.0, m) * std::pow(2.0, 1.0 / chi_prev) * (2 * std::log(2.0) + std::exp(-1.0));
    return c0 * (1.0 / chi_prev - 1.0 / chi_cur);
}

double pnorm_grad_lower_bound(int m, double chi_prev, double chi_cur)
{
    return std::exp(-1.0) * m * std::abs(1.0 - chi_prev / chi_cur);
}

LogBoundReport log_bound_check(const std::vector<double>& phi, double eps)
{
    if (!(eps > 0 && eps < 0.5)) throw ValidationError("eps", "need 0 < eps < 1/2");
    LogBoundReport r;
    r.min_slack = std::numeric_limits<double>::infinity();
    for (double f : phi) {
        if (!(f > 0)) throw ValidationError("phi", "phi must be positive");
        if (std::abs(f - 1) >= eps) throw ValidationError("phi", "sup|phi - 1| must be < eps");
        const double lg = std::abs(std::log(f));
        const double mid = std::abs(f - 1);
        const double lo = lg / (1 + 2 * eps), hi = lg / (1 - 2 * eps);
        const double tol = 1e-15 * (1 + lg);
        const double v = std::max(lo - mid, mid - hi);
        r.max_violation = std::max(r.max_violation, v);
        r.min_slack = std::min(r.min_slack, std::min(mid - lo, hi - mid));
        if (v > tol) r.pass = false;
    }
    if (phi.empty()) r.min_slack = 0;
    return r;
}

ConcavityReport concavity_report(const MetricProfile& p, const UGrid& grid)
{
    ConcavityReport r;
    auto v = sample(p, grid);
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 1; i + 1 < grid.n; ++i) mx = std::max(mx, v[i + 1] - 2 * v[i] + v[i - 1]);
    r.max_second_difference = mx;
    r.is_concave_on_grid = mx <= 1e-10;
    const double U = grid.u_max;
    const double end = std::exp(U) * p.slope(U);
    const double before = std::exp(U - 2) * p.slope(U - 2);
    r.pole_derivative = end;
    r.zero_derivative_at_pole = std::abs(end) < 1e-3 && std::abs(end) <= std::abs(before);
    r.difference_of_concave = p.kind == "difference";
    return r;
}

json profile_to_json(const MetricProfile& p, const UGrid& grid)
{
    json j;
    j["kind"] = p.kind;
    j["degree"] = p.degree;
    j["grid"] = {{"u_min", grid.u_min}, {"u_max", grid.u_max}, {"n", grid.n}};
    j["psi"] = sample(p, grid);
    if (!p.params.empty()) j["params"] = p.params;
    return j;
}

MetricProfile profile_from_json(const json& j)
{
    for (const char* key : {"kind", "degree", "grid", "psi"})
        if (!j.contains(key)) throw ValidationError(key, "missing field");
    UGrid g;
    g.u_min = j["grid"].at("u_min").get<double>();
    g.u_max = j["grid"].at("u_max").get<double>();
    g.n = j["grid"].at("n").get<int>();
    if (!(g.u_min < g.u_max)) throw ValidationError("grid", "u_min must be < u_max");
    auto psi = j["psi"].get<std::vector<double>>();
    auto p = make_sampled(j["degree"].get<int>(), g, std::move(psi), j["kind"].get<std::string>());
    if (j.contains("params")) p.params.update(j["params"]);
    return p;
}

}  // namespace torsion
