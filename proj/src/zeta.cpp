#include "torsion/zeta.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>

namespace torsion {

namespace {

constexpr double kGamma = std::numbers::egamma;

void check_s(double s)
{
    if (!(s > 1.05)) throw ValidationError("s", "direct zeta sum needs s > 1.05");
}

}  // namespace

ZetaValue zeta_at(const ThetaSeries& th, double s)
{
    check_s(s);
    ZetaValue z;
    for (auto it = th.lambdas.rbegin(); it != th.lambdas.rend(); ++it) z.value += std::pow(*it, -s);
    if (std::isfinite(th.cut)) {
        z.tail = th.weyl * std::pow(th.cut, 1 - s) / (s - 1);
        z.tail_error = std::sqrt(th.weyl) * std::pow(th.cut, 0.5 - s) * (1 + s / (s - 0.5));
        z.value += z.tail;
    }
    return z;
}

ZetaValue zeta_at(const Spectrum& spec, double s)
{
    check_s(s);
    if (!spec.complete && !spec.modes.empty()) {
        // partial spectrum: plain sum, no tail model
        ZetaValue z;
        for (double l : spec.positive()) z.value += std::pow(l, -s);
        return z;
    }
    return zeta_at(ThetaSeries::from(spec), s);
}

double zeta_continued(const ThetaSeries& th, const HeatFit& fit, double s, double T)
{
    if (!(s > -1) || std::abs(s) < 1e-12 || std::abs(s - 1) < 1e-12)
        throw ValidationError("s", "continuation needs s > -1, s != 0, 1");
    const double t0 = std::min(fit.window.t_lo, T);
    const double a1 = fit.coeffs[0], a0 = fit.coeffs[1];
    // rho(t) t^{s-1} on (0, t0) from the fitted polynomial, term by term
    double below = 0;
    for (std::size_t j = 2; j < fit.coeffs.size(); ++j) below += fit.coeffs[j] * std::pow(t0, s + j - 1) / (s + j - 1);
    auto rho = [&](double t) { return th.eval(t) - a1 / t - a0; };
    boost::math::quadrature::gauss_kronrod<double, 31> gk;
    const double mid = t0 < T ? gk.integrate([&](double t) { return rho(t) * std::pow(t, s - 1); }, t0, T, 8, 1e-10)
                              : 0.0;
    boost::math::quadrature::exp_sinh<double> es;
    const double upper = es.integrate(
        [&](double x) {
            const double v = th.eval(T + x);
            return v == 0 ? 0.0 : v * std::pow(T + x, s - 1);
        },
        1e-13);
    const double F = a1 * std::pow(T, s - 1) / (s - 1) + a0 * std::pow(T, s) / s + below + mid + upper;
    return F / std::tgamma(s);
}

ZetaPrime zeta_prime0(const ThetaSeries& th, const HeatFit& fit, double T)
{
    if (!(T > 0)) throw ValidationError("T", "split point must be positive");
    if (fit.residual > 1e-3) throw NumericalError("heat-trace fit residual too large for the continuation");
    ZetaPrime z;
    const double a1 = fit.coeffs[0], a0 = fit.coeffs[1];
    const double t0 = std::min(fit.window.t_lo, T);
    // resolved part in closed form: int_x^inf e^{-l t}/t dt = E1(l x)
    double upper = 0, mid_theta = 0;
    for (auto it = th.lambdas.rbegin(); it != th.lambdas.rend(); ++it) {
        const double eT = boost::math::expint(1, *it * T);
        upper += eT;
        if (t0 < T) mid_theta += boost::math::expint(1, *it * t0) - eT;
    }
    const double mid = mid_theta - a1 * (1 / t0 - 1 / T) - a0 * std::log(T / t0);
    const double below = fit.rho_over_t_integral(t0);
    const double tail_terms = -a1 / T + a0 * (kGamma + std::log(T));
    z.value = upper + mid + below + tail_terms;

    boost::math::quadrature::gauss_kronrod<double, 31> gk;
    boost::math::quadrature::exp_sinh<double> es;
    const double q_upper = es.integrate([&](double x) { return th.eval(T + x) / (T + x); }, 1e-13);
    const double q_mid =
        t0 < T ? gk.integrate([&](double t) { return (th.eval(t) - a1 / t - a0) / t; }, t0, T, 8, 1e-10) : 0.0;
    z.quadrature_value = q_upper + q_mid + below + tail_terms;

    // unresolved eigenvalues: int_{t0}^inf tail(t)/t dt <= tail(t0) / (cut t0)
    if (std::isfinite(th.cut)) z.tail = th.tail_bound(t0) / (th.cut * t0);
    return z;
}

json ZetaReport::to_json() const
{
    json d = json::array(), m = json::array();
    for (const auto& [s, v] : direct) d.push_back({{"s", s}, {"zeta", v.value}, {"tail", v.tail}, {"tail_error", v.tail_error}});
    for (const auto& [s, v] : mellin) m.push_back({{"s", s}, {"zeta", v}});
    json coeffs = json::array();
    for (double c : fit.coeffs) coeffs.push_back(c);
    return {{"a_minus1", fit.b_minus1},
            {"a_0", fit.b0},
            {"a_minus1_err", fit.b_minus1_err},
            {"a_0_err", fit.b0_err},
            {"fit_window", {fit.window.t_lo, fit.window.t_hi}},
            {"fit_coeffs", coeffs},
            {"fit_residual", fit.residual},
            {"zeta_samples", d},
            {"zeta_mellin", m},
            {"zeta0", zeta0},
            {"zeta0_continued", zeta0_continued},
            {"zeta_prime0", zeta_prime0.value},
            {"zeta_prime0_quadrature", zeta_prime0.quadrature_value},
            {"zeta_prime0_split2", zeta_prime0_T2},
            {"zeta_prime0_tail", zeta_prime0.tail},
            {"zeta_prime0_fit_error", zeta_prime0.fit_error},
            {"quadrature_spec", quadrature}};
}

ZetaReport zeta_report(const ThetaSeries& th, const FitWindow& window, const std::vector<double>& s_values)
{
    ZetaReport R;
    R.fit = fit_expansion(th, window);
    for (double s : s_values) {
        R.direct.emplace_back(s, zeta_at(th, s));
        R.mellin.emplace_back(s, zeta_continued(th, R.fit, s));
    }
    R.zeta0 = R.fit.b0;
    R.zeta0_continued = 0.5 * (zeta_continued(th, R.fit, 1e-4) + zeta_continued(th, R.fit, -1e-4));
    R.zeta_prime0 = zeta_prime0(th, R.fit);
    R.zeta_prime0_T2 = zeta_prime0(th, R.fit, 2.0).value;
    // sensitivity to the fit: refit on the lower half window
    HeatFit half = fit_expansion(th, {window.t_lo, std::sqrt(window.t_lo * window.t_hi)});
    R.zeta_prime0.fit_error = std::abs(zeta_prime0(th, half).value - R.zeta_prime0.value);
    R.quadrature = {{"split_T", 1.0},
                    {"fit_window", {window.t_lo, window.t_hi}},
                    {"fit_basis", "1/t, 1, t, t^2, t^3"},
                    {"upper", "closed form E1 sums; exp-sinh cross-check"},
                    {"middle", "closed form; Gauss-Kronrod 31 cross-check, tol 1e-10"}};
    return R;
}

ZetaReport zeta_report(const ThetaSeries& th, const std::vector<double>& s_values)
{
    return zeta_report(th, auto_window(th), s_values);
}

TorsionTable torsion_limit(const std::vector<int>& labels, const std::vector<double>& values, double direct)
{
    if (labels.size() != values.size()) throw ValidationError("family", "labels and values differ in length");
    if (values.size() < 4) throw ValidationError("family", "need at least 4 members");
    TorsionTable T;
    T.labels = labels;
    T.values = values;
    T.direct = direct;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) T.gaps.push_back(std::abs(values[i + 1] - values[i]));
    for (std::size_t i = 0; i + 1 < T.gaps.size(); ++i)
        T.gap_ratios.push_back(T.gaps[i + 1] > 0 ? T.gaps[i] / T.gaps[i + 1] : std::numeric_limits<double>::infinity());
    // Cauchy from the first index after which the gaps decrease strictly (or have reached 0)
    T.cauchy_from = int(T.gaps.size()) - 1;
    auto shrinks = [&](int i) { return T.gaps[i] < T.gaps[i - 1] || T.gaps[i] == 0; };
    while (T.cauchy_from > 0 && shrinks(T.cauchy_from)) --T.cauchy_from;
    T.cauchy = int(T.gaps.size()) - T.cauchy_from >= 3;
    if (std::isfinite(direct))
        for (double v : values) T.gap_to_limit.push_back(std::abs(v - direct));
    if (T.cauchy) {
        // Aitken on the last three members
        const std::size_t n = values.size();
        const double x0 = values[n - 3], x1 = values[n - 2], x2 = values[n - 1];
        const double den = (x2 - x1) - (x1 - x0);
        T.extrapolated = den != 0 ? x2 - (x2 - x1) * (x2 - x1) / den : x2;
        T.extrapolation_error = std::abs(T.extrapolated - x2);
    }
    return T;
}

std::string TorsionTable::family_csv(const std::vector<double>& zeta0) const
{
    std::ostringstream os;
    os << "p,zeta0,zeta_prime0,gap_to_limit\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double z0 = i < zeta0.size() ? zeta0[i] : std::numeric_limits<double>::quiet_NaN();
        double gap = i < gap_to_limit.size() ? gap_to_limit[i]
                                             : (std::isfinite(extrapolated) ? std::abs(values[i] - extrapolated)
                                                                            : std::numeric_limits<double>::quiet_NaN());
        os << labels[i] << ',' << fmt17(z0) << ',' << fmt17(values[i]) << ',' << fmt17(gap) << '\n';
    }
    return os.str();
}

json TorsionTable::to_json() const
{
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    return {{"labels", labels},
            {"zeta_prime0", values},
            {"gaps", gaps},
            {"gap_ratios", gap_ratios},
            {"gap_to_limit", gap_to_limit},
            {"direct_limit", num(direct)},
            {"extrapolated", num(extrapolated)},
            {"extrapolation_error", num(extrapolation_error)},
            {"cauchy", cauchy},
            {"cauchy_from", cauchy_from < 0 ? json(nullptr) : json(labels[cauchy_from])}};
}

}  // namespace torsion
