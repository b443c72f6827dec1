#include "torsion/suites.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "torsion/opcalc.hpp"

namespace torsion {

bool SuiteResult::pass() const
{
    return ok && std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.pass(); });
}

json SuiteResult::to_json() const
{
    json c = json::array();
    for (const auto& b : checks) c.push_back(b.to_json());
    return {{"name", name}, {"checks", c}, {"detail", detail}, {"pass", pass()}};
}

double tx_ratio_stated_constant() { return std::pow(2.0, -2 * std::numbers::pi * std::numbers::pi / 3); }
double tx_ratio_proof_constant() { return std::pow(2.0, -std::numbers::pi * std::numbers::pi / 6); }

SuiteResult lemma_suite(std::uint64_t seed, int trials, int samples)
{
    SuiteResult R;
    R.name = "log_ratio_lemma";
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> eps_dist(1e-3, 0.49), unit(-1.0, 1.0);
    double worst_violation = -std::numeric_limits<double>::infinity();
    double min_slack = std::numeric_limits<double>::infinity();
    int failures = 0;
    for (int k = 0; k < trials; ++k) {
        const double eps = eps_dist(rng);
        std::vector<double> phi(samples);
        for (auto& f : phi) f = 1 + eps * 0.999 * unit(rng);
        auto r = log_bound_check(phi, eps);
        worst_violation = std::max(worst_violation, r.max_violation);
        min_slack = std::min(min_slack, r.min_slack);
        if (!r.pass) ++failures;
    }
    R.ok = failures == 0;
    R.detail = {{"trials", trials}, {"samples", samples}, {"failures", failures},
                {"max_violation", worst_violation}, {"min_slack", min_slack}};
    return R;
}

SuiteResult green_suite(const UGrid& grid, double tol)
{
    SuiteResult R;
    R.name = "green_identity";
    const std::vector<std::pair<SmoothField, SmoothField>> pairs = {
        {gaussian_field(1.0, 0.0, 1.0), gaussian_field(1.0, 0.5, 2.0)},
        {sum_fields({gaussian_field(0.7, -1.0, 1.2), gaussian_field(-0.4, 2.0, 0.8)}), sech2_field()},
        {sech2_field(), gaussian_field(0.3, -1.0, 1.5)},
        {gaussian_field(2.0, 3.0, 0.6), sum_fields({sech2_field(), gaussian_field(1.0, 1.0, 3.0)})},
    };
    json res = json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const double r = std::abs(green_identity_check(pairs[i].first, pairs[i].second, grid));
        res.push_back(r);
        R.checks.push_back({"green_identity_" + std::to_string(i), std::numeric_limits<double>::quiet_NaN(), r, tol});
    }
    R.detail = {{"residuals", res}, {"tol", tol}};
    return R;
}

SuiteResult opcalc_suite(std::uint64_t seed)
{
    SuiteResult R;
    R.name = "trace_norm_inequalities";
    auto a = opcalc::random_trace_suite(seed, 300);
    auto b = opcalc::random_triple_suite(seed + 1, 200);
    auto c = opcalc::random_triangle_suite(seed + 2, 200);
    auto rec = [](const opcalc::NormSuiteReport& r) {
        return json{{"instances", r.instances}, {"failures", r.failures}, {"worst_slack", r.worst_slack}};
    };
    R.ok = a.pass() && b.pass() && c.pass();
    R.detail = {{"trace", rec(a)}, {"triple", rec(b)}, {"triangle", rec(c)},
                {"instances", a.instances + b.instances + c.instances}};
    return R;
}

SuiteResult cheeger_suite(const Discretization& d, int p_max)
{
    SuiteResult R;
    R.name = "cheeger";
    const UGrid grid = d.grid();
    SpectrumOptions opt;
    opt.n_per_mode = 2;
    const Spectrum s = compute_spectrum(make_fubini_study(0), fs_base(), d, opt);
    const CheegerReport c = cheeger(fs_base(), grid, s.first_nonzero);
    R.checks.push_back({"cheeger_lambda1", std::numeric_limits<double>::quiet_NaN(), c.lower_bound, c.lambda1});
    json scaled = json::array();
    // C1 w <= w' <= C2 w  =>  sqrt(C1)/C2 h <= h' <= sqrt(C2)/C1 h
    auto transfer = [&](const BaseProfile& wp, const std::string& label) {
        double c1 = std::numeric_limits<double>::infinity(), c2 = 0;
        for (int i = 0; i < grid.n; ++i) {
            const double r = wp(grid.at(i)) / fs_base()(grid.at(i));
            c1 = std::min(c1, r);
            c2 = std::max(c2, r);
        }
        const double hp = cheeger(wp, grid).h;
        const double lo = std::sqrt(c1) / c2 * c.h, hi = std::sqrt(c2) / c1 * c.h;
        R.checks.push_back({"cheeger_transfer_lower_" + label, std::numeric_limits<double>::quiet_NaN(), lo * (1 - 1e-6), hp});
        R.checks.push_back({"cheeger_transfer_upper_" + label, std::numeric_limits<double>::quiet_NaN(), hp, hi * (1 + 1e-6)});
        scaled.push_back({{"base", label}, {"C1", c1}, {"C2", c2}, {"h", hp}, {"lo", lo}, {"hi", hi}});
    };
    for (double k : {0.5, 2.0, 3.7}) transfer(scaled_base(fs_base(), k), "scale_" + fmt17(k));
    transfer(tx_base(4), "tx4");
    transfer(tx_base(12), "tx12");

    // pointwise ratio h_q / h_p for 2 <= q <= p <= p_max
    double min_ratio = 1, max_ratio = 0;
    int worst_q = 0, worst_p = 0;
    for (int p = 2; p <= p_max; ++p)
        for (int q = 2; q <= p; ++q)
            for (int i = -4000; i <= 4000; ++i) {
                const double x = std::pow(10.0, i / 1000.0);
                const double r = tx_metric_ratio(q, p, x);
                if (r < min_ratio) {
                    min_ratio = r;
                    worst_q = q;
                    worst_p = p;
                }
                max_ratio = std::max(max_ratio, r);
            }
    R.checks.push_back({"tx_ratio_lower", std::numeric_limits<double>::quiet_NaN(), tx_ratio_stated_constant(), min_ratio});
    R.checks.push_back({"tx_ratio_upper", std::numeric_limits<double>::quiet_NaN(), max_ratio, 1.0});
    R.detail = {{"h", c.h},
                {"c_star", c.c_star},
                {"area", c.area},
                {"lambda1", c.lambda1},
                {"h2_over_4", c.lower_bound},
                {"transfer", scaled},
                {"tx_ratio_min", min_ratio},
                {"tx_ratio_min_at", {worst_q, worst_p}},
                {"tx_ratio_stated_constant", tx_ratio_stated_constant()},
                {"tx_ratio_proof_constant", tx_ratio_proof_constant()},
                {"tx_ratio_proof_constant_holds", min_ratio >= tx_ratio_proof_constant()}};
    return R;
}

SuiteResult divergence_suite(double min_growth, double max_drift)
{
    SuiteResult R;
    R.name = "strong_form_divergence";
    const auto kink = strong_form_divergence(make_sqrt_kink(), fs_base());
    const auto smooth = strong_form_divergence(make_fubini_study(1), fs_base());
    double lo = *std::min_element(smooth.norm2.begin(), smooth.norm2.end());
    double hi = *std::max_element(smooth.norm2.begin(), smooth.norm2.end());
    R.checks.push_back({"kink_growth", std::numeric_limits<double>::quiet_NaN(), min_growth, kink.growth});
    R.checks.push_back({"smooth_drift", std::numeric_limits<double>::quiet_NaN(), hi / lo, max_drift});
    R.ok = kink.monotone;
    R.detail = {{"cells_per_eps", kink.cells}, {"kink_norm2", kink.norm2}, {"kink_monotone", kink.monotone},
                {"smooth_norm2", smooth.norm2}};
    return R;
}

}  // namespace torsion
