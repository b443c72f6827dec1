// One line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "torsion/recipes.hpp"

using namespace torsion;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<MetricProfile> pnorm_family(int m, int p0, int p1)
{
    std::vector<MetricProfile> v;
    for (int p = p0; p <= p1; ++p) v.push_back(make_pnorm(m, Chi::pow2(), p));
    return v;
}

ThetaSeries integer_series(int n)
{
    ThetaSeries th;
    for (int j = 1; j <= n; ++j) th.lambdas.push_back(j);
    th.weyl = 1;
    th.cut = n + 0.5;
    return th;
}

Outcome kernel_dimension()
{
    SpectrumOptions opt;
    opt.n_per_mode = 2;
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    double worst_gap = std::numeric_limits<double>::infinity();
    std::string bad;
    for (int m = 0; m <= 3; ++m)
        for (const auto& psi : {make_fubini_study(m), make_canonical(m), make_pnorm(m, Chi::pow2(), 6)}) {
            const Spectrum s = compute_spectrum(psi, fs_base(), Discretization{}, opt);
            worst_gap = std::min(worst_gap, s.gap_ratio);
            if (s.kernel_dim != m + 1 || !(s.gap_ratio > 1e6)) {
                ok = false;
                bad += fmt(" [%s m=%d dim=%d gap=%.3g]", psi.kind.c_str(), m, s.kernel_dim, s.gap_ratio);
            }
        }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ok = ok && secs < 30;
    return {ok, fmt("12 metrics, dim = m+1, min gap ratio %.3g, %.1f s (< 30 s)", worst_gap, secs) + bad};
}

Outcome sphere_harmonics()
{
    SpectrumOptions opt;
    opt.n_per_mode = 8;
    const Spectrum s = compute_spectrum(make_fubini_study(0), fs_base(), Discretization{-14, 14, 4096, -1}, opt);
    const auto g = s.group_sizes();
    bool ok = g.size() >= 6;
    std::string mult;
    for (int l = 0; l < 6 && ok; ++l) {
        mult += (l ? "," : "") + std::to_string(g[l]);
        ok = ok && g[l] == 2 * l + 1;
    }
    std::vector<double> first(6, -1);
    for (const auto& e : s.entries)
        if (e.group < 6 && first[e.group] < 0) first[e.group] = e.lambda;
    double worst = 0;
    for (int l = 1; l < 6; ++l) worst = std::max(worst, std::abs(first[l] / first[1] / (l * (l + 1) / 2.0) - 1));
    ok = ok && worst < 1e-3;
    return {ok, fmt("multiplicities %s, max rel err of l(l+1)/2 ratios %.2e (< 1e-3)", mult.c_str(), worst)};
}

Outcome heat_coefficients()
{
    const ThetaSeries syn = integer_series(20000);
    const HeatFit f = fit_expansion(syn, auto_window(syn));
    const double e1 = std::abs(f.b_minus1 - 1), e0 = std::abs(f.b0 + 0.5);

    // b_{-1} along the interpolated family on the round base, one fit window for all
    const ContinuousFamily fam(pnorm_family(1, 2, 9), 2);
    std::vector<ThetaSeries> ths;
    for (double u : {2.0, 2.5, 3.25, 4.0, 5.5, 8.0})
        ths.push_back(ThetaSeries::from(compute_spectrum(fam.eval(u), fs_base(), Discretization{})));
    ths.push_back(ThetaSeries::from(compute_spectrum(make_fubini_study(1), fs_base(), Discretization{})));
    FitWindow w{0, 0};
    for (const auto& th : ths) w.t_lo = std::max(w.t_lo, auto_window(th).t_lo);
    w.t_hi = 10 * w.t_lo;
    double lo = 1e300, hi = -1e300;
    for (const auto& th : ths) {
        const double b = fit_expansion(th, w).b_minus1;
        lo = std::min(lo, b);
        hi = std::max(hi, b);
    }
    const double spread = hi / lo - 1;
    const bool ok = e1 < 1e-3 && e0 < 1e-3 && spread < 0.02;
    return {ok, fmt("synthetic |b-1 - 1| = %.1e, |b0 + 1/2| = %.1e (< 1e-3); family b-1 in [%.5f, %.5f], spread %.2e (< 2%%)",
                    e1, e0, lo, hi, spread)};
}

Outcome zeta_oracles()
{
    double worst_single = 0;
    for (double lam : {0.3, 1.0, 2.0, 17.0}) {
        ThetaSeries th;
        th.lambdas = {lam};
        const HeatFit f = fit_expansion(th, FitWindow{1e-3 / lam, 1e-2 / lam});
        worst_single = std::max(worst_single, std::abs(zeta_prime0(th, f).value + std::log(lam)));
    }
    const ThetaSeries th = integer_series(20000);
    const HeatFit f = fit_expansion(th, auto_window(th));
    const double riemann = std::abs(zeta_prime0(th, f).value + 0.5 * std::log(2 * std::numbers::pi));
    return {worst_single < 1e-4 && riemann < 1e-3,
            fmt("single eigenvalue max |err| %.1e (< 1e-4); lambda_j = j |err| %.1e (< 1e-3)", worst_single, riemann)};
}

// criteria 5 and 6 share one run of the converge recipe
struct ConvergeRun {
    json zeta;
    int exit_code = -1;
};

const ConvergeRun& converge_run()
{
    static ConvergeRun R = [] {
        ConvergeRun r;
        const auto dir = std::filesystem::temp_directory_path() / "torsion_acceptance_converge";
        std::filesystem::remove_all(dir);
        const json cfg = {{"recipe", "converge"},
                          {"metric", {{"kind", "pnorm"}, {"degree", 1}}},
                          {"family", {{"chi", "pow2"}, {"p_min", 3}, {"p_max", 9}}},
                          {"eval", {{"u", 3.5}}},
                          {"out", dir.string()}};
        std::ostringstream log;
        r.exit_code = run(validate(cfg), log).exit_code;
        std::ifstream in(dir / "zeta.json");
        if (in) r.zeta = json::parse(in);
        return r;
    }();
    return R;
}

Outcome torsion_convergence()
{
    const auto& r = converge_run();
    if (r.zeta.is_null()) return {false, "converge recipe produced no zeta.json"};
    const json& T = r.zeta["table"];
    const auto labels = T["labels"].get<std::vector<int>>();
    const auto values = T["zeta_prime0"].get<std::vector<double>>();
    const auto ratios = T["gap_ratios"].get<std::vector<double>>();
    const double direct = T["direct_limit"].get<double>();
    double min_ratio = 1e300;
    for (std::size_t i = 0; i < ratios.size(); ++i)
        if (labels[i] >= 5) min_ratio = std::min(min_ratio, ratios[i]);
    const double gap = std::abs(values.back() - direct);
    const bool ok = T["cauchy"].get<bool>() && min_ratio >= 1.5 && gap < 5e-3;
    return {ok, fmt("zeta'(0) p=3..9, min gap shrink after p=5 %.2fx (>= 1.5x), |zeta'_9(0) - limit| %.2e (< 5e-3)",
                    min_ratio, gap)};
}

Outcome lambda1_uniformity()
{
    const auto& r = converge_run();
    if (r.zeta.is_null()) return {false, "converge recipe produced no zeta.json"};
    const json& L = r.zeta["lambda1"];
    double worst = 1e300;
    int npairs = 0;
    for (const auto& p : L["pairs"]) {
        const double ratio = p["ratio"], lo = p["lo"], hi = p["hi"];
        worst = std::min({worst, ratio - lo, hi - ratio});
        ++npairs;
    }
    const double mn = L["min"];
    const bool ok = mn > 0 && L["all_pass"].get<bool>();
    return {ok, fmt("min lambda_1 %.4f, %d pairs inside envelope, min margin %.3g", mn, npairs, worst)};
}

Outcome duhamel()
{
    const ContinuousFamily fam(pnorm_family(1, 2, 9), 2);
    const auto r = duhamel_check(fam, fs_base(), 2.5, 1.0);
    const double res = r.rows.back().rel_residual;
    const bool ok = r.pass && res < 1e-4 && r.observed_order > 1.8 && r.observed_order < 2.2;
    return {ok, fmt("rel residuals %.2e %.2e %.2e (< 1e-4), observed order %.3f", r.rows[0].rel_residual,
                    r.rows[1].rel_residual, res, r.observed_order)};
}

Outcome variation()
{
    const std::vector<double> ts{0.25, 1.0, 4.0};
    const ContinuousFamily fam(pnorm_family(1, 2, 9), 2);
    std::vector<BaseProfile> txs;
    for (int p = 2; p <= 9; ++p) txs.push_back(tx_base(p));
    const BaseFamily bfam(txs, 2);
    const auto a = variation_bounds(fam, fs_base(), 2.5, ts);
    const auto b = tx_variation_bounds(bfam, make_fubini_study(1), 2.5, ts);
    int n = 0;
    double min_slack = 1e300;
    std::string bad;
    bool seen[4] = {false, false, false, false};
    const char* required[4] = {"formule99", "encoreestimation11", "derivenoyau", "bornelapbelt"};
    for (const auto* rep : {&a, &b})
        for (const auto& c : rep->checks) {
            ++n;
            min_slack = std::min(min_slack, c.slack());
            if (!c.pass()) bad += " [" + rep->family + "." + c.name + "]";
            for (int i = 0; i < 4; ++i) seen[i] = seen[i] || c.name == required[i];
        }
    const bool all_seen = std::all_of(seen, seen + 4, [](bool s) { return s; });
    return {bad.empty() && all_seen && a.pass() && b.pass(),
            fmt("%d checks on p-norm and TX families at t = 0.25, 1, 4; min slack %.3g", n, min_slack) + bad};
}

Outcome dynamical()
{
    const UGrid g{-12.0, 12.0, 1024};
    const auto fs1 = make_fubini_study(1), can = make_canonical(1);
    const auto v = sample(make_dynamical({1.0, 0.0, 0.0}, 20, fs1, g).profile, g);
    double sup = 0;
    for (int i = 0; i < g.n; ++i) sup = std::max(sup, std::abs(v[i] - can(g.at(i))));
    double rel = 0;
    for (int n = 0; n <= 10; ++n) {
        const double got = std::abs(dynamical_dlog({1.0, 0.0, -2.0}, n, fs1, 2.0));
        const double want = std::ldexp(1.0, n + 1) / 5;
        rel = std::max(rel, std::abs(got - want) / want);
    }
    return {sup < 1e-6 && rel < 1e-9,
            fmt("z^2: sup error after 20 iterations %.2e (< 1e-6); z^2-2: |gradient| vs 2^(n+1)/5 max rel err %.1e (< 1e-9)",
                sup, rel)};
}

Outcome appendix_suites()
{
    const auto lemma = lemma_suite(1);
    const auto green = green_suite();
    const auto ops = opcalc_suite(1);
    const auto cheeger = cheeger_suite(Discretization{-14.0, 14.0, 2048, -1});
    double worst_green = 0;
    for (const auto& r : green.detail["residuals"]) worst_green = std::max(worst_green, r.get<double>());
    const bool ok = lemma.pass() && green.pass() && ops.pass() && cheeger.pass();
    return {ok, fmt("lemma %d trials, %d failures; Green max residual %.1e; opcalc %d instances, %s; Cheeger %s, "
                    "q<=p<=12 ratio min %.4f >= %.4f",
                    lemma.detail["trials"].get<int>(), lemma.detail["failures"].get<int>(), worst_green,
                    ops.detail["instances"].get<int>(), ops.pass() ? "all hold" : "FAILED",
                    cheeger.pass() ? "all hold" : "FAILED", cheeger.detail["tx_ratio_min"].get<double>(),
                    tx_ratio_stated_constant())};
}

Outcome divergence()
{
    const auto s = divergence_suite(10.0, 1.05);
    const auto k = s.detail["kink_norm2"].get<std::vector<double>>();
    const auto f = s.detail["smooth_norm2"].get<std::vector<double>>();
    const double drift = *std::max_element(f.begin(), f.end()) / *std::min_element(f.begin(), f.end());
    return {s.pass(), fmt("kink |Delta f|^2 %.4g -> %.4g -> %.4g -> %.4g (%.1fx, monotone %s); round drift %.4f (< 1.05)",
                          k[0], k[1], k[2], k[3], k.back() / k.front(), s.detail["kink_monotone"].get<bool>() ? "yes" : "no",
                          drift)};
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"kernel dimension", kernel_dimension},
        {"sphere harmonics", sphere_harmonics},
        {"heat-trace coefficients", heat_coefficients},
        {"zeta'(0) oracles", zeta_oracles},
        {"torsion convergence", torsion_convergence},
        {"lambda_1 uniformity", lambda1_uniformity},
        {"Duhamel identity", duhamel},
        {"variation bounds", variation},
        {"dynamical metrics", dynamical},
        {"appendix suites", appendix_suites},
        {"divergence diagnostic", divergence},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!o.pass) ++failed;
        std::printf("%s %2zu %-24s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria pass\n", int(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
