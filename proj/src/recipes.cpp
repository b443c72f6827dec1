#include "torsion/recipes.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace torsion {

namespace fs = std::filesystem;

namespace {

std::string join_issues(const std::vector<ConfigIssue>& issues)
{
    std::string s;
    for (std::size_t i = 0; i < issues.size(); ++i) {
        if (i) s += "; ";
        s += issues[i].path + ": " + issues[i].message;
    }
    return s;
}

const std::vector<std::string> kMetricKinds{"fubini_study", "pnorm", "canonical", "dynamical", "sampled", "sqrt_kink"};
const std::vector<std::string> kBaseKinds{"fubini_study", "tx", "canonical_tx"};

bool contains(const std::vector<std::string>& v, const std::string& s)
{
    return std::find(v.begin(), v.end(), s) != v.end();
}

// Typed reads with issue collection. Missing keys keep the default.
class Reader {
public:
    explicit Reader(std::vector<ConfigIssue>& out) : issues(out) {}

    void issue(const std::string& path, const std::string& msg) { issues.push_back({path, msg}); }

    bool object(const json& j, const std::string& path, const std::vector<std::string>& keys)
    {
        if (!j.is_object()) {
            issue(path.empty() ? "/" : path, "expected an object");
            return false;
        }
        for (const auto& [k, v] : j.items())
            if (!contains(keys, k)) issue(join(path, k), "unknown key");
        return true;
    }

    static std::string join(const std::string& path, const std::string& key)
    {
        return path.empty() ? key : path + "." + key;
    }

    void str(const json& j, const std::string& key, const std::string& path, std::string& out)
    {
        if (!j.contains(key)) return;
        if (!j[key].is_string()) return issue(join(path, key), "expected a string");
        out = j[key].get<std::string>();
    }

    bool integer(const json& j, const std::string& key, const std::string& path, int& out, long lo, long hi)
    {
        if (!j.contains(key)) return true;
        const json& v = j[key];
        if (!v.is_number_integer()) {
            issue(join(path, key), "expected an integer");
            return false;
        }
        const long x = v.get<long>();
        if (x < lo || x > hi) {
            issue(join(path, key), "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            return false;
        }
        out = int(x);
        return true;
    }

    bool number(const json& j, const std::string& key, const std::string& path, double& out)
    {
        if (!j.contains(key)) return true;
        const json& v = j[key];
        if (!v.is_number() || !std::isfinite(v.get<double>())) {
            issue(join(path, key), "expected a finite number");
            return false;
        }
        out = v.get<double>();
        return true;
    }

    void chi(const json& j, const std::string& path, ChiSpec& out)
    {
        if (j.is_string()) {
            const auto s = j.get<std::string>();
            if (s != "pow2" && s != "linear") return issue(path, "expected \"pow2\", \"linear\" or an array");
            out.name = s;
            out.table.clear();
            return;
        }
        if (j.is_array()) {
            std::vector<double> t;
            for (const auto& x : j) {
                if (!x.is_number()) return issue(path, "table entries must be numbers");
                t.push_back(x.get<double>());
            }
            if (t.empty()) return issue(path, "table must not be empty");
            for (double x : t)
                if (!(x >= 1) || x != std::floor(x)) return issue(path, "table entries must be integers >= 1");
            out.name = "table";
            out.table = std::move(t);
            return;
        }
        issue(path, "expected \"pow2\", \"linear\" or an array");
    }

    std::vector<ConfigIssue>& issues;
};

bool chi_increasing(const ChiSpec& c, int lo, int hi, std::string& why)
{
    try {
        c.make().check_increasing(lo, hi);
        return true;
    } catch (const ValidationError& e) {
        why = e.what();
        return false;
    }
}

// ---- run helpers

struct Outputs {
    std::map<std::string, std::string> files;
    std::vector<std::string> failures;
    json summary = json::object();

    void fail(const std::string& what) { failures.push_back(what); }
};

void ensure_writable(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ValidationError("out", "cannot create output directory " + dir);
    const fs::path probe = fs::path(dir) / ".write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw ValidationError("out", "output directory is not writable: " + dir);
    }
    fs::remove(probe, ec);
}

std::vector<MetricProfile> pnorm_members(int m, const ChiSpec& chi, int lo, int hi)
{
    std::vector<MetricProfile> v;
    const Chi c = chi.make();
    for (int p = lo; p <= hi; ++p) v.push_back(make_pnorm(m, c, p));
    return v;
}

std::vector<int> range_labels(int lo, int hi)
{
    std::vector<int> v;
    for (int p = lo; p <= hi; ++p) v.push_back(p);
    return v;
}

bool is_monomial(const std::vector<std::complex<double>>& c)
{
    if (c.front() != std::complex<double>(1.0, 0.0)) return false;
    return std::all_of(c.begin() + 1, c.end(), [](auto x) { return x == std::complex<double>(0.0, 0.0); });
}

bool is_chebyshev2(const std::vector<std::complex<double>>& c)
{
    return c.size() == 3 && c[0] == std::complex<double>(1, 0) && c[1] == std::complex<double>(0, 0) &&
           c[2] == std::complex<double>(-2, 0);
}

void check_kernel(const Spectrum& s, int m, Outputs& o)
{
    if (s.kernel_dim != m + 1)
        o.fail("kernel dimension " + std::to_string(s.kernel_dim) + " != degree + 1 = " + std::to_string(m + 1));
    if (!(s.gap_ratio > 1e6)) o.fail("spectral gap ratio " + fmt17(s.gap_ratio) + " <= 1e6");
}

json spectrum_summary(const Spectrum& s)
{
    return {{"kernel_dim", s.kernel_dim},
            {"first_nonzero", s.first_nonzero},
            {"gap_ratio", s.gap_ratio},
            {"lambda_cut", s.lambda_cut},
            {"complete", s.complete},
            {"count", s.entries.size()}};
}

void recipe_spectrum(const ExperimentConfig& c, Outputs& o, std::ostream& log)
{
    const auto psi = build_metric(c);
    const auto base = build_base(c.base);
    log << "spectrum: " << psi.kind << " m=" << psi.degree << " n=" << c.disc.n_nodes << '\n';
    const Spectrum s = compute_spectrum(psi, base, c.disc);
    o.files["spectrum.csv"] = spectrum_csv(s);
    o.summary["spectrum"] = spectrum_summary(s);
    check_kernel(s, psi.degree, o);
}

void recipe_theta(const ExperimentConfig& c, Outputs& o, std::ostream& log)
{
    const auto psi = build_metric(c);
    const Spectrum s = compute_spectrum(psi, build_base(c.base), c.disc);
    const auto th = ThetaSeries::from(s);
    const auto ts = c.t_grid.points();
    log << "theta: " << th.lambdas.size() << " eigenvalues below " << th.cut << '\n';
    o.files["theta.csv"] = theta_csv(th, ts);
    o.files["spectrum.csv"] = spectrum_csv(s);
    o.summary["spectrum"] = spectrum_summary(s);
    // a sum of decaying exponentials is decreasing and log-convex
    std::vector<double> lv;
    for (double t : ts) lv.push_back(std::log(th(t)));
    for (std::size_t i = 1; i < lv.size(); ++i)
        if (!(lv[i] <= lv[i - 1] + 1e-12)) o.fail("theta not decreasing at t = " + fmt17(ts[i]));
    for (std::size_t i = 1; i + 1 < lv.size(); ++i) {
        // convexity in t: the chord through the neighbours lies above
        const double w = (ts[i] - ts[i - 1]) / (ts[i + 1] - ts[i - 1]);
        if (lv[i] > (1 - w) * lv[i - 1] + w * lv[i + 1] + 1e-10 * (1 + std::abs(lv[i])))
            o.fail("log theta not convex at t = " + fmt17(ts[i]));
    }
}

void recipe_zeta(const ExperimentConfig& c, Outputs& o, std::ostream& log)
{
    const auto psi = build_metric(c);
    const Spectrum s = compute_spectrum(psi, build_base(c.base), c.disc);
    const auto th = ThetaSeries::from(s);
    o.files["theta.csv"] = theta_csv(th, c.t_grid.points());
    log << "zeta: fitting heat trace\n";
    const ZetaReport z = zeta_report(th);
    json j = z.to_json();
    j["spectrum"] = spectrum_summary(s);
    o.files["zeta.json"] = j.dump(2) + "\n";
    o.summary["zeta_prime0"] = z.zeta_prime0.value;
    o.summary["zeta0"] = z.zeta0;
    const double split = std::abs(z.zeta_prime0.value - z.zeta_prime0_T2);
    if (split > 1e-6 * (1 + std::abs(z.zeta_prime0.value))) o.fail("zeta'(0) depends on the split point: " + fmt17(split));
    const double cq = std::abs(z.zeta_prime0.value - z.zeta_prime0.quadrature_value);
    if (cq > 1e-6 * (1 + std::abs(z.zeta_prime0.value))) o.fail("closed form and quadrature disagree: " + fmt17(cq));
}

void recipe_converge(const ExperimentConfig& c, Outputs& o, std::ostream& log)
{
    const int m = c.metric.degree;
    const auto base = build_base(c.base);
    const auto members = pnorm_members(m, c.family.chi, c.family.p_min, c.family.p_max);
    const auto labels = range_labels(c.family.p_min, c.family.p_max);
    std::vector<Spectrum> spectra;
    std::vector<ThetaSeries> ths;
    for (std::size_t i = 0; i < members.size(); ++i) {
        log << "converge: p = " << labels[i] << '\n';
        spectra.push_back(compute_spectrum(members[i], base, c.disc));
        ths.push_back(ThetaSeries::from(spectra.back()));
    }
    const auto limit = make_canonical(m);
    log << "converge: limit metric\n";
    const Spectrum ls = compute_spectrum(limit, base, c.disc);
    const auto lth = ThetaSeries::from(ls);
    // one fit window for every member so the fits are comparable
    FitWindow w = auto_window(lth);
    for (const auto& th : ths) w.t_lo = std::max(w.t_lo, auto_window(th).t_lo);
    w.t_hi = 10 * w.t_lo;
    std::vector<double> values, zeta0;
    json rep = json::array();
    for (std::size_t i = 0; i < ths.size(); ++i) {
        const ZetaReport z = zeta_report(ths[i], w);
        values.push_back(z.zeta_prime0.value);
        zeta0.push_back(z.zeta0);
        json r = z.to_json();
        r["p"] = labels[i];
        r["spectrum"] = spectrum_summary(spectra[i]);
        rep.push_back(r);
    }
    const ZetaReport lz = zeta_report(lth, w);
    const TorsionTable T = torsion_limit(labels, values, lz.zeta_prime0.value);

    std::vector<BaseProfile> bases(members.size(), base);
    const Lambda1Table L = lambda1_family(spectra, labels, members, bases, c.disc.grid());
    json pairs = json::array();
    for (const auto& P : L.pairs)
        pairs.push_back({{"p", P.p}, {"q", P.q}, {"ratio", P.ratio}, {"lo", P.lo}, {"hi", P.hi}, {"pass", P.pass}});

    json j = {{"members", rep},
              {"limit", lz.to_json()},
              {"table", T.to_json()},
              {"fit_window", {w.t_lo, w.t_hi}},
              {"lambda1", {{"labels", L.labels}, {"lambda1", L.lambda1}, {"min", L.min_lambda1}, {"pairs", pairs},
                           {"all_pass", L.all_pass}}}};
    o.files["zeta.json"] = j.dump(2) + "\n";
    o.files["family.csv"] = T.family_csv(zeta0);
    o.summary["table"] = T.to_json();
    if (!T.cauchy) o.fail("zeta'(0) sequence is not Cauchy on its tail");
    if (!L.all_pass) o.fail("lambda_1 ratio outside the equivalence envelope");
    if (!(L.min_lambda1 > 0)) o.fail("lambda_1 not bounded away from 0");
}

std::string diagnostics_header() { return "n,ratio_norm,grad_norm,sum_sqrt_ratio"; }

void recipe_diagnose(const ExperimentConfig& c, Outputs& o, std::ostream& log)
{
    const UGrid grid = c.disc.grid();
    const auto base = build_base(c.base);
    std::ostringstream csv;
    if (c.metric.kind == "dynamical") {
        const int m = c.metric.degree;
        const auto start = make_fubini_study(m);
        std::vector<MetricProfile> fam;
        for (int n = 0; n <= c.metric.iterations; ++n) {
            log << "diagnose: iterate " << n << '\n';
            fam.push_back(make_dynamical(c.metric.coeffs, n, start, grid).profile);
        }
        const auto D = diagnostics(fam, 0, base, grid);
        const bool extra = is_chebyshev2(c.metric.coeffs);
        csv << diagnostics_header();
        if (extra) csv << ",dlog_at_2,expected_dlog,rel_err,tx_gradient,expected_tx_gradient";
        csv << '\n';
        double worst = 0;
        for (std::size_t i = 0; i < D.index.size(); ++i) {
            const int n = D.index[i];
            csv << n << ',' << fmt17(D.ratio_norms[i]) << ',' << fmt17(D.grad_norms[i]) << ','
                << fmt17(D.sum_sqrt_ratio[i]);
            if (extra) {
                // z = 2 is fixed by z^2 - 2; canonical TX metric there has h^{-1/2} = 4
                const double a = std::abs(dynamical_dlog(c.metric.coeffs, n, start, 2.0));
                const double b = std::abs(dynamical_dlog(c.metric.coeffs, n - 1, start, 2.0));
                const double want = m * std::ldexp(1.0, n + 1) / 5;
                const double rel = std::abs(a - want) / want;
                const double txg = 4 * std::abs(a - b);
                const double txw = m * 0.8 * std::ldexp(1.0, n);
                if (n <= 10) worst = std::max(worst, std::max(rel, std::abs(txg - txw) / txw));
                csv << ',' << fmt17(a) << ',' << fmt17(want) << ',' << fmt17(rel) << ',' << fmt17(txg) << ','
                    << fmt17(txw);
            }
            csv << '\n';
        }
        if (extra) {
            o.summary["max_rel_err"] = worst;
            if (!(worst < 1e-9)) o.fail("dynamical gradient diagnostic off by " + fmt17(worst));
        }
    } else {
        const int m = c.metric.degree;
        const auto members = pnorm_members(m, c.family.chi, c.family.p_min, c.family.p_max);
        const auto D = diagnostics(members, c.family.p_min, base, grid, {c.eval.u});
        const Chi chi = c.family.chi.make();
        csv << diagnostics_header() << '\n';
        json rows = json::array();
        for (std::size_t i = 0; i < D.index.size(); ++i) {
            const int p = D.index[i];
            csv << p << ',' << fmt17(D.ratio_norms[i]) << ',' << fmt17(D.grad_norms[i]) << ','
                << fmt17(D.sum_sqrt_ratio[i]) << '\n';
            const double rb = pnorm_ratio_bound(m, chi(p - 1), chi(p));
            const double gb = pnorm_grad_lower_bound(m, chi(p - 1), chi(p));
            rows.push_back({{"n", p}, {"ratio_norm", D.ratio_norms[i]}, {"ratio_bound", rb},
                            {"grad_norm", D.grad_norms[i]}, {"grad_lower_bound", gb}});
            if (!(D.ratio_norms[i] <= rb * (1 + 1e-12))) o.fail("ratio norm above its bound at p = " + std::to_string(p));
        }
        json j = {{"rows", rows}, {"u_samples", D.u_samples}, {"delta_E", D.delta_E}, {"pi_E", D.pi_E}};
        o.files["diagnostics.json"] = j.dump(2) + "\n";
    }
    o.files["diagnostics.csv"] = csv.str();
}

void recipe_dynamical(const ExperimentConfig& c, Outputs& o, std::ostream& log)
{
    const UGrid grid = c.disc.grid();
    const int m = c.metric.degree;
    const auto start = make_fubini_study(m);
    const bool mono = is_monomial(c.metric.coeffs);
    const auto lim = make_canonical(m);
    std::ostringstream csv;
    csv << "n,sup_error,sup_change,escape_radius,escaped_points\n";
    std::vector<double> prev, errs;
    DynamicalResult last;
    for (int n = 0; n <= c.metric.iterations; ++n) {
        log << "dynamical: iterate " << n << '\n';
        last = make_dynamical(c.metric.coeffs, n, start, grid);
        const auto v = sample(last.profile, grid);
        double err = std::numeric_limits<double>::quiet_NaN(), chg = std::numeric_limits<double>::quiet_NaN();
        if (mono) {
            err = 0;
            for (int i = 0; i < grid.n; ++i) err = std::max(err, std::abs(v[i] - lim(grid.at(i))));
            errs.push_back(err);
        }
        if (!prev.empty()) {
            chg = 0;
            for (int i = 0; i < grid.n; ++i) chg = std::max(chg, std::abs(v[i] - prev[i]));
        }
        csv << n << ',' << fmt17(err) << ',' << fmt17(chg) << ',' << fmt17(last.escape_radius) << ','
            << last.escaped_points << '\n';
        prev = v;
    }
    o.files["dynamical.csv"] = csv.str();
    o.files["profile.json"] = profile_to_json(last.profile, grid).dump() + "\n";
    if (mono) {
        o.summary["final_sup_error"] = errs.back();
        for (std::size_t i = 1; i < errs.size(); ++i)
            if (errs[i] > errs[i - 1] + 1e-12) o.fail("sup error increased at iterate " + std::to_string(i));
    }
}

void recipe_bounds(const ExperimentConfig& c, Outputs& o, std::ostream& log)
{
    const int m = c.metric.degree;
    const auto base = build_base(c.base);
    const UGrid grid = c.disc.grid();
    const auto members = pnorm_members(m, c.family.chi, c.family.p_min, c.family.p_max);
    const ContinuousFamily fam(members, c.family.p_min);
    std::vector<BaseProfile> txs;
    for (int p = c.family.p_min; p <= c.family.p_max; ++p) txs.push_back(tx_base(p));
    const BaseFamily bfam(txs, c.family.p_min);

    json all = json::array(), reports = json::object();
    bool ok = true;
    auto add = [&](const std::string& prefix, const std::vector<BoundCheck>& cs) {
        for (const auto& b : cs) {
            json j = b.to_json();
            j["bound_name"] = prefix + "." + b.name;
            all.push_back(j);
        }
    };

    log << "bounds: metric variation\n";
    const auto ve = variation_bounds(fam, base, c.eval.u, c.eval.t, {}, c.seed);
    add("pnorm", ve.checks);
    reports["pnorm"] = ve.to_json();
    ok = ok && ve.pass();

    log << "bounds: base variation\n";
    const auto vx = tx_variation_bounds(bfam, make_fubini_study(m), c.eval.u, c.eval.t, {}, c.seed);
    add("tx", vx.checks);
    reports["tx"] = vx.to_json();
    ok = ok && vx.pass();

    const auto dx = delta_x_bound(bfam, c.eval.u, grid);
    const BoundCheck dxc{"deltaXU", std::numeric_limits<double>::quiet_NaN(), dx.delta_X, dx.c1 * dx.ratio_sup};
    add("tx", {dxc});
    ok = ok && dxc.pass();

    log << "bounds: duhamel\n";
    const auto du = duhamel_check(fam, base, c.eval.u, c.eval.duhamel_t);
    reports["duhamel"] = du.to_json();
    if (!du.pass) o.fail("duhamel identity residual or order out of range");

    log << "bounds: lambda_1 over the TX family\n";
    {
        SpectrumOptions opt;
        opt.n_per_mode = 2;
        std::vector<Spectrum> sp;
        std::vector<MetricProfile> flat(txs.size(), make_fubini_study(0));
        for (const auto& b : txs) sp.push_back(compute_spectrum(flat[0], b, c.disc, opt));
        const auto L = lambda1_family(sp, range_labels(c.family.p_min, c.family.p_max), flat, txs, grid);
        json pairs = json::array();
        for (const auto& P : L.pairs)
            pairs.push_back({{"p", P.p}, {"q", P.q}, {"ratio", P.ratio}, {"lo", P.lo}, {"hi", P.hi}, {"pass", P.pass}});
        reports["tx_lambda1"] = {{"lambda1", L.lambda1}, {"min", L.min_lambda1}, {"pairs", pairs}, {"all_pass", L.all_pass}};
        if (!L.all_pass || !(L.min_lambda1 > 0)) o.fail("lambda_1 over the TX family outside its envelope");
    }

    log << "bounds: appendix suites\n";
    for (const auto& s : {lemma_suite(c.seed), green_suite(), opcalc_suite(c.seed), cheeger_suite(c.disc),
                          divergence_suite()}) {
        add(s.name, s.checks);
        reports[s.name] = s.to_json();
        if (!s.pass()) o.fail("suite " + s.name + " failed");
    }
    if (!ok) o.fail("variation bound violated");
    json j = {{"bounds", all}, {"reports", reports}};
    j["pass"] = o.failures.empty();
    o.files["bounds.json"] = j.dump(2) + "\n";
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigIssue> issues)
    : ValidationError(issues.empty() ? std::string("/") : issues.front().path,
                      issues.size() <= 1 ? (issues.empty() ? std::string("invalid") : issues.front().message)
                                         : join_issues(issues)),
      issues_(std::move(issues))
{
}

Chi ChiSpec::make() const
{
    if (name == "pow2") return Chi::pow2();
    if (name == "linear") return Chi::linear();
    return Chi::from_table(table, 1);
}

json ChiSpec::to_json() const
{
    if (name == "table") return table;
    return name;
}

std::vector<double> TGrid::points() const
{
    std::vector<double> v(count);
    for (int i = 0; i < count; ++i) v[i] = t_min * std::pow(t_max / t_min, double(i) / double(count - 1));
    return v;
}

const std::vector<std::string>& recipe_names()
{
    static const std::vector<std::string> names{"spectrum", "theta", "zeta", "converge", "diagnose", "dynamical", "bounds"};
    return names;
}

json ExperimentConfig::to_json() const
{
    json co = json::array();
    for (auto z : metric.coeffs) co.push_back({z.real(), z.imag()});
    return {{"recipe", recipe},
            {"metric",
             {{"kind", metric.kind},
              {"degree", metric.degree},
              {"p", metric.p},
              {"chi", metric.chi.to_json()},
              {"coeffs", co},
              {"iterations", metric.iterations},
              {"samples", metric.samples}}},
            {"base", {{"kind", base.kind}, {"p", base.p}, {"scale", base.scale}}},
            {"grid", {{"u_min", disc.u_min}, {"u_max", disc.u_max}, {"n", disc.n_nodes}}},
            {"kmax", disc.k_max < 0 ? json(nullptr) : json(disc.k_max)},
            {"family", {{"chi", family.chi.to_json()}, {"p_min", family.p_min}, {"p_max", family.p_max}}},
            {"t_grid", {{"t_min", t_grid.t_min}, {"t_max", t_grid.t_max}, {"count", t_grid.count}}},
            {"eval", {{"u", eval.u}, {"t", eval.t}, {"duhamel_t", eval.duhamel_t}}},
            {"out", out},
            {"seed", seed}};
}

std::string ExperimentConfig::canonical() const { return to_json().dump(2) + "\n"; }

std::vector<ConfigIssue> config_issues(const json& j)
{
    std::vector<ConfigIssue> issues;
    try {
        validate(j);
    } catch (const ConfigError& e) {
        issues = e.issues();
    }
    return issues;
}

ExperimentConfig validate(const json& in)
{
    std::vector<ConfigIssue> issues;
    Reader r(issues);
    ExperimentConfig c;
    const json j = in.is_null() ? json::object() : in;
    if (!r.object(j, "", {"recipe", "metric", "base", "grid", "kmax", "family", "t_grid", "eval", "out", "seed"}))
        throw ConfigError(issues);

    r.str(j, "recipe", "", c.recipe);
    if (!contains(recipe_names(), c.recipe)) r.issue("recipe", "unknown recipe '" + c.recipe + "'");

    if (j.contains("metric") && r.object(j["metric"], "metric",
                                         {"kind", "degree", "p", "chi", "coeffs", "iterations", "samples"})) {
        const json& mj = j["metric"];
        r.str(mj, "kind", "metric", c.metric.kind);
        if (!contains(kMetricKinds, c.metric.kind)) r.issue("metric.kind", "unknown metric kind '" + c.metric.kind + "'");
        r.integer(mj, "degree", "metric", c.metric.degree, 0, 16);
        r.integer(mj, "p", "metric", c.metric.p, 1, 62);
        r.integer(mj, "iterations", "metric", c.metric.iterations, 0, 40);
        if (mj.contains("chi")) r.chi(mj["chi"], "metric.chi", c.metric.chi);
        if (mj.contains("coeffs")) {
            std::vector<std::complex<double>> co;
            bool good = mj["coeffs"].is_array();
            if (good)
                for (const auto& x : mj["coeffs"]) {
                    if (x.is_number())
                        co.emplace_back(x.get<double>(), 0.0);
                    else if (x.is_array() && x.size() == 2 && x[0].is_number() && x[1].is_number())
                        co.emplace_back(x[0].get<double>(), x[1].get<double>());
                    else
                        good = false;
                }
            if (!good)
                r.issue("metric.coeffs", "expected an array of numbers or [re, im] pairs");
            else if (co.size() < 3 || co.front() == std::complex<double>(0, 0))
                r.issue("metric.coeffs", "need a polynomial of degree >= 2 with nonzero leading coefficient");
            else
                c.metric.coeffs = co;
        }
        if (mj.contains("samples")) {
            const json& s = mj["samples"];
            if (!s.is_null() && !(s.is_object() && s.contains("grid") && s.contains("psi")))
                r.issue("metric.samples", "expected {grid, psi}");
            else
                c.metric.samples = s;
        }
    }
    if (c.metric.kind == "sampled" && c.metric.samples.is_null()) r.issue("metric.samples", "required for kind 'sampled'");
    if (c.metric.kind == "sqrt_kink" && c.metric.degree != 0) r.issue("metric.degree", "kink profile has degree 0");

    if (j.contains("base") && r.object(j["base"], "base", {"kind", "p", "scale"})) {
        const json& bj = j["base"];
        r.str(bj, "kind", "base", c.base.kind);
        if (!contains(kBaseKinds, c.base.kind)) r.issue("base.kind", "unknown base kind '" + c.base.kind + "'");
        if (r.number(bj, "p", "base", c.base.p) && !(c.base.p >= 1)) r.issue("base.p", "must be >= 1");
        if (r.number(bj, "scale", "base", c.base.scale) && !(c.base.scale > 0)) r.issue("base.scale", "must be > 0");
    }

    if (j.contains("grid") && r.object(j["grid"], "grid", {"u_min", "u_max", "n"})) {
        const json& gj = j["grid"];
        r.number(gj, "u_min", "grid", c.disc.u_min);
        r.number(gj, "u_max", "grid", c.disc.u_max);
        r.integer(gj, "n", "grid", c.disc.n_nodes, 16, 1 << 20);
    }
    if (!(c.disc.u_min < c.disc.u_max))
        r.issue("grid", "u_min must be < u_max");
    else if (!(c.disc.u_min < 0 && 0 < c.disc.u_max))
        r.issue("grid", "window must contain u = 0");

    if (j.contains("kmax") && !j["kmax"].is_null()) {
        int k = -1;
        if (r.integer(j, "kmax", "", k, 0, 512)) {
            if (k < c.metric.degree)
                r.issue("kmax", "must be >= the bundle degree");
            else
                c.disc.k_max = k;
        }
    }

    if (j.contains("family") && r.object(j["family"], "family", {"chi", "p_min", "p_max"})) {
        const json& fj = j["family"];
        if (fj.contains("chi")) r.chi(fj["chi"], "family.chi", c.family.chi);
        r.integer(fj, "p_min", "family", c.family.p_min, 1, 60);
        r.integer(fj, "p_max", "family", c.family.p_max, 1, 60);
    }
    if (c.family.p_max - c.family.p_min < 3) r.issue("family", "need at least 4 members (p_max - p_min >= 3)");
    if (c.family.chi.name == "table" && int(c.family.chi.table.size()) < c.family.p_max)
        r.issue("family.chi", "table shorter than p_max");
    else if (std::string why; !chi_increasing(c.family.chi, std::max(1, c.family.p_min - 1), c.family.p_max, why))
        r.issue("family.chi", "chi must be strictly increasing");
    if (c.metric.chi.name == "table" && int(c.metric.chi.table.size()) < c.metric.p)
        r.issue("metric.chi", "table shorter than metric.p");
    else if (std::string why; !chi_increasing(c.metric.chi, 1, c.metric.p, why))
        r.issue("metric.chi", "chi must be strictly increasing");

    if (j.contains("t_grid") && r.object(j["t_grid"], "t_grid", {"t_min", "t_max", "count"})) {
        const json& tj = j["t_grid"];
        r.number(tj, "t_min", "t_grid", c.t_grid.t_min);
        r.number(tj, "t_max", "t_grid", c.t_grid.t_max);
        r.integer(tj, "count", "t_grid", c.t_grid.count, 2, 100000);
    }
    if (!(c.t_grid.t_min > 0 && c.t_grid.t_min < c.t_grid.t_max)) r.issue("t_grid", "need 0 < t_min < t_max");

    if (j.contains("eval") && r.object(j["eval"], "eval", {"u", "t", "duhamel_t"})) {
        const json& ej = j["eval"];
        r.number(ej, "u", "eval", c.eval.u);
        if (r.number(ej, "duhamel_t", "eval", c.eval.duhamel_t) && !(c.eval.duhamel_t > 0))
            r.issue("eval.duhamel_t", "must be > 0");
        if (ej.contains("t")) {
            std::vector<double> ts;
            bool good = ej["t"].is_array() && !ej["t"].empty();
            if (good)
                for (const auto& x : ej["t"]) {
                    if (!x.is_number() || !(x.get<double>() > 0)) good = false;
                    else ts.push_back(x.get<double>());
                }
            if (good)
                c.eval.t = ts;
            else
                r.issue("eval.t", "expected a non-empty array of positive numbers");
        }
    }
    if (!(c.eval.u >= c.family.p_min && c.eval.u <= c.family.p_max))
        r.issue("eval.u", "must lie in [family.p_min, family.p_max]");

    r.str(j, "out", "", c.out);
    if (c.out.empty()) r.issue("out", "must not be empty");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer() || (j["seed"].is_number_integer() && !j["seed"].is_number_unsigned() && j["seed"].get<long long>() < 0))
            r.issue("seed", "expected a non-negative integer");
        else
            c.seed = j["seed"].get<std::uint64_t>();
    }

    if (c.metric.kind == "sampled" && !c.metric.samples.is_null()) {
        try {
            json s = c.metric.samples;
            profile_from_json({{"kind", "sampled"}, {"degree", c.metric.degree}, {"grid", s["grid"]}, {"psi", s["psi"]}});
        } catch (const std::exception& e) {
            r.issue("metric.samples", e.what());
        }
    }

    if (!issues.empty()) throw ConfigError(issues);
    return c;
}

BaseProfile build_base(const BaseSpec& b)
{
    BaseProfile w = b.kind == "tx" ? tx_base(b.p) : b.kind == "canonical_tx" ? canonical_tx_base() : fs_base();
    return b.scale == 1 ? w : scaled_base(w, b.scale);
}

MetricProfile build_metric(const ExperimentConfig& c)
{
    const auto& m = c.metric;
    if (m.kind == "fubini_study") return make_fubini_study(m.degree);
    if (m.kind == "pnorm") return make_pnorm(m.degree, m.chi.make(), m.p);
    if (m.kind == "canonical") return make_canonical(m.degree);
    if (m.kind == "sqrt_kink") return make_sqrt_kink();
    if (m.kind == "dynamical")
        return make_dynamical(m.coeffs, m.iterations, make_fubini_study(m.degree), c.disc.grid()).profile;
    if (m.kind == "sampled")
        return profile_from_json(
            {{"kind", "sampled"}, {"degree", m.degree}, {"grid", m.samples["grid"]}, {"psi", m.samples["psi"]}});
    throw ValidationError("metric.kind", "unknown metric kind '" + m.kind + "'");
}

RunResult run(const ExperimentConfig& c, std::ostream& log)
{
    RunResult R;
    Outputs o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        ensure_writable(c.out);
        if (c.recipe == "spectrum") recipe_spectrum(c, o, log);
        else if (c.recipe == "theta") recipe_theta(c, o, log);
        else if (c.recipe == "zeta") recipe_zeta(c, o, log);
        else if (c.recipe == "converge") recipe_converge(c, o, log);
        else if (c.recipe == "diagnose") recipe_diagnose(c, o, log);
        else if (c.recipe == "dynamical") recipe_dynamical(c, o, log);
        else if (c.recipe == "bounds") recipe_bounds(c, o, log);
        else throw ValidationError("recipe", "unknown recipe '" + c.recipe + "'");
    } catch (const ValidationError& e) {
        R.exit_code = 2;
        R.message = e.what();
        return R;
    } catch (const NumericalError& e) {
        o.fail(e.what());
    }
    for (const auto& [name, body] : o.files) {
        const fs::path p = fs::path(c.out) / name;
        std::ofstream f(p, std::ios::binary);
        f << body;
        if (!f) {
            R.exit_code = 2;
            R.message = "out: cannot write " + p.string();
            return R;
        }
        R.files.push_back(p.string());
    }
    R.summary = o.summary;
    R.summary["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    R.summary["failures"] = o.failures;
    if (!o.failures.empty()) {
        R.exit_code = 3;
        R.message = o.failures.front();
    }
    return R;
}

}  // namespace torsion
