#include "torsion/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <boost/math/tools/minima.hpp>

namespace torsion {

int sturm_count(const ModeOperator& op, double sigma)
{
    const auto& Q = op.Q;
    const auto& M = op.M;
    const int n = Q.size();
    const double pivmin = 1e-300;
    int c = 0;
    double d = Q.d[0] - sigma * M.d[0];
    if (std::abs(d) < pivmin) d = -pivmin;
    if (d < 0) ++c;
    for (int i = 1; i < n; ++i) {
        const double off = Q.e[i - 1] - sigma * M.e[i - 1];
        d = (Q.d[i] - sigma * M.d[i]) - off * (off / d);
        if (std::abs(d) < pivmin) d = -pivmin;
        if (d < 0) ++c;
    }
    return c;
}

std::vector<double> eigenvalues_below(const ModeOperator& op, double upper, int max_count)
{
    const int total = std::min(sturm_count(op, upper), max_count);
    std::vector<double> out(total);
    if (total == 0) return out;
    const double floor = -1e-6 * std::max(1.0, std::abs(upper));
    if (sturm_count(op, floor) > 0) throw NumericalError("negative eigenvalue: stiffness form is not semidefinite");
    std::vector<double> lo(total, floor), hi(total, upper);
    const double abs_tol = 1e-15 * std::max(1.0, std::abs(upper));
    for (int j = 0; j < total; ++j) {
        for (int it = 0; it < 200; ++it) {
            const double a = lo[j], b = hi[j];
            if (b - a <= std::max(abs_tol, 4e-16 * std::max(std::abs(a), std::abs(b)))) break;
            const double mid = 0.5 * (a + b);
            const int c = sturm_count(op, mid);
            for (int i = j; i < total; ++i) {
                if (c > i)
                    hi[i] = std::min(hi[i], mid);
                else
                    lo[i] = std::max(lo[i], mid);
            }
        }
        out[j] = 0.5 * (lo[j] + hi[j]);
        if (j + 1 < total) lo[j + 1] = std::max(lo[j + 1], lo[j]);
    }
    return out;
}

std::vector<double> lowest_eigenvalues(const ModeOperator& op, int n)
{
    n = std::min(n, op.size());
    double x = 1.0;
    while (sturm_count(op, x) < n) {
        x *= 4;
        if (x > 1e30) throw NumericalError("could not bracket the requested eigenvalues");
    }
    return eigenvalues_below(op, x, n);
}

double eigen_residual(const ModeOperator& op, double lambda, const std::vector<double>& x)
{
    auto qx = op.Q.apply(x), mx = op.M.apply(x);
    double r = 0, s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        r += (qx[i] - lambda * mx[i]) * (qx[i] - lambda * mx[i]);
        s += mx[i] * mx[i];
    }
    return std::sqrt(r / s);
}

std::vector<double> inverse_iteration(const ModeOperator& op, double lambda, int max_sweeps)
{
    const int n = op.size();
    std::mt19937_64 rng(0x5eed + op.k);
    std::uniform_real_distribution<double> U(0.5, 1.5);
    std::vector<double> x(n);
    for (auto& v : x) v = U(rng);
    const double tol = 1e-10 * std::max(1.0, std::abs(lambda));
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        auto y = solve_shifted(op.Q, op.M, lambda, op.M.apply(x));
        double nrm = std::sqrt(op.M.quad(y));
        if (!(nrm > 0) || !std::isfinite(nrm)) throw NumericalError("inverse iteration breakdown");
        for (auto& v : y) v /= nrm;
        // fix sign: largest component positive
        auto it = std::max_element(y.begin(), y.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
        if (*it < 0)
            for (auto& v : y) v = -v;
        x = std::move(y);
        if (sweep >= 1 && eigen_residual(op, lambda, x) < tol) return x;
    }
    if (eigen_residual(op, lambda, x) < 1e-9 * std::max(1.0, std::abs(lambda))) return x;
    throw NumericalError("inverse iteration did not converge in " + std::to_string(max_sweeps) + " sweeps");
}

ModeSpectrum solve_mode(const ModeOperator& op, int n_eigs, bool vectors)
{
    ModeSpectrum s;
    s.k = op.k;
    s.lambdas = lowest_eigenvalues(op, n_eigs);
    if (vectors)
        for (double l : s.lambdas) s.vectors.push_back(inverse_iteration(op, l));
    return s;
}

std::vector<double> Spectrum::positive() const
{
    std::vector<double> v;
    for (const auto& e : entries)
        if (!e.is_kernel) v.push_back(e.lambda);
    return v;
}

std::vector<int> Spectrum::group_sizes() const
{
    std::vector<int> g;
    for (const auto& e : entries) {
        if (e.group >= int(g.size())) g.resize(e.group + 1, 0);
        ++g[e.group];
    }
    return g;
}

Spectrum merge(const std::vector<ModeSpectrum>& modes, const SpectrumOptions& opt)
{
    Spectrum S;
    S.kernel_threshold = opt.kernel_threshold;
    for (const auto& m : modes)
        for (std::size_t i = 0; i < m.lambdas.size(); ++i) S.entries.push_back({m.lambdas[i], m.k, int(i), 0, false});
    std::stable_sort(S.entries.begin(), S.entries.end(), [](const SpectrumEntry& a, const SpectrumEntry& b) {
        return a.lambda < b.lambda || (a.lambda == b.lambda && a.mode < b.mode);
    });
    if (S.entries.empty()) return S;
    const double top = S.entries.back().lambda;
    double first = 0;
    for (const auto& e : S.entries)
        if (e.lambda > 1e-6 * top) {
            first = e.lambda;
            break;
        }
    S.first_nonzero = first;
    double kmax = 0;
    for (auto& e : S.entries) {
        e.is_kernel = e.lambda < opt.kernel_threshold * first;
        if (e.is_kernel) {
            ++S.kernel_dim;
            kmax = std::max(kmax, std::abs(e.lambda));
        }
    }
    S.gap_ratio = S.kernel_dim == 0 ? std::numeric_limits<double>::infinity()
                                    : (kmax > 0 ? first / kmax : std::numeric_limits<double>::infinity());
    int g = S.kernel_dim > 0 ? 0 : -1;
    double start = -1;
    for (auto& e : S.entries) {
        if (e.is_kernel) {
            e.group = 0;
            continue;
        }
        if (start < 0 || e.lambda - start > opt.merge_rel_tol * e.lambda) {
            ++g;
            start = e.lambda;
        }
        e.group = g;
    }
    S.modes = modes;
    return S;
}

namespace {

double weyl_coefficient(const BaseProfile& base, const Discretization& d)
{
    // 2 int w du (normalized area / 4 pi)
    const UGrid g = d.grid();
    const double h = g.h();
    double s = 0;
    for (int i = 0; i + 1 < g.n; ++i)
        for (int j = 0; j < 3; ++j) s += Gauss3::w[j] * h * base(g.at(i) + Gauss3::s[j] * h);
    return 2 * s;
}

}  // namespace

Spectrum compute_spectrum(const MetricProfile& psi, const BaseProfile& base, const Discretization& d,
                          const SpectrumOptions& opt)
{
    auto ops = assemble_operator_family(psi, base, d);
    const int K = d.kmax_for(psi.degree);
    std::vector<ModeSpectrum> modes;
    double cut = std::numeric_limits<double>::infinity();
    if (opt.n_per_mode <= 0) {
        cut = std::min(lowest_eigenvalues(ops.front(), 1)[0], lowest_eigenvalues(ops.back(), 1)[0]);
        for (const auto& op : ops) {
            ModeSpectrum m;
            m.k = op.k;
            m.lambdas = eigenvalues_below(op, cut);
            if (opt.vectors)
                for (double l : m.lambdas) m.vectors.push_back(inverse_iteration(op, l));
            modes.push_back(std::move(m));
        }
    } else {
        for (const auto& op : ops) modes.push_back(solve_mode(op, opt.n_per_mode, opt.vectors));
    }
    Spectrum S = merge(modes, opt);
    S.lambda_cut = cut;
    S.complete = std::isfinite(cut);
    S.weyl = weyl_coefficient(base, d);
    S.meta = {{"profile", psi.kind},
              {"degree", psi.degree},
              {"params", psi.params},
              {"base", base.kind},
              {"grid", {{"u_min", d.u_min}, {"u_max", d.u_max}, {"n", d.n_nodes}}},
              {"k_max", K},
              {"lambda_cut", std::isfinite(cut) ? json(cut) : json(nullptr)}};
    return S;
}

Spectrum spectrum_from_values(const std::vector<double>& lambdas, double weyl, double cut)
{
    ModeSpectrum m;
    m.lambdas = lambdas;
    std::sort(m.lambdas.begin(), m.lambdas.end());
    SpectrumOptions opt;
    opt.merge_rel_tol = 1e-12;
    Spectrum S = merge({m}, opt);
    S.weyl = weyl;
    S.lambda_cut = cut;
    S.complete = std::isfinite(cut);
    S.modes.clear();
    return S;
}

std::string spectrum_csv(const Spectrum& s)
{
    std::ostringstream os;
    os << "index,lambda,mode,multiplicity_group,is_kernel\n";
    for (std::size_t i = 0; i < s.entries.size(); ++i) {
        const auto& e = s.entries[i];
        os << i << ',' << fmt17(e.lambda) << ',' << e.mode << ',' << e.group << ',' << (e.is_kernel ? 1 : 0) << '\n';
    }
    return os.str();
}

double rayleigh(const ModeOperator& op, const std::vector<double>& x)
{
    const double m = op.M.quad(x);
    if (!(m > 0)) throw ValidationError("x", "zero vector");
    return op.Q.quad(x) / m;
}

Equivalence equivalence(const MetricProfile& p, const BaseProfile& bp, const MetricProfile& q,
                        const BaseProfile& bq, const UGrid& grid)
{
    Equivalence E;
    E.q_lo = E.m_lo = std::numeric_limits<double>::infinity();
    E.q_hi = E.m_hi = 0;
    const double h = grid.h();
    for (int i = 0; i + 1 < grid.n; ++i)
        for (int j = 0; j < 3; ++j) {
            const double u = grid.at(i) + Gauss3::s[j] * h;
            const double r = std::exp(p(u) - q(u));
            const double rm = r * bp(u) / bq(u);
            E.q_lo = std::min(E.q_lo, r);
            E.q_hi = std::max(E.q_hi, r);
            E.m_lo = std::min(E.m_lo, rm);
            E.m_hi = std::max(E.m_hi, rm);
        }
    return E;
}

Lambda1Table lambda1_family(const std::vector<Spectrum>& spectra, const std::vector<int>& labels,
                            const std::vector<MetricProfile>& profiles, const std::vector<BaseProfile>& bases,
                            const UGrid& grid)
{
    Lambda1Table T;
    T.labels = labels;
    T.min_lambda1 = std::numeric_limits<double>::infinity();
    for (const auto& s : spectra) {
        if (!(s.first_nonzero > 0)) throw ValidationError("spectra", "spectrum without a nonzero eigenvalue");
        T.lambda1.push_back(s.first_nonzero);
        T.min_lambda1 = std::min(T.min_lambda1, s.first_nonzero);
    }
    for (std::size_t a = 0; a < spectra.size(); ++a)
        for (std::size_t b = a + 1; b < spectra.size(); ++b) {
            // lambda_q / lambda_p with q = b, p = a
            Equivalence E = equivalence(profiles[b], bases[b], profiles[a], bases[a], grid);
            Lambda1Pair P;
            P.p = labels[a];
            P.q = labels[b];
            P.ratio = T.lambda1[b] / T.lambda1[a];
            P.lo = E.lo() * (1 - 1e-9);
            P.hi = E.hi() * (1 + 1e-9);
            P.pass = P.ratio >= P.lo && P.ratio <= P.hi;
            T.all_pass = T.all_pass && P.pass;
            T.pairs.push_back(P);
        }
    return T;
}

CheegerReport cheeger(const BaseProfile& base, const UGrid& grid, double lambda1, double tol)
{
    const double h = grid.h();
    std::vector<double> cum(grid.n, 0.0);
    for (int i = 0; i + 1 < grid.n; ++i) {
        double s = 0;
        for (int j = 0; j < 3; ++j) s += Gauss3::w[j] * h * base(grid.at(i) + Gauss3::s[j] * h);
        cum[i + 1] = cum[i] + s;
    }
    const double total = cum.back();
    if (!(total > 0) || !std::isfinite(total)) throw ValidationError("base", "degenerate volume");
    auto W = [&](double c) {
        int i = std::min(grid.n - 2, std::max(0, int(std::floor((c - grid.u_min) / h))));
        const double a = grid.at(i), len = c - a;
        double s = 0;
        for (int j = 0; j < 3; ++j) s += Gauss3::w[j] * len * base(a + Gauss3::s[j] * len);
        return cum[i] + s;
    };
    auto hc = [&](double c) {
        const double lo = W(c), hi = total - lo;
        return std::sqrt(base(c)) / (2 * std::min(lo, hi));
    };
    int best = 1;
    double bv = hc(grid.at(1));
    for (int i = 2; i + 1 < grid.n; ++i) {
        double v = hc(grid.at(i));
        if (v < bv) {
            bv = v;
            best = i;
        }
    }
    auto r = boost::math::tools::brent_find_minima(hc, grid.at(best - 1), grid.at(best + 1), 50);
    CheegerReport R;
    R.c_star = r.second < bv ? r.first : grid.at(best);
    R.h = std::min(r.second, bv);
    R.area = 8 * M_PI * total;
    R.lower_bound = R.h * R.h / 4;
    R.lambda1 = lambda1;
    if (std::isfinite(lambda1)) {
        R.checked = true;
        R.pass = lambda1 >= R.lower_bound * (1 - tol);
    }
    return R;
}

double tx_metric_ratio(double q, double p, double x)
{
    // (1+x^p)^{4/p} / (1+x^q)^{4/q}
    const double lx = std::log(x);
    return std::exp((4 / p) * log1pexp(p * lx) - (4 / q) * log1pexp(q * lx));
}

}  // namespace torsion
