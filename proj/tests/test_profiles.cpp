#include <cmath>
#include <random>

#include "doctest.h"

#include "torsion/profiles.hpp"

using namespace torsion;

namespace {

double pnorm_closed(int m, double chi, double u)
{
    const double x = -chi * u;
    const double l = x > 30 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    return -(2.0 * m / chi) * l;
}

// the gradient of psi_p - psi_{p-1} peaks in a layer of width ~ 1/chi(p) around u = 0
UGrid layer_grid() { return {-1.0, 1.0, 100001}; }

UGrid dense_grid() { return {-12.0, 12.0, 4001}; }

}  // namespace

TEST_CASE("fubini-study closed form")
{
    const auto p0 = make_fubini_study(0);
    for (double u : {-5.0, 0.0, 3.0}) CHECK(p0(u) == 0.0);
    CHECK(make_fubini_study(1)(0.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
    const auto p2 = make_fubini_study(2);
    for (double u : {-10.0, -20.0}) CHECK(std::abs(p2(u) - 4 * u) < 1e-7);
    CHECK_THROWS_AS(make_fubini_study(-1), ValidationError);
}

TEST_CASE("canonical metric")
{
    for (int m : {0, 1, 3}) {
        const auto c = make_canonical(m);
        CHECK(c(1.0) == 0.0);
        CHECK(c(-1.0) == -2.0 * m);
        CHECK(concavity_report(c, dense_grid()).is_concave_on_grid);
    }
}

TEST_CASE("pnorm profile against its closed form and the canonical limit")
{
    const Chi chi = Chi::pow2();
    for (int m : {1, 2})
        for (int p : {2, 4, 6}) {
            const auto prof = make_pnorm(m, chi, p);
            const double c = std::ldexp(1.0, p);
            const auto can = make_canonical(m);
            double sup = 0, at = 0;
            const UGrid g = dense_grid();
            for (int i = 0; i < g.n; ++i) {
                const double u = g.at(i);
                CHECK(prof(u) == doctest::Approx(pnorm_closed(m, c, u)).epsilon(1e-13));
                const double d = std::abs(prof(u) - can(u));
                if (d > sup) {
                    sup = d;
                    at = u;
                }
            }
            CHECK(sup == doctest::Approx(2.0 * m / c * std::log(2.0)).epsilon(1e-12));
            CHECK(at == 0.0);
        }
    const auto far = make_pnorm(1, chi, 25);
    const auto can = make_canonical(1);
    const UGrid g = dense_grid();
    double sup = 0;
    for (int i = 0; i < g.n; ++i) sup = std::max(sup, std::abs(far(g.at(i)) - can(g.at(i))));
    CHECK(sup < 1e-6);
}

TEST_CASE("chi maps are validated")
{
    CHECK_THROWS_AS(Chi::from_table({1, 4, 3, 8}, 1), ValidationError);
    try {
        Chi::from_table({2, 2, 4}, 1);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.path() == "family.chi");
    }
    CHECK_NOTHROW(Chi::from_table({1, 2, 5, 9}, 1));
}

TEST_CASE("pnorm ratio bound and gradient lower bound")
{
    for (int m : {1, 2, 3}) {
        std::vector<MetricProfile> fam;
        for (int p = 1; p <= 9; ++p) fam.push_back(make_pnorm(m, Chi::pow2(), p));
        const auto D = diagnostics(fam, 1, fs_base(), layer_grid());
        for (std::size_t i = 0; i < D.index.size(); ++i) {
            const int p = D.index[i];
            const double a = std::ldexp(1.0, p - 1), b = std::ldexp(1.0, p);
            CHECK(D.ratio_norms[i] <= pnorm_ratio_bound(m, a, b));
            CHECK(D.grad_norms[i] >= pnorm_grad_lower_bound(m, a, b) * (1 - 1e-9));
        }
    }
}

TEST_CASE("gradient norms: linear chi decays, pow2 chi does not")
{
    std::vector<MetricProfile> lin, pw;
    for (int p = 2; p <= 40; ++p) lin.push_back(make_pnorm(1, Chi::linear(), p));
    for (int p = 2; p <= 12; ++p) pw.push_back(make_pnorm(1, Chi::pow2(), p));
    const auto dl = diagnostics(lin, 2, fs_base(), UGrid{-12.0, 12.0, 20001});
    const auto dp = diagnostics(pw, 2, fs_base(), layer_grid());
    CHECK(dl.grad_norms.back() < 0.1 * dl.grad_norms.front());
    for (std::size_t i = 1; i < dl.grad_norms.size(); ++i) CHECK(dl.grad_norms[i] <= dl.grad_norms[i - 1] * (1 + 1e-9));
    // tail stays above e^{-1} m / 2
    for (std::size_t i = 0; i < dp.grad_norms.size(); ++i) CHECK(dp.grad_norms[i] > std::exp(-1.0) / 2);
}

TEST_CASE("diagnostics entries are non-negative and sum_sqrt_ratio accumulates")
{
    std::vector<MetricProfile> fam;
    for (int p = 2; p <= 8; ++p) fam.push_back(make_pnorm(2, Chi::pow2(), p));
    const auto D = diagnostics(fam, 2, fs_base(), dense_grid(), {2.5, 4.5, 7.0});
    double acc = 0;
    for (std::size_t i = 0; i < D.index.size(); ++i) {
        CHECK(D.ratio_norms[i] >= 0);
        CHECK(D.grad_norms[i] >= 0);
        acc += std::sqrt(D.ratio_norms[i]);
        CHECK(D.sum_sqrt_ratio[i] == doctest::Approx(acc).epsilon(1e-14));
    }
    // pi_E stays bounded along the pow2 family
    for (double v : D.pi_E) CHECK((v >= 0 && v < 10));
    for (double v : D.delta_E) CHECK(v >= 0);
}

TEST_CASE("dynamical metrics")
{
    const UGrid g{-12.0, 12.0, 1024};
    const auto fs1 = make_fubini_study(1);
    SUBCASE("n = 0 returns the base samples bit for bit")
    {
        const auto r = make_dynamical({1.0, 0.0, 0.0}, 0, fs1, g);
        const auto a = sample(r.profile, g), b = sample(fs1, g);
        CHECK(a == b);
    }
    SUBCASE("z^2 converges to the canonical metric, error at least halving")
    {
        const auto can = make_canonical(1);
        double prev = 1e300;
        for (int n : {1, 2, 4, 8, 20}) {
            const auto v = sample(make_dynamical({1.0, 0.0, 0.0}, n, fs1, g).profile, g);
            double e = 0;
            for (int i = 0; i < g.n; ++i) e = std::max(e, std::abs(v[i] - can(g.at(i))));
            CHECK(e <= prev);
            prev = e;
            if (n == 20) CHECK(e < 1e-6);
        }
    }
    SUBCASE("z^2 - 2 gradient at the fixed point 2")
    {
        for (int n = 1; n <= 10; ++n) {
            const double got = std::abs(dynamical_dlog({1.0, 0.0, -2.0}, n, fs1, 2.0));
            const double want = std::ldexp(1.0, n + 1) / 5;
            CHECK(std::abs(got - want) / want < 1e-9);
            const double prev = std::abs(dynamical_dlog({1.0, 0.0, -2.0}, n - 1, fs1, 2.0));
            // canonical TX weight at |z| = 2: h^{-1/2} = 4
            CHECK(std::abs(4 * (got - prev) - 0.8 * std::ldexp(1.0, n)) < 1e-9 * std::ldexp(1.0, n));
        }
    }
}

TEST_CASE("blending with a cutoff")
{
    const UGrid g{-6.0, 6.0, 2001};
    const auto can = make_canonical(1);
    std::vector<MetricProfile> seq;
    for (int p = 2; p <= 7; ++p) seq.push_back(make_pnorm(1, Chi::pow2(), p));
    const auto zero = blend_metrics(can, seq, Cutoff::constant_value(0.0), g);
    const auto one = blend_metrics(can, seq, Cutoff::constant_value(1.0), g);
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (double u : {-3.0, 0.0, 0.4, 2.0}) {
            CHECK(zero[i](u) == seq[i](u));
            CHECK(one[i](u) == can(u));
        }
    Cutoff cut;
    cut.r = 0.5;
    cut.R = 2.0;
    const auto bl = blend_metrics(can, seq, cut, g);
    for (std::size_t i = 1; i < seq.size(); ++i) {
        double s_bl = 0, s_raw = 0;
        for (int j = 0; j < g.n; ++j) {
            const double u = g.at(j);
            s_bl = std::max(s_bl, std::abs(bl[i](u) - bl[i - 1](u)));
            s_raw = std::max(s_raw, std::abs(seq[i](u) - seq[i - 1](u)));
        }
        CHECK(s_bl <= s_raw * (1 + 1e-12));
    }
    Cutoff bad;
    bad.custom = [](double) { return 0.3; };
    CHECK_THROWS_AS(blend_metrics(can, seq, bad, g), ValidationError);
}

TEST_CASE("continuous interpolation of a discrete family")
{
    std::vector<MetricProfile> fam;
    for (int p = 2; p <= 6; ++p) fam.push_back(make_pnorm(1, Chi::pow2(), p));
    const ContinuousFamily H(fam, 2);
    for (double x : {-4.0, -0.3, 0.0, 1.7}) {
        CHECK(H.eval(2.0)(x) == fam[0](x));
        CHECK(H.eval(4.0)(x) == fam[2](x));
        const double v = H.eval(2.5)(x);
        CHECK(v >= std::min(fam[0](x), fam[1](x)) - 1e-15);
        CHECK(v <= std::max(fam[0](x), fam[1](x)) + 1e-15);
    }
    // |d/du log H| <= max rho' * sup |h_{n+1}/h_n - 1|
    const UGrid g{-10.0, 10.0, 4001};
    for (double u : {2.3, 2.5, 3.7, 5.2}) {
        const int n = int(std::floor(u));
        double sup_ratio = 0, sup_d = 0;
        for (int i = 0; i < g.n; ++i) {
            const double x = g.at(i);
            sup_ratio = std::max(sup_ratio, std::abs(std::expm1(H.member(n + 1)(x) - H.member(n)(x))));
            sup_d = std::max(sup_d, std::abs(H.d_du_log(u, x)));
        }
        CHECK(sup_d <= smoothstep_dmax * sup_ratio * (1 + 1e-12));
    }
}

TEST_CASE("log ratio lemma")
{
    const double eps = 0.3;
    auto r = log_bound_check({1.0, 1.0}, eps);
    CHECK(r.pass);
    CHECK(r.max_violation <= 0);
    r = log_bound_check({1 + eps / 2}, eps);
    CHECK(r.pass);
    CHECK(r.min_slack > 0);
    CHECK_THROWS_AS(log_bound_check({1.0}, 0.5), ValidationError);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> d(-0.399, 0.399);
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> phi(16);
        for (auto& f : phi) f = 1 + d(rng);
        CHECK(log_bound_check(phi, 0.4).pass);
    }
}

TEST_CASE("concavity of positive metrics")
{
    const UGrid g = dense_grid();
    auto fs = concavity_report(make_fubini_study(2), g);
    CHECK(fs.is_concave_on_grid);
    CHECK(fs.zero_derivative_at_pole);
    for (int p = 1; p <= 8; ++p) CHECK(concavity_report(make_pnorm(2, Chi::pow2(), p), g).is_concave_on_grid);
    const auto diff = profile_difference(make_pnorm(1, Chi::pow2(), 2), make_pnorm(1, Chi::pow2(), 5));
    const auto dr = concavity_report(diff, g);
    CHECK(dr.difference_of_concave);
    CHECK_FALSE(dr.is_concave_on_grid);
}

TEST_CASE("profile json round trip")
{
    const UGrid g{-8.0, 8.0, 257};
    const auto p = make_pnorm(2, Chi::pow2(), 3);
    const json j = profile_to_json(p, g);
    CHECK(j["kind"] == p.kind);
    CHECK(j["psi"].size() == 257);
    const auto q = profile_from_json(j);
    for (int i = 0; i < g.n; ++i) CHECK(q(g.at(i)) == doctest::Approx(p(g.at(i))).epsilon(1e-13));
    CHECK(profile_to_json(q, g)["psi"] == j["psi"]);
    json bad = j;
    bad.erase("psi");
    CHECK_THROWS_AS(profile_from_json(bad), ValidationError);
}

TEST_CASE("base weights")
{
    const auto w = fs_base();
    for (double u : {0.3, 2.0, 7.0}) CHECK(w(u) == doctest::Approx(w(-u)).epsilon(1e-14));
    // (1+|z|^2)^{-2} |z|^2 at |z| = e^{-u}
    for (double u : {-1.0, 0.5}) CHECK(w(u) == doctest::Approx(std::exp(-2 * u) / std::pow(1 + std::exp(-2 * u), 2)).epsilon(1e-14));
    CHECK(tx_base(2)(0.7) == doctest::Approx(w(0.7)).epsilon(1e-14));
    CHECK(scaled_base(w, 3.0)(0.2) == doctest::Approx(3 * w(0.2)).epsilon(1e-15));
}
