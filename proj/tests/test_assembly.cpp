#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"

#include "torsion/assembly.hpp"
#include "torsion/spectrum.hpp"

using namespace torsion;

namespace {

Eigen::MatrixXd dense(const Tridiag& T)
{
    const int n = T.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) A(i, i) = T.d[i];
    for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = A(i + 1, i) = T.e[i];
    return A;
}

double norm(const std::vector<double>& v)
{
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

// fs(m) plus a few smooth bumps, sampled
MetricProfile random_profile(std::mt19937_64& rng, int m, const UGrid& g)
{
    std::uniform_real_distribution<double> amp(-0.5, 0.5), ctr(-4, 4), wid(0.5, 2);
    const auto fs = make_fubini_study(m);
    std::vector<double> a(3), c(3), s(3);
    for (int j = 0; j < 3; ++j) {
        a[j] = amp(rng);
        c[j] = ctr(rng);
        s[j] = wid(rng);
    }
    std::vector<double> v(g.n);
    for (int i = 0; i < g.n; ++i) {
        const double u = g.at(i);
        v[i] = fs(u);
        for (int j = 0; j < 3; ++j) v[i] += a[j] * std::exp(-(u - c[j]) * (u - c[j]) / (s[j] * s[j]));
    }
    return make_sampled(m, g, v);
}

}  // namespace

TEST_CASE("flat profile: constants span the kernel, stiffness is the halved Laplacian")
{
    const Discretization d{-6.0, 6.0, 201, 4};
    MetricProfile flat = make_fubini_study(0);
    const auto op = reduce_mode(flat, fs_base(), 0, d);
    const std::vector<double> ones(op.size(), 1.0);
    for (double r : op.Q.apply(ones)) CHECK(std::abs(r) < 1e-13);
    const double h = d.grid().h();
    for (int i = 1; i + 1 < op.size(); ++i) {
        CHECK(op.Q.d[i] == doctest::Approx(1.0 / h).epsilon(1e-12));
        CHECK(op.Q.e[i] == doctest::Approx(-0.5 / h).epsilon(1e-12));
    }
}

TEST_CASE("sampled e^{-ku} is a null vector of Q_k for the Fubini-Study metric on O(1)")
{
    const Discretization d;
    const auto fs1 = make_fubini_study(1);
    for (int k : {0, 1}) {
        const auto op = reduce_mode(fs1, fs_base(), k, d);
        const auto x = op.interpolate([k](double u) { return std::exp(-k * u); });
        CHECK(norm(op.Q.apply(x)) / norm(op.M.apply(x)) < 1e-8);
    }
}

TEST_CASE("random profiles give symmetric pencils with M positive definite and Q semidefinite")
{
    std::mt19937_64 rng(11);
    const Discretization d{-10.0, 10.0, 160, 6};
    for (int trial = 0; trial < 20; ++trial) {
        const int m = trial % 3;
        const auto prof = random_profile(rng, m, d.grid());
        for (int k : {-2, 0, 1, 3}) {
            const auto op = reduce_mode(prof, fs_base(), k, d);
            const auto Q = dense(op.Q), M = dense(op.M);
            CHECK((Q - Q.transpose()).norm() == 0.0);
            CHECK(Eigen::LLT<Eigen::MatrixXd>(M).info() == Eigen::Success);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10 * es.eigenvalues().maxCoeff());
        }
    }
}

TEST_CASE("operator family fan-out and the k <-> -k symmetry of the trivial bundle")
{
    const Discretization d{-14.0, 14.0, 1024, 5};
    const auto ops = assemble_operator_family(make_fubini_study(0), fs_base(), d);
    CHECK(ops.size() == 11);
    for (int k = 1; k <= 5; ++k) {
        const auto a = lowest_eigenvalues(ops[5 + k], 8), b = lowest_eigenvalues(ops[5 - k], 8);
        for (int j = 0; j < 8; ++j) CHECK(std::abs(a[j] - b[j]) <= 1e-10 * std::max(1.0, a[j]));
    }
}

TEST_CASE("kernel vectors of O(2) live in modes 0, 1, 2")
{
    const Discretization d{-14.0, 14.0, 2048, 6};
    const auto ops = assemble_operator_family(make_fubini_study(2), fs_base(), d);
    for (const auto& op : ops) {
        const double l0 = lowest_eigenvalues(op, 1)[0];
        if (op.k >= 0 && op.k <= 2)
            CHECK(l0 < 1e-8);
        else
            CHECK(l0 > 1e-2);
    }
}

TEST_CASE("strong form")
{
    const UGrid g{-8.0, 8.0, 801};
    const int nt = 16;
    std::vector<double> psi(g.n);
    const auto fs1 = make_fubini_study(1);
    for (int i = 0; i < g.n; ++i) psi[i] = fs1(g.at(i));
    SUBCASE("constant field")
    {
        PolarField f{g, nt, std::vector<std::complex<double>>(std::size_t(g.n) * nt, {2.5, -1.0})};
        const auto r = apply_strong_form(psi, fs_base(), f);
        for (auto z : r.f) CHECK(std::abs(z) == 0.0);
    }
    SUBCASE("coarse stencils are rejected")
    {
        PolarField f{UGrid{-1, 1, 2}, 2, std::vector<std::complex<double>>(4)};
        CHECK_THROWS_AS(apply_strong_form({0, 0}, fs_base(), f), ValidationError);
    }
}

TEST_CASE("weak eigenvector satisfies the strong form in the interior")
{
    const Discretization d;  // n = 4096
    const auto fs0 = make_fubini_study(0);
    const auto op = reduce_mode(fs0, fs_base(), 0, d);
    const auto ms = solve_mode(op, 2, true);
    const double lambda = ms.lambdas[1];
    const auto& v = ms.vectors[1];
    REQUIRE(int(v.size()) == d.n_nodes);
    const UGrid g = d.grid();
    const int nt = 4;
    PolarField f{g, nt, std::vector<std::complex<double>>(std::size_t(g.n) * nt)};
    for (int i = 0; i < g.n; ++i)
        for (int l = 0; l < nt; ++l) f.f[std::size_t(i) * nt + l] = v[i];
    const std::vector<double> psi(g.n, 0.0);
    auto r = apply_strong_form(psi, fs_base(), f);
    for (std::size_t i = 0; i < r.f.size(); ++i) r.f[i] -= lambda * f.f[i];
    const double res = std::sqrt(polar_norm2(r, psi, fs_base(), -6, 6) / polar_norm2(f, psi, fs_base(), -6, 6));
    CHECK(res < 1e-3);
}

TEST_CASE("Green identity on decaying fields")
{
    const UGrid g;
    SmoothField cst{[](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
    // boundary terms at the window edges are O(e^{-24})
    CHECK(std::abs(green_identity_check(cst, sech2_field(), g)) < 1e-10);
    CHECK(std::abs(green_identity_check(gaussian_field(1, 0, 1), sech2_field(), g)) < 1e-6);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> a(-2, 2), c(-3, 3), s(0.4, 2.5);
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        const auto phi = sum_fields({gaussian_field(a(rng), c(rng), s(rng)), gaussian_field(a(rng), c(rng), s(rng))});
        const auto psi = sum_fields({gaussian_field(a(rng), c(rng), s(rng)), sech2_field()});
        worst = std::max(worst, std::abs(green_identity_check(phi, psi, g)));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("monotone profiles give monotone stiffness forms")
{
    const Discretization d{-12.0, 12.0, 300, 4};
    std::mt19937_64 rng(3);
    std::normal_distribution<double> N(0, 1);
    for (int p = 2; p < 7; ++p) {
        const auto a = make_pnorm(1, Chi::pow2(), p), b = make_pnorm(1, Chi::pow2(), p + 1);
        for (int k : {-1, 0, 1, 2}) {
            const auto qa = reduce_mode(a, fs_base(), k, d), qb = reduce_mode(b, fs_base(), k, d);
            REQUIRE(qa.size() == qb.size());
            for (int t = 0; t < 20; ++t) {
                std::vector<double> x(qa.size());
                for (auto& v : x) v = N(rng);
                CHECK(qa.Q.quad(x) <= qb.Q.quad(x) * (1 + 1e-12));
            }
        }
    }
}

TEST_CASE("uniformly equivalent metrics give equivalent forms")
{
    const Discretization d{-12.0, 12.0, 300, 4};
    std::mt19937_64 rng(4);
    std::normal_distribution<double> N(0, 1);
    const auto p = make_pnorm(2, Chi::pow2(), 3), q = make_pnorm(2, Chi::pow2(), 6);
    const auto E = equivalence(p, fs_base(), q, fs_base(), d.grid());
    for (int k : {-3, 0, 1, 2, 4}) {
        const auto op = reduce_mode(p, fs_base(), k, d), oq = reduce_mode(q, fs_base(), k, d);
        for (int t = 0; t < 30; ++t) {
            std::vector<double> x(op.size());
            for (auto& v : x) v = N(rng);
            const double mp = op.M.quad(x), mq = oq.M.quad(x), qp = op.Q.quad(x), qq = oq.Q.quad(x);
            CHECK(mp >= E.m_lo * mq * (1 - 1e-12));
            CHECK(mp <= E.m_hi * mq * (1 + 1e-12));
            CHECK(qp >= E.q_lo * qq * (1 - 1e-12));
            CHECK(qp <= E.q_hi * qq * (1 + 1e-12));
        }
    }
}

TEST_CASE("first sphere eigenvalue converges at second order")
{
    std::vector<double> err;
    for (int n : {256, 512, 1024, 2048}) {
        const Discretization d{-14.0, 14.0, n, 2};
        const auto op = reduce_mode(make_fubini_study(0), fs_base(), 0, d);
        err.push_back(std::abs(lowest_eigenvalues(op, 2)[1] - 2.0));
    }
    for (std::size_t i = 1; i < err.size(); ++i) {
        const double rate = std::log2(err[i - 1] / err[i]);
        CHECK(rate > 1.8);
        CHECK(rate < 2.2);
    }
}

TEST_CASE("refinement: kink profile diverges, round profile stays put")
{
    const auto kink = strong_form_divergence(make_sqrt_kink(), fs_base());
    CHECK(kink.monotone);
    CHECK(kink.growth > 10);
    const auto fs = strong_form_divergence(make_fubini_study(1), fs_base());
    const double lo = *std::min_element(fs.norm2.begin(), fs.norm2.end());
    const double hi = *std::max_element(fs.norm2.begin(), fs.norm2.end());
    CHECK(hi / lo < 1.05);
}

TEST_CASE("dump format")
{
    const Discretization d{-4.0, 4.0, 17, 2};
    const auto op = reduce_mode(make_fubini_study(1), fs_base(), 1, d);
    const auto h = dump_header(op);
    CHECK(h["k"] == 1);
    CHECK(h["grid"]["n"] == 17);
    const std::string csv = dump_csv(op);
    CHECK(csv.rfind("matrix,row,col,value", 0) == 0);
}

TEST_CASE("discretization validation")
{
    CHECK_THROWS_AS((Discretization{1.0, -1.0, 100, 4}.validate(0)), ValidationError);
    CHECK_THROWS_AS((Discretization{-1.0, 1.0, 8, 4}.validate(0)), ValidationError);
    CHECK_THROWS_AS((Discretization{-1.0, 1.0, 100, 1}.validate(3)), ValidationError);
}
