#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "torsion/common.hpp"

namespace torsion {

using json = nlohmann::json;

// Radial metric on O(m): psi(u) = log h(s,s) at |z| = e^{-u}.
struct MetricProfile {
    int degree = 0;
    std::string kind;
    json params = json::object();
    std::function<double(double)> psi;
    std::function<double(double)> dpsi;  // may be empty

    double operator()(double u) const { return psi(u); }
    double slope(double u) const;
};

// Base weight w(u) = h_X(d/dz, d/dz)(e^{-u}) e^{-2u}.
struct BaseProfile {
    std::string kind;
    json params = json::object();
    std::function<double(double)> w;
    std::function<double(double)> dlogw;  // may be empty

    double operator()(double u) const { return w(u); }
    double dlog(double u) const;
};

// Increasing integer-valued exponent map p -> chi(p).
struct Chi {
    std::string name;  // "pow2", "linear" or "table"
    std::vector<double> table;
    int table_offset = 0;

    double operator()(int p) const;
    static Chi pow2() { return {"pow2", {}, 0}; }
    static Chi linear() { return {"linear", {}, 0}; }
    static Chi from_table(std::vector<double> values, int first_p);
    void check_increasing(int p_lo, int p_hi) const;
};

MetricProfile make_fubini_study(int m);
MetricProfile make_pnorm(int m, const Chi& chi, int p);
MetricProfile make_pnorm_exponent(int m, double chi_value);
MetricProfile make_canonical(int m);
// rho(u) sqrt|1 - |z||, rho = 1 on |u| <= radius: continuous but not 1-integrable across |z| = 1
MetricProfile make_sqrt_kink(double radius = 0.5, double width = 0.5);
MetricProfile make_sampled(int m, const UGrid& grid, std::vector<double> psi, std::string kind = "sampled");
MetricProfile profile_difference(const MetricProfile& a, const MetricProfile& b);
std::vector<double> sample(const MetricProfile& p, const UGrid& grid);

BaseProfile fs_base();
// h_p(d,d) = (1+|z|^p)^{-4/p}; p = 2 is the round metric, p -> inf the max-norm metric.
BaseProfile tx_base(double p);
BaseProfile scaled_base(const BaseProfile& b, double c);
// max(1,|z|)^{-4}
BaseProfile canonical_tx_base();

// Iterated pull-back z -> P(z) of a radial base metric, averaged over circles.
struct DynamicalResult {
    MetricProfile profile;
    double escape_radius = 0;
    int escaped_points = 0;
};
DynamicalResult make_dynamical(const std::vector<std::complex<double>>& coeffs, int n,
                               const MetricProfile& base, const UGrid& grid, int n_theta = 512);

// d log h_n / dz at z, un-averaged (coeffs: highest degree first).
std::complex<double> dynamical_dlog(const std::vector<std::complex<double>>& coeffs, int n,
                                    const MetricProfile& base, std::complex<double> z);

// Radial cutoff rho(u): 0 on the annulus r <= |z| <= R, 1 beyond a smooth transition of given width.
struct Cutoff {
    double r = 0.5, R = 2.0, width = 0.5;
    std::optional<double> constant;
    std::function<double(double)> custom;

    double operator()(double u) const;
    static Cutoff constant_value(double c);
};

std::vector<MetricProfile> blend_metrics(const MetricProfile& singular,
                                         const std::vector<MetricProfile>& smooth_seq,
                                         const Cutoff& cutoff, const UGrid& check_grid);

// H(u) = (1-rho(u-n)) h_n + rho(u-n) h_{n+1} on [n, n+1].
class ContinuousFamily {
public:
    ContinuousFamily(std::vector<MetricProfile> members, int first_index);

    int first() const { return first_; }
    int last() const { return first_ + int(members_.size()) - 1; }
    const MetricProfile& member(int n) const { return members_.at(n - first_); }
    const std::vector<MetricProfile>& members() const { return members_; }

    double log_h(double u, double x) const;
    double d_du_log(double u, double x) const;
    // d/dx of d_du_log
    double mixed(double u, double x) const;
    MetricProfile eval(double u) const;

private:
    struct Local {
        int n;
        double rho, drho;
    };
    Local locate(double u) const;

    std::vector<MetricProfile> members_;
    int first_;
};

// Same construction on base weights (variation of the metric on TX).
class BaseFamily {
public:
    BaseFamily(std::vector<BaseProfile> members, int first_index);

    int first() const { return first_; }
    int last() const { return first_ + int(members_.size()) - 1; }
    const BaseProfile& member(int n) const { return members_.at(n - first_); }

    double w(double u, double x) const;
    double d_du_log(double u, double x) const;
    BaseProfile eval(double u) const;

private:
    std::vector<BaseProfile> members_;
    int first_;
};

struct FamilyDiagnostics {
    UGrid grid;
    std::vector<int> index;
    std::vector<double> ratio_norms, grad_norms, sum_sqrt_ratio;
    std::vector<double> u_samples, delta_E, pi_E;
};

FamilyDiagnostics diagnostics(const std::vector<MetricProfile>& family, int first_index,
                              const BaseProfile& base, const UGrid& grid,
                              const std::vector<double>& u_samples = {});

double delta_E(const ContinuousFamily& fam, double u, const UGrid& grid);
double pi_E(const ContinuousFamily& fam, const BaseProfile& base, double u, const UGrid& grid);
double delta_X(const BaseFamily& fam, double u, const UGrid& grid);

// ratio bound of the sup-norm example: c0 (1/chi(p-1) - 1/chi(p))
double pnorm_ratio_bound(int m, double chi_prev, double chi_cur);
// e^{-1} m |1 - chi(p-1)/chi(p)|
double pnorm_grad_lower_bound(int m, double chi_prev, double chi_cur);

struct LogBoundReport {
    bool pass = true;
    double max_violation = 0;  // > 0 means failed
    double min_slack = 0;
};
LogBoundReport log_bound_check(const std::vector<double>& phi, double eps);

struct ConcavityReport {
    bool is_concave_on_grid = false;
    double max_second_difference = 0;
    bool zero_derivative_at_pole = false;
    double pole_derivative = 0;
    bool difference_of_concave = false;
};
ConcavityReport concavity_report(const MetricProfile& p, const UGrid& grid);

json profile_to_json(const MetricProfile& p, const UGrid& grid);
MetricProfile profile_from_json(const json& j);

}  // namespace torsion
