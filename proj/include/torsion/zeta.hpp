#pragma once

#include <string>
#include <vector>

#include "torsion/heat.hpp"

namespace torsion {

struct ZetaValue {
    double value = 0;
    double tail = 0;  // estimated contribution of unresolved eigenvalues (already added to value)
    // uncertainty of that estimate from an O(sqrt(lambda)) remainder in the counting function
    double tail_error = 0;
};

// sum lambda^{-s} over the resolved positive eigenvalues plus the counting-function tail
ZetaValue zeta_at(const ThetaSeries& th, double s);
ZetaValue zeta_at(const Spectrum& spec, double s);

// Continuation from the split Mellin transform with split point T (valid for s > -1, s != 0, 1);
// for s > 1 it is the Mellin transform of theta with the fitted expansion used below t_lo.
double zeta_continued(const ThetaSeries& th, const HeatFit& fit, double s, double T = 1.0);

// zeta'(0) = int_T^inf theta/t + int_0^T rho/t - a_{-1}/T + a_0 (gamma + log T), rho = theta - a_{-1}/t - a_0
struct ZetaPrime {
    double value = 0;
    double quadrature_value = 0;  // same with adaptive Gauss-Kronrod on the resolved part
    double tail = 0;              // bound on the unresolved-eigenvalue contribution
    double fit_error = 0;         // change when the fit is replaced by the lower half-window fit
};
ZetaPrime zeta_prime0(const ThetaSeries& th, const HeatFit& fit, double T = 1.0);

struct ZetaReport {
    HeatFit fit;
    std::vector<std::pair<double, ZetaValue>> direct;   // (s, zeta(s))
    std::vector<std::pair<double, double>> mellin;      // (s, continued zeta(s))
    double zeta0 = 0;
    double zeta0_continued = 0;  // symmetric evaluation of the continuation at s = +-1e-4
    ZetaPrime zeta_prime0;
    double zeta_prime0_T2 = 0;  // split point 2
    json quadrature = json::object();
    json to_json() const;
};
ZetaReport zeta_report(const ThetaSeries& th, const FitWindow& window, const std::vector<double>& s_values = {1.5, 2, 3});
ZetaReport zeta_report(const ThetaSeries& th, const std::vector<double>& s_values = {1.5, 2, 3});

struct TorsionTable {
    std::vector<int> labels;
    std::vector<double> values;       // zeta'_p(0)
    std::vector<double> gaps;         // |v_{i+1} - v_i|
    std::vector<double> gap_ratios;   // gaps[i] / gaps[i+1]
    std::vector<double> gap_to_limit; // |v_i - direct|, empty without a direct value
    double direct = std::numeric_limits<double>::quiet_NaN();
    double extrapolated = std::numeric_limits<double>::quiet_NaN();
    double extrapolation_error = std::numeric_limits<double>::quiet_NaN();
    int cauchy_from = -1;  // gaps[i] strictly decreasing for i >= cauchy_from
    bool cauchy = false;   // at least three decreasing gaps at the end
    std::string family_csv(const std::vector<double>& zeta0) const;
    json to_json() const;
};
TorsionTable torsion_limit(const std::vector<int>& labels, const std::vector<double>& values,
                           double direct = std::numeric_limits<double>::quiet_NaN());

}  // namespace torsion
