#pragma once

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "torsion/common.hpp"
#include "torsion/profiles.hpp"

namespace torsion {

struct Discretization {
    double u_min = -14.0;
    double u_max = 14.0;
    int n_nodes = 4096;
    int k_max = -1;  // < 0: degree + 24

    UGrid grid() const { return {u_min, u_max, n_nodes}; }
    int kmax_for(int degree) const { return k_max < 0 ? degree + 24 : k_max; }
    void validate(int degree) const;
};

// Mode-k pencil (Q, M) on the free nodes of the window.
//
// Element basis on [u_i, u_{i+1}]: e^{-a(u-u_i)} (1-s) and e^{-a(u-u_{i+1})} s with fitted rate a,
// so the nodal vector x_i = phi(u_i). With a = k the sampled e^{-ku} is an exact null vector of Q.
struct ModeOperator {
    int k = 0;
    int fit = 0;
    bool fixed_left = false, fixed_right = false;
    Discretization disc;
    Tridiag Q, M;

    int size() const { return Q.size(); }
    int first_node() const { return fixed_left ? 1 : 0; }
    std::vector<double> nodes() const;
    // samples of f at the free nodes
    std::vector<double> interpolate(const std::function<double(double)>& f) const;
};

struct ModeOptions {
    // fitted rate: k for 0 <= k <= m, else 0; override with force_fit
    bool force_fit = false;
    int fit = 0;
    // essential constraint at an end where e^{psi - 2ku} w is not integrable
    bool auto_constraints = true;
};

ModeOperator reduce_mode(const MetricProfile& psi, const BaseProfile& base, int k,
                         const Discretization& d, const ModeOptions& opt = {});

std::vector<ModeOperator> assemble_operator_family(const MetricProfile& psi, const BaseProfile& base,
                                                   const Discretization& d);

// Assemble Q-like and M-like forms with explicit weights (used for derivative operators).
// qw(u) multiplies (phi'+k phi)(chi'+k chi)/2, mw(u) multiplies 2 phi chi.
ModeOperator assemble_weighted(const ModeOperator& shape, const std::function<double(double)>& qw,
                               const std::function<double(double)>& mw);

// Dense -1/2 int e^psi chi_s (phi_j' + k phi_j) phi_i du on the shape's free nodes.
std::vector<std::vector<double>> assemble_first_order(const ModeOperator& shape,
                                                      const std::function<double(double)>& weight);

// triplet dump + header
std::string dump_csv(const ModeOperator& op);
json dump_header(const ModeOperator& op);

// Delta f = -(1/(4w)) [f_uu + f_thth + psi' (f_u - i f_th)] on a (u, theta) grid, by finite differences.
// f is row-major [iu * n_theta + ith]; psi is sampled on the u-grid and differenced.
struct PolarField {
    UGrid ugrid;
    int n_theta = 64;
    std::vector<std::complex<double>> f;
};
PolarField apply_strong_form(const std::vector<double>& psi_samples, const BaseProfile& base,
                             const PolarField& f);
// (1/2pi) int int 2 e^psi w |f|^2 du dtheta over rows with u in [a, b], skipping the outer rows
double polar_norm2(const PolarField& f, const std::vector<double>& psi_samples, const BaseProfile& base,
                   double a, double b);

// ||Delta zbar||^2 on the strip |u| <= eps under refinement. Cell-centred grids (u = 0 between
// nodes), cells per eps: coarse, coarse*factor, ...; factor odd keeps the nodes nested.
struct DivergenceReport {
    std::vector<int> cells;
    std::vector<double> norm2;
    double growth = 0;  // finest / coarsest
    bool monotone = false;
};
DivergenceReport strong_form_divergence(const MetricProfile& psi, const BaseProfile& base, double eps = 0.1,
                                        int levels = 4, int coarse = 1, int factor = 17, int n_theta = 8);

// Smooth real test field with two derivatives.
struct SmoothField {
    std::function<double(double)> f, df, d2f;
};
SmoothField gaussian_field(double a, double c, double s);
SmoothField sum_fields(const std::vector<SmoothField>& parts);
SmoothField sech2_field();

// (1/4) int [phi'^2 psi + phi phi'' psi - phi^2 psi'' / 2] du  (zero for decaying fields)
double green_identity_check(const SmoothField& phi, const SmoothField& psi, const UGrid& grid);

}  // namespace torsion
