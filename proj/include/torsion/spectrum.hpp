#pragma once

#include <limits>
#include <string>
#include <vector>

#include "torsion/assembly.hpp"

namespace torsion {

// Number of generalized eigenvalues of (Q, M) strictly below sigma (inertia of Q - sigma M).
int sturm_count(const ModeOperator& op, double sigma);

// All eigenvalues below `upper`, ascending, by bisection on Sturm counts.
std::vector<double> eigenvalues_below(const ModeOperator& op, double upper,
                                      int max_count = std::numeric_limits<int>::max());
std::vector<double> lowest_eigenvalues(const ModeOperator& op, int n);

// M-normalized eigenvector by inverse iteration at the shift lambda.
std::vector<double> inverse_iteration(const ModeOperator& op, double lambda, int max_sweeps = 50);
double eigen_residual(const ModeOperator& op, double lambda, const std::vector<double>& x);

struct ModeSpectrum {
    int k = 0;
    std::vector<double> lambdas;
    std::vector<std::vector<double>> vectors;  // empty unless requested
};

ModeSpectrum solve_mode(const ModeOperator& op, int n_eigs, bool vectors = true);

struct SpectrumEntry {
    double lambda = 0;
    int mode = 0;
    int index = 0;  // position within its mode
    int group = 0;
    bool is_kernel = false;
};

struct Spectrum {
    std::vector<SpectrumEntry> entries;
    int kernel_dim = 0;
    double kernel_threshold = 1e-8;
    double first_nonzero = 0;
    double gap_ratio = 0;
    // every eigenvalue below lambda_cut is present (inf: unknown / not complete)
    double lambda_cut = std::numeric_limits<double>::infinity();
    bool complete = false;
    double weyl = 1.0;  // leading heat coefficient used for tail estimates
    json meta = json::object();
    std::vector<ModeSpectrum> modes;

    std::vector<double> positive() const;
    std::vector<int> group_sizes() const;
    double lambda1() const { return first_nonzero; }
};

struct SpectrumOptions {
    int n_per_mode = 0;  // 0: everything below the lowest eigenvalue of modes +-k_max
    double merge_rel_tol = 5e-3;
    double kernel_threshold = 1e-8;
    bool vectors = false;
};

Spectrum merge(const std::vector<ModeSpectrum>& modes, const SpectrumOptions& opt = {});
Spectrum compute_spectrum(const MetricProfile& psi, const BaseProfile& base, const Discretization& d,
                          const SpectrumOptions& opt = {});
Spectrum spectrum_from_values(const std::vector<double>& lambdas, double weyl, double cut);

std::string spectrum_csv(const Spectrum& s);

double rayleigh(const ModeOperator& op, const std::vector<double>& x);

// Quadrature-point ranges of the form ratios: q = e^{psi_p - psi_q}, m = q * w_p / w_q.
struct Equivalence {
    double q_lo = 1, q_hi = 1, m_lo = 1, m_hi = 1;
    double lo() const { return q_lo / m_hi; }
    double hi() const { return q_hi / m_lo; }
};
Equivalence equivalence(const MetricProfile& p, const BaseProfile& bp, const MetricProfile& q,
                        const BaseProfile& bq, const UGrid& grid);

struct Lambda1Pair {
    int p = 0, q = 0;
    double ratio = 0, lo = 0, hi = 0;
    bool pass = false;
};
struct Lambda1Table {
    std::vector<int> labels;
    std::vector<double> lambda1;
    std::vector<Lambda1Pair> pairs;
    double min_lambda1 = 0;
    bool all_pass = true;
};
Lambda1Table lambda1_family(const std::vector<Spectrum>& spectra, const std::vector<int>& labels,
                            const std::vector<MetricProfile>& profiles, const std::vector<BaseProfile>& bases,
                            const UGrid& grid);

// Cheeger constant over parallel circles of the metric 4w(du^2 + dtheta^2).
struct CheegerReport {
    double h = 0;
    double c_star = 0;
    double area = 0;
    double lambda1 = std::numeric_limits<double>::quiet_NaN();
    double lower_bound = 0;  // h^2 / 4
    bool checked = false;
    bool pass = false;
};
CheegerReport cheeger(const BaseProfile& base, const UGrid& grid,
                      double lambda1 = std::numeric_limits<double>::quiet_NaN(), double tol = 1e-6);
// h_q / h_p pointwise metric ratio for the (1+|z|^p)^{-4/p} family at |z| = x
double tx_metric_ratio(double q, double p, double x);

}  // namespace torsion
