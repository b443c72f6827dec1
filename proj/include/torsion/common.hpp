#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace torsion {

// Input rejected; path is a JSON-pointer-like location ("grid", "family.chi").
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string path, const std::string& msg)
        : std::runtime_error(path + ": " + msg), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// A numerical check or algorithm failed (breakdown, non-convergence, bound violated).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct UGrid {
    double u_min = -12.0;
    double u_max = 12.0;
    int n = 4096;

    double h() const { return (u_max - u_min) / (n - 1); }
    double at(int i) const { return u_min + (u_max - u_min) * double(i) / double(n - 1); }
    std::vector<double> points() const;
};

// Symmetric tridiagonal matrix: diagonal d (size n), off-diagonal e (size n-1).
struct Tridiag {
    std::vector<double> d, e;

    int size() const { return int(d.size()); }
    std::vector<double> apply(const std::vector<double>& x) const;
    double quad(const std::vector<double>& x) const;
    double bilinear(const std::vector<double>& x, const std::vector<double>& y) const;
};

// Solve (A - sigma B) y = r for tridiagonal A, B with partial pivoting.
std::vector<double> solve_shifted(const Tridiag& A, const Tridiag& B, double sigma,
                                  const std::vector<double>& r);

inline double log1pexp(double x)
{
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x)
{
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// C^2 transition 0 -> 1 on [0,1].
inline double smoothstep(double x)
{
    if (x <= 0) return 0.0;
    if (x >= 1) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

inline double smoothstep_d(double x)
{
    if (x <= 0 || x >= 1) return 0.0;
    return 30.0 * x * x * (1.0 - x) * (1.0 - x);
}

constexpr double smoothstep_dmax = 15.0 / 8.0;

// 3-point Gauss-Legendre on [0,1].
struct Gauss3 {
    static constexpr int n = 3;
    static constexpr double s[3] = {0.11270166537925831, 0.5, 0.88729833462074169};
    static constexpr double w[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
};

std::string fmt17(double x);

}  // namespace torsion
