#include "torsion/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace torsion {

std::vector<double> UGrid::points() const
{
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) u[i] = at(i);
    return u;
}

std::vector<double> Tridiag::apply(const std::vector<double>& x) const
{
    const int n = size();
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
        double s = d[i] * x[i];
        if (i > 0) s += e[i - 1] * x[i - 1];
        if (i + 1 < n) s += e[i] * x[i + 1];
        y[i] = s;
    }
    return y;
}

double Tridiag::quad(const std::vector<double>& x) const { return bilinear(x, x); }

double Tridiag::bilinear(const std::vector<double>& x, const std::vector<double>& y) const
{
    const int n = size();
    double s = 0;
    for (int i = 0; i < n; ++i) {
        s += d[i] * x[i] * y[i];
        if (i + 1 < n) s += e[i] * (x[i] * y[i + 1] + x[i + 1] * y[i]);
    }
    return s;
}

std::vector<double> solve_shifted(const Tridiag& A, const Tridiag& B, double sigma,
                                  const std::vector<double>& r)
{
    // banded LU with partial pivoting; after a row swap U gets a second superdiagonal
    const int n = A.size();
    std::vector<double> dl(n, 0.0), dd(n), du(n, 0.0), du2(n, 0.0), b = r;
    for (int i = 0; i < n; ++i) {
        dd[i] = A.d[i] - sigma * B.d[i];
        if (i + 1 < n) {
            du[i] = A.e[i] - sigma * B.e[i];
            dl[i] = du[i];
        }
    }
    // exact singularity (shift at an eigenvalue): pivot floor relative to the matrix scale
    double scale = 0;
    for (int i = 0; i < n; ++i) scale = std::max({scale, std::abs(dd[i]), std::abs(du[i])});
    const double tiny = std::max(std::numeric_limits<double>::epsilon() * scale, std::numeric_limits<double>::min());
    for (int i = 0; i + 1 < n; ++i) {
        if (std::abs(dd[i]) >= std::abs(dl[i])) {
            if (std::abs(dd[i]) < tiny) dd[i] = std::copysign(tiny, dd[i]);
            double f = dl[i] / dd[i];
            dd[i + 1] -= f * du[i];
            if (i + 2 < n) du2[i] = 0.0;
            b[i + 1] -= f * b[i];
            dl[i] = f;
        } else {
            double f = dd[i] / dl[i];
            dd[i] = dl[i];
            double t = dd[i + 1];
            dd[i + 1] = du[i] - f * t;
            du[i] = t;
            if (i + 2 < n) {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            std::swap(b[i], b[i + 1]);
            b[i + 1] -= f * b[i];
            dl[i] = f;
        }
    }
    if (std::abs(dd[n - 1]) < tiny) dd[n - 1] = std::copysign(tiny, dd[n - 1]);
    std::vector<double> x(n);
    x[n - 1] = b[n - 1] / dd[n - 1];
    if (n > 1) x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / dd[n - 2];
    for (int i = n - 3; i >= 0; --i)
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / dd[i];
    return x;
}

std::string fmt17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace torsion
