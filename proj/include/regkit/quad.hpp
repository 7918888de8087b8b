#pragma once

#include <functional>
#include <vector>

namespace regkit {

struct QuadRule {
    std::vector<double> x, w;
};

/// n-point Gauss-Legendre on [a, b].
QuadRule gauss_legendre(int n, double a = 0, double b = 1);
/// n-point Gauss-Jacobi on [a, b] for the weight (b - x)^alpha (x - a)^beta.
QuadRule gauss_jacobi(int n, double alpha, double beta, double a = 0, double b = 1);
/// n-point Gauss-Hermite for the weight exp(-x^2) on R.
QuadRule gauss_hermite(int n);

/// Composite Gauss-Legendre: `panels` equal panels of `n` points each.
double integrate_panels(const std::function<double(double)>& f, double a, double b, int panels, int n = 16);

/// Adaptive integration on [a, b] (QAGS) and on [a, inf) / R (QAGI).
double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel = 1e-12,
                          double* err = nullptr);
double integrate_semi_infinite(const std::function<double(double)>& f, double a, double rel = 1e-12);
double integrate_line(const std::function<double(double)>& f, double rel = 1e-12);

/// Least-squares slope of log|y| against log x.
struct Fit {
    double slope = 0, intercept = 0, residual = 0;
};
Fit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace regkit
