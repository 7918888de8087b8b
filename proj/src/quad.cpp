#include "regkit/quad.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "regkit/core.hpp"

namespace regkit {

namespace {

QuadRule fixed_rule(const gsl_integration_fixed_type* type, int n, double a, double b, double alpha, double beta) {
    std::unique_ptr<gsl_integration_fixed_workspace, decltype(&gsl_integration_fixed_free)> ws(
        gsl_integration_fixed_alloc(type, n, a, b, alpha, beta), &gsl_integration_fixed_free);
    if (!ws) throw Error("quadrature", "could not build fixed quadrature rule");
    QuadRule r;
    r.x.assign(gsl_integration_fixed_nodes(ws.get()), gsl_integration_fixed_nodes(ws.get()) + n);
    r.w.assign(gsl_integration_fixed_weights(ws.get()), gsl_integration_fixed_weights(ws.get()) + n);
    return r;
}

double trampoline(double x, void* p) { return (*static_cast<const std::function<double(double)>*>(p))(x); }

struct GslQuiet {
    GslQuiet() { gsl_set_error_handler_off(); }
};
const GslQuiet quiet_once;

}  // namespace

QuadRule gauss_legendre(int n, double a, double b) {
    static std::map<int, QuadRule> cache;
    static std::mutex m;
    QuadRule unit;
    {
        std::lock_guard<std::mutex> lock(m);
        auto it = cache.find(n);
        if (it == cache.end()) it = cache.emplace(n, fixed_rule(gsl_integration_fixed_legendre, n, 0, 1, 0, 0)).first;
        unit = it->second;
    }
    for (size_t i = 0; i < unit.x.size(); ++i) {
        unit.x[i] = a + (b - a) * unit.x[i];
        unit.w[i] *= (b - a);
    }
    return unit;
}

QuadRule gauss_jacobi(int n, double alpha, double beta, double a, double b) {
    // GSL's Jacobi weight is (b - x)^alpha (x - a)^beta
    return fixed_rule(gsl_integration_fixed_jacobi, n, a, b, alpha, beta);
}

QuadRule gauss_hermite(int n) { return fixed_rule(gsl_integration_fixed_hermite, n, 0, 1, 0, 0); }

double integrate_panels(const std::function<double(double)>& f, double a, double b, int panels, int n) {
    QuadRule q = gauss_legendre(n);
    double h = (b - a) / panels, s = 0;
    for (int p = 0; p < panels; ++p)
        for (int i = 0; i < n; ++i) s += q.w[i] * h * f(a + h * (p + q.x[i]));
    return s;
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rel, double* err) {
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
    gsl_function F{&trampoline, const_cast<std::function<double(double)>*>(&f)};
    double r = 0, e = 0;
    gsl_integration_qags(&F, a, b, 0, rel, 2000, ws, &r, &e);
    gsl_integration_workspace_free(ws);
    if (err) *err = e;
    return r;
}

double integrate_semi_infinite(const std::function<double(double)>& f, double a, double rel) {
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
    gsl_function F{&trampoline, const_cast<std::function<double(double)>*>(&f)};
    double r = 0, e = 0;
    gsl_integration_qagiu(&F, a, 0, rel, 2000, ws, &r, &e);
    gsl_integration_workspace_free(ws);
    return r;
}

double integrate_line(const std::function<double(double)>& f, double rel) {
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
    gsl_function F{&trampoline, const_cast<std::function<double(double)>*>(&f)};
    double r = 0, e = 0;
    gsl_integration_qagi(&F, 0, rel, 2000, ws, &r, &e);
    gsl_integration_workspace_free(ws);
    return r;
}

Fit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> lx(n), ly(n);
    for (size_t i = 0; i < n; ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(std::abs(y[i]));
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    Fit f;
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    for (size_t i = 0; i < n; ++i) f.residual = std::max(f.residual, std::abs(ly[i] - f.intercept - f.slope * lx[i]));
    return f;
}

}  // namespace regkit
