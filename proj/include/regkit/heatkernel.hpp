#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "regkit/core.hpp"
#include "regkit/expr.hpp"
#include "regkit/kernels.hpp"
#include "regkit/lambda.hpp"

namespace regkit {

/// Coefficients of L = d_t - a d_x^2 - b d_x - c in one space dimension.
struct CoefficientField {
    JetFn a, b, c;
    std::function<double(const Point&)> av, bv, cv;
    double lambda = 0.5;  // ellipticity: lambda <= a <= 1/lambda
    int rho = 64;         // regularity order available
    std::string a_src, b_src, c_src;

    /// From formulas in t and x.
    static CoefficientField symbolic(const std::string& a, const std::string& b, const std::string& c,
                                     double lambda = 0.5, int rho = 64);
    static CoefficientField constant(double a, double b = 0, double c = 0);
    /// {"a": "...", "b": "...", "c": "...", "lambda": ..., "rho": ...}
    static CoefficientField from_json(const json& j);
    json to_json() const;

    /// Samples a on a lattice of [-T, T] x [-X, X]; throws on violation.
    void check_ellipticity(double T = 1, double X = 4, int lattice = 33) const;
    JetValues jets(const Point& w, int order) const;

    /// Triple of the adjoint operator: b* = 2 a' - b, c* = c - b' + a''.
    CoefficientField adjoint() const;
    /// t -> -t, turning a backward operator into a forward one.
    CoefficientField time_reflected() const;
};

/// (4 pi)^{-d/2} det(a)^{-1/2} t^{-d/2} exp(-x.a^{-1}x / 4t) for t > 0.
double frozen_gaussian(const Eigen::MatrixXd& a, double t, const Eigen::VectorXd& x);
/// W^w(z) for the scalar field.
double frozen_gaussian(const CoefficientField& f, const Point& w, const Point& z);
/// Z(z, zbar) = W^{zbar}(z - zbar)
double z_kernel(const CoefficientField& f, const Point& z, const Point& zbar);
/// E(z, zbar), zero for t <= tbar.
double error_kernel(const CoefficientField& f, const Point& z, const Point& zbar);

// ---------------------------------------------------------------------------
// heat calculus

/// F(z, zbar) = 1_{t > tbar} (t - tbar)^{(alpha - 3)/2} Ft(zbar, sqrt(t - tbar), (x - xbar)/sqrt(t - tbar)).
struct HeatCalcKernel {
    double alpha = 2;
    std::function<double(const Point& zbar, double u, double v)> Ft;
    std::string name;

    double operator()(const Point& z, const Point& zbar) const;
    HeatCalcKernel scaled(double c) const;
};

HeatCalcKernel heat_calc_from(const std::function<double(const Point&, const Point&)>& F, double alpha,
                              std::string name = "");
HeatCalcKernel z_calc(const CoefficientField& f);
HeatCalcKernel e_calc(const CoefficientField& f);
HeatCalcKernel zero_calc(double alpha);

struct ConvolveOptions {
    int s_points = 12;      // Gauss-Jacobi nodes on each half of (0, 1)
    int y_panels = 12;
    int y_points = 8;
    double y_half_width = 0;  // 0: chosen from the ellipticity constant
    double lambda = 0.5;
    int decay_power = 2;     // n in the (1 + |v|)^n weight of the tail check
    double tail_tol = 1e-6;
    Point probe{0.0, 0.0};

    int nodes() const { return 2 * s_points * y_panels * y_points; }
    double half_width() const;
};

/// F * G by the (s, y) integral representation of the convolved Ft.
HeatCalcKernel heat_convolve(const HeatCalcKernel& F, const HeatCalcKernel& G, const ConvolveOptions& opt = {});
/// int dzeta F(z, zeta) G(zeta, zbar) by adaptive quadrature.
double direct_convolve(const HeatCalcKernel& F, const HeatCalcKernel& G, const Point& z, const Point& zbar,
                       double rel = 1e-10);

struct SeminormReport {
    double value = 0;
    double T = 1;
    int n = 0;
};
/// sup of (1 + |v|)^n |Ft(zbar, u, v)| over sampled zbar, u in (0, sqrt T], v.
SeminormReport seminorm(const HeatCalcKernel& F, double T, int n, const std::vector<Point>& bases);

struct ConvolveBoundReport {
    double lhs = 0, rhs = 0, ratio = 0;
    bool finite_beta = true;
};
/// ||F*G|| against B((alpha - 1)/2, beta/2) ||F|| ||G||.
ConvolveBoundReport convolve_bound(const HeatCalcKernel& F, const HeatCalcKernel& G, const HeatCalcKernel& FG,
                                   double T, int n, const std::vector<Point>& bases);

struct VolterraOptions {
    ConvolveOptions quad;
    double budget = 5e7;  // quadrature nodes per evaluation of the deepest summand
};

/// Gamma_N = sum_{k <= N} Z * (-E)^{*k}
class Volterra {
public:
    Volterra(CoefficientField f, int N, VolterraOptions opt = {});

    int order() const { return N_; }
    /// true when the budget cut the series short
    bool partial() const { return computed_ < N_; }
    int computed_terms() const { return computed_; }
    const HeatCalcKernel& summand(int k) const { return summands_.at(k); }
    /// (-E)^{*k}
    HeatCalcKernel error_power(int k) const;
    double operator()(const Point& z, const Point& zbar) const;

private:
    CoefficientField f_;
    int N_, computed_ = 0;
    VolterraOptions opt_;
    std::vector<HeatCalcKernel> summands_;
};

/// L applied in z by fourth-order centred differences.
double apply_operator_fd(const CoefficientField& f, const std::function<double(const Point&)>& u, const Point& z,
                         double h);

// ---------------------------------------------------------------------------
// local decompositions

/// Jet kernel P W^w: coefficient of (zbar - w)^k.
struct JetKernel {
    MultiIndex k;
    SymPoly P;
};

/// Z^[k], |k|_s < r
std::vector<JetKernel> z_jet_kernels(int r);
/// E^[k], |k|_s < 3r
std::vector<JetKernel> e_jet_kernels(int r);

class TaylorZ {
public:
    TaylorZ(CoefficientField f, int r);

    const std::vector<JetKernel>& jets() const { return jets_; }
    const std::vector<MultiIndex>& set() const { return A_; }
    const std::vector<MultiIndex>& boundary() const { return dA_; }
    /// sum_k (zbar - w)^k Z^[k]_w(z - zbar)
    double jet_part(const Point& w, const Point& z, const Point& zbar) const;
    /// (zbar - w)^{k_down} Z^{d,[k]}_w(z, zbar), one entry per boundary index
    std::vector<double> remainder_terms(const Point& w, const Point& z, const Point& zbar) const;
    json certificate() const;

private:
    CoefficientField f_;
    int r_;
    std::vector<MultiIndex> A_, dA_;
    std::vector<JetKernel> jets_;
};

struct ESample {
    double direct = 0, jet_part = 0, remainder = 0;
    std::vector<std::pair<std::string, double>> remainder_terms;
};

class TaylorE {
public:
    TaylorE(CoefficientField f, int r);

    const std::vector<JetKernel>& jets() const { return jets_; }
    const std::vector<MultiIndex>& set() const { return A_; }
    /// the multi-index set carrying jet kernels, {|k|_s < 3r} intersected with what occurs
    std::vector<MultiIndex> jet_set() const;
    double jet_part(const Point& w, const Point& z, const Point& zbar) const;
    ESample sample(const Point& w, const Point& z, const Point& zbar) const;
    /// Part of the lower-slot remainder of a(z) for one boundary index, at w = zbar.
    double lower_remainder_term(const MultiIndex& k, const Point& z, const Point& zbar) const;
    json certificate() const;

private:
    CoefficientField f_;
    int r_;
    std::vector<MultiIndex> A_, dA_;
    std::vector<JetKernel> jets_;
};

struct GreenOptions {
    int r = 3, M = 1, N = 1;
    int levels = 12;  // dyadic levels for the norm
};

/// Gamma(z, zbar) = K^w(z - zbar) + R(z, zbar) with the base point w the upper slot.
class GreenDecomposition {
public:
    GreenDecomposition(CoefficientField f, GreenOptions opt = {}, bool adjoint = false,
                       std::optional<Cutoff> cutoff = std::nullopt, VolterraOptions vopt = {});

    const GreenOptions& options() const { return opt_; }
    bool adjoint() const { return adjoint_; }
    /// K_n^w as explicit polynomial times Gaussian.
    const std::vector<GaussPoly>& pieces(const Point& w) const;
    /// K^w(zeta) = chi(zeta) sum_n K_n^w(zeta)
    double K(const Point& w, const Point& zeta) const;
    /// Gamma(z, zbar) split as K + R, in the slot convention of this decomposition.
    double K_at(const Point& z, const Point& zbar) const;
    double R_at(const Point& z, const Point& zbar) const;
    double gamma(const Point& z, const Point& zbar) const;
    DyadicKernel dyadic(const Point& w) const;
    json certificate() const;

private:
    CoefficientField f_, g_;  // g_: the field the series is built from
    GreenOptions opt_;
    bool adjoint_;
    Cutoff cut_;
    std::vector<JetKernel> zj_, ej_;
    std::vector<MultiIndex> A_;
    std::shared_ptr<Volterra> volterra_;
    mutable std::vector<std::pair<Point, std::vector<GaussPoly>>> cache_;
};

/// Checks grammar of a certificate: u powers >= -1, v powers >= 0, jets up to order r.
bool certificate_ok(const json& cert, int r, std::string* why = nullptr);

}  // namespace regkit
