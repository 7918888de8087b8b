#pragma once

#include <functional>
#include <string>
#include <vector>

#include "regkit/core.hpp"
#include "regkit/jet.hpp"

namespace regkit {

/// A smooth function of the space-time point, evaluated on jets of the coordinates.
using JetFn = std::function<Jet(const std::vector<Jet>&)>;
using Point = std::vector<double>;

/// Jet of order `order` of f at z.
Jet jet_at(const JetFn& f, const Point& z, int order);
double value_at(const JetFn& f, const Point& z);

/// Integer scaling s = (s_0, ..., s_{D-1}); the parabolic default is (2, 1, ..., 1).
struct Scaling {
    std::vector<int> s;

    static Scaling parabolic(int space_dims);
    int dims() const { return static_cast<int>(s.size()); }
    int total() const;
    int lcm() const;
    /// |k|_s = sum s_i k_i
    int degree(const MultiIndex& k) const;
    /// (sum |z_i|^(2m/s_i))^(1/2m), m = lcm(s): a smooth homogeneous norm for the scaling.
    double norm(const Point& z) const;
    Jet norm(const std::vector<Jet>& z) const;
    /// z -> (2^(s_i n) z_i)
    Point dilate(const Point& z, double n) const;
    std::vector<Jet> dilate(const std::vector<Jet>& z, double n) const;
    /// All k with |k|_s <= cap (or < cap when strict).
    std::vector<MultiIndex> indices_below(int cap, bool strict) const;
};

/// Smooth step S(u): 0 for u <= 0, 1 for u >= 1, built from exp(-1/u).
double smooth_step(double u);
Jet smooth_step(const Jet& u);

/// chi = 1 on |z|_s <= 1/2, 0 on |z|_s >= 2^(-3/4); phi = chi - chi(dilate 1); phi_n = phi(dilate n).
class Cutoff {
public:
    explicit Cutoff(Scaling s, double inner = 0.5, double outer = 0.5946035575013605);

    const Scaling& scaling() const { return s_; }
    double outer() const { return outer_; }

    double chi(const Point& z) const;
    Jet chi(const std::vector<Jet>& z) const;
    double phi(const Point& z) const { return chi(z) - chi(s_.dilate(z, 1)); }
    Jet phi(const std::vector<Jet>& z) const { return chi(z) - chi(s_.dilate(z, 1)); }
    double phi_n(int n, const Point& z) const { return phi(s_.dilate(z, n)); }
    Jet phi_n(int n, const std::vector<Jet>& z) const { return phi(s_.dilate(z, n)); }

private:
    Scaling s_;
    double inner_, outer_;
};

/// Heat kernel of d_t - Laplacian in `space_dims` dimensions; zero for t <= 0.
JetFn heat_kernel(int space_dims);

struct KernelComponent {
    enum class Kind { Analytic, Sampled, ValueOnly };
    Kind kind = Kind::Analytic;
    JetFn f;                                     // Analytic
    std::function<double(const Point&)> value;  // Sampled, ValueOnly
    double fd_step = 0;                         // Sampled: step in rescaled units
};

class DyadicKernel {
public:
    Rat beta;
    int order = 0;
    Scaling scaling;
    std::vector<KernelComponent> components;  // index n is supported in B_s(0, 2^-n)
    JetFn remainder;                          // far field (1 - chi) F
    JetFn near;                               // chi_{N+1} F, the part below the finest scale

    int levels() const { return static_cast<int>(components.size()); }
    double component_value(int n, const Point& z) const;
    /// sum of all components, remainder and near part
    double reassemble(const Point& z) const;
    DyadicKernel scaled(double c) const;
    friend DyadicKernel operator+(const DyadicKernel& a, const DyadicKernel& b);
};

/// F = (1 - chi) F + sum_{n <= N} phi_n F + chi_{N+1} F.
DyadicKernel dyadic_decompose(const JetFn& F, const Cutoff& c, int N, const Rat& beta, int order);

/// Components given as plain samples; derivatives then come from centred differences.
DyadicKernel sampled_kernel(const std::vector<std::function<double(const Point&)>>& comps, const Scaling& s,
                            const Rat& beta, int order, double fd_step, bool values_only = false);

struct NormOptions {
    int resolution = 48;  // sample points per axis across the rescaled unit ball
    int refine_candidates = 32;  // best grid points polished by a local search (0: grid only)
    double refine_tol = 1e-3;   // final search step, in grid cells
};

struct NormReport {
    double value = 0;
    bool degraded = false;        // derivatives that the norm needs were unavailable
    std::string mode;             // "analytic", "finite-difference", "values-only"
    double fd_step = 0;
    std::vector<double> per_level;
    std::vector<int> argmax_k;    // multi-index attaining the supremum
};

NormReport kernel_norm(const DyadicKernel& K, const NormOptions& opt = {});

/// {beta, order, formula, N, space_dims}; formula in {"heat", "zero", "one"}.
DyadicKernel kernel_from_json(const json& j);
json norm_report_json(const NormReport& r);

// ---------------------------------------------------------------------------
// weighted Hoelder norms of grid fields

/// Uniform grid, row-major with the last axis fastest.
struct GridField {
    std::vector<int> n;
    std::vector<double> h, origin;
    Scaling scaling;
    bool periodic = false;
    std::vector<double> data;

    GridField() = default;
    GridField(std::vector<int> n, std::vector<double> h, std::vector<double> origin, Scaling s, bool periodic);

    size_t size() const { return data.size(); }
    size_t index(const std::vector<int>& i) const;
    /// nullopt-like: returns false when i leaves a non-periodic grid
    bool wrap(std::vector<int>& i) const;
    Point coord(const std::vector<int>& i) const;
    double& at(const std::vector<int>& i) { return data[index(i)]; }
    double at(const std::vector<int>& i) const { return data[index(i)]; }
    void fill(const std::function<double(const Point&)>& f);
};

struct HolderOptions {
    double weight_power = 0;  // w(x) = (1 + |x|_s)^l
    int stride = 1;           // base points on every stride-th grid point
    std::vector<double> lambdas;  // negative alpha: test-function scales (default dyadic down to resolution)
};

struct HolderReport {
    double value = 0, sup_part = 0, increment_part = 0;
    double finest_scale = 0;
};

/// Positive alpha in (0, 1): increment form.  Negative alpha: pairing with rescaled bumps.
HolderReport holder_norm_estimate(const GridField& f, double alpha, const HolderOptions& opt = {});

/// Compactly supported smooth bump on the unit s-ball, normalised to integrate to 1.
double bump(const Scaling& s, const Point& z);

// ---------------------------------------------------------------------------
// anisotropic Taylor formula

bool is_lower_set(const std::vector<MultiIndex>& A);
/// m(k): first nonzero coordinate; k_down = k - e_{m(k)}
int first_nonzero(const MultiIndex& k);
MultiIndex k_down(const MultiIndex& k);
/// {k not in A : k_down(k) in A}
std::vector<MultiIndex> boundary_set(const std::vector<MultiIndex>& A);

class AnisoTaylor {
public:
    AnisoTaylor(JetFn f, std::vector<MultiIndex> A, int quad_points = 24);

    const std::vector<MultiIndex>& set() const { return A_; }
    const std::vector<MultiIndex>& boundary() const { return dA_; }
    /// D^k f(0) for k in A
    const std::vector<double>& derivatives() const { return d0_; }

    double jet_part(const Point& x) const;
    /// one remainder term per boundary multi-index
    std::vector<double> remainder_terms(const Point& x) const;
    double remainder(const Point& x) const;
    double value(const Point& x) const { return value_at(f_, x); }

private:
    JetFn f_;
    std::vector<MultiIndex> A_, dA_;
    std::vector<double> d0_;
    int q_;
};

}  // namespace regkit
