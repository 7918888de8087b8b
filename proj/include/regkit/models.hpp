#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "regkit/kernels.hpp"
#include "regkit/renorm.hpp"

namespace regkit {

/// Space-time grid for the scaling (2, 1): axis 0 is time with step hx^2, axis 1 is space.
struct GridSpec {
    int nt = 256, nx = 256;
    double hx = 1.0 / 32;
    bool periodic = true;

    double ht() const { return hx * hx; }
    double cell() const { return ht() * hx; }
    GridField field() const;
    json to_json() const;
    static GridSpec from_json(const json& j);
};

/// Sampled kernel on cell offsets; weights include the cell volume.
struct Stencil {
    std::vector<int> dt, dx;
    std::vector<double> w;
    size_t size() const { return w.size(); }
};

/// f -> sum_s w_s f(. - s) by direct summation; points leaving a non-periodic grid count as zero.
std::vector<double> convolve(const Stencil& k, const GridField& geom, const std::vector<double>& f);
double convolve_at(const Stencil& k, const GridField& geom, const std::vector<double>& f, const std::vector<int>& i);

/// A kernel assignment sampled on a grid: the dyadic components and the near part, the far remainder dropped.
class GridKernel {
public:
    /// radius: the s-norm radius beyond which the components vanish
    GridKernel(DyadicKernel K, double hx, double radius);
    /// chi(2^first z) G for the heat kernel G: the components n >= first of its decomposition.
    static std::shared_ptr<const GridKernel> truncated_heat(double hx, int first = 1, int levels = 10, int order = 8);

    const DyadicKernel& kernel() const { return K_; }
    int order() const { return K_.order; }
    double hx() const { return hx_; }
    double radius() const { return radius_; }
    /// extents of the stencil in cells
    int reach_t() const;
    int reach_x() const;
    /// D^k K sampled on the offsets with |z|_s < radius; cached.
    const Stencil& derivative(const MultiIndex& k) const;

private:
    DyadicKernel K_;
    double hx_, radius_;
    mutable std::map<MultiIndex, Stencil> cache_;
    mutable std::mutex mu_;
};

using KernelAssignment = std::map<int, std::shared_ptr<const GridKernel>>;

enum class Mollifier { Bump, SquaredBump };

/// Discrete mollifier of scale eps (in space units), weights summing to one.
Stencil mollifier(double hx, double eps, Mollifier kind = Mollifier::Bump);
/// i.i.d. N(0, 1) / sqrt(cell volume) on the grid.
GridField white_noise(const GridSpec& g, std::uint64_t seed);
GridField mollify(const GridField& eta, const Stencil& rho);
GridField smooth_noise(const GridSpec& g, double eps, std::uint64_t seed, Mollifier kind = Mollifier::Bump);

// ---------------------------------------------------------------------------

/// ord(W) of a good sector: max over I^k_l tau in B of |tau| + |l| + max(s) and |k| - floor(min degree).
Rat sector_order(const std::vector<Tree>& B, const TypeSet& ts);

/// (Pi^P, Pi^{P,x}, Gamma^P) on a historic sector, evaluated at a lattice of base points.
class Model {
public:
    Model(History& H, std::vector<Tree> sector, KernelAssignment kernels, std::map<int, GridField> noise,
          Functional<double> ell, std::vector<std::vector<int>> base_points);

    const std::vector<Tree>& sector() const { return B_; }
    const std::vector<std::vector<int>>& base_points() const { return base_; }
    const Functional<double>& preparation() const { return ell_; }
    const GridField& geometry() const { return geom_; }
    Hopf& hopf() const { return h_; }
    int index_of(const Tree& t) const;

    /// Pi_x^P tau and Pi_x^{P,x} tau as grid samples
    const std::vector<double>& pi(int base, const Tree& t) const;
    const std::vector<double>& pi_times(int base, const Tree& t) const;
    /// the unrecentred Pi^P tau, monomials taken about the coordinate origin
    std::vector<double> pi_bold(const Tree& t) const;

    const CharacterT<double>& character(int base) const { return g_.at(base); }
    const std::vector<Tree>& generators() const { return gens_; }
    /// Gamma_{xy} on the sector basis: column tau holds the coefficients of Gamma_{xy} tau.
    Eigen::MatrixXd gamma(int x, int y) const;
    /// Gamma for an arbitrary character on the sector basis.
    Eigen::MatrixXd gamma_of(const CharacterT<double>& g) const;

    json dump(const std::string& dir) const;

private:
    Hopf& h_;
    std::vector<Tree> B_;
    KernelAssignment K_;
    std::map<int, GridField> noise_;
    Functional<double> ell_;
    std::vector<std::vector<int>> base_;
    GridField geom_;
    std::vector<std::map<Tree, std::vector<double>>> pi_, pix_;
    std::vector<CharacterT<double>> g_;
    std::vector<Tree> gens_;
};

struct ChainReport {
    double defect = 0;  // max relative sup-norm defect
    std::string worst;  // tree attaining it
    int pairs = 0;
};

/// max over base pairs and trees of |Pi_x Gamma_xy tau - Pi_y tau|_sup / |Pi_y tau|_sup
ChainReport check_chain(const Model& m);
/// max over base triples of |Gamma_xy Gamma_yz - Gamma_xz| / max |Gamma_xz|
double check_cocycle(const Model& m);
/// max over trees of sup |Pi^a - Pi^b| / sup |Pi^b| at the first base point
std::map<Tree, double> model_difference(const Model& a, const Model& b);

struct ExponentFit {
    double slope = 0, residual = 0;
    std::vector<double> lambdas, sups;
};

/// Test functions used for the local scaling fit: the bump times low-order monomials.
std::vector<std::function<double(const Point&)>> test_bank();

/// Log-log fit of sup over the bank of |Pi_x tau(phi_x^lambda)| against lambda.
ExponentFit recentering_exponent(const Model& m, int base, const Tree& t,
                                 std::vector<double> lambdas = {0.5, 0.25, 0.125, 0.0625, 0.03125});

// ---------------------------------------------------------------------------

struct MonteCarloOptions {
    int samples = 10000;  // split into antithetic pairs
    std::uint64_t seed = 1;
    double eps = 0.25;    // mollification scale in space units
    Mollifier kind = Mollifier::Bump;
};

/// E[Pi^{P,x} tau(0)] from antithetic samples of mollified white noise near the origin.
class MonteCarloOracle : public ExpectationOracle<double> {
public:
    MonteCarloOracle(Hopf& h, KernelAssignment kernels, const std::vector<Tree>& sector, MonteCarloOptions opt);

    double expect(const Tree& t, const Functional<double>& ell) override;
    double stderr_of(const Tree& t, const Functional<double>& ell) override;

    /// Pi^{P,x} tau(0)
    Estimate estimate_times(const Tree& t, const Functional<double>& ell);
    /// Pi^P tau(0), summed over the terms of P tau sample by sample
    Estimate estimate_prepared(const Tree& t, const Functional<double>& ell);
    /// The same quantity through full fields on a window, for the first `samples` samples.
    Estimate estimate_prepared_fields(const Tree& t, const Functional<double>& ell, int samples);
    /// E[(K * xi_eps)(0)^2] for the first kernel type and noise type, as a sum over the grid.
    double second_moment_closed_form() const;
    /// trees whose value is affine in the noise of each planted factor
    bool fast(const Tree& t, const Functional<double>& ell);

private:
    struct Key {
        int ktype, ntype;  // ntype < 0: the constant part
        MultiIndex k, j;
        friend bool operator<(const Key& a, const Key& b) {
            return std::tie(a.ktype, a.ntype, a.k, a.j) < std::tie(b.ktype, b.ntype, b.k, b.j);
        }
    };
    std::vector<double> psi(const Key& key) const;
    void draw(int sample, std::vector<std::vector<double>>& eta) const;
    void ensure(const std::vector<Key>& keys);
    bool collect(const Tree& t, const Functional<double>& ell, std::vector<Key>& keys);
    double value_times(const Tree& t, const Functional<double>& ell, int pair, double sign);
    Estimate summarise(const std::vector<double>& y) const;

    Hopf& h_;
    KernelAssignment K_;
    MonteCarloOptions opt_;
    std::vector<int> noises_;
    Stencil rho_;
    int depth_ = 1;
    int wt_ = 0, wx_ = 0;  // window half-widths in cells
    std::map<Key, std::vector<double>> L_;  // per antithetic pair, value on the + sample
    std::map<Key, double> C_;
};

}  // namespace regkit
