#include "regkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "regkit/quad.hpp"

namespace regkit {

namespace {

int mod(int a, int n) { return ((a % n) + n) % n; }

int thread_count() {
    if (const char* e = std::getenv("REGKIT_THREADS")) {
        int n = std::atoi(e);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

template <class F>
void parallel_for(int n, F&& fn) {
    int T = std::min(thread_count(), std::max(1, n));
    if (T == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < T; ++w)
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += T) fn(i);
        });
    for (auto& t : pool) t.join();
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t z = a * 0x9E3779B97F4A7C15ull + b * 0xBF58476D1CE4E5B9ull + c * 0x94D049BB133111EBull + 1;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double sup_abs(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double power(double x, int k) {
    double r = 1;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

bool is_noise_planted(const Tree& t, const TypeSet& ts) {
    return t.is_planted() && !ts.is_kernel(t.root().edges[0].type);
}

/// Longest chain of kernel edges from the root.
int kernel_depth(const Node& n, const TypeSet& ts) {
    int d = 0;
    for (auto& e : n.edges) d = std::max(d, kernel_depth(*e.child, ts) + (ts.is_kernel(e.type) ? 1 : 0));
    return d;
}

}  // namespace

// ---------------------------------------------------------------------------

GridField GridSpec::field() const {
    return GridField({nt, nx}, {ht(), hx}, {0.0, 0.0}, Scaling::parabolic(1), periodic);
}

json GridSpec::to_json() const { return {{"nt", nt}, {"nx", nx}, {"hx", hx}, {"periodic", periodic}}; }

GridSpec GridSpec::from_json(const json& j) {
    GridSpec g;
    g.nt = j.value("nt", g.nt);
    g.nx = j.value("nx", g.nx);
    g.hx = j.value("hx", g.hx);
    g.periodic = j.value("periodic", g.periodic);
    if (g.nt <= 0 || g.nx <= 0 || !(g.hx > 0)) throw Error("config", "grid sizes and spacing must be positive");
    return g;
}

std::vector<double> convolve(const Stencil& k, const GridField& g, const std::vector<double>& f) {
    int nt = g.n[0], nx = g.n[1];
    std::vector<double> out(f.size(), 0.0);
    for (size_t s = 0; s < k.size(); ++s) {
        double w = k.w[s];
        int dt = k.dt[s], dx = k.dx[s];
        for (int it = 0; it < nt; ++it) {
            int src = it - dt;
            if (g.periodic)
                src = mod(src, nt);
            else if (src < 0 || src >= nt)
                continue;
            double* o = &out[static_cast<size_t>(it) * nx];
            const double* in = &f[static_cast<size_t>(src) * nx];
            if (g.periodic) {
                int sh = mod(-dx, nx);
                for (int ix = 0; ix < nx - sh; ++ix) o[ix] += w * in[ix + sh];
                for (int ix = nx - sh; ix < nx; ++ix) o[ix] += w * in[ix + sh - nx];
            } else {
                int lo = std::max(0, dx), hi = std::min(nx, nx + dx);
                for (int ix = lo; ix < hi; ++ix) o[ix] += w * in[ix - dx];
            }
        }
    }
    return out;
}

double convolve_at(const Stencil& k, const GridField& g, const std::vector<double>& f, const std::vector<int>& i) {
    double s = 0;
    for (size_t a = 0; a < k.size(); ++a) {
        std::vector<int> j{i[0] - k.dt[a], i[1] - k.dx[a]};
        if (!g.wrap(j)) continue;
        s += k.w[a] * f[g.index(j)];
    }
    return s;
}

// ---------------------------------------------------------------------------

GridKernel::GridKernel(DyadicKernel K, double hx, double radius) : K_(std::move(K)), hx_(hx), radius_(radius) {
    if (K_.scaling.s != std::vector<int>{2, 1}) throw Error("kernel", "grid kernels need the scaling (2, 1)");
}

std::shared_ptr<const GridKernel> GridKernel::truncated_heat(double hx, int first, int levels, int order) {
    Cutoff c(Scaling::parabolic(1));
    DyadicKernel K = dyadic_decompose(heat_kernel(1), c, levels, Rat(2), order);
    for (int n = 0; n < first && n < K.levels(); ++n)
        K.components[n].f = [](const std::vector<Jet>& z) { return Jet(z[0].nvars(), z[0].order(), 0); };
    K.remainder = nullptr;
    return std::make_shared<GridKernel>(std::move(K), hx, c.outer() * std::pow(2.0, -first));
}

int GridKernel::reach_t() const { return static_cast<int>(std::floor(radius_ * radius_ / (hx_ * hx_))); }
int GridKernel::reach_x() const { return static_cast<int>(std::floor(radius_ / hx_)); }

const Stencil& GridKernel::derivative(const MultiIndex& k) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    double ht = hx_ * hx_, cell = ht * hx_;
    int ord = mi_abs(k);
    JetFn f = [this](const std::vector<Jet>& z) {
        Jet s(z[0].nvars(), z[0].order(), 0);
        for (auto& c : K_.components) s += c.f(z);
        if (K_.near) s += K_.near(z);
        return s;
    };
    Stencil st;
    int RT = reach_t(), RX = reach_x();
    for (int dt = -RT; dt <= RT; ++dt)
        for (int dx = -RX; dx <= RX; ++dx) {
            Point z{dt * ht, dx * hx_};
            if (K_.scaling.norm(z) >= radius_) continue;
            double v = jet_at(f, z, ord).deriv(k);
            if (!std::isfinite(v)) throw Error("kernel", "kernel derivative is not finite on the grid at " + mi_str({dt, dx}));
            if (v == 0) continue;
            st.dt.push_back(dt);
            st.dx.push_back(dx);
            st.w.push_back(v * cell);
        }
    return cache_.emplace(k, std::move(st)).first->second;
}

// ---------------------------------------------------------------------------

Stencil mollifier(double hx, double eps, Mollifier kind) {
    if (!(eps >= hx)) throw Error("noise", "mollification scale below the grid spacing");
    double ht = hx * hx;
    Scaling s = Scaling::parabolic(1);
    Stencil st;
    int RT = static_cast<int>(std::floor(eps * eps / ht)), RX = static_cast<int>(std::floor(eps / hx));
    double total = 0;
    for (int dt = -RT; dt <= RT; ++dt)
        for (int dx = -RX; dx <= RX; ++dx) {
            double v = bump(s, {dt * ht / (eps * eps), dx * hx / eps});
            if (kind == Mollifier::SquaredBump) v *= v;
            if (v == 0) continue;
            st.dt.push_back(dt);
            st.dx.push_back(dx);
            st.w.push_back(v);
            total += v;
        }
    for (double& w : st.w) w /= total;
    return st;
}

GridField white_noise(const GridSpec& g, std::uint64_t seed) {
    GridField f = g.field();
    std::mt19937_64 rng(mix(seed, 0, 0));
    std::normal_distribution<double> N;
    double s = 1 / std::sqrt(g.cell());
    for (double& v : f.data) v = N(rng) * s;
    return f;
}

GridField mollify(const GridField& eta, const Stencil& rho) {
    GridField out = eta;
    out.data = convolve(rho, eta, eta.data);
    return out;
}

GridField smooth_noise(const GridSpec& g, double eps, std::uint64_t seed, Mollifier kind) {
    return mollify(white_noise(g, seed), mollifier(g.hx, eps, kind));
}

// ---------------------------------------------------------------------------

Rat sector_order(const std::vector<Tree>& B, const TypeSet& ts) {
    if (B.empty()) return Rat(0);
    Rat lo = degree(B[0], ts);
    for (auto& t : B) lo = std::min(lo, degree(t, ts));
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), lo.get_num_mpz_t(), lo.get_den_mpz_t());
    Rat ord = 0;
    bool first = true;
    for (auto& t : B) {
        if (!t.is_planted()) continue;
        Unplanted u = unplant(t);
        if (!ts.is_kernel(u.type)) continue;
        Rat a = degree(u.body, ts) + ts.deg(u.type) + ts.scaling_max();
        Rat b = ts.mdeg(u.deco) - Rat(fl);
        Rat m = std::max(a, b);
        if (first || m > ord) ord = m;
        first = false;
    }
    return ord;
}

namespace {

/// Recursive evaluation of Pi^{P,x} and Pi^P on one grid, recentred at a base point or not.
class Engine {
public:
    Engine(Hopf& h, const KernelAssignment& K, const std::map<int, GridField>& noise, const Functional<double>& ell,
           const GridField& geom, std::vector<int> base, bool recentred)
        : h_(h), ts_(h.types()), K_(K), noise_(noise), ell_(ell), geom_(geom), xi_(std::move(base)),
          recentred_(recentred) {
        x_ = recentred ? geom.coord(xi_) : Point{0.0, 0.0};
    }

    const std::vector<double>& times(const Tree& t) {
        auto it = tm_.find(t);
        if (it != tm_.end()) return it->second;
        std::vector<double> f;
        if (t.is_planted()) {
            Unplanted u = unplant(t);
            if (!mi_is_zero(u.over)) throw Error("model", "over-decorated trees have no model");
            if (!ts_.is_kernel(u.type)) {
                auto nz = noise_.find(u.type);
                if (nz == noise_.end()) throw Error("model", "no noise assigned to type " + ts_.types[u.type].name);
                f = nz->second.data;
            } else {
                const GridKernel& K = kernel(u.type);
                f = convolve(K.derivative(u.deco), geom_, prepared(u.body));
                if (recentred_)
                    for (auto& j : mi_below(ts_.scaling, degree(t, ts_), true)) {
                        double c = kernel_jet(u.type, u.deco + j, u.body) / mi_factorial_d(j);
                        auto m = monomial(j);
                        for (size_t a = 0; a < f.size(); ++a) f[a] -= c * m[a];
                    }
            }
        } else {
            auto [k, fs] = factorise(t);
            f = monomial(k);
            for (auto& p : fs) {
                const auto& g = times(p);
                for (size_t a = 0; a < f.size(); ++a) f[a] *= g[a];
            }
        }
        return tm_.emplace(t, std::move(f)).first->second;
    }

    const std::vector<double>& prepared(const Tree& t) {
        auto it = pr_.find(t);
        if (it != pr_.end()) return it->second;
        std::vector<double> f(geom_.size(), 0.0);
        for (auto& [s, c] : apply_preparation(h_, ell_, t)) {
            const auto& g = times(s);
            for (size_t a = 0; a < f.size(); ++a) f[a] += c * g[a];
        }
        return pr_.emplace(t, std::move(f)).first->second;
    }

    /// (D^m K * Pi^P body)(x)
    double kernel_jet(int type, const MultiIndex& m, const Tree& body) {
        auto key = std::make_tuple(type, m, body);
        auto it = jets_.find(key);
        if (it != jets_.end()) return it->second;
        double v = convolve_at(kernel(type).derivative(m), geom_, prepared(body), xi_);
        jets_.emplace(key, v);
        return v;
    }

    CharacterT<double> character(const std::vector<Tree>& gens) {
        CharacterT<double> g;
        g.x = {-x_[0], -x_[1]};
        for (auto& p : gens) {
            Unplanted u = unplant(p);
            double v = 0;
            for (auto& j : mi_below(ts_.scaling, degree(p, ts_), true)) {
                double mono = power(-x_[0], j[0]) * power(-x_[1], j[1]) / mi_factorial_d(j);
                v -= mono * kernel_jet(u.type, u.deco + j, u.body);
            }
            g.planted[p] = v;
        }
        return g;
    }

    double at_base(const std::vector<double>& f) const { return f[geom_.index(xi_)]; }

private:
    const GridKernel& kernel(int type) const {
        auto it = K_.find(type);
        if (it == K_.end()) throw Error("model", "no kernel assigned to type " + ts_.types[type].name);
        return *it->second;
    }

    std::vector<double> monomial(const MultiIndex& k) const {
        std::vector<double> f(geom_.size(), 1.0);
        if (mi_is_zero(k)) return f;
        int nt = geom_.n[0], nx = geom_.n[1];
        for (int it = 0; it < nt; ++it) {
            double pt = power(geom_.origin[0] + it * geom_.h[0] - x_[0], k[0]);
            for (int ix = 0; ix < nx; ++ix)
                f[static_cast<size_t>(it) * nx + ix] = pt * power(geom_.origin[1] + ix * geom_.h[1] - x_[1], k[1]);
        }
        return f;
    }

    Hopf& h_;
    const TypeSet& ts_;
    const KernelAssignment& K_;
    const std::map<int, GridField>& noise_;
    const Functional<double>& ell_;
    const GridField& geom_;
    std::vector<int> xi_;
    bool recentred_;
    Point x_;
    std::map<Tree, std::vector<double>> tm_, pr_;
    std::map<std::tuple<int, MultiIndex, Tree>, double> jets_;
};

}  // namespace

Model::Model(History& H, std::vector<Tree> sector, KernelAssignment kernels, std::map<int, GridField> noise,
             Functional<double> ell, std::vector<std::vector<int>> base_points)
    : h_(H.hopf()), B_(std::move(sector)), K_(std::move(kernels)), noise_(std::move(noise)), ell_(std::move(ell)),
      base_(std::move(base_points)) {
    const TypeSet& ts = h_.types();
    std::sort(B_.begin(), B_.end());
    B_.erase(std::unique(B_.begin(), B_.end()), B_.end());
    if (!H.is_historic(B_)) throw Error("historic", "the sector is not historic");
    if (ts.dim() != 2) throw Error("model", "models are built for one space dimension");
    Rat ord = sector_order(B_, ts);
    for (auto& t : B_) {
        if (!t.is_planted()) continue;
        int ty = t.root().edges[0].type;
        if (!ts.is_kernel(ty)) continue;
        auto it = K_.find(ty);
        if (it == K_.end()) throw Error("model", "no kernel assigned to type " + ts.types[ty].name);
        if (Rat(it->second->order()) <= ord)
            throw Error("order", "kernel order " + std::to_string(it->second->order()) + " does not exceed ord(W) = " +
                                     rat_str(ord));
    }
    if (noise_.empty()) throw Error("model", "no noise assignment");
    geom_ = noise_.begin()->second;
    geom_.data.clear();
    for (auto& [ty, f] : noise_) {
        if (f.n != geom_.n || f.h != geom_.h) throw Error("model", "noise fields live on different grids");
        for (auto& [kt, K] : K_)
            if (std::abs(K->hx() - f.h[1]) > 1e-15) throw Error("model", "kernel sampled with a different spacing");
    }
    for (auto& b : base_) {
        std::vector<int> i = b;
        if (i.size() != 2 || !geom_.wrap(i) || i != b) throw Error("model", "base point outside the grid");
    }
    gens_ = positive_generators(h_, B_);
    pi_.resize(base_.size());
    pix_.resize(base_.size());
    g_.resize(base_.size());
    GridField geom = geom_;
    geom.data.assign(static_cast<size_t>(geom.n[0]) * geom.n[1], 0.0);
    for (size_t b = 0; b < base_.size(); ++b) {
        Engine e(h_, K_, noise_, ell_, geom, base_[b], true);
        for (auto& t : B_) {
            pix_[b][t] = e.times(t);
            pi_[b][t] = e.prepared(t);
        }
        g_[b] = e.character(gens_);
    }
}

int Model::index_of(const Tree& t) const {
    auto it = std::lower_bound(B_.begin(), B_.end(), t);
    if (it == B_.end() || *it != t) return -1;
    return static_cast<int>(it - B_.begin());
}

const std::vector<double>& Model::pi(int base, const Tree& t) const {
    auto it = pi_.at(base).find(t);
    if (it == pi_.at(base).end()) throw Error("model", "tree outside the sector");
    return it->second;
}

const std::vector<double>& Model::pi_times(int base, const Tree& t) const {
    auto it = pix_.at(base).find(t);
    if (it == pix_.at(base).end()) throw Error("model", "tree outside the sector");
    return it->second;
}

std::vector<double> Model::pi_bold(const Tree& t) const {
    GridField geom = geom_;
    geom.data.assign(static_cast<size_t>(geom.n[0]) * geom.n[1], 0.0);
    Engine e(h_, K_, noise_, ell_, geom, {0, 0}, false);
    return e.prepared(t);
}

Eigen::MatrixXd Model::gamma_of(const CharacterT<double>& g) const {
    int n = static_cast<int>(B_.size());
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (int col = 0; col < n; ++col)
        for (auto& [p, c] : h_.delta(B_[col])) {
            int row = index_of(p.first);
            if (row < 0) throw Error("model", "sector not closed under the coaction");
            M(row, col) += c.get_d() * g.eval(p.second);
        }
    return M;
}

Eigen::MatrixXd Model::gamma(int x, int y) const {
    auto gi = inverse(h_, g_.at(x), gens_);
    return gamma_of(convolve(h_, gi, g_.at(y), gens_));
}

json Model::dump(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const TypeSet& ts = h_.types();
    json idx{{"grid", {{"nt", geom_.n[0]}, {"nx", geom_.n[1]}, {"ht", geom_.h[0]}, {"hx", geom_.h[1]}}},
             {"base_points", base_},
             {"preparation", functional_to_json(ell_, ts)},
             {"trees", json::array()},
             {"fields", json::array()}};
    for (auto& t : B_) idx["trees"].push_back(tree_to_json(t, ts));
    for (size_t b = 0; b < base_.size(); ++b)
        for (size_t i = 0; i < B_.size(); ++i) {
            std::string name = "pi_" + std::to_string(b) + "_" + std::to_string(i) + ".bin";
            const auto& f = pi_[b].at(B_[i]);
            std::ofstream out(fs::path(dir) / name, std::ios::binary);
            out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
            idx["fields"].push_back({{"base", b}, {"tree", i}, {"file", name}, {"dtype", "float64"}});
        }
    std::ofstream(fs::path(dir) / "index.json") << idx.dump(2);
    return idx;
}

// ---------------------------------------------------------------------------

ChainReport check_chain(const Model& m) {
    ChainReport r;
    const auto& B = m.sector();
    int nb = static_cast<int>(m.base_points().size());
    for (int x = 0; x < nb; ++x)
        for (int y = 0; y < nb; ++y) {
            if (x == y) continue;
            ++r.pairs;
            Eigen::MatrixXd G = m.gamma(x, y);
            for (size_t col = 0; col < B.size(); ++col) {
                const auto& target = m.pi(y, B[col]);
                std::vector<double> f(target.size(), 0.0);
                for (size_t row = 0; row < B.size(); ++row) {
                    double c = G(static_cast<int>(row), static_cast<int>(col));
                    if (c == 0) continue;
                    const auto& g = m.pi(x, B[row]);
                    for (size_t a = 0; a < f.size(); ++a) f[a] += c * g[a];
                }
                double num = 0;
                for (size_t a = 0; a < f.size(); ++a) num = std::max(num, std::abs(f[a] - target[a]));
                double rel = num / std::max(sup_abs(target), 1e-300);
                if (rel > r.defect) {
                    r.defect = rel;
                    r.worst = B[col].key();
                }
            }
        }
    return r;
}

double check_cocycle(const Model& m) {
    int nb = static_cast<int>(m.base_points().size());
    double worst = 0;
    for (int x = 0; x < nb; ++x)
        for (int y = 0; y < nb; ++y)
            for (int z = 0; z < nb; ++z) {
                Eigen::MatrixXd lhs = m.gamma(x, y) * m.gamma(y, z), rhs = m.gamma(x, z);
                worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff() / std::max(rhs.cwiseAbs().maxCoeff(), 1e-300));
            }
    return worst;
}

std::map<Tree, double> model_difference(const Model& a, const Model& b) {
    std::map<Tree, double> out;
    for (auto& t : b.sector()) {
        if (a.index_of(t) < 0) continue;
        const auto& u = a.pi(0, t);
        const auto& v = b.pi(0, t);
        double num = 0;
        for (size_t i = 0; i < u.size(); ++i) num = std::max(num, std::abs(u[i] - v[i]));
        out[t] = num / std::max(sup_abs(v), 1e-300);
    }
    return out;
}

std::vector<std::function<double(const Point&)>> test_bank() {
    Scaling s = Scaling::parabolic(1);
    std::vector<std::function<double(const Point&)>> bank;
    bank.push_back([s](const Point& z) { return bump(s, z); });
    bank.push_back([s](const Point& z) { return bump(s, z) * z[1]; });
    bank.push_back([s](const Point& z) { return bump(s, z) * z[0]; });
    bank.push_back([s](const Point& z) { return bump(s, z) * z[1] * z[1]; });
    bank.push_back([s](const Point& z) { return bump(s, z) * z[0] * z[1]; });
    return bank;
}

ExponentFit recentering_exponent(const Model& m, int base, const Tree& t, std::vector<double> lambdas) {
    const GridField& g = m.geometry();
    double ht = g.h[0], hx = g.h[1];
    const auto& f = m.pi(base, t);
    const auto& b = m.base_points().at(base);
    auto bank = test_bank();
    ExponentFit r;
    r.lambdas = lambdas;
    for (double lam : lambdas) {
        if (lam < 4 * hx) throw Error("resolution", "test-function scale " + std::to_string(lam) +
                                                        " is below four grid spacings " + std::to_string(hx));
        int RT = static_cast<int>(std::floor(lam * lam / ht)), RX = static_cast<int>(std::floor(lam / hx));
        if (2 * RT + 1 > g.n[0] || 2 * RX + 1 > g.n[1]) throw Error("resolution", "test function wider than the grid");
        std::vector<double> acc(bank.size(), 0.0);
        double scale = ht * hx / (lam * lam * lam), mass = 0;
        for (int dt = -RT; dt <= RT; ++dt)
            for (int dx = -RX; dx <= RX; ++dx) {
                std::vector<int> i{b[0] + dt, b[1] + dx};
                if (!g.wrap(i)) continue;
                double v = f[g.index(i)];
                Point z{dt * ht / (lam * lam), dx * hx / lam};
                for (size_t q = 0; q < bank.size(); ++q) acc[q] += v * bank[q](z) * scale;
                mass += bank[0](z) * scale;
            }
        double s = 0;
        for (double a : acc) s = std::max(s, std::abs(a) / mass);
        r.sups.push_back(s);
    }
    Fit fit = loglog_fit(r.lambdas, r.sups);
    r.slope = fit.slope;
    r.residual = fit.residual;
    return r;
}

// ---------------------------------------------------------------------------

MonteCarloOracle::MonteCarloOracle(Hopf& h, KernelAssignment kernels, const std::vector<Tree>& sector,
                                   MonteCarloOptions opt)
    : h_(h), K_(std::move(kernels)), opt_(opt) {
    const TypeSet& ts = h_.types();
    if (opt_.samples < 2 || opt_.samples % 2) throw Error("oracle", "the sample count must be a positive even number");
    if (K_.empty()) throw Error("oracle", "no kernel assignment");
    for (int t = 0; t < ts.size(); ++t)
        if (!ts.is_kernel(t)) noises_.push_back(t);
    double hx = K_.begin()->second->hx();
    for (auto& [t, K] : K_)
        if (std::abs(K->hx() - hx) > 1e-15) throw Error("oracle", "kernels sampled with different spacings");
    rho_ = mollifier(hx, opt_.eps, opt_.kind);
    for (auto& t : sector) depth_ = std::max(depth_, kernel_depth(t.root(), ts));
    int kt = 0, kx = 0, mt = 0, mx = 0;
    for (auto& [t, K] : K_) kt = std::max(kt, K->reach_t()), kx = std::max(kx, K->reach_x());
    for (size_t s = 0; s < rho_.size(); ++s) mt = std::max(mt, std::abs(rho_.dt[s])), mx = std::max(mx, std::abs(rho_.dx[s]));
    wt_ = depth_ * kt + mt;
    wx_ = depth_ * kx + mx;
}

void MonteCarloOracle::draw(int pair, std::vector<std::vector<double>>& eta) const {
    double hx = K_.begin()->second->hx();
    double s = 1 / std::sqrt(hx * hx * hx);
    size_t n = static_cast<size_t>(2 * wt_ + 1) * (2 * wx_ + 1);
    eta.resize(noises_.size());
    for (size_t q = 0; q < noises_.size(); ++q) {
        std::mt19937_64 rng(mix(opt_.seed, static_cast<std::uint64_t>(pair), static_cast<std::uint64_t>(noises_[q])));
        std::normal_distribution<double> N;
        eta[q].resize(n);
        for (auto& v : eta[q]) v = N(rng) * s;
    }
}

std::vector<double> MonteCarloOracle::psi(const Key& key) const {
    int W = 2 * wx_ + 1;
    std::vector<double> out(static_cast<size_t>(2 * wt_ + 1) * W, 0.0);
    auto put = [&](int t, int x, double v) {
        if (std::abs(t) > wt_ || std::abs(x) > wx_) throw Error("oracle", "window too small for the tree");
        out[static_cast<size_t>(t + wt_) * W + (x + wx_)] += v;
    };
    if (key.ktype < 0) {
        for (size_t m = 0; m < rho_.size(); ++m) put(-rho_.dt[m], -rho_.dx[m], rho_.w[m]);
        return out;
    }
    const GridKernel& K = *K_.at(key.ktype);
    const Stencil& st = K.derivative(key.k);
    double hx = K.hx(), ht = hx * hx;
    for (size_t s = 0; s < st.size(); ++s) {
        double c = st.w[s] * power(-st.dt[s] * ht, key.j[0]) * power(-st.dx[s] * hx, key.j[1]);
        for (size_t m = 0; m < rho_.size(); ++m) put(-st.dt[s] - rho_.dt[m], -st.dx[s] - rho_.dx[m], c * rho_.w[m]);
    }
    return out;
}

void MonteCarloOracle::ensure(const std::vector<Key>& keys) {
    std::vector<Key> missing;
    for (auto& k : keys) {
        if (k.ntype < 0) {
            if (C_.count(k)) continue;
            const Stencil& st = K_.at(k.ktype)->derivative(k.k);
            double hx = K_.at(k.ktype)->hx(), ht = hx * hx, c = 0;
            for (size_t s = 0; s < st.size(); ++s)
                c += st.w[s] * power(-st.dt[s] * ht, k.j[0]) * power(-st.dx[s] * hx, k.j[1]);
            C_[k] = c;
        } else if (!L_.count(k)) {
            bool dup = false;
            for (auto& m : missing) dup = dup || (!(m < k) && !(k < m));
            if (!dup) missing.push_back(k);
        }
    }
    if (missing.empty()) return;
    std::vector<std::vector<double>> psis;
    std::vector<size_t> slot;
    for (auto& k : missing) {
        psis.push_back(psi(k));
        slot.push_back(static_cast<size_t>(std::find(noises_.begin(), noises_.end(), k.ntype) - noises_.begin()));
    }
    int pairs = opt_.samples / 2;
    std::vector<std::vector<double>> vals(missing.size(), std::vector<double>(pairs));
    parallel_for(pairs, [&](int p) {
        std::vector<std::vector<double>> eta;
        draw(p, eta);
        for (size_t q = 0; q < missing.size(); ++q) {
            const auto& e = eta[slot[q]];
            const auto& w = psis[q];
            double s = 0;
            for (size_t a = 0; a < w.size(); ++a) s += w[a] * e[a];
            vals[q][p] = s;
        }
    });
    for (size_t q = 0; q < missing.size(); ++q) L_[missing[q]] = std::move(vals[q]);
}

bool MonteCarloOracle::collect(const Tree& t, const Functional<double>& ell, std::vector<Key>& keys) {
    const TypeSet& ts = h_.types();
    if (t.is_one()) return true;
    auto [k, fs] = factorise(t);
    if (!mi_is_zero(k)) return true;
    if (t.is_planted()) fs = {t};
    for (auto& f : fs) {
        Unplanted u = unplant(f);
        if (!ts.is_kernel(u.type)) {
            keys.push_back({-1, u.type, {}, {}});
            continue;
        }
        if (!K_.count(u.type)) throw Error("oracle", "no kernel assigned to type " + ts.types[u.type].name);
        for (auto& [s, c] : apply_preparation(h_, ell, u.body)) {
            auto [j, gs] = factorise(s);
            if (gs.empty())
                keys.push_back({u.type, -1, u.deco, j});
            else if (gs.size() == 1 && is_noise_planted(gs[0], ts))
                keys.push_back({u.type, gs[0].root().edges[0].type, u.deco, j});
            else
                return false;
        }
    }
    return true;
}

bool MonteCarloOracle::fast(const Tree& t, const Functional<double>& ell) {
    std::vector<Key> keys;
    return collect(t, ell, keys);
}

double MonteCarloOracle::value_times(const Tree& t, const Functional<double>& ell, int pair, double sign) {
    const TypeSet& ts = h_.types();
    if (t.is_one()) return 1;
    auto [k, fs] = factorise(t);
    if (!mi_is_zero(k)) return 0;
    if (t.is_planted()) fs = {t};
    double v = 1;
    for (auto& f : fs) {
        Unplanted u = unplant(f);
        if (!ts.is_kernel(u.type)) {
            v *= sign * L_.at({-1, u.type, {}, {}})[pair];
            continue;
        }
        double s = 0;
        for (auto& [w, c] : apply_preparation(h_, ell, u.body)) {
            auto [j, gs] = factorise(w);
            if (gs.empty())
                s += c * C_.at({u.type, -1, u.deco, j});
            else
                s += c * sign * L_.at({u.type, gs[0].root().edges[0].type, u.deco, j})[pair];
        }
        v *= s;
    }
    return v;
}

Estimate MonteCarloOracle::summarise(const std::vector<double>& y) const {
    Estimate e;
    double n = static_cast<double>(y.size());
    for (double v : y) e.mean += v;
    e.mean /= n;
    double ss = 0;
    for (double v : y) ss += (v - e.mean) * (v - e.mean);
    e.se = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0;
    return e;
}

Estimate MonteCarloOracle::estimate_times(const Tree& t, const Functional<double>& ell) {
    std::vector<Key> keys;
    if (!collect(t, ell, keys)) {
        Functional<double> none;
        throw Error("oracle", "tree outside the fast path; use the field path");
    }
    ensure(keys);
    int pairs = opt_.samples / 2;
    std::vector<double> y(pairs);
    for (int p = 0; p < pairs; ++p) y[p] = 0.5 * (value_times(t, ell, p, 1) + value_times(t, ell, p, -1));
    return summarise(y);
}

Estimate MonteCarloOracle::estimate_prepared(const Tree& t, const Functional<double>& ell) {
    auto P = apply_preparation(h_, ell, t);
    std::vector<Key> keys;
    for (auto& [s, c] : P)
        if (!collect(s, ell, keys)) return estimate_prepared_fields(t, ell, opt_.samples);
    ensure(keys);
    int pairs = opt_.samples / 2;
    std::vector<double> y(pairs, 0.0);
    for (int p = 0; p < pairs; ++p)
        for (auto& [s, c] : P) y[p] += c * 0.5 * (value_times(s, ell, p, 1) + value_times(s, ell, p, -1));
    return summarise(y);
}

Estimate MonteCarloOracle::estimate_prepared_fields(const Tree& t, const Functional<double>& ell, int samples) {
    if (samples < 2 || samples % 2 || samples > opt_.samples)
        throw Error("oracle", "field-path sample count must be even and within the oracle's samples");
    double hx = K_.begin()->second->hx(), ht = hx * hx;
    int mt = 0, mx = 0;
    for (size_t s = 0; s < rho_.size(); ++s) mt = std::max(mt, std::abs(rho_.dt[s])), mx = std::max(mx, std::abs(rho_.dx[s]));
    int pt = wt_ - mt, px = wx_ - mx;
    GridField geom({2 * pt + 1, 2 * px + 1}, {ht, hx}, {-pt * ht, -px * hx}, Scaling::parabolic(1), false);
    std::vector<int> centre{pt, px};
    int W = 2 * wx_ + 1;
    int pairs = samples / 2;
    std::vector<double> y(pairs);
    parallel_for(pairs, [&](int p) {
        std::vector<std::vector<double>> eta;
        draw(p, eta);
        double acc = 0;
        for (double sign : {1.0, -1.0}) {
            std::map<int, GridField> noise;
            for (size_t q = 0; q < noises_.size(); ++q) {
                GridField f = geom;
                for (int it = 0; it < geom.n[0]; ++it)
                    for (int ix = 0; ix < geom.n[1]; ++ix) {
                        double s = 0;
                        for (size_t m = 0; m < rho_.size(); ++m) {
                            int a = it - pt - rho_.dt[m] + wt_, b = ix - px - rho_.dx[m] + wx_;
                            s += rho_.w[m] * eta[q][static_cast<size_t>(a) * W + b];
                        }
                        f.data[static_cast<size_t>(it) * geom.n[1] + ix] = sign * s;
                    }
                noise.emplace(noises_[q], std::move(f));
            }
            Engine e(h_, K_, noise, ell, geom, centre, false);
            acc += 0.5 * e.at_base(e.prepared(t));
        }
        y[p] = acc;
    });
    return summarise(y);
}

double MonteCarloOracle::expect(const Tree& t, const Functional<double>& ell) {
    if (t.is_one()) return 1;
    if (fast(t, ell)) return estimate_times(t, ell).mean;
    Functional<double> times_only;
    return estimate_prepared_fields(t, ell, opt_.samples).mean;
}

double MonteCarloOracle::stderr_of(const Tree& t, const Functional<double>& ell) {
    if (t.is_one()) return 0;
    return estimate_times(t, ell).se;
}

double MonteCarloOracle::second_moment_closed_form() const {
    Key k{K_.begin()->first, noises_.at(0), mi_zero(2), mi_zero(2)};
    double hx = K_.begin()->second->hx();
    double s = 0;
    for (double v : psi(k)) s += v * v;
    return s / (hx * hx * hx);
}

}  // namespace regkit
