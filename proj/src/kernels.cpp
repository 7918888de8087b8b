#include "regkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <set>

#include "regkit/quad.hpp"

namespace regkit {

Jet jet_at(const JetFn& f, const Point& z, int order) {
    int D = static_cast<int>(z.size());
    std::vector<Jet> v;
    v.reserve(D);
    for (int i = 0; i < D; ++i) v.push_back(Jet::variable(D, order, i, z[i]));
    return f(v);
}

double value_at(const JetFn& f, const Point& z) { return jet_at(f, z, 0).value(); }

static bool jet_is_zero(const Jet& j) {
    for (double c : j.coeffs())
        if (c != 0) return false;
    return true;
}

// ---------------------------------------------------------------------------

Scaling Scaling::parabolic(int space_dims) {
    Scaling s;
    s.s.assign(space_dims + 1, 1);
    s.s[0] = 2;
    return s;
}

int Scaling::total() const { return std::accumulate(s.begin(), s.end(), 0); }

int Scaling::lcm() const {
    int m = 1;
    for (int v : s) m = std::lcm(m, v);
    return m;
}

int Scaling::degree(const MultiIndex& k) const {
    int r = 0;
    for (size_t i = 0; i < s.size(); ++i) r += s[i] * k[i];
    return r;
}

double Scaling::norm(const Point& z) const {
    int m = lcm();
    double q = 0;
    for (size_t i = 0; i < s.size(); ++i) q += std::pow(std::abs(z[i]), 2.0 * m / s[i]);
    return std::pow(q, 1.0 / (2 * m));
}

Jet Scaling::norm(const std::vector<Jet>& z) const {
    int m = lcm();
    Jet q(z[0].nvars(), z[0].order(), 0);
    for (size_t i = 0; i < s.size(); ++i) q += pow_int(z[i], 2 * m / s[i]);
    if (q.value() <= 0) return Jet(z[0].nvars(), z[0].order(), 0);
    return pow(q, 1.0 / (2 * m));
}

Point Scaling::dilate(const Point& z, double n) const {
    Point r(z);
    for (size_t i = 0; i < s.size(); ++i) r[i] *= std::exp2(s[i] * n);
    return r;
}

std::vector<Jet> Scaling::dilate(const std::vector<Jet>& z, double n) const {
    std::vector<Jet> r(z);
    for (size_t i = 0; i < s.size(); ++i) r[i] *= std::exp2(s[i] * n);
    return r;
}

std::vector<MultiIndex> Scaling::indices_below(int cap, bool strict) const {
    std::vector<MultiIndex> out;
    MultiIndex k(s.size(), 0);
    std::function<void(size_t, int)> rec = [&](size_t i, int used) {
        if (i == s.size()) {
            out.push_back(k);
            return;
        }
        for (int v = 0;; ++v) {
            int u = used + v * s[i];
            if (strict ? u >= cap : u > cap) break;
            k[i] = v;
            rec(i + 1, u);
        }
        k[i] = 0;
    };
    if (strict ? cap > 0 : cap >= 0) rec(0, 0);
    return out;
}

// ---------------------------------------------------------------------------

double smooth_step(double u) {
    if (u <= 0) return 0;
    if (u >= 1) return 1;
    double a = std::exp(-1 / u), b = std::exp(-1 / (1 - u));
    return a / (a + b);
}

Jet smooth_step(const Jet& u) {
    if (u.value() <= 0) return Jet(u.nvars(), u.order(), 0);
    if (u.value() >= 1) return Jet(u.nvars(), u.order(), 1);
    Jet a = exp(-1.0 / u), b = exp(-1.0 / (1.0 - u));
    return a / (a + b);
}

Cutoff::Cutoff(Scaling s, double inner, double outer) : s_(std::move(s)), inner_(inner), outer_(outer) {
    if (!(0 < inner && inner < outer && outer <= 1)) throw Error("cutoff", "need 0 < inner < outer <= 1");
}

double Cutoff::chi(const Point& z) const { return smooth_step((outer_ - s_.norm(z)) / (outer_ - inner_)); }

Jet Cutoff::chi(const std::vector<Jet>& z) const {
    Point p(z.size());
    for (size_t i = 0; i < z.size(); ++i) p[i] = z[i].value();
    double r = s_.norm(p);
    int nv = z[0].nvars(), o = z[0].order();
    if (r <= inner_) return Jet(nv, o, 1);
    if (r >= outer_) return Jet(nv, o, 0);
    return smooth_step((outer_ - s_.norm(z)) / (outer_ - inner_));
}

JetFn heat_kernel(int d) {
    return [d](const std::vector<Jet>& z) {
        const Jet& t = z[0];
        int nv = t.nvars(), o = t.order();
        if (t.value() <= 0) return Jet(nv, o, 0);
        Jet r2(nv, o, 0);
        double r2v = 0;
        for (int i = 1; i <= d; ++i) {
            r2 += z[i] * z[i];
            r2v += z[i].value() * z[i].value();
        }
        if (r2v / (4 * t.value()) > 700) return Jet(nv, o, 0);
        return pow(t, -0.5 * d) * exp(r2 * pow(t, -1.0) * -0.25) * std::pow(4 * M_PI, -0.5 * d);
    };
}

// ---------------------------------------------------------------------------

double DyadicKernel::component_value(int n, const Point& z) const {
    auto& c = components.at(n);
    return c.kind == KernelComponent::Kind::Analytic ? value_at(c.f, z) : c.value(z);
}

double DyadicKernel::reassemble(const Point& z) const {
    double s = 0;
    for (int n = 0; n < levels(); ++n) s += component_value(n, z);
    if (remainder) s += value_at(remainder, z);
    if (near) s += value_at(near, z);
    return s;
}

DyadicKernel DyadicKernel::scaled(double c) const {
    DyadicKernel r = *this;
    for (auto& k : r.components) {
        if (k.f) k.f = [f = k.f, c](const std::vector<Jet>& z) { return f(z) * c; };
        if (k.value) k.value = [f = k.value, c](const Point& z) { return f(z) * c; };
    }
    if (r.remainder) r.remainder = [f = r.remainder, c](const std::vector<Jet>& z) { return f(z) * c; };
    if (r.near) r.near = [f = r.near, c](const std::vector<Jet>& z) { return f(z) * c; };
    return r;
}

static std::function<double(const Point&)> as_value(const KernelComponent& k) {
    if (k.kind == KernelComponent::Kind::Analytic) return [f = k.f](const Point& z) { return value_at(f, z); };
    return k.value;
}

static JetFn sum_fn(const JetFn& a, const JetFn& b) {
    if (!a) return b;
    if (!b) return a;
    return [a, b](const std::vector<Jet>& z) { return a(z) + b(z); };
}

DyadicKernel operator+(const DyadicKernel& a, const DyadicKernel& b) {
    if (a.levels() != b.levels() || a.scaling.s != b.scaling.s)
        throw Error("kernel", "cannot add kernels with different level counts or scalings");
    DyadicKernel r = a;
    for (int n = 0; n < a.levels(); ++n) {
        auto &x = a.components[n], &y = b.components[n];
        KernelComponent c;
        c.kind = std::max(x.kind, y.kind);
        c.fd_step = std::max(x.fd_step, y.fd_step);
        if (c.kind == KernelComponent::Kind::Analytic) {
            c.f = sum_fn(x.f, y.f);
        } else {
            c.value = [p = as_value(x), q = as_value(y)](const Point& z) { return p(z) + q(z); };
        }
        r.components[n] = c;
    }
    r.remainder = sum_fn(a.remainder, b.remainder);
    r.near = sum_fn(a.near, b.near);
    return r;
}

DyadicKernel dyadic_decompose(const JetFn& F, const Cutoff& c, int N, const Rat& beta, int order) {
    if (N <= 0) throw Error("dyadic", "number of levels must be positive");
    DyadicKernel K;
    K.beta = beta;
    K.order = order;
    K.scaling = c.scaling();
    for (int n = 0; n <= N; ++n) {
        KernelComponent comp;
        comp.f = [F, c, n](const std::vector<Jet>& z) {
            Jet p = c.phi_n(n, z);
            if (jet_is_zero(p)) return p;
            return p * F(z);
        };
        K.components.push_back(comp);
    }
    K.remainder = [F, c](const std::vector<Jet>& z) {
        Jet w = 1.0 - c.chi(z);
        if (jet_is_zero(w)) return w;
        return w * F(z);
    };
    K.near = [F, c, N](const std::vector<Jet>& z) {
        Jet w = c.chi(c.scaling().dilate(z, N + 1));
        if (jet_is_zero(w)) return w;
        return w * F(z);
    };
    return K;
}

DyadicKernel sampled_kernel(const std::vector<std::function<double(const Point&)>>& comps, const Scaling& s,
                            const Rat& beta, int order, double fd_step, bool values_only) {
    DyadicKernel K;
    K.beta = beta;
    K.order = order;
    K.scaling = s;
    for (auto& f : comps) {
        KernelComponent c;
        c.kind = values_only ? KernelComponent::Kind::ValueOnly : KernelComponent::Kind::Sampled;
        c.value = f;
        c.fd_step = fd_step;
        K.components.push_back(c);
    }
    return K;
}

namespace {

double binom(int n, int k) {
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// centred differences, offsets (k/2 - j) h along each axis
double fd_derivative(const std::function<double(const Point&)>& f, const Point& z, const MultiIndex& k,
                     const std::vector<double>& h) {
    size_t D = z.size();
    double total = 0;
    MultiIndex j(D, 0);
    std::function<void(size_t, double, Point&)> rec = [&](size_t a, double w, Point& p) {
        if (a == D) {
            total += w * f(p);
            return;
        }
        for (int jj = 0; jj <= k[a]; ++jj) {
            double save = p[a];
            p[a] += (0.5 * k[a] - jj) * h[a];
            rec(a + 1, w * ((jj % 2) ? -1.0 : 1.0) * binom(k[a], jj) / std::pow(h[a], k[a]), p);
            p[a] = save;
        }
    };
    Point p = z;
    rec(0, 1.0, p);
    return total;
}

}  // namespace

NormReport kernel_norm(const DyadicKernel& K, const NormOptions& opt) {
    NormReport rep;
    const Scaling& s = K.scaling;
    int D = s.dims(), cap = 2 * K.order;
    auto ks = s.indices_below(cap, false);
    double shift = s.total() - K.beta.get_d();
    bool any_fd = false, any_vo = false, any_an = false;
    int res = opt.resolution;
    for (int n = 0; n < K.levels(); ++n) {
        const auto& c = K.components[n];
        std::vector<double> h(D);
        for (int a = 0; a < D; ++a) h[a] = c.fd_step * std::exp2(-s.s[a] * n);
        // rescaled sup over derivatives at u in the unit ball
        auto probe = [&](const Point& u, MultiIndex& arg) {
            Point z = s.dilate(u, -n);
            double best = 0;
            if (c.kind == KernelComponent::Kind::Analytic) {
                Jet J = jet_at(c.f, z, cap);
                for (auto& k : ks) {
                    double v = std::abs(J.deriv(k)) / std::exp2((shift + s.degree(k)) * n);
                    if (v > best) best = v, arg = k;
                }
            } else if (c.kind == KernelComponent::Kind::Sampled) {
                for (auto& k : ks) {
                    double v = std::abs(fd_derivative(c.value, z, k, h)) / std::exp2((shift + s.degree(k)) * n);
                    if (v > best) best = v, arg = k;
                }
            } else {
                best = std::abs(c.value(z)) / std::exp2(shift * n);
                arg = mi_zero(D);
            }
            return best;
        };
        if (c.kind == KernelComponent::Kind::Analytic) any_an = true;
        if (c.kind == KernelComponent::Kind::Sampled) any_fd = true;
        if (c.kind == KernelComponent::Kind::ValueOnly) any_vo = true;

        std::vector<std::pair<double, Point>> top;
        double best = 0;
        MultiIndex bestk = mi_zero(D);
        MultiIndex idx(D, 0);
        while (true) {
            Point u(D);
            for (int a = 0; a < D; ++a) u[a] = -1 + 2.0 * idx[a] / res;
            if (s.norm(u) <= 1) {
                MultiIndex k;
                double v = probe(u, k);
                if (v > best) best = v, bestk = k;
                if (v > 0) {
                    top.emplace_back(v, u);
                    std::sort(top.begin(), top.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
                    if (static_cast<int>(top.size()) > opt.refine_candidates) top.pop_back();
                }
            }
            int a = D - 1;
            while (a >= 0 && idx[a] == res) idx[a--] = 0;
            if (a < 0) break;
            ++idx[a];
        }
        // compass search from the best grid points
        for (auto [v, u] : top) {
            double step = 1.0 / res;
            while (step > opt.refine_tol / res) {
                bool moved = false;
                for (int a = 0; a < D && !moved; ++a)
                    for (double sg : {1.0, -1.0}) {
                        Point w = u;
                        w[a] += sg * step;
                        if (s.norm(w) > 1) continue;
                        MultiIndex k;
                        double vw = probe(w, k);
                        if (vw > v) {
                            v = vw, u = w, moved = true;
                            if (v > best) best = v, bestk = k;
                            break;
                        }
                    }
                if (!moved) step /= 2;
            }
        }
        rep.per_level.push_back(best);
        if (best >= rep.value) {
            rep.value = best;
            rep.argmax_k = bestk;
        }
        if (c.kind == KernelComponent::Kind::Sampled) rep.fd_step = std::max(rep.fd_step, c.fd_step);
    }
    rep.degraded = any_vo && cap > 0;
    rep.mode = any_vo ? "values-only" : any_fd ? "finite-difference" : (any_an ? "analytic" : "empty");
    return rep;
}

DyadicKernel kernel_from_json(const json& j) {
    std::string formula = j.value("formula", "heat");
    int d = j.value("space_dims", 1);
    int N = j.value("N", 12);
    Rat beta = parse_rat(j.contains("beta") ? (j["beta"].is_string() ? j["beta"].get<std::string>()
                                                                      : std::to_string(j["beta"].get<int>()))
                                            : std::string("2"));
    int order = j.value("order", 1);
    JetFn F;
    if (formula == "heat") {
        F = heat_kernel(d);
    } else if (formula == "zero") {
        F = [](const std::vector<Jet>& z) { return Jet(z[0].nvars(), z[0].order(), 0); };
    } else if (formula == "one") {
        F = [](const std::vector<Jet>& z) { return Jet(z[0].nvars(), z[0].order(), 1); };
    } else {
        throw Error("descriptor", "unknown kernel formula '" + formula + "'");
    }
    return dyadic_decompose(F, Cutoff(Scaling::parabolic(d)), N, beta, order);
}

json norm_report_json(const NormReport& r) {
    return {{"value", r.value},         {"degraded", r.degraded},   {"mode", r.mode},
            {"fd_step", r.fd_step},     {"per_level", r.per_level}, {"argmax_k", r.argmax_k}};
}

// ---------------------------------------------------------------------------

GridField::GridField(std::vector<int> n_, std::vector<double> h_, std::vector<double> o_, Scaling s, bool per)
    : n(std::move(n_)), h(std::move(h_)), origin(std::move(o_)), scaling(std::move(s)), periodic(per) {
    size_t total = 1;
    for (int v : n) total *= v;
    data.assign(total, 0.0);
}

size_t GridField::index(const std::vector<int>& i) const {
    size_t r = 0;
    for (size_t a = 0; a < n.size(); ++a) r = r * n[a] + i[a];
    return r;
}

bool GridField::wrap(std::vector<int>& i) const {
    for (size_t a = 0; a < n.size(); ++a) {
        if (i[a] >= 0 && i[a] < n[a]) continue;
        if (!periodic) return false;
        i[a] = ((i[a] % n[a]) + n[a]) % n[a];
    }
    return true;
}

Point GridField::coord(const std::vector<int>& i) const {
    Point p(n.size());
    for (size_t a = 0; a < n.size(); ++a) p[a] = origin[a] + i[a] * h[a];
    return p;
}

void GridField::fill(const std::function<double(const Point&)>& f) {
    std::vector<int> i(n.size(), 0);
    for (size_t k = 0; k < data.size(); ++k) {
        data[k] = f(coord(i));
        for (int a = static_cast<int>(n.size()) - 1; a >= 0; --a) {
            if (++i[a] < n[a]) break;
            i[a] = 0;
        }
    }
}

namespace {

double bump_raw(const Scaling& s, const Point& z) {
    int m = s.lcm();
    double q = 0;
    for (size_t i = 0; i < z.size(); ++i) q += std::pow(std::abs(z[i]), 2.0 * m / s.s[i]);
    return q < 1 ? std::exp(-1 / (1 - q)) : 0.0;
}

double bump_mass(const Scaling& s) {
    static std::map<std::vector<int>, double> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(s.s);
    if (it != cache.end()) return it->second;
    int D = s.dims();
    QuadRule q = gauss_legendre(48, -1, 1);
    double total = 0;
    std::vector<int> i(D, 0);
    while (true) {
        Point z(D);
        double w = 1;
        for (int a = 0; a < D; ++a) z[a] = q.x[i[a]], w *= q.w[i[a]];
        total += w * bump_raw(s, z);
        int a = D - 1;
        while (a >= 0 && i[a] == 47) i[a--] = 0;
        if (a < 0) break;
        ++i[a];
    }
    cache[s.s] = total;
    return total;
}

template <class F>
void for_each_point(const GridField& g, int stride, F&& fn) {
    size_t D = g.n.size();
    std::vector<int> i(D, 0);
    while (true) {
        fn(i);
        int a = static_cast<int>(D) - 1;
        while (a >= 0 && i[a] + stride >= g.n[a]) i[a--] = 0;
        if (a < 0) break;
        i[a] += stride;
    }
}

}  // namespace

double bump(const Scaling& s, const Point& z) { return bump_raw(s, z) / bump_mass(s); }

HolderReport holder_norm_estimate(const GridField& f, double alpha, const HolderOptions& opt) {
    if (alpha == std::round(alpha)) throw Error("holder", "alpha must not be an integer");
    if (alpha > 1) throw Error("holder", "positive alpha is supported below 1 only");
    const Scaling& s = f.scaling;
    size_t D = f.n.size();
    HolderReport rep;
    auto weight = [&](const Point& x) { return std::pow(1 + s.norm(x), opt.weight_power); };
    double finest = 0;
    for (size_t a = 0; a < D; ++a) finest = std::max(finest, std::pow(f.h[a], 1.0 / s.s[a]));
    rep.finest_scale = finest;
    int stride = std::max(1, opt.stride);

    if (alpha > 0) {
        for_each_point(f, stride, [&](const std::vector<int>& i) {
            Point x = f.coord(i);
            double w = weight(x), v = f.at(i);
            rep.sup_part = std::max(rep.sup_part, std::abs(v) / w);
            for (size_t a = 0; a < D; ++a) {
                for (int m = 1; m < f.n[a]; m *= 2) {
                    if (f.periodic && 2 * m > f.n[a]) break;
                    double len = std::pow(m * f.h[a], 1.0 / s.s[a]);
                    if (len > 1) break;
                    for (int sign : {1, -1}) {
                        std::vector<int> j = i;
                        j[a] += sign * m;
                        if (!f.wrap(j)) continue;
                        double q = std::abs(f.at(j) - v) / (std::pow(len, alpha) * w);
                        rep.increment_part = std::max(rep.increment_part, q);
                    }
                }
            }
        });
        rep.value = rep.sup_part + rep.increment_part;
        return rep;
    }

    std::vector<double> lambdas = opt.lambdas;
    if (lambdas.empty()) {
        for (double lam = 1;; lam /= 2) {
            bool ok = true;
            for (size_t a = 0; a < D; ++a) ok = ok && std::pow(lam, s.s[a]) >= 4 * f.h[a];
            if (!ok) break;
            lambdas.push_back(lam);
        }
    }
    double cell = 1;
    for (double v : f.h) cell *= v;
    // bank: the bump and its first moments in each direction
    std::vector<std::function<double(const Point&)>> bank;
    bank.push_back([&s](const Point& u) { return bump(s, u); });
    for (size_t a = 0; a < D; ++a) bank.push_back([&s, a](const Point& u) { return bump(s, u) * u[a]; });
    for (double lam : lambdas) {
        std::vector<int> r(D);
        for (size_t a = 0; a < D; ++a) r[a] = static_cast<int>(std::ceil(std::pow(lam, s.s[a]) / f.h[a]));
        for_each_point(f, stride, [&](const std::vector<int>& i) {
            Point x = f.coord(i);
            double w = weight(x);
            std::vector<double> pair(bank.size(), 0.0);
            std::vector<int> o(D);
            for (size_t a = 0; a < D; ++a) o[a] = -r[a];
            while (true) {
                std::vector<int> j(D);
                Point u(D);
                for (size_t a = 0; a < D; ++a) {
                    j[a] = i[a] + o[a];
                    u[a] = o[a] * f.h[a] / std::pow(lam, s.s[a]);
                }
                if (f.wrap(j)) {
                    double fv = f.at(j);
                    for (size_t b = 0; b < bank.size(); ++b) pair[b] += fv * bank[b](u);
                }
                int a = static_cast<int>(D) - 1;
                while (a >= 0 && o[a] == r[a]) o[a] = -r[a], --a;
                if (a < 0) break;
                ++o[a];
            }
            double scale = cell * std::pow(lam, -s.total());
            for (double p : pair) rep.increment_part = std::max(rep.increment_part, std::abs(p * scale) / (w * std::pow(lam, alpha)));
        });
    }
    rep.value = rep.increment_part;
    return rep;
}

// ---------------------------------------------------------------------------

bool is_lower_set(const std::vector<MultiIndex>& A) {
    std::set<MultiIndex> s(A.begin(), A.end());
    for (auto& k : A)
        for (size_t i = 0; i < k.size(); ++i) {
            if (k[i] == 0) continue;
            MultiIndex l = k;
            --l[i];
            if (!s.count(l)) return false;
        }
    return true;
}

int first_nonzero(const MultiIndex& k) {
    for (size_t i = 0; i < k.size(); ++i)
        if (k[i] != 0) return static_cast<int>(i);
    return -1;
}

MultiIndex k_down(const MultiIndex& k) {
    int m = first_nonzero(k);
    if (m < 0) throw Error("taylor", "k_down of the zero multi-index");
    MultiIndex r = k;
    --r[m];
    return r;
}

std::vector<MultiIndex> boundary_set(const std::vector<MultiIndex>& A) {
    std::set<MultiIndex> s(A.begin(), A.end()), out;
    for (auto& k : A)
        for (size_t i = 0; i < k.size(); ++i) {
            MultiIndex c = k;
            ++c[i];
            if (!s.count(c) && s.count(k_down(c))) out.insert(c);
        }
    return {out.begin(), out.end()};
}

AnisoTaylor::AnisoTaylor(JetFn f, std::vector<MultiIndex> A, int q) : f_(std::move(f)), A_(std::move(A)), q_(q) {
    if (A_.empty()) throw Error("taylor", "the multi-index set is empty");
    if (!is_lower_set(A_)) throw Error("taylor", "the multi-index set is not a lower set");
    dA_ = boundary_set(A_);
    int ord = 0;
    for (auto& k : A_) ord = std::max(ord, mi_abs(k));
    Jet J = jet_at(f_, Point(A_[0].size(), 0.0), ord);
    for (auto& k : A_) d0_.push_back(J.deriv(k));
}

static double monomial(const Point& x, const MultiIndex& k) {
    double r = 1;
    for (size_t i = 0; i < k.size(); ++i) r *= std::pow(x[i], k[i]);
    return r;
}

double AnisoTaylor::jet_part(const Point& x) const {
    double s = 0;
    for (size_t i = 0; i < A_.size(); ++i) s += d0_[i] * monomial(x, A_[i]) / mi_factorial_d(A_[i]);
    return s;
}

std::vector<double> AnisoTaylor::remainder_terms(const Point& x) const {
    std::vector<double> out;
    size_t D = x.size();
    for (auto& k : dA_) {
        int m = first_nonzero(k);
        MultiIndex kd = k_down(k);
        int o = mi_abs(kd);
        auto dk = [&](const Point& p) { return jet_at(f_, p, o).deriv(kd); };
        // delta_k[g](z) = g(z_0..z_m, 0, ...) - g(z_0..z_{m-1}, 0, ...)
        auto delta = [&](Point z) {
            for (size_t i = m + 1; i < D; ++i) z[i] = 0;
            double hi = dk(z);
            z[m] = 0;
            return hi - dk(z);
        };
        double integral;
        int mp = first_nonzero(kd);
        if (mp < 0) {
            integral = delta(x);
        } else {
            int l = kd[mp];
            QuadRule qr = gauss_legendre(q_);
            integral = 0;
            for (int i = 0; i < q_; ++i) {
                double y = qr.x[i];
                Point z(D, 0.0);
                for (int a = 0; a < mp; ++a) z[a] = x[a];
                z[mp] = x[mp] * y;
                integral += qr.w[i] * l * std::pow(1 - y, l - 1) * delta(z);
            }
        }
        out.push_back(monomial(x, kd) / mi_factorial_d(kd) * integral);
    }
    return out;
}

double AnisoTaylor::remainder(const Point& x) const {
    double s = 0;
    for (double v : remainder_terms(x)) s += v;
    return s;
}

}  // namespace regkit
