#include "regkit/heatkernel.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "regkit/quad.hpp"

namespace regkit {

namespace {

Jet gaussian_jet(const Jet& a, double tau, double xi) {
    return exp((-xi * xi / (4 * tau)) / a) * pow(a * (4 * M_PI * tau), -0.5);
}

double gaussian(double a, double tau, double xi) {
    if (tau <= 0) return 0;
    double q = xi * xi / (4 * a * tau);
    if (q > 700) return 0;
    return std::exp(-q) / std::sqrt(4 * M_PI * a * tau);
}

// Taylor polynomial of f at the values of z, recomposed on the jets z.
Jet derivative_composed(const JetFn& f, const std::vector<Jet>& z, int dir, int times) {
    int nv = z[0].nvars(), o = z[0].order();
    Point p{z[0].value(), z[1].value()};
    Jet F = jet_at(f, p, o + times);
    Jet one(nv, o, 1.0);
    std::vector<Jet> shift{z[0] - p[0], z[1] - p[1]};
    Jet out(nv, o, 0.0);
    for (const auto& al : F.indices()) {
        if (al[dir] < times) continue;
        MultiIndex base = al;
        base[dir] -= times;
        if (mi_abs(base) > o) continue;
        double c = F.coeff(al);
        if (c == 0) continue;
        for (int q = 0; q < times; ++q) c *= al[dir] - q;
        Jet term = one * c;
        for (int i = 0; i < 2; ++i)
            if (base[i] > 0) term *= pow_int(shift[i], base[i]);
        out += term;
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// coefficient fields

CoefficientField CoefficientField::symbolic(const std::string& a, const std::string& b, const std::string& c,
                                            double lambda, int rho) {
    CoefficientField f;
    Expr ea = Expr::parse(a), eb = Expr::parse(b), ec = Expr::parse(c);
    f.a = [ea](const std::vector<Jet>& z) { return ea.eval(z); };
    f.b = [eb](const std::vector<Jet>& z) { return eb.eval(z); };
    f.c = [ec](const std::vector<Jet>& z) { return ec.eval(z); };
    f.av = [ea](const Point& z) { return ea.eval(z); };
    f.bv = [eb](const Point& z) { return eb.eval(z); };
    f.cv = [ec](const Point& z) { return ec.eval(z); };
    f.lambda = lambda;
    f.rho = rho;
    f.a_src = a;
    f.b_src = b;
    f.c_src = c;
    return f;
}

CoefficientField CoefficientField::constant(double a, double b, double c) {
    auto s = [](double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    };
    double lam = std::min(a, 1 / a);
    return symbolic(s(a), s(b), s(c), std::min(0.5, lam));
}

CoefficientField CoefficientField::from_json(const json& j) {
    auto get = [&](const char* k, const char* dflt) -> std::string {
        if (!j.contains(k)) return dflt;
        if (j[k].is_number()) {
            std::ostringstream os;
            os.precision(17);
            os << j[k].get<double>();
            return os.str();
        }
        return j[k].get<std::string>();
    };
    if (j.value("d", 1) != 1) throw Error("field", "only one space dimension is supported");
    auto f = symbolic(get("a", "1"), get("b", "0"), get("c", "0"), j.value("lambda", 0.5), j.value("rho", 64));
    return f;
}

json CoefficientField::to_json() const {
    return {{"d", 1}, {"a", a_src}, {"b", b_src}, {"c", c_src}, {"lambda", lambda}, {"rho", rho}};
}

void CoefficientField::check_ellipticity(double T, double X, int lattice) const {
    for (int i = 0; i < lattice; ++i)
        for (int j = 0; j < lattice; ++j) {
            Point z{-T + 2 * T * i / (lattice - 1), -X + 2 * X * j / (lattice - 1)};
            double v = av(z);
            if (!(v >= lambda && v <= 1 / lambda)) {
                std::ostringstream os;
                os << "a(" << z[0] << ", " << z[1] << ") = " << v << " outside [" << lambda << ", " << 1 / lambda
                   << "]";
                throw Error("ellipticity", os.str());
            }
        }
}

JetValues CoefficientField::jets(const Point& w, int order) const {
    return {jet_at(a, w, order), jet_at(b, w, order), jet_at(c, w, order)};
}

CoefficientField CoefficientField::adjoint() const {
    CoefficientField g = *this;
    JetFn A = a, B = b, C = c;
    g.b = [A, B](const std::vector<Jet>& z) { return 2.0 * derivative_composed(A, z, 1, 1) - B(z); };
    g.c = [A, B, C](const std::vector<Jet>& z) {
        return C(z) - derivative_composed(B, z, 1, 1) + derivative_composed(A, z, 1, 2);
    };
    JetFn gb = g.b, gc = g.c;
    g.bv = [gb](const Point& z) { return value_at(gb, z); };
    g.cv = [gc](const Point& z) { return value_at(gc, z); };
    g.b_src = "2*d_x(" + a_src + ") - (" + b_src + ")";
    g.c_src = "(" + c_src + ") - d_x(" + b_src + ") + d_xx(" + a_src + ")";
    // two derivatives of a are spent
    g.rho = rho - 2;
    return g;
}

CoefficientField CoefficientField::time_reflected() const {
    CoefficientField g = *this;
    auto refl = [](const JetFn& f) {
        return JetFn([f](const std::vector<Jet>& z) {
            std::vector<Jet> r = z;
            r[0] = -z[0];
            return f(r);
        });
    };
    auto reflv = [](const std::function<double(const Point&)>& f) {
        return std::function<double(const Point&)>([f](const Point& z) { return f({-z[0], z[1]}); });
    };
    g.a = refl(a);
    g.b = refl(b);
    g.c = refl(c);
    g.av = reflv(av);
    g.bv = reflv(bv);
    g.cv = reflv(cv);
    g.a_src = "reflect(" + a_src + ")";
    g.b_src = "reflect(" + b_src + ")";
    g.c_src = "reflect(" + c_src + ")";
    return g;
}

// ---------------------------------------------------------------------------
// Gaussians and the error kernel

double frozen_gaussian(const Eigen::MatrixXd& a, double t, const Eigen::VectorXd& x) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success || !a.isApprox(a.transpose()))
        throw Error("ellipticity", "frozen coefficient matrix is not symmetric positive definite");
    if (t <= 0) return 0;
    int d = static_cast<int>(x.size());
    double det = 1;
    for (int i = 0; i < d; ++i) det *= llt.matrixL()(i, i) * llt.matrixL()(i, i);
    double q = x.dot(llt.solve(x)) / (4 * t);
    return std::pow(4 * M_PI * t, -0.5 * d) / std::sqrt(det) * std::exp(-q);
}

double frozen_gaussian(const CoefficientField& f, const Point& w, const Point& z) {
    double a = f.av(w);
    if (!(a > 0)) throw Error("ellipticity", "a(w) <= 0");
    return gaussian(a, z[0], z[1]);
}

double z_kernel(const CoefficientField& f, const Point& z, const Point& zbar) {
    return frozen_gaussian(f, zbar, {z[0] - zbar[0], z[1] - zbar[1]});
}

double error_kernel(const CoefficientField& f, const Point& z, const Point& zbar) {
    double tau = z[0] - zbar[0], xi = z[1] - zbar[1];
    if (tau <= 0) return 0;
    double a1 = f.av(zbar);
    double W = gaussian(a1, tau, xi);
    if (W == 0) return 0;
    double d2 = W * (xi * xi / (4 * a1 * a1 * tau * tau) - 1 / (2 * a1 * tau));
    double d1 = -xi / (2 * a1 * tau) * W;
    return (a1 - f.av(z)) * d2 - f.bv(z) * d1 - f.cv(z) * W;
}

// ---------------------------------------------------------------------------
// heat calculus

double HeatCalcKernel::operator()(const Point& z, const Point& zbar) const {
    double tau = z[0] - zbar[0];
    if (tau <= 0) return 0;
    double u = std::sqrt(tau);
    return std::pow(tau, 0.5 * (alpha - 3)) * Ft(zbar, u, (z[1] - zbar[1]) / u);
}

HeatCalcKernel HeatCalcKernel::scaled(double c) const {
    auto F = Ft;
    return {alpha, [F, c](const Point& zb, double u, double v) { return c * F(zb, u, v); }, name};
}

HeatCalcKernel heat_calc_from(const std::function<double(const Point&, const Point&)>& F, double alpha,
                              std::string name) {
    return {alpha,
            [F, alpha](const Point& zb, double u, double v) {
                return std::pow(u, 3 - alpha) * F({zb[0] + u * u, zb[1] + u * v}, zb);
            },
            std::move(name)};
}

HeatCalcKernel z_calc(const CoefficientField& f) {
    auto av = f.av;
    return {2,
            [av](const Point& zb, double, double v) {
                double a = av(zb);
                return std::exp(-v * v / (4 * a)) / std::sqrt(4 * M_PI * a);
            },
            "Z"};
}

HeatCalcKernel e_calc(const CoefficientField& f) {
    return heat_calc_from([f](const Point& z, const Point& zb) { return error_kernel(f, z, zb); }, 1, "E");
}

HeatCalcKernel zero_calc(double alpha) {
    return {alpha, [](const Point&, double, double) { return 0.0; }, "0"};
}

double ConvolveOptions::half_width() const {
    return y_half_width > 0 ? y_half_width : std::sqrt(160 / lambda);
}

namespace {

void check_tail(const HeatCalcKernel& F, const ConvolveOptions& opt) {
    double L = opt.half_width();
    double peak = 0;
    for (int i = 0; i <= 8; ++i) peak = std::max(peak, std::abs(F.Ft(opt.probe, 0.5, -3 + 0.75 * i)));
    double tail = std::max(std::abs(F.Ft(opt.probe, 0.5, L)), std::abs(F.Ft(opt.probe, 0.5, -L))) *
                  std::pow(1 + L, opt.decay_power);
    if (peak > 0 && tail > opt.tail_tol * peak) {
        std::ostringstream os;
        os << "kernel " << F.name << " has weighted tail " << tail << " at |v| = " << L << " against peak " << peak
           << " (n = " << opt.decay_power << ")";
        throw Error("divergent-tail", os.str());
    }
}

}  // namespace

HeatCalcKernel heat_convolve(const HeatCalcKernel& F, const HeatCalcKernel& G, const ConvolveOptions& opt) {
    double al = F.alpha, be = G.alpha;
    if (!(al > 0 && be > 0)) throw Error("heat-calculus", "convolution needs positive orders");
    check_tail(F, opt);
    check_tail(G, opt);

    // s in (0, 1/2]: s = sigma^2; s in [1/2, 1): 1 - s = rho^2.
    struct SNode {
        double w, rs, r1s;  // weight, sqrt(s), sqrt(1 - s)
    };
    auto nodes = std::make_shared<std::vector<SNode>>();
    double top = std::sqrt(0.5);
    QuadRule lo = gauss_jacobi(opt.s_points, 0, be - 1, 0, top);
    for (size_t i = 0; i < lo.x.size(); ++i) {
        double sg = lo.x[i];
        double one = 1 - sg * sg;
        nodes->push_back({2 * lo.w[i] * std::pow(one, 0.5 * al - 1), sg, std::sqrt(one)});
    }
    QuadRule hi = gauss_jacobi(opt.s_points, 0, al - 1, 0, top);
    for (size_t i = 0; i < hi.x.size(); ++i) {
        double r = hi.x[i];
        double s = 1 - r * r;
        nodes->push_back({2 * hi.w[i] * std::pow(s, 0.5 * be - 1), std::sqrt(s), r});
    }
    auto ys = std::make_shared<QuadRule>();
    double L = opt.half_width();
    for (int p = 0; p < opt.y_panels; ++p) {
        double a = -L + 2 * L * p / opt.y_panels, b = -L + 2 * L * (p + 1) / opt.y_panels;
        QuadRule g = gauss_legendre(opt.y_points, a, b);
        ys->x.insert(ys->x.end(), g.x.begin(), g.x.end());
        ys->w.insert(ys->w.end(), g.w.begin(), g.w.end());
    }
    auto Ff = F.Ft, Gf = G.Ft;
    auto Ft = [Ff, Gf, nodes, ys](const Point& zb, double u, double v) {
        double total = 0;
        for (const auto& n : *nodes) {
            double inner = 0;
            for (size_t j = 0; j < ys->x.size(); ++j) {
                double y = ys->x[j];
                double g = Gf(zb, u * n.rs, y * n.r1s + v * n.rs);
                if (g == 0) continue;
                Point zeta{zb[0] + u * u * n.rs * n.rs, zb[1] + u * y * n.rs * n.r1s + u * v * n.rs * n.rs};
                inner += ys->w[j] * g * Ff(zeta, u * n.r1s, v * n.r1s - y * n.rs);
            }
            total += n.w * inner;
        }
        return total;
    };
    return {al + be, Ft, "(" + F.name + "*" + G.name + ")"};
}

double direct_convolve(const HeatCalcKernel& F, const HeatCalcKernel& G, const Point& z, const Point& zbar,
                       double rel) {
    double t = z[0], tb = zbar[0];
    if (t <= tb) return 0;
    double mid = 0.5 * (t + tb);
    // near each end the narrow factor sets the space scale
    auto slice = [&](double sigma, bool upper) {
        double c = upper ? z[1] : zbar[1];
        double sc = std::sqrt(upper ? t - sigma : sigma - tb);
        auto f = [&](double eta) {
            Point zeta{sigma, c + sc * eta};
            return F(z, zeta) * G(zeta, zbar);
        };
        return sc * integrate_line(f, rel);
    };
    double a = integrate_adaptive([&](double s) { return slice(s, false); }, tb, mid, rel);
    double b = integrate_adaptive([&](double s) { return slice(s, true); }, mid, t, rel);
    return a + b;
}

SeminormReport seminorm(const HeatCalcKernel& F, double T, int n, const std::vector<Point>& bases) {
    SeminormReport r;
    r.T = T;
    r.n = n;
    for (const auto& zb : bases)
        for (int i = 1; i <= 12; ++i) {
            double u = std::sqrt(T) * i / 12;
            for (int j = -24; j <= 24; ++j) {
                double v = j / 3.0;
                r.value = std::max(r.value, std::pow(1 + std::abs(v), n) * std::abs(F.Ft(zb, u, v)));
            }
        }
    return r;
}

ConvolveBoundReport convolve_bound(const HeatCalcKernel& F, const HeatCalcKernel& G, const HeatCalcKernel& FG,
                                   double T, int n, const std::vector<Point>& bases) {
    ConvolveBoundReport r;
    r.lhs = seminorm(FG, T, n, bases).value;
    r.finite_beta = F.alpha > 1;
    if (!r.finite_beta) return r;
    r.rhs = std::beta(0.5 * (F.alpha - 1), 0.5 * G.alpha) * seminorm(F, T, n, bases).value *
            seminorm(G, T, n, bases).value;
    r.ratio = r.rhs > 0 ? r.lhs / r.rhs : 0;
    return r;
}

// ---------------------------------------------------------------------------
// Volterra series

namespace {

bool frozen_constant(const CoefficientField& f) {
    auto is_const = [](const std::string& s) {
        try {
            return Expr::parse(s).is_constant();
        } catch (const Error&) {
            return false;
        }
    };
    auto is_zero = [&](const std::string& s) { return is_const(s) && Expr::parse(s).eval(Point{0, 0}) == 0; };
    return is_const(f.a_src) && is_zero(f.b_src) && is_zero(f.c_src);
}

}  // namespace

Volterra::Volterra(CoefficientField f, int N, VolterraOptions opt) : f_(std::move(f)), N_(N), opt_(std::move(opt)) {
    if (N < 0) throw Error("volterra", "N must be non-negative");
    opt_.quad.lambda = f_.lambda;
    summands_.push_back(z_calc(f_));
    bool trivial = frozen_constant(f_);
    HeatCalcKernel mE = trivial ? zero_calc(1) : e_calc(f_).scaled(-1);
    mE.name = "-E";
    for (int k = 1; k <= N; ++k) {
        if (std::pow(static_cast<double>(opt_.quad.nodes()), k) > opt_.budget && !trivial) break;
        summands_.push_back(trivial ? zero_calc(2 + k) : heat_convolve(summands_.back(), mE, opt_.quad));
        computed_ = k;
    }
}

HeatCalcKernel Volterra::error_power(int k) const {
    if (k < 1) throw Error("volterra", "power must be positive");
    if (frozen_constant(f_)) return zero_calc(k);
    HeatCalcKernel mE = e_calc(f_).scaled(-1);
    mE.name = "-E";
    HeatCalcKernel p = mE;
    for (int i = 1; i < k; ++i) p = heat_convolve(p, mE, opt_.quad);
    return p;
}

double Volterra::operator()(const Point& z, const Point& zbar) const {
    if (z[0] <= zbar[0]) return 0;
    double s = z_kernel(f_, z, zbar);
    for (size_t k = 1; k < summands_.size(); ++k) s += summands_[k](z, zbar);
    return s;
}

double apply_operator_fd(const CoefficientField& f, const std::function<double(const Point&)>& u, const Point& z,
                         double h) {
    auto at = [&](double dt, double dx) { return u({z[0] + dt, z[1] + dx}); };
    double u0 = at(0, 0);
    double ut = (-at(2 * h, 0) + 8 * at(h, 0) - 8 * at(-h, 0) + at(-2 * h, 0)) / (12 * h);
    double xp1 = at(0, h), xm1 = at(0, -h), xp2 = at(0, 2 * h), xm2 = at(0, -2 * h);
    double ux = (-xp2 + 8 * xp1 - 8 * xm1 + xm2) / (12 * h);
    double uxx = (-xp2 + 16 * xp1 - 30 * u0 + 16 * xm1 - xm2) / (12 * h * h);
    return ut - f.av(z) * uxx - f.bv(z) * ux - f.cv(z) * u0;
}

// ---------------------------------------------------------------------------
// jet kernels

namespace {

const Scaling& par() {
    static const Scaling s = Scaling::parabolic(1);
    return s;
}

SymPoly apply_derivs(SymPoly p, const MultiIndex& k, bool gaussian) {
    for (int d = 0; d < 2; ++d)
        for (int i = 0; i < k[d]; ++i) p = gaussian ? p.derive_gaussian(d) : p.derive(d);
    return p * (1.0 / mi_factorial_d(k));
}

SymPoly zeta_power(const MultiIndex& l) {
    return SymPoly::symbol(sym::id(sym::U), 2 * l[0] + l[1]) * SymPoly::symbol(sym::id(sym::V), l[1]);
}

double delta_power(const Point& d, const MultiIndex& k) { return std::pow(d[0], k[0]) * std::pow(d[1], k[1]); }

// sum_{k in A} (z - w)^k / k! D^k f(w), rewritten with z - w = zeta + delta: pairs (power of delta, poly)
std::vector<std::pair<MultiIndex, SymPoly>> lower_slot(sym::Kind kind, const std::vector<MultiIndex>& A,
                                                       bool skip_l0) {
    std::vector<std::pair<MultiIndex, SymPoly>> out;
    for (const auto& k1 : A)
        for_each_leq(k1, [&](const MultiIndex& l) {
            if (skip_l0 && mi_is_zero(l)) return;
            MultiIndex m{k1[0] - l[0], k1[1] - l[1]};
            double c = 1 / (mi_factorial_d(m) * mi_factorial_d(l));
            out.emplace_back(m, SymPoly::symbol(sym::id(kind, k1[0], k1[1])) * zeta_power(l) * c);
        });
    return out;
}

JetFn shifted(const JetFn& f, const Point& w) {
    return [f, w](const std::vector<Jet>& om) {
        std::vector<Jet> z{om[0] + w[0], om[1] + w[1]};
        return f(z);
    };
}

Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1]}; }
Point add(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1]}; }

struct Expansion {
    double J = 0, R = 0;
    std::vector<double> terms;
};

Expansion expand(const JetFn& g, const std::vector<MultiIndex>& A, const Point& x) {
    AnisoTaylor T(g, A);
    Expansion e;
    e.J = T.jet_part(x);
    e.terms = T.remainder_terms(x);
    for (double r : e.terms) e.R += r;
    return e;
}

}  // namespace

std::vector<JetKernel> z_jet_kernels(int r) {
    std::vector<JetKernel> out;
    for (const auto& k : par().indices_below(r, true)) out.push_back({k, apply_derivs(SymPoly::constant(1), k, true)});
    return out;
}

std::vector<JetKernel> e_jet_kernels(int r) {
    auto A = par().indices_below(r, true);
    SymPoly ia = SymPoly::symbol(sym::id(sym::IA)), v = SymPoly::symbol(sym::id(sym::V));
    SymPoly M = ia * ia * v * v * 0.25 + ia * -0.5;
    SymPoly Nn = ia * v * -0.5;
    std::map<MultiIndex, SymPoly> Zp, Mp, Np;
    for (const auto& k : A) {
        Zp[k] = apply_derivs(SymPoly::constant(1), k, true);
        Mp[k] = apply_derivs(M, k, false);
        Np[k] = apply_derivs(Nn, k, false);
    }
    SymPoly um2 = SymPoly::symbol(sym::id(sym::U), -2), um1 = SymPoly::symbol(sym::id(sym::U), -1);
    std::map<MultiIndex, SymPoly> E;
    auto la = lower_slot(sym::A, A, true);
    auto lb = lower_slot(sym::B, A, false);
    auto lc = lower_slot(sym::C, A, false);
    for (const auto& k3 : A) {
        for (const auto& k2 : A) {
            for (const auto& [m, p] : la) E[m + k2 + k3] += p * um2 * Mp[k2] * Zp[k3] * -1.0;
            for (const auto& [m, p] : lb) E[m + k2 + k3] += p * um1 * Np[k2] * Zp[k3] * -1.0;
        }
        for (const auto& [m, p] : lc) E[m + k3] += p * Zp[k3] * -1.0;
    }
    std::vector<JetKernel> out;
    for (auto& [k, p] : E)
        if (!p.empty()) out.push_back({k, p});
    return out;
}

namespace {

void check_rho(const CoefficientField& f, int need, const std::string& what) {
    if (f.rho < need) {
        std::ostringstream os;
        os << what << " needs rho >= " << need << " but the field has rho = " << f.rho;
        throw Error("threshold", os.str());
    }
}

double eval_jets(const std::vector<JetKernel>& jets, const JetValues& jv, const Point& delta, const Point& zeta) {
    double s = 0;
    for (const auto& jk : jets) {
        double dp = delta_power(delta, jk.k);
        if (dp == 0) continue;
        s += dp * GaussPoly::from_symbolic(jk.P, jv)(zeta[0], zeta[1]);
    }
    return s;
}

json jets_json(const std::vector<JetKernel>& jets) {
    json arr = json::array();
    for (const auto& jk : jets) arr.push_back({{"k", jk.k}, {"N", 0}, {"chain", json::array({jk.P.to_json()})}});
    return arr;
}

}  // namespace

TaylorZ::TaylorZ(CoefficientField f, int r) : f_(std::move(f)), r_(r) {
    if (r < 1) throw Error("threshold", "Taylor order r must be positive");
    check_rho(f_, r, "the expansion of Z to order r = " + std::to_string(r));
    A_ = par().indices_below(r, true);
    dA_ = boundary_set(A_);
    jets_ = z_jet_kernels(r);
}

double TaylorZ::jet_part(const Point& w, const Point& z, const Point& zbar) const {
    return eval_jets(jets_, f_.jets(w, r_), sub(zbar, w), sub(z, zbar));
}

std::vector<double> TaylorZ::remainder_terms(const Point& w, const Point& z, const Point& zbar) const {
    Point zeta = sub(z, zbar);
    if (zeta[0] <= 0) return std::vector<double>(dA_.size(), 0.0);
    JetFn a = shifted(f_.a, w);
    double tau = zeta[0], xi = zeta[1];
    JetFn g = [a, tau, xi](const std::vector<Jet>& om) { return gaussian_jet(a(om), tau, xi); };
    return AnisoTaylor(g, A_).remainder_terms(sub(zbar, w));
}

json TaylorZ::certificate() const { return {{"kind", "Z"}, {"r", r_}, {"terms", jets_json(jets_)}}; }

TaylorE::TaylorE(CoefficientField f, int r) : f_(std::move(f)), r_(r) {
    if (r <= 2) throw Error("threshold", "the expansion of E needs r > 2, got r = " + std::to_string(r));
    check_rho(f_, r, "the expansion of E to order r = " + std::to_string(r));
    A_ = par().indices_below(r, true);
    dA_ = boundary_set(A_);
    jets_ = e_jet_kernels(r);
}

std::vector<MultiIndex> TaylorE::jet_set() const {
    std::vector<MultiIndex> out;
    for (const auto& j : jets_) out.push_back(j.k);
    return out;
}

double TaylorE::jet_part(const Point& w, const Point& z, const Point& zbar) const {
    return eval_jets(jets_, f_.jets(w, r_), sub(zbar, w), sub(z, zbar));
}

ESample TaylorE::sample(const Point& w, const Point& z, const Point& zbar) const {
    ESample s;
    s.direct = error_kernel(f_, z, zbar);
    Point zeta = sub(z, zbar), delta = sub(zbar, w);
    if (zeta[0] <= 0) return s;
    s.jet_part = jet_part(w, z, zbar);
    double tau = zeta[0], xi = zeta[1], v = xi / std::sqrt(tau);

    JetFn a = shifted(f_.a, w), b = shifted(f_.b, w), c = shifted(f_.c, w);
    JetFn gM = [a, v](const std::vector<Jet>& om) {
        Jet ia = 1.0 / a(om);
        return ia * ia * (0.25 * v * v) - ia * 0.5;
    };
    JetFn gN = [a, v](const std::vector<Jet>& om) { return (1.0 / a(om)) * (-0.5 * v); };
    JetFn gW = [a, tau, xi](const std::vector<Jet>& om) { return gaussian_jet(a(om), tau, xi); };

    Expansion ea_up = expand(a, A_, delta), ea_lo = expand(a, A_, add(delta, zeta));
    Expansion F1{ea_up.J - ea_lo.J, ea_up.R - ea_lo.R, {}};
    Expansion F2 = expand(gM, A_, delta), F3 = expand(gW, A_, delta);
    Expansion Fb = expand(b, A_, add(delta, zeta)), FN = expand(gN, A_, delta);
    Expansion Fc = expand(c, A_, add(delta, zeta));

    auto family = [&](const std::string& tag, double pre, const std::vector<const Expansion*>& fs) {
        size_t n = fs.size();
        for (unsigned mask = 1; mask < (1u << n); ++mask) {
            double p = pre;
            std::string label = tag + ":";
            for (size_t i = 0; i < n; ++i) {
                bool rem = mask & (1u << i);
                p *= rem ? fs[i]->R : fs[i]->J;
                label += rem ? "R" : "J";
            }
            s.remainder_terms.emplace_back(label, p);
            s.remainder += p;
        }
    };
    family("a", 1 / tau, {&F1, &F2, &F3});
    family("b", -1 / std::sqrt(tau), {&Fb, &FN, &F3});
    family("c", -1, {&Fc, &F3});
    return s;
}

double TaylorE::lower_remainder_term(const MultiIndex& k, const Point& z, const Point& zbar) const {
    Point zeta = sub(z, zbar);
    if (zeta[0] <= 0) return 0;
    size_t idx = 0;
    while (idx < dA_.size() && dA_[idx] != k) ++idx;
    if (idx == dA_.size()) throw Error("taylor", "not a boundary multi-index: " + mi_str(k));
    auto terms = AnisoTaylor(shifted(f_.a, zbar), A_).remainder_terms(zeta);
    double a1 = f_.av(zbar), tau = zeta[0], v = zeta[1] / std::sqrt(tau);
    double M = v * v / (4 * a1 * a1) - 1 / (2 * a1);
    return -terms[idx] / tau * M * gaussian(a1, tau, zeta[1]);
}

json TaylorE::certificate() const {
    json A1 = json::array();
    for (const auto& k : jet_set()) A1.push_back(k);
    return {{"kind", "E"}, {"r", r_}, {"A1", A1}, {"terms", jets_json(jets_)}};
}

// ---------------------------------------------------------------------------
// decomposition of the Green function

GreenDecomposition::GreenDecomposition(CoefficientField f, GreenOptions opt, bool adjoint,
                                       std::optional<Cutoff> cutoff, VolterraOptions vopt)
    : f_(std::move(f)), opt_(opt), adjoint_(adjoint), cut_(cutoff ? *cutoff : Cutoff(Scaling::parabolic(1))) {
    if (opt_.N < 0) throw Error("threshold", "N must be non-negative");
    if (opt_.r <= 2) throw Error("threshold", "r > 2 is needed for the error-kernel expansion, got r = " +
                                                  std::to_string(opt_.r));
    if (opt_.M < 0) throw Error("threshold", "M must be non-negative");
    int need = adjoint_ ? 2 : 0;
    check_rho(f_, 3 * opt_.r + need, "the jet-only chain expansion (rho >= 3r)");
    check_rho(f_, opt_.r + opt_.M + need, "C^M dependence on the base point (rho >= r + M)");
    g_ = adjoint_ ? f_.adjoint().time_reflected() : f_;
    zj_ = z_jet_kernels(opt_.r);
    ej_ = e_jet_kernels(opt_.r);
    A_ = par().indices_below(opt_.r, true);
    volterra_ = std::make_shared<Volterra>(g_, opt_.N, vopt);
}

const std::vector<GaussPoly>& GreenDecomposition::pieces(const Point& w) const {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    for (const auto& [p, v] : cache_)
        if (p == w) return v;
    JetValues jv = g_.jets(w, opt_.r);
    std::map<MultiIndex, GaussPoly> Z, E;
    for (const auto& jk : zj_) Z[jk.k] = GaussPoly::from_symbolic(jk.P, jv);
    for (const auto& jk : ej_) E[jk.k] = GaussPoly::from_symbolic(jk.P, jv) * -1.0;
    std::vector<GaussPoly> out{Z[mi_zero(2)]};
    for (int n = 1; n <= opt_.N; ++n) {
        GaussPoly T = E.count(mi_zero(2)) ? E[mi_zero(2)] : GaussPoly(jv.a.value());
        for (int i = n - 1; i >= 1; --i) {
            GaussPoly next(jv.a.value());
            for (const auto& [k, Ek] : E) next += convolve(Ek, T.times_monomial(k));
            T = next;
        }
        GaussPoly K(jv.a.value());
        for (const auto& k0 : A_) K += convolve(Z[k0], T.times_monomial(k0));
        out.push_back(K);
    }
    if (cache_.size() > 256) cache_.erase(cache_.begin());
    cache_.emplace_back(w, std::move(out));
    return cache_.back().second;
}

double GreenDecomposition::K(const Point& w, const Point& zeta) const {
    double chi = cut_.chi(zeta);
    if (chi == 0 || zeta[0] <= 0) return 0;
    double s = 0;
    for (const auto& p : pieces(w)) s += p(zeta[0], zeta[1]);
    return chi * s;
}

double GreenDecomposition::K_at(const Point& z, const Point& zbar) const {
    if (!adjoint_) return K(zbar, sub(z, zbar));
    return K({-z[0], z[1]}, {z[0] - zbar[0], zbar[1] - z[1]});
}

double GreenDecomposition::gamma(const Point& z, const Point& zbar) const {
    if (!adjoint_) return (*volterra_)(z, zbar);
    return (*volterra_)({-zbar[0], zbar[1]}, {-z[0], z[1]});
}

double GreenDecomposition::R_at(const Point& z, const Point& zbar) const { return gamma(z, zbar) - K_at(z, zbar); }

DyadicKernel GreenDecomposition::dyadic(const Point& w) const {
    std::vector<GaussPoly> ps = pieces(w);
    Cutoff cut = cut_;
    JetFn F = [ps, cut](const std::vector<Jet>& z) {
        Jet s(z[0].nvars(), z[0].order(), 0.0);
        if (z[0].value() <= 0) return s;
        for (const auto& p : ps) s += p(z[0], z[1]);
        return cut.chi(z) * s;
    };
    return dyadic_decompose(F, cut_, opt_.levels, Rat(2), opt_.M);
}

json GreenDecomposition::certificate() const {
    json chains = json::array();
    json A = json::array(), A1 = json::array();
    for (const auto& k : A_) A.push_back(k);
    for (const auto& jk : ej_) A1.push_back(jk.k);
    for (int n = 0; n <= opt_.N; ++n) {
        json factors = json::array({"Z[k0]"});
        for (int i = 1; i < n; ++i) factors.push_back("E[k" + std::to_string(i) + "]");
        if (n > 0) factors.push_back("E[0]");
        chains.push_back({{"n", n}, {"N", n}, {"factors", factors}, {"k0_set", n > 0 ? A : json::array({mi_zero(2)})},
                          {"k_set", A1}, {"sign", n % 2 ? -1 : 1}});
    }
    return {{"kind", "K"},
            {"r", opt_.r},
            {"M", opt_.M},
            {"N", opt_.N},
            {"adjoint", adjoint_},
            {"field", f_.to_json()},
            {"Z", jets_json(zj_)},
            {"E", jets_json(ej_)},
            {"chains", chains}};
}

bool certificate_ok(const json& cert, int r, std::string* why) {
    auto fail = [&](const std::string& m) {
        if (why) *why = m;
        return false;
    };
    std::vector<const json*> lists;
    for (const char* key : {"terms", "Z", "E"})
        if (cert.contains(key)) lists.push_back(&cert[key]);
    if (lists.empty()) return fail("no kernel terms");
    for (const json* list : lists)
        for (const auto& term : *list) {
            if (!term.contains("chain") || !term.contains("N")) return fail("term without chain");
            for (const auto& P : term["chain"])
                for (const auto& mono : P) {
                    if (mono["u"].get<int>() < -1) return fail("power of t below -1/2");
                    if (mono["v"].get<int>() < 0) return fail("negative power of t^{-1/2} x");
                    for (const auto& [name, pw] : mono["jets"].items()) {
                        if (pw.get<int>() < 1) return fail("negative power of " + name);
                        if (name == "ainv") continue;
                        if (name.size() < 6 || (name[0] != 'a' && name[0] != 'b' && name[0] != 'c') || name[1] != '[')
                            return fail("unknown symbol " + name);
                        int i = 0, j = 0;
                        if (std::sscanf(name.c_str() + 2, "%d,%d", &i, &j) != 2) return fail("bad symbol " + name);
                        if (2 * i + j > r) return fail("jet " + name + " beyond order r");
                    }
                }
        }
    return true;
}

}  // namespace regkit
