#include <doctest.h>

#include <cmath>
#include <random>

#include "regkit/heatkernel.hpp"
#include "regkit/quad.hpp"

using namespace regkit;

namespace {

CoefficientField wavy() { return CoefficientField::symbolic("1 + 0.2*sin(x + t)", "0.3*cos(x)", "0.1*sin(t)"); }

ConvolveOptions light() {
    ConvolveOptions o;
    o.s_points = 8;
    o.y_panels = 12;
    return o;
}

double W1(double a, double t, double x) {
    return t > 0 ? std::exp(-x * x / (4 * a * t)) / std::sqrt(4 * M_PI * a * t) : 0;
}

}  // namespace

TEST_CASE("formula parser") {
    Expr e = Expr::parse("1 + 0.2*sin(x + t)^2 - exp(-t)/2 + sqrt(4) * pi");
    double t = 0.3, x = -0.8;
    CHECK(e.eval(Point{t, x}) ==
          doctest::Approx(1 + 0.2 * std::pow(std::sin(x + t), 2) - std::exp(-t) / 2 + 2 * M_PI).epsilon(1e-15));
    Jet J = jet_at([&](const std::vector<Jet>& z) { return e.eval(z); }, {t, x}, 2);
    CHECK(J.deriv({0, 1}) == doctest::Approx(0.4 * std::sin(x + t) * std::cos(x + t)).epsilon(1e-13));
    CHECK(J.deriv({1, 0}) == doctest::Approx(0.4 * std::sin(x + t) * std::cos(x + t) + std::exp(-t) / 2).epsilon(1e-13));
    CHECK(Expr::parse("2*3 - -1").is_constant());
    CHECK_FALSE(Expr::parse("x").is_constant());
    CHECK_THROWS_AS(Expr::parse("1 + y"), Error);
    CHECK_THROWS_AS(Expr::parse("x^t"), Error);
    CHECK_THROWS_AS(Expr::parse("(1 + x"), Error);
}

TEST_CASE("frozen Gaussian") {
    auto f = CoefficientField::constant(1);
    for (double t : {0.01, 0.5, 2.0})
        for (double x : {-1.0, 0.0, 0.7})
            CHECK(frozen_gaussian(f, {0, 0}, {t, x}) ==
                  doctest::Approx(std::exp(-x * x / (4 * t)) / std::sqrt(4 * M_PI * t)).epsilon(1e-15));
    auto g = wavy();
    for (double t : {0.1, 1.0}) {
        double m = integrate_line([&](double x) { return frozen_gaussian(g, {0.2, 0.3}, {t, x}); });
        CHECK(std::abs(m - 1) < 1e-8);
    }
    CHECK(frozen_gaussian(g, {0, 0}, {0.0, 0.1}) == 0);
    CHECK(frozen_gaussian(g, {0, 0}, {-1.0, 0.1}) == 0);

    Eigen::MatrixXd a(2, 2);
    a << 2, 0, 0, 0.5;
    Eigen::VectorXd x(2);
    x << 0.3, -0.4;
    CHECK(frozen_gaussian(a, 0.7, x) == doctest::Approx(W1(2, 0.7, 0.3) * W1(0.5, 0.7, -0.4)).epsilon(1e-14));
    Eigen::MatrixXd bad(2, 2);
    bad << 1, 2, 2, 1;
    CHECK_THROWS_AS(frozen_gaussian(bad, 0.7, x), Error);
    CHECK_THROWS_AS(CoefficientField::symbolic("1 + 0.9*sin(x)", "0", "0", 0.5).check_ellipticity(), Error);
    CHECK_NOTHROW(g.check_ellipticity());
}

TEST_CASE("error kernel") {
    auto f = CoefficientField::constant(1.3);
    CHECK(error_kernel(f, {0.4, 0.2}, {0.1, -0.3}) == 0);

    auto g = CoefficientField::symbolic("1 + 0.2*sin(x)", "0", "0");
    // sin x = sin(pi - x): equal coefficients at both ends
    CHECK(std::abs(error_kernel(g, {0.3, M_PI - 0.4}, {0.1, 0.4})) < 1e-15);
    CHECK(error_kernel(g, {0.1, 0.4}, {0.3, 0.0}) == 0);

    // E = L Z away from the diagonal
    auto h = wavy();
    Point zb{0.05, -0.2};
    for (Point z : {Point{0.3, 0.1}, Point{0.6, -0.9}, Point{0.2, 0.5}}) {
        double LZ = apply_operator_fd(h, [&](const Point& p) { return z_kernel(h, p, zb); }, z, 1e-3);
        CHECK(LZ == doctest::Approx(error_kernel(h, z, zb)).epsilon(1e-7));
    }

    // E in Psi^1: sup over v of |E| at fixed t - tbar scales like (t - tbar)^{-1}
    std::vector<double> hs, sups;
    for (int n = 6; n <= 14; ++n) {
        double dt = std::pow(2.0, -n), s = 0;
        for (double v = -4; v <= 4; v += 0.25) s = std::max(s, std::abs(error_kernel(h, {zb[0] + dt, zb[1] + std::sqrt(dt) * v}, zb)));
        hs.push_back(dt);
        sups.push_back(s);
    }
    CHECK(loglog_fit(hs, sups).slope == doctest::Approx(-1).epsilon(0.2));
}

TEST_CASE("heat-calculus convolution") {
    auto f = wavy();
    auto Z = z_calc(f), mE = e_calc(f).scaled(-1);
    Point z{0.35, 0.4}, zb{0.1, -0.1};
    for (auto [F, G] : {std::pair{Z, Z}, std::pair{Z, mE}, std::pair{mE, Z}}) {
        auto FG = heat_convolve(F, G);
        double d = direct_convolve(F, G, z, zb);
        CHECK(std::abs(FG(z, zb) - d) <= 1e-4 * std::abs(d));
        CHECK(FG.alpha == F.alpha + G.alpha);
    }

    // constant coefficients: W * W = t W
    auto c = CoefficientField::constant(0.8);
    auto WW = heat_convolve(z_calc(c), z_calc(c));
    std::vector<double> hs, sups;
    for (int n = 1; n <= 8; ++n) {
        double t = std::pow(2.0, -n), s = 0;
        for (double v = -3; v <= 3; v += 0.5) {
            double val = WW({t, std::sqrt(t) * v}, {0, 0});
            CHECK(val == doctest::Approx(t * W1(0.8, t, std::sqrt(t) * v)).epsilon(1e-9));
            s = std::max(s, std::abs(val));
        }
        hs.push_back(t);
        sups.push_back(s);
    }
    CHECK(loglog_fit(hs, sups).slope == doctest::Approx(0.5).epsilon(0.1 / 0.5));

    auto Zero = heat_convolve(Z, zero_calc(1));
    CHECK(Zero(z, zb) == 0);
    CHECK_THROWS_AS(heat_convolve(Z, zero_calc(0)), Error);
    HeatCalcKernel fat{1, [](const Point&, double, double v) { return 1 / (1 + v * v); }, "fat"};
    CHECK_THROWS_AS(heat_convolve(Z, fat), Error);

    auto rep = convolve_bound(Z, mE, heat_convolve(Z, mE, light()), 0.25, 2, {{0, 0}, {0.1, 0.5}});
    CHECK(rep.finite_beta);
    CHECK(std::isfinite(rep.ratio));
    CHECK(rep.lhs > 0);
}

TEST_CASE("convolution is associative") {
    auto f = CoefficientField::symbolic("1 + 0.2*sin(x + t)", "0", "0");
    auto g = CoefficientField::symbolic("1.2 - 0.1*cos(x)", "0", "0");
    auto F = z_calc(f), G = z_calc(g), H = heat_calc_from([](const Point& z, const Point& zb) {
        double t = z[0] - zb[0], x = z[1] - zb[1];
        return x * std::exp(-x * x / (4 * t)) / t;
    }, 2, "H");
    auto o = light();
    auto left = heat_convolve(heat_convolve(F, G, o), H, o);
    auto right = heat_convolve(F, heat_convolve(G, H, o), o);
    for (Point z : {Point{0.4, 0.3}, Point{0.9, -0.5}}) {
        double l = left(z, {0, 0}), r = right(z, {0, 0});
        CHECK(std::abs(l - r) <= 1e-3 * std::abs(l));
    }
}

TEST_CASE("Volterra series") {
    auto c = CoefficientField::constant(0.9);
    Volterra G(c, 3);
    for (Point z : {Point{0.2, 0.1}, Point{1.0, -2.0}})
        CHECK(G(z, {0, 0}) == W1(0.9, z[0], z[1]));
    CHECK(G({-0.1, 0.0}, {0, 0}) == 0);

    auto f = wavy();
    VolterraOptions vo;
    vo.quad = light();
    Volterra V(f, 2, vo);
    CHECK_FALSE(V.partial());
    Point zb{0, 0};
    CHECK(V({0, 0.3}, zb) == 0);
    CHECK(V({0.01, 0.02}, zb) > 0);

    // L Gamma_2 + (-E)^{*3} = 0 off the diagonal
    auto E3 = V.error_power(3);
    Point z{0.3, 0.2};
    double LG = apply_operator_fd(f, [&](const Point& p) { return V(p, zb); }, z, 2e-3);
    double e3 = E3(z, zb);
    CHECK(std::abs(LG + e3) <= 1e-3 * std::abs(e3));

    VolterraOptions tiny = vo;
    tiny.budget = 1e4;
    Volterra P(f, 2, tiny);
    CHECK(P.partial());
    CHECK(P.computed_terms() == 1);
}

TEST_CASE("Volterra summands scale like their order") {
    auto f = wavy();
    VolterraOptions vo;
    vo.quad.s_points = 6;
    vo.quad.y_panels = 10;
    Volterra V(f, 2, vo);
    Point zb{0.05, 0.1};
    for (int k = 1; k <= 2; ++k) {
        std::vector<double> hs, sups;
        for (int n = 4; n <= 10; n += 2) {
            double h = std::pow(2.0, -n), s = 0;
            for (double v : {-2.0, -1.0, 0.0, 1.0, 2.0})
                s = std::max(s, std::abs(V.summand(k)({zb[0] + h, zb[1] + std::sqrt(h) * v}, zb)));
            hs.push_back(h);
            sups.push_back(s);
        }
        double slope = loglog_fit(hs, sups).slope;
        CHECK(std::abs(slope - 0.5 * (k - 1)) <= 0.2);
    }
}

TEST_CASE("symbolic jet kernels") {
    auto f = wavy();
    Point w{0.1, -0.3};
    JetValues jv = f.jets(w, 4);
    // D^k of W^{a(w)} against jets of the composed Gaussian
    double tau = 0.2, xi = 0.35;
    JetFn g = [&](const std::vector<Jet>& z) {
        Jet a = f.a(z);
        return exp((-xi * xi / (4 * tau)) / a) * pow(a * (4 * M_PI * tau), -0.5);
    };
    Jet Jg = jet_at(g, w, 3);
    for (const auto& jk : z_jet_kernels(4)) {
        double sym = GaussPoly::from_symbolic(jk.P, jv)(tau, xi);
        CHECK(sym == doctest::Approx(Jg.deriv(jk.k) / mi_factorial_d(jk.k)).epsilon(1e-11));
    }

    // closed-form convolution against quadrature
    GaussPoly p(1.3), q(1.3);
    p.add(0, 0, 1.0);
    p.add(1, 1, -0.4);
    p.add(0, 2, 0.3);
    q.add(-1, 1, 0.7);
    q.add(2, 3, 0.2);
    GaussPoly pq = convolve(p, q);
    auto as_calc = [](const GaussPoly& gp, double alpha) {
        return heat_calc_from([gp](const Point& z, const Point& zb) { return gp(z[0] - zb[0], z[1] - zb[1]); }, alpha);
    };
    for (Point z : {Point{0.3, 0.2}, Point{1.1, -0.7}}) {
        double d = direct_convolve(as_calc(p, 2), as_calc(q, 1), z, {0, 0});
        CHECK(pq(z[0], z[1]) == doctest::Approx(d).epsilon(1e-8));
    }
    GaussPoly W(0.7);
    W.add(0, 0, 1);
    GaussPoly WW = convolve(W, W);
    CHECK(WW(0.4, 0.3) == doctest::Approx(0.4 * W1(0.7, 0.4, 0.3)).epsilon(1e-14));
}

TEST_CASE("Taylor expansion of Z") {
    auto f = wavy();
    TaylorZ T1(f, 1);
    REQUIRE(T1.jets().size() == 1);
    CHECK(T1.jet_part({0.1, 0.2}, {0.5, 0.4}, {0.1, 0.2}) ==
          doctest::Approx(z_kernel(f, {0.5, 0.4}, {0.1, 0.2})).epsilon(1e-14));

    auto c = CoefficientField::constant(1.4);
    TaylorZ Tc(c, 3);
    JetValues jv = c.jets({0, 0}, 3);
    for (const auto& jk : Tc.jets())
        if (!mi_is_zero(jk.k)) CHECK(GaussPoly::from_symbolic(jk.P, jv)(0.3, 0.1) == 0);
    for (double r : Tc.remainder_terms({0, 0}, {0.4, 0.3}, {0.01, 0.05})) CHECK(r == 0);

    TaylorZ T(f, 2);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1, 1);
    int n = 0;
    while (n < 50) {
        Point w{0.2 * U(rng), U(rng)};
        Point zb{w[0] + 0.01 * U(rng), w[1] + 0.1 * U(rng)};
        if (Scaling::parabolic(1).norm({zb[0] - w[0], zb[1] - w[1]}) > 0.1) continue;
        Point z{zb[0] + 0.02 + 0.2 * std::abs(U(rng)), zb[1] + 0.5 * U(rng)};
        double rem = 0;
        for (double r : T.remainder_terms(w, z, zb)) rem += r;
        CHECK(std::abs(z_kernel(f, z, zb) - T.jet_part(w, z, zb) - rem) <= 1e-6);
        ++n;
    }
    CoefficientField rough = f;
    rough.rho = 1;
    CHECK_THROWS_AS(TaylorZ(rough, 2), Error);
}

TEST_CASE("Taylor expansion of E") {
    CHECK_THROWS_AS(TaylorE(wavy(), 2), Error);

    auto c = CoefficientField::constant(1.1);
    TaylorE Tc(c, 3);
    JetValues jv = c.jets({0, 0}, 3);
    for (const auto& jk : Tc.jets()) CHECK(GaussPoly::from_symbolic(jk.P, jv)(0.3, 0.1) == 0);
    auto s0 = Tc.sample({0, 0}, {0.3, 0.2}, {0.01, 0.02});
    CHECK(s0.direct == 0);
    CHECK(s0.remainder == 0);

    // b = 0, c constant: E^[k] = -c Z^[k]
    auto g = CoefficientField::symbolic("1", "0", "0.7");
    TaylorE Tg(g, 3);
    TaylorZ Zg(g, 3);
    JetValues gv = g.jets({0, 0}, 3);
    for (const auto& jk : Tg.jets()) {
        double e = GaussPoly::from_symbolic(jk.P, gv)(0.3, 0.1);
        double zk = 0;
        for (const auto& zj : Zg.jets())
            if (zj.k == jk.k) zk = GaussPoly::from_symbolic(zj.P, gv)(0.3, 0.1);
        CHECK(e == doctest::Approx(-0.7 * zk).epsilon(1e-14));
    }

    auto f = wavy();
    TaylorE T(f, 3);
    for (const auto& k : T.jet_set()) CHECK(Scaling::parabolic(1).degree(k) < 9);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int i = 0; i < 50; ++i) {
        Point w{0.2 * U(rng), U(rng)};
        Point zb{w[0] + 0.005 * U(rng), w[1] + 0.1 * U(rng)};
        Point z{zb[0] + 0.02 + 0.2 * std::abs(U(rng)), zb[1] + 0.5 * U(rng)};
        auto s = T.sample(w, z, zb);
        CHECK(std::abs(s.direct - s.jet_part - s.remainder) <= 1e-6);
        auto sg = Tg.sample(w, z, zb);
        CHECK(std::abs(sg.direct - sg.jet_part - sg.remainder) <= 1e-6);
    }

    // the lower-slot remainder gains |k|_s over E
    Point zb{0.05, 0.1};
    for (const auto& k : boundary_set(T.set())) {
        std::vector<double> hs, sups;
        for (int n = 4; n <= 12; ++n) {
            double h = std::pow(2.0, -n), s = 0;
            for (double v = -3; v <= 3; v += 0.5)
                s = std::max(s, std::abs(T.lower_remainder_term(k, {zb[0] + h, zb[1] + std::sqrt(h) * v}, zb)));
            hs.push_back(h);
            sups.push_back(s);
        }
        int kd = Scaling::parabolic(1).degree(k_down(k));
        CHECK(loglog_fit(hs, sups).slope >= 0.5 * (1 + kd - 3) - 0.2);
    }
}

TEST_CASE("local decomposition of the Green function") {
    auto c = CoefficientField::constant(0.9);
    GreenDecomposition D(c, {3, 1, 2, 12});
    Cutoff cut(Scaling::parabolic(1));
    for (Point zeta : {Point{0.05, 0.1}, Point{0.2, 0.3}, Point{0.3, -0.2}, Point{0.5, 1.0}}) {
        Point z{0.1 + zeta[0], -0.2 + zeta[1]}, zb{0.1, -0.2};
        double W = W1(0.9, zeta[0], zeta[1]);
        CHECK(D.K_at(z, zb) == doctest::Approx(cut.chi(zeta) * W).epsilon(1e-14));
        CHECK(std::abs(D.R_at(z, zb) - (1 - cut.chi(zeta)) * W) <= 1e-15 * W);
    }
    GreenDecomposition Dbar(c, {3, 1, 2, 12}, true);
    for (Point z : {Point{0.2, 0.1}, Point{0.3, -0.25}}) CHECK(Dbar.K_at(z, {0, 0}) == D.K_at(z, {0, 0}));

    CHECK_THROWS_AS(GreenDecomposition(c, {2, 1, 1, 12}), Error);
    CoefficientField rough = c;
    rough.rho = 8;
    try {
        GreenDecomposition(rough, {3, 1, 1, 12});
        FAIL("expected a threshold error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("rho >= 9") != std::string::npos);
    }

    // locality: fields with the same jets at z0
    Point z0{0.1, 0.2};
    std::string a1 = "1 + 0.2*sin(x + t)";
    auto f1 = CoefficientField::symbolic(a1, "0.3*cos(x)", "0");
    auto f2 = CoefficientField::symbolic(a1 + " + 0.1*((x - 0.2)^4 + (t - 0.1)^2)*cos(3*x)", "0.3*cos(x)", "0");
    CHECK(f1.av({0.5, 0.9}) != f2.av({0.5, 0.9}));
    GreenDecomposition K1(f1, {3, 1, 2, 12}), K2(f2, {3, 1, 2, 12});
    for (Point zeta : {Point{0.01, 0.05}, Point{0.1, -0.2}, Point{0.3, 0.4}})
        CHECK(std::abs(K1.K(z0, zeta) - K2.K(z0, zeta)) <= 1e-10);
    auto cert = K1.certificate();
    std::string why;
    CHECK(certificate_ok(cert, 3, &why));
    json broken = cert;
    broken["E"][0]["chain"][0][0]["u"] = -2;
    CHECK_FALSE(certificate_ok(broken, 3));

    // the kernel norm is stable under refinement
    auto f = wavy();
    GreenDecomposition G(f, {3, 1, 1, 10});
    DyadicKernel Kd = G.dyadic({0.1, 0.2});
    NormOptions coarse, fine;
    coarse.resolution = 32;
    fine.resolution = 64;
    double nc = kernel_norm(Kd, coarse).value, nf = kernel_norm(Kd, fine).value;
    CHECK(std::isfinite(nf));
    CHECK(std::abs(nc - nf) <= 0.02 * nf);
}

TEST_CASE("adjoint decomposition") {
    auto f = CoefficientField::symbolic("1 + 0.2*sin(x)", "0.3*cos(x)", "0.1");
    auto g = f.adjoint();
    for (double x : {-0.7, 0.0, 1.3}) {
        CHECK(g.bv({0.2, x}) == doctest::Approx(0.1 * std::cos(x)).epsilon(1e-13));
        CHECK(g.cv({0.2, x}) == doctest::Approx(0.1 + 0.3 * std::sin(x) - 0.2 * std::sin(x)).epsilon(1e-13));
    }

    VolterraOptions vo;
    vo.quad.s_points = 6;
    vo.quad.y_panels = 10;
    auto h = wavy();
    GreenDecomposition D1(h, {3, 1, 1, 12}, false, std::nullopt, vo), A1(h, {3, 1, 1, 12}, true, std::nullopt, vo);
    GreenDecomposition D2(h, {3, 1, 2, 12}, false, std::nullopt, vo), A2(h, {3, 1, 2, 12}, true, std::nullopt, vo);
    Point z{0.3, 0.2}, zb{0, 0};
    double g2 = D2.gamma(z, zb), a2 = A2.gamma(z, zb);
    CHECK(std::abs(g2 - a2) <= 1e-3 * std::abs(g2));
    CHECK(std::abs(g2 - a2) < std::abs(D1.gamma(z, zb) - A1.gamma(z, zb)));
}
