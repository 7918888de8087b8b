#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "regkit/kernels.hpp"
#include "regkit/quad.hpp"

using namespace regkit;

namespace {

const Scaling& par() {
    static Scaling s = Scaling::parabolic(1);
    return s;
}

JetFn constant(double c) {
    return [c](const std::vector<Jet>& z) { return Jet(z[0].nvars(), z[0].order(), c); };
}

}  // namespace

TEST_CASE("jet arithmetic against closed forms") {
    // f(t, x) = exp(t) sin(x) / (1 + t^2)
    auto f = [](const std::vector<Jet>& z) { return exp(z[0]) * sin(z[1]) / (1.0 + z[0] * z[0]); };
    Point p{0.3, -0.7};
    Jet J = jet_at(f, p, 3);
    double t = p[0], x = p[1];
    double g = std::exp(t) / (1 + t * t);
    double gp = g * (1 - 2 * t / (1 + t * t));
    CHECK(J.value() == doctest::Approx(g * std::sin(x)).epsilon(1e-14));
    CHECK(J.deriv({0, 1}) == doctest::Approx(g * std::cos(x)).epsilon(1e-14));
    CHECK(J.deriv({0, 3}) == doctest::Approx(-g * std::cos(x)).epsilon(1e-13));
    CHECK(J.deriv({1, 0}) == doctest::Approx(gp * std::sin(x)).epsilon(1e-13));
    CHECK(J.deriv({1, 2}) == doctest::Approx(-gp * std::sin(x)).epsilon(1e-13));
    Jet L = jet_at([](const std::vector<Jet>& z) { return log(z[0]) + sqrt(z[0]) + cos(z[0]); }, {2.0}, 2);
    CHECK(L.deriv({2}) == doctest::Approx(-0.25 - 0.25 * std::pow(2.0, -1.5) - std::cos(2.0)).epsilon(1e-13));
}

TEST_CASE("scaled norm and index sets") {
    CHECK(par().norm({1.0 / 16, 0.0}) == doctest::Approx(0.25));
    CHECK(par().norm({0.0, -0.3}) == doctest::Approx(0.3));
    Point z{0.02, 0.1};
    CHECK(par().norm(par().dilate(z, 3)) == doctest::Approx(8 * par().norm(z)));
    CHECK(par().indices_below(2, true).size() == 2);   // 1, x
    CHECK(par().indices_below(2, false).size() == 4);  // 1, x, x^2, t
}

TEST_CASE("partition of unity and supports") {
    Cutoff c(par());
    auto K = dyadic_decompose(constant(1), c, 8, Rat(0), 0);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    double worst = 0;
    for (int i = 0; i < 500; ++i) {
        Point z{u(rng), u(rng)};
        worst = std::max(worst, std::abs(K.reassemble(z) - 1));
    }
    CHECK(worst <= 1e-12);
    // telescoping identity without the near part
    for (int i = 0; i < 200; ++i) {
        Point z{u(rng) * 0.01, u(rng) * 0.1};
        double s = 1 - c.chi(z);
        for (int n = 0; n <= 5; ++n) s += c.phi_n(n, z);
        CHECK(std::abs(s - (1 - c.chi(par().dilate(z, 6)))) <= 1e-14);
    }
    for (int n = 0; n <= 8; ++n)
        for (int i = 0; i < 200; ++i) {
            Point z{u(rng), u(rng)};
            if (par().norm(z) > std::exp2(-n)) CHECK(K.component_value(n, z) == 0);
        }
    CHECK_THROWS_AS(dyadic_decompose(constant(1), c, 0, Rat(0), 0), Error);
}

TEST_CASE("reassembly of the heat kernel off the origin") {
    auto G = heat_kernel(1);
    auto K = dyadic_decompose(G, Cutoff(par()), 10, Rat(2), 1);
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 300; ++i) {
        Point z{u(rng) * 0.5, (u(rng) - 0.5)};
        double g = value_at(G, z);
        CHECK(std::abs(K.reassemble(z) - g) <= 1e-10 * std::max(1.0, std::abs(g)));
    }
}

TEST_CASE("kernel norms") {
    Cutoff c(par());
    auto zero = dyadic_decompose(constant(0), c, 4, Rat(2), 1);
    CHECK(kernel_norm(zero).value == 0);

    auto G = heat_kernel(1);
    auto K12 = dyadic_decompose(G, c, 12, Rat(2), 1);
    auto K16 = dyadic_decompose(G, c, 16, Rat(2), 1);
    NormOptions o{32};
    auto r12 = kernel_norm(K12, o), r16 = kernel_norm(K16, o);
    CHECK(std::isfinite(r12.value));
    CHECK(r12.value > 0);
    CHECK(r12.mode == "analytic");
    CHECK_FALSE(r12.degraded);
    CHECK(std::abs(r16.value / r12.value - 1) <= 0.01);

    // homogeneity: the heat kernel's levels all carry the same weighted norm
    for (double v : r12.per_level) CHECK(v == doctest::Approx(r12.per_level[0]).epsilon(1e-9));

    auto scaled = K12.scaled(std::exp2(0.75));
    CHECK(kernel_norm(scaled, o).value == doctest::Approx(std::exp2(0.75) * r12.value).epsilon(1e-12));

    // sub-additivity
    auto other = dyadic_decompose([](const std::vector<Jet>& z) { return sin(z[1] * 3.0) * 50.0; }, c, 12, Rat(2), 1);
    double a = kernel_norm(K12, o).value, b = kernel_norm(other, o).value, s = kernel_norm(K12 + other, o).value;
    CHECK(s <= a + b + 1e-12);
}

TEST_CASE("frozen Gaussian norm is stable under refinement") {
    auto K = dyadic_decompose(heat_kernel(1), Cutoff(par()), 6, Rat(2), 0);
    double coarse = kernel_norm(K, {48}).value, fine = kernel_norm(K, {96}).value;
    CHECK(std::abs(fine / coarse - 1) <= 0.02);
}

TEST_CASE("higher-order norms are stable once the grid resolves the cutoff band") {
    for (int order : {1, 2}) {
        CAPTURE(order);
        auto K = dyadic_decompose(heat_kernel(1), Cutoff(par()), 1, Rat(2), order);
        double coarse = kernel_norm(K, {96}).value, fine = kernel_norm(K, {192}).value;
        CHECK(std::abs(fine / coarse - 1) <= 0.02);
    }
}

TEST_CASE("sampled kernels use differences, value-only kernels are flagged") {
    Cutoff c(par());
    auto G = heat_kernel(1);
    std::vector<std::function<double(const Point&)>> comps;
    for (int n = 0; n <= 3; ++n) comps.push_back([c, G, n](const Point& z) { return c.phi_n(n, z) * value_at(G, z); });
    auto analytic = kernel_norm(dyadic_decompose(G, c, 3, Rat(2), 1), {32});
    auto fd = kernel_norm(sampled_kernel(comps, par(), Rat(2), 1, 1e-4), {32});
    CHECK(fd.mode == "finite-difference");
    CHECK(fd.fd_step == 1e-4);
    CHECK(std::abs(fd.value / analytic.value - 1) <= 1e-3);
    auto vo = kernel_norm(sampled_kernel(comps, par(), Rat(2), 1, 0, true), {32});
    CHECK(vo.degraded);
    CHECK(vo.mode == "values-only");
}

TEST_CASE("kernel descriptors") {
    auto K = kernel_from_json(json{{"beta", "2"}, {"order", 1}, {"formula", "heat"}, {"N", 4}});
    CHECK(K.levels() == 5);
    CHECK(K.beta == 2);
    CHECK_THROWS_AS(kernel_from_json(json{{"formula", "bogus"}}), Error);
}

TEST_CASE("Hoelder norms of grid fields") {
    Scaling line{{1}};
    GridField cst({64}, {1.0 / 64}, {0.0}, line, true);
    cst.fill([](const Point&) { return -2.5; });
    auto r = holder_norm_estimate(cst, 0.4);
    CHECK(r.value == doctest::Approx(2.5));
    CHECK(r.increment_part == 0);

    // |x|^{1/2} on [-1, 1]: exponent below 1/2 stays bounded, above 1/2 grows under refinement
    auto sqrt_field = [&](int n) {
        GridField g({2 * n + 1}, {1.0 / n}, {-1.0}, line, false);
        g.fill([](const Point& x) { return std::sqrt(std::abs(x[0])); });
        return g;
    };
    std::vector<double> lo, hi;
    for (int n : {64, 256, 1024, 4096}) {
        lo.push_back(holder_norm_estimate(sqrt_field(n), 0.4).value);
        hi.push_back(holder_norm_estimate(sqrt_field(n), 0.6).increment_part);
    }
    for (double v : lo) CHECK(v <= 2.0);
    // the increment quotient at the finest offset is h^{-1/10}
    for (size_t i = 1; i < hi.size(); ++i) CHECK(hi[i] == doctest::Approx(hi[i - 1] * std::pow(4.0, 0.1)).epsilon(1e-9));

    // a smooth field: the estimate does not increase when alpha decreases
    GridField sm({32, 32}, {1.0 / 256, 1.0 / 16}, {0.0, 0.0}, Scaling::parabolic(1), true);
    sm.fill([](const Point& z) { return std::sin(2 * M_PI * z[1] / 2) * std::cos(2 * M_PI * z[0] * 8); });
    double prev = 1e300;
    for (double a : {0.9, 0.7, 0.5, 0.3, 0.1}) {
        double v = holder_norm_estimate(sm, a).value;
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    double nprev = 1e300;
    for (double a : {-0.1, -0.5, -0.9}) {
        double v = holder_norm_estimate(sm, a).value;
        CHECK(v <= nprev + 1e-12);
        nprev = v;
    }
    CHECK_THROWS_AS(holder_norm_estimate(sm, 1.0), Error);
}

TEST_CASE("bump integrates to one") {
    auto s = par();
    double total = 0;
    int n = 400;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) total += bump(s, {-1 + (i + 0.5) * 2.0 / n, -1 + (j + 0.5) * 2.0 / n});
    CHECK(total * 4.0 / (n * n) == doctest::Approx(1).epsilon(1e-4));
}

TEST_CASE("anisotropic Taylor: sets and exactness") {
    CHECK(is_lower_set({{0, 0}, {0, 1}, {1, 0}}));
    CHECK_FALSE(is_lower_set({{0, 0}, {1, 1}}));
    CHECK(first_nonzero({0, 2, 1}) == 1);
    CHECK(k_down({0, 2, 1}) == MultiIndex{0, 1, 1});
    std::vector<MultiIndex> A{{0, 0}, {0, 1}};
    auto dA = boundary_set(A);
    CHECK(dA == std::vector<MultiIndex>{{0, 2}, {1, 0}, {1, 1}});
    std::set<MultiIndex> As(A.begin(), A.end());
    for (auto& k : dA) CHECK(As.count(k_down(k)));
    CHECK_THROWS_AS(AnisoTaylor(constant(1), {{0, 0}, {0, 2}}), Error);

    // polynomial with exponents in A: the remainder vanishes
    std::vector<MultiIndex> B{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}};
    auto poly = [](const std::vector<Jet>& z) {
        return 1.5 - 2.0 * z[1] + 0.5 * z[1] * z[1] + 3.0 * z[0] - 1.25 * z[0] * z[1];
    };
    AnisoTaylor T(poly, B);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 100; ++i) {
        Point x{u(rng), u(rng)};
        CHECK(std::abs(T.remainder(x)) <= 1e-10);
        CHECK(std::abs(T.jet_part(x) - value_at(poly, x)) <= 1e-10);
    }

    // a general smooth f is reproduced exactly by jet part plus remainder
    auto g = [](const std::vector<Jet>& z) { return exp(z[0] * 0.7) * cos(z[1] * 1.3 + z[0]); };
    AnisoTaylor Tg(g, B);
    for (int i = 0; i < 50; ++i) {
        Point x{u(rng), u(rng)};
        CHECK(Tg.jet_part(x) + Tg.remainder(x) == doctest::Approx(Tg.value(x)).epsilon(1e-12));
    }

    // one variable, A = {0}: the remainder is f(x) - f(0)
    auto h = [](const std::vector<Jet>& z) { return sin(z[0]) + z[0] * z[0] * z[0]; };
    AnisoTaylor T1(h, {{0}});
    for (double x : {-0.8, 0.1, 0.9}) CHECK(T1.remainder({x}) == doctest::Approx(value_at(h, {x}) - value_at(h, {0.0})).epsilon(1e-14));
}

TEST_CASE("anisotropic Taylor: jet terms match finite differences") {
    auto g = [](const std::vector<Jet>& z) { return exp(z[0]) * sin(z[1] + 0.3); };
    std::vector<MultiIndex> A{{0, 0}, {0, 1}, {1, 0}};
    AnisoTaylor T(g, A);
    auto f = [&](double t, double x) { return value_at(g, {t, x}); };
    double e = 1e-4;
    CHECK(T.derivatives()[0] == doctest::Approx(f(0, 0)));
    CHECK(std::abs(T.derivatives()[1] - (f(0, e) - f(0, -e)) / (2 * e)) <= 1e-7);
    CHECK(std::abs(T.derivatives()[2] - (f(e, 0) - f(-e, 0)) / (2 * e)) <= 1e-7);
}

TEST_CASE("anisotropic Taylor: remainder order for sin(t + x)") {
    auto g = [](const std::vector<Jet>& z) { return sin(z[0] + z[1]); };
    auto A = par().indices_below(2, true);
    AnisoTaylor T(g, A);
    std::vector<double> hs, sups;
    for (int j = 3; j <= 9; ++j) {
        double h = std::exp2(-j), sup = 0;
        for (int i = 0; i < 64; ++i) {
            double th = 2 * M_PI * i / 64;
            // points with |z|_s = h: t = h^2 sign(cos) |cos|^{1/2}, x = h sin-like
            double c = std::cos(th), s = std::sin(th);
            double q = std::pow(c * c * c * c + s * s * s * s, 0.25);
            Point z{h * h * (c / q) * std::abs(c / q), h * s / q};
            sup = std::max(sup, std::abs(T.remainder(z)));
        }
        hs.push_back(h);
        sups.push_back(sup);
    }
    auto fit = loglog_fit(hs, sups);
    CHECK(std::abs(fit.slope - 2) <= 0.2);
}
