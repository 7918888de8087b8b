#pragma once

#include <cmath>
#include <set>

#include "regkit/hopf.hpp"
#include "regkit/rules.hpp"

namespace regkit {

// ---------------------------------------------------------------------------
// history, age and the order on trees
// ---------------------------------------------------------------------------

/// sigma precedes tau: fewer noises, or as many noises and smaller degree.
bool precedes(const Tree& a, const Tree& b, const TypeSet& ts);

/// Trees sigma with tau = sigma * rho for some rho (all sub-products at the root, including 1 and tau).
std::vector<Tree> product_divisors(const Tree& t);

struct HistResult {
    std::vector<Tree> trees;  // canonical order
    int rounds = 0;           // index n at which the construction stabilised
};

class History {
public:
    History(const Rule& r, Hopf& h) : rule_(r), h_(h) {}

    HistResult hist(const std::vector<Tree>& seed);
    bool is_historic(const std::vector<Tree>& set);
    int age(const Tree& t);

    /// Each phase applied once to a set; results filtered by strong conformity.
    std::set<Tree> phase_structure(const std::set<Tree>& s);
    std::set<Tree> phase_extraction(const std::set<Tree>& s);
    std::set<Tree> phase_factors(const std::set<Tree>& s);

    const Rule& rule() const { return rule_; }
    Hopf& hopf() { return h_; }

private:
    void keep_if_conforming(std::set<Tree>& out, const Tree& t) const;

    const Rule& rule_;
    Hopf& h_;
    std::map<Tree, int> ages_;
};

/// Good sector check: closed under un-planting and taking product factors.
bool is_good(const std::vector<Tree>& set);

// ---------------------------------------------------------------------------
// parameters of the variable-coefficient coproduct
// ---------------------------------------------------------------------------

/// Smallest degree over rooted subtrees (node decorations removed) of trees in B; includes 1.
Rat a_star(const std::vector<Tree>& B, const TypeSet& ts);
GammaData gamma_data(Hopf& h, const std::vector<Tree>& B, const Rat& gamma0);
/// Trees of B whose gamma is not in R_+ \ N; empty when gamma0 is admissible.
std::vector<Tree> inadmissible(Hopf& h, const std::vector<Tree>& B, const GammaData& g);

// ---------------------------------------------------------------------------
// preparation maps and the BPHZ recursion
// ---------------------------------------------------------------------------

template <class T>
using Functional = std::map<Tree, T>;

/// ell must vanish on kernel-planted trees and on X^k sigma with k != 0.
bool must_vanish(const Tree& t, const TypeSet& ts);

template <class T>
T functional_at(const Functional<T>& ell, const Tree& t) {
    if (t.is_one()) return T(1);
    auto it = ell.find(t);
    return it == ell.end() ? T(0) : it->second;
}

/// P_ell v = (ell (x) id) Delta_r^- v, with ell(1) = 1.
template <class T>
std::map<Tree, T> apply_preparation(Hopf& h, const Functional<T>& ell, const Tree& t) {
    std::map<Tree, T> out;
    for (auto& [p, c] : h.delta_r_minus(t)) {
        T v = functional_at(ell, p.first);
        if (v == T(0)) continue;
        out[p.second] += scalar_from_rat<T>(c) * v;
    }
    for (auto it = out.begin(); it != out.end();) it = it->second == T(0) ? out.erase(it) : std::next(it);
    return out;
}

struct PrepViolation {
    Tree tau, sigma;
    std::string reason;
};

/// Checks the triangularity conditions of a preparation map on a set of trees.
std::vector<PrepViolation> check_preparation(Hopf& h, const Functional<Rat>& ell, const std::vector<Tree>& B);

struct Estimate {
    double mean = 0, se = 0;
};

/// Supplies E[Pi^{P_ell, x} tau(0)] for the current functional.
template <class T>
class ExpectationOracle {
public:
    virtual ~ExpectationOracle() = default;
    virtual T expect(const Tree& tau, const Functional<T>& ell) = 0;
    virtual double stderr_of(const Tree&, const Functional<T>&) { return 0; }
};

/// Fixed values read from a table; trees missing from the table are an error.
template <class T>
class TableOracle : public ExpectationOracle<T> {
public:
    explicit TableOracle(std::map<Tree, T> v) : values_(std::move(v)) {}
    T expect(const Tree& tau, const Functional<T>&) override {
        if (tau.is_one()) return T(1);
        auto it = values_.find(tau);
        if (it == values_.end()) throw Error("oracle", "no expectation recorded for tree " + tau.key());
        return it->second;
    }

private:
    std::map<Tree, T> values_;
};

/// The BPHZ functional on a historic set, built stratum by stratum in age.
template <class T>
Functional<T> bphz_functional(History& H, const std::vector<Tree>& B, ExpectationOracle<T>& oracle) {
    Hopf& h = H.hopf();
    const TypeSet& ts = h.types();
    if (!H.is_historic(B)) throw Error("historic", "bphz_functional requires a historic set");
    std::vector<std::pair<int, Tree>> order;
    for (auto& t : B)
        if (degree(t, ts) < 0) order.emplace_back(H.age(t), t);
    std::sort(order.begin(), order.end());
    Functional<T> ell;
    for (auto& [a, t] : order) {
        (void)a;
        if (must_vanish(t, ts)) continue;
        T v = -oracle.expect(t, ell);
        for (auto& [p, c] : h.delta_r_minus_ring(t)) {
            T l = functional_at(ell, p.first);
            if (l == T(0)) continue;
            v -= scalar_from_rat<T>(c) * l * oracle.expect(p.second, ell);
        }
        if (v != T(0)) ell[t] = v;
    }
    return ell;
}

json functional_to_json(const Functional<double>& ell, const TypeSet& ts);
json functional_to_json(const Functional<Rat>& ell, const TypeSet& ts);

}  // namespace regkit
