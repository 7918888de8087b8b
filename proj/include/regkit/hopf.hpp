#pragma once

#include <unordered_map>

#include "regkit/formal_sum.hpp"

namespace regkit {

/// Parameters of the variable-coefficient coproduct: gamma_0, a_*, m_*.
struct GammaData {
    Rat gamma0, a_star, m_star;
    std::string tag() const { return rat_str(gamma0) + "|" + rat_str(a_star) + "|" + rat_str(m_star); }
};

Rat flat_degree(const Flat& f, const TypeSet& ts);

class Hopf {
public:
    explicit Hopf(TypeSet ts) : ts_(std::move(ts)) {}
    const TypeSet& types() const { return ts_; }

    bool positive_planted(const Tree& planted) const;
    bool in_T_plus(const Tree& t) const;
    bool is_negative_or_one(const Tree& t) const;

    TensorSum delta(const Tree& t);
    TensorSum delta_plus(const Tree& t);
    TensorSum delta_r_minus(const Tree& t);
    TensorSum delta_r_minus_ring(const Tree& t);

    TensorSum delta(const FormalSum& s);
    TensorSum delta_plus(const FormalSum& s);

    FormalSum antipode(const Tree& t);
    FormalSum antipode(const FormalSum& s);

    Rat gamma_of(const Tree& t, const GammaData& g);
    TensorSum delta_tilde(const Tree& t, const GammaData& g);
    TensorSum delta_tilde_explicit(const Tree& t, const GammaData& g);
    FormalSum d_map(const Tree& t);

    void clear_caches();

private:
    TensorSum coaction(const Tree& t, bool plus);

    TypeSet ts_;
    std::unordered_map<std::string, TensorSum> c_delta_, c_plus_, c_rminus_, c_tilde_;
    std::unordered_map<std::string, FormalSum> c_anti_;
    std::unordered_map<std::string, Rat> c_gamma_;
};

// ---------------------------------------------------------------------------
// characters on the positive structure
// ---------------------------------------------------------------------------

template <class T>
T scalar_from_rat(const Rat& q);
template <>
inline Rat scalar_from_rat<Rat>(const Rat& q) { return q; }
template <>
inline double scalar_from_rat<double>(const Rat& q) { return q.get_d(); }

template <class T>
struct CharacterT {
    std::vector<T> x;             // values on X_i
    std::map<Tree, T> planted;    // values on planted generators; absent means 0

    T on_planted(const Tree& p) const {
        auto it = planted.find(p);
        return it == planted.end() ? T(0) : it->second;
    }
    T eval(const Tree& t) const {
        T r = 1;
        auto [k, fs] = factorise(t);
        for (size_t i = 0; i < k.size(); ++i)
            for (int m = 0; m < k[i]; ++m) r *= x.at(i);
        for (auto& f : fs) r *= on_planted(f);
        return r;
    }
    T eval(const FormalSum& s) const {
        T r = 0;
        for (auto& [t, c] : s) r += scalar_from_rat<T>(c) * eval(t);
        return r;
    }
};

using Character = CharacterT<Rat>;

/// Planted generators appearing as factors in the positive slots of Delta on the given trees.
std::vector<Tree> positive_generators(Hopf& h, const std::vector<Tree>& trees);

template <class T>
CharacterT<T> convolve(Hopf& h, const CharacterT<T>& g, const CharacterT<T>& k, const std::vector<Tree>& gens) {
    CharacterT<T> out;
    int d = h.types().dim();
    out.x.resize(d);
    for (int i = 0; i < d; ++i) out.x[i] = g.x[i] + k.x[i];
    for (auto& p : gens) {
        T v = 0;
        for (auto& [pr, c] : h.delta_plus(p)) v += scalar_from_rat<T>(c) * g.eval(pr.first) * k.eval(pr.second);
        out.planted[p] = v;
    }
    return out;
}

template <class T>
CharacterT<T> inverse(Hopf& h, const CharacterT<T>& g, const std::vector<Tree>& gens) {
    CharacterT<T> out;
    out.x.resize(g.x.size());
    for (size_t i = 0; i < g.x.size(); ++i) out.x[i] = -g.x[i];
    for (auto& p : gens) out.planted[p] = g.eval(h.antipode(p));
    return out;
}

/// Gamma_g v = (id (x) g) Delta v
FormalSum gamma_action(Hopf& h, const Character& g, const FormalSum& v);

}  // namespace regkit
