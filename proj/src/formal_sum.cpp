#include "regkit/formal_sum.hpp"

namespace regkit {

FormalSum counit_right(const TensorSum& s) {
    FormalSum r;
    for (auto& [p, c] : s)
        if (p.second.is_one()) add_term(r, p.first, c);
    return r;
}

FormalSum counit_left(const TensorSum& s) {
    FormalSum r;
    for (auto& [p, c] : s)
        if (p.first.is_one()) add_term(r, p.second, c);
    return r;
}

FormalSum single(const Tree& t, const Rat& c) {
    FormalSum s;
    add_term(s, t, c);
    return s;
}

TensorSum tensor_product(const TensorSum& a, const TensorSum& b) {
    TensorSum r;
    for (auto& [p, c] : a)
        for (auto& [q, e] : b)
            add_term(r, std::make_pair(tree_product(p.first, q.first), tree_product(p.second, q.second)), c * e);
    return r;
}

FormalSum product(const FormalSum& a, const FormalSum& b) {
    FormalSum r;
    for (auto& [p, c] : a)
        for (auto& [q, e] : b) add_term(r, tree_product(p, q), c * e);
    return r;
}

json sum_to_json(const FormalSum& s, const TypeSet& ts) {
    json j = json::array();
    for (auto& [t, c] : s) j.push_back({{"coef", rat_str(c)}, {"tree", t.key()}, {"pretty", pretty(t, ts)}});
    return j;
}

json tensor_to_json(const TensorSum& s, const TypeSet& ts) {
    json j = json::array();
    for (auto& [p, c] : s)
        j.push_back({{"coef", rat_str(c)},
                     {"left", p.first.key()},
                     {"right", p.second.key()},
                     {"pretty", pretty(p.first, ts) + " (x) " + pretty(p.second, ts)}});
    return j;
}

std::string sum_str(const FormalSum& s, const TypeSet& ts) {
    std::string out;
    for (auto& [t, c] : s) out += (out.empty() ? "" : " + ") + rat_str(c) + "*[" + pretty(t, ts) + "]";
    return out.empty() ? "0" : out;
}

std::string tensor_str(const TensorSum& s, const TypeSet& ts) {
    std::string out;
    for (auto& [p, c] : s)
        out += (out.empty() ? "" : " + ") + rat_str(c) + "*[" + pretty(p.first, ts) + " (x) " + pretty(p.second, ts) + "]";
    return out.empty() ? "0" : out;
}

}  // namespace regkit
