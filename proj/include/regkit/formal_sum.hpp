#pragma once

#include <array>
#include <map>

#include "regkit/tree.hpp"

namespace regkit {

using FormalSum = std::map<Tree, Rat>;
using TensorSum = std::map<std::pair<Tree, Tree>, Rat>;
using Tensor3 = std::map<std::array<Tree, 3>, Rat>;

template <class K>
void add_term(std::map<K, Rat>& s, const K& k, const Rat& c) {
    if (c == 0) return;
    auto it = s.find(k);
    if (it == s.end()) {
        s.emplace(k, c);
        return;
    }
    it->second += c;
    if (it->second == 0) s.erase(it);
}

template <class K>
std::map<K, Rat>& add_into(std::map<K, Rat>& a, const std::map<K, Rat>& b, const Rat& scale = 1) {
    for (auto& [k, c] : b) add_term(a, k, c * scale);
    return a;
}

template <class K>
std::map<K, Rat> difference(const std::map<K, Rat>& a, const std::map<K, Rat>& b) {
    std::map<K, Rat> r = a;
    return add_into(r, b, Rat(-1));
}

FormalSum single(const Tree& t, const Rat& c = 1);
TensorSum tensor_product(const TensorSum& a, const TensorSum& b);  // slotwise tree product
FormalSum product(const FormalSum& a, const FormalSum& b);

/// (f (x) id) on a tensor, f returning tensors: the result lives in three slots.
template <class F>
Tensor3 apply_left(const TensorSum& s, F&& fn) {
    Tensor3 out;
    for (auto& [p, c] : s)
        for (auto& [q, e] : fn(p.first)) add_term(out, std::array<Tree, 3>{q.first, q.second, p.second}, c * e);
    return out;
}

template <class F>
Tensor3 apply_right(const TensorSum& s, F&& fn) {
    Tensor3 out;
    for (auto& [p, c] : s)
        for (auto& [q, e] : fn(p.second)) add_term(out, std::array<Tree, 3>{p.first, q.first, q.second}, c * e);
    return out;
}

FormalSum counit_right(const TensorSum& s);
FormalSum counit_left(const TensorSum& s);

json sum_to_json(const FormalSum& s, const TypeSet& ts);
json tensor_to_json(const TensorSum& s, const TypeSet& ts);
std::string sum_str(const FormalSum& s, const TypeSet& ts);
std::string tensor_str(const TensorSum& s, const TypeSet& ts);

}  // namespace regkit
