#pragma once

#include <memory>
#include <string>
#include <vector>

#include "regkit/jet.hpp"

namespace regkit {

/// Parsed scalar formula in the variables t, x (or x1..xd).
/// Grammar: + - * / ^, parentheses, numbers, pi, and sin cos exp log sqrt tanh.
class Expr {
public:
    struct Node;

    Expr() = default;
    static Expr parse(const std::string& src, int space_dims = 1);
    static Expr constant(double c);

    double eval(const std::vector<double>& z) const;
    Jet eval(const std::vector<Jet>& z) const;
    const std::string& source() const { return src_; }
    bool is_constant() const;

private:
    std::shared_ptr<const Node> root_;
    std::string src_;
};

}  // namespace regkit
