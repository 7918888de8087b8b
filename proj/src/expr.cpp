#include "regkit/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace regkit {

struct Expr::Node {
    enum Kind { Num, Var, Neg, Add, Sub, Mul, Div, Pow, Func } kind;
    double value = 0;
    int var = 0;
    std::string fn;
    std::shared_ptr<const Node> l, r;
};

namespace {

using NodeP = std::shared_ptr<const Expr::Node>;

NodeP make(Expr::Node n) { return std::make_shared<const Expr::Node>(std::move(n)); }

class Parser {
public:
    Parser(const std::string& s, int d) : s_(s), d_(d) {}

    NodeP run() {
        NodeP e = expr();
        skip();
        if (p_ != s_.size()) fail("unexpected '" + std::string(1, s_[p_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& m) const {
        throw Error("parse", m + " at position " + std::to_string(p_) + " in '" + s_ + "'");
    }
    void skip() {
        while (p_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[p_]))) ++p_;
    }
    bool eat(char c) {
        skip();
        if (p_ < s_.size() && s_[p_] == c) {
            ++p_;
            return true;
        }
        return false;
    }

    NodeP expr() {
        NodeP a = term();
        while (true) {
            if (eat('+'))
                a = make({Expr::Node::Add, 0, 0, "", a, term()});
            else if (eat('-'))
                a = make({Expr::Node::Sub, 0, 0, "", a, term()});
            else
                return a;
        }
    }
    NodeP term() {
        NodeP a = unary();
        while (true) {
            if (eat('*'))
                a = make({Expr::Node::Mul, 0, 0, "", a, unary()});
            else if (eat('/'))
                a = make({Expr::Node::Div, 0, 0, "", a, unary()});
            else
                return a;
        }
    }
    NodeP unary() {
        if (eat('-')) return make({Expr::Node::Neg, 0, 0, "", unary(), nullptr});
        if (eat('+')) return unary();
        return power();
    }
    NodeP power() {
        NodeP a = atom();
        if (eat('^')) {
            NodeP e = unary();
            if (e->kind != Expr::Node::Num && !(e->kind == Expr::Node::Neg && e->l->kind == Expr::Node::Num))
                fail("exponent must be a constant");
            return make({Expr::Node::Pow, 0, 0, "", a, e});
        }
        return a;
    }
    NodeP atom() {
        skip();
        if (p_ >= s_.size()) fail("unexpected end of formula");
        char c = s_[p_];
        if (eat('(')) {
            NodeP e = expr();
            if (!eat(')')) fail("missing ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t used = 0;
            double v = std::stod(s_.substr(p_), &used);
            p_ += used;
            return make({Expr::Node::Num, v, 0, "", nullptr, nullptr});
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            size_t b = p_;
            while (p_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[p_]))) ++p_;
            std::string id = s_.substr(b, p_ - b);
            if (id == "t") return make({Expr::Node::Var, 0, 0, "", nullptr, nullptr});
            if (id == "x" && d_ == 1) return make({Expr::Node::Var, 0, 1, "", nullptr, nullptr});
            if (id.size() > 1 && id[0] == 'x' && std::isdigit(static_cast<unsigned char>(id[1]))) {
                int i = std::stoi(id.substr(1));
                if (i < 1 || i > d_) fail("variable " + id + " out of range");
                return make({Expr::Node::Var, 0, i, "", nullptr, nullptr});
            }
            if (id == "pi") return make({Expr::Node::Num, M_PI, 0, "", nullptr, nullptr});
            static const char* fns[] = {"sin", "cos", "exp", "log", "sqrt", "tanh"};
            for (auto* f : fns)
                if (id == f) {
                    if (!eat('(')) fail("expected '(' after " + id);
                    NodeP a = expr();
                    if (!eat(')')) fail("missing ')'");
                    return make({Expr::Node::Func, 0, 0, id, a, nullptr});
                }
            fail("unknown identifier '" + id + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    int d_;
    size_t p_ = 0;
};

double num_value(const Expr::Node& n) { return n.kind == Expr::Node::Num ? n.value : -n.l->value; }

double evald(const Expr::Node& n, const std::vector<double>& z) {
    switch (n.kind) {
        case Expr::Node::Num: return n.value;
        case Expr::Node::Var: return z.at(n.var);
        case Expr::Node::Neg: return -evald(*n.l, z);
        case Expr::Node::Add: return evald(*n.l, z) + evald(*n.r, z);
        case Expr::Node::Sub: return evald(*n.l, z) - evald(*n.r, z);
        case Expr::Node::Mul: return evald(*n.l, z) * evald(*n.r, z);
        case Expr::Node::Div: return evald(*n.l, z) / evald(*n.r, z);
        case Expr::Node::Pow: return std::pow(evald(*n.l, z), num_value(*n.r));
        case Expr::Node::Func: {
            double a = evald(*n.l, z);
            if (n.fn == "sin") return std::sin(a);
            if (n.fn == "cos") return std::cos(a);
            if (n.fn == "exp") return std::exp(a);
            if (n.fn == "log") return std::log(a);
            if (n.fn == "sqrt") return std::sqrt(a);
            return std::tanh(a);
        }
    }
    return 0;
}

Jet evalj(const Expr::Node& n, const std::vector<Jet>& z) {
    int nv = z[0].nvars(), o = z[0].order();
    switch (n.kind) {
        case Expr::Node::Num: return Jet(nv, o, n.value);
        case Expr::Node::Var: return z.at(n.var);
        case Expr::Node::Neg: return -evalj(*n.l, z);
        case Expr::Node::Add: return evalj(*n.l, z) + evalj(*n.r, z);
        case Expr::Node::Sub: return evalj(*n.l, z) - evalj(*n.r, z);
        case Expr::Node::Mul: return evalj(*n.l, z) * evalj(*n.r, z);
        case Expr::Node::Div: return evalj(*n.l, z) / evalj(*n.r, z);
        case Expr::Node::Pow: {
            double p = num_value(*n.r);
            if (p >= 0 && p == std::round(p)) return pow_int(evalj(*n.l, z), static_cast<int>(p));
            return pow(evalj(*n.l, z), p);
        }
        case Expr::Node::Func: {
            Jet a = evalj(*n.l, z);
            if (n.fn == "sin") return sin(a);
            if (n.fn == "cos") return cos(a);
            if (n.fn == "exp") return exp(a);
            if (n.fn == "log") return log(a);
            if (n.fn == "sqrt") return sqrt(a);
            Jet e2 = exp(a * 2.0);
            return (e2 - 1.0) / (e2 + 1.0);
        }
    }
    return Jet(nv, o, 0);
}

bool constant_node(const Expr::Node& n) {
    if (n.kind == Expr::Node::Var) return false;
    if (n.l && !constant_node(*n.l)) return false;
    if (n.r && !constant_node(*n.r)) return false;
    return true;
}

}  // namespace

Expr Expr::parse(const std::string& src, int d) {
    Expr e;
    e.root_ = Parser(src, d).run();
    e.src_ = src;
    return e;
}

Expr Expr::constant(double c) {
    Expr e;
    e.root_ = make({Node::Num, c, 0, "", nullptr, nullptr});
    std::ostringstream os;
    os.precision(17);
    os << c;
    e.src_ = os.str();
    return e;
}

double Expr::eval(const std::vector<double>& z) const { return evald(*root_, z); }
Jet Expr::eval(const std::vector<Jet>& z) const { return evalj(*root_, z); }
bool Expr::is_constant() const { return constant_node(*root_); }

}  // namespace regkit
