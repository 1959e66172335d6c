#include "invprox/expr.hpp"

#include "invprox/errors.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>

namespace invprox {

struct Expr::Node {
    Kind kind;
    double value = 0.0;  // constant
    int index = 0;       // variable, 0-based
    Builtin fn = Builtin::sin;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

constexpr std::array<std::pair<std::string_view, Builtin>, 7> kBuiltins{{
    {"sin", Builtin::sin},
    {"cos", Builtin::cos},
    {"tan", Builtin::tan},
    {"exp", Builtin::exp},
    {"log", Builtin::log},
    {"sqrt", Builtin::sqrt},
    {"abs", Builtin::abs},
}};

std::string_view builtin_name(Builtin fn) {
    for (const auto& [name, b] : kBuiltins)
        if (b == fn) return name;
    return "?";
}

NodePtr make_leaf(double value) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Kind::constant;
    n->value = value;
    return n;
}

NodePtr make_var(int index) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = Expr::Kind::variable;
    n->index = index;
    return n;
}

NodePtr make_op(Expr::Kind kind, NodePtr lhs, NodePtr rhs = nullptr) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = kind;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

double apply_builtin(Builtin fn, double a) {
    switch (fn) {
    case Builtin::sin: return std::sin(a);
    case Builtin::cos: return std::cos(a);
    case Builtin::tan: return std::tan(a);
    case Builtin::exp: return std::exp(a);
    case Builtin::log: return std::log(a);
    case Builtin::sqrt: return std::sqrt(a);
    case Builtin::abs: return std::abs(a);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

double eval_node(const Expr::Node& n, std::span<const double> x) {
    using K = Expr::Kind;
    switch (n.kind) {
    case K::constant: return n.value;
    case K::variable: return x[static_cast<std::size_t>(n.index)];
    case K::negate: return -eval_node(*n.lhs, x);
    case K::add: return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case K::subtract: return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case K::multiply: return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case K::divide: return eval_node(*n.lhs, x) / eval_node(*n.rhs, x);
    case K::power: return std::pow(eval_node(*n.lhs, x), eval_node(*n.rhs, x));
    case K::call: return apply_builtin(n.fn, eval_node(*n.lhs, x));
    }
    return std::numeric_limits<double>::quiet_NaN();
}

bool has_variables(const Expr::Node& n) {
    if (n.kind == Expr::Kind::variable) return true;
    return (n.lhs && has_variables(*n.lhs)) || (n.rhs && has_variables(*n.rhs));
}

class Parser {
public:
    Parser(std::string_view src, int state_dim) : src_(src), state_dim_(state_dim) {}

    NodePtr run() {
        auto root = expr();
        skip_ws();
        if (pos_ != src_.size()) throw ParseError(pos_, std::string("unexpected '") + src_[pos_] + "'");
        return root;
    }

private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            if (pos_ >= src_.size()) throw ParseError(pos_, std::string("expected '") + c + "', found end of input");
            throw ParseError(pos_, std::string("expected '") + c + "', found '" + src_[pos_] + "'");
        }
    }

    NodePtr expr() {
        auto lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = make_op(Expr::Kind::add, lhs, term());
            else if (accept('-'))
                lhs = make_op(Expr::Kind::subtract, lhs, term());
            else
                return lhs;
        }
    }

    NodePtr term() {
        auto lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = make_op(Expr::Kind::multiply, lhs, unary());
            else if (accept('/'))
                lhs = make_op(Expr::Kind::divide, lhs, unary());
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return make_op(Expr::Kind::negate, unary());
        return power();
    }

    NodePtr power() {
        auto base = primary();
        skip_ws();
        const std::size_t at = pos_;
        if (!accept('^')) return base;
        auto exponent = unary();
        if (has_variables(*exponent)) throw ParseError(at, "exponent must be a constant integer");
        const double value = eval_node(*exponent, {});
        if (!std::isfinite(value) || value != std::nearbyint(value))
            throw ParseError(at, "exponent must be a constant integer");
        return make_op(Expr::Kind::power, base, exponent);
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError(pos_, "unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = expr();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        throw ParseError(pos_, std::string("unexpected '") + c + "'");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t mantissa = digits();
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            mantissa += digits();
        }
        if (mantissa == 0) throw ParseError(start, "malformed number");
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
            if (digits() == 0) throw ParseError(start, "malformed exponent in number");
        }
        double value = 0.0;
        const auto* first = src_.data() + start;
        const auto* last = src_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) throw ParseError(start, "malformed number");
        return make_leaf(value);
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        const std::string_view name = src_.substr(start, pos_ - start);

        for (const auto& [bname, fn] : kBuiltins) {
            if (name != bname) continue;
            skip_ws();
            if (pos_ >= src_.size() || src_[pos_] != '(')
                throw ArityError(start, "builtin '" + std::string(name) + "' expects 1 argument");
            ++pos_;
            skip_ws();
            if (pos_ < src_.size() && src_[pos_] == ')')
                throw ArityError(start, "builtin '" + std::string(name) + "' expects 1 argument, got 0");
            auto arg = expr();
            skip_ws();
            if (pos_ < src_.size() && src_[pos_] == ',')
                throw ArityError(start, "builtin '" + std::string(name) + "' expects 1 argument");
            expect(')');
            auto n = std::make_shared<Expr::Node>();
            n->kind = Expr::Kind::call;
            n->fn = fn;
            n->lhs = std::move(arg);
            return n;
        }

        if (name.size() >= 2 && name[0] == 'x' && name[1] != '0') {
            int index = 0;
            auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), index);
            if (ec == std::errc() && ptr == name.data() + name.size() && index >= 1 && index <= state_dim_)
                return make_var(index - 1);
        }
        throw UnknownIdentifier(start, std::string(name));
    }

    std::string_view src_;
    int state_dim_;
    std::size_t pos_ = 0;
};

void print_node(const Expr::Node& n, std::string& out) {
    using K = Expr::Kind;
    auto binary = [&](const char* op) {
        out += '(';
        print_node(*n.lhs, out);
        out += op;
        print_node(*n.rhs, out);
        out += ')';
    };
    switch (n.kind) {
    case K::constant: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", n.value);
        out += buf;
        return;
    }
    case K::variable: out += "x" + std::to_string(n.index + 1); return;
    case K::negate:
        out += "(-";
        print_node(*n.lhs, out);
        out += ')';
        return;
    case K::add: binary("+"); return;
    case K::subtract: binary("-"); return;
    case K::multiply: binary("*"); return;
    case K::divide: binary("/"); return;
    case K::power: binary("^"); return;
    case K::call:
        out += builtin_name(n.fn);
        out += '(';
        print_node(*n.lhs, out);
        out += ')';
        return;
    }
}

bool same_node(const Expr::Node& a, const Expr::Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case Expr::Kind::constant: return std::bit_cast<std::uint64_t>(a.value) == std::bit_cast<std::uint64_t>(b.value);
    case Expr::Kind::variable: return a.index == b.index;
    case Expr::Kind::call:
        if (a.fn != b.fn) return false;
        break;
    default: break;
    }
    if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
    if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
    return (!a.lhs || same_node(*a.lhs, *b.lhs)) && (!a.rhs || same_node(*a.rhs, *b.rhs));
}

}  // namespace

Expr Expr::parse(std::string_view source, int state_dim) {
    if (state_dim < 1) throw DimensionMismatch("state dimension must be positive");
    return Expr(Parser(source, state_dim).run(), state_dim);
}

Expr Expr::constant(double value) { return Expr(make_leaf(value), 0); }

Expr Expr::variable(int index, int state_dim) {
    if (index < 1 || index > state_dim)
        throw DimensionMismatch("variable x" + std::to_string(index) + " outside state dimension " +
                                std::to_string(state_dim));
    return Expr(make_var(index - 1), state_dim);
}

double Expr::eval(std::span<const double> point) const {
    if (state_dim_ > 0 && point.size() != static_cast<std::size_t>(state_dim_))
        throw DimensionMismatch("expected a point of dimension " + std::to_string(state_dim_) + ", got " +
                                std::to_string(point.size()));
    return eval_node(*root_, point);
}

std::string Expr::to_string() const {
    std::string out;
    print_node(*root_, out);
    return out;
}

bool Expr::same_structure(const Expr& other) const { return same_node(*root_, *other.root_); }

Expr::Kind Expr::kind() const { return root_->kind; }

Evaluable Expr::as_evaluable() const {
    return [root = root_](std::span<const double> x) { return eval_node(*root, x); };
}

DynamicsMap::DynamicsMap(std::vector<Expr> components) : components_(std::move(components)) {
    if (components_.empty()) throw DimensionMismatch("dynamics map needs at least one component");
    const int n = state_dim();
    for (const auto& c : components_)
        if (c.state_dim() != 0 && c.state_dim() != n)
            throw DimensionMismatch("dynamics component declared for dimension " + std::to_string(c.state_dim()) +
                                    " in a map of dimension " + std::to_string(n));
}

DynamicsMap DynamicsMap::parse(const std::vector<std::string>& sources, int state_dim) {
    if (static_cast<int>(sources.size()) != state_dim)
        throw DimensionMismatch("dynamics has " + std::to_string(sources.size()) + " components, state dimension is " +
                                std::to_string(state_dim));
    std::vector<Expr> comps;
    comps.reserve(sources.size());
    for (const auto& s : sources) comps.push_back(Expr::parse(s, state_dim));
    return DynamicsMap(std::move(comps));
}

void DynamicsMap::apply(std::span<const double> x, std::span<double> out) const {
    if (x.size() != components_.size() || out.size() != components_.size())
        throw DimensionMismatch("dynamics map applied to a point of wrong dimension");
    for (std::size_t k = 0; k < components_.size(); ++k) out[k] = components_[k].eval(x);
}

std::vector<double> DynamicsMap::apply(std::span<const double> x) const {
    std::vector<double> out(components_.size());
    apply(x, out);
    return out;
}

Evaluable compose_with_map(const Expr& e, const DynamicsMap& map) {
    if (e.state_dim() != 0 && e.state_dim() != map.state_dim())
        throw DimensionMismatch("expression of dimension " + std::to_string(e.state_dim()) +
                                " composed with a map of dimension " + std::to_string(map.state_dim()));
    return [f = e.as_evaluable(), map](std::span<const double> x) {
        std::vector<double> y(static_cast<std::size_t>(map.state_dim()));
        map.apply(x, y);
        return f(y);
    };
}

}  // namespace invprox
