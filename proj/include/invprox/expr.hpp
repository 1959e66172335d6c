#pragma once

// Scalar expression mini-language over state variables x1..xn.
//
// Grammar (EBNF), whitespace ignored between tokens:
//
//   expr    = term { ("+" | "-") term } ;
//   term    = unary { ("*" | "/") unary } ;
//   unary   = "-" unary | power ;
//   power   = primary [ "^" unary ] ;          (* right associative *)
//   primary = number | variable | call | "(" expr ")" ;
//   call    = builtin "(" expr ")" ;
//   builtin = "sin" | "cos" | "tan" | "exp" | "log" | "sqrt" | "abs" ;
//   variable= "x" digit { digit } ;            (* x1 .. xn *)
//   number  = digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ] ;
//
// The exponent of "^" must be a variable-free subexpression whose value is
// an integer, so every expression stays real-valued for negative bases.

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace invprox {

/// A function R^n -> R that can be evaluated pointwise.
using Evaluable = std::function<double(std::span<const double>)>;

enum class Builtin { sin, cos, tan, exp, log, sqrt, abs };

class Expr {
public:
    enum class Kind { constant, variable, negate, add, subtract, multiply, divide, power, call };

    struct Node;

    static Expr parse(std::string_view source, int state_dim);

    static Expr constant(double value);
    static Expr variable(int index, int state_dim);  // 1-based

    double eval(std::span<const double> point) const;
    int state_dim() const noexcept { return state_dim_; }

    /// Fully parenthesized text that reparses to the same tree.
    std::string to_string() const;

    /// Structural equality of the syntax trees (constants compared bitwise).
    bool same_structure(const Expr& other) const;

    Kind kind() const;

    /// Shares the immutable tree; safe to copy into closures.
    Evaluable as_evaluable() const;

private:
    Expr(std::shared_ptr<const Node> root, int state_dim) : root_(std::move(root)), state_dim_(state_dim) {}

    std::shared_ptr<const Node> root_;
    int state_dim_ = 0;
};

/// The state-update map x+ = T(x), one expression per component.
class DynamicsMap {
public:
    DynamicsMap(std::vector<Expr> components);

    static DynamicsMap parse(const std::vector<std::string>& sources, int state_dim);

    int state_dim() const noexcept { return static_cast<int>(components_.size()); }
    const std::vector<Expr>& components() const noexcept { return components_; }

    void apply(std::span<const double> x, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> x) const;

private:
    std::vector<Expr> components_;
};

/// Koopman image of an atom: g(x) = e(T(x)).
Evaluable compose_with_map(const Expr& e, const DynamicsMap& map);

}  // namespace invprox
