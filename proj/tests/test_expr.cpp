#include "invprox/errors.hpp"
#include "invprox/expr.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

using namespace invprox;

namespace {

double eval_at(const std::string& src, std::vector<double> x) {
    return Expr::parse(src, static_cast<int>(x.size())).eval(x);
}

const std::vector<std::string> kExample = {"0.9*x1", "0.4*(sin(x2)+x1^2)+0.01*x2^2"};

// Random expression text over x1..x3 for the round-trip property.
std::string random_expr(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
    std::uniform_int_distribution<int> var(1, 3);
    std::uniform_real_distribution<double> num(0.0, 10.0);
    switch (pick(rng)) {
    case 0: return std::to_string(num(rng));
    case 1: return "x" + std::to_string(var(rng));
    case 2: return "-" + random_expr(rng, depth - 1);
    case 3: return "(" + random_expr(rng, depth - 1) + "+" + random_expr(rng, depth - 1) + ")";
    case 4: return random_expr(rng, depth - 1) + "-" + random_expr(rng, depth - 1);
    case 5: return random_expr(rng, depth - 1) + "*" + random_expr(rng, depth - 1);
    case 6: return random_expr(rng, depth - 1) + "/" + random_expr(rng, depth - 1);
    case 7: return "(" + random_expr(rng, depth - 1) + ")^" + std::to_string(var(rng) - 1);
    case 8: return "sin(" + random_expr(rng, depth - 1) + ")";
    default: return "abs(" + random_expr(rng, depth - 1) + ")";
    }
}

}  // namespace

TEST_CASE("parse and evaluate basic expressions") {
    CHECK(eval_at("0.9*x1", {1.0, 0.5}) == doctest::Approx(0.9));
    CHECK(eval_at("0.4*(sin(x2)+x1^2)+0.01*x2^2", {1.0, 0.0}) == doctest::Approx(0.4));
    CHECK(eval_at("x1^2", {-1.0, 7.0}) == 1.0);
    CHECK(eval_at("sin(x2)", {0.0, 0.0}) == 0.0);
    CHECK(eval_at("1e-3 * 2.5E2", {0.0}) == doctest::Approx(0.25));
    CHECK(eval_at("sqrt(abs(-4)) + exp(0) + log(1) + cos(0) + tan(0)", {0.0}) == doctest::Approx(4.0));
}

TEST_CASE("precedence and associativity") {
    CHECK(eval_at("2+3*4", {0.0}) == 14.0);
    CHECK(eval_at("2^3^2", {0.0}) == 512.0);
    CHECK(eval_at("-2^2", {0.0}) == -4.0);
    CHECK(eval_at("(-2)^2", {0.0}) == 4.0);
    CHECK(eval_at("8/4/2", {0.0}) == 1.0);
    CHECK(eval_at("8-4-2", {0.0}) == 2.0);
    CHECK(eval_at("2*-3", {0.0}) == -6.0);
    CHECK(eval_at("2^-1", {0.0}) == 0.5);
    CHECK(eval_at("x1^(1+1)", {3.0}) == 9.0);
}

TEST_CASE("non-finite results propagate") {
    CHECK(std::isinf(eval_at("1/x1", {0.0, 0.0})));
    CHECK(std::isnan(eval_at("log(x1)", {-1.0})));
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(Expr::parse("x3", 2), UnknownIdentifier);
    CHECK_THROWS_AS(Expr::parse("x0", 2), UnknownIdentifier);
    CHECK_THROWS_AS(Expr::parse("y", 2), UnknownIdentifier);
    CHECK_THROWS_AS(Expr::parse("foo(x1)", 2), UnknownIdentifier);
    CHECK_THROWS_AS(Expr::parse("sin()", 2), ArityError);
    CHECK_THROWS_AS(Expr::parse("sin(x1, x2)", 2), ArityError);
    CHECK_THROWS_AS(Expr::parse("sin", 2), ArityError);
    CHECK_THROWS_AS(Expr::parse("x1^0.5", 2), ParseError);
    CHECK_THROWS_AS(Expr::parse("x1^x2", 2), ParseError);
    CHECK_THROWS_AS(Expr::parse("(x1", 2), ParseError);
    CHECK_THROWS_AS(Expr::parse("x1 +", 2), ParseError);
    CHECK_THROWS_AS(Expr::parse("", 2), ParseError);
    CHECK_THROWS_AS(Expr::parse("1 2", 2), ParseError);
    CHECK_THROWS_AS(Expr::parse("1e", 2), ParseError);

    try {
        Expr::parse("x1 + x7", 2);
        FAIL("expected UnknownIdentifier");
    } catch (const UnknownIdentifier& e) {
        CHECK(e.position() == 5);
        CHECK(e.name() == "x7");
    }
}

TEST_CASE("pretty-printed expressions reparse to the same tree") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 300; ++i) {
        const std::string src = random_expr(rng, 4);
        const Expr e = Expr::parse(src, 3);
        const Expr again = Expr::parse(e.to_string(), 3);
        INFO(src);
        CHECK(e.same_structure(again));
        CHECK(again.to_string() == e.to_string());
    }
}

TEST_CASE("evaluation is deterministic") {
    const Expr e = Expr::parse("0.4*(sin(x2)+x1^2)+0.01*x2^2", 2);
    const std::array<double, 2> x{0.3141, -0.777};
    const double a = e.eval(x);
    for (int i = 0; i < 10; ++i) CHECK(e.eval(x) == a);
}

TEST_CASE("dynamics map construction") {
    const DynamicsMap map = DynamicsMap::parse(kExample, 2);
    CHECK(map.state_dim() == 2);
    const auto y = map.apply(std::vector<double>{1.0, 0.0});
    CHECK(y[0] == doctest::Approx(0.9));
    CHECK(y[1] == doctest::Approx(0.4));

    CHECK_THROWS_AS(DynamicsMap::parse({"x1"}, 2), DimensionMismatch);
    CHECK_THROWS_AS(DynamicsMap::parse({"x1", "x3"}, 2), UnknownIdentifier);
}

TEST_CASE("composition with the dynamics map") {
    const DynamicsMap map = DynamicsMap::parse(kExample, 2);
    const std::vector<double> p{1.0, 0.0};

    CHECK(compose_with_map(Expr::parse("x1", 2), map)(p) == doctest::Approx(0.9));
    CHECK(compose_with_map(Expr::parse("x2", 2), map)(p) == doctest::Approx(0.4));
    const auto one = compose_with_map(Expr::parse("1", 2), map);
    CHECK(one(p) == 1.0);
    CHECK(one(std::vector<double>{-0.3, 0.8}) == 1.0);

    CHECK_THROWS_AS(compose_with_map(Expr::parse("x1", 3), map), DimensionMismatch);

    // Composed evaluation equals evaluating at the mapped point.
    const Expr e = Expr::parse("sin(x1)*x2^3 - exp(x2)/(2+x1^2)", 2);
    const auto composed = compose_with_map(e, map);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const std::vector<double> x{u(rng), u(rng)};
        const std::vector<double> tx{map.components()[0].eval(x), map.components()[1].eval(x)};
        CHECK(composed(x) == e.eval(tx));
    }
}
