#pragma once

#include "thinlim/types.hpp"

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace thinlim {

namespace detail {
struct Node;
}

/// Parsed closed-form expression over x1..xN and y.
///
/// Evaluation points have N+1 entries: xk reads point[k-1] and y reads the
/// last entry. Expressions are immutable and safe to share between threads.
class Expr {
public:
    Expr();

    /// Parse `text`. When `dim` >= 0, variables beyond x<dim> are rejected.
    static Expr parse(const std::string& text, int dim = -1);
    static Expr constant(double value);

    double eval(const Vec& point) const;

    /// Fully parenthesized text that parses back to the same tree.
    std::string print() const;

    /// Highest k such that xk occurs (0 when no x variable occurs).
    int maxVariable() const;
    bool usesY() const;
    bool isConstant() const;
    /// True when the expression is a polynomial of degree at most one.
    bool isAffine() const;

    bool operator==(const Expr& other) const;
    bool operator!=(const Expr& other) const { return !(*this == other); }

private:
    explicit Expr(std::shared_ptr<const detail::Node> root) : root_(std::move(root)) {}
    std::shared_ptr<const detail::Node> root_;
};

/// Central-difference derivative of `e` along point index `var`.
/// order 1 uses (f(p+h) - f(p-h)) / 2h; order 2 the three-point second difference.
double derivative(const Expr& e, int var, int order, const Vec& point, double step = -1.0);

/// Scalar field on R^{N+1} backed by an expression or a callable, with optional
/// analytic derivatives. Variable indices are 0-based point indices (x1 is 0,
/// y is N). Unregistered derivatives fall back to central differences.
class ScalarFunction {
public:
    using Callable = std::function<double(const Vec&)>;

    static constexpr double kFirstStep = 1e-5;
    static constexpr double kSecondStep = 1e-4;

    ScalarFunction();
    ScalarFunction(double value);  // NOLINT: constants convert implicitly
    ScalarFunction(Expr e);        // NOLINT
    static ScalarFunction parse(const std::string& text, int dim = -1);
    static ScalarFunction fromCallable(Callable f, std::string label = "<callable>",
                                       bool affine = false);

    ScalarFunction withFirst(int var, ScalarFunction d) const;
    ScalarFunction withSecond(int i, int j, ScalarFunction d) const;

    double operator()(const Vec& point) const;

    double derivative(int var, const Vec& point, double step = kFirstStep) const;
    double derivative2(int i, int j, const Vec& point, double step = kSecondStep) const;

    /// Partial derivatives along the first `count` point indices.
    Vec gradient(const Vec& point, int count) const;
    Mat hessian(const Vec& point, int count) const;

    bool hasFirst(int var) const;
    bool hasSecond(int i, int j) const;
    bool isConstant() const;
    bool isAffine() const;
    const Expr* expr() const;
    std::string describe() const;

private:
    struct Impl;
    explicit ScalarFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

using VectorFunction = std::vector<ScalarFunction>;

/// Evaluate every component at `point`.
Vec evalAll(const VectorFunction& fs, const Vec& point);
/// Jacobian J_ij = d_j f_i over the first `count` point indices.
Mat jacobian(const VectorFunction& fs, const Vec& point, int count);

}  // namespace thinlim
