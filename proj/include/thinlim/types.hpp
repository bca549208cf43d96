#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace thinlim {

using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Axis-aligned box [lower_i, upper_i].
struct Box {
    Vec lower;
    Vec upper;

    int dim() const { return static_cast<int>(lower.size()); }
    bool contains(const Vec& x, double tol = 0.0) const {
        for (int i = 0; i < dim(); ++i)
            if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
        return true;
    }
    Box inflated(double delta) const {
        return Box{lower.array() - delta, upper.array() + delta};
    }
};

/// Value, gradient and Hessian of a scalar field at one point.
struct Jet {
    double value = 0.0;
    Vec grad;
    Mat hess;
};

/// Concatenate x with a trailing y coordinate.
inline Vec lift(const Vec& x, double y) {
    Vec z(x.size() + 1);
    z.head(x.size()) = x;
    z[x.size()] = y;
    return z;
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, std::string expected)
        : Error("syntax error at offset " + std::to_string(offset) + ": expected " + expected),
          offset_(offset), expected_(std::move(expected)) {}
    std::size_t offset() const { return offset_; }
    const std::string& expected() const { return expected_; }

private:
    std::size_t offset_;
    std::string expected_;
};

class UnknownIdentifier : public Error {
public:
    explicit UnknownIdentifier(std::string name)
        : Error("unknown identifier '" + name + "'"), name_(std::move(name)) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class DegenerateThickness : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    NoConvergence(int maxIter, const std::string& what)
        : Error(what + ": no convergence after " + std::to_string(maxIter) + " iterations"),
          maxIter_(maxIter) {}
    int maxIter() const { return maxIter_; }

private:
    int maxIter_;
};

class SingularJacobian : public Error {
public:
    using Error::Error;
};

class PreconditionViolated : public Error {
public:
    using Error::Error;
};

/// Parameter search gave up; `inequality` names the condition that kept failing.
class SearchExhausted : public Error {
public:
    SearchExhausted(std::string inequality, const std::string& detail)
        : Error("search exhausted on " + inequality + ": " + detail),
          inequality_(std::move(inequality)) {}
    const std::string& inequality() const { return inequality_; }

private:
    std::string inequality_;
};

class NonMonotoneStencil : public Error {
public:
    NonMonotoneStencil(int node, int lambda, int mu, const std::string& detail)
        : Error("non-monotone stencil at node " + std::to_string(node) + " control (" +
                std::to_string(lambda) + "," + std::to_string(mu) + "): " + detail),
          node_(node), lambda_(lambda), mu_(mu) {}
    int node() const { return node_; }
    int lambda() const { return lambda_; }
    int mu() const { return mu_; }

private:
    int node_, lambda_, mu_;
};

class MaxIterExceeded : public Error {
public:
    MaxIterExceeded(int iterations, double residual)
        : Error("policy iteration stopped after " + std::to_string(iterations) +
                " iterations with residual " + std::to_string(residual)),
          residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace thinlim
