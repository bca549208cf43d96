#include "thinlim/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace thinlim {

namespace detail {

enum class Kind { Number, VarX, VarY, Neg, Add, Sub, Mul, Div, Call };

enum class Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Abs, Min, Max, Pow };

struct Node {
    Kind kind;
    double number = 0.0;
    int index = 0;  // 1-based for VarX
    Fn fn = Fn::Sin;
    std::vector<std::shared_ptr<const Node>> args;
};

using NodePtr = std::shared_ptr<const Node>;

namespace {

struct FnInfo {
    const char* name;
    Fn fn;
    int arity;
};

constexpr FnInfo kFunctions[] = {
    {"sin", Fn::Sin, 1},  {"cos", Fn::Cos, 1},   {"tan", Fn::Tan, 1}, {"exp", Fn::Exp, 1},
    {"log", Fn::Log, 1},  {"sqrt", Fn::Sqrt, 1}, {"abs", Fn::Abs, 1}, {"min", Fn::Min, 2},
    {"max", Fn::Max, 2},  {"pow", Fn::Pow, 2},
};

const FnInfo& info(Fn fn) {
    for (const auto& f : kFunctions)
        if (f.fn == fn) return f;
    return kFunctions[0];
}

NodePtr makeNumber(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Number;
    n->number = v;
    return n;
}

NodePtr makeNode(Kind k, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->args = std::move(args);
    return n;
}

NodePtr makeCall(Fn fn, std::vector<NodePtr> args) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Call;
    n->fn = fn;
    n->args = std::move(args);
    return n;
}

class Parser {
public:
    Parser(const std::string& text, int dim) : s_(text), dim_(dim) {}

    NodePtr run() {
        skip();
        if (pos_ >= s_.size()) throw SyntaxError(pos_, "expression");
        NodePtr e = expression();
        skip();
        if (pos_ < s_.size()) throw SyntaxError(pos_, "operator or end of input");
        return e;
    }

private:
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) throw SyntaxError(pos_, std::string("'") + c + "'");
    }

    NodePtr expression() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+'))
                lhs = makeNode(Kind::Add, {lhs, term()});
            else if (accept('-'))
                lhs = makeNode(Kind::Sub, {lhs, term()});
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*'))
                lhs = makeNode(Kind::Mul, {lhs, unary()});
            else if (accept('/'))
                lhs = makeNode(Kind::Div, {lhs, unary()});
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (accept('-')) return makeNode(Kind::Neg, {unary()});
        if (accept('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return makeCall(Fn::Pow, {base, unary()});
        return base;
    }

    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) throw SyntaxError(pos_, "operand");
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        if (accept('(')) {
            NodePtr e = expression();
            expect(')');
            return e;
        }
        throw SyntaxError(pos_, "operand");
    }

    NodePtr number() {
        const std::size_t start = pos_;
        auto digits = [&] {
            std::size_t k = 0;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                ++pos_;
                ++k;
            }
            return k;
        };
        std::size_t mant = digits();
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            mant += digits();
        }
        if (mant == 0) throw SyntaxError(start, "number");
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            if (digits() == 0) pos_ = save;
        }
        return makeNumber(std::strtod(s_.substr(start, pos_ - start).c_str(), nullptr));
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        const std::string name = s_.substr(start, pos_ - start);
        skip();
        if (pos_ < s_.size() && s_[pos_] == '(') {
            for (const auto& f : kFunctions) {
                if (name != f.name) continue;
                ++pos_;
                std::vector<NodePtr> args;
                args.push_back(expression());
                for (int k = 1; k < f.arity; ++k) {
                    expect(',');
                    args.push_back(expression());
                }
                expect(')');
                return makeCall(f.fn, std::move(args));
            }
            throw UnknownIdentifier(name);
        }
        if (name == "y") {
            auto n = std::make_shared<Node>();
            n->kind = Kind::VarY;
            return n;
        }
        if (name == "pi") return makeNumber(M_PI);
        if (name.size() > 1 && name[0] == 'x' &&
            std::all_of(name.begin() + 1, name.end(),
                        [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }) &&
            name[1] != '0') {
            const int k = std::atoi(name.c_str() + 1);
            if (dim_ >= 0 && k > dim_) throw UnknownIdentifier(name);
            auto n = std::make_shared<Node>();
            n->kind = Kind::VarX;
            n->index = k;
            return n;
        }
        throw UnknownIdentifier(name);
    }

    const std::string& s_;
    int dim_;
    std::size_t pos_ = 0;
};

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw DomainError(std::string("non-finite result in ") + what);
    return v;
}

double evalNode(const Node& n, const Vec& p) {
    switch (n.kind) {
        case Kind::Number:
            return n.number;
        case Kind::VarX:
            if (n.index > p.size() - 1)
                throw DomainError("point has no coordinate x" + std::to_string(n.index));
            return p[n.index - 1];
        case Kind::VarY:
            if (p.size() == 0) throw DomainError("point has no y coordinate");
            return p[p.size() - 1];
        case Kind::Neg:
            return -evalNode(*n.args[0], p);
        case Kind::Add:
            return checked(evalNode(*n.args[0], p) + evalNode(*n.args[1], p), "+");
        case Kind::Sub:
            return checked(evalNode(*n.args[0], p) - evalNode(*n.args[1], p), "-");
        case Kind::Mul:
            return checked(evalNode(*n.args[0], p) * evalNode(*n.args[1], p), "*");
        case Kind::Div: {
            const double den = evalNode(*n.args[1], p);
            if (den == 0.0) throw DomainError("division by zero");
            return checked(evalNode(*n.args[0], p) / den, "/");
        }
        case Kind::Call:
            break;
    }
    const double a = evalNode(*n.args[0], p);
    switch (n.fn) {
        case Fn::Sin: return std::sin(a);
        case Fn::Cos: return std::cos(a);
        case Fn::Tan: return checked(std::tan(a), "tan");
        case Fn::Exp: return checked(std::exp(a), "exp");
        case Fn::Log:
            if (a <= 0.0) throw DomainError("log of non-positive value");
            return std::log(a);
        case Fn::Sqrt:
            if (a < 0.0) throw DomainError("sqrt of negative value");
            return std::sqrt(a);
        case Fn::Abs: return std::abs(a);
        case Fn::Min: return std::min(a, evalNode(*n.args[1], p));
        case Fn::Max: return std::max(a, evalNode(*n.args[1], p));
        case Fn::Pow: return checked(std::pow(a, evalNode(*n.args[1], p)), "pow");
    }
    return 0.0;
}

void printNode(const Node& n, std::string& out) {
    switch (n.kind) {
        case Kind::Number: {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", n.number);
            if (n.number < 0) {
                out += "(";
                out += buf;
                out += ")";
            } else {
                out += buf;
            }
            return;
        }
        case Kind::VarX:
            out += "x" + std::to_string(n.index);
            return;
        case Kind::VarY:
            out += "y";
            return;
        case Kind::Neg:
            out += "(-";
            printNode(*n.args[0], out);
            out += ")";
            return;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul:
        case Kind::Div: {
            const char op = n.kind == Kind::Add ? '+' : n.kind == Kind::Sub ? '-' : n.kind == Kind::Mul ? '*' : '/';
            out += "(";
            printNode(*n.args[0], out);
            out += ' ';
            out += op;
            out += ' ';
            printNode(*n.args[1], out);
            out += ")";
            return;
        }
        case Kind::Call:
            out += info(n.fn).name;
            out += "(";
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) out += ", ";
                printNode(*n.args[i], out);
            }
            out += ")";
            return;
    }
}

bool sameNode(const Node& a, const Node& b) {
    if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
    if (a.kind == Kind::Number && a.number != b.number) return false;
    if (a.kind == Kind::VarX && a.index != b.index) return false;
    if (a.kind == Kind::Call && a.fn != b.fn) return false;
    for (std::size_t i = 0; i < a.args.size(); ++i)
        if (!sameNode(*a.args[i], *b.args[i])) return false;
    return true;
}

constexpr int kNonPolynomial = 1 << 20;

int degree(const Node& n) {
    switch (n.kind) {
        case Kind::Number: return 0;
        case Kind::VarX:
        case Kind::VarY: return 1;
        case Kind::Neg: return degree(*n.args[0]);
        case Kind::Add:
        case Kind::Sub: return std::max(degree(*n.args[0]), degree(*n.args[1]));
        case Kind::Mul: return std::min(kNonPolynomial, degree(*n.args[0]) + degree(*n.args[1]));
        case Kind::Div: return degree(*n.args[1]) == 0 ? degree(*n.args[0]) : kNonPolynomial;
        case Kind::Call:
            for (const auto& a : n.args)
                if (degree(*a) != 0) return kNonPolynomial;
            return 0;
    }
    return kNonPolynomial;
}

void collect(const Node& n, int& maxX, bool& y) {
    if (n.kind == Kind::VarX) maxX = std::max(maxX, n.index);
    if (n.kind == Kind::VarY) y = true;
    for (const auto& a : n.args) collect(*a, maxX, y);
}

}  // namespace
}  // namespace detail

Expr::Expr() : root_(detail::makeNumber(0.0)) {}

Expr Expr::parse(const std::string& text, int dim) {
    detail::Parser parser(text, dim);
    return Expr(parser.run());
}

Expr Expr::constant(double value) { return Expr(detail::makeNumber(value)); }

double Expr::eval(const Vec& point) const { return detail::evalNode(*root_, point); }

std::string Expr::print() const {
    std::string out;
    detail::printNode(*root_, out);
    return out;
}

int Expr::maxVariable() const {
    int m = 0;
    bool y = false;
    detail::collect(*root_, m, y);
    return m;
}

bool Expr::usesY() const {
    int m = 0;
    bool y = false;
    detail::collect(*root_, m, y);
    return y;
}

bool Expr::isConstant() const { return detail::degree(*root_) == 0; }
bool Expr::isAffine() const { return detail::degree(*root_) <= 1; }

bool Expr::operator==(const Expr& other) const { return detail::sameNode(*root_, *other.root_); }

double derivative(const Expr& e, int var, int order, const Vec& point, double step) {
    if (order != 1 && order != 2) throw Error("derivative order must be 1 or 2");
    const double h = step > 0 ? step : (order == 1 ? 1e-5 : 1e-4);
    Vec p = point;
    const double x0 = point[var];
    p[var] = x0 + h;
    const double fp = e.eval(p);
    p[var] = x0 - h;
    const double fm = e.eval(p);
    if (order == 1) return (fp - fm) / (2 * h);
    return (fp - 2 * e.eval(point) + fm) / (h * h);
}

struct ScalarFunction::Impl {
    bool hasExpr = false;
    Expr expr;
    Callable fn;
    bool affine = false;
    std::string label;
    std::map<int, ScalarFunction> first;
    std::map<std::pair<int, int>, ScalarFunction> second;
};

ScalarFunction::ScalarFunction() : ScalarFunction(Expr::constant(0.0)) {}

ScalarFunction::ScalarFunction(double value) : ScalarFunction(Expr::constant(value)) {}

ScalarFunction::ScalarFunction(Expr e) {
    auto impl = std::make_shared<Impl>();
    impl->hasExpr = true;
    impl->expr = std::move(e);
    impl->affine = impl->expr.isAffine();
    impl->label = impl->expr.print();
    impl_ = std::move(impl);
}

ScalarFunction ScalarFunction::parse(const std::string& text, int dim) {
    return ScalarFunction(Expr::parse(text, dim));
}

ScalarFunction ScalarFunction::fromCallable(Callable f, std::string label, bool affine) {
    auto impl = std::make_shared<Impl>();
    impl->fn = std::move(f);
    impl->affine = affine;
    impl->label = std::move(label);
    return ScalarFunction(std::shared_ptr<const Impl>(std::move(impl)));
}

ScalarFunction ScalarFunction::withFirst(int var, ScalarFunction d) const {
    auto impl = std::make_shared<Impl>(*impl_);
    impl->first[var] = std::move(d);
    return ScalarFunction(std::shared_ptr<const Impl>(std::move(impl)));
}

ScalarFunction ScalarFunction::withSecond(int i, int j, ScalarFunction d) const {
    auto impl = std::make_shared<Impl>(*impl_);
    impl->second[{std::min(i, j), std::max(i, j)}] = std::move(d);
    return ScalarFunction(std::shared_ptr<const Impl>(std::move(impl)));
}

double ScalarFunction::operator()(const Vec& point) const {
    if (impl_->hasExpr) return impl_->expr.eval(point);
    return impl_->fn(point);
}

double ScalarFunction::derivative(int var, const Vec& point, double step) const {
    auto it = impl_->first.find(var);
    if (it != impl_->first.end()) return it->second(point);
    if (isConstant()) return 0.0;
    Vec p = point;
    p[var] = point[var] + step;
    const double fp = (*this)(p);
    p[var] = point[var] - step;
    const double fm = (*this)(p);
    return (fp - fm) / (2 * step);
}

double ScalarFunction::derivative2(int i, int j, const Vec& point, double step) const {
    auto it = impl_->second.find({std::min(i, j), std::max(i, j)});
    if (it != impl_->second.end()) return it->second(point);
    if (isConstant()) return 0.0;
    // Differentiate a registered first derivative once more when available.
    auto fi = impl_->first.find(i);
    if (fi != impl_->first.end()) return fi->second.derivative(j, point, ScalarFunction::kFirstStep);
    auto fj = impl_->first.find(j);
    if (fj != impl_->first.end()) return fj->second.derivative(i, point, ScalarFunction::kFirstStep);
    Vec p = point;
    if (i == j) {
        p[i] = point[i] + step;
        const double fp = (*this)(p);
        p[i] = point[i] - step;
        const double fm = (*this)(p);
        return (fp - 2 * (*this)(point) + fm) / (step * step);
    }
    auto at = [&](double si, double sj) {
        p = point;
        p[i] += si * step;
        p[j] += sj * step;
        return (*this)(p);
    };
    return (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * step * step);
}

Vec ScalarFunction::gradient(const Vec& point, int count) const {
    Vec g(count);
    for (int i = 0; i < count; ++i) g[i] = derivative(i, point);
    return g;
}

Mat ScalarFunction::hessian(const Vec& point, int count) const {
    Mat h(count, count);
    for (int i = 0; i < count; ++i)
        for (int j = i; j < count; ++j) h(i, j) = h(j, i) = derivative2(i, j, point);
    return h;
}

bool ScalarFunction::hasFirst(int var) const { return impl_->first.count(var) > 0; }

bool ScalarFunction::hasSecond(int i, int j) const {
    return impl_->second.count({std::min(i, j), std::max(i, j)}) > 0;
}

bool ScalarFunction::isConstant() const { return impl_->hasExpr && impl_->expr.isConstant(); }

bool ScalarFunction::isAffine() const { return impl_->affine; }

const Expr* ScalarFunction::expr() const { return impl_->hasExpr ? &impl_->expr : nullptr; }

std::string ScalarFunction::describe() const { return impl_->label; }

Vec evalAll(const VectorFunction& fs, const Vec& point) {
    Vec v(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i) v[static_cast<int>(i)] = fs[i](point);
    return v;
}

Mat jacobian(const VectorFunction& fs, const Vec& point, int count) {
    Mat j(fs.size(), count);
    for (std::size_t i = 0; i < fs.size(); ++i) j.row(static_cast<int>(i)) = fs[i].gradient(point, count).transpose();
    return j;
}

}  // namespace thinlim
