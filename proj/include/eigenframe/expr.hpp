#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace eigenframe {

// Base of every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace expr {

enum class Op : std::uint8_t {
    Const, Var,
    Neg, Sqrt, Exp, Ln, Sin, Cos, Tan, Arctan,
    Add, Sub, Mul, Div, Pow
};

const char* op_name(Op op);
bool is_unary(Op op);
bool is_binary(Op op);

class Expr;

struct Node {
    Op op;
    double value = 0.0;
    std::string name;
    std::vector<Expr> args;
};

// Immutable expression tree.  Copies share structure.
class Expr {
public:
    Expr();
    Expr(double c);

    static Expr constant(double c);
    static Expr variable(std::string name);
    static Expr make(Op op, std::vector<Expr> args);

    Op op() const { return node_->op; }
    double value() const { return node_->value; }
    const std::string& name() const { return node_->name; }
    const std::vector<Expr>& args() const { return node_->args; }
    const Expr& arg(std::size_t i) const { return node_->args[i]; }
    const Node* get() const { return node_.get(); }

    bool is_const() const { return op() == Op::Const; }
    bool is_const(double c) const { return op() == Op::Const && value() == c; }
    bool is_zero() const { return is_const(0.0); }

private:
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

bool equal(const Expr& a, const Expr& b);
std::size_t node_count(const Expr& e);

// Locally simplifying constructors.
Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
Expr mul(const Expr& a, const Expr& b);
Expr div(const Expr& a, const Expr& b);
Expr pow(const Expr& a, const Expr& b);
Expr neg(const Expr& a);
Expr apply(Op op, const Expr& a);
Expr sqrt(const Expr& a);
Expr exp(const Expr& a);
Expr ln(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr tan(const Expr& a);
Expr arctan(const Expr& a);

inline Expr operator+(const Expr& a, const Expr& b) { return add(a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return sub(a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return mul(a, b); }
inline Expr operator/(const Expr& a, const Expr& b) { return div(a, b); }
inline Expr operator-(const Expr& a) { return neg(a); }

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t offset)
        : Error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class EvalError : public Error {
public:
    EvalError(const std::string& msg, std::string subtree)
        : Error(msg + " in '" + subtree + "'"), subtree_(std::move(subtree)) {}
    const std::string& subtree() const { return subtree_; }

private:
    std::string subtree_;
};

// Identifiers outside `vars` are rejected.  The tree is returned as written.
Expr parse(const std::string& text, const std::vector<std::string>& vars);

std::string to_string(const Expr& e);

using Point = std::vector<std::pair<std::string, double>>;

double evaluate(const Expr& e, const Point& at);

Expr simplify(const Expr& e);

Expr differentiate(const Expr& e, const std::string& var);

Expr substitute(const Expr& e, const std::map<std::string, Expr>& repl);

// Names of the variables occurring in e, sorted.
std::vector<std::string> free_variables(const Expr& e);

// Differentiation with respect to one variable, memoised across calls so
// shared subtrees are handled once.
class Differentiator {
public:
    explicit Differentiator(std::string var) : var_(std::move(var)) {}
    Expr operator()(const Expr& e);
    const std::string& variable() const { return var_; }

private:
    std::string var_;
    std::unordered_map<const Node*, Expr> memo_;
    std::vector<Expr> keep_;
};

// Compiles a batch of expressions into a flat program over positional
// variables.  Common subtrees are evaluated once.
class Evaluator {
public:
    Evaluator() = default;
    Evaluator(std::span<const Expr> exprs, const std::vector<std::string>& vars);

    std::size_t size() const { return outputs_.size(); }
    std::size_t arity() const { return nvars_; }

    void eval(std::span<const double> x, std::span<double> out) const;
    std::vector<double> operator()(std::span<const double> x) const;

private:
    struct Instr {
        Op op;
        std::uint32_t a = 0, b = 0;
        double value = 0.0;
        const Node* src = nullptr;
    };
    std::vector<Instr> prog_;
    std::vector<std::uint32_t> outputs_;
    std::vector<Expr> keep_;
    std::size_t nvars_ = 0;
};

}  // namespace expr
}  // namespace eigenframe
