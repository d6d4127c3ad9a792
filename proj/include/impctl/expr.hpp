#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace impctl {

/// Path functionals (and the control) a coefficient expression may read.
enum class Var : std::uint8_t { t, x, xmax, xmin, xavg, u };

inline constexpr std::size_t kVarCount = 6;

std::string_view var_name(Var v);
std::optional<Var> var_from_name(std::string_view name);

/// Variable bindings for one evaluation. Unbound variables are tracked
/// so that evaluation can fail loudly instead of reading a default.
class Env {
public:
    Env& set(Var v, double value) {
        values_[index(v)] = value;
        bound_ |= static_cast<std::uint8_t>(1u << index(v));
        return *this;
    }

    bool has(Var v) const { return (bound_ >> index(v)) & 1u; }
    double get(Var v) const { return values_[index(v)]; }

private:
    static std::size_t index(Var v) { return static_cast<std::size_t>(v); }

    std::array<double, kVarCount> values_{};
    std::uint8_t bound_ = 0;
};

class ExprError : public std::runtime_error {
public:
    enum class Kind { Syntax, UnknownIdentifier, Arity, UnboundVariable, NonFinite };

    ExprError(Kind kind, std::size_t offset, const std::string& what)
        : std::runtime_error(what), kind_(kind), offset_(offset) {}

    Kind kind() const { return kind_; }
    /// Byte offset into the source for parse errors; 0 for evaluation errors.
    std::size_t offset() const { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

/// Immutable arithmetic expression over path functionals.
///
/// Grammar:
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := number | ident | '-' factor | ident '(' args ')' | '(' expr ')'
///
/// Functions: min(a,b), max(a,b), abs(a), exp(a), clamp(v,lo,hi).
/// Evaluation visits operands left to right and rejects any non-finite
/// intermediate, so division by zero is an error rather than an infinity.
class CoefficientExpr {
public:
    enum class Op : std::uint8_t {
        Literal, Variable, Add, Sub, Mul, Div, Neg, Min, Max, Abs, Exp, Clamp
    };

    struct Node {
        Op op = Op::Literal;
        double value = 0.0;
        Var var = Var::t;
        std::int32_t a = -1;
        std::int32_t b = -1;
        std::int32_t c = -1;

        bool operator==(const Node&) const = default;
    };

    /// The constant 0.
    CoefficientExpr();

    static CoefficientExpr parse(std::string_view source);
    static CoefficientExpr constant(double value);

    double evaluate(const Env& env) const;

    /// Canonical text; re-parsing it yields an expression that prints identically.
    std::string to_string() const;

    /// Replace every occurrence of `v` with the literal `value`.
    CoefficientExpr bind(Var v, double value) const;

    bool uses(Var v) const;

    const std::vector<Node>& nodes() const { return nodes_; }
    std::int32_t root() const { return root_; }

    bool operator==(const CoefficientExpr&) const = default;

private:
    friend class ExprParser;
    friend class ExprBuilder;

    std::vector<Node> nodes_;
    std::int32_t root_ = 0;
};

inline CoefficientExpr parse_expr(std::string_view source) { return CoefficientExpr::parse(source); }
inline double eval_expr(const CoefficientExpr& expr, const Env& env) { return expr.evaluate(env); }

/// Programmatic construction, used mostly by tests and for building
/// derived coefficients (e.g. a maximum over a control grid).
class ExprBuilder {
public:
    static CoefficientExpr max_of(const std::vector<CoefficientExpr>& terms);
    static CoefficientExpr binary(CoefficientExpr::Op op, const CoefficientExpr& lhs, const CoefficientExpr& rhs);
};

}  // namespace impctl
