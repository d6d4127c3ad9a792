#include "impctl/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cctype>

namespace impctl {

namespace {

constexpr std::array<std::string_view, kVarCount> kVarNames{"t", "x", "xmax", "xmin", "xavg", "u"};

struct FunctionInfo {
    std::string_view name;
    CoefficientExpr::Op op;
    int arity;
};

constexpr std::array<FunctionInfo, 5> kFunctions{{
    {"min", CoefficientExpr::Op::Min, 2},
    {"max", CoefficientExpr::Op::Max, 2},
    {"abs", CoefficientExpr::Op::Abs, 1},
    {"exp", CoefficientExpr::Op::Exp, 1},
    {"clamp", CoefficientExpr::Op::Clamp, 3},
}};

const FunctionInfo* find_function(std::string_view name) {
    for (const auto& f : kFunctions) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

std::string_view function_name(CoefficientExpr::Op op) {
    for (const auto& f : kFunctions) {
        if (f.op == op) return f.name;
    }
    return "?";
}

int precedence(const CoefficientExpr::Node& n) {
    using Op = CoefficientExpr::Op;
    switch (n.op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Literal: return std::signbit(n.value) ? 3 : 4;
        default: return 4;
    }
}

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string_view var_name(Var v) { return kVarNames[static_cast<std::size_t>(v)]; }

std::optional<Var> var_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kVarCount; ++i) {
        if (kVarNames[i] == name) return static_cast<Var>(i);
    }
    return std::nullopt;
}

// Recursive-descent parser. Nodes are appended children-first so that
// every operand index is smaller than its parent's.
class ExprParser {
public:
    explicit ExprParser(std::string_view src) : src_(src) {}

    CoefficientExpr run() {
        skip_ws();
        std::int32_t root = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail_syntax("unexpected character");
        CoefficientExpr out;
        out.nodes_ = std::move(nodes_);
        out.root_ = root;
        return out;
    }

private:
    using Op = CoefficientExpr::Op;
    using Node = CoefficientExpr::Node;

    [[noreturn]] void fail_syntax(const std::string& msg) const {
        throw ExprError(ExprError::Kind::Syntax, pos_,
                        "syntax error at offset " + std::to_string(pos_) + ": " + msg);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool peek(char c) {
        skip_ws();
        return pos_ < src_.size() && src_[pos_] == c;
    }

    std::int32_t push(Node n) {
        nodes_.push_back(n);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    std::int32_t parse_expr() {
        std::int32_t lhs = parse_term();
        while (true) {
            if (peek('+')) {
                ++pos_;
                std::int32_t rhs = parse_term();
                lhs = push({Op::Add, 0.0, Var::t, lhs, rhs, -1});
            } else if (peek('-')) {
                ++pos_;
                std::int32_t rhs = parse_term();
                lhs = push({Op::Sub, 0.0, Var::t, lhs, rhs, -1});
            } else {
                return lhs;
            }
        }
    }

    std::int32_t parse_term() {
        std::int32_t lhs = parse_factor();
        while (true) {
            if (peek('*')) {
                ++pos_;
                std::int32_t rhs = parse_factor();
                lhs = push({Op::Mul, 0.0, Var::t, lhs, rhs, -1});
            } else if (peek('/')) {
                ++pos_;
                std::int32_t rhs = parse_factor();
                lhs = push({Op::Div, 0.0, Var::t, lhs, rhs, -1});
            } else {
                return lhs;
            }
        }
    }

    std::int32_t parse_factor() {
        skip_ws();
        if (pos_ >= src_.size()) fail_syntax("unexpected end of input");
        char c = src_[pos_];
        if (c == '-') {
            ++pos_;
            std::int32_t operand = parse_factor();
            return push({Op::Neg, 0.0, Var::t, operand, -1, -1});
        }
        if (c == '(') {
            ++pos_;
            std::int32_t inner = parse_expr();
            if (!peek(')')) fail_syntax("expected ')'");
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        fail_syntax(std::string("unexpected character '") + c + "'");
    }

    std::int32_t parse_number() {
        double value = 0.0;
        const char* first = src_.data() + pos_;
        const char* last = src_.data() + src_.size();
        auto res = std::from_chars(first, last, value);
        if (res.ec != std::errc{}) fail_syntax("malformed number");
        pos_ += static_cast<std::size_t>(res.ptr - first);
        return push({Op::Literal, value, Var::t, -1, -1, -1});
    }

    std::int32_t parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        std::string_view name = src_.substr(start, pos_ - start);

        if (peek('(')) {
            const FunctionInfo* fn = find_function(name);
            if (!fn) {
                throw ExprError(ExprError::Kind::UnknownIdentifier, start,
                                "unknown function '" + std::string(name) + "' at offset " +
                                    std::to_string(start));
            }
            ++pos_;
            std::vector<std::int32_t> args;
            if (!peek(')')) {
                args.push_back(parse_expr());
                while (peek(',')) {
                    ++pos_;
                    args.push_back(parse_expr());
                }
            }
            if (!peek(')')) fail_syntax("expected ')' or ','");
            ++pos_;
            if (static_cast<int>(args.size()) != fn->arity) {
                throw ExprError(ExprError::Kind::Arity, start,
                                std::string(fn->name) + " expects " + std::to_string(fn->arity) +
                                    " argument(s), got " + std::to_string(args.size()));
            }
            Node n{fn->op, 0.0, Var::t, args[0], -1, -1};
            if (args.size() > 1) n.b = args[1];
            if (args.size() > 2) n.c = args[2];
            return push(n);
        }

        auto var = var_from_name(name);
        if (!var) {
            throw ExprError(ExprError::Kind::UnknownIdentifier, start,
                            "unknown identifier '" + std::string(name) + "' at offset " +
                                std::to_string(start));
        }
        return push({Op::Variable, 0.0, *var, -1, -1, -1});
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::vector<Node> nodes_;
};

CoefficientExpr::CoefficientExpr() : nodes_{Node{}}, root_(0) {}

CoefficientExpr CoefficientExpr::parse(std::string_view source) { return ExprParser(source).run(); }

CoefficientExpr CoefficientExpr::constant(double value) {
    CoefficientExpr e;
    e.nodes_[0].value = value;
    return e;
}

double CoefficientExpr::evaluate(const Env& env) const {
    constexpr std::size_t kInline = 64;
    std::array<double, kInline> inline_buf{};
    std::vector<double> heap_buf;
    double* vals = inline_buf.data();
    if (nodes_.size() > kInline) {
        heap_buf.resize(nodes_.size());
        vals = heap_buf.data();
    }

    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        double r = 0.0;
        switch (n.op) {
            case Op::Literal: r = n.value; break;
            case Op::Variable:
                if (!env.has(n.var)) {
                    throw ExprError(ExprError::Kind::UnboundVariable, 0,
                                    "unbound variable '" + std::string(var_name(n.var)) + "'");
                }
                r = env.get(n.var);
                break;
            case Op::Add: r = vals[n.a] + vals[n.b]; break;
            case Op::Sub: r = vals[n.a] - vals[n.b]; break;
            case Op::Mul: r = vals[n.a] * vals[n.b]; break;
            case Op::Div: r = vals[n.a] / vals[n.b]; break;
            case Op::Neg: r = -vals[n.a]; break;
            case Op::Min: r = std::min(vals[n.a], vals[n.b]); break;
            case Op::Max: r = std::max(vals[n.a], vals[n.b]); break;
            case Op::Abs: r = std::abs(vals[n.a]); break;
            case Op::Exp: r = std::exp(vals[n.a]); break;
            case Op::Clamp: r = std::min(std::max(vals[n.a], vals[n.b]), vals[n.c]); break;
        }
        if (!std::isfinite(r)) {
            throw ExprError(ExprError::Kind::NonFinite, 0, "non-finite result in '" + to_string() + "'");
        }
        vals[i] = r;
    }
    return vals[root_];
}

std::string CoefficientExpr::to_string() const {
    auto print = [this](auto&& self, std::int32_t idx, int min_prec) -> std::string {
        const Node& n = nodes_[idx];
        std::string s;
        switch (n.op) {
            case Op::Literal: s = format_number(n.value); break;
            case Op::Variable: s = std::string(var_name(n.var)); break;
            case Op::Add: s = self(self, n.a, 1) + " + " + self(self, n.b, 2); break;
            case Op::Sub: s = self(self, n.a, 1) + " - " + self(self, n.b, 2); break;
            case Op::Mul: s = self(self, n.a, 2) + " * " + self(self, n.b, 3); break;
            case Op::Div: s = self(self, n.a, 2) + " / " + self(self, n.b, 3); break;
            case Op::Neg: s = "-" + self(self, n.a, 3); break;
            default: {
                s = std::string(function_name(n.op)) + "(" + self(self, n.a, 0);
                if (n.b >= 0) s += ", " + self(self, n.b, 0);
                if (n.c >= 0) s += ", " + self(self, n.c, 0);
                s += ")";
            }
        }
        if (precedence(n) < min_prec) return "(" + s + ")";
        return s;
    };
    return print(print, root_, 0);
}

CoefficientExpr CoefficientExpr::bind(Var v, double value) const {
    CoefficientExpr out = *this;
    for (Node& n : out.nodes_) {
        if (n.op == Op::Variable && n.var == v) {
            n = Node{Op::Literal, value, Var::t, -1, -1, -1};
        }
    }
    return out;
}

bool CoefficientExpr::uses(Var v) const {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [v](const Node& n) { return n.op == Op::Variable && n.var == v; });
}

CoefficientExpr ExprBuilder::binary(CoefficientExpr::Op op, const CoefficientExpr& lhs,
                                    const CoefficientExpr& rhs) {
    CoefficientExpr out;
    out.nodes_ = lhs.nodes_;
    const auto offset = static_cast<std::int32_t>(out.nodes_.size());
    for (CoefficientExpr::Node n : rhs.nodes_) {
        if (n.a >= 0) n.a += offset;
        if (n.b >= 0) n.b += offset;
        if (n.c >= 0) n.c += offset;
        out.nodes_.push_back(n);
    }
    out.nodes_.push_back({op, 0.0, Var::t, lhs.root_, rhs.root_ + offset, -1});
    out.root_ = static_cast<std::int32_t>(out.nodes_.size() - 1);
    return out;
}

CoefficientExpr ExprBuilder::max_of(const std::vector<CoefficientExpr>& terms) {
    if (terms.empty()) throw std::invalid_argument("max_of: empty term list");
    CoefficientExpr acc = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) {
        acc = binary(CoefficientExpr::Op::Max, acc, terms[i]);
    }
    return acc;
}

}  // namespace impctl
