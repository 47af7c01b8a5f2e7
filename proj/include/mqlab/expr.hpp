#pragma once

#include <cctype>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "mqlab/errors.hpp"
#include "mqlab/history.hpp"
#include "mqlab/strategy.hpp"

namespace mqlab {

class ExprParseError : public ValidationError {
public:
    ExprParseError(const std::string& what, std::size_t offset)
        : ValidationError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Inputs available to a strategy expression.
struct ExprContext {
    const History* history = nullptr;
    const ShareVector* shares = nullptr;  ///< may be empty/null in history-only settings
    std::size_t product = 0;
};

struct EvalOptions {
    bool strict = false;                         ///< escalate guarded cases to errors
    std::vector<std::string>* warnings = nullptr;  ///< collects guard notes when set
};

namespace expr_detail {

inline void warn(const EvalOptions& opt, const std::string& message) {
    if (opt.strict) throw ValidationError(message);
    if (opt.warnings) opt.warnings->push_back(message);
}

inline std::string format_number(double v) {
    char buf[40];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::stod(buf) == v) break;
    }
    return buf;
}

}  // namespace expr_detail

// ---------------------------------------------------------------------------
// Expression tree
// ---------------------------------------------------------------------------

class ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

class ExprNode {
public:
    virtual ~ExprNode() = default;
    virtual double evaluate(const ExprContext& ctx, const EvalOptions& opt) const = 0;
    virtual void print(std::string& out, int parent_level) const = 0;
    virtual bool equals(const ExprNode& other) const = 0;
    virtual bool uses_shares() const = 0;
};

class NumberExpr final : public ExprNode {
public:
    explicit NumberExpr(double v) : value_(v) {}
    double evaluate(const ExprContext&, const EvalOptions&) const override { return value_; }
    void print(std::string& out, int) const override { out += expr_detail::format_number(value_); }
    bool equals(const ExprNode& other) const override {
        auto* o = dynamic_cast<const NumberExpr*>(&other);
        return o && o->value_ == value_;
    }
    bool uses_shares() const override { return false; }
    double value() const { return value_; }

private:
    double value_;
};

enum class VarKind { successes, failures, consumption, depth, last, share, myshare, maxothershare, isleader };

class VarExpr final : public ExprNode {
public:
    VarExpr(VarKind kind, std::size_t index = 0) : kind_(kind), index_(index) {}

    double evaluate(const ExprContext& ctx, const EvalOptions& opt) const override {
        const History& h = *ctx.history;
        switch (kind_) {
            case VarKind::successes: return static_cast<double>(h.count(Event::S));
            case VarKind::failures: return static_cast<double>(h.count(Event::F));
            case VarKind::consumption: return static_cast<double>(consumption(h));
            case VarKind::depth: return static_cast<double>(h.depth());
            case VarKind::last: {
                // index_-th most recent consumption outcome as 1/0; 0 when absent
                std::size_t seen = 0;
                for (std::size_t r = h.depth(); r >= 1; --r) {
                    Event e = h.at_round(r);
                    if (e == Event::N) continue;
                    if (++seen == index_) return e == Event::S ? 1.0 : 0.0;
                }
                return 0.0;
            }
            case VarKind::share: {
                if (!ctx.shares || index_ == 0 || index_ > ctx.shares->size()) {
                    expr_detail::warn(opt, "share(" + std::to_string(index_) +
                                               ") has no such product; using 0");
                    return 0.0;
                }
                return static_cast<double>((*ctx.shares)[index_ - 1]);
            }
            case VarKind::myshare:
                if (!ctx.shares || ctx.product >= ctx.shares->size()) return 0.0;
                return static_cast<double>((*ctx.shares)[ctx.product]);
            case VarKind::maxothershare: {
                if (!ctx.shares) return 0.0;
                long long best = 0;
                bool any = false;
                for (std::size_t k = 0; k < ctx.shares->size(); ++k) {
                    if (k == ctx.product) continue;
                    best = any ? std::max(best, (*ctx.shares)[k]) : (*ctx.shares)[k];
                    any = true;
                }
                return any ? static_cast<double>(best) : 0.0;
            }
            case VarKind::isleader: {
                if (!ctx.shares || ctx.product >= ctx.shares->size()) return 0.0;
                long long own = (*ctx.shares)[ctx.product];
                for (std::size_t k = 0; k < ctx.shares->size(); ++k)
                    if (k != ctx.product && (*ctx.shares)[k] >= own) return 0.0;
                return ctx.shares->size() > 1 ? 1.0 : 0.0;
            }
        }
        return 0.0;
    }

    void print(std::string& out, int) const override {
        switch (kind_) {
            case VarKind::successes: out += "s"; break;
            case VarKind::failures: out += "f"; break;
            case VarKind::consumption: out += "c"; break;
            case VarKind::depth: out += "d"; break;
            case VarKind::last: out += "last" + std::to_string(index_); break;
            case VarKind::share: out += "share(" + std::to_string(index_) + ")"; break;
            case VarKind::myshare: out += "myshare"; break;
            case VarKind::maxothershare: out += "maxothershare"; break;
            case VarKind::isleader: out += "isleader"; break;
        }
    }

    bool equals(const ExprNode& other) const override {
        auto* o = dynamic_cast<const VarExpr*>(&other);
        return o && o->kind_ == kind_ && o->index_ == index_;
    }
    bool uses_shares() const override {
        return kind_ == VarKind::share || kind_ == VarKind::myshare ||
               kind_ == VarKind::maxothershare || kind_ == VarKind::isleader;
    }

private:
    VarKind kind_;
    std::size_t index_;
};

class BinaryExpr final : public ExprNode {
public:
    enum class Op { add, subtract, multiply, divide };

    BinaryExpr(Op op, ExprPtr lhs, ExprPtr rhs)
        : op_(op), lhs_(std::move(lhs)), rhs_(std::move(rhs)) {}

    double evaluate(const ExprContext& ctx, const EvalOptions& opt) const override {
        double a = lhs_->evaluate(ctx, opt);
        double b = rhs_->evaluate(ctx, opt);
        switch (op_) {
            case Op::add: return a + b;
            case Op::subtract: return a - b;
            case Op::multiply: return a * b;
            case Op::divide:
                if (b == 0.0) {
                    expr_detail::warn(opt, "division by zero; using 0");
                    return 0.0;
                }
                return a / b;
        }
        return 0.0;
    }

    void print(std::string& out, int parent_level) const override {
        const int level = op_ == Op::add || op_ == Op::subtract ? 1 : 2;
        const bool parens = level < parent_level;
        if (parens) out += "(";
        lhs_->print(out, level);
        switch (op_) {
            case Op::add: out += " + "; break;
            case Op::subtract: out += " - "; break;
            case Op::multiply: out += " * "; break;
            case Op::divide: out += " / "; break;
        }
        rhs_->print(out, level + 1);  // left-associative: parenthesize equal-level right child
        if (parens) out += ")";
    }

    bool equals(const ExprNode& other) const override {
        auto* o = dynamic_cast<const BinaryExpr*>(&other);
        return o && o->op_ == op_ && lhs_->equals(*o->lhs_) && rhs_->equals(*o->rhs_);
    }
    bool uses_shares() const override { return lhs_->uses_shares() || rhs_->uses_shares(); }

private:
    Op op_;
    ExprPtr lhs_, rhs_;
};

class ConditionExpr final : public ExprNode {
public:
    /// `truthy` covers conditions that are a bare sum, read as "!= 0"
    /// (needed for flags like isleader).
    enum class Cmp { lt, le, gt, ge, eq, truthy };

    ConditionExpr(Cmp cmp, ExprPtr lhs, ExprPtr rhs, ExprPtr then_branch, ExprPtr else_branch)
        : cmp_(cmp), lhs_(std::move(lhs)), rhs_(std::move(rhs)),
          then_(std::move(then_branch)), else_(std::move(else_branch)) {}

    double evaluate(const ExprContext& ctx, const EvalOptions& opt) const override {
        double a = lhs_->evaluate(ctx, opt);
        bool cond = false;
        if (cmp_ == Cmp::truthy) {
            cond = a != 0.0;
        } else {
            double b = rhs_->evaluate(ctx, opt);
            switch (cmp_) {
                case Cmp::lt: cond = a < b; break;
                case Cmp::le: cond = a <= b; break;
                case Cmp::gt: cond = a > b; break;
                case Cmp::ge: cond = a >= b; break;
                default: cond = a == b; break;
            }
        }
        return (cond ? then_ : else_)->evaluate(ctx, opt);
    }

    void print(std::string& out, int parent_level) const override {
        const bool parens = parent_level > 0;
        if (parens) out += "(";
        out += "if ";
        lhs_->print(out, 1);
        switch (cmp_) {
            case Cmp::lt: out += " < "; break;
            case Cmp::le: out += " <= "; break;
            case Cmp::gt: out += " > "; break;
            case Cmp::ge: out += " >= "; break;
            case Cmp::eq: out += " == "; break;
            case Cmp::truthy: break;
        }
        if (cmp_ != Cmp::truthy) rhs_->print(out, 1);
        out += " then ";
        then_->print(out, 0);
        out += " else ";
        else_->print(out, 0);
        if (parens) out += ")";
    }

    bool equals(const ExprNode& other) const override {
        auto* o = dynamic_cast<const ConditionExpr*>(&other);
        if (!o || o->cmp_ != cmp_ || !lhs_->equals(*o->lhs_)) return false;
        if (cmp_ != Cmp::truthy && !rhs_->equals(*o->rhs_)) return false;
        return then_->equals(*o->then_) && else_->equals(*o->else_);
    }
    bool uses_shares() const override {
        return lhs_->uses_shares() || (rhs_ && rhs_->uses_shares()) || then_->uses_shares() ||
               else_->uses_shares();
    }

private:
    Cmp cmp_;
    ExprPtr lhs_, rhs_, then_, else_;
};

/// A parsed strategy expression plus its canonical text form.
struct StrategyExpr {
    ExprPtr root;
    std::string text;  ///< canonical printing of root

    double evaluate(const ExprContext& ctx, const EvalOptions& opt = {}) const {
        return root->evaluate(ctx, opt);
    }
    bool uses_shares() const { return root->uses_shares(); }
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace expr_detail {

enum class TokKind { number, ident, lparen, rparen, plus, minus, star, slash,
                     lt, le, gt, ge, eq, kw_if, kw_then, kw_else, end };

struct Token {
    TokKind kind;
    std::size_t offset;
    double number = 0.0;
    std::string ident;
};

inline std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        char ch = text[pos];
        if (std::isspace(static_cast<unsigned char>(ch))) {
            ++pos;
            continue;
        }
        std::size_t start = pos;
        if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
            std::size_t len = 0;
            double value = 0.0;
            try {
                value = std::stod(std::string(text.substr(pos)), &len);
            } catch (const std::exception&) {
                throw ExprParseError("malformed number", start);
            }
            out.push_back({TokKind::number, start, value, {}});
            pos += len;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(ch))) {
            std::size_t end = pos;
            while (end < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_'))
                ++end;
            std::string word(text.substr(pos, end - pos));
            TokKind kind = word == "if"     ? TokKind::kw_if
                           : word == "then" ? TokKind::kw_then
                           : word == "else" ? TokKind::kw_else
                                            : TokKind::ident;
            out.push_back({kind, start, 0.0, std::move(word)});
            pos = end;
            continue;
        }
        auto two = [&](char second) { return pos + 1 < text.size() && text[pos + 1] == second; };
        auto push = [&](TokKind kind, std::size_t width) {
            out.push_back({kind, start, 0.0, {}});
            pos += width;
        };
        switch (ch) {
            case '(': push(TokKind::lparen, 1); break;
            case ')': push(TokKind::rparen, 1); break;
            case '+': push(TokKind::plus, 1); break;
            case '-': push(TokKind::minus, 1); break;
            case '*': push(TokKind::star, 1); break;
            case '/': push(TokKind::slash, 1); break;
            case '<': two('=') ? push(TokKind::le, 2) : push(TokKind::lt, 1); break;
            case '>': two('=') ? push(TokKind::ge, 2) : push(TokKind::gt, 1); break;
            case '=':
                if (!two('=')) throw ExprParseError("expected '=='", start);
                push(TokKind::eq, 2);
                break;
            default:
                throw ExprParseError(std::string("unexpected character '") + ch + "'", start);
        }
    }
    out.push_back({TokKind::end, text.size(), 0.0, {}});
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

    ExprPtr parse() {
        ExprPtr e = parse_expr();
        expect(TokKind::end, "unexpected trailing input");
        return e;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    Token take() { return tokens_[pos_++]; }
    void expect(TokKind kind, const char* message) {
        if (peek().kind != kind) throw ExprParseError(message, peek().offset);
        ++pos_;
    }

    ExprPtr parse_expr() {
        if (peek().kind == TokKind::kw_if) return parse_cond();
        return parse_sum();
    }

    ExprPtr parse_cond() {
        expect(TokKind::kw_if, "expected 'if'");
        ExprPtr lhs = parse_sum();
        ConditionExpr::Cmp cmp = ConditionExpr::Cmp::truthy;
        ExprPtr rhs;
        switch (peek().kind) {
            case TokKind::lt: cmp = ConditionExpr::Cmp::lt; break;
            case TokKind::le: cmp = ConditionExpr::Cmp::le; break;
            case TokKind::gt: cmp = ConditionExpr::Cmp::gt; break;
            case TokKind::ge: cmp = ConditionExpr::Cmp::ge; break;
            case TokKind::eq: cmp = ConditionExpr::Cmp::eq; break;
            case TokKind::kw_then: break;  // bare flag condition, read as != 0
            default: throw ExprParseError("expected a comparison operator or 'then'", peek().offset);
        }
        if (cmp != ConditionExpr::Cmp::truthy) {
            ++pos_;
            rhs = parse_sum();
        }
        expect(TokKind::kw_then, "expected 'then'");
        ExprPtr then_branch = parse_expr();
        expect(TokKind::kw_else, "expected 'else'");
        ExprPtr else_branch = parse_expr();
        return std::make_shared<ConditionExpr>(cmp, lhs, rhs, then_branch, else_branch);
    }

    ExprPtr parse_sum() {
        ExprPtr lhs = parse_term();
        while (peek().kind == TokKind::plus || peek().kind == TokKind::minus) {
            auto op = take().kind == TokKind::plus ? BinaryExpr::Op::add : BinaryExpr::Op::subtract;
            lhs = std::make_shared<BinaryExpr>(op, lhs, parse_term());
        }
        return lhs;
    }

    ExprPtr parse_term() {
        ExprPtr lhs = parse_atom();
        while (peek().kind == TokKind::star || peek().kind == TokKind::slash) {
            auto op = take().kind == TokKind::star ? BinaryExpr::Op::multiply : BinaryExpr::Op::divide;
            lhs = std::make_shared<BinaryExpr>(op, lhs, parse_atom());
        }
        return lhs;
    }

    ExprPtr parse_atom() {
        const Token& tok = peek();
        switch (tok.kind) {
            case TokKind::number:
                return std::make_shared<NumberExpr>(take().number);
            case TokKind::lparen: {
                ++pos_;
                ExprPtr inner = parse_expr();
                expect(TokKind::rparen, "expected ')'");
                return inner;
            }
            case TokKind::ident:
                return parse_variable(take());
            default:
                throw ExprParseError("expected a number, variable or '('", tok.offset);
        }
    }

    ExprPtr parse_variable(const Token& tok) {
        const std::string& name = tok.ident;
        if (name == "s") return std::make_shared<VarExpr>(VarKind::successes);
        if (name == "f") return std::make_shared<VarExpr>(VarKind::failures);
        if (name == "c") return std::make_shared<VarExpr>(VarKind::consumption);
        if (name == "d") return std::make_shared<VarExpr>(VarKind::depth);
        if (name == "myshare") return std::make_shared<VarExpr>(VarKind::myshare);
        if (name == "maxothershare") return std::make_shared<VarExpr>(VarKind::maxothershare);
        if (name == "isleader") return std::make_shared<VarExpr>(VarKind::isleader);
        if (name.rfind("last", 0) == 0 && name.size() > 4) {
            std::size_t k = 0;
            bool digits = true;
            for (std::size_t p = 4; p < name.size(); ++p) {
                if (!std::isdigit(static_cast<unsigned char>(name[p]))) { digits = false; break; }
                k = k * 10 + static_cast<std::size_t>(name[p] - '0');
            }
            if (digits && k >= 1) return std::make_shared<VarExpr>(VarKind::last, k);
        }
        if (name == "share") {
            expect(TokKind::lparen, "expected '(' after share");
            const Token& idx = peek();
            if (idx.kind != TokKind::number || idx.number < 1.0 ||
                idx.number != static_cast<double>(static_cast<std::size_t>(idx.number)))
                throw ExprParseError("share() needs a positive integer product index", idx.offset);
            ++pos_;
            auto index = static_cast<std::size_t>(idx.number);
            expect(TokKind::rparen, "expected ')'");
            return std::make_shared<VarExpr>(VarKind::share, index);
        }
        throw ExprParseError("unknown variable '" + name + "'", tok.offset);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace expr_detail

/// Parses a strategy expression; unknown identifiers and malformed syntax are
/// rejected here with a position. The returned text is the canonical
/// printing, which re-parses to an identical tree.
inline StrategyExpr parse_strategy_expr(std::string_view text) {
    if (text.empty()) throw ExprParseError("empty expression", 0);
    StrategyExpr expr;
    expr.root = expr_detail::Parser(text).parse();
    expr.root->print(expr.text, 0);
    return expr;
}

/// A strategy backed by an expression. Results are clamped to [0,1]; strict
/// mode raises instead of clamping or guarding.
class ExprStrategy final : public PartialityStrategy {
public:
    explicit ExprStrategy(StrategyExpr expr, bool strict = false)
        : expr_(std::move(expr)), strict_(strict) {}

    static std::shared_ptr<const ExprStrategy> parse(std::string_view text, bool strict = false) {
        return std::make_shared<ExprStrategy>(parse_strategy_expr(text), strict);
    }

    double probability(const History& h, const ShareVector& shares, std::size_t product) const override {
        ExprContext ctx{&h, &shares, product};
        EvalOptions opt;
        opt.strict = strict_;
        double v = expr_.evaluate(ctx, opt);
        if (v < 0.0 || v > 1.0) {
            if (strict_)
                throw ValidationError("expression value " + std::to_string(v) +
                                      " outside [0,1] for history '" + h.str() + "'");
            v = v < 0.0 ? 0.0 : 1.0;
        }
        return v;
    }
    bool history_only() const override { return !expr_.uses_shares(); }
    std::string describe() const override { return "expr(" + expr_.text + ")"; }

    const StrategyExpr& expr() const { return expr_; }

private:
    StrategyExpr expr_;
    bool strict_;
};

}  // namespace mqlab
