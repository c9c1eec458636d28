#include "cshield/model_format.hpp"

#include "cshield/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

namespace cshield {

namespace {

// ---------------------------------------------------------------- lexing

enum class Tok { ident, integer, real, string, punct, end };

struct Token
{
    Tok kind = Tok::end;
    std::string text;
    std::size_t line = 0;
    std::size_t col = 0;
};

struct Failure
{
    Diagnostic diagnostic;
    bool scale = false;
};

[[noreturn]] void fail_at(std::size_t line, std::size_t col, std::string message)
{
    throw Failure{Diagnostic{Diagnostic::Severity::error, line, col, std::move(message)}, false};
}

std::vector<Token> lex(const std::string& text)
{
    static const char* const multi[] = {"<=>", "->", "..", "<=", ">=", "!=", "=>"};
    static const std::string single = "[](){};:+-*/'=<>&|!,?\"";

    std::vector<Token> out;
    std::size_t i = 0;
    std::size_t line = 1;
    std::size_t col = 1;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };

    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n' || c == ' ' || c == '\t' || c == '\r') {
            advance(1);
            continue;
        }
        if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        if (c == '/' && i + 1 < text.size() && text[i + 1] == '*') {
            fail_at(line, col, "unsupported construct: block comments");
        }
        Token tok;
        tok.line = line;
        tok.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t j = i;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
            tok.kind = Tok::ident;
            tok.text = text.substr(i, j - i);
            advance(j - i);
            out.push_back(std::move(tok));
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            bool real = false;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            if (j < text.size() && text[j] == '.' && !(j + 1 < text.size() && text[j + 1] == '.')) {
                real = true;
                ++j;
                while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            }
            if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
                if (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) {
                    real = true;
                    j = k;
                    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
                }
            }
            tok.kind = real ? Tok::real : Tok::integer;
            tok.text = text.substr(i, j - i);
            advance(j - i);
            out.push_back(std::move(tok));
            continue;
        }
        if (c == '"') {
            std::size_t j = i + 1;
            while (j < text.size() && text[j] != '"' && text[j] != '\n') ++j;
            if (j >= text.size() || text[j] != '"') fail_at(line, col, "unterminated string");
            tok.kind = Tok::string;
            tok.text = text.substr(i + 1, j - i - 1);
            advance(j - i + 1);
            out.push_back(std::move(tok));
            continue;
        }
        bool matched = false;
        for (const char* m : multi) {
            const std::string_view mv(m);
            if (text.compare(i, mv.size(), mv) == 0) {
                tok.kind = Tok::punct;
                tok.text = std::string(mv);
                advance(mv.size());
                out.push_back(std::move(tok));
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (single.find(c) != std::string::npos) {
            tok.kind = Tok::punct;
            tok.text = std::string(1, c);
            advance(1);
            out.push_back(std::move(tok));
            continue;
        }
        fail_at(line, col, fmt::format("unexpected character '{}'", c));
    }
    out.push_back(Token{Tok::end, "", line, col});
    return out;
}

// ---------------------------------------------------------------- syntax tree

struct Expr
{
    enum class Kind { int_lit, real_lit, bool_lit, ident, neg, logical_not, binary, call };

    Kind kind = Kind::int_lit;
    std::string text; // identifier, operator or function name
    long long ival = 0;
    double rval = 0.0;
    bool bval = false;
    std::vector<Expr> args;
    std::size_t line = 0;
    std::size_t col = 0;
};

struct Assignment
{
    std::string variable;
    Expr value;
    std::size_t line = 0;
    std::size_t col = 0;
};

struct Branch
{
    std::optional<Expr> probability;
    std::vector<Assignment> assignments;
    std::size_t line = 0;
    std::size_t col = 0;
};

struct Command
{
    std::string action;
    Expr guard;
    std::vector<Branch> branches;
    std::size_t line = 0;
    std::size_t col = 0;
};

struct VarDecl
{
    std::string name;
    Expr lo;
    Expr hi;
    std::optional<Expr> init;
    std::size_t line = 0;
    std::size_t col = 0;
};

struct ConstDecl
{
    std::string name;
    bool is_int = true;
    Expr value;
};

struct LabelDecl
{
    std::string name;
    Expr predicate;
    std::size_t line = 0;
    std::size_t col = 0;
};

struct Program
{
    std::vector<ConstDecl> consts;
    std::map<std::string, Expr> formulas;
    std::vector<VarDecl> vars;
    std::vector<Command> commands;
    std::vector<LabelDecl> labels;
    bool has_module = false;
};

const std::set<std::string>& keywords()
{
    static const std::set<std::string> k = {
        "mdp",     "const",     "int",   "double", "bool",   "formula", "module", "endmodule", "label",
        "init",    "true",      "false", "min",    "max",    "dtmc",    "ctmc",   "rewards",   "endrewards",
        "system",  "endsystem", "global", "endinit", "pta",  "clock",   "invariant", "endinvariant",
        "probabilistic", "nondeterministic", "stochastic", "floor", "ceil", "pow", "mod", "log", "func"};
    return k;
}

// ---------------------------------------------------------------- parsing

class Parser
{
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    Program parse()
    {
        parse_header();
        while (!at_end()) {
            const Token& t = peek();
            if (is_ident("const")) {
                parse_const();
            } else if (is_ident("formula")) {
                parse_formula();
            } else if (is_ident("module")) {
                parse_module();
            } else if (is_ident("label")) {
                parse_label();
            } else if (is_ident("rewards")) {
                unsupported(t, "reward structures");
            } else if (is_ident("system")) {
                unsupported(t, "system composition");
            } else if (is_ident("global")) {
                unsupported(t, "global variables");
            } else if (is_ident("init")) {
                unsupported(t, "init blocks");
            } else {
                fail_at(t.line, t.col, fmt::format("syntax error: unexpected '{}'", t.text));
            }
        }
        if (!prog_.has_module) fail_at(peek().line, peek().col, "syntax error: model declares no module");
        return std::move(prog_);
    }

private:
    const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
    bool at_end() const { return peek().kind == Tok::end; }
    const Token& take() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
    bool is_punct(std::string_view p, std::size_t ahead = 0) const
    {
        return peek(ahead).kind == Tok::punct && peek(ahead).text == p;
    }
    bool is_ident(std::string_view id, std::size_t ahead = 0) const
    {
        return peek(ahead).kind == Tok::ident && peek(ahead).text == id;
    }

    [[noreturn]] static void unsupported(const Token& t, std::string_view what)
    {
        fail_at(t.line, t.col, fmt::format("unsupported construct: {}", what));
    }

    [[noreturn]] void expected(std::string_view what) const
    {
        const Token& t = peek();
        fail_at(t.line, t.col,
                fmt::format("syntax error: expected {} but found '{}'", what, t.kind == Tok::end ? "end of input" : t.text));
    }

    void expect_punct(std::string_view p)
    {
        if (!is_punct(p)) expected(fmt::format("'{}'", p));
        take();
    }

    void expect_keyword(std::string_view k)
    {
        if (!is_ident(k)) expected(fmt::format("'{}'", k));
        take();
    }

    std::string expect_name(std::string_view what)
    {
        const Token& t = peek();
        if (t.kind != Tok::ident) expected(what);
        if (keywords().contains(t.text)) {
            fail_at(t.line, t.col, fmt::format("syntax error: '{}' is a reserved word", t.text));
        }
        return take().text;
    }

    void declare(const Token& at, const std::string& name)
    {
        if (!names_.insert(name).second) fail_at(at.line, at.col, fmt::format("duplicate identifier '{}'", name));
    }

    void parse_header()
    {
        const Token& t = peek();
        static const std::set<std::string> other_types = {"dtmc",  "ctmc",          "pta",
                                                          "pomdp", "probabilistic", "nondeterministic",
                                                          "stochastic", "smg", "popta"};
        if (t.kind == Tok::ident && other_types.contains(t.text)) {
            unsupported(t, fmt::format("model type '{}'", t.text));
        }
        if (!is_ident("mdp")) expected("model type 'mdp'");
        take();
    }

    void parse_const()
    {
        take();
        bool is_int = true;
        if (is_ident("int")) {
            take();
        } else if (is_ident("double")) {
            is_int = false;
            take();
        } else if (is_ident("bool")) {
            unsupported(peek(), "boolean constants");
        }
        const Token at = peek();
        std::string name = expect_name("constant name");
        if (is_punct(";")) unsupported(at, fmt::format("undefined constant '{}'", name));
        expect_punct("=");
        Expr value = parse_expr();
        expect_punct(";");
        declare(at, name);
        prog_.consts.push_back(ConstDecl{std::move(name), is_int, std::move(value)});
    }

    void parse_formula()
    {
        take();
        const Token at = peek();
        std::string name = expect_name("formula name");
        expect_punct("=");
        Expr value = parse_expr();
        expect_punct(";");
        declare(at, name);
        prog_.formulas.emplace(std::move(name), std::move(value));
    }

    void parse_label()
    {
        const Token at = take();
        if (peek().kind != Tok::string) expected("quoted label name");
        std::string name = take().text;
        for (const auto& l : prog_.labels) {
            if (l.name == name) fail_at(at.line, at.col, fmt::format("duplicate label \"{}\"", name));
        }
        expect_punct("=");
        Expr pred = parse_expr();
        expect_punct(";");
        prog_.labels.push_back(LabelDecl{std::move(name), std::move(pred), at.line, at.col});
    }

    void parse_module()
    {
        const Token at = take();
        if (prog_.has_module) unsupported(at, "multiple modules");
        prog_.has_module = true;
        expect_name("module name");
        if (is_punct("=")) unsupported(peek(), "module renaming");
        while (!is_ident("endmodule")) {
            if (at_end()) expected("'endmodule'");
            if (is_punct("[")) {
                parse_command();
            } else if (is_ident("invariant")) {
                unsupported(peek(), "invariants");
            } else if (peek().kind == Tok::ident && is_punct(":", 1)) {
                parse_var();
            } else {
                expected("variable declaration or command");
            }
        }
        take();
    }

    void parse_var()
    {
        const Token at = peek();
        std::string name = expect_name("variable name");
        expect_punct(":");
        if (is_ident("bool")) unsupported(peek(), "boolean variables");
        if (is_ident("int")) unsupported(peek(), "unbounded integer variables");
        if (is_ident("clock")) unsupported(peek(), "clock variables");
        expect_punct("[");
        Expr lo = parse_expr();
        expect_punct("..");
        Expr hi = parse_expr();
        expect_punct("]");
        std::optional<Expr> init;
        if (is_ident("init")) {
            take();
            init = parse_expr();
        }
        expect_punct(";");
        declare(at, name);
        prog_.vars.push_back(VarDecl{std::move(name), std::move(lo), std::move(hi), std::move(init), at.line, at.col});
    }

    void parse_command()
    {
        const Token at = take();
        if (is_punct("]")) unsupported(at, "unlabeled command");
        std::string action = expect_name("action label");
        expect_punct("]");
        Expr guard = parse_expr();
        expect_punct("->");
        std::vector<Branch> branches;
        do {
            branches.push_back(parse_branch());
        } while (is_punct("+") && (take(), true));
        expect_punct(";");
        prog_.commands.push_back(Command{std::move(action), std::move(guard), std::move(branches), at.line, at.col});
    }

    Branch parse_branch()
    {
        Branch b;
        b.line = peek().line;
        b.col = peek().col;
        const bool bare_update = (is_punct("(") && peek(1).kind == Tok::ident && is_punct("'", 2)) ||
                                 (is_ident("true") && (is_punct(";", 1) || is_punct("+", 1)));
        if (!bare_update) {
            b.probability = parse_expr();
            expect_punct(":");
        }
        if (is_ident("true")) {
            take();
            return b;
        }
        while (true) {
            expect_punct("(");
            const Token vt = peek();
            std::string var = expect_name("variable name");
            expect_punct("'");
            expect_punct("=");
            Expr value = parse_expr();
            expect_punct(")");
            b.assignments.push_back(Assignment{std::move(var), std::move(value), vt.line, vt.col});
            if (!is_punct("&")) break;
            take();
        }
        return b;
    }

    // Expression grammar, lowest precedence first.
    Expr parse_expr()
    {
        Expr e = parse_or();
        if (is_punct("?")) unsupported(peek(), "conditional expressions");
        if (is_punct("=>") || is_punct("<=>")) unsupported(peek(), fmt::format("operator '{}'", peek().text));
        return e;
    }

    Expr binary(std::string op, Expr lhs, Expr rhs, const Token& at)
    {
        Expr e;
        e.kind = Expr::Kind::binary;
        e.text = std::move(op);
        e.line = at.line;
        e.col = at.col;
        e.args.push_back(std::move(lhs));
        e.args.push_back(std::move(rhs));
        return e;
    }

    Expr parse_or()
    {
        Expr lhs = parse_and();
        while (is_punct("|")) {
            const Token at = take();
            lhs = binary("|", std::move(lhs), parse_and(), at);
        }
        return lhs;
    }

    Expr parse_and()
    {
        Expr lhs = parse_not();
        while (is_punct("&")) {
            const Token at = take();
            lhs = binary("&", std::move(lhs), parse_not(), at);
        }
        return lhs;
    }

    Expr parse_not()
    {
        if (is_punct("!")) {
            const Token at = take();
            Expr e;
            e.kind = Expr::Kind::logical_not;
            e.line = at.line;
            e.col = at.col;
            e.args.push_back(parse_not());
            return e;
        }
        return parse_rel();
    }

    Expr parse_rel()
    {
        Expr lhs = parse_add();
        for (const char* op : {"=", "!=", "<", "<=", ">", ">="}) {
            if (is_punct(op)) {
                const Token at = take();
                return binary(op, std::move(lhs), parse_add(), at);
            }
        }
        return lhs;
    }

    Expr parse_add()
    {
        Expr lhs = parse_mul();
        while (is_punct("+") || is_punct("-")) {
            const Token at = take();
            lhs = binary(at.text, std::move(lhs), parse_mul(), at);
        }
        return lhs;
    }

    Expr parse_mul()
    {
        Expr lhs = parse_unary();
        while (is_punct("*") || is_punct("/")) {
            if (is_punct("/")) unsupported(peek(), "division");
            const Token at = take();
            lhs = binary("*", std::move(lhs), parse_unary(), at);
        }
        return lhs;
    }

    Expr parse_unary()
    {
        if (is_punct("-")) {
            const Token at = take();
            Expr e;
            e.kind = Expr::Kind::neg;
            e.line = at.line;
            e.col = at.col;
            e.args.push_back(parse_unary());
            return e;
        }
        return parse_atom();
    }

    Expr parse_atom()
    {
        const Token t = peek();
        Expr e;
        e.line = t.line;
        e.col = t.col;
        if (t.kind == Tok::integer) {
            take();
            e.kind = Expr::Kind::int_lit;
            try {
                e.ival = std::stoll(t.text);
            } catch (const std::exception&) {
                fail_at(t.line, t.col, fmt::format("integer literal '{}' out of range", t.text));
            }
            return e;
        }
        if (t.kind == Tok::real) {
            take();
            e.kind = Expr::Kind::real_lit;
            e.rval = std::strtod(t.text.c_str(), nullptr);
            return e;
        }
        if (is_punct("(")) {
            take();
            e = parse_expr();
            expect_punct(")");
            return e;
        }
        if (t.kind == Tok::ident) {
            if (t.text == "true" || t.text == "false") {
                take();
                e.kind = Expr::Kind::bool_lit;
                e.bval = t.text == "true";
                return e;
            }
            if (t.text == "min" || t.text == "max") {
                take();
                e.kind = Expr::Kind::call;
                e.text = t.text;
                expect_punct("(");
                e.args.push_back(parse_expr());
                expect_punct(",");
                e.args.push_back(parse_expr());
                if (is_punct(",")) unsupported(peek(), fmt::format("{} with more than two arguments", t.text));
                expect_punct(")");
                return e;
            }
            if (is_punct("(", 1) || t.text == "func") unsupported(t, fmt::format("function '{}'", t.text));
            if (keywords().contains(t.text)) {
                fail_at(t.line, t.col, fmt::format("syntax error: unexpected '{}'", t.text));
            }
            take();
            e.kind = Expr::Kind::ident;
            e.text = t.text;
            return e;
        }
        expected("expression");
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    Program prog_;
    std::unordered_set<std::string> names_;
};

// ---------------------------------------------------------------- evaluation

struct Value
{
    enum class Type { integer, real, boolean };
    Type type = Type::integer;
    long long i = 0;
    double r = 0.0;
    bool b = false;

    static Value of_int(long long v) { return Value{Type::integer, v, 0.0, false}; }
    static Value of_real(double v) { return Value{Type::real, 0, v, false}; }
    static Value of_bool(bool v) { return Value{Type::boolean, 0, 0.0, v}; }

    bool numeric() const { return type != Type::boolean; }
    double as_real() const { return type == Type::integer ? static_cast<double>(i) : r; }
};

using Valuation = std::vector<long long>;

class Evaluator
{
public:
    explicit Evaluator(const Program& prog) : prog_(prog)
    {
        for (std::size_t v = 0; v < prog.vars.size(); ++v) var_index_[prog.vars[v].name] = v;
        for (const auto& c : prog.consts) const_decls_[c.name] = &c;
    }

    // Constant context: variables are not visible.
    Value eval_const(const Expr& e)
    {
        state_ = nullptr;
        return eval(e);
    }

    Value eval_in(const Expr& e, const Valuation& state)
    {
        state_ = &state;
        return eval(e);
    }

    std::optional<std::size_t> variable(const std::string& name) const
    {
        auto it = var_index_.find(name);
        if (it == var_index_.end()) return std::nullopt;
        return it->second;
    }

    std::string describe(const Valuation& state) const
    {
        std::string out = "(";
        for (std::size_t v = 0; v < state.size(); ++v) {
            if (v) out += ",";
            out += fmt::format("{}={}", prog_.vars[v].name, state[v]);
        }
        return out + ")";
    }

private:
    Value eval(const Expr& e)
    {
        using K = Expr::Kind;
        switch (e.kind) {
        case K::int_lit: return Value::of_int(e.ival);
        case K::real_lit: return Value::of_real(e.rval);
        case K::bool_lit: return Value::of_bool(e.bval);
        case K::ident: return lookup(e);
        case K::neg: {
            const Value v = eval(e.args[0]);
            if (!v.numeric()) fail_at(e.line, e.col, "type error: unary '-' needs a number");
            return v.type == Value::Type::integer ? Value::of_int(-v.i) : Value::of_real(-v.r);
        }
        case K::logical_not: {
            const Value v = eval(e.args[0]);
            if (v.numeric()) fail_at(e.line, e.col, "type error: '!' needs a boolean");
            return Value::of_bool(!v.b);
        }
        case K::call: {
            const Value a = eval(e.args[0]);
            const Value b = eval(e.args[1]);
            if (!a.numeric() || !b.numeric()) fail_at(e.line, e.col, fmt::format("type error: {} needs numbers", e.text));
            const bool is_min = e.text == "min";
            if (a.type == Value::Type::integer && b.type == Value::Type::integer) {
                return Value::of_int(is_min ? std::min(a.i, b.i) : std::max(a.i, b.i));
            }
            return Value::of_real(is_min ? std::min(a.as_real(), b.as_real()) : std::max(a.as_real(), b.as_real()));
        }
        case K::binary: return eval_binary(e);
        }
        fail_at(e.line, e.col, "internal error: unknown expression");
    }

    Value eval_binary(const Expr& e)
    {
        const std::string& op = e.text;
        if (op == "&" || op == "|") {
            const Value a = eval(e.args[0]);
            if (a.numeric()) fail_at(e.line, e.col, fmt::format("type error: '{}' needs booleans", op));
            if (op == "&" && !a.b) return Value::of_bool(false);
            if (op == "|" && a.b) return Value::of_bool(true);
            const Value b = eval(e.args[1]);
            if (b.numeric()) fail_at(e.line, e.col, fmt::format("type error: '{}' needs booleans", op));
            return Value::of_bool(b.b);
        }
        const Value a = eval(e.args[0]);
        const Value b = eval(e.args[1]);
        if (op == "=" || op == "!=") {
            bool eq = false;
            if (!a.numeric() && !b.numeric()) {
                eq = a.b == b.b;
            } else if (a.numeric() && b.numeric()) {
                eq = (a.type == Value::Type::integer && b.type == Value::Type::integer) ? a.i == b.i
                                                                                        : a.as_real() == b.as_real();
            } else {
                fail_at(e.line, e.col, fmt::format("type error: '{}' compares a number with a boolean", op));
            }
            return Value::of_bool(op == "=" ? eq : !eq);
        }
        if (!a.numeric() || !b.numeric()) fail_at(e.line, e.col, fmt::format("type error: '{}' needs numbers", op));
        const bool ints = a.type == Value::Type::integer && b.type == Value::Type::integer;
        if (op == "<") return Value::of_bool(ints ? a.i < b.i : a.as_real() < b.as_real());
        if (op == "<=") return Value::of_bool(ints ? a.i <= b.i : a.as_real() <= b.as_real());
        if (op == ">") return Value::of_bool(ints ? a.i > b.i : a.as_real() > b.as_real());
        if (op == ">=") return Value::of_bool(ints ? a.i >= b.i : a.as_real() >= b.as_real());
        if (op == "+") return ints ? Value::of_int(a.i + b.i) : Value::of_real(a.as_real() + b.as_real());
        if (op == "-") return ints ? Value::of_int(a.i - b.i) : Value::of_real(a.as_real() - b.as_real());
        if (op == "*") return ints ? Value::of_int(a.i * b.i) : Value::of_real(a.as_real() * b.as_real());
        fail_at(e.line, e.col, fmt::format("unsupported construct: operator '{}'", op));
    }

    Value lookup(const Expr& e)
    {
        if (auto v = variable(e.text)) {
            if (state_ == nullptr) {
                fail_at(e.line, e.col, fmt::format("expression is not constant-foldable: '{}' is a variable", e.text));
            }
            return Value::of_int((*state_)[*v]);
        }
        if (auto c = const_decls_.find(e.text); c != const_decls_.end()) {
            if (auto cached = const_values_.find(e.text); cached != const_values_.end()) return cached->second;
            if (!in_progress_.insert(e.text).second) {
                fail_at(e.line, e.col, fmt::format("circular definition of '{}'", e.text));
            }
            const Valuation* saved = state_;
            state_ = nullptr;
            Value v = eval(c->second->value);
            state_ = saved;
            in_progress_.erase(e.text);
            if (!v.numeric()) fail_at(e.line, e.col, fmt::format("type error: constant '{}' is not a number", e.text));
            if (c->second->is_int) {
                if (v.type != Value::Type::integer) {
                    fail_at(e.line, e.col, fmt::format("type error: int constant '{}' has a non-integer value", e.text));
                }
            } else {
                v = Value::of_real(v.as_real());
            }
            const_values_[e.text] = v;
            return v;
        }
        if (auto f = prog_.formulas.find(e.text); f != prog_.formulas.end()) {
            if (!in_progress_.insert(e.text).second) {
                fail_at(e.line, e.col, fmt::format("circular definition of '{}'", e.text));
            }
            Value v = eval(f->second);
            in_progress_.erase(e.text);
            return v;
        }
        fail_at(e.line, e.col, fmt::format("undefined identifier '{}'", e.text));
    }

    const Program& prog_;
    std::map<std::string, std::size_t> var_index_;
    std::map<std::string, const ConstDecl*> const_decls_;
    std::map<std::string, Value> const_values_;
    std::set<std::string> in_progress_;
    const Valuation* state_ = nullptr;
};

long long eval_int_const(Evaluator& ev, const Expr& e, std::string_view what)
{
    const Value v = ev.eval_const(e);
    if (v.type != Value::Type::integer) fail_at(e.line, e.col, fmt::format("type error: {} must be an integer", what));
    return v.i;
}

// ---------------------------------------------------------------- state space

ExplicitMdp build(const Program& prog, std::vector<Diagnostic>& warnings)
{
    Evaluator ev(prog);
    struct Range
    {
        long long lo;
        long long hi;
    };
    std::vector<Range> ranges;
    Valuation init;
    for (const auto& v : prog.vars) {
        const long long lo = eval_int_const(ev, v.lo, "variable bound");
        const long long hi = eval_int_const(ev, v.hi, "variable bound");
        if (lo > hi) fail_at(v.line, v.col, fmt::format("empty range [{}..{}] for '{}'", lo, hi, v.name));
        const long long start = v.init ? eval_int_const(ev, *v.init, "initial value") : lo;
        if (start < lo || start > hi) {
            fail_at(v.line, v.col, fmt::format("initial value {} of '{}' outside [{}..{}]", start, v.name, lo, hi));
        }
        ranges.push_back({lo, hi});
        init.push_back(start);
    }
    for (const auto& c : prog.consts) {
        Expr ref;
        ref.kind = Expr::Kind::ident;
        ref.text = c.name;
        ev.eval_const(ref);
    }
    if (prog.commands.empty()) fail_at(1, 1, "model declares no commands");

    std::vector<std::string> actions;
    std::map<std::string, ActionId> action_ids;
    for (const auto& cmd : prog.commands) {
        if (!action_ids.contains(cmd.action)) {
            action_ids.emplace(cmd.action, static_cast<ActionId>(actions.size()));
            actions.push_back(cmd.action);
        }
        for (const auto& br : cmd.branches) {
            std::set<std::string> seen;
            for (const auto& as : br.assignments) {
                if (!ev.variable(as.variable)) {
                    fail_at(as.line, as.col, fmt::format("undefined identifier '{}' (not a variable)", as.variable));
                }
                if (!seen.insert(as.variable).second) {
                    fail_at(as.line, as.col, fmt::format("variable '{}' updated twice", as.variable));
                }
            }
        }
    }

    struct RawChoice
    {
        ActionId action;
        std::vector<std::pair<std::size_t, double>> successors; // discovery index
    };
    std::vector<Valuation> discovered;
    std::map<Valuation, std::size_t> index;
    std::vector<std::vector<RawChoice>> raw;
    std::deque<std::size_t> queue;

    auto intern = [&](const Valuation& v) {
        auto [it, inserted] = index.emplace(v, discovered.size());
        if (inserted) {
            if (discovered.size() >= max_reachable_states) {
                throw Failure{Diagnostic{Diagnostic::Severity::error, 1, 1,
                                         fmt::format("model has more than {} reachable states", max_reachable_states)},
                              true};
            }
            discovered.push_back(v);
            queue.push_back(it->second);
        }
        return it->second;
    };
    intern(init);

    while (!queue.empty()) {
        const std::size_t idx = queue.front();
        queue.pop_front();
        const Valuation state = discovered[idx];
        std::vector<RawChoice> choices;
        std::map<ActionId, const Command*> enabled;
        for (const auto& cmd : prog.commands) {
            const Value g = ev.eval_in(cmd.guard, state);
            if (g.numeric()) fail_at(cmd.guard.line, cmd.guard.col, "type error: guard must be boolean");
            if (!g.b) continue;
            const ActionId a = action_ids.at(cmd.action);
            if (auto prev = enabled.find(a); prev != enabled.end()) {
                fail_at(cmd.line, cmd.col,
                        fmt::format("commands at lines {} and {} for action [{}] are both enabled in state {}",
                                    prev->second->line, cmd.line, cmd.action, ev.describe(state)));
            }
            enabled.emplace(a, &cmd);
        }
        for (const auto& [a, cmd] : enabled) {
            RawChoice rc{a, {}};
            double sum = 0.0;
            for (const auto& br : cmd->branches) {
                double p = 1.0;
                if (br.probability) {
                    const Value pv = ev.eval_in(*br.probability, state);
                    if (!pv.numeric()) {
                        fail_at(br.line, br.col, "probability expression is not constant-foldable to a number");
                    }
                    p = pv.as_real();
                    if (!(p >= 0.0 && p <= 1.0)) {
                        fail_at(br.line, br.col,
                                fmt::format("probability {:.6g} outside [0,1] in state {}", p, ev.describe(state)));
                    }
                }
                sum += p;
                Valuation next = state;
                for (const auto& as : br.assignments) {
                    const std::size_t v = *ev.variable(as.variable);
                    const Value nv = ev.eval_in(as.value, state);
                    if (nv.type != Value::Type::integer) {
                        fail_at(as.line, as.col, fmt::format("type error: update of '{}' must be an integer", as.variable));
                    }
                    if (nv.i < ranges[v].lo || nv.i > ranges[v].hi) {
                        fail_at(as.line, as.col,
                                fmt::format("out-of-range update {}'={} outside [{}..{}] in state {}", as.variable, nv.i,
                                            ranges[v].lo, ranges[v].hi, ev.describe(state)));
                    }
                    next[v] = nv.i;
                }
                if (p > 0.0) rc.successors.emplace_back(intern(next), p);
            }
            if (std::abs(sum - 1.0) > 1e-9) {
                fail_at(cmd->line, cmd->col,
                        fmt::format("probabilities sum to {:.6g} in state {}", sum, ev.describe(state)));
            }
            choices.push_back(std::move(rc));
        }
        if (raw.size() <= idx) raw.resize(idx + 1);
        raw[idx] = std::move(choices);
    }

    // Renumber in lexicographic valuation order.
    std::vector<StateId> final_id(discovered.size());
    {
        StateId next = 0;
        for (const auto& [val, idx] : index) final_id[idx] = next++;
    }
    ExplicitMdp m(discovered.size(), actions, final_id[0]);
    for (std::size_t idx = 0; idx < discovered.size(); ++idx) {
        const StateId s = final_id[idx];
        if (raw[idx].empty()) {
            m.set_choice(s, 0, {{s, 1.0}});
            continue;
        }
        for (const auto& rc : raw[idx]) {
            std::vector<Transition> row;
            for (const auto& [t, p] : rc.successors) row.push_back({final_id[t], p});
            m.set_choice(s, rc.action, std::move(row));
        }
    }
    for (const auto& l : prog.labels) {
        StateSet states;
        for (std::size_t idx = 0; idx < discovered.size(); ++idx) {
            const Value v = ev.eval_in(l.predicate, discovered[idx]);
            if (v.numeric()) fail_at(l.line, l.col, fmt::format("type error: label \"{}\" must be boolean", l.name));
            if (v.b) states.insert(final_id[idx]);
        }
        if (states.empty()) {
            warnings.push_back({Diagnostic::Severity::warning, l.line, l.col, fmt::format("empty label \"{}\"", l.name)});
        }
        m.set_label(l.name, std::move(states));
    }
    return m;
}

bool is_identifier(const std::string& s)
{
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

} // namespace

std::string ParseResult::report() const
{
    std::string out;
    for (const auto& d : diagnostics) out += d.str() + "\n";
    return out;
}

ParseResult parse_model(const ModelSource& src)
{
    ParseResult result;
    try {
        if (src.text.empty()) fail_at(1, 1, "empty model source");
        Parser parser(lex(src.text));
        const Program prog = parser.parse();
        std::vector<Diagnostic> warnings;
        ExplicitMdp m = build(prog, warnings);
        result.diagnostics = std::move(warnings);
        for (auto& d : validate(m)) {
            if (d.severity == Diagnostic::Severity::error) result.diagnostics.push_back(std::move(d));
        }
        if (!has_errors(result.diagnostics)) result.model = std::move(m);
    } catch (const Failure& f) {
        result.diagnostics.push_back(f.diagnostic);
        result.scale_limit_exceeded = f.scale;
    }
    return result;
}

ModelSource load_model_source(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot read model file '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return ModelSource{buf.str(), path.string()};
}

ExplicitMdp load_model(const std::filesystem::path& path)
{
    const ParseResult r = parse_model(load_model_source(path));
    if (!r.ok()) {
        std::string msg = path.string() + ":\n" + r.report();
        if (r.scale_limit_exceeded) throw ScaleLimitError(msg);
        throw InputError(msg);
    }
    return *r.model;
}

std::string emit_model(const ExplicitMdp& m, const std::vector<std::string>& header)
{
    for (const auto& a : m.action_names()) {
        if (!is_identifier(a) || keywords().contains(a)) {
            throw InputError(fmt::format("action name '{}' is not a valid identifier", a));
        }
    }
    bool use_names = m.state_names().size() == m.state_count();
    if (use_names) {
        std::unordered_set<std::string> seen;
        for (const auto& n : m.state_names()) {
            if (!is_identifier(n) || keywords().contains(n) || n == "s" || !seen.insert(n).second) {
                use_names = false;
                break;
            }
        }
    }
    auto ref = [&](StateId s) { return use_names ? m.state_names()[s] : std::to_string(s); };

    std::string out;
    for (const auto& h : header) out += "// " + h + "\n";
    out += "mdp\n\n";
    if (use_names) {
        for (StateId s = 0; s < m.state_count(); ++s) out += fmt::format("const int {} = {};\n", m.state_names()[s], s);
        out += "\n";
    }
    out += "module flat\n";
    out += fmt::format("  s : [0..{}] init {};\n\n", m.state_count() == 0 ? 0 : m.state_count() - 1, ref(m.initial()));
    for (ActionId a = 0; a < m.action_count(); ++a) {
        for (StateId s = 0; s < m.state_count(); ++s) {
            const Choice* c = m.find_choice(s, a);
            if (c == nullptr) continue;
            out += fmt::format("  [{}] s={} -> ", m.action_name(a), ref(s));
            for (std::size_t i = 0; i < c->successors.size(); ++i) {
                if (i) out += " + ";
                out += fmt::format("{:.17g}:(s'={})", c->successors[i].probability, ref(c->successors[i].target));
            }
            out += ";\n";
        }
    }
    out += "endmodule\n";
    if (!m.labels().empty()) out += "\n";
    for (const auto& [name, states] : m.labels()) {
        std::string pred;
        for (StateId s : states.members()) {
            if (!pred.empty()) pred += " | ";
            pred += "s=" + ref(s);
        }
        out += fmt::format("label \"{}\" = {};\n", name, pred.empty() ? "false" : pred);
    }
    return out;
}

} // namespace cshield
