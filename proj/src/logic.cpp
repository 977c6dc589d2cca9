#include "percheck/logic.h"

#include <cctype>
#include <charconv>
#include <limits>

#include "percheck/chain.h"
#include "percheck/error.h"

namespace percheck::logic {

// ---------------------------------------------------------------------------------------------
// Atoms

AtomicPredicate AtomicPredicate::cell(CmpOp op, int value) { return {Field::Cell, op, value, EnvClass::Ped, {}}; }
AtomicPredicate AtomicPredicate::speed(CmpOp op, int value) { return {Field::Speed, op, value, EnvClass::Ped, {}}; }
AtomicPredicate AtomicPredicate::env_is(EnvClass env) { return {Field::Env, CmpOp::Eq, 0, env, {}}; }
AtomicPredicate AtomicPredicate::named(std::string label) { return {Field::Label, CmpOp::Eq, 0, EnvClass::Ped, std::move(label)}; }

namespace {

const char* op_text(CmpOp op) {
    switch (op) {
        case CmpOp::Eq: return "=";
        case CmpOp::Le: return "<=";
        case CmpOp::Ge: return ">=";
        case CmpOp::Lt: return "<";
        case CmpOp::Gt: return ">";
    }
    return "?";
}

bool compare(int lhs, CmpOp op, int rhs) {
    switch (op) {
        case CmpOp::Eq: return lhs == rhs;
        case CmpOp::Le: return lhs <= rhs;
        case CmpOp::Ge: return lhs >= rhs;
        case CmpOp::Lt: return lhs < rhs;
        case CmpOp::Gt: return lhs > rhs;
    }
    return false;
}

}  // namespace

std::string to_string(const AtomicPredicate& a) {
    switch (a.field) {
        case Field::Cell: return "cell" + std::string(op_text(a.op)) + std::to_string(a.value);
        case Field::Speed: return "speed" + std::string(op_text(a.op)) + std::to_string(a.value);
        case Field::Env: return "env=" + std::string(scenario::to_string(a.env));
        case Field::Label: return a.label;
    }
    return "?";
}

bool eval_atom(const SystemState& s, const AtomicPredicate& a) {
    switch (a.field) {
        case Field::Cell: return compare(s.agent.cell, a.op, a.value);
        case Field::Speed: return compare(s.agent.speed, a.op, a.value);
        case Field::Env: return s.env == a.env;
        case Field::Label: break;
    }
    throw Error(Errc::ConfigError, "label '" + a.label + "' can only be evaluated on a chain state");
}

// ---------------------------------------------------------------------------------------------
// Formula

struct Formula::Node {
    Kind kind;
    AtomicPredicate atom;
    std::optional<unsigned> bound;
    std::optional<Formula> a;
    std::optional<Formula> b;
};

Formula Formula::constant(bool value) {
    return Formula(std::make_shared<const Node>(Node{value ? Kind::True : Kind::False, {}, std::nullopt, std::nullopt, std::nullopt}));
}

Formula Formula::atom(AtomicPredicate a) {
    return Formula(std::make_shared<const Node>(Node{Kind::Atom, std::move(a), std::nullopt, std::nullopt, std::nullopt}));
}

Formula Formula::negation(Formula f) {
    return Formula(std::make_shared<const Node>(Node{Kind::Not, {}, std::nullopt, std::move(f), std::nullopt}));
}

Formula Formula::conjunction(Formula a, Formula b) {
    return Formula(std::make_shared<const Node>(Node{Kind::And, {}, std::nullopt, std::move(a), std::move(b)}));
}

Formula Formula::disjunction(Formula a, Formula b) {
    return Formula(std::make_shared<const Node>(Node{Kind::Or, {}, std::nullopt, std::move(a), std::move(b)}));
}

Formula Formula::implication(Formula a, Formula b) { return disjunction(negation(std::move(a)), std::move(b)); }

Formula Formula::next(Formula f) {
    return Formula(std::make_shared<const Node>(Node{Kind::Next, {}, std::nullopt, std::move(f), std::nullopt}));
}

Formula Formula::always(Formula f, std::optional<unsigned> bound) {
    return Formula(std::make_shared<const Node>(Node{Kind::Always, {}, bound, std::move(f), std::nullopt}));
}

Formula Formula::eventually(Formula f, std::optional<unsigned> bound) {
    return Formula(std::make_shared<const Node>(Node{Kind::Eventually, {}, bound, std::move(f), std::nullopt}));
}

Formula Formula::until(Formula a, Formula b, std::optional<unsigned> bound) {
    return Formula(std::make_shared<const Node>(Node{Kind::Until, {}, bound, std::move(a), std::move(b)}));
}

Formula::Kind Formula::kind() const noexcept { return node_->kind; }

const AtomicPredicate& Formula::atom() const {
    if (node_->kind != Kind::Atom) throw std::logic_error("Formula::atom on a non-atomic node");
    return node_->atom;
}

const Formula& Formula::left() const {
    if (!node_->a) throw std::logic_error("Formula::left on a leaf");
    return *node_->a;
}

const Formula& Formula::right() const {
    if (!node_->b) throw std::logic_error("Formula::right on a non-binary node");
    return *node_->b;
}

std::optional<unsigned> Formula::bound() const noexcept { return node_->bound; }

bool Formula::is_temporal() const noexcept {
    switch (node_->kind) {
        case Kind::Next:
        case Kind::Always:
        case Kind::Eventually:
        case Kind::Until:
            return true;
        default:
            return false;
    }
}

bool Formula::is_propositional() const noexcept {
    if (is_temporal()) return false;
    if (node_->a && !node_->a->is_propositional()) return false;
    if (node_->b && !node_->b->is_propositional()) return false;
    return true;
}

bool Formula::operator==(const Formula& other) const {
    if (node_ == other.node_) return true;
    const Node& x = *node_;
    const Node& y = *other.node_;
    if (x.kind != y.kind || x.bound != y.bound) return false;
    if (x.kind == Kind::Atom) return x.atom == y.atom;
    if (x.a.has_value() != y.a.has_value() || x.b.has_value() != y.b.has_value()) return false;
    if (x.a && !(*x.a == *y.a)) return false;
    if (x.b && !(*x.b == *y.b)) return false;
    return true;
}

namespace {

bool is_leaf(const Formula& f) {
    auto k = f.kind();
    return k == Formula::Kind::True || k == Formula::Kind::False || k == Formula::Kind::Atom;
}

std::string wrap(const Formula& f) { return is_leaf(f) ? to_string(f) : "(" + to_string(f) + ")"; }

std::string bound_text(const Formula& f) { return f.bound() ? "<=" + std::to_string(*f.bound()) : ""; }

}  // namespace

std::string to_string(const Formula& f) {
    using K = Formula::Kind;
    switch (f.kind()) {
        case K::True: return "true";
        case K::False: return "false";
        case K::Atom: return to_string(f.atom());
        case K::Not: return "!" + wrap(f.left());
        case K::And: return wrap(f.left()) + " & " + wrap(f.right());
        case K::Or: return wrap(f.left()) + " | " + wrap(f.right());
        case K::Next: return "X(" + to_string(f.left()) + ")";
        case K::Always: return "G" + bound_text(f) + "(" + to_string(f.left()) + ")";
        case K::Eventually: return "F" + bound_text(f) + "(" + to_string(f.left()) + ")";
        case K::Until: return wrap(f.left()) + " U" + bound_text(f) + " " + wrap(f.right());
    }
    return "?";
}

// ---------------------------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { LParen, RParen, Bang, Amp, Bar, Arrow, Op, Int, Ident, End };

struct Token {
    Tok kind;
    std::size_t offset;
    std::string text;
};

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto error = [&](const std::string& msg) {
        throw ParseError(i, {"(", ")", "!", "&", "|", "->", "comparison", "integer", "identifier"},
                         "at offset " + std::to_string(i) + ": " + msg);
    };
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        switch (c) {
            case '(': out.push_back({Tok::LParen, start, "("}); ++i; continue;
            case ')': out.push_back({Tok::RParen, start, ")"}); ++i; continue;
            case '!': out.push_back({Tok::Bang, start, "!"}); ++i; continue;
            case '&': out.push_back({Tok::Amp, start, "&"}); ++i; continue;
            case '|': out.push_back({Tok::Bar, start, "|"}); ++i; continue;
            case '=': out.push_back({Tok::Op, start, "="}); ++i; continue;
            case '<':
            case '>':
                if (i + 1 < text.size() && text[i + 1] == '=') {
                    out.push_back({Tok::Op, start, std::string{c, '='}});
                    i += 2;
                } else {
                    out.push_back({Tok::Op, start, std::string{c}});
                    ++i;
                }
                continue;
            default: break;
        }
        if (c == '-' && i + 1 < text.size() && text[i + 1] == '>') {
            out.push_back({Tok::Arrow, start, "->"});
            i += 2;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '-' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            ++i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            out.push_back({Tok::Int, start, std::string(text.substr(start, i - start))});
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < text.size() && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
            out.push_back({Tok::Ident, start, std::string(text.substr(start, i - start))});
            continue;
        }
        error(std::string("unexpected character '") + c + "'");
    }
    out.push_back({Tok::End, text.size(), ""});
    return out;
}

bool is_keyword(const std::string& s) {
    return s == "G" || s == "F" || s == "X" || s == "U" || s == "true" || s == "false" || s == "cell" || s == "speed" || s == "env";
}

class Parser {
   public:
    explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

    Formula parse_all() {
        Formula f = implication();
        if (peek().kind != Tok::End) fail({"end of input", "->", "|", "&", "U"});
        return f;
    }

   private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& advance() { return tokens_[pos_++]; }

    bool accept(Tok kind) {
        if (peek().kind == kind) {
            ++pos_;
            return true;
        }
        return false;
    }

    bool accept_ident(const char* word) {
        if (peek().kind == Tok::Ident && peek().text == word) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(std::vector<std::string> expected) const {
        const Token& t = peek();
        std::string found = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        std::string list;
        for (std::size_t i = 0; i < expected.size(); ++i) list += (i ? ", " : "") + expected[i];
        throw ParseError(t.offset, std::move(expected),
                         "at offset " + std::to_string(t.offset) + ": found " + found + ", expected one of: " + list);
    }

    void expect(Tok kind, const char* what) {
        if (!accept(kind)) fail({what});
    }

    int integer() {
        if (peek().kind != Tok::Int) fail({"integer"});
        const Token& t = advance();
        int v = 0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || ptr != t.text.data() + t.text.size()) {
            throw ParseError(t.offset, {"integer"}, "at offset " + std::to_string(t.offset) + ": integer '" + t.text + "' out of range");
        }
        return v;
    }

    std::optional<unsigned> opt_bound() {
        if (peek().kind == Tok::Op && peek().text == "<=") {
            ++pos_;
            const std::size_t at = peek().offset;
            const int v = integer();
            if (v < 0) throw ParseError(at, {"non-negative integer"}, "at offset " + std::to_string(at) + ": bound must be >= 0");
            return static_cast<unsigned>(v);
        }
        return std::nullopt;
    }

    Formula implication() {
        Formula lhs = disjunction();
        if (accept(Tok::Arrow)) return Formula::implication(lhs, implication());
        return lhs;
    }

    Formula disjunction() {
        Formula f = conjunction();
        while (accept(Tok::Bar)) f = Formula::disjunction(f, conjunction());
        return f;
    }

    Formula conjunction() {
        Formula f = until();
        while (accept(Tok::Amp)) f = Formula::conjunction(f, until());
        return f;
    }

    Formula until() {
        Formula lhs = unary();
        if (accept_ident("U")) {
            auto b = opt_bound();
            return Formula::until(lhs, until(), b);
        }
        return lhs;
    }

    Formula unary() {
        if (accept(Tok::Bang)) return Formula::negation(unary());
        if (accept_ident("G")) {
            auto b = opt_bound();
            return Formula::always(unary(), b);
        }
        if (accept_ident("F")) {
            auto b = opt_bound();
            return Formula::eventually(unary(), b);
        }
        if (accept_ident("X")) return Formula::next(unary());
        return primary();
    }

    Formula primary() {
        if (accept(Tok::LParen)) {
            Formula f = implication();
            expect(Tok::RParen, ")");
            return f;
        }
        if (peek().kind != Tok::Ident || peek().text == "U") {
            fail({"(", "!", "G", "F", "X", "true", "false", "cell", "speed", "env", "label"});
        }
        const Token& t = advance();
        if (t.text == "true") return Formula::constant(true);
        if (t.text == "false") return Formula::constant(false);
        if (t.text == "cell" || t.text == "speed") {
            if (peek().kind != Tok::Op) fail({"=", "<=", ">=", "<", ">"});
            const std::string op = advance().text;
            const CmpOp cmp = op == "=" ? CmpOp::Eq : op == "<=" ? CmpOp::Le : op == ">=" ? CmpOp::Ge : op == "<" ? CmpOp::Lt : CmpOp::Gt;
            const int v = integer();
            return Formula::atom(t.text == "cell" ? AtomicPredicate::cell(cmp, v) : AtomicPredicate::speed(cmp, v));
        }
        if (t.text == "env") {
            if (!(peek().kind == Tok::Op && peek().text == "=")) fail({"="});
            ++pos_;
            if (peek().kind != Tok::Ident) fail({"ped", "obj", "empty"});
            const Token& name = advance();
            if (name.text != "ped" && name.text != "obj" && name.text != "empty") {
                throw ParseError(name.offset, {"ped", "obj", "empty"},
                                 "at offset " + std::to_string(name.offset) + ": unknown environment class '" + name.text + "'");
            }
            return Formula::atom(AtomicPredicate::env_is(scenario::env_from_string(name.text)));
        }
        if (is_keyword(t.text)) {
            --pos_;
            fail({"(", "atom"});
        }
        return Formula::atom(AtomicPredicate::named(t.text));
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace

Formula parse(std::string_view text) { return Parser(text).parse_all(); }

// ---------------------------------------------------------------------------------------------
// Classification

const char* to_string(FragmentClass c) noexcept {
    switch (c) {
        case FragmentClass::Invariant: return "Invariant";
        case FragmentClass::Reach: return "Reach";
        case FragmentClass::Until: return "Until";
        case FragmentClass::Next: return "Next";
        case FragmentClass::BoundedInvariant: return "BoundedInvariant";
        case FragmentClass::BoundedReach: return "BoundedReach";
        case FragmentClass::BoundedUntil: return "BoundedUntil";
        case FragmentClass::Unsupported: return "Unsupported";
    }
    return "?";
}

namespace {

Formula nnf(const Formula& f, bool negated) {
    using K = Formula::Kind;
    switch (f.kind()) {
        case K::True:
        case K::False: return Formula::constant((f.kind() == K::True) != negated);
        case K::Atom: return negated ? Formula::negation(f) : f;
        case K::Not: return nnf(f.left(), !negated);
        case K::And:
            return negated ? Formula::disjunction(nnf(f.left(), true), nnf(f.right(), true))
                           : Formula::conjunction(nnf(f.left(), false), nnf(f.right(), false));
        case K::Or:
            return negated ? Formula::conjunction(nnf(f.left(), true), nnf(f.right(), true))
                           : Formula::disjunction(nnf(f.left(), false), nnf(f.right(), false));
        default: break;
    }
    throw std::logic_error("nnf on a temporal formula");
}

// First temporal node strictly below a temporal operator, or the node itself for boolean combinations.
std::string offending(const Formula& f) {
    if (f.is_temporal()) {
        const Formula* kids[2] = {&f.left(), f.kind() == Formula::Kind::Until ? &f.right() : nullptr};
        for (const Formula* k : kids) {
            if (k && !k->is_propositional()) return to_string(*k);
        }
    }
    return to_string(f);
}

Shape unsupported(const Formula& f, const std::string& why) {
    Shape s;
    s.kind = FragmentClass::Unsupported;
    s.unsupported_at = why + ": " + offending(f);
    return s;
}

Shape shape_of(const Formula& f, bool negated) {
    using K = Formula::Kind;
    Shape s;
    if (f.is_propositional()) {
        s.kind = FragmentClass::BoundedInvariant;
        s.bound = 0;
        s.body = nnf(f, negated);
        return s;
    }
    switch (f.kind()) {
        case K::Not: return shape_of(f.left(), !negated);
        case K::Always:
        case K::Eventually: {
            if (!f.left().is_propositional()) return unsupported(f, "nested temporal operator");
            // !G p = F !p and !F p = G !p
            const bool invariant = (f.kind() == K::Always) != negated;
            s.body = nnf(f.left(), negated);
            if (f.bound()) {
                s.kind = invariant ? FragmentClass::BoundedInvariant : FragmentClass::BoundedReach;
                s.bound = *f.bound();
            } else {
                s.kind = invariant ? FragmentClass::Invariant : FragmentClass::Reach;
            }
            return s;
        }
        case K::Next:
            if (!f.left().is_propositional()) return unsupported(f, "nested temporal operator");
            s.kind = FragmentClass::Next;
            s.body = nnf(f.left(), negated);
            return s;
        case K::Until:
            if (!f.left().is_propositional() || !f.right().is_propositional()) return unsupported(f, "nested temporal operator");
            if (negated) return unsupported(f, "negated until");
            s.guard = nnf(f.left(), false);
            s.body = nnf(f.right(), false);
            if (f.bound()) {
                s.kind = FragmentClass::BoundedUntil;
                s.bound = *f.bound();
            } else {
                s.kind = FragmentClass::Until;
            }
            return s;
        default:
            return unsupported(f, "boolean combination of temporal formulas");
    }
}

}  // namespace

Shape classify(const Formula& f) { return shape_of(f, false); }

Formula negation_normal_form(const Formula& f) {
    if (!f.is_propositional()) throw Error(Errc::UnsupportedFragment, "negation normal form needs a propositional formula");
    return nnf(f, false);
}

// ---------------------------------------------------------------------------------------------
// Evaluation

namespace {

template <typename AtomFn>
bool eval_prop_with(const Formula& f, const AtomFn& atom) {
    using K = Formula::Kind;
    switch (f.kind()) {
        case K::True: return true;
        case K::False: return false;
        case K::Atom: return atom(f.atom());
        case K::Not: return !eval_prop_with(f.left(), atom);
        case K::And: return eval_prop_with(f.left(), atom) && eval_prop_with(f.right(), atom);
        case K::Or: return eval_prop_with(f.left(), atom) || eval_prop_with(f.right(), atom);
        default: break;
    }
    throw Error(Errc::UnsupportedFragment, "temporal operator in a state formula: " + to_string(f));
}

}  // namespace

bool eval_prop(const chain::MarkovChain& chain, std::size_t state, const Formula& f) {
    const SystemState& s = chain.state(state);
    return eval_prop_with(f, [&](const AtomicPredicate& a) {
        if (a.field == Field::Label) return chain.has_label(state, a.label);
        return eval_atom(s, a);
    });
}

bool eval_prop(const SystemState& s, const Formula& f) {
    return eval_prop_with(f, [&](const AtomicPredicate& a) { return eval_atom(s, a); });
}

LabeledSets label_chain(const chain::MarkovChain& chain, const Formula& f) {
    LabeledSets out;
    out.shape = classify(f);
    if (out.shape.kind == FragmentClass::Unsupported) {
        throw Error(Errc::UnsupportedFragment, "formula outside the checkable fragment (" + out.shape.unsupported_at + ")");
    }
    out.guard.resize(chain.size());
    out.body.resize(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
        out.guard[i] = eval_prop(chain, i, out.shape.guard);
        out.body[i] = eval_prop(chain, i, out.shape.body);
    }
    return out;
}

namespace {

using Truth = std::vector<bool>;

struct Lasso {
    std::size_t length;
    std::size_t loop_start;
    std::size_t succ(std::size_t i) const { return i + 1 < length ? i + 1 : loop_start; }
};

// Least fixed point of x = now | (keep & X x), swept backwards until stable.
Truth until_fixpoint(const Lasso& w, const Truth& keep, const Truth& now) {
    Truth x(w.length, false);
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t k = w.length; k-- > 0;) {
            const bool v = now[k] || (keep[k] && x[w.succ(k)]);
            if (v != x[k]) {
                x[k] = v;
                changed = true;
            }
        }
    }
    return x;
}

Truth bounded_until(const Lasso& w, const Truth& keep, const Truth& now, unsigned bound) {
    Truth x = now;
    for (unsigned step = 0; step < bound; ++step) {
        Truth y(w.length);
        for (std::size_t k = 0; k < w.length; ++k) y[k] = now[k] || (keep[k] && x[w.succ(k)]);
        x = std::move(y);
    }
    return x;
}

Truth negate(Truth t) {
    t.flip();
    return t;
}

Truth eval_all(const Formula& f, const Lasso& w, const AtomEvaluator& atom) {
    using K = Formula::Kind;
    const Truth all_true(w.length, true);
    switch (f.kind()) {
        case K::True: return all_true;
        case K::False: return Truth(w.length, false);
        case K::Atom: {
            Truth t(w.length);
            for (std::size_t k = 0; k < w.length; ++k) t[k] = atom(k, f.atom());
            return t;
        }
        case K::Not: return negate(eval_all(f.left(), w, atom));
        case K::And:
        case K::Or: {
            Truth a = eval_all(f.left(), w, atom);
            Truth b = eval_all(f.right(), w, atom);
            for (std::size_t k = 0; k < w.length; ++k) a[k] = f.kind() == K::And ? (a[k] && b[k]) : (a[k] || b[k]);
            return a;
        }
        case K::Next: {
            Truth a = eval_all(f.left(), w, atom);
            Truth t(w.length);
            for (std::size_t k = 0; k < w.length; ++k) t[k] = a[w.succ(k)];
            return t;
        }
        case K::Eventually: {
            Truth a = eval_all(f.left(), w, atom);
            return f.bound() ? bounded_until(w, all_true, a, *f.bound()) : until_fixpoint(w, all_true, a);
        }
        case K::Always: {
            Truth na = negate(eval_all(f.left(), w, atom));
            return negate(f.bound() ? bounded_until(w, all_true, na, *f.bound()) : until_fixpoint(w, all_true, na));
        }
        case K::Until: {
            Truth a = eval_all(f.left(), w, atom);
            Truth b = eval_all(f.right(), w, atom);
            return f.bound() ? bounded_until(w, a, b, *f.bound()) : until_fixpoint(w, a, b);
        }
    }
    return Truth(w.length, false);
}

}  // namespace

bool eval_lasso(const Formula& f, std::size_t length, std::size_t loop_start, const AtomEvaluator& atom) {
    if (length == 0 || loop_start >= length) throw Error(Errc::ConfigError, "lasso needs 0 <= loop_start < length");
    return eval_all(f, Lasso{length, loop_start}, atom)[0];
}

}  // namespace percheck::logic
