#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "percheck/scenario.h"

namespace percheck::chain {
class MarkovChain;
}

namespace percheck::logic {

using scenario::EnvClass;
using scenario::SystemState;

enum class Field { Cell, Speed, Env, Label };
enum class CmpOp { Eq, Le, Ge, Lt, Gt };

/// cell/speed comparison, env equality, or a named chain label.
struct AtomicPredicate {
    Field field = Field::Cell;
    CmpOp op = CmpOp::Eq;
    int value = 0;
    EnvClass env = EnvClass::Ped;
    std::string label;

    static AtomicPredicate cell(CmpOp op, int value);
    static AtomicPredicate speed(CmpOp op, int value);
    static AtomicPredicate env_is(EnvClass env);
    static AtomicPredicate named(std::string label);

    bool operator==(const AtomicPredicate&) const = default;
};

std::string to_string(const AtomicPredicate& a);

/// Evaluates cell/speed/env atoms. Label atoms need a chain (see eval_prop) and raise ConfigError here.
bool eval_atom(const SystemState& s, const AtomicPredicate& a);

/// Immutable formula tree with shared nodes. Implication is desugared to !a | b on construction.
class Formula {
   public:
    enum class Kind { True, False, Atom, Not, And, Or, Next, Always, Eventually, Until };

    static Formula constant(bool value);
    static Formula atom(AtomicPredicate a);
    static Formula negation(Formula f);
    static Formula conjunction(Formula a, Formula b);
    static Formula disjunction(Formula a, Formula b);
    static Formula implication(Formula a, Formula b);
    static Formula next(Formula f);
    static Formula always(Formula f, std::optional<unsigned> bound = std::nullopt);
    static Formula eventually(Formula f, std::optional<unsigned> bound = std::nullopt);
    static Formula until(Formula a, Formula b, std::optional<unsigned> bound = std::nullopt);

    Kind kind() const noexcept;
    const AtomicPredicate& atom() const;
    /// Operand of a unary node, or the left side of a binary node.
    const Formula& left() const;
    const Formula& right() const;
    std::optional<unsigned> bound() const noexcept;

    bool is_temporal() const noexcept;
    /// No temporal operator anywhere in the tree.
    bool is_propositional() const noexcept;

    bool operator==(const Formula& other) const;

   private:
    struct Node;
    explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

    std::shared_ptr<const Node> node_;
};

/// Fully parenthesized concrete syntax; parse(to_string(f)) == f.
std::string to_string(const Formula& f);

/// Precedence, tightest first: ! G F X, U, &, |, ->. Throws ParseError with a byte offset.
Formula parse(std::string_view text);

enum class FragmentClass { Invariant, Reach, Until, Next, BoundedInvariant, BoundedReach, BoundedUntil, Unsupported };

const char* to_string(FragmentClass c) noexcept;

/// A formula reduced to one of the checkable shapes. `body` is the safe set (invariants), the target
/// (reach, next) or the right operand of until; `guard` is the left operand of until.
struct Shape {
    FragmentClass kind = FragmentClass::Unsupported;
    Formula guard = Formula::constant(true);
    Formula body = Formula::constant(true);
    unsigned bound = 0;
    std::string unsupported_at;
};

/// Negations are pushed to the atoms; top-level negations of G/F/X are dualized. A purely propositional
/// formula is a zero-step bounded invariant.
Shape classify(const Formula& f);

/// Propositional formula with negations pushed to the atoms.
Formula negation_normal_form(const Formula& f);

/// Propositional evaluation at one chain state; label atoms consult the chain labels.
bool eval_prop(const chain::MarkovChain& chain, std::size_t state, const Formula& f);
bool eval_prop(const SystemState& s, const Formula& f);

struct LabeledSets {
    Shape shape;
    std::vector<bool> guard;
    std::vector<bool> body;
};

/// State sets for the shape of f. Throws UnsupportedFragment for formulas outside the fragment.
LabeledSets label_chain(const chain::MarkovChain& chain, const Formula& f);

/// Atom truth at a trace position.
using AtomEvaluator = std::function<bool(std::size_t position, const AtomicPredicate&)>;

/// Full LTL evaluation at position 0 of the ultimately periodic word w[0..L-1] (w[loop_start..L-1])^omega.
bool eval_lasso(const Formula& f, std::size_t length, std::size_t loop_start, const AtomEvaluator& atom);

}  // namespace percheck::logic
