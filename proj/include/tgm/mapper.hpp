#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tgm/instance.hpp"
#include "tgm/json_io.hpp"
#include "tgm/matcher.hpp"
#include "tgm/schema.hpp"

namespace tgm {

enum class TransformKind { Identity, Cast, Translate, Scale, Aggregate, Split, Constant };
enum class AggregateFn { Sum, Count, Mean, Min, Max };

std::string_view to_string(TransformKind k);
std::string_view to_string(AggregateFn f);

/// One extracted field of a SPLIT. Either the `index`-th piece after
/// splitting on `delimiter`, or the code-point range [begin, end).
struct SplitPart {
  std::string target;  // property of the rule's target node
  std::string delimiter;
  int index = 0;
  int begin = -1, end = -1;

  bool fixed_width() const { return begin >= 0; }
  friend bool operator==(const SplitPart&, const SplitPart&) = default;
};

struct Transform {
  TransformKind kind = TransformKind::Identity;
  std::optional<DataType> cast_to;                 // CAST
  std::vector<std::pair<Value, Value>> table;      // TRANSLATE
  std::optional<Value> fallback;                   // TRANSLATE default; absent means FAIL
  Rational factor{1}, offset{0};                   // SCALE: v * factor + offset
  AggregateFn fn = AggregateFn::Sum;               // AGGREGATE
  std::vector<std::string> group_by;               // AGGREGATE: target property names
  bool count_nulls = false;                        // AGGREGATE COUNT
  std::vector<SplitPart> parts;                    // SPLIT
  Value constant;                                  // CONSTANT

  static Transform identity() { return {}; }
  static Transform cast(DataType t);
  static Transform translate(std::vector<std::pair<Value, Value>> table, std::optional<Value> fallback = {});
  static Transform scale(Rational factor, Rational offset = Rational(0));
  static Transform aggregate(AggregateFn fn, std::vector<std::string> group_by = {});
  static Transform split(std::vector<SplitPart> parts);
  static Transform constant_value(Value v);

  /// Throws Error(InvalidArgument) on duplicate TRANSLATE keys or empty /
  /// overlapping SPLIT parts.
  void check() const;
};

bool operator==(const Transform& a, const Transform& b);

enum class RuleKind { OneToOne, ManyToOne, OneToMany };
enum class PolicyKind { Priority, Mean, FirstNonNull, Fail };

std::string_view to_string(RuleKind k);
std::string_view to_string(PolicyKind k);

struct ConflictPolicy {
  PolicyKind kind = PolicyKind::Fail;
  std::vector<ElementRef> order;  // PRIORITY: highest precedence first

  friend bool operator==(const ConflictPolicy&, const ConflictPolicy&) = default;
};

struct MappingRule {
  std::string id;
  std::vector<ElementRef> sources;
  ElementRef target;
  std::optional<RuleKind> kind;  // derived by compile_rule; a declared kind must agree
  Transform transform;
  /// Empty, or one transform per source applied before merging (e.g. the
  /// translation of each source into target coding).
  std::vector<Transform> source_transforms;
  ConflictPolicy policy;
  int reliability = 2;  // 1..3, scored for ONE_TO_MANY only
  /// Lookup edge: the source value is read from the instance adjacent via
  /// this edge, and the contribution is made by the instance at the other end.
  std::optional<ElementRef> via;

  RuleKind rule_kind() const;
  friend bool operator==(const MappingRule&, const MappingRule&) = default;
};

struct MappingSet {
  std::vector<MappingRule> rules;
  /// Declared entity keys per target node label (property names).
  std::map<std::string, std::vector<std::string>> keys;

  const MappingRule* find(std::string_view id) const;
  friend bool operator==(const MappingSet&, const MappingSet&) = default;
};

struct Diagnostic {
  std::string code;  // e.g. "UNMATCHED_RULE", "TYPE_MISMATCH"
  std::string rule;
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

/// Schemata and decisions a rule is compiled against.
struct MappingContext {
  std::vector<const TypedGraphSchema*> schemas;  // sources and target
  const CorrespondenceSet* correspondences = nullptr;

  const TypedGraphSchema* schema(std::string_view name) const;
  /// Type of a property ref; nullptr for node and edge refs.
  const DataType* type_of(const ElementRef& ref) const;
};

struct CompiledRule {
  MappingRule rule;
  std::vector<Diagnostic> warnings;
};

/// Resolves references, derives the rule kind and type-checks transforms.
/// Throws Error(UnresolvedReference / ArityMismatch / TypeMismatch /
/// InvalidArgument). Source/target pairs without an ACCEPTED correspondence
/// produce UNMATCHED_RULE warnings.
CompiledRule compile_rule(const MappingRule& draft, const MappingContext& ctx);

struct CompileReport {
  MappingSet set;  // successfully compiled rules, input order
  std::vector<Diagnostic> warnings;
  std::vector<Diagnostic> errors;

  bool ok() const { return errors.empty(); }
};

/// Compiles every rule, collecting per-rule errors instead of stopping.
CompileReport compile_rules(const MappingSet& drafts, const MappingContext& ctx);

/// MANY_TO_ONE merge: each source is translated by its own transform,
/// duplicates dropped, remaining distinct values resolved by `policy`.
CompiledRule make_merge(std::string id, std::vector<ElementRef> sources, ElementRef target, ConflictPolicy policy,
                        std::vector<Transform> translations, const MappingContext& ctx);

/// Rules whose source/target pairs rely on `c`.
std::vector<std::string> rules_depending_on(const MappingSet& set, const Correspondence& c);

// ---- value semantics -------------------------------------------------------

/// IDENTITY, CAST, TRANSLATE, SCALE and CONSTANT on one value. The result is
/// coerced to `target` when given and possible. Throws Error(TranslateMiss).
Value apply_scalar(const Transform& t, const Value& v, const DataType* target);

/// AGGREGATE fold over one group. NULLs are skipped except by COUNT with
/// count_nulls. MEAN is exact and rounds half-to-even to the target scale.
Value fold(const Transform& t, const std::vector<Value>& values, const DataType* target);

/// SPLIT: (target property, extracted text) per part; missing pieces are NULL.
std::vector<std::pair<std::string, Value>> apply_split(const Transform& t, const Value& v);

struct Contribution {
  ElementRef source;
  Value value;
};

struct MergeOutcome {
  Value value;
  std::vector<Value> distinct;  // distinct non-NULL candidates after dedup
  bool conflict = false;        // more than one distinct candidate
};

/// Dedup then policy. `declared` is the rule's source order (FIRST_NON_NULL).
/// Throws Error(PolicyFail) for FAIL with distinct values remaining.
MergeOutcome resolve_conflict(const ConflictPolicy& policy, const std::vector<Contribution>& candidates,
                              const std::vector<ElementRef>& declared, const DataType* target);

// ---- paths -----------------------------------------------------------------

struct MappingPath {
  std::vector<std::string> rules;
  ElementRef from;
  ElementRef to;

  friend bool operator==(const MappingPath&, const MappingPath&) = default;
};

/// True when `next` consumes what `prev` produces.
bool composable(const MappingRule& prev, const MappingRule& next);

/// Simple rule chains from `from` to `to` of length <= max_length, shortest
/// first, then by rule id sequence. from == to yields nothing.
std::vector<MappingPath> enumerate_paths(const MappingSet& set, const ElementRef& from, const ElementRef& to,
                                         int max_length = 4);

/// Throws Error(NonComposable) when the path's rules do not chain from
/// `from` to `to`.
void check_path(const MappingSet& set, const MappingPath& path);

/// Pushes one value through the chain, each rule acting on a single element
/// (aggregates fold a singleton group).
Value evaluate_path(const MappingSet& set, const MappingPath& path, const MappingContext& ctx, const Value& input);

struct Counterexample {
  std::string element;
  std::string via_p1;
  std::string via_p2;

  friend bool operator==(const Counterexample&, const Counterexample&) = default;
};

struct CommutativityResult {
  bool commutes = true;
  bool vacuous = false;  // no witness element was applicable
  std::size_t checked = 0;
  std::vector<Counterexample> counterexamples;  // first 100, by element id

  friend bool operator==(const CommutativityResult&, const CommutativityResult&) = default;
};

/// Evaluates both chains on every witness instance of the `from` node and
/// compares the results exactly. `parallel` selects the OpenMP kernel.
CommutativityResult check_commutativity(const MappingSet& set, const MappingPath& p1, const MappingPath& p2,
                                        const InstanceGraph& witness, const MappingContext& ctx,
                                        bool parallel = true);

// ---- JSON (.map.json) ------------------------------------------------------

Json to_json(const Transform& t);
Transform transform_from_json(const JsonCursor& c);
Json to_json(const MappingRule& r);
MappingRule rule_from_json(const JsonCursor& c);
Json to_json(const MappingSet& s);
MappingSet mapping_set_from_json(const JsonCursor& c);
Json to_json(const MappingPath& p);
MappingPath path_from_json(const JsonCursor& c);
Json to_json(const CommutativityResult& r);
Json to_json(const Diagnostic& d);

}  // namespace tgm
