#include "tgm/mapper.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "tgm/error.hpp"

namespace tgm {

std::string_view to_string(TransformKind k) {
  switch (k) {
    case TransformKind::Identity: return "IDENTITY";
    case TransformKind::Cast: return "CAST";
    case TransformKind::Translate: return "TRANSLATE";
    case TransformKind::Scale: return "SCALE";
    case TransformKind::Aggregate: return "AGGREGATE";
    case TransformKind::Split: return "SPLIT";
    case TransformKind::Constant: return "CONSTANT";
  }
  return "?";
}

std::string_view to_string(AggregateFn f) {
  switch (f) {
    case AggregateFn::Sum: return "SUM";
    case AggregateFn::Count: return "COUNT";
    case AggregateFn::Mean: return "MEAN";
    case AggregateFn::Min: return "MIN";
    case AggregateFn::Max: return "MAX";
  }
  return "?";
}

std::string_view to_string(RuleKind k) {
  switch (k) {
    case RuleKind::OneToOne: return "ONE_TO_ONE";
    case RuleKind::ManyToOne: return "MANY_TO_ONE";
    case RuleKind::OneToMany: return "ONE_TO_MANY";
  }
  return "?";
}

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Priority: return "PRIORITY";
    case PolicyKind::Mean: return "MEAN";
    case PolicyKind::FirstNonNull: return "FIRST_NON_NULL";
    case PolicyKind::Fail: return "FAIL";
  }
  return "?";
}

namespace {

// Equality used for dedup and commutativity: strings compare under NFC,
// decimals ignore trailing zeros.
bool same_value(const Value& a, const Value& b) {
  const auto* sa = std::get_if<std::string>(&a);
  const auto* sb = std::get_if<std::string>(&b);
  if (sa && sb) return *sa == *sb || nfc(*sa) == nfc(*sb);
  return values_equal(a, b);
}

std::vector<std::string> code_points(std::string_view s) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = s[i];
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<Rational> as_rational(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return Rational(*i);
  if (const auto* d = std::get_if<Decimal>(&v)) return Rational::from_decimal(*d);
  return std::nullopt;
}

int scale_of(const Value& v) {
  if (const auto* d = std::get_if<Decimal>(&v)) return d->scale();
  return 0;
}

// Exact rational rendered in the target's numeric shape.
Value from_rational(const Rational& r, const DataType* target, int natural_scale) {
  if (target && target->kind == TypeKind::Integer) return r.to_decimal(0).units();
  if (target && target->kind == TypeKind::Decimal) return r.to_decimal(target->scale);
  if (r.is_integer()) return r.num();
  return r.to_decimal(natural_scale);
}

Value finish(Value v, const DataType* target) {
  if (!target || is_null(v)) return v;
  if (auto c = coerce(v, *target)) return *c;
  return v;
}

}  // namespace

// ---- transforms ------------------------------------------------------------

Transform Transform::cast(DataType t) {
  Transform x;
  x.kind = TransformKind::Cast;
  x.cast_to = std::move(t);
  return x;
}

Transform Transform::translate(std::vector<std::pair<Value, Value>> table, std::optional<Value> fallback) {
  Transform x;
  x.kind = TransformKind::Translate;
  x.table = std::move(table);
  x.fallback = std::move(fallback);
  return x;
}

Transform Transform::scale(Rational factor, Rational offset) {
  Transform x;
  x.kind = TransformKind::Scale;
  x.factor = factor;
  x.offset = offset;
  return x;
}

Transform Transform::aggregate(AggregateFn fn, std::vector<std::string> group_by) {
  Transform x;
  x.kind = TransformKind::Aggregate;
  x.fn = fn;
  x.group_by = std::move(group_by);
  return x;
}

Transform Transform::split(std::vector<SplitPart> parts) {
  Transform x;
  x.kind = TransformKind::Split;
  x.parts = std::move(parts);
  return x;
}

Transform Transform::constant_value(Value v) {
  Transform x;
  x.kind = TransformKind::Constant;
  x.constant = std::move(v);
  return x;
}

void Transform::check() const {
  if (kind == TransformKind::Translate) {
    for (std::size_t i = 0; i < table.size(); ++i) {
      for (std::size_t j = i + 1; j < table.size(); ++j) {
        if (same_value(table[i].first, table[j].first)) {
          throw Error(ErrorCode::InvalidArgument, "duplicate translation key '" + render(table[i].first) + "'");
        }
      }
    }
  }
  if (kind == TransformKind::Cast && !cast_to) throw Error(ErrorCode::InvalidArgument, "CAST without a type");
  if (kind == TransformKind::Split) {
    if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "SPLIT needs at least one part");
    std::vector<std::pair<int, int>> ranges;
    std::set<std::string> names;
    for (const auto& p : parts) {
      if (!names.insert(p.target).second) {
        throw Error(ErrorCode::InvalidArgument, "SPLIT part '" + p.target + "' listed twice");
      }
      if (p.fixed_width()) {
        if (p.end <= p.begin) throw Error(ErrorCode::InvalidArgument, "empty fixed-width range for " + p.target);
        ranges.emplace_back(p.begin, p.end);
      } else {
        if (p.delimiter.empty()) throw Error(ErrorCode::InvalidArgument, "SPLIT part needs a delimiter or a range");
        if (p.index < 0) throw Error(ErrorCode::InvalidArgument, "negative SPLIT index");
      }
    }
    std::sort(ranges.begin(), ranges.end());
    for (std::size_t i = 1; i < ranges.size(); ++i) {
      if (ranges[i].first < ranges[i - 1].second) {
        throw Error(ErrorCode::InvalidArgument, "overlapping fixed-width SPLIT ranges");
      }
    }
  }
}

bool operator==(const Transform& a, const Transform& b) {
  auto values_eq = [](const std::vector<std::pair<Value, Value>>& x, const std::vector<std::pair<Value, Value>>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!values_equal(x[i].first, y[i].first) || !values_equal(x[i].second, y[i].second)) return false;
    }
    return true;
  };
  bool fallback_eq = a.fallback.has_value() == b.fallback.has_value() &&
                     (!a.fallback || values_equal(*a.fallback, *b.fallback));
  return a.kind == b.kind && a.cast_to == b.cast_to && values_eq(a.table, b.table) && fallback_eq &&
         a.factor == b.factor && a.offset == b.offset && a.fn == b.fn && a.group_by == b.group_by &&
         a.count_nulls == b.count_nulls && a.parts == b.parts && values_equal(a.constant, b.constant);
}

RuleKind MappingRule::rule_kind() const {
  if (kind) return *kind;
  if (transform.kind == TransformKind::Split) return RuleKind::OneToMany;
  if (sources.size() > 1 || transform.kind == TransformKind::Aggregate) return RuleKind::ManyToOne;
  return RuleKind::OneToOne;
}

const MappingRule* MappingSet::find(std::string_view id) const {
  for (const auto& r : rules) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

// ---- value semantics -------------------------------------------------------

Value apply_scalar(const Transform& t, const Value& v, const DataType* target) {
  switch (t.kind) {
    case TransformKind::Identity: return finish(v, target);
    case TransformKind::Constant: return finish(t.constant, target);
    case TransformKind::Cast: {
      if (is_null(v)) return v;
      auto c = coerce(v, *t.cast_to);
      if (!c) {
        // Text forms of other kinds: go through the rendered string.
        c = coerce(Value{render(v)}, *t.cast_to);
      }
      if (!c) throw Error(ErrorCode::TypeMismatch, "cannot cast '" + render(v) + "' to " + t.cast_to->describe());
      return finish(*c, target);
    }
    case TransformKind::Translate: {
      if (is_null(v)) return v;
      for (const auto& [from, to] : t.table) {
        if (same_value(from, v)) return finish(to, target);
      }
      // Keys given as text match non-string values by their rendering.
      if (!std::holds_alternative<std::string>(v)) {
        for (const auto& [from, to] : t.table) {
          const auto* s = std::get_if<std::string>(&from);
          if (s && *s == render(v)) return finish(to, target);
        }
      }
      if (t.fallback) return finish(*t.fallback, target);
      throw Error(ErrorCode::TranslateMiss, "no translation for '" + render(v) + "'");
    }
    case TransformKind::Scale: {
      if (is_null(v)) return v;
      auto r = as_rational(v);
      if (!r) throw Error(ErrorCode::TypeMismatch, "SCALE on non-numeric value '" + render(v) + "'");
      return from_rational(*r * t.factor + t.offset, target, scale_of(v) + 6);
    }
    case TransformKind::Aggregate: return fold(t, {v}, target);
    case TransformKind::Split: break;
  }
  throw Error(ErrorCode::InvalidArgument, "SPLIT is not a scalar transform");
}

Value fold(const Transform& t, const std::vector<Value>& values, const DataType* target) {
  std::vector<const Value*> present;
  for (const auto& v : values) {
    if (!is_null(v)) present.push_back(&v);
  }
  if (t.fn == AggregateFn::Count) {
    auto n = static_cast<std::int64_t>(t.count_nulls ? values.size() : present.size());
    return finish(Value{n}, target);
  }
  if (present.empty()) return {};
  switch (t.fn) {
    case AggregateFn::Sum:
    case AggregateFn::Mean: {
      Rational sum(0);
      int scale = 0;
      for (const auto* v : present) {
        auto r = as_rational(*v);
        if (!r) throw Error(ErrorCode::TypeMismatch, std::string(to_string(t.fn)) + " over non-numeric '" +
                                                         render(*v) + "'");
        sum = sum + *r;
        scale = std::max(scale, scale_of(*v));
      }
      if (t.fn == AggregateFn::Sum) return from_rational(sum, target, scale);
      return from_rational(sum / Rational(static_cast<std::int64_t>(present.size())), target, scale + 6);
    }
    case AggregateFn::Min:
    case AggregateFn::Max: {
      const Value* best = present.front();
      for (const auto* v : present) {
        auto c = compare_values(*v, *best);
        if (t.fn == AggregateFn::Min ? c < 0 : c > 0) best = v;
      }
      return finish(*best, target);
    }
    case AggregateFn::Count: break;
  }
  return {};
}

std::vector<std::pair<std::string, Value>> apply_split(const Transform& t, const Value& v) {
  std::vector<std::pair<std::string, Value>> out;
  std::string text = is_null(v) ? "" : render(v);
  for (const auto& p : t.parts) {
    Value piece;
    if (!is_null(v)) {
      std::string s;
      bool found = false;
      if (p.fixed_width()) {
        auto cps = code_points(text);
        for (int i = p.begin; i < p.end && i < static_cast<int>(cps.size()); ++i) s += cps[i];
        found = true;
      } else {
        std::size_t start = 0;
        for (int k = 0;; ++k) {
          auto pos = text.find(p.delimiter, start);
          if (k == p.index) {
            s = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
            found = true;
            break;
          }
          if (pos == std::string::npos) break;
          start = pos + p.delimiter.size();
        }
      }
      s = trim(s);
      if (found && !s.empty()) piece = s;
    }
    out.emplace_back(p.target, std::move(piece));
  }
  return out;
}

MergeOutcome resolve_conflict(const ConflictPolicy& policy, const std::vector<Contribution>& candidates,
                              const std::vector<ElementRef>& declared, const DataType* target) {
  MergeOutcome out;
  for (const auto& c : candidates) {
    if (is_null(c.value)) continue;
    bool seen = std::any_of(out.distinct.begin(), out.distinct.end(),
                            [&](const Value& d) { return same_value(d, c.value); });
    if (!seen) out.distinct.push_back(c.value);
  }
  std::sort(out.distinct.begin(), out.distinct.end(), ValueLess{});
  if (out.distinct.empty()) return out;
  if (out.distinct.size() == 1) {
    out.value = finish(out.distinct.front(), target);
    return out;
  }
  out.conflict = true;

  // Smallest value contributed by `ref`, so arrival order never matters.
  auto value_from = [&](const ElementRef& ref) -> std::optional<Value> {
    std::optional<Value> best;
    for (const auto& c : candidates) {
      if (c.source != ref || is_null(c.value)) continue;
      if (!best || compare_values(c.value, *best) < 0) best = c.value;
    }
    return best;
  };
  auto first_in = [&](const std::vector<ElementRef>& order) -> std::optional<Value> {
    for (const auto& ref : order) {
      if (auto v = value_from(ref)) return v;
    }
    return std::nullopt;
  };

  std::string listing;
  for (std::size_t i = 0; i < out.distinct.size(); ++i) listing += (i ? ", " : "") + render(out.distinct[i]);
  switch (policy.kind) {
    case PolicyKind::Priority: {
      auto v = first_in(policy.order);
      if (!v) v = first_in(declared);
      out.value = finish(v ? *v : out.distinct.front(), target);
      break;
    }
    case PolicyKind::FirstNonNull: {
      auto v = first_in(declared);
      out.value = finish(v ? *v : out.distinct.front(), target);
      break;
    }
    case PolicyKind::Mean:
      out.value = fold(Transform::aggregate(AggregateFn::Mean), out.distinct, target);
      break;
    case PolicyKind::Fail:
      throw Error(ErrorCode::PolicyFail, "conflicting values {" + listing + "}");
  }
  return out;
}

// ---- compilation -----------------------------------------------------------

const TypedGraphSchema* MappingContext::schema(std::string_view name) const {
  for (const auto* s : schemas) {
    if (s && s->name == name) return s;
  }
  return nullptr;
}

const DataType* MappingContext::type_of(const ElementRef& ref) const {
  if (ref.kind != ElementKind::Property) return nullptr;
  const auto* s = schema(ref.schema);
  const auto* n = s ? s->node_by_label(ref.node) : nullptr;
  const auto* p = n ? n->property(ref.property) : nullptr;
  return p ? &p->type : nullptr;
}

namespace {

[[noreturn]] void mismatch(const std::string& what) { throw Error(ErrorCode::TypeMismatch, what); }

void resolve(const ElementRef& ref, const MappingContext& ctx) {
  const auto* s = ctx.schema(ref.schema);
  if (!s) throw Error(ErrorCode::UnresolvedReference, "unknown schema in " + ref.str());
  if (!resolves(ref, *s)) throw Error(ErrorCode::UnresolvedReference, ref.str() + " does not resolve");
}

bool compatible(const DataType& a, const DataType& b) { return type_compatibility(a, b) > 0; }

// Coerces a table/constant value to `t`, failing with TYPE_MISMATCH.
Value typed(const Value& v, const DataType* t, const std::string& what) {
  if (!t || is_null(v)) return v;
  if (auto c = coerce(v, *t)) return *c;
  if (auto c = coerce(Value{render(v)}, *t)) return *c;
  mismatch(what + " '" + render(v) + "' does not fit " + t->describe());
}

// `in == nullptr` means a node-level source, which contributes the value 1.
void check_scalar(Transform& t, const DataType* in, const DataType* out, const std::string& where) {
  auto in_name = [&] { return in ? in->describe() : std::string("node count"); };
  switch (t.kind) {
    case TransformKind::Identity:
      if (!out) return;
      if (in ? !compatible(*in, *out) : !out->is_numeric()) {
        mismatch(where + ": IDENTITY from " + in_name() + " to " + out->describe());
      }
      return;
    case TransformKind::Cast:
      if (!t.cast_to->is_primitive() && t.cast_to->kind != TypeKind::Enumeration) {
        mismatch(where + ": CAST to a composite type");
      }
      if (out && !compatible(*t.cast_to, *out)) {
        mismatch(where + ": CAST to " + t.cast_to->describe() + " feeds " + out->describe());
      }
      return;
    case TransformKind::Translate:
      for (auto& [from, to] : t.table) {
        from = typed(from, in, where + ": translation key");
        to = typed(to, out, where + ": translation value");
      }
      if (t.fallback) *t.fallback = typed(*t.fallback, out, where + ": translation default");
      t.check();
      return;
    case TransformKind::Scale:
      if ((in && !in->is_numeric()) || (out && !out->is_numeric())) {
        mismatch(where + ": SCALE from " + in_name() + " to " + (out ? out->describe() : "?"));
      }
      return;
    case TransformKind::Constant:
      t.constant = typed(t.constant, out, where + ": constant");
      return;
    case TransformKind::Aggregate:
      if (!out) return;
      switch (t.fn) {
        case AggregateFn::Sum:
        case AggregateFn::Mean:
          if ((in && !in->is_numeric()) || !out->is_numeric()) {
            mismatch(where + ": " + std::string(to_string(t.fn)) + " from " + in_name() + " to " + out->describe());
          }
          return;
        case AggregateFn::Count:
          if (!out->is_numeric()) mismatch(where + ": COUNT into " + out->describe());
          return;
        case AggregateFn::Min:
        case AggregateFn::Max:
          if (in ? !compatible(*in, *out) : !out->is_numeric()) {
            mismatch(where + ": " + std::string(to_string(t.fn)) + " from " + in_name() + " to " + out->describe());
          }
          return;
      }
      return;
    case TransformKind::Split:
      mismatch(where + ": SPLIT is not a per-value transform");
  }
}

bool backed(const ElementRef& s, const ElementRef& t, const CorrespondenceSet* set) {
  if (!set) return false;
  for (const auto* c : set->accepted()) {
    if (c->source.covers(s) && c->target.covers(t)) return true;
  }
  return false;
}

}  // namespace

CompiledRule compile_rule(const MappingRule& draft, const MappingContext& ctx) {
  CompiledRule out;
  MappingRule& r = out.rule;
  r = draft;
  const std::string where = "rule " + r.id;
  if (r.id.empty()) throw Error(ErrorCode::InvalidArgument, "rule without id");
  if (r.sources.empty()) throw Error(ErrorCode::ArityMismatch, where + ": no sources");
  for (std::size_t i = 0; i < r.sources.size(); ++i) {
    resolve(r.sources[i], ctx);
    for (std::size_t j = 0; j < i; ++j) {
      if (r.sources[j] == r.sources[i]) {
        throw Error(ErrorCode::InvalidArgument, where + ": source " + r.sources[i].str() + " listed twice");
      }
    }
  }
  resolve(r.target, ctx);
  r.transform.check();

  // Kind from arity.
  RuleKind derived = r.transform.kind == TransformKind::Split                              ? RuleKind::OneToMany
                     : r.sources.size() > 1 || r.transform.kind == TransformKind::Aggregate ? RuleKind::ManyToOne
                                                                                             : RuleKind::OneToOne;
  if (r.kind && *r.kind != derived) {
    throw Error(ErrorCode::ArityMismatch, where + ": declared " + std::string(to_string(*r.kind)) + " but " +
                                              std::to_string(r.sources.size()) + " source(s) with " +
                                              std::string(to_string(r.transform.kind)) + " is " +
                                              std::string(to_string(derived)));
  }
  r.kind = derived;
  if (r.reliability < 1 || r.reliability > 3) {
    throw Error(ErrorCode::InvalidArgument, where + ": reliability must be 1..3");
  }
  if (!r.source_transforms.empty() && r.source_transforms.size() != r.sources.size()) {
    throw Error(ErrorCode::ArityMismatch, where + ": " + std::to_string(r.source_transforms.size()) +
                                              " source transforms for " + std::to_string(r.sources.size()) +
                                              " sources");
  }
  for (const auto& st : r.source_transforms) {
    if (st.kind == TransformKind::Aggregate || st.kind == TransformKind::Split) {
      throw Error(ErrorCode::InvalidArgument, where + ": per-source transforms must be per-value");
    }
  }
  if (r.policy.kind == PolicyKind::Priority) {
    if (r.policy.order.empty()) throw Error(ErrorCode::InvalidArgument, where + ": PRIORITY without order");
    for (const auto& p : r.policy.order) {
      if (std::find(r.sources.begin(), r.sources.end(), p) == r.sources.end()) {
        throw Error(ErrorCode::InvalidArgument, where + ": PRIORITY names " + p.str() + ", not a source");
      }
    }
  }

  const DataType* out_type = ctx.type_of(r.target);
  const auto* target_schema = ctx.schema(r.target.schema);
  const auto* target_node = r.target.kind == ElementKind::Edge ? nullptr : target_schema->node_by_label(r.target.node);

  if (r.target.kind == ElementKind::Edge) {
    if (r.sources.size() != 1) throw Error(ErrorCode::ArityMismatch, where + ": edge rules take one source");
    if (r.sources[0].kind == ElementKind::Property) mismatch(where + ": edge target fed by a property");
    if (r.transform.kind != TransformKind::Identity) mismatch(where + ": edge rules only support IDENTITY");
  } else {
    for (const auto& s : r.sources) {
      if (s.kind == ElementKind::Edge) mismatch(where + ": edge source " + s.str() + " feeds a node element");
    }
  }

  if (r.transform.kind == TransformKind::Split) {
    if (r.sources.size() != 1) throw Error(ErrorCode::ArityMismatch, where + ": SPLIT takes exactly one source");
    if (r.target.kind != ElementKind::Node) {
      throw Error(ErrorCode::ArityMismatch, where + ": SPLIT targets a node whose properties receive the parts");
    }
    const auto* in = ctx.type_of(r.sources[0]);
    if (!in || in->kind != TypeKind::String) mismatch(where + ": SPLIT needs a string source");
    for (const auto& p : r.transform.parts) {
      const auto* prop = target_node->property(p.target);
      if (!prop) throw Error(ErrorCode::UnresolvedReference, where + ": SPLIT part " + p.target + " is not a property of " + target_node->label);
      if (!prop->type.is_primitive() && prop->type.kind != TypeKind::Enumeration) {
        mismatch(where + ": SPLIT part " + p.target + " has a composite type");
      }
    }
  } else if (r.target.kind == ElementKind::Node) {
    if (r.transform.kind != TransformKind::Identity && r.transform.kind != TransformKind::Aggregate) {
      mismatch(where + ": node targets accept IDENTITY or AGGREGATE only");
    }
  }
  if (r.transform.kind == TransformKind::Aggregate) {
    for (const auto& g : r.transform.group_by) {
      if (!target_node || !target_node->property(g)) {
        throw Error(ErrorCode::UnresolvedReference, where + ": group-by " + g + " is not a target property");
      }
    }
  }

  if (r.via) {
    resolve(*r.via, ctx);
    if (r.via->kind != ElementKind::Edge) throw Error(ErrorCode::InvalidArgument, where + ": via must name an edge");
    if (r.sources.size() != 1) throw Error(ErrorCode::ArityMismatch, where + ": via takes exactly one source");
    const auto* vs = ctx.schema(r.via->schema);
    const auto* e = vs->edge(r.via->edge);
    const auto* owner = vs->node_by_label(r.sources[0].node);
    if (r.via->schema != r.sources[0].schema || !owner ||
        std::none_of(e->endpoints.begin(), e->endpoints.end(), [&](const Endpoint& p) { return p.node == owner->id; }) ||
        e->endpoints.size() != 2) {
      throw Error(ErrorCode::InvalidArgument, where + ": via edge must be a binary edge at the source's node");
    }
  }

  if (r.target.kind != ElementKind::Edge && r.transform.kind != TransformKind::Split) {
    for (std::size_t i = 0; i < r.sources.size(); ++i) {
      const DataType* in = ctx.type_of(r.sources[i]);
      if (!r.source_transforms.empty()) {
        check_scalar(r.source_transforms[i], in, out_type, where + " source " + r.sources[i].str());
        in = out_type;
      }
      if (r.transform.kind == TransformKind::Translate || r.transform.kind == TransformKind::Constant) {
        check_scalar(r.transform, in, out_type, where);
        break;  // table and constant are typed once
      }
      check_scalar(r.transform, in, out_type, where);
    }
  }

  for (const auto& s : r.sources) {
    if (!backed(s, r.target, ctx.correspondences)) {
      out.warnings.push_back({"UNMATCHED_RULE", r.id,
                              "no accepted correspondence backs " + s.str() + " -> " + r.target.str()});
    }
  }
  return out;
}

CompileReport compile_rules(const MappingSet& drafts, const MappingContext& ctx) {
  CompileReport rep;
  rep.set.keys = drafts.keys;
  std::set<std::string> ids;
  for (const auto& d : drafts.rules) {
    if (!ids.insert(d.id).second) {
      rep.errors.push_back({std::string(to_string(ErrorCode::InvalidArgument)), d.id, "duplicate rule id"});
      continue;
    }
    try {
      auto c = compile_rule(d, ctx);
      rep.set.rules.push_back(std::move(c.rule));
      rep.warnings.insert(rep.warnings.end(), c.warnings.begin(), c.warnings.end());
    } catch (const Error& e) {
      rep.errors.push_back({std::string(to_string(e.code())), d.id, e.what()});
    }
  }
  for (const auto& [label, props] : drafts.keys) {
    bool found = false;
    for (const auto* s : ctx.schemas) {
      const auto* n = s ? s->node_by_label(label) : nullptr;
      if (!n) continue;
      found = std::all_of(props.begin(), props.end(), [&](const std::string& p) { return n->property(p); });
      if (found) break;
    }
    if (!found || props.empty()) {
      rep.errors.push_back({std::string(to_string(ErrorCode::UnresolvedReference)), "",
                            "entity key for " + label + " does not resolve"});
    }
  }
  return rep;
}

CompiledRule make_merge(std::string id, std::vector<ElementRef> sources, ElementRef target, ConflictPolicy policy,
                        std::vector<Transform> translations, const MappingContext& ctx) {
  if (sources.size() < 2) throw Error(ErrorCode::ArityMismatch, "merge of " + id + " needs at least two sources");
  MappingRule r;
  r.id = std::move(id);
  r.sources = std::move(sources);
  r.target = std::move(target);
  r.policy = std::move(policy);
  r.source_transforms = std::move(translations);
  return compile_rule(r, ctx);
}

std::vector<std::string> rules_depending_on(const MappingSet& set, const Correspondence& c) {
  std::vector<std::string> out;
  for (const auto& r : set.rules) {
    bool uses = std::any_of(r.sources.begin(), r.sources.end(), [&](const ElementRef& s) {
      return c.source.covers(s) && c.target.covers(r.target);
    });
    if (uses) out.push_back(r.id);
  }
  return out;
}

// ---- paths -----------------------------------------------------------------

namespace {

bool feeds(const ElementRef& produced, const ElementRef& consumed) {
  return produced == consumed || produced.covers(consumed) || consumed.covers(produced);
}

// A rule ends a path at `to` when its target lies inside `to`, or when it
// is a SPLIT with a part writing `to`.
bool produces(const MappingRule& r, const ElementRef& to) {
  if (to.covers(r.target)) return true;
  if (r.transform.kind != TransformKind::Split || to.kind != ElementKind::Property || !r.target.covers(to)) return false;
  return std::any_of(r.transform.parts.begin(), r.transform.parts.end(),
                     [&](const SplitPart& p) { return p.target == to.property; });
}

}  // namespace

bool composable(const MappingRule& prev, const MappingRule& next) {
  return std::any_of(next.sources.begin(), next.sources.end(),
                     [&](const ElementRef& s) { return feeds(prev.target, s); });
}

std::vector<MappingPath> enumerate_paths(const MappingSet& set, const ElementRef& from, const ElementRef& to,
                                         int max_length) {
  if (max_length < 1) throw Error(ErrorCode::InvalidArgument, "max path length must be >= 1");
  std::vector<MappingPath> out;
  if (from == to) return out;
  std::vector<const MappingRule*> rules;
  for (const auto& r : set.rules) rules.push_back(&r);
  std::sort(rules.begin(), rules.end(), [](const MappingRule* a, const MappingRule* b) { return a->id < b->id; });

  std::vector<const MappingRule*> chain;
  std::set<std::string> used;
  std::function<void()> extend = [&] {
    const MappingRule* last = chain.back();
    if (produces(*last, to)) {
      MappingPath p{{}, from, to};
      for (const auto* r : chain) p.rules.push_back(r->id);
      out.push_back(std::move(p));
    }
    if (static_cast<int>(chain.size()) == max_length) return;
    for (const auto* r : rules) {
      if (used.count(r->id) || !composable(*last, *r)) continue;
      chain.push_back(r);
      used.insert(r->id);
      extend();
      used.erase(r->id);
      chain.pop_back();
    }
  };
  for (const auto* r : rules) {
    bool starts = std::any_of(r->sources.begin(), r->sources.end(), [&](const ElementRef& s) { return from.covers(s); });
    if (!starts) continue;
    chain = {r};
    used = {r->id};
    extend();
  }
  std::sort(out.begin(), out.end(), [](const MappingPath& a, const MappingPath& b) {
    if (a.rules.size() != b.rules.size()) return a.rules.size() < b.rules.size();
    return a.rules < b.rules;
  });
  return out;
}

void check_path(const MappingSet& set, const MappingPath& path) {
  auto fail = [&](const std::string& why) { throw Error(ErrorCode::NonComposable, why); };
  if (path.rules.empty()) fail("empty path");
  std::vector<const MappingRule*> rules;
  std::set<std::string> seen;
  for (const auto& id : path.rules) {
    const auto* r = set.find(id);
    if (!r) fail("unknown rule " + id);
    if (!seen.insert(id).second) fail("rule " + id + " repeats");
    rules.push_back(r);
  }
  if (std::none_of(rules[0]->sources.begin(), rules[0]->sources.end(),
                   [&](const ElementRef& s) { return path.from.covers(s); })) {
    fail("rule " + rules[0]->id + " does not read " + path.from.str());
  }
  for (std::size_t i = 1; i < rules.size(); ++i) {
    if (!composable(*rules[i - 1], *rules[i])) fail("rule " + rules[i]->id + " does not consume " + rules[i - 1]->id);
  }
  if (!produces(*rules.back(), path.to)) fail("rule " + rules.back()->id + " does not produce " + path.to.str());
}

namespace {

// Index of the source of `r` that receives the value carried by `current`.
std::size_t matching_source(const MappingRule& r, const ElementRef& current, bool first) {
  for (std::size_t i = 0; i < r.sources.size(); ++i) {
    if (first ? current.covers(r.sources[i]) : feeds(current, r.sources[i])) return i;
  }
  throw Error(ErrorCode::NonComposable, "rule " + r.id + " does not consume " + current.str());
}

// Value a witness instance feeds into the first rule of `path`.
Value path_input(const MappingSet& set, const MappingPath& path, const InstanceNode& x) {
  const auto* r = set.find(path.rules.front());
  const auto& s = r->sources[matching_source(*r, path.from, true)];
  if (s.kind == ElementKind::Property) return x.get(s.property);
  return std::int64_t{1};
}

}  // namespace

Value evaluate_path(const MappingSet& set, const MappingPath& path, const MappingContext& ctx, const Value& input) {
  check_path(set, path);
  Value v = input;
  ElementRef current = path.from;
  for (std::size_t k = 0; k < path.rules.size(); ++k) {
    const auto& r = *set.find(path.rules[k]);
    std::size_t i = matching_source(r, current, k == 0);
    const DataType* out = ctx.type_of(r.target);
    if (!r.source_transforms.empty()) v = apply_scalar(r.source_transforms[i], v, out);
    if (r.transform.kind == TransformKind::Split) {
      // Follow the part the next step consumes (or the path end).
      ElementRef next = path.to;
      if (k + 1 < path.rules.size()) {
        for (const auto& s : set.find(path.rules[k + 1])->sources) {
          if (r.target.covers(s)) next = s;
        }
      }
      Value picked;
      for (auto& [name, val] : apply_split(r.transform, v)) {
        if (next.kind == ElementKind::Property && name == next.property) picked = val;
      }
      v = finish(picked, ctx.type_of(next));
      current = next;
      continue;
    }
    v = r.transform.kind == TransformKind::Aggregate ? fold(r.transform, {v}, out) : apply_scalar(r.transform, v, out);
    current = r.target;
  }
  return v;
}

namespace {

struct ChainResult {
  bool applicable = false;
  bool ok = false;
  Value value;
  std::string text;
};

ChainResult run_chain(const MappingSet& set, const MappingPath& p, const MappingContext& ctx, const InstanceNode& x) {
  ChainResult r;
  Value in = path_input(set, p, x);
  if (is_null(in)) return r;
  r.applicable = true;
  try {
    r.value = evaluate_path(set, p, ctx, in);
    r.ok = true;
    r.text = render(r.value);
  } catch (const Error& e) {
    r.text = std::string("<") + e.what() + ">";
  }
  return r;
}

}  // namespace

CommutativityResult check_commutativity(const MappingSet& set, const MappingPath& p1, const MappingPath& p2,
                                        const InstanceGraph& witness, const MappingContext& ctx, bool parallel) {
  check_path(set, p1);
  check_path(set, p2);
  if (!(p1.from == p2.from) || !(p1.to == p2.to)) {
    throw Error(ErrorCode::NonComposable, "paths do not share endpoints");
  }
  const auto* schema = ctx.schema(p1.from.schema);
  if (!schema) throw Error(ErrorCode::UnknownSchema, "no schema " + p1.from.schema);
  CommutativityResult res;
  if (witness.empty()) {
    res.vacuous = true;
    return res;
  }
  if (witness.schema_ref != schema->name) {
    throw Error(ErrorCode::UnknownSchema, "witness is typed by '" + witness.schema_ref + "', path starts in '" +
                                              schema->name + "'");
  }
  auto report = validate_instance(witness, *schema);
  if (!report.empty()) {
    throw Error(ErrorCode::InvalidArgument, "witness does not validate: " + report.front().element + ": " +
                                                report.front().message);
  }
  const auto* node = schema->node_by_label(p1.from.node);
  auto xs = witness.nodes_of(node->id);
  std::sort(xs.begin(), xs.end(), [](const InstanceNode* a, const InstanceNode* b) { return a->id < b->id; });

  struct Outcome {
    bool applicable = false, equal = true;
    std::string a, b;
  };
  std::vector<Outcome> outcomes(xs.size());
  auto body = [&](std::size_t i) {
    auto r1 = run_chain(set, p1, ctx, *xs[i]);
    auto r2 = run_chain(set, p2, ctx, *xs[i]);
    Outcome& o = outcomes[i];
    o.applicable = r1.applicable && r2.applicable;
    if (!o.applicable) return;
    o.equal = r1.ok && r2.ok && same_value(r1.value, r2.value);
    o.a = r1.text;
    o.b = r2.text;
  };
  const long n = static_cast<long>(xs.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (long i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  } else {
    for (long i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto& o = outcomes[i];
    if (!o.applicable) continue;
    ++res.checked;
    if (o.equal) continue;
    res.commutes = false;
    if (res.counterexamples.size() < 100) res.counterexamples.push_back({xs[i]->id, o.a, o.b});
  }
  res.vacuous = res.checked == 0;
  return res;
}

// ---- JSON ------------------------------------------------------------------

namespace {

Json rational_json(const Rational& r) {
  if (r.is_integer()) return r.num();
  return r.to_string();
}

Rational rational_from(const JsonCursor& c) {
  const Json& j = c.json();
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  std::string text = j.is_number() ? j.dump() : j.is_string() ? j.get<std::string>() : std::string();
  auto r = Rational::parse(text);
  if (!r) c.fail("expected an exact rational such as 3/2 or 1.25");
  return *r;
}

template <typename E>
E parse_enum(const JsonCursor& c, std::initializer_list<E> all) {
  std::string s = c.str();
  for (E e : all) {
    if (to_string(e) == s) return e;
  }
  c.fail("unknown value '" + s + "'");
}

Json ref_json(const ElementRef& r) { return r.str(); }

ElementRef ref_from(const JsonCursor& c) {
  try {
    return ElementRef::parse(c.str());
  } catch (const Error& e) {
    c.fail(e.what());
  }
}

std::vector<ElementRef> refs_from(const JsonCursor& c) {
  std::vector<ElementRef> out;
  for (std::size_t i = 0; i < c.array().size(); ++i) out.push_back(ref_from(c.at(i)));
  return out;
}

}  // namespace

Json to_json(const Transform& t) {
  Json j;
  j["kind"] = std::string(to_string(t.kind));
  switch (t.kind) {
    case TransformKind::Identity: break;
    case TransformKind::Cast: j["type"] = to_json(*t.cast_to); break;
    case TransformKind::Translate: {
      Json table = Json::array();
      for (const auto& [from, to] : t.table) table.push_back(Json::array({to_json(from), to_json(to)}));
      j["table"] = table;
      if (t.fallback) j["default"] = to_json(*t.fallback);
      break;
    }
    case TransformKind::Scale:
      j["factor"] = rational_json(t.factor);
      j["offset"] = rational_json(t.offset);
      break;
    case TransformKind::Aggregate:
      j["fn"] = std::string(to_string(t.fn));
      j["groupBy"] = t.group_by;
      if (t.count_nulls) j["countNulls"] = true;
      break;
    case TransformKind::Split: {
      Json parts = Json::array();
      for (const auto& p : t.parts) {
        Json pj{{"target", p.target}};
        if (p.fixed_width()) {
          pj["begin"] = p.begin;
          pj["end"] = p.end;
        } else {
          pj["delimiter"] = p.delimiter;
          pj["index"] = p.index;
        }
        parts.push_back(pj);
      }
      j["parts"] = parts;
      break;
    }
    case TransformKind::Constant: j["value"] = to_json(t.constant); break;
  }
  return j;
}

Transform transform_from_json(const JsonCursor& c) {
  Transform t;
  t.kind = parse_enum(c.at("kind"), {TransformKind::Identity, TransformKind::Cast, TransformKind::Translate,
                                     TransformKind::Scale, TransformKind::Aggregate, TransformKind::Split,
                                     TransformKind::Constant});
  switch (t.kind) {
    case TransformKind::Identity: c.only({"kind"}); break;
    case TransformKind::Cast:
      c.only({"kind", "type"});
      t.cast_to = datatype_from_json(c.at("type"));
      break;
    case TransformKind::Translate: {
      c.only({"kind", "table", "default"});
      auto table = c.at("table");
      if (table.json().is_object()) {
        for (const auto& [k, v] : table.json().items()) t.table.emplace_back(Value{k}, value_from_json(v));
      } else {
        for (std::size_t i = 0; i < table.array().size(); ++i) {
          auto row = table.at(i);
          if (row.array().size() != 2) row.fail("translation entries are [from, to] pairs");
          t.table.emplace_back(value_from_json(row.json()[0]), value_from_json(row.json()[1]));
        }
      }
      if (c.has("default")) t.fallback = value_from_json(c.at("default").json());
      break;
    }
    case TransformKind::Scale:
      c.only({"kind", "factor", "offset"});
      t.factor = c.has("factor") ? rational_from(c.at("factor")) : Rational(1);
      t.offset = c.has("offset") ? rational_from(c.at("offset")) : Rational(0);
      break;
    case TransformKind::Aggregate:
      c.only({"kind", "fn", "groupBy", "countNulls"});
      t.fn = parse_enum(c.at("fn"), {AggregateFn::Sum, AggregateFn::Count, AggregateFn::Mean, AggregateFn::Min,
                                     AggregateFn::Max});
      if (c.has("groupBy")) {
        auto g = c.at("groupBy");
        for (std::size_t i = 0; i < g.array().size(); ++i) t.group_by.push_back(g.at(i).str());
      }
      if (c.has("countNulls")) t.count_nulls = c.at("countNulls").boolean();
      break;
    case TransformKind::Split: {
      c.only({"kind", "parts"});
      auto parts = c.at("parts");
      for (std::size_t i = 0; i < parts.array().size(); ++i) {
        auto p = parts.at(i);
        p.only({"target", "delimiter", "index", "begin", "end"});
        SplitPart sp;
        sp.target = p.at("target").str();
        if (p.has("begin") || p.has("end")) {
          sp.begin = static_cast<int>(p.at("begin").integer());
          sp.end = static_cast<int>(p.at("end").integer());
          if (sp.begin < 0) p.at("begin").fail("range start must be >= 0");
        } else {
          sp.delimiter = p.at("delimiter").str();
          sp.index = p.has("index") ? static_cast<int>(p.at("index").integer()) : 0;
        }
        t.parts.push_back(std::move(sp));
      }
      break;
    }
    case TransformKind::Constant:
      c.only({"kind", "value"});
      t.constant = value_from_json(c.at("value").json());
      break;
  }
  try {
    t.check();
  } catch (const Error& e) {
    c.fail(e.what());
  }
  return t;
}

Json to_json(const MappingRule& r) {
  Json j;
  j["id"] = r.id;
  Json sources = Json::array();
  for (const auto& s : r.sources) sources.push_back(ref_json(s));
  j["sources"] = sources;
  j["target"] = ref_json(r.target);
  if (r.kind) j["kind"] = std::string(to_string(*r.kind));
  j["transform"] = to_json(r.transform);
  if (!r.source_transforms.empty()) {
    Json st = Json::array();
    for (const auto& t : r.source_transforms) st.push_back(to_json(t));
    j["sourceTransforms"] = st;
  }
  if (r.policy.kind == PolicyKind::Priority) {
    Json order = Json::array();
    for (const auto& o : r.policy.order) order.push_back(ref_json(o));
    j["conflictPolicy"] = Json{{"kind", "PRIORITY"}, {"order", order}};
  } else {
    j["conflictPolicy"] = std::string(to_string(r.policy.kind));
  }
  if (r.reliability != 2 || r.rule_kind() == RuleKind::OneToMany) j["reliability"] = r.reliability;
  if (r.via) j["via"] = ref_json(*r.via);
  return j;
}

MappingRule rule_from_json(const JsonCursor& c) {
  c.only({"id", "sources", "target", "kind", "transform", "sourceTransforms", "conflictPolicy", "reliability", "via"});
  MappingRule r;
  r.id = c.at("id").str();
  r.sources = refs_from(c.at("sources"));
  r.target = ref_from(c.at("target"));
  if (c.has("kind")) r.kind = parse_enum(c.at("kind"), {RuleKind::OneToOne, RuleKind::ManyToOne, RuleKind::OneToMany});
  r.transform = c.has("transform") ? transform_from_json(c.at("transform")) : Transform::identity();
  if (c.has("sourceTransforms")) {
    auto st = c.at("sourceTransforms");
    for (std::size_t i = 0; i < st.array().size(); ++i) r.source_transforms.push_back(transform_from_json(st.at(i)));
  }
  if (c.has("conflictPolicy")) {
    auto p = c.at("conflictPolicy");
    if (p.json().is_object()) {
      p.only({"kind", "order"});
      r.policy.kind = parse_enum(p.at("kind"), {PolicyKind::Priority, PolicyKind::Mean, PolicyKind::FirstNonNull,
                                                PolicyKind::Fail});
      if (p.has("order")) r.policy.order = refs_from(p.at("order"));
    } else {
      r.policy.kind = parse_enum(p, {PolicyKind::Priority, PolicyKind::Mean, PolicyKind::FirstNonNull,
                                     PolicyKind::Fail});
    }
  }
  if (c.has("reliability")) {
    auto rel = c.at("reliability").integer();
    if (rel < 1 || rel > 3) c.at("reliability").fail("reliability must be 1..3");
    r.reliability = static_cast<int>(rel);
  }
  if (c.has("via")) r.via = ref_from(c.at("via"));
  return r;
}

Json to_json(const MappingSet& s) {
  Json rules = Json::array();
  for (const auto& r : s.rules) rules.push_back(to_json(r));
  Json j{{"rules", rules}};
  if (!s.keys.empty()) {
    Json keys = Json::object();
    for (const auto& [label, props] : s.keys) keys[label] = props;
    j["keys"] = keys;
  }
  return j;
}

MappingSet mapping_set_from_json(const JsonCursor& c) {
  c.only({"rules", "keys"});
  MappingSet s;
  auto rules = c.at("rules");
  for (std::size_t i = 0; i < rules.array().size(); ++i) s.rules.push_back(rule_from_json(rules.at(i)));
  if (c.has("keys")) {
    auto keys = c.at("keys");
    for (const auto& [label, props] : keys.object().items()) {
      auto pc = keys.at(label);
      std::vector<std::string> names;
      for (std::size_t i = 0; i < pc.array().size(); ++i) names.push_back(pc.at(i).str());
      s.keys[label] = std::move(names);
    }
  }
  return s;
}

Json to_json(const MappingPath& p) {
  return Json{{"rules", p.rules}, {"from", ref_json(p.from)}, {"to", ref_json(p.to)}};
}

MappingPath path_from_json(const JsonCursor& c) {
  c.only({"rules", "from", "to"});
  MappingPath p;
  auto rules = c.at("rules");
  for (std::size_t i = 0; i < rules.array().size(); ++i) p.rules.push_back(rules.at(i).str());
  p.from = ref_from(c.at("from"));
  p.to = ref_from(c.at("to"));
  return p;
}

Json to_json(const CommutativityResult& r) {
  Json ce = Json::array();
  for (const auto& c : r.counterexamples) {
    ce.push_back(Json{{"element", c.element}, {"viaP1", c.via_p1}, {"viaP2", c.via_p2}});
  }
  Json j{{"commutes", r.commutes}, {"checked", r.checked}, {"counterexamples", ce}};
  j["flags"] = r.vacuous ? Json::array({"VACUOUS"}) : Json::array();
  return j;
}

Json to_json(const Diagnostic& d) { return Json{{"code", d.code}, {"rule", d.rule}, {"message", d.message}}; }

}  // namespace tgm
