#include "tgm/executor.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "tgm/csv.hpp"
#include "tgm/hash.hpp"

namespace tgm {

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::Info: return "INFO";
    case Severity::Warning: return "WARNING";
    case Severity::Error: return "ERROR";
  }
  return "?";
}

namespace {

std::string summarize(const ValidationReport& report) {
  std::string s = std::to_string(report.size()) + " violation(s)";
  if (!report.empty()) s += "; first: " + report.front().element + ": " + report.front().message;
  return s;
}

}  // namespace

TargetInvalidError::TargetInvalidError(ValidationReport report)
    : Error(ErrorCode::TargetInvalid, "produced graph violates the target schema: " + summarize(report)),
      report_(std::move(report)) {}

namespace {

struct Inst {
  std::string qid;  // schema/id
  std::string id;
  const PropertyValues* values;
};

struct Contrib {
  const MappingRule* rule;
  std::size_t src;
  const Inst* x;
  Value value;
};

struct Entity {
  std::set<std::string> members;
  std::vector<const Contrib*> contribs;
};

class Engine {
 public:
  explicit Engine(const ExecutionInput& in) : in_(in) {
    if (!in.target || !in.rules) throw Error(ErrorCode::InvalidArgument, "execution needs a target schema and rules");
    ctx_.schemas = in.source_schemas;
    ctx_.schemas.push_back(in.target);
    out_.target.schema_ref = in.target->name;
    for (const auto* g : in.sources) {
      const TypedGraphSchema* s = nullptr;
      for (const auto* cand : in.source_schemas) {
        if (cand->name == g->schema_ref) s = cand;
      }
      if (!s) throw Error(ErrorCode::UnknownSchema, "no source schema '" + g->schema_ref + "'");
      if (graphs_.count(s->name)) throw Error(ErrorCode::InvalidArgument, "two data sets for schema " + s->name);
      auto report = validate_instance(*g, *s);
      if (!report.empty()) {
        throw Error(ErrorCode::InvalidArgument, "source '" + s->name + "' does not validate: " + summarize(report));
      }
      graphs_[s->name] = g;
      for (const auto& n : g->nodes) {
        const auto* sn = s->node(n.schema_node);
        pools_[{s->name, sn->label}].push_back({s->name + "/" + n.id, n.id, &n.values});
      }
    }
    for (auto& [key, pool] : pools_) {
      std::sort(pool.begin(), pool.end(), [](const Inst& a, const Inst& b) { return a.id < b.id; });
    }
    for (const auto& r : in.rules->rules) {
      if (r.target.schema != in.target->name) continue;  // analysis-only rule
      if (r.target.kind == ElementKind::Edge) {
        edge_rules_.push_back(&r);
      } else {
        node_rules_[r.target.node].push_back(&r);
      }
    }
    auto by_id = [](const MappingRule* a, const MappingRule* b) { return a->id < b->id; };
    for (auto& [label, rules] : node_rules_) std::sort(rules.begin(), rules.end(), by_id);
    std::sort(edge_rules_.begin(), edge_rules_.end(), by_id);
  }

  // Target node labels in dependency order, restricted to `wanted` when set.
  std::vector<std::string> order(const std::set<std::string>* wanted) const {
    std::map<std::string, std::set<std::string>> deps;
    for (const auto& n : in_.target->nodes) deps[n.label] = dependencies(n.label);
    std::vector<std::string> out;
    std::set<std::string> done;
    while (out.size() < deps.size()) {
      bool progressed = false;
      for (const auto& n : in_.target->nodes) {
        if (done.count(n.label)) continue;
        const auto& d = deps[n.label];
        if (std::all_of(d.begin(), d.end(), [&](const std::string& x) { return done.count(x) > 0; })) {
          done.insert(n.label);
          out.push_back(n.label);
          progressed = true;
        }
      }
      if (!progressed) {
        std::string stuck;
        for (const auto& [label, d] : deps) {
          if (!done.count(label)) stuck += (stuck.empty() ? "" : ", ") + label;
        }
        throw Error(ErrorCode::NonComposable, "mapping rules form a cycle through " + stuck);
      }
    }
    if (wanted) std::erase_if(out, [&](const std::string& l) { return !wanted->count(l); });
    return out;
  }

  std::set<std::string> dependencies(const std::string& label) const {
    std::set<std::string> d;
    auto it = node_rules_.find(label);
    if (it == node_rules_.end()) return d;
    for (const auto* r : it->second) {
      for (const auto& s : r->sources) {
        if (s.schema == in_.target->name) d.insert(s.node);
      }
    }
    return d;
  }

  std::set<std::string> closure(const std::string& label) const {
    std::set<std::string> seen{label};
    std::vector<std::string> todo{label};
    while (!todo.empty()) {
      auto l = todo.back();
      todo.pop_back();
      for (const auto& d : dependencies(l)) {
        if (seen.insert(d).second) todo.push_back(d);
      }
    }
    return seen;
  }

  void materialize(const std::string& label) {
    const auto* tnode = in_.target->node_by_label(label);
    auto it = node_rules_.find(label);
    if (it == node_rules_.end()) {
      out_.warnings.push_back({"UNMAPPED_TARGET", "", "no rule produces " + in_.target->name + ":" + label});
      return;
    }
    const auto& rules = it->second;

    // 1. contributions
    std::deque<Contrib> contribs;
    for (const auto* r : rules) {
      const DataType* out_type = ctx_.type_of(r->target);
      for (std::size_t i = 0; i < r->sources.size(); ++i) {
        const auto& s = r->sources[i];
        std::string dtype = r->via ? other_end(*r->via, s) : s.node;
        auto pit = pools_.find({s.schema, dtype});
        if (pit == pools_.end()) continue;
        for (const auto& x : pit->second) {
          for (Value v : raw_values(*r, s, x)) {
            try {
              if (!r->source_transforms.empty()) v = apply_scalar(r->source_transforms[i], v, out_type);
              if (r->target.kind == ElementKind::Property && r->transform.kind != TransformKind::Aggregate &&
                  r->transform.kind != TransformKind::Split) {
                v = apply_scalar(r->transform, v, out_type);
              }
            } catch (const Error& e) {
              throw Error(e.code(), "rule " + r->id + " on " + x.qid + ": " + e.what());
            }
            contribs.push_back({r, i, &x, std::move(v)});
          }
        }
      }
    }
    std::map<std::string, std::vector<const Contrib*>> by_inst;
    std::map<std::string, std::pair<std::string, std::string>> type_of_inst;  // qid -> (schema, label)
    for (const auto& c : contribs) {
      by_inst[c.x->qid].push_back(&c);
      const auto& s = c.rule->sources[c.src];
      type_of_inst[c.x->qid] = {s.schema, c.rule->via ? other_end(*c.rule->via, s) : s.node};
    }

    // 2. identity and grouping
    std::vector<std::string> declared_key;
    if (auto k = in_.rules->keys.find(label); k != in_.rules->keys.end()) {
      declared_key = k->second;
    } else {
      declared_key = in_.target->key_of(tnode->id);
    }
    std::map<std::string, Entity> entities;
    for (const auto& [qid, cs] : by_inst) {
      const auto& dtype = type_of_inst[qid];
      std::vector<std::string> props;
      bool grouped = false;
      for (const auto* r : rules) {
        if (r->transform.kind != TransformKind::Aggregate) continue;
        if (contributes(*r, dtype)) {
          props = r->transform.group_by;
          grouped = true;
          break;
        }
      }
      if (!grouped && !declared_key.empty()) {
        bool covers = std::all_of(declared_key.begin(), declared_key.end(), [&](const std::string& k) {
          return std::any_of(rules.begin(), rules.end(), [&](const MappingRule* r) {
            return feeds_property(*r, k) && r->transform.kind != TransformKind::Aggregate && contributes(*r, dtype);
          });
        });
        if (covers) {
          props = declared_key;
          grouped = true;
        }
      }
      std::string key;
      if (grouped) {
        std::sort(props.begin(), props.end());
        key = "k";
        for (const auto& p : props) key += "|" + p + "=" + to_json(key_value(cs, p, label)).dump();
      } else {
        key = "i|" + qid;
      }
      auto& e = entities[key];
      e.members.insert(qid);
      e.contribs.insert(e.contribs.end(), cs.begin(), cs.end());
    }

    // 3. values, conflicts, provenance
    std::vector<std::pair<std::string, const Entity*>> ordered;
    for (const auto& [key, e] : entities) {
      std::string joined;
      for (const auto& m : e.members) joined += m + "\n";
      ordered.emplace_back(label + "#" + short_hash(joined, 10), &e);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [id, e] : ordered) {
      InstanceNode node{id, tnode->id, {}};
      for (const auto& p : tnode->properties) {
        Value v = property_value(*e, id, label, p);
        if (!is_null(v)) node.values[p.name] = std::move(v);
      }
      std::map<std::string, std::set<std::string>> per_rule;
      for (const auto* c : e->contribs) per_rule[c->rule->id].insert(c->x->qid);
      for (const auto& [rule, srcs] : per_rule) {
        out_.provenance.push_back({id, rule, std::vector<std::string>(srcs.begin(), srcs.end())});
      }
      std::string qid = in_.target->name + "/" + id;
      for (const auto& m : e->members) images_[m].emplace_back(label, id);
      images_[qid].emplace_back(label, id);
      out_.target.nodes.push_back(std::move(node));
    }
    // Pool entries point into a stable store, not into the growing node list.
    auto& pool = pools_[{in_.target->name, label}];
    for (const auto& n : out_.target.nodes) {
      if (n.schema_node != tnode->id) continue;
      store_.push_back(n.values);
      pool.push_back({in_.target->name + "/" + n.id, n.id, &store_.back()});
    }
  }

  void derive_edges() {
    std::map<std::string, InstanceEdge> edges;
    std::map<std::string, std::map<std::string, std::set<std::string>>> prov;  // edge -> rule -> sources
    for (const auto* r : edge_rules_) {
      const auto* f = in_.target->edge(r->target.edge);
      std::vector<std::string> types;
      for (const auto& ep : f->endpoints) types.push_back(in_.target->node(ep.node)->label);
      const auto& s = r->sources[0];

      auto emit = [&](const std::string& origin, const std::vector<std::vector<std::string>>& cand) -> std::string {
        std::vector<std::size_t> idx(cand.size(), 0);
        std::string first;
        while (true) {
          std::vector<std::string> ends;
          for (std::size_t j = 0; j < cand.size(); ++j) ends.push_back(cand[j][idx[j]]);
          std::string joined;
          for (const auto& e : ends) joined += e + "\n";
          std::string id = f->id + "#" + short_hash(joined, 10);
          edges.try_emplace(id, InstanceEdge{id, f->id, ends, {}});
          prov[id][r->id].insert(origin);
          if (first.empty()) first = id;
          std::size_t j = 0;
          while (j < idx.size() && ++idx[j] == cand[j].size()) idx[j++] = 0;
          if (j == idx.size()) break;
        }
        return first;
      };

      std::size_t unmapped = 0;
      if (s.kind == ElementKind::Edge) {
        auto git = graphs_.find(s.schema);
        if (git == graphs_.end()) continue;
        std::vector<const InstanceEdge*> ies;
        for (const auto& ie : git->second->edges) {
          if (ie.schema_edge == s.edge) ies.push_back(&ie);
        }
        std::sort(ies.begin(), ies.end(), [](const InstanceEdge* a, const InstanceEdge* b) { return a->id < b->id; });
        for (const auto* ie : ies) {
          std::vector<std::vector<std::string>> cand(types.size());
          bool total = true;
          for (std::size_t j = 0; j < types.size(); ++j) {
            if (j < ie->endpoints.size()) cand[j] = image(s.schema + "/" + ie->endpoints[j], types[j]);
            if (cand[j].empty()) {
              std::set<std::string> any;
              for (const auto& u : ie->endpoints) {
                for (const auto& t : image(s.schema + "/" + u, types[j])) any.insert(t);
              }
              cand[j].assign(any.begin(), any.end());
            }
            total = total && !cand[j].empty();
          }
          std::string origin = s.schema + "/" + ie->id;
          if (!total) {
            ++unmapped;
            continue;
          }
          out_.edge_image[origin] = emit(origin, cand);
        }
      } else {
        auto pit = pools_.find({s.schema, s.node});
        if (pit == pools_.end()) continue;
        for (const auto& x : pit->second) {
          std::vector<std::vector<std::string>> cand(types.size());
          bool total = true;
          for (std::size_t j = 0; j < types.size(); ++j) {
            cand[j] = image(x.qid, types[j]);
            total = total && !cand[j].empty();
          }
          if (!total) {
            ++unmapped;
            continue;
          }
          emit(x.qid, cand);
        }
      }
      if (unmapped) {
        out_.warnings.push_back({"PARTIAL_EDGE_IMAGE", r->id,
                                 std::to_string(unmapped) + " source element(s) of " + s.str() +
                                     " have no image at every endpoint of " + r->target.str()});
      }
    }
    for (auto& [id, e] : edges) {
      for (const auto& [rule, srcs] : prov[id]) {
        out_.provenance.push_back({id, rule, std::vector<std::string>(srcs.begin(), srcs.end())});
      }
      out_.target.edges.push_back(std::move(e));
    }
  }

  ExecutionResult finish(bool validate) {
    std::sort(out_.target.nodes.begin(), out_.target.nodes.end(),
              [](const InstanceNode& a, const InstanceNode& b) { return a.id < b.id; });
    std::sort(out_.target.edges.begin(), out_.target.edges.end(),
              [](const InstanceEdge& a, const InstanceEdge& b) { return a.id < b.id; });
    std::stable_sort(out_.conflicts.begin(), out_.conflicts.end(), [](const ConflictRecord& a, const ConflictRecord& b) {
      return std::tie(a.target, a.element.property) < std::tie(b.target, b.element.property);
    });
    std::sort(out_.provenance.begin(), out_.provenance.end(), [](const ProvenanceEntry& a, const ProvenanceEntry& b) {
      return std::tie(a.target, a.rule) < std::tie(b.target, b.rule);
    });
    if (validate) {
      auto report = validate_instance(out_.target, *in_.target);
      if (!report.empty()) throw TargetInvalidError(std::move(report));
    }
    return std::move(out_);
  }

  const ExecutionResult& partial() const { return out_; }

 private:
  // Node label at the other end of a binary lookup edge.
  std::string other_end(const ElementRef& via, const ElementRef& s) const {
    const auto* schema = ctx_.schema(via.schema);
    const auto* e = schema->edge(via.edge);
    const auto* owner = schema->node_by_label(s.node);
    for (const auto& ep : e->endpoints) {
      if (ep.node != owner->id) return schema->node(ep.node)->label;
    }
    return s.node;  // self-loop
  }

  std::vector<Value> raw_values(const MappingRule& r, const ElementRef& s, const Inst& x) const {
    auto read = [&](const PropertyValues& vals) -> Value {
      if (s.kind != ElementKind::Property) return std::int64_t{1};
      auto it = vals.find(s.property);
      return it == vals.end() ? Value{} : it->second;
    };
    if (!r.via) return {read(*x.values)};
    const auto* schema = ctx_.schema(r.via->schema);
    const auto* owner = schema->node_by_label(s.node);
    auto git = graphs_.find(r.via->schema);
    std::vector<Value> out;
    if (git != graphs_.end()) {
      const auto* g = git->second;
      for (const auto& ie : g->edges) {
        if (ie.schema_edge != r.via->edge) continue;
        if (std::find(ie.endpoints.begin(), ie.endpoints.end(), x.id) == ie.endpoints.end()) continue;
        for (const auto& u : ie.endpoints) {
          const auto* y = g->node(u);
          if (u != x.id && y && y->schema_node == owner->id) out.push_back(read(y->values));
        }
      }
    }
    if (out.empty()) out.push_back(Value{});
    return out;
  }

  bool contributes(const MappingRule& r, const std::pair<std::string, std::string>& dtype) const {
    return std::any_of(r.sources.begin(), r.sources.end(), [&](const ElementRef& s) {
      return s.schema == dtype.first && (r.via ? other_end(*r.via, s) : s.node) == dtype.second;
    });
  }

  static bool feeds_property(const MappingRule& r, const std::string& prop) {
    if (r.target.kind == ElementKind::Property) return r.target.property == prop;
    return std::any_of(r.transform.parts.begin(), r.transform.parts.end(),
                       [&](const SplitPart& p) { return p.target == prop; });
  }

  // Target-typed value of `prop` produced by one instance's contributions.
  Value key_value(const std::vector<const Contrib*>& cs, const std::string& prop, const std::string& label) const {
    const DataType* t = ctx_.type_of(ElementRef::of_property(in_.target->name, label, prop));
    for (const auto* c : cs) {
      const auto& r = *c->rule;
      if (!feeds_property(r, prop)) continue;
      if (r.transform.kind == TransformKind::Aggregate) return fold(r.transform, {c->value}, t);
      if (r.transform.kind == TransformKind::Split) {
        for (auto& [name, v] : apply_split(r.transform, c->value)) {
          if (name == prop) return apply_scalar(Transform::identity(), v, t);
        }
      }
      return c->value;
    }
    return {};
  }

  Value property_value(const Entity& e, const std::string& id, const std::string& label, const Property& p) {
    ElementRef ref = ElementRef::of_property(in_.target->name, label, p.name);
    std::vector<const MappingRule*> feeding;
    std::vector<Contribution> candidates;
    std::vector<SourceValue> log;
    std::map<const MappingRule*, std::vector<const Contrib*>> per_rule;
    for (const auto* c : e.contribs) {
      if (feeds_property(*c->rule, p.name)) per_rule[c->rule].push_back(c);
    }
    std::vector<std::pair<const MappingRule*, std::vector<const Contrib*>>> sorted(per_rule.begin(), per_rule.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first->id < b.first->id; });
    std::vector<ElementRef> declared;
    for (const auto& [r, cs] : sorted) {
      feeding.push_back(r);
      declared.insert(declared.end(), r->sources.begin(), r->sources.end());
      if (r->transform.kind == TransformKind::Aggregate) {
        std::vector<Value> vals;
        std::vector<const Contrib*> ordered = cs;
        std::sort(ordered.begin(), ordered.end(), [](const Contrib* a, const Contrib* b) {
          return a->x->qid < b->x->qid;
        });
        for (const auto* c : ordered) vals.push_back(c->value);
        Value folded;
        try {
          folded = fold(r->transform, vals, &p.type);
        } catch (const Error& err) {
          throw Error(err.code(), "rule " + r->id + " at " + id + "." + p.name + ": " + err.what());
        }
        candidates.push_back({r->sources[0], folded});
        log.push_back({"", r->sources[0], folded});
        continue;
      }
      for (const auto* c : cs) {
        Value v = c->value;
        if (r->transform.kind == TransformKind::Split) {
          for (auto& [name, part] : apply_split(r->transform, c->value)) {
            if (name == p.name) v = apply_scalar(Transform::identity(), part, &p.type);
          }
        }
        candidates.push_back({r->sources[c->src], v});
        log.push_back({c->x->qid, r->sources[c->src], v});
      }
    }
    if (feeding.empty()) return {};
    MergeOutcome m;
    try {
      m = resolve_conflict(feeding.front()->policy, candidates, declared, &p.type);
    } catch (const Error& err) {
      throw Error(err.code(), "at " + id + "." + p.name + " (rule " + feeding.front()->id + "): " + err.what());
    }
    if (m.conflict) {
      std::erase_if(log, [](const SourceValue& s) { return is_null(s.value); });
      std::sort(log.begin(), log.end(), [](const SourceValue& a, const SourceValue& b) {
        return std::tie(a.instance, a.source) < std::tie(b.instance, b.source);
      });
      out_.conflicts.push_back({id, ref, feeding.front()->id, std::move(log), feeding.front()->policy.kind, m.value,
                                Severity::Warning});
    }
    return m.value;
  }

  std::vector<std::string> image(const std::string& qid, const std::string& label) const {
    std::vector<std::string> out;
    auto it = images_.find(qid);
    if (it == images_.end()) return out;
    for (const auto& [l, id] : it->second) {
      if (l == label && std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  const ExecutionInput& in_;
  MappingContext ctx_;
  ExecutionResult out_;
  std::map<std::string, const InstanceGraph*> graphs_;
  std::map<std::pair<std::string, std::string>, std::vector<Inst>> pools_;
  std::deque<PropertyValues> store_;
  std::map<std::string, std::vector<const MappingRule*>> node_rules_;
  std::vector<const MappingRule*> edge_rules_;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> images_;  // qid -> (label, entity id)
};

}  // namespace

ExecutionResult execute(const ExecutionInput& in) {
  Engine engine(in);
  for (const auto& label : engine.order(nullptr)) engine.materialize(label);
  engine.derive_edges();
  return engine.finish(true);
}

QueryView run_query_view(const ExecutionInput& in, const std::string& node) {
  if (!in.target || !in.target->node_by_label(node)) {
    throw Error(ErrorCode::UnknownTarget, "no target node '" + node + "'");
  }
  Engine engine(in);
  auto wanted = engine.closure(node);
  for (const auto& label : engine.order(&wanted)) engine.materialize(label);
  auto result = engine.finish(false);
  const auto* tnode = in.target->node_by_label(node);
  QueryView v;
  v.node = node;
  for (const auto& p : tnode->properties) v.columns.push_back(p.name);
  for (const auto& n : result.target.nodes) {
    if (n.schema_node != tnode->id) continue;
    std::vector<Value> row;
    for (const auto& p : tnode->properties) row.push_back(n.get(p.name));
    v.rows.push_back(std::move(row));
    v.ids.push_back(n.id);
  }
  for (const auto& w : result.warnings) {
    if (w.code == "UNMAPPED_TARGET" && w.message.ends_with(":" + node)) v.warnings.push_back(w);
  }
  return v;
}

Json to_json(const ConflictRecord& c) {
  Json contributing = Json::array();
  for (const auto& s : c.contributing) {
    contributing.push_back(Json{{"instance", s.instance}, {"source", s.source.str()}, {"value", to_json(s.value)}});
  }
  return Json{{"target", c.target},
              {"element", c.element.str()},
              {"rule", c.rule},
              {"contributing", contributing},
              {"policy", std::string(to_string(c.policy))},
              {"resolved", to_json(c.resolved)},
              {"severity", std::string(to_string(c.severity))}};
}

Json to_json(const ProvenanceEntry& p) {
  return Json{{"target", p.target}, {"rule", p.rule}, {"sources", p.sources}};
}

Json to_json(const QueryView& v) {
  Json rows = Json::array();
  for (const auto& r : v.rows) {
    Json row = Json::object();
    for (std::size_t i = 0; i < r.size(); ++i) row[v.columns[i]] = to_json(r[i]);
    rows.push_back(row);
  }
  Json warnings = Json::array();
  for (const auto& w : v.warnings) warnings.push_back(to_json(w));
  return Json{{"node", v.node}, {"columns", v.columns}, {"rows", rows}, {"warnings", warnings}};
}

std::string to_csv(const QueryView& v) {
  std::string out = render_csv_row(v.columns) + "\n";
  for (const auto& r : v.rows) {
    std::vector<std::string> cells;
    for (const auto& x : r) cells.push_back(render(x));
    out += render_csv_row(cells) + "\n";
  }
  return out;
}

}  // namespace tgm
