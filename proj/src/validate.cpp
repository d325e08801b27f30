#include <algorithm>
#include <map>
#include <set>

#include "tgm/error.hpp"
#include "tgm/instance.hpp"

namespace tgm {

namespace {
const Value kNull{};
}

const Value& InstanceNode::get(const std::string& name) const {
  auto it = values.find(name);
  return it == values.end() ? kNull : it->second;
}

const InstanceNode* InstanceGraph::node(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

std::vector<const InstanceNode*> InstanceGraph::nodes_of(std::string_view schema_node) const {
  std::vector<const InstanceNode*> out;
  for (const auto& n : nodes) {
    if (n.schema_node == schema_node) out.push_back(&n);
  }
  return out;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Typing: return "TYPING";
    case ViolationKind::DanglingRef: return "DANGLING_REF";
    case ViolationKind::Homomorphism: return "HOMOMORPHISM";
    case ViolationKind::Datatype: return "DATATYPE";
    case ViolationKind::Multiplicity: return "MULTIPLICITY";
    case ViolationKind::Constraint: return "CONSTRAINT";
  }
  return "?";
}

namespace {

void check_values(const std::string& element, const PropertyValues& values,
                  const std::vector<Property>& declared, ValidationReport& out) {
  for (const auto& [name, value] : values) {
    auto it = std::find_if(declared.begin(), declared.end(),
                           [&](const Property& p) { return p.name == name; });
    if (it == declared.end()) {
      out.push_back({ViolationKind::Datatype, element, "undeclared property '" + name + "'"});
    } else if (!conforms(value, it->type)) {
      out.push_back({ViolationKind::Datatype, element,
                     "property '" + name + "' value '" + render(value) + "' is not " +
                         it->type.describe()});
    }
  }
}

struct ValueTupleLess {
  bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), ValueLess{});
  }
};

bool in_range(const Value& v, const Constraint& c) {
  if (is_null(v)) return true;
  auto cmp = [](const Value& a, const Value& b) -> std::weak_ordering {
    // integers and decimals compare numerically
    auto as_dec = [](const Value& x) -> std::optional<Decimal> {
      if (auto i = std::get_if<std::int64_t>(&x)) return Decimal::from_integer(*i);
      if (auto d = std::get_if<Decimal>(&x)) return *d;
      return std::nullopt;
    };
    auto da = as_dec(a), db = as_dec(b);
    if (da && db) return *da <=> *db;
    return compare_values(a, b);
  };
  if (c.min && cmp(v, *c.min) < 0) return false;
  if (c.max && cmp(v, *c.max) > 0) return false;
  return true;
}

}  // namespace

ValidationReport validate_instance(const InstanceGraph& graph, const TypedGraphSchema& schema) {
  if (graph.schema_ref != schema.name) {
    throw Error(ErrorCode::UnknownSchema, "instance graph references schema '" + graph.schema_ref +
                                              "' but was checked against '" + schema.name + "'");
  }
  ValidationReport out;

  std::map<std::string, const InstanceNode*> by_id;
  std::set<std::string> seen_ids;
  for (const auto& n : graph.nodes) {
    if (!seen_ids.insert(n.id).second) {
      out.push_back({ViolationKind::Typing, n.id, "instance id used more than once"});
      continue;
    }
    by_id.emplace(n.id, &n);
    const SchemaNode* sn = schema.node(n.schema_node);
    if (!sn) {
      out.push_back({ViolationKind::Typing, n.id, "no schema node '" + n.schema_node + "'"});
      continue;
    }
    check_values(n.id, n.values, sn->properties, out);
  }

  // incidence[edge id][position][instance node] = count
  std::map<std::string, std::vector<std::map<std::string, std::size_t>>> incidence;
  for (const auto& e : graph.edges) {
    if (!seen_ids.insert(e.id).second) {
      out.push_back({ViolationKind::Typing, e.id, "instance id used more than once"});
      continue;
    }
    const SchemaEdge* se = schema.edge(e.schema_edge);
    if (!se) {
      out.push_back({ViolationKind::Typing, e.id, "no schema edge '" + e.schema_edge + "'"});
      continue;
    }
    check_values(e.id, e.values, se->properties, out);
    if (e.endpoints.size() != se->endpoints.size()) {
      out.push_back({ViolationKind::Homomorphism, e.id,
                     "has " + std::to_string(e.endpoints.size()) + " endpoints, schema edge '" +
                         se->id + "' has " + std::to_string(se->endpoints.size())});
      continue;
    }
    auto& inc = incidence[se->id];
    inc.resize(se->endpoints.size());
    bool ok = true;
    for (std::size_t i = 0; i < e.endpoints.size(); ++i) {
      auto it = by_id.find(e.endpoints[i]);
      if (it == by_id.end()) {
        out.push_back({ViolationKind::DanglingRef, e.id,
                       "endpoint '" + e.endpoints[i] + "' does not exist"});
        ok = false;
        continue;
      }
      if (it->second->schema_node != se->endpoints[i].node) {
        out.push_back({ViolationKind::Homomorphism, e.id,
                       "endpoint " + std::to_string(i) + " ('" + se->endpoints[i].role +
                           "') is typed '" + it->second->schema_node + "', schema expects '" +
                           se->endpoints[i].node + "'"});
        ok = false;
      }
    }
    if (ok) {
      for (std::size_t i = 0; i < e.endpoints.size(); ++i) ++inc[i][e.endpoints[i]];
    }
  }

  for (const auto& se : schema.edges) {
    auto found = incidence.find(se.id);
    for (std::size_t j = 0; j < se.endpoints.size(); ++j) {
      for (const InstanceNode* x : graph.nodes_of(se.endpoints[j].node)) {
        std::size_t count = 0;
        if (found != incidence.end()) {
          auto c = found->second[j].find(x->id);
          if (c != found->second[j].end()) count = c->second;
        }
        for (std::size_t i = 0; i < se.endpoints.size(); ++i) {
          if (i == j) continue;
          const auto& m = se.endpoints[i].multiplicity;
          if (!m.admits(count)) {
            out.push_back({ViolationKind::Multiplicity, x->id,
                           "takes part in " + std::to_string(count) + " '" + se.label +
                               "' edges as '" + se.endpoints[j].role + "', expected " +
                               m.to_string() + " ('" + se.endpoints[i].role + "')"});
          }
        }
      }
    }
  }

  for (const auto& c : schema.constraints) {
    auto instances = graph.nodes_of(c.node);
    switch (c.kind) {
      case ConstraintKind::Key: {
        std::map<std::vector<Value>, std::string, ValueTupleLess> keys;
        std::vector<const InstanceNode*> sorted(instances);
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto* a, const auto* b) { return a->id < b->id; });
        for (const auto* x : sorted) {
          std::vector<Value> key;
          bool has_null = false;
          for (const auto& p : c.properties) {
            key.push_back(x->get(p));
            has_null = has_null || is_null(key.back());
          }
          if (has_null) {
            out.push_back({ViolationKind::Constraint, x->id, "KEY property is NULL"});
            continue;
          }
          auto [it, inserted] = keys.emplace(std::move(key), x->id);
          if (!inserted) {
            out.push_back({ViolationKind::Constraint, x->id,
                           "KEY duplicates instance '" + it->second + "'"});
          }
        }
        break;
      }
      case ConstraintKind::NotNull:
        for (const auto* x : instances) {
          if (is_null(x->get(c.property()))) {
            out.push_back({ViolationKind::Constraint, x->id,
                           "NOT_NULL property '" + c.property() + "' is NULL"});
          }
        }
        break;
      case ConstraintKind::Range:
        for (const auto* x : instances) {
          if (!in_range(x->get(c.property()), c)) {
            out.push_back({ViolationKind::Constraint, x->id,
                           "RANGE violated by '" + c.property() + "' = " + render(x->get(c.property()))});
          }
        }
        break;
      case ConstraintKind::EnumMember:
        for (const auto* x : instances) {
          const auto& v = x->get(c.property());
          if (is_null(v)) continue;
          const auto* s = std::get_if<std::string>(&v);
          bool ok = false;
          if (s) {
            auto key = nfc(*s);
            for (const auto& a : c.values) ok = ok || nfc(a) == key;
          }
          if (!ok) {
            out.push_back({ViolationKind::Constraint, x->id,
                           "ENUM_MEMBER violated by '" + c.property() + "' = " + render(v)});
          }
        }
        break;
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) {
    if (a.element != b.element) return a.element < b.element;
    return a.kind < b.kind;
  });
  return out;
}

}  // namespace tgm
