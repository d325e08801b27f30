#include "tgm/diff.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "tgm/error.hpp"
#include "tgm/json_io.hpp"

namespace tgm {

std::string_view to_string(DiffKind kind) {
  switch (kind) {
    case DiffKind::AddedNode: return "ADDED_NODE";
    case DiffKind::RemovedNode: return "REMOVED_NODE";
    case DiffKind::ChangedNode: return "CHANGED_NODE";
    case DiffKind::AddedEdge: return "ADDED_EDGE";
    case DiffKind::RemovedEdge: return "REMOVED_EDGE";
    case DiffKind::ChangedEdge: return "CHANGED_EDGE";
    case DiffKind::AddedType: return "ADDED_TYPE";
    case DiffKind::RemovedType: return "REMOVED_TYPE";
    case DiffKind::ChangedType: return "CHANGED_TYPE";
    case DiffKind::AddedConstraint: return "ADDED_CONSTRAINT";
    case DiffKind::RemovedConstraint: return "REMOVED_CONSTRAINT";
  }
  return "?";
}

namespace {

std::string label_of(const TypedGraphSchema& s, const std::string& node_id) {
  const SchemaNode* n = s.node(node_id);
  return n ? n->label : node_id;
}

// Edge with endpoint node ids replaced by labels.
SchemaEdge labelled(const TypedGraphSchema& s, SchemaEdge e) {
  for (auto& ep : e.endpoints) ep.node = label_of(s, ep.node);
  return e;
}

Constraint labelled(const TypedGraphSchema& s, Constraint c) {
  c.node = label_of(s, c.node);
  return c;
}

std::string edge_key(const SchemaEdge& labelled_edge) {
  std::string k = labelled_edge.label + "|" + std::string(to_string(labelled_edge.kind));
  for (const auto& ep : labelled_edge.endpoints) k += "|" + ep.node;
  return k;
}

bool same_edge_body(const SchemaEdge& a, const SchemaEdge& b) {
  return a.endpoints == b.endpoints && a.properties == b.properties;
}

std::string constraint_key(const Constraint& labelled_constraint) {
  Json j;
  j["kind"] = std::string(to_string(labelled_constraint.kind));
  j["node"] = labelled_constraint.node;
  j["properties"] = labelled_constraint.properties;
  if (labelled_constraint.min) j["min"] = to_json(*labelled_constraint.min);
  if (labelled_constraint.max) j["max"] = to_json(*labelled_constraint.max);
  j["values"] = labelled_constraint.values;
  return j.dump();
}

std::string property_names(const std::vector<Property>& props) {
  std::string out;
  for (const auto& p : props) out += (out.empty() ? "" : ",") + p.name + ":" + p.type.describe();
  return out;
}

}  // namespace

SchemaDiff schema_diff(const TypedGraphSchema& a, const TypedGraphSchema& b) {
  SchemaDiff out;

  std::map<std::string, const DataType*> ta, tb;
  for (const auto& t : a.types) ta[t.name] = &t;
  for (const auto& t : b.types) tb[t.name] = &t;
  for (const auto& [name, t] : ta) {
    auto it = tb.find(name);
    if (it == tb.end()) {
      out.push_back({DiffKind::RemovedType, name, t->describe(), {}, {}, {}, {}});
    } else if (!(*it->second == *t)) {
      out.push_back({DiffKind::ChangedType, name, t->describe() + " -> " + it->second->describe(),
                     {}, {}, *it->second, {}});
    }
  }
  for (const auto& [name, t] : tb) {
    if (!ta.count(name)) out.push_back({DiffKind::AddedType, name, t->describe(), {}, {}, *t, {}});
  }

  std::map<std::string, const SchemaNode*> na, nb;
  for (const auto& n : a.nodes) na[n.label] = &n;
  for (const auto& n : b.nodes) nb[n.label] = &n;
  for (const auto& [label, n] : na) {
    auto it = nb.find(label);
    if (it == nb.end()) {
      out.push_back({DiffKind::RemovedNode, label, property_names(n->properties), {}, {}, {}, {}});
    } else if (n->properties != it->second->properties) {
      out.push_back({DiffKind::ChangedNode, label,
                     property_names(n->properties) + " -> " + property_names(it->second->properties),
                     *it->second, {}, {}, {}});
    }
  }
  for (const auto& [label, n] : nb) {
    if (!na.count(label)) {
      out.push_back({DiffKind::AddedNode, label, property_names(n->properties), *n, {}, {}, {}});
    }
  }

  // Edges are keyed by (label, kind, endpoint labels); parallel edges with the
  // same key are paired in order.
  std::map<std::string, std::vector<SchemaEdge>> ea, eb;
  for (const auto& e : a.edges) {
    auto le = labelled(a, e);
    ea[edge_key(le)].push_back(le);
  }
  for (const auto& e : b.edges) {
    auto le = labelled(b, e);
    eb[edge_key(le)].push_back(le);
  }
  std::set<std::string> keys;
  for (const auto& [k, _] : ea) keys.insert(k);
  for (const auto& [k, _] : eb) keys.insert(k);
  for (const auto& k : keys) {
    const auto& xs = ea[k];
    const auto& ys = eb[k];
    std::size_t common = std::min(xs.size(), ys.size());
    for (std::size_t i = 0; i < common; ++i) {
      if (!same_edge_body(xs[i], ys[i])) out.push_back({DiffKind::ChangedEdge, k, "", {}, ys[i], {}, {}});
    }
    for (std::size_t i = common; i < xs.size(); ++i) out.push_back({DiffKind::RemovedEdge, k, "", {}, xs[i], {}, {}});
    for (std::size_t i = common; i < ys.size(); ++i) out.push_back({DiffKind::AddedEdge, k, "", {}, ys[i], {}, {}});
  }

  std::multiset<std::string> ca, cb;
  std::map<std::string, Constraint> cbody;
  for (const auto& c : a.constraints) {
    auto lc = labelled(a, c);
    auto k = constraint_key(lc);
    ca.insert(k);
    cbody.emplace(k, lc);
  }
  for (const auto& c : b.constraints) {
    auto lc = labelled(b, c);
    auto k = constraint_key(lc);
    cb.insert(k);
    cbody.emplace(k, lc);
  }
  for (auto it = ca.begin(); it != ca.end(); it = ca.upper_bound(*it)) {
    auto extra = ca.count(*it) - std::min(ca.count(*it), cb.count(*it));
    for (std::size_t i = 0; i < extra; ++i) {
      out.push_back({DiffKind::RemovedConstraint, *it, "", {}, {}, {}, cbody.at(*it)});
    }
  }
  for (auto it = cb.begin(); it != cb.end(); it = cb.upper_bound(*it)) {
    auto extra = cb.count(*it) - std::min(ca.count(*it), cb.count(*it));
    for (std::size_t i = 0; i < extra; ++i) {
      out.push_back({DiffKind::AddedConstraint, *it, "", {}, {}, {}, cbody.at(*it)});
    }
  }
  return out;
}

TypedGraphSchema apply_diff(const TypedGraphSchema& a, const SchemaDiff& diff) {
  TypedGraphSchema s = a;

  auto fresh_id = [](const std::string& base, auto taken) {
    std::string id = base;
    for (int n = 2; taken(id); ++n) id = base + "#" + std::to_string(n);
    return id;
  };

  for (const auto& d : diff) {
    switch (d.kind) {
      case DiffKind::RemovedType:
        std::erase_if(s.types, [&](const DataType& t) { return t.name == d.key; });
        break;
      case DiffKind::ChangedType:
        for (auto& t : s.types) {
          if (t.name == d.key) t = *d.type;
        }
        break;
      case DiffKind::AddedType:
        s.types.push_back(*d.type);
        break;
      default:
        break;
    }
  }

  for (const auto& d : diff) {
    if (d.kind == DiffKind::RemovedEdge) {
      auto it = std::find_if(s.edges.begin(), s.edges.end(), [&](const SchemaEdge& e) {
        auto le = labelled(s, e);
        return edge_key(le) == d.key && same_edge_body(le, *d.edge);
      });
      if (it != s.edges.end()) s.edges.erase(it);
    } else if (d.kind == DiffKind::RemovedConstraint) {
      auto it = std::find_if(s.constraints.begin(), s.constraints.end(), [&](const Constraint& c) {
        return constraint_key(labelled(s, c)) == d.key;
      });
      if (it != s.constraints.end()) s.constraints.erase(it);
    }
  }

  for (const auto& d : diff) {
    if (d.kind == DiffKind::RemovedNode) {
      std::erase_if(s.nodes, [&](const SchemaNode& n) { return n.label == d.key; });
    } else if (d.kind == DiffKind::ChangedNode) {
      for (auto& n : s.nodes) {
        if (n.label == d.key) n.properties = d.node->properties;
      }
    } else if (d.kind == DiffKind::AddedNode) {
      SchemaNode n = *d.node;
      n.id = fresh_id(n.id, [&](const std::string& id) { return s.node(id) != nullptr; });
      s.nodes.push_back(std::move(n));
    }
  }

  auto resolve = [&](const std::string& label) -> std::string {
    const SchemaNode* n = s.node_by_label(label);
    if (!n) throw Error(ErrorCode::UnresolvedReference, "diff references unknown node " + label);
    return n->id;
  };

  for (const auto& d : diff) {
    if (d.kind == DiffKind::ChangedEdge) {
      for (auto& e : s.edges) {
        if (edge_key(labelled(s, e)) == d.key) {
          e.properties = d.edge->properties;
          e.endpoints = d.edge->endpoints;
          for (auto& ep : e.endpoints) ep.node = resolve(ep.node);
          break;
        }
      }
    } else if (d.kind == DiffKind::AddedEdge) {
      SchemaEdge e = *d.edge;
      for (auto& ep : e.endpoints) ep.node = resolve(ep.node);
      e.id = fresh_id(e.id, [&](const std::string& id) { return s.edge(id) != nullptr; });
      s.edges.push_back(std::move(e));
    } else if (d.kind == DiffKind::AddedConstraint) {
      Constraint c = *d.constraint;
      c.node = resolve(c.node);
      s.constraints.push_back(std::move(c));
    }
  }
  return s;
}

}  // namespace tgm
