#include "tgm/schema.hpp"

#include <set>

#include "tgm/error.hpp"

namespace tgm {

std::string Multiplicity::to_string() const {
  return std::to_string(min) + ".." + (max ? std::to_string(*max) : std::string("*"));
}

const Property* SchemaNode::property(std::string_view name) const {
  for (const auto& p : properties) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Association: return "ASSOCIATION";
    case EdgeKind::Aggregation: return "AGGREGATION";
    case EdgeKind::Generalization: return "GENERALIZATION";
    case EdgeKind::Function: return "FUNCTION";
  }
  return "?";
}

std::optional<EdgeKind> parse_edge_kind(std::string_view text) {
  for (auto k : {EdgeKind::Association, EdgeKind::Aggregation, EdgeKind::Generalization,
                 EdgeKind::Function}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string_view to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Key: return "KEY";
    case ConstraintKind::NotNull: return "NOT_NULL";
    case ConstraintKind::Range: return "RANGE";
    case ConstraintKind::EnumMember: return "ENUM_MEMBER";
  }
  return "?";
}

std::optional<ConstraintKind> parse_constraint_kind(std::string_view text) {
  for (auto k : {ConstraintKind::Key, ConstraintKind::NotNull, ConstraintKind::Range,
                 ConstraintKind::EnumMember}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

const SchemaNode* TypedGraphSchema::node(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

const SchemaNode* TypedGraphSchema::node_by_label(std::string_view label) const {
  for (const auto& n : nodes) {
    if (n.label == label) return &n;
  }
  return nullptr;
}

const SchemaEdge* TypedGraphSchema::edge(std::string_view id) const {
  for (const auto& e : edges) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

const DataType* TypedGraphSchema::type(std::string_view name) const {
  for (const auto& t : types) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

std::vector<std::string> TypedGraphSchema::key_of(std::string_view node_id) const {
  for (const auto& c : constraints) {
    if (c.kind == ConstraintKind::Key && c.node == node_id) return c.properties;
  }
  return {};
}

void TypedGraphSchema::check() const {
  auto fail = [&](ErrorCode code, const std::string& msg) {
    throw Error(code, "schema '" + name + "': " + msg);
  };
  std::set<std::string> ids, labels, edge_ids, type_names;
  for (const auto& t : types) {
    if (t.name.empty()) fail(ErrorCode::InvalidArgument, "named type without a name");
    if (!type_names.insert(t.name).second) fail(ErrorCode::InvalidArgument, "duplicate type " + t.name);
    t.check();
  }
  for (const auto& n : nodes) {
    if (n.label.empty()) fail(ErrorCode::InvalidArgument, "node " + n.id + " has an empty label");
    if (!ids.insert(n.id).second) fail(ErrorCode::InvalidArgument, "duplicate node id " + n.id);
    if (!labels.insert(n.label).second) fail(ErrorCode::InvalidArgument, "duplicate node label " + n.label);
    std::set<std::string> props;
    for (const auto& p : n.properties) {
      if (!props.insert(p.name).second) {
        fail(ErrorCode::InvalidArgument, "node " + n.label + " repeats property " + p.name);
      }
      p.type.check();
    }
  }
  for (const auto& e : edges) {
    if (!edge_ids.insert(e.id).second) fail(ErrorCode::InvalidArgument, "duplicate edge id " + e.id);
    if (e.endpoints.size() < 2) fail(ErrorCode::InvalidArgument, "edge " + e.id + " has fewer than 2 endpoints");
    for (const auto& ep : e.endpoints) {
      if (!node(ep.node)) fail(ErrorCode::UnresolvedReference, "edge " + e.id + " endpoint " + ep.node);
      if (ep.multiplicity.max && *ep.multiplicity.max < ep.multiplicity.min) {
        fail(ErrorCode::InvalidArgument, "edge " + e.id + " multiplicity min > max");
      }
    }
    if (e.kind == EdgeKind::Function && !(e.endpoints.back().multiplicity == Multiplicity::exactly_one())) {
      fail(ErrorCode::InvalidArgument, "FUNCTION edge " + e.id + " target multiplicity must be 1..1");
    }
  }
  for (const auto& c : constraints) {
    const SchemaNode* n = node(c.node);
    if (!n) fail(ErrorCode::UnresolvedReference, "constraint on unknown node " + c.node);
    if (c.properties.empty()) fail(ErrorCode::InvalidArgument, "constraint on " + n->label + " names no property");
    if (c.kind != ConstraintKind::Key && c.properties.size() != 1) {
      fail(ErrorCode::InvalidArgument, "constraint on " + n->label + " must name exactly one property");
    }
    for (const auto& p : c.properties) {
      if (!n->property(p)) fail(ErrorCode::UnresolvedReference, "constraint property " + n->label + "." + p);
    }
  }
}

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::Node: return "node";
    case ElementKind::Property: return "property";
    case ElementKind::Edge: return "edge";
  }
  return "?";
}

ElementRef ElementRef::of_node(std::string schema, std::string node) {
  ElementRef r;
  r.schema = std::move(schema);
  r.kind = ElementKind::Node;
  r.node = std::move(node);
  return r;
}

ElementRef ElementRef::of_property(std::string schema, std::string node, std::string property) {
  ElementRef r;
  r.schema = std::move(schema);
  r.kind = ElementKind::Property;
  r.node = std::move(node);
  r.property = std::move(property);
  return r;
}

ElementRef ElementRef::of_edge(std::string schema, std::string edge) {
  ElementRef r;
  r.schema = std::move(schema);
  r.kind = ElementKind::Edge;
  r.edge = std::move(edge);
  return r;
}

ElementRef ElementRef::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 >= text.size()) {
    throw Error(ErrorCode::ParseError, "element reference '" + std::string(text) +
                                           "' must look like schema:Node[.property]");
  }
  std::string schema(text.substr(0, colon));
  std::string rest(text.substr(colon + 1));
  if (rest.front() == '#') {
    if (rest.size() < 2) throw Error(ErrorCode::ParseError, "empty edge id in '" + std::string(text) + "'");
    return of_edge(schema, rest.substr(1));
  }
  auto dot = rest.find('.');
  if (dot == std::string::npos) return of_node(schema, rest);
  if (dot == 0 || dot + 1 >= rest.size()) {
    throw Error(ErrorCode::ParseError, "malformed element reference '" + std::string(text) + "'");
  }
  return of_property(schema, rest.substr(0, dot), rest.substr(dot + 1));
}

std::string ElementRef::str() const {
  switch (kind) {
    case ElementKind::Node: return schema + ":" + node;
    case ElementKind::Property: return schema + ":" + node + "." + property;
    case ElementKind::Edge: return schema + ":#" + edge;
  }
  return schema;
}

bool ElementRef::covers(const ElementRef& other) const {
  if (*this == other) return true;
  return kind == ElementKind::Node && other.kind == ElementKind::Property &&
         schema == other.schema && node == other.node;
}

bool resolves(const ElementRef& ref, const TypedGraphSchema& schema) {
  if (ref.schema != schema.name) return false;
  switch (ref.kind) {
    case ElementKind::Node: return schema.node_by_label(ref.node) != nullptr;
    case ElementKind::Property: {
      const auto* n = schema.node_by_label(ref.node);
      return n && n->property(ref.property);
    }
    case ElementKind::Edge: return schema.edge(ref.edge) != nullptr;
  }
  return false;
}

}  // namespace tgm
