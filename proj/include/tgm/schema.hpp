#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tgm/datatype.hpp"
#include "tgm/value.hpp"

namespace tgm {

/// Cardinality min..max; max == nullopt means unbounded ("*").
struct Multiplicity {
  std::uint32_t min = 0;
  std::optional<std::uint32_t> max;

  static Multiplicity exactly_one() { return {1, 1}; }
  static Multiplicity any() { return {0, std::nullopt}; }

  bool admits(std::size_t n) const { return n >= min && (!max || n <= *max); }
  std::string to_string() const;

  friend bool operator==(const Multiplicity&, const Multiplicity&) = default;
};

struct Property {
  std::string name;
  DataType type;

  friend bool operator==(const Property&, const Property&) = default;
};

struct SchemaNode {
  std::string id;
  std::string label;
  std::vector<Property> properties;

  const Property* property(std::string_view name) const;
};

enum class EdgeKind { Association, Aggregation, Generalization, Function };

std::string_view to_string(EdgeKind kind);
std::optional<EdgeKind> parse_edge_kind(std::string_view text);

struct Endpoint {
  std::string node;  // SchemaNode id
  std::string role;
  Multiplicity multiplicity;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// A (hyper-)edge. endpoints[0] is the source side; for FUNCTION edges the
/// last endpoint is the function's target. More than two endpoints encode a
/// hyper-edge.
///
/// Multiplicity at endpoint i bounds, for every instance node playing any
/// other endpoint j, how many edges of this kind it takes part in at
/// position j (UML reading: "each referencing row has exactly one referenced
/// row" is target multiplicity 1..1).
struct SchemaEdge {
  std::string id;
  std::string label;
  EdgeKind kind = EdgeKind::Association;
  std::vector<Endpoint> endpoints;
  std::vector<Property> properties;

  bool is_hyper() const { return endpoints.size() > 2; }
};

enum class ConstraintKind { Key, NotNull, Range, EnumMember };

std::string_view to_string(ConstraintKind kind);
std::optional<ConstraintKind> parse_constraint_kind(std::string_view text);

struct Constraint {
  ConstraintKind kind = ConstraintKind::NotNull;
  std::string node;                     // SchemaNode id
  std::vector<std::string> properties;  // KEY: >= 1 names; others: exactly 1
  std::optional<Value> min;             // RANGE bounds (inclusive)
  std::optional<Value> max;
  std::vector<std::string> values;      // ENUM_MEMBER

  const std::string& property() const { return properties.front(); }
};

/// The schema tuple: nodes, (hyper-)edges with roles and multiplicities,
/// named data types and integrity constraints.
struct TypedGraphSchema {
  std::string name;
  std::vector<DataType> types;
  std::vector<SchemaNode> nodes;
  std::vector<SchemaEdge> edges;
  std::vector<Constraint> constraints;

  const SchemaNode* node(std::string_view id) const;
  const SchemaNode* node_by_label(std::string_view label) const;
  const SchemaEdge* edge(std::string_view id) const;
  const DataType* type(std::string_view name) const;

  /// KEY constraint properties of a node (first KEY constraint), or empty.
  std::vector<std::string> key_of(std::string_view node_id) const;

  /// Throws tgm::Error(InvalidArgument / UnresolvedReference) when a
  /// structural invariant is broken.
  void check() const;
};

enum class ElementKind { Node, Property, Edge };

std::string_view to_string(ElementKind kind);

/// Reference to a schema element by labels: "schema:Node", "schema:Node.prop"
/// or "schema:#edgeId".
struct ElementRef {
  std::string schema;
  ElementKind kind = ElementKind::Node;
  std::string node;      // node label (Node/Property)
  std::string property;  // Property only
  std::string edge;      // edge id (Edge only)

  static ElementRef of_node(std::string schema, std::string node);
  static ElementRef of_property(std::string schema, std::string node, std::string property);
  static ElementRef of_edge(std::string schema, std::string edge);

  /// Throws tgm::Error(ParseError) on malformed text.
  static ElementRef parse(std::string_view text);
  std::string str() const;

  /// The node this element belongs to (itself for node refs).
  ElementRef owner() const { return of_node(schema, node); }

  /// True if `other` is this element or (for a node) one of its properties.
  bool covers(const ElementRef& other) const;

  friend bool operator==(const ElementRef&, const ElementRef&) = default;
  friend auto operator<=>(const ElementRef& a, const ElementRef& b) { return a.str() <=> b.str(); }
};

/// Resolves a reference against a schema; returns false if it names nothing.
bool resolves(const ElementRef& ref, const TypedGraphSchema& schema);

}  // namespace tgm
