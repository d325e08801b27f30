#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tgm/schema.hpp"
#include "tgm/value.hpp"

namespace tgm {

using PropertyValues = std::map<std::string, Value>;

struct InstanceNode {
  std::string id;
  std::string schema_node;  // id of the typing SchemaNode
  PropertyValues values;

  const Value& get(const std::string& name) const;
};

struct InstanceEdge {
  std::string id;
  std::string schema_edge;             // id of the typing SchemaEdge
  std::vector<std::string> endpoints;  // instance node ids, in role order
  PropertyValues values;
};

/// Data-level graph. The typing map (phi) is stored element-wise in
/// schema_node / schema_edge.
struct InstanceGraph {
  std::string schema_ref;
  std::vector<InstanceNode> nodes;
  std::vector<InstanceEdge> edges;

  const InstanceNode* node(std::string_view id) const;
  /// Instances typed by the given schema node id, in storage order.
  std::vector<const InstanceNode*> nodes_of(std::string_view schema_node) const;
  bool empty() const { return nodes.empty() && edges.empty(); }
};

enum class ViolationKind { Typing, DanglingRef, Homomorphism, Datatype, Multiplicity, Constraint };

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string element;  // offending instance element id
  std::string message;

  friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

/// Checks that `graph` conforms to `schema`: total typing, the homomorphism
/// condition on edge endpoints, datatypes, multiplicities and constraints.
/// Violations are sorted by element id, then clause. Throws
/// Error(UnknownSchema) if graph.schema_ref does not name `schema`.
ValidationReport validate_instance(const InstanceGraph& graph, const TypedGraphSchema& schema);

}  // namespace tgm
