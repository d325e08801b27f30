#pragma once

// Small schema/instance builders shared by the suites.

#include <string>
#include <vector>

#include "tgm/instance.hpp"
#include "tgm/schema.hpp"

namespace tgm::testing {

inline SchemaNode node(std::string label, std::vector<Property> props) {
  SchemaNode n;
  n.id = n.label = std::move(label);
  n.properties = std::move(props);
  return n;
}

inline SchemaEdge edge(std::string id, EdgeKind kind, std::string from, Multiplicity from_m,
                       std::string to, Multiplicity to_m) {
  SchemaEdge e;
  e.id = e.label = std::move(id);
  e.kind = kind;
  e.endpoints.push_back({from, from, from_m});
  e.endpoints.push_back({to, to, to_m});
  return e;
}

inline Constraint key(std::string node, std::vector<std::string> props) {
  Constraint c;
  c.kind = ConstraintKind::Key;
  c.node = std::move(node);
  c.properties = std::move(props);
  return c;
}

/// Hospital (1) -- treats --> Patient (0..*), each patient treated by one hospital.
inline TypedGraphSchema hospital_schema() {
  TypedGraphSchema s;
  s.name = "clinic";
  s.nodes.push_back(node("Hospital", {{"name", DataType::string()}}));
  s.nodes.push_back(node("Patient", {{"patientId", DataType::string()}}));
  s.edges.push_back(edge("treats", EdgeKind::Aggregation, "Hospital", Multiplicity::exactly_one(),
                         "Patient", Multiplicity::any()));
  s.constraints.push_back(key("Hospital", {"name"}));
  s.constraints.push_back(key("Patient", {"patientId"}));
  return s;
}

inline InstanceNode inode(std::string id, std::string type, PropertyValues values) {
  return {std::move(id), std::move(type), std::move(values)};
}

inline InstanceEdge iedge(std::string id, std::string type, std::vector<std::string> ends) {
  return {std::move(id), std::move(type), std::move(ends), {}};
}

/// One hospital treating two patients.
inline InstanceGraph hospital_instance() {
  InstanceGraph g;
  g.schema_ref = "clinic";
  g.nodes.push_back(inode("h1", "Hospital", {{"name", std::string("St. Mary")}}));
  g.nodes.push_back(inode("p1", "Patient", {{"patientId", std::string("P-1")}}));
  g.nodes.push_back(inode("p2", "Patient", {{"patientId", std::string("P-2")}}));
  g.edges.push_back(iedge("t1", "treats", {"h1", "p1"}));
  g.edges.push_back(iedge("t2", "treats", {"h1", "p2"}));
  return g;
}

}  // namespace tgm::testing
