#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tgm/schema.hpp"

namespace tgm {

enum class DiffKind {
  AddedNode,
  RemovedNode,
  ChangedNode,
  AddedEdge,
  RemovedEdge,
  ChangedEdge,
  AddedType,
  RemovedType,
  ChangedType,
  AddedConstraint,
  RemovedConstraint,
};

std::string_view to_string(DiffKind kind);

/// One schema difference. Elements are identified by label-space keys so the
/// diff is independent of opaque ids; payloads carry the `b` side with node
/// references rewritten to labels.
struct DiffEntry {
  DiffKind kind;
  std::string key;
  std::string detail;
  std::optional<SchemaNode> node;
  std::optional<SchemaEdge> edge;
  std::optional<DataType> type;
  std::optional<Constraint> constraint;
};

using SchemaDiff = std::vector<DiffEntry>;

/// Empty iff the schemata are equal up to id renaming.
SchemaDiff schema_diff(const TypedGraphSchema& a, const TypedGraphSchema& b);

/// Applies a diff produced by schema_diff(a, b) to `a`, yielding a schema
/// equal to `b` up to ids.
TypedGraphSchema apply_diff(const TypedGraphSchema& a, const SchemaDiff& diff);

}  // namespace tgm
