#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tgm/csv.hpp"
#include "tgm/instance.hpp"
#include "tgm/json_io.hpp"
#include "tgm/relational.hpp"
#include "tgm/schema.hpp"

namespace tgm {

struct ImportResult {
  TypedGraphSchema schema;
  std::vector<std::string> warnings;
};

// ---- relational ------------------------------------------------------------

/// One node per table (id = label = table name), one FUNCTION edge per
/// foreign key (referencing 0..* -> referenced 1..1). Endpoint roles carry the
/// comma-joined column lists so the export can restore the FK exactly.
TypedGraphSchema import_relational(const RelationalModel& model, std::string schema_name);
TypedGraphSchema import_relational(std::string_view ddl, std::string schema_name = "relational");

/// Throws Error(UnsupportedConstruct) for hyper-edges, GENERALIZATION and
/// ASSOCIATION edges, edge properties and composite-typed properties.
RelationalModel to_relational(const TypedGraphSchema& schema);
std::string export_relational(const TypedGraphSchema& schema);

// ---- hierarchical ----------------------------------------------------------

struct HierarchicalOptions {
  std::string schema_name = "hierarchical";
  /// Name of the top element when the document does not supply one (a
  /// top-level object with a single object/array member supplies its key).
  std::string root_name = "Document";
};

/// A tree of named elements. Objects are interior elements, scalars are
/// leaves; arrays become repeated siblings under their member name.
struct HierElement {
  std::string name;
  bool interior = false;
  Json scalar;  // leaves only; null when absent
  std::vector<HierElement> children;
};

/// Top-level elements of a JSON document (more than one when the root is an array).
std::vector<HierElement> hierarchical_from_json(const Json& doc, const HierarchicalOptions& options);

/// One node per distinct interior element path, AGGREGATION edges
/// parent(1..1) -> child(0..*), scalar leaves as properties of the enclosing
/// node. Leaf kinds widen along integer -> decimal -> string.
ImportResult import_hierarchical(const std::vector<HierElement>& doc, const HierarchicalOptions& options);
ImportResult import_hierarchical(const Json& doc, const HierarchicalOptions& options = {});

/// Instance graph of a document against a schema produced by import_hierarchical.
InstanceGraph load_hierarchical_instances(const Json& doc, const TypedGraphSchema& schema,
                                          const HierarchicalOptions& options = {});

// ---- csv -------------------------------------------------------------------

struct CsvOptions {
  std::string schema_name = "csv";
  std::string node_name = "Record";
  std::size_t max_sample_rows = 1000;
};

/// Single node, one property per column. Column kinds are inferred over the
/// chain boolean -> integer -> decimal -> date -> string; empty cells carry
/// no evidence. Throws Error(ArityMismatch) on ragged rows.
ImportResult import_csv(const CsvRow& header, const std::vector<CsvRow>& rows,
                        const CsvOptions& options = {});
ImportResult import_csv(std::string_view text, const CsvOptions& options = {});

/// One instance node per data row (ids "<node>#<row>"); empty cells are absent.
InstanceGraph load_csv_instances(std::string_view text, const TypedGraphSchema& schema,
                                 const std::string& node_label = "Record");

}  // namespace tgm
