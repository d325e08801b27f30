#pragma once

#include <map>
#include <string>
#include <vector>

#include "tgm/error.hpp"
#include "tgm/instance.hpp"
#include "tgm/mapper.hpp"

namespace tgm {

enum class Severity { Info, Warning, Error };
std::string_view to_string(Severity s);

struct SourceValue {
  std::string instance;  // "schema/instance-id"
  ElementRef source;
  Value value;
};

struct ConflictRecord {
  std::string target;   // target instance id
  ElementRef element;   // target property
  std::string rule;
  std::vector<SourceValue> contributing;
  PolicyKind policy = PolicyKind::Fail;
  Value resolved;
  Severity severity = Severity::Warning;
};

struct ProvenanceEntry {
  std::string target;  // target instance element id
  std::string rule;
  std::vector<std::string> sources;  // "schema/instance-id", sorted
};

struct ExecutionResult {
  InstanceGraph target;
  std::vector<ConflictRecord> conflicts;
  std::vector<ProvenanceEntry> provenance;
  std::vector<Diagnostic> warnings;
  /// Source instance edge ("schema/edge-id") -> target instance edge id.
  std::map<std::string, std::string> edge_image;
};

/// TARGET_INVALID carries the validation report of the produced graph.
class TargetInvalidError : public Error {
 public:
  explicit TargetInvalidError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

struct ExecutionInput {
  const TypedGraphSchema* target = nullptr;
  std::vector<const TypedGraphSchema*> source_schemas;
  const MappingSet* rules = nullptr;  // compiled
  std::vector<const InstanceGraph*> sources;
};

/// GAV evaluation of the mapping set. Target nodes are filled in dependency
/// order so rules may read already materialized target elements. Entities
/// are identified by AGGREGATE group-by, else by the declared or schema KEY,
/// else per source instance. Throws Error(TranslateMiss / PolicyFail /
/// NonComposable) and TargetInvalidError.
ExecutionResult execute(const ExecutionInput& in);

struct QueryView {
  std::string node;
  std::vector<std::string> columns;  // schema property order
  std::vector<std::vector<Value>> rows;
  std::vector<std::string> ids;      // target instance id per row
  std::vector<Diagnostic> warnings;
};

/// Evaluates only the rules reaching `node` (transitively) and returns its
/// instances as rows. Throws Error(UnknownTarget).
QueryView run_query_view(const ExecutionInput& in, const std::string& node);

Json to_json(const ConflictRecord& c);
Json to_json(const ProvenanceEntry& p);
Json to_json(const QueryView& v);
std::string to_csv(const QueryView& v);

}  // namespace tgm
