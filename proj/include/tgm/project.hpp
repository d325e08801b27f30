#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tgm/executor.hpp"
#include "tgm/mapper.hpp"
#include "tgm/matcher.hpp"
#include "tgm/quality.hpp"
#include "tgm/schema.hpp"

namespace tgm {

inline constexpr int kProjectFormatVersion = 1;

struct ProjectConfig {
  MatchConfig match;
  int max_path_length = 4;
  bool cors = false;
  std::string cors_origin = "*";

  friend bool operator==(const ProjectConfig& a, const ProjectConfig& b);
};

struct Project {
  std::string name;
  std::vector<TypedGraphSchema> sources;
  TypedGraphSchema target;
  CorrespondenceSet correspondences;
  MappingSet rules;
  SynonymTable synonyms;
  ProjectConfig config;
  /// Instance data file per schema name, relative to the project file.
  std::map<std::string, std::string> data;
  std::uint64_t revision = 0;

  const TypedGraphSchema* schema(std::string_view name) const;
  MappingContext context() const;
  /// Throws Error(UnresolvedReference / UnknownSchema / InvalidArgument).
  void check() const;
};

bool operator==(const Project& a, const Project& b);

Json to_json(const Project& p);
/// Throws Error(ParseError) with a JSON pointer, Error(VersionMismatch).
Project project_from_json(const JsonCursor& c);
Project load_project(const std::filesystem::path& path);
/// Atomic: `before_commit` runs after the temp file is written and before it
/// replaces `path`.
void save_project(const Project& p, const std::filesystem::path& path,
                  const std::function<void(const std::filesystem::path&)>& before_commit = {});

// ---- workflow steps shared by the CLI and the HTTP service -----------------

/// Adds a source schema. Throws Error(InvalidArgument) on a duplicate name.
void add_source(Project& p, TypedGraphSchema schema);

/// Proposes matches for every source against the target and merges them into
/// the decision state. Returns the fresh proposals.
std::vector<Correspondence> run_match(Project& p, bool parallel = true);

/// A schema imported from one source file; `data` holds the file's own
/// instances when requested (json and csv only).
struct ImportedSource {
  TypedGraphSchema schema;
  std::optional<InstanceGraph> data;
};

/// kind is relational, json or csv. Throws Error(InvalidArgument) otherwise.
ImportedSource import_source(std::string_view kind, std::string_view content, const std::string& name,
                             bool with_data = false);

/// Adds the schema; instance data is written next to `project_file` as
/// "<name>.data.json" and recorded in the data map.
void attach_source(Project& p, ImportedSource src, const std::filesystem::path& project_file);

/// Records an expert-supplied ACCEPTED pair. Both ends must resolve.
const Correspondence& add_correspondence(Project& p, const ElementRef& source, const ElementRef& target,
                                         const std::string& who);

/// "ACCEPT" / "REJECT" (any case). Throws Error(InvalidArgument).
Verdict verdict_from_string(std::string_view s);

/// decide() with the rules that depend on the pair reported as warnings.
DecisionOutcome decide(Project& p, std::string_view id, Verdict verdict, const std::string& who);

/// Compiles `drafts`; on success replaces the rule set.
CompileReport replace_rules(Project& p, const MappingSet& drafts);

/// Instance data named by the project, keyed by schema name.
std::map<std::string, InstanceGraph> load_project_data(const Project& p, const std::filesystem::path& base);

/// One instance data file, decoded against the project schema it names.
InstanceGraph load_data_file(const Project& p, const std::filesystem::path& path);

QualityReport run_quality(const Project& p, const std::map<std::string, InstanceGraph>& data);

ExecutionResult run_execute(const Project& p, const std::vector<InstanceGraph>& sources);
QueryView run_view(const Project& p, const std::vector<InstanceGraph>& sources, const std::string& node);

/// {ok, warnings, errors}
Json to_json(const CompileReport& r);

/// {correspondence, warnings}
Json to_json(const DecisionOutcome& d);

/// {target, conflicts, provenance, warnings, edgeImage}
Json to_json(const ExecutionResult& r);

}  // namespace tgm
