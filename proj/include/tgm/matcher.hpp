#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tgm/json_io.hpp"
#include "tgm/schema.hpp"

namespace tgm {

struct SynonymTable {
  std::vector<std::vector<std::string>> groups;
  /// Homonym guard: listed pairs never match by name.
  std::vector<std::vector<std::string>> distinct;
};

/// Case-folded, punctuation-free concatenation of the camelCase/snake_case
/// tokens of `name` ("ICD10_classifier" -> "icd10classifier").
std::string normalize_name(std::string_view name);

/// Levenshtein distance over Unicode code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

double name_similarity(std::string_view a, std::string_view b, const SynonymTable& synonyms = {});

/// 1.0 identical kind (enumerations: equal value sets), 0.8 distinct kinds
/// within {integer, decimal, string}, 0.5 string vs enumeration or enumerations
/// with different values, 0.0 otherwise. Composites score the per-field mean.
double type_compatibility(const DataType& a, const DataType& b);

struct StructuralScore {
  double signature_jaccard = 0;  // multiset Jaccard of (edge kind, direction)
  double neighbor = 0;           // best-pairing mean of neighbour label similarity
  double score = 0;              // mean of the two
};

StructuralScore structural_similarity(const TypedGraphSchema& s, std::string_view s_node,
                                      const TypedGraphSchema& g, std::string_view g_node,
                                      const SynonymTable& synonyms = {});

enum class CorrespondenceStatus { Proposed, Accepted, Rejected };

std::string_view to_string(CorrespondenceStatus s);

struct Evidence {
  std::string signal;
  double score = 0;

  friend bool operator==(const Evidence&, const Evidence&) = default;
};

struct Correspondence {
  std::string id;
  ElementRef source;
  ElementRef target;
  double confidence = 0;
  std::vector<Evidence> evidence;
  CorrespondenceStatus status = CorrespondenceStatus::Proposed;
  std::optional<std::string> decided_by;

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

struct MatchConfig {
  double w_name = 0.5;
  double w_type = 0.3;
  double w_structure = 0.2;
  double w_description = 0.0;  // reserved; no schema format carries descriptions
  double threshold = 0.45;
  /// Property pairs whose owners are not matched must clear threshold + this.
  double property_margin = 0.2;

  /// Throws Error(InvalidArgument) unless weights sum to 1 and threshold is in [0,1].
  void check() const;
};

/// Candidate pair scores for one element kind; filled by the scoring kernels.
struct PairScore {
  std::size_t i = 0, j = 0;  // indices into the source/target element lists
  double name = 0, type = 0, structure = 0, combined = 0;
};

/// Scores every (source, target) pair of nodes, properties and edges.
/// `parallel` selects the OpenMP kernel; results are identical either way.
struct MatchScores {
  std::vector<ElementRef> source_nodes, target_nodes;
  std::vector<ElementRef> source_props, target_props;
  std::vector<ElementRef> source_edges, target_edges;
  std::vector<PairScore> nodes, props, edges;  // dense, row-major
};

MatchScores score_all_pairs(const TypedGraphSchema& source, const TypedGraphSchema& target,
                            const MatchConfig& config, const SynonymTable& synonyms, bool parallel);

/// Proposals for every like-kind pair scoring >= threshold, sorted by score
/// descending then by (source, target) reference. `existing` supplies
/// accepted node matches for the property gate.
std::vector<Correspondence> propose_matches(const TypedGraphSchema& source, const TypedGraphSchema& target,
                                            const MatchConfig& config = {}, const SynonymTable& synonyms = {},
                                            const std::vector<Correspondence>* existing = nullptr,
                                            bool parallel = true);

/// Deterministic id for a (source, target) pair.
std::string correspondence_id(const ElementRef& source, const ElementRef& target);

enum class Verdict { Accept, Reject };

struct DecisionOutcome {
  Correspondence updated;
  std::vector<std::string> warnings;
};

/// Rule ids that reference a correspondence (supplied by the mapping layer).
using DependentRules = std::function<std::vector<std::string>(const Correspondence&)>;

/// Expert decisions over a correspondence list. Keeps the invariant that at
/// most one ACCEPTED record exists per (source, target) pair.
class CorrespondenceSet {
 public:
  CorrespondenceSet() = default;
  explicit CorrespondenceSet(std::vector<Correspondence> items);

  const std::vector<Correspondence>& items() const { return items_; }
  const Correspondence* find(std::string_view id) const;
  std::vector<const Correspondence*> accepted() const;
  bool is_accepted(const ElementRef& source, const ElementRef& target) const;

  /// Throws Error(UnknownCorrespondence) / Error(ConflictingAccept).
  DecisionOutcome decide(std::string_view id, Verdict verdict, const std::string& who,
                         const DependentRules& dependents = {});

  /// Records an expert-supplied pair (confidence 1, evidence "manual").
  const Correspondence& add(const ElementRef& source, const ElementRef& target, CorrespondenceStatus status,
                            const std::string& who);

  /// Replaces undecided proposals by `fresh`, keeping decided records;
  /// fresh proposals for an already decided pair are dropped.
  void merge_proposals(const std::vector<Correspondence>& fresh);

  /// True when the ACCEPTED uniqueness invariant holds.
  bool invariant_holds() const;

 private:
  std::vector<Correspondence> items_;
};

Json to_json(const SynonymTable& t);
SynonymTable synonyms_from_json(const JsonCursor& c);

Json to_json(const ElementRef& r);
ElementRef element_ref_from_json(const JsonCursor& c);

Json to_json(const Correspondence& c);
Correspondence correspondence_from_json(const JsonCursor& c);
Json to_json(const std::vector<Correspondence>& list);
std::vector<Correspondence> correspondences_from_json(const JsonCursor& c);

}  // namespace tgm
