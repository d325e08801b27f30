#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tgm/mapper.hpp"
#include "tgm/matcher.hpp"

namespace tgm {

/// Source schema nodes on the left, target schema nodes on the right, one
/// link per ACCEPTED node correspondence.
struct BipartiteMatchGraph {
  std::vector<ElementRef> sources;
  std::vector<ElementRef> targets;
  std::vector<std::pair<std::size_t, std::size_t>> links;  // (source index, target index)
};

BipartiteMatchGraph build_match_graph(const std::vector<const TypedGraphSchema*>& sources,
                                      const TypedGraphSchema& target, const CorrespondenceSet& decisions);

/// Hopcroft-Karp. Links sorted by source index; deterministic for a fixed
/// vertex and link order.
std::vector<std::pair<std::size_t, std::size_t>> maximum_matching(const BipartiteMatchGraph& g);

struct DeficientSet {
  std::vector<std::size_t> sources;       // R
  std::vector<std::size_t> neighborhood;  // d(R), |d(R)| < |R|
};

struct HallResult {
  bool perfect = true;
  std::size_t matching_size = 0;
  std::optional<DeficientSet> deficient;
};

/// Perfect means every source vertex is matched. Otherwise the witness is
/// the alternating-path closure of an unmatched source vertex.
HallResult check_hall(const BipartiteMatchGraph& g);

/// 3 for 1-1, 2 for n-1, the rule's reliability for 1-n.
int score_rule(const MappingRule& r);
int score_path(const MappingSet& set, const MappingPath& p);

enum class FindingKind { EqualScoreCommutative, Recommendation, ConsistencyError };
std::string_view to_string(FindingKind k);

struct PathFinding {
  FindingKind kind;
  MappingPath p1, p2;
  int score1 = 0, score2 = 0;
  std::optional<MappingPath> recommended;  // RECOMMENDATION only
  CommutativityResult commutativity;
};

struct QualityReport {
  std::size_t maximum_matching_size = 0;
  bool perfect = false;
  std::optional<std::pair<std::vector<ElementRef>, std::vector<ElementRef>>> deficient_set;
  std::map<std::string, int> rule_scores;
  std::vector<std::pair<MappingPath, int>> path_scores;
  std::vector<PathFinding> findings;
  std::vector<ElementRef> unmatched_sources;
  std::vector<ElementRef> unmatched_targets;
  std::size_t properties_matched = 0;
  std::size_t properties_total = 0;
  int overall_score = 0;  // raw sum of rule points

  std::size_t consistency_errors() const;
};

struct QualityInput {
  std::vector<const TypedGraphSchema*> sources;
  const TypedGraphSchema* target = nullptr;
  const CorrespondenceSet* decisions = nullptr;
  const MappingSet* rules = nullptr;
  /// Witness data per schema name, used to check path pairs.
  std::map<std::string, const InstanceGraph*> witnesses;
  int max_path_length = 4;
};

/// Coverage, scores and path consistency of a project snapshot. Path pairs
/// are taken between every rule source in a source schema and every element
/// a target-schema rule produces.
QualityReport quality_report(const QualityInput& in);

Json to_json(const QualityReport& r);

}  // namespace tgm
