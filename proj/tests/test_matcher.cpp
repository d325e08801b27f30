#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>

#include "support.hpp"
#include "tgm/error.hpp"
#include "tgm/importers.hpp"
#include "tgm/matcher.hpp"

using namespace tgm;
using namespace tgm::testing;

namespace {

std::string fixture(const std::string& rel) { return read_file(std::string(TGM_FIXTURES) + "/" + rel); }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

// Oracle: textbook recursive edit distance with memoization over bytes
// (all oracle inputs are ASCII).
std::size_t oracle_lev(const std::string& a, const std::string& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> d = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == 0) return j;
    if (j == 0) return i;
    auto it = memo.find({i, j});
    if (it != memo.end()) return it->second;
    std::size_t r = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1])});
    return memo[{i, j}] = r;
  };
  return d(a.size(), b.size());
}

SynonymTable running_synonyms() {
  auto j = parse_json_text(fixture("running/synonyms.json"));
  return synonyms_from_json(JsonCursor(j));
}

TypedGraphSchema hospital() {
  CsvOptions o;
  o.schema_name = "hospital";
  return import_csv(fixture("running/hospital.csv"), o).schema;
}

TypedGraphSchema admin() {
  HierarchicalOptions o;
  o.schema_name = "admin";
  return import_hierarchical(parse_json_text(fixture("running/admin.json")), o).schema;
}

TypedGraphSchema mediated() { return import_relational(fixture("running/mediated.sql"), "mediated"); }

const Correspondence* find_pair(const std::vector<Correspondence>& list, const std::string& s,
                                const std::string& t) {
  for (const auto& c : list) {
    if (c.source.str() == s && c.target.str() == t) return &c;
  }
  return nullptr;
}

double evidence(const Correspondence& c, const std::string& signal) {
  for (const auto& e : c.evidence) {
    if (e.signal == signal) return e.score;
  }
  return -1;
}

}  // namespace

TEST(NameSimilarity, TokenizationIdentity) {
  EXPECT_EQ(normalize_name("ICD10_classifier"), "icd10classifier");
  EXPECT_EQ(normalize_name("regionCode"), normalize_name("region_code"));
  EXPECT_DOUBLE_EQ(name_similarity("regionCode", "region_code"), 1.0);
  EXPECT_DOUBLE_EQ(name_similarity("Region-Code", "REGION CODE"), 1.0);
}

TEST(NameSimilarity, LevenshteinRatio) {
  EXPECT_EQ(oracle_lev("region", "regioncode"), 4u);
  EXPECT_EQ(levenshtein("region", "regioncode"), 4u);
  EXPECT_DOUBLE_EQ(name_similarity("region", "regionCode"), 1.0 - 4.0 / 10.0);
  EXPECT_DOUBLE_EQ(name_similarity("", ""), 1.0);
  EXPECT_DOUBLE_EQ(name_similarity("abc", ""), 0.0);
}

TEST(NameSimilarity, LevenshteinCountsCodePoints) {
  EXPECT_EQ(levenshtein("stra\xC3\x9F" "e", "strasse"), 2u);  // ß -> ss
  EXPECT_EQ(levenshtein("\xC3\xA9t\xC3\xA9", "ete"), 2u);
}

TEST(NameSimilarity, SynonymAndHomonymTables) {
  SynonymTable t;
  t.groups = {{"diagnosis", "ICD10_classifier"}};
  EXPECT_DOUBLE_EQ(name_similarity("diagnosis", "ICD10_classifier", t), 1.0);
  EXPECT_DOUBLE_EQ(name_similarity("Diagnosis", "icd10Classifier", t), 1.0);
  EXPECT_LT(name_similarity("diagnosis", "ICD10_classifier"), 0.5);

  t.distinct = {{"state", "status"}};
  EXPECT_GT(name_similarity("state", "status"), 0.0);
  EXPECT_DOUBLE_EQ(name_similarity("state", "status", t), 0.0);
  EXPECT_DOUBLE_EQ(name_similarity("status", "State", t), 0.0);
}

TEST(NameSimilarity, MatchesOracleOnRandomAsciiNames) {
  std::mt19937 rng(11);
  const std::string alphabet = "abcdeXY_";
  auto gen = [&] {
    std::string s;
    for (int n = rng() % 9; n > 0; --n) s += alphabet[rng() % alphabet.size()];
    return s;
  };
  for (int i = 0; i < 500; ++i) {
    auto a = gen(), b = gen();
    auto na = normalize_name(a), nb = normalize_name(b);
    double expect = na == nb ? 1.0
                             : 1.0 - static_cast<double>(oracle_lev(na, nb)) /
                                         static_cast<double>(std::max(na.size(), nb.size()));
    EXPECT_DOUBLE_EQ(name_similarity(a, b), expect) << a << " / " << b;
    EXPECT_DOUBLE_EQ(name_similarity(a, b), name_similarity(b, a));
  }
}

TEST(TypeCompatibility, Table) {
  EXPECT_DOUBLE_EQ(type_compatibility(DataType::integer(), DataType::integer()), 1.0);
  EXPECT_DOUBLE_EQ(type_compatibility(DataType::integer(), DataType::decimal(9, 2)), 0.8);
  EXPECT_DOUBLE_EQ(type_compatibility(DataType::decimal(), DataType::integer()), 0.8);
  EXPECT_DOUBLE_EQ(type_compatibility(DataType::string(), DataType::integer()), 0.8);
  EXPECT_DOUBLE_EQ(type_compatibility(DataType::date(), DataType::boolean()), 0.0);
  EXPECT_DOUBLE_EQ(type_compatibility(DataType::date(), DataType::string()), 0.0);
  EXPECT_DOUBLE_EQ(type_compatibility(DataType::string(6, true), DataType::string(40)), 1.0);

  auto e1 = DataType::enumeration("R", {"N", "S"});
  auto e2 = DataType::enumeration("Q", {"S", "N"});
  auto e3 = DataType::enumeration("Q", {"N", "E"});
  EXPECT_DOUBLE_EQ(type_compatibility(DataType::string(), e1), 0.5);
  EXPECT_DOUBLE_EQ(type_compatibility(e1, DataType::string()), 0.5);
  EXPECT_DOUBLE_EQ(type_compatibility(e1, e2), 1.0);
  EXPECT_DOUBLE_EQ(type_compatibility(e1, e3), 0.5);
  EXPECT_DOUBLE_EQ(type_compatibility(e1, DataType::integer()), 0.0);

  auto c1 = DataType::composite("A", {{"x", DataType::integer()}, {"y", DataType::date()}});
  auto c2 = DataType::composite("B", {{"x", DataType::decimal()}, {"z", DataType::date()}});
  EXPECT_DOUBLE_EQ(type_compatibility(c1, c2), 0.8 / 2);
  EXPECT_DOUBLE_EQ(type_compatibility(c1, c1), 1.0);
}

TEST(StructuralSimilarity, EmptySignaturesAreIdentical) {
  TypedGraphSchema s;
  s.name = "one";
  s.nodes.push_back(node("A", {}));
  auto r = structural_similarity(s, "A", s, "A");
  EXPECT_DOUBLE_EQ(r.signature_jaccard, 1.0);
  EXPECT_DOUBLE_EQ(r.neighbor, 1.0);
  EXPECT_DOUBLE_EQ(r.score, 1.0);
}

TEST(StructuralSimilarity, RegionVersusPopulation) {
  auto a = admin(), m = mediated();
  // Region: child end of one aggregation from Country. Population: referenced
  // by PatientStatistics and referencing Country, both FUNCTION edges.
  auto r = structural_similarity(a, "Region", m, "Population");
  EXPECT_DOUBLE_EQ(r.signature_jaccard, 0.0);
  double s = 1.0 - static_cast<double>(oracle_lev("patientstatistics", "country")) / 17.0;
  EXPECT_NEAR(r.neighbor, (1.0 + s + 1.0) / 3.0, 1e-12);
  EXPECT_GT(r.score, 0.0);
  EXPECT_LT(r.score, 1.0);
}

TEST(StructuralSimilarity, NoSharedKindsGivesZeroJaccard) {
  TypedGraphSchema s;
  s.name = "s";
  s.nodes = {node("A", {}), node("B", {})};
  s.edges.push_back(edge("ab", EdgeKind::Association, "A", Multiplicity::any(), "B", Multiplicity::any()));
  TypedGraphSchema g;
  g.name = "g";
  g.nodes = {node("X", {}), node("Y", {})};
  g.edges.push_back(edge("xy", EdgeKind::Generalization, "X", Multiplicity::any(), "Y", Multiplicity::any()));
  EXPECT_DOUBLE_EQ(structural_similarity(s, "A", g, "X").signature_jaccard, 0.0);
  EXPECT_EQ(code_of([&] { structural_similarity(s, "Nope", g, "X"); }), ErrorCode::UnknownElement);
}

TEST(ProposeMatches, RegionToRegionCodeIsProposed) {
  auto h = hospital(), m = mediated();
  auto syn = running_synonyms();
  auto list = propose_matches(h, m, {}, syn);
  const auto* c = find_pair(list, "hospital:Record.region", "mediated:PatientStatistics.regionCode");
  ASSERT_NE(c, nullptr);
  EXPECT_DOUBLE_EQ(evidence(*c, "name"), 0.6);
  EXPECT_DOUBLE_EQ(evidence(*c, "type"), 1.0);
  double structure = structural_similarity(h, "Record", m, "PatientStatistics", syn).score;
  EXPECT_NEAR(evidence(*c, "structure"), structure, 1e-9);
  EXPECT_NEAR(c->confidence, 0.5 * 0.6 + 0.3 * 1.0 + 0.2 * structure, 1e-9);
  EXPECT_EQ(c->status, CorrespondenceStatus::Proposed);

  const auto* d = find_pair(list, "hospital:Record.diagnosis", "mediated:PatientStatistics.ICD10_classifier");
  ASSERT_NE(d, nullptr);
  EXPECT_DOUBLE_EQ(evidence(*d, "name"), 1.0);
}

TEST(ProposeMatches, PropertyGateNeedsOwnerMatch) {
  // Without the synonym table the owners do not match, and region/regionCode
  // falls below threshold + margin.
  auto list = propose_matches(hospital(), mediated());
  EXPECT_EQ(find_pair(list, "hospital:Record", "mediated:PatientStatistics"), nullptr);
  EXPECT_EQ(find_pair(list, "hospital:Record.region", "mediated:PatientStatistics.regionCode"), nullptr);

  // An accepted owner match opens the gate.
  Correspondence owner;
  owner.source = ElementRef::of_node("hospital", "Record");
  owner.target = ElementRef::of_node("mediated", "PatientStatistics");
  owner.status = CorrespondenceStatus::Accepted;
  std::vector<Correspondence> existing{owner};
  list = propose_matches(hospital(), mediated(), {}, {}, &existing);
  EXPECT_NE(find_pair(list, "hospital:Record.region", "mediated:PatientStatistics.regionCode"), nullptr);
}

TEST(ProposeMatches, IdenticalSchemataSelfPairsScoreOne) {
  for (const auto& s : {hospital(), admin(), mediated(), hospital_schema()}) {
    auto list = propose_matches(s, s);
    std::size_t expected = s.nodes.size() + s.edges.size();
    for (const auto& n : s.nodes) expected += n.properties.size();
    std::size_t self = 0;
    for (const auto& c : list) {
      if (c.source == c.target) {
        ++self;
        EXPECT_DOUBLE_EQ(c.confidence, 1.0) << c.source.str();
      }
    }
    EXPECT_EQ(self, expected) << s.name;
  }
}

TEST(ProposeMatches, DisjointVocabulariesAndTypesGiveNothing) {
  TypedGraphSchema s, g;
  s.name = "s";
  s.nodes.push_back(node("Alpha", {{"when", DataType::date()}}));
  g.name = "g";
  g.nodes.push_back(node("Zulu", {{"flag", DataType::boolean()}}));
  MatchConfig cfg;
  cfg.threshold = 0.5;
  EXPECT_TRUE(propose_matches(s, g, cfg).empty());
}

TEST(ProposeMatches, SortedByScoreThenRefs) {
  auto list = propose_matches(admin(), mediated(), {}, running_synonyms());
  ASSERT_FALSE(list.empty());
  for (std::size_t i = 1; i < list.size(); ++i) {
    const auto& a = list[i - 1];
    const auto& b = list[i];
    EXPECT_TRUE(a.confidence > b.confidence ||
                (a.confidence == b.confidence &&
                 std::make_pair(a.source.str(), a.target.str()) < std::make_pair(b.source.str(), b.target.str())));
  }
}

TEST(ProposeMatches, RejectsBadConfig) {
  MatchConfig cfg;
  cfg.w_name = 0.9;
  EXPECT_EQ(code_of([&] { propose_matches(admin(), mediated(), cfg); }), ErrorCode::InvalidArgument);
  cfg = {};
  cfg.threshold = 1.5;
  EXPECT_EQ(code_of([&] { propose_matches(admin(), mediated(), cfg); }), ErrorCode::InvalidArgument);
}

namespace {

TypedGraphSchema random_schema(std::mt19937& rng, const std::string& name) {
  static const std::vector<std::string> labels = {"Region", "regionCode", "Country", "country_name", "Patient",
                                                  "Ward", "wardId", "Stats", "population"};
  static const std::vector<DataType> types = {DataType::string(), DataType::integer(), DataType::date(),
                                              DataType::decimal(9, 2), DataType::boolean(),
                                              DataType::enumeration("E", {"a", "b"})};
  static const std::vector<EdgeKind> kinds = {EdgeKind::Function, EdgeKind::Aggregation, EdgeKind::Association,
                                              EdgeKind::Generalization};
  TypedGraphSchema s;
  s.name = name;
  std::set<std::string> used;
  int n = 1 + rng() % 5;
  for (int i = 0; i < n; ++i) {
    auto l = labels[rng() % labels.size()];
    if (!used.insert(l).second) continue;
    std::vector<Property> props;
    std::set<std::string> pn;
    for (int p = rng() % 4; p > 0; --p) {
      auto nm = labels[rng() % labels.size()] + "P";
      if (pn.insert(nm).second) props.push_back({nm, types[rng() % types.size()]});
    }
    s.nodes.push_back(node(l, props));
  }
  for (int e = rng() % 5; e > 0; --e) {
    const auto& a = s.nodes[rng() % s.nodes.size()];
    const auto& b = s.nodes[rng() % s.nodes.size()];
    s.edges.push_back(edge("e" + std::to_string(e), kinds[rng() % kinds.size()], a.id, Multiplicity::any(), b.id,
                           Multiplicity::any()));
  }
  return s;
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

// Swapping source and target transposes every score matrix.
TEST(MatchProperties, SignalsAreSymmetricAndBounded) {
  std::mt19937 rng(5);
  for (int round = 0; round < 150; ++round) {
    auto s = random_schema(rng, "s"), g = random_schema(rng, "g");
    auto fwd = score_all_pairs(s, g, {}, {}, false);
    auto bwd = score_all_pairs(g, s, {}, {}, false);
    auto check = [&](const std::vector<PairScore>& f, const std::vector<PairScore>& b, std::size_t n,
                     std::size_t m) {
      ASSERT_EQ(f.size(), n * m);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
          const auto& x = f[i * m + j];
          const auto& y = b[j * n + i];
          EXPECT_DOUBLE_EQ(x.name, y.name);
          EXPECT_DOUBLE_EQ(x.type, y.type);
          EXPECT_DOUBLE_EQ(x.structure, y.structure);
          EXPECT_DOUBLE_EQ(x.combined, y.combined);
          EXPECT_TRUE(in_unit(x.name) && in_unit(x.type) && in_unit(x.structure) && in_unit(x.combined));
        }
      }
    };
    check(fwd.nodes, bwd.nodes, fwd.source_nodes.size(), fwd.target_nodes.size());
    check(fwd.props, bwd.props, fwd.source_props.size(), fwd.target_props.size());
    check(fwd.edges, bwd.edges, fwd.source_edges.size(), fwd.target_edges.size());
  }
}

TEST(MatchProperties, ParallelKernelEqualsSerial) {
  std::mt19937 rng(9);
  for (int round = 0; round < 50; ++round) {
    auto s = random_schema(rng, "s"), g = random_schema(rng, "g");
    auto a = propose_matches(s, g, {}, {}, nullptr, true);
    auto b = propose_matches(s, g, {}, {}, nullptr, false);
    EXPECT_EQ(a, b);
  }
}

TEST(MatchProperties, ProposalIsDeterministic) {
  auto syn = running_synonyms();
  auto a = propose_matches(hospital(), mediated(), {}, syn);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(propose_matches(hospital(), mediated(), {}, syn), a);
}

TEST(Decide, AcceptTransitionsAndRecordsAuthor) {
  CorrespondenceSet set(propose_matches(hospital(), mediated(), {}, running_synonyms()));
  const auto* c = find_pair(set.items(), "hospital:Record.region", "mediated:PatientStatistics.regionCode");
  ASSERT_NE(c, nullptr);
  auto out = set.decide(c->id, Verdict::Accept, "expert");
  EXPECT_EQ(out.updated.status, CorrespondenceStatus::Accepted);
  EXPECT_EQ(out.updated.decided_by, "expert");
  EXPECT_TRUE(out.warnings.empty());
  EXPECT_EQ(code_of([&] { set.decide("nope", Verdict::Accept, "x"); }), ErrorCode::UnknownCorrespondence);
}

TEST(Decide, SecondAcceptOfSamePairConflicts) {
  CorrespondenceSet set;
  auto s = ElementRef::of_property("hospital", "Record", "region");
  auto t = ElementRef::of_property("mediated", "PatientStatistics", "regionCode");
  auto first = set.add(s, t, CorrespondenceStatus::Proposed, "a").id;
  auto second = set.add(s, t, CorrespondenceStatus::Proposed, "b").id;
  EXPECT_NE(first, second);
  set.decide(first, Verdict::Accept, "a");
  EXPECT_EQ(code_of([&] { set.decide(second, Verdict::Accept, "b"); }), ErrorCode::ConflictingAccept);
  EXPECT_EQ(code_of([&] { set.add(s, t, CorrespondenceStatus::Accepted, "c"); }), ErrorCode::ConflictingAccept);
  EXPECT_TRUE(set.invariant_holds());
}

TEST(Decide, RejectAfterAcceptWarnsAboutDependentRules) {
  CorrespondenceSet set(propose_matches(hospital(), mediated(), {}, running_synonyms()));
  const auto* c = find_pair(set.items(), "hospital:Record.region", "mediated:PatientStatistics.regionCode");
  ASSERT_NE(c, nullptr);
  std::string id = c->id;
  // Reference index: rule id -> correspondence ids it is built on.
  std::map<std::string, std::vector<std::string>> rules = {{"iso_h2m", {id}}, {"other", {"zzz"}}};
  DependentRules deps = [&](const Correspondence& x) {
    std::vector<std::string> out;
    for (const auto& [rule, refs] : rules) {
      if (std::find(refs.begin(), refs.end(), x.id) != refs.end()) out.push_back(rule);
    }
    return out;
  };
  set.decide(id, Verdict::Accept, "expert");
  auto out = set.decide(id, Verdict::Reject, "expert", deps);
  EXPECT_EQ(out.updated.status, CorrespondenceStatus::Rejected);
  ASSERT_EQ(out.warnings.size(), 1u);
  EXPECT_NE(out.warnings[0].find("iso_h2m"), std::string::npos);
  EXPECT_EQ(out.warnings[0].find("other"), std::string::npos);

  // REJECTED -> ACCEPTED is allowed; rejecting a never-accepted record is silent.
  EXPECT_EQ(set.decide(id, Verdict::Accept, "expert").updated.status, CorrespondenceStatus::Accepted);
  const auto* d = find_pair(set.items(), "hospital:Record.diagnosis", "mediated:PatientStatistics.ICD10_classifier");
  ASSERT_NE(d, nullptr);
  EXPECT_TRUE(set.decide(d->id, Verdict::Reject, "expert", deps).warnings.empty());
}

TEST(Decide, InvariantHoldsAfterRandomDecisionSequences) {
  std::mt19937 rng(21);
  auto s = ElementRef::of_node("s", "A");
  std::vector<ElementRef> targets = {ElementRef::of_node("g", "X"), ElementRef::of_node("g", "Y")};
  for (int round = 0; round < 100; ++round) {
    CorrespondenceSet set;
    for (int i = 0; i < 6; ++i) set.add(s, targets[rng() % 2], CorrespondenceStatus::Proposed, "p");
    for (int step = 0; step < 30; ++step) {
      const auto& item = set.items()[rng() % set.items().size()];
      std::string id = item.id;
      try {
        set.decide(id, rng() % 2 ? Verdict::Accept : Verdict::Reject, "e");
      } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ConflictingAccept);
      }
      ASSERT_TRUE(set.invariant_holds());
    }
  }
}

TEST(Decide, MergeKeepsDecisionsAndRefreshesProposals) {
  auto fresh = propose_matches(hospital(), mediated(), {}, running_synonyms());
  CorrespondenceSet set(fresh);
  std::string id = set.items().front().id;
  set.decide(id, Verdict::Reject, "e");
  set.merge_proposals(fresh);
  EXPECT_EQ(set.items().size(), fresh.size());
  EXPECT_EQ(set.find(id)->status, CorrespondenceStatus::Rejected);
  set.merge_proposals({});
  EXPECT_EQ(set.items().size(), 1u);
}

TEST(MatcherJson, CorrespondenceRoundTrip) {
  auto list = propose_matches(admin(), mediated(), {}, running_synonyms());
  CorrespondenceSet set(list);
  set.decide(list.front().id, Verdict::Accept, "expert");
  auto j = to_json(set.items());
  auto back = correspondences_from_json(JsonCursor(j));
  EXPECT_EQ(back, set.items());
  EXPECT_EQ(j[0]["source"]["kind"], std::string(to_string(set.items()[0].source.kind)));
  auto keys = std::vector<std::string>{};
  for (auto it = j[0].begin(); it != j[0].end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"id", "source", "target", "confidence", "evidence", "status",
                                            "decidedBy"}));
}

TEST(MatcherJson, RejectsMalformedInput) {
  auto bad_kind = parse_json_text(
      R"({"id":"m1","source":{"schema":"s","kind":"edge","element":"A"},"target":"g:B","status":"PROPOSED"})");
  EXPECT_EQ(code_of([&] { correspondence_from_json(JsonCursor(bad_kind)); }), ErrorCode::ParseError);
  auto bad_conf = parse_json_text(R"({"id":"m1","source":"s:A","target":"g:B","confidence":1.5})");
  EXPECT_EQ(code_of([&] { correspondence_from_json(JsonCursor(bad_conf)); }), ErrorCode::ParseError);
  auto empty_group = parse_json_text(R"({"groups":[[]]})");
  EXPECT_EQ(code_of([&] { synonyms_from_json(JsonCursor(empty_group)); }), ErrorCode::ParseError);
}
