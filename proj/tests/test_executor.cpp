#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "running.hpp"
#include "support.hpp"
#include "tgm/executor.hpp"
#include "worlds.hpp"

using namespace tgm;
using namespace tgm::testing;

namespace {

const InstanceNode* only_of(const InstanceGraph& g, const std::string& type) {
  auto xs = g.nodes_of(type);
  return xs.size() == 1 ? xs[0] : nullptr;
}

}  // namespace

TEST(Execute, TwoPatientsSumToTwoAndEdgesMapOntoOneTargetEdge) {
  HomomorphismWorld w;
  auto res = execute(w.input());
  const auto* s = only_of(res.target, "Stats");
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->get("numPatients"), Value(std::int64_t{2}));
  EXPECT_EQ(s->get("hospital"), str("St. Mary"));
  ASSERT_EQ(res.target.edges.size(), 1u);
  // Total on the source edges, and both land on the single target edge.
  ASSERT_EQ(res.edge_image.size(), 2u);
  EXPECT_EQ(res.edge_image.at("clinic/t1"), res.target.edges[0].id);
  EXPECT_EQ(res.edge_image.at("clinic/t2"), res.target.edges[0].id);
  EXPECT_TRUE(validate_instance(res.target, w.stats).empty());
}

TEST(Execute, ProvenanceCoversEveryTargetValue) {
  HomomorphismWorld w;
  auto res = execute(w.input());
  const auto* s = only_of(res.target, "Stats");
  ASSERT_NE(s, nullptr);
  auto it = std::find_if(res.provenance.begin(), res.provenance.end(),
                         [&](const ProvenanceEntry& e) { return e.target == s->id && e.rule == "s_num"; });
  ASSERT_NE(it, res.provenance.end());
  EXPECT_EQ(it->sources, (std::vector<std::string>{"clinic/p1", "clinic/p2"}));
  for (const auto& e : res.provenance) EXPECT_NE(w.rules.find(e.rule), nullptr);
}

TEST(Execute, IsIdempotent) {
  HomomorphismWorld w;
  auto a = execute(w.input());
  auto b = execute(w.input());
  EXPECT_EQ(to_json(a.target), to_json(b.target));
  EXPECT_EQ(a.edge_image, b.edge_image);
}

TEST(Execute, EmptySourcesGiveEmptyTarget) {
  HomomorphismWorld w;
  w.data.nodes.clear();
  w.data.edges.clear();
  auto res = execute(w.input());
  EXPECT_TRUE(res.target.empty());
  EXPECT_TRUE(res.conflicts.empty());
  EXPECT_TRUE(res.provenance.empty());
}

TEST(Execute, DuplicateRegionsMergeWithoutConflict) {
  SiteMergeWorld w("N01");
  auto res = execute(w.input());
  ASSERT_EQ(res.target.nodes.size(), 1u);
  EXPECT_EQ(res.target.nodes[0].get("region"), str("N01"));
  EXPECT_TRUE(res.conflicts.empty());
}

TEST(Execute, PriorityClinicWinsWithOneWarning) {
  SiteMergeWorld w("S01");
  auto res = execute(w.input());
  ASSERT_EQ(res.target.nodes.size(), 1u);
  EXPECT_EQ(res.target.nodes[0].get("region"), str("S01"));
  ASSERT_EQ(res.conflicts.size(), 1u);
  const auto& c = res.conflicts[0];
  EXPECT_EQ(c.severity, Severity::Warning);
  EXPECT_EQ(c.policy, PolicyKind::Priority);
  EXPECT_EQ(c.element, ref("med:Site.region"));
  EXPECT_EQ(c.contributing.size(), 2u);
  EXPECT_EQ(to_json(c)["severity"], "WARNING");
}

TEST(Execute, FailPolicySurfacesPolicyFail) {
  SiteMergeWorld w("S01", PolicyKind::Fail);
  try {
    execute(w.input());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PolicyFail);
    EXPECT_NE(std::string(e.what()).find("region"), std::string::npos);
  }
}

TEST(Execute, TranslateMissNamesTheSourceInstance) {
  SiteMergeWorld w("N01");
  w.h.nodes[0].values["Hregion"] = str("W. Region");
  try {
    execute(w.input());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TranslateMiss);
    EXPECT_NE(std::string(e.what()).find("hosp/h1"), std::string::npos) << e.what();
  }
}

TEST(Execute, InvalidTargetIsReportedNotEmitted) {
  SiteMergeWorld w("N01");
  // A NOT NULL column no rule fills.
  w.med.nodes[0].properties.push_back({"manager", DataType::string()});
  Constraint nn;
  nn.kind = ConstraintKind::NotNull;
  nn.node = "Site";
  nn.properties = {"manager"};
  w.med.constraints.push_back(nn);
  try {
    execute(w.input());
    FAIL();
  } catch (const TargetInvalidError& e) {
    EXPECT_EQ(e.code(), ErrorCode::TargetInvalid);
    EXPECT_FALSE(e.report().empty());
  }
}

TEST(Execute, InvalidSourceIsRejected) {
  SiteMergeWorld w("N01");
  w.h.nodes[0].schema_node = "Nope";
  EXPECT_THROW(execute(w.input()), Error);
}

TEST(Execute, RunningExampleValidatesWithTranslatedCodes) {
  auto ex = running_example();
  auto res = run_execute(ex.project, {ex.hospital_data, ex.admin_data});
  EXPECT_TRUE(validate_instance(res.target, ex.project.target).empty());
  EXPECT_TRUE(res.conflicts.empty());
  std::set<std::string> codes;
  for (const auto* n : res.target.nodes_of("Population")) codes.insert(std::get<std::string>(n->get("regionCode")));
  EXPECT_EQ(codes, (std::set<std::string>{"E01", "N01", "S01"}));
  // Hospital rows keep their own grain: three statistics rows, 12 + 4 + 7 patients.
  std::int64_t total = 0;
  for (const auto* n : res.target.nodes_of("PatientStatistics")) total += std::get<std::int64_t>(n->get("numPatients"));
  EXPECT_EQ(res.target.nodes_of("PatientStatistics").size(), 3u);
  EXPECT_EQ(total, 23);
  EXPECT_EQ(res.target.nodes_of("Country").size(), 1u);
  EXPECT_EQ(res.edge_image.size(), 3u);  // every admin aggregation edge
}

TEST(QueryView, PopulationRowsAndSliceEquality) {
  auto ex = running_example();
  std::vector<InstanceGraph> data = {ex.hospital_data, ex.admin_data};
  auto view = run_view(ex.project, data, "Population");
  EXPECT_EQ(view.columns, (std::vector<std::string>{"regionCode", "countryCode", "population"}));
  auto full = run_execute(ex.project, data);
  std::vector<std::string> ids;
  for (const auto* n : full.target.nodes_of("Population")) {
    ids.push_back(n->id);
    auto it = std::find(view.ids.begin(), view.ids.end(), n->id);
    ASSERT_NE(it, view.ids.end());
    const auto& row = view.rows[static_cast<std::size_t>(it - view.ids.begin())];
    for (std::size_t i = 0; i < view.columns.size(); ++i) {
      EXPECT_TRUE(values_equal(row[i], n->get(view.columns[i])));
    }
  }
  EXPECT_EQ(view.ids.size(), ids.size());
  EXPECT_TRUE(std::is_sorted(view.ids.begin(), view.ids.end()));
  auto csv = to_csv(view);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "regionCode,countryCode,population");
}

TEST(QueryView, UnknownAndUnmappedTargets) {
  auto ex = running_example();
  try {
    run_view(ex.project, {}, "Nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownTarget);
  }
  ex.project.target.nodes.push_back(node("Hotspot", {{"regionCode", DataType::string()}}));
  auto view = run_view(ex.project, {ex.hospital_data, ex.admin_data}, "Hotspot");
  EXPECT_TRUE(view.rows.empty());
  ASSERT_EQ(view.warnings.size(), 1u);
  EXPECT_EQ(view.warnings[0].code, "UNMAPPED_TARGET");
}

// ---- properties over random projects ---------------------------------------

TEST(ExecuteProperty, OutputAlwaysValidatesAndAggregatesMatchBruteForce) {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    RandomProject p(rng);
    auto res = execute(p.input());
    EXPECT_TRUE(validate_instance(res.target, p.dst).empty()) << "trial " << trial;

    // Brute-force fold per group.
    std::map<std::string, std::vector<std::int64_t>> groups;
    std::map<std::string, std::int64_t> counts;
    for (const auto& n : p.data.nodes) {
      auto g = std::get<std::string>(n.get("grp"));
      ++counts[g];
      if (!is_null(n.get("val"))) groups[g].push_back(std::get<std::int64_t>(n.get("val")));
    }
    auto buckets = res.target.nodes_of("Bucket");
    EXPECT_EQ(buckets.size(), counts.size());
    for (const auto* b : buckets) {
      auto g = std::get<std::string>(b->get("grp"));
      const auto& vals = groups[g];
      EXPECT_EQ(b->get("n"), Value(counts[g]));
      if (vals.empty()) {
        EXPECT_TRUE(is_null(b->get("total")));
        EXPECT_TRUE(is_null(b->get("avg")));
        continue;
      }
      std::int64_t sum = 0;
      for (auto v : vals) sum += v;
      EXPECT_EQ(b->get("total"), Value(sum));
      auto n = static_cast<std::int64_t>(vals.size());
      EXPECT_EQ(b->get("avg"), Value(Rational(sum, n).to_decimal(2)));
    }
    EXPECT_EQ(res.target.nodes_of("Copy").size(), p.data.nodes.size());
    EXPECT_EQ(res.target.edges.size(), p.data.nodes.size());
  }
}

TEST(ExecuteProperty, InputOrderDoesNotChangeOutput) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    RandomProject p(rng);
    auto a = execute(p.input());
    std::shuffle(p.data.nodes.begin(), p.data.nodes.end(), rng);
    auto b = execute(p.input());
    EXPECT_EQ(to_json(a.target), to_json(b.target));
  }
}
