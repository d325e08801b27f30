#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "support.hpp"
#include "tgm/error.hpp"
#include "tgm/json_io.hpp"
#include "tgm/instance.hpp"

using namespace tgm;
using namespace tgm::testing;

namespace {

std::size_t count_kind(const ValidationReport& r, ViolationKind k) {
  return std::count_if(r.begin(), r.end(), [&](const Violation& v) { return v.kind == k; });
}

}  // namespace

TEST(Validate, EmptyGraphConformsVacuously) {
  InstanceGraph g;
  g.schema_ref = "clinic";
  EXPECT_TRUE(validate_instance(g, hospital_schema()).empty());
}

TEST(Validate, HospitalInstanceConforms) {
  EXPECT_TRUE(validate_instance(hospital_instance(), hospital_schema()).empty());
}

TEST(Validate, RetargetedEdgeGivesOneHomomorphismViolation) {
  auto g = hospital_instance();
  g.edges[1].endpoints[1] = "h1";  // Patient slot now holds a Hospital
  auto r = validate_instance(g, hospital_schema());
  ASSERT_EQ(count_kind(r, ViolationKind::Homomorphism), 1u);
  auto it = std::find_if(r.begin(), r.end(), [](const Violation& v) { return v.kind == ViolationKind::Homomorphism; });
  EXPECT_EQ(it->element, "t2");
}

TEST(Validate, SchemaRefMismatchThrows) {
  auto g = hospital_instance();
  g.schema_ref = "other";
  try {
    validate_instance(g, hospital_schema());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownSchema);
  }
}

TEST(Validate, DanglingEndpointIsReportedNotThrown) {
  auto g = hospital_instance();
  g.edges[0].endpoints[1] = "ghost";
  auto r = validate_instance(g, hospital_schema());
  EXPECT_EQ(count_kind(r, ViolationKind::DanglingRef), 1u);
}

TEST(Validate, TypingDatatypeAndConstraintClauses) {
  auto g = hospital_instance();
  g.nodes.push_back(inode("x1", "Ward", {}));
  g.nodes[1].values["patientId"] = std::int64_t{5};
  g.nodes[2].values["age"] = std::int64_t{5};
  auto r = validate_instance(g, hospital_schema());
  EXPECT_EQ(count_kind(r, ViolationKind::Typing), 1u);
  EXPECT_EQ(count_kind(r, ViolationKind::Datatype), 2u);

  auto g2 = hospital_instance();
  g2.nodes[2].values["patientId"] = std::string("P-1");
  auto r2 = validate_instance(g2, hospital_schema());
  ASSERT_EQ(r2.size(), 1u);
  EXPECT_EQ(r2[0].kind, ViolationKind::Constraint);
  EXPECT_EQ(r2[0].element, "p2");
}

TEST(Validate, RangeAndEnumConstraints) {
  auto s = hospital_schema();
  s.nodes[1].properties.push_back({"age", DataType::integer()});
  s.nodes[1].properties.push_back({"ward", DataType::string()});
  Constraint range;
  range.kind = ConstraintKind::Range;
  range.node = "Patient";
  range.properties = {"age"};
  range.min = Value{std::int64_t{0}};
  range.max = Value{std::int64_t{120}};
  Constraint member;
  member.kind = ConstraintKind::EnumMember;
  member.node = "Patient";
  member.properties = {"ward"};
  member.values = {"A", "B"};
  s.constraints.push_back(range);
  s.constraints.push_back(member);
  auto g = hospital_instance();
  g.nodes[1].values["age"] = std::int64_t{130};
  g.nodes[1].values["ward"] = std::string("A");
  g.nodes[2].values["age"] = std::int64_t{40};
  g.nodes[2].values["ward"] = std::string("a");
  auto r = validate_instance(g, s);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].element, "p1");
  EXPECT_EQ(r[1].element, "p2");
}

TEST(Validate, OutputIsSortedAndDeterministic) {
  auto g = hospital_instance();
  g.edges.clear();
  auto r1 = validate_instance(g, hospital_schema());
  auto r2 = validate_instance(g, hospital_schema());
  EXPECT_EQ(r1, r2);
  EXPECT_TRUE(std::is_sorted(r1.begin(), r1.end(), [](const Violation& a, const Violation& b) {
    return a.element < b.element || (a.element == b.element && a.kind < b.kind);
  }));
  EXPECT_EQ(count_kind(r1, ViolationKind::Multiplicity), 2u);
}

// Multiplicity on random instances: the report flags exactly the patients
// whose incident 'treats' count differs from one (oracle: direct count).
TEST(Validate, MultiplicityMatchesIncidenceCount) {
  std::mt19937 rng(11);
  auto schema = hospital_schema();
  for (int round = 0; round < 200; ++round) {
    InstanceGraph g;
    g.schema_ref = "clinic";
    int hospitals = 1 + rng() % 3, patients = rng() % 5;
    for (int h = 0; h < hospitals; ++h) {
      g.nodes.push_back(inode("h" + std::to_string(h), "Hospital", {{"name", std::string(1, char('a' + h))}}));
    }
    std::vector<int> incident(patients, 0);
    for (int p = 0; p < patients; ++p) {
      g.nodes.push_back(inode("p" + std::to_string(p), "Patient", {{"patientId", std::to_string(p)}}));
    }
    int edges = rng() % 7;
    for (int e = 0; e < edges && patients > 0; ++e) {
      int p = rng() % patients;
      ++incident[p];
      g.edges.push_back(iedge("e" + std::to_string(e), "treats",
                              {"h" + std::to_string(rng() % hospitals), "p" + std::to_string(p)}));
    }
    std::set<std::string> expected;
    for (int p = 0; p < patients; ++p) {
      if (incident[p] != 1) expected.insert("p" + std::to_string(p));
    }
    std::set<std::string> flagged;
    for (const auto& v : validate_instance(g, schema)) {
      EXPECT_EQ(v.kind, ViolationKind::Multiplicity);
      flagged.insert(v.element);
    }
    EXPECT_EQ(flagged, expected) << "round " << round;
  }
}

// A FUNCTION edge with target 1..1 is a total function on valid instances.
TEST(Validate, FunctionEdgeInducesFunction) {
  TypedGraphSchema s;
  s.name = "m";
  s.nodes.push_back(node("Stats", {{"regionCode", DataType::string()}}));
  s.nodes.push_back(node("Population", {{"regionCode", DataType::string()}}));
  s.edges.push_back(edge("fk", EdgeKind::Function, "Stats", Multiplicity::any(), "Population",
                         Multiplicity::exactly_one()));
  InstanceGraph g;
  g.schema_ref = "m";
  g.nodes.push_back(inode("pop", "Population", {}));
  g.nodes.push_back(inode("s1", "Stats", {}));
  g.nodes.push_back(inode("s2", "Stats", {}));
  g.edges.push_back(iedge("f1", "fk", {"s1", "pop"}));
  EXPECT_EQ(validate_instance(g, s).size(), 1u);  // s2 has no image
  g.edges.push_back(iedge("f2", "fk", {"s2", "pop"}));
  EXPECT_TRUE(validate_instance(g, s).empty());
  g.edges.push_back(iedge("f3", "fk", {"s2", "pop"}));
  EXPECT_EQ(validate_instance(g, s).size(), 1u);  // s2 has two images
}

TEST(Schema, CheckRejectsBrokenInvariants) {
  auto s = hospital_schema();
  s.nodes[1].label = "Hospital";
  EXPECT_THROW(s.check(), Error);
  s = hospital_schema();
  s.edges[0].endpoints[1].node = "Nope";
  EXPECT_THROW(s.check(), Error);
  s = hospital_schema();
  s.edges[0].kind = EdgeKind::Function;  // target endpoint is 0..*
  EXPECT_THROW(s.check(), Error);
  s = hospital_schema();
  s.constraints[0].properties = {"missing"};
  EXPECT_THROW(s.check(), Error);
  EXPECT_NO_THROW(hospital_schema().check());
}

TEST(ElementRef, ParseAndCover) {
  auto p = ElementRef::parse("mediated:Population.regionCode");
  EXPECT_EQ(p.kind, ElementKind::Property);
  EXPECT_EQ(p.owner().str(), "mediated:Population");
  EXPECT_TRUE(p.owner().covers(p));
  EXPECT_FALSE(p.covers(p.owner()));
  auto e = ElementRef::parse("a:#fk_1");
  EXPECT_EQ(e.kind, ElementKind::Edge);
  EXPECT_EQ(e.str(), "a:#fk_1");
  EXPECT_THROW(ElementRef::parse("noschema"), Error);
  EXPECT_THROW(ElementRef::parse("a:Node."), Error);
  EXPECT_TRUE(resolves(ElementRef::parse("clinic:Patient.patientId"), hospital_schema()));
  EXPECT_FALSE(resolves(ElementRef::parse("clinic:Patient.age"), hospital_schema()));
}

TEST(JsonIo, SchemaRoundTrip) {
  auto s = hospital_schema();
  s.types.push_back(DataType::enumeration("Ward", {"A", "B"}));
  s.nodes[1].properties.push_back({"ward", *s.type("Ward")});
  s.nodes[1].properties.push_back({"fee", DataType::decimal(8, 2)});
  Constraint range;
  range.kind = ConstraintKind::Range;
  range.node = "Patient";
  range.properties = {"fee"};
  range.min = Value{Decimal(0, 2)};
  s.constraints.push_back(range);
  Json j = to_json(s);
  auto back = schema_from_json(JsonCursor(j));
  EXPECT_EQ(to_json(back).dump(), j.dump());
  auto keys = std::vector<std::string>{};
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"name", "types", "nodes", "edges", "constraints"}));
}

TEST(JsonIo, UnknownFieldRejectedWithPointer) {
  Json j = to_json(hospital_schema());
  j["nodes"][1]["colour"] = "red";
  try {
    schema_from_json(JsonCursor(j));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("/nodes/1"), std::string::npos) << e.what();
  }
}

TEST(JsonIo, InstanceRoundTripKeepsTypedValues) {
  auto s = hospital_schema();
  s.nodes[1].properties.push_back({"fee", DataType::decimal(8, 2)});
  auto g = hospital_instance();
  g.nodes[1].values["fee"] = Value{Decimal(1250, 2)};
  Json j = to_json(g);
  auto back = instance_from_json(JsonCursor(j), &s);
  EXPECT_EQ(to_json(back).dump(), j.dump());
  EXPECT_TRUE(validate_instance(back, s).empty());
  EXPECT_TRUE(values_equal(back.nodes[1].get("fee"), Value{Decimal(125, 1)}));
}

TEST(JsonIo, TruncatedTextIsParseError) {
  try {
    parse_json_text("{\"name\": \"x\", ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
  }
}
