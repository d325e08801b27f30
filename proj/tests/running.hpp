#pragma once

// The epidemic-statistics running example assembled from fixtures/running:
// hospital CSV, admin-office JSON, mediated DDL, expert decisions and rules.

#include <string>

#include "tgm/importers.hpp"
#include "tgm/json_io.hpp"
#include "tgm/project.hpp"

namespace tgm::testing {

inline std::string running_fixture(const std::string& name) {
  return std::string(TGM_FIXTURES) + "/running/" + name;
}

struct RunningExample {
  Project project;
  InstanceGraph hospital_data;
  InstanceGraph admin_data;
};

/// Imports the three schemata, proposes matches, applies the expert decisions
/// (accepting proposals, adding the pairs the matcher did not find) and
/// compiles the rule set.
inline RunningExample running_example() {
  RunningExample ex;
  auto& p = ex.project;
  p.name = "epidemic";
  auto csv = read_file(running_fixture("hospital.csv"));
  auto hospital = import_csv(csv, {.schema_name = "hospital"}).schema;
  auto admin_doc = parse_json_text(read_file(running_fixture("admin.json")));
  auto admin = import_hierarchical(admin_doc, {.schema_name = "admin"}).schema;
  p.target = import_relational(read_file(running_fixture("mediated.sql")), "mediated");
  ex.hospital_data = load_csv_instances(csv, hospital);
  ex.admin_data = load_hierarchical_instances(admin_doc, admin, {.schema_name = "admin"});
  add_source(p, std::move(hospital));
  add_source(p, std::move(admin));
  auto syn = parse_json_text(read_file(running_fixture("synonyms.json")));
  p.synonyms = synonyms_from_json(JsonCursor(syn));
  run_match(p);

  auto decisions = parse_json_text(read_file(running_fixture("decisions.json")));
  std::string who = decisions["who"];
  for (const auto& pair : decisions["accept"]) {
    auto s = ElementRef::parse(pair[0].get<std::string>());
    auto t = ElementRef::parse(pair[1].get<std::string>());
    const Correspondence* hit = nullptr;
    for (const auto& c : p.correspondences.items()) {
      if (c.source == s && c.target == t) hit = &c;
    }
    if (hit) {
      p.correspondences.decide(hit->id, Verdict::Accept, who);
    } else {
      p.correspondences.add(s, t, CorrespondenceStatus::Accepted, who);
    }
  }
  auto rules = parse_json_text(read_file(running_fixture("rules.map.json")));
  auto report = replace_rules(p, mapping_set_from_json(JsonCursor(rules)));
  if (!report.ok()) throw Error(ErrorCode::InvalidArgument, "running rules: " + report.errors.front().message);
  return ex;
}

}  // namespace tgm::testing
