// Acceptance gate: one PASS/FAIL line per primary criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "running.hpp"
#include "tgm/relational.hpp"
#include "worlds.hpp"

using namespace tgm;
using namespace tgm::testing;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream why;

  // Records a failed expectation; returns `cond` for early exits.
  bool expect(bool cond, const std::string& what) {
    if (!cond) {
      if (ok) why << what << "; ";
      ok = false;
    }
    return cond;
  }
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

MappingPath path_of(std::vector<std::string> rules, const char* from, const char* to) {
  return {std::move(rules), ElementRef::parse(from), ElementRef::parse(to)};
}

const MappingPath kViaStats =
    path_of({"iso_h2m", "pi_ps2pop"}, "hospital:Record.region", "mediated:Population.regionCode");
const MappingPath kViaAdmin =
    path_of({"pi_h2a", "iso_a2m"}, "hospital:Record.region", "mediated:Population.regionCode");

void scoring(Outcome& o) {
  auto ex = running_example();
  const auto& rules = ex.project.rules;
  auto start = Clock::now();
  int one_to_one = score_rule(*rules.find("iso_h2m"));
  int many_to_one = score_rule(*rules.find("pi_ps2pop"));
  int p1 = score_path(rules, kViaStats);
  int p2 = score_path(rules, kViaAdmin);
  double took = ms_since(start);
  o.expect(one_to_one == 3, "1-1 rule scored " + std::to_string(one_to_one));
  o.expect(many_to_one == 2, "n-1 rule scored " + std::to_string(many_to_one));
  o.expect(p1 == 5 && p2 == 5, "paths scored " + std::to_string(p1) + " and " + std::to_string(p2));
  o.expect(took < 1.0, "scoring took " + std::to_string(took) + " ms");
  o.why << "1-1=" << one_to_one << " n-1=" << many_to_one << " paths=" << p1 << "," << p2;
}

void running_end_to_end(Outcome& o) {
  auto start = Clock::now();
  auto ex = running_example();
  auto rep = run_quality(ex.project, {{"hospital", ex.hospital_data}, {"admin", ex.admin_data}});
  auto res = run_execute(ex.project, {ex.hospital_data, ex.admin_data});
  double took = ms_since(start);
  o.expect(rep.perfect, "quality report is not perfect");
  o.expect(rep.consistency_errors() == 0, "consistency errors present");
  auto violations = validate_instance(res.target, ex.project.target);
  o.expect(violations.empty(), "target fails validation");
  std::set<std::string> codes;
  for (const auto* n : res.target.nodes_of("Population")) codes.insert(std::get<std::string>(n->get("regionCode")));
  for (const auto* n : res.target.nodes_of("PatientStatistics")) {
    codes.insert(std::get<std::string>(n->get("regionCode")));
  }
  o.expect(codes == std::set<std::string>{"E01", "N01", "S01"}, "region codes not translated");
  o.expect(took < 5000.0, "took " + std::to_string(took) + " ms");
  o.why << "perfect, 0 consistency errors, " << res.target.nodes.size() << " nodes valid, " << took << " ms";
}

void hall_oracle(Outcome& o) {
  std::mt19937 rng(7);
  auto start = Clock::now();
  int graphs = 0, deficient = 0;
  for (; graphs < 300; ++graphs) {
    auto g = random_graph(rng, 12, 12);
    auto h = check_hall(g);
    bool oracle = hall_by_subsets(g);
    if (!o.expect(h.perfect == oracle, "verdict differs on graph " + std::to_string(graphs))) break;
    if (h.deficient) {
      ++deficient;
      const auto& r = h.deficient->sources;
      o.expect(neighborhood_size(g, r) < r.size(), "witness not deficient on graph " + std::to_string(graphs));
      o.expect(h.deficient->neighborhood.size() == neighborhood_size(g, r), "reported d(R) is wrong");
    }
  }
  double took = ms_since(start);
  o.expect(took < 30000.0, "took " + std::to_string(took) + " ms");
  o.why << graphs << " graphs, " << deficient << " deficient witnesses checked, " << took << " ms";
}

void matching_oracle(Outcome& o) {
  std::mt19937 rng(11);
  int graphs = 0;
  for (; graphs < 300; ++graphs) {
    auto g = random_graph(rng, 10, 10);
    auto m = maximum_matching(g);
    std::set<std::size_t> left, right;
    std::set<std::pair<std::size_t, std::size_t>> links(g.links.begin(), g.links.end());
    for (const auto& [u, v] : m) {
      o.expect(links.count({u, v}) == 1, "matched pair is not a link");
      o.expect(left.insert(u).second && right.insert(v).second, "matching reuses a vertex");
    }
    if (!o.expect(m.size() == brute_force_matching(g), "size differs on graph " + std::to_string(graphs))) break;
  }
  o.why << graphs << " graphs";
}

void commutativity(Outcome& o) {
  auto ex = running_example();
  auto ctx = ex.project.context();
  auto base = check_commutativity(ex.project.rules, kViaStats, kViaAdmin, ex.hospital_data, ctx);
  o.expect(ex.hospital_data.nodes.size() == 3, "witness does not have 3 rows");
  o.expect(base.commutes && !base.vacuous && base.checked == 3, "fixture does not commute on 3 rows");
  for (auto& r : ex.project.rules.rules) {
    if (r.id != "iso_a2m") continue;
    for (auto& [from, to] : r.transform.table) {
      if (from == Value(std::string("N. Region"))) to = std::string("N02");
    }
  }
  auto bent = check_commutativity(ex.project.rules, kViaStats, kViaAdmin, ex.hospital_data, ctx);
  o.expect(!bent.commutes && !bent.counterexamples.empty(), "perturbation not detected");
  o.why << "commutes on " << base.checked << " rows; perturbed: " << bent.counterexamples.size()
        << " counterexamples";
}

void merge_semantics(Outcome& o) {
  {
    SiteMergeWorld w("N01");
    auto res = execute(w.input());
    o.expect(res.target.nodes.size() == 1 && res.target.nodes[0].get("region") == str("N01"),
             "duplicate did not merge");
    o.expect(res.conflicts.empty(), "duplicate raised a conflict");
  }
  {
    SiteMergeWorld w("S01");
    auto res = execute(w.input());
    o.expect(res.target.nodes.size() == 1 && res.target.nodes[0].get("region") == str("S01"),
             "PRIORITY did not pick the clinic value");
    o.expect(res.conflicts.size() == 1 && res.conflicts[0].severity == Severity::Warning,
             "expected exactly one WARNING conflict");
  }
  auto a = ElementRef::parse("hosp:Hospital.beds");
  auto b = ElementRef::parse("clinic:Clinic.beds");
  auto mean = resolve_conflict({PolicyKind::Mean, {}}, {{a, std::int64_t{10}}, {b, std::int64_t{12}}}, {a, b}, nullptr);
  o.expect(mean.value == Value(std::int64_t{11}), "MEAN(10, 12) is not 11");
  o.why << "silent duplicate, PRIORITY(clinic) + 1 WARNING, MEAN{10,12}=11";
}

void homomorphism(Outcome& o) {
  HomomorphismWorld w;
  auto res = execute(w.input());
  auto stats = res.target.nodes_of("Stats");
  o.expect(stats.size() == 1 && stats[0]->get("numPatients") == Value(std::int64_t{2}), "numPatients is not 2");
  o.expect(res.target.edges.size() == 1, "expected a single target edge");
  std::size_t source_edges = w.data.edges.size();
  bool total = res.edge_image.size() == source_edges;
  for (const auto& [from, to] : res.edge_image) total = total && !res.target.edges.empty() && to == res.target.edges[0].id;
  o.expect(total, "edge image is not total onto the target edge");
  o.why << "numPatients=2, " << res.edge_image.size() << "/" << source_edges << " edges onto 1";
}

void relational_round_trip(Outcome& o) {
  auto ddl = read_file(running_fixture("mediated.sql"));
  auto original = parse_ddl(ddl);
  o.expect(equivalent(parse_ddl(export_relational(import_relational(original, "mediated"))), original),
           "mediated schema does not round trip");
  std::mt19937 rng(31);
  int n = 0;
  for (; n < 100; ++n) {
    auto text = random_ddl(rng);
    auto model = parse_ddl(text);
    if (!o.expect(equivalent(parse_ddl(export_relational(import_relational(model, "r"))), model),
                  "random DDL " + std::to_string(n) + " does not round trip")) {
      break;
    }
  }
  o.why << "mediated + " << n << " random DDLs";
}

void executor_closure(Outcome& o) {
  std::mt19937 rng(5);
  int n = 0;
  for (; n < 100; ++n) {
    RandomProject p(rng);
    auto res = execute(p.input());
    if (!o.expect(validate_instance(res.target, p.dst).empty(), "violations in project " + std::to_string(n))) break;
  }
  auto ex = running_example();
  auto res = run_execute(ex.project, {ex.hospital_data, ex.admin_data});
  o.expect(validate_instance(res.target, ex.project.target).empty(), "running example output invalid");
  o.why << n << " random projects + running example, 0 violations";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"scoring reproduction", scoring},
      {"running example end-to-end", running_end_to_end},
      {"Hall-condition oracle equivalence", hall_oracle},
      {"maximum-matching oracle equivalence", matching_oracle},
      {"commutativity detection", commutativity},
      {"merge-pattern semantics", merge_semantics},
      {"homomorphism aggregation", homomorphism},
      {"relational round trip", relational_round_trip},
      {"executor closure", executor_closure},
  };
  int failed = 0;
  int i = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      run(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.why << " threw: " << e.what();
    }
    failed += o.ok ? 0 : 1;
    std::printf("%s %d. %s: %s\n", o.ok ? "PASS" : "FAIL", ++i, name, o.why.str().c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
