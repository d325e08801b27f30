#include "tgm/quality.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <set>

#include "tgm/error.hpp"

namespace tgm {

BipartiteMatchGraph build_match_graph(const std::vector<const TypedGraphSchema*>& sources,
                                      const TypedGraphSchema& target, const CorrespondenceSet& decisions) {
  BipartiteMatchGraph g;
  std::map<std::string, std::size_t> left, right;
  for (const auto* s : sources) {
    for (const auto& n : s->nodes) {
      left[s->name + ":" + n.label] = g.sources.size();
      g.sources.push_back(ElementRef::of_node(s->name, n.label));
    }
  }
  for (const auto& n : target.nodes) {
    right[target.name + ":" + n.label] = g.targets.size();
    g.targets.push_back(ElementRef::of_node(target.name, n.label));
  }
  std::set<std::pair<std::size_t, std::size_t>> links;
  for (const auto* c : decisions.accepted()) {
    if (c->source.kind != ElementKind::Node || c->target.kind != ElementKind::Node) continue;
    auto l = left.find(c->source.str());
    auto r = right.find(c->target.str());
    if (l != left.end() && r != right.end()) links.emplace(l->second, r->second);
  }
  g.links.assign(links.begin(), links.end());
  return g;
}

namespace {

constexpr std::size_t kFree = std::numeric_limits<std::size_t>::max();

struct HopcroftKarp {
  std::vector<std::vector<std::size_t>> adj;
  std::vector<std::size_t> mate_l, mate_r, dist;

  explicit HopcroftKarp(const BipartiteMatchGraph& g)
      : adj(g.sources.size()), mate_l(g.sources.size(), kFree), mate_r(g.targets.size(), kFree),
        dist(g.sources.size()) {
    for (const auto& [u, v] : g.links) adj[u].push_back(v);
    for (auto& a : adj) std::sort(a.begin(), a.end());
  }

  // Layers free left vertices at 0; true when some free right vertex is reachable.
  bool bfs() {
    std::queue<std::size_t> q;
    for (std::size_t u = 0; u < adj.size(); ++u) {
      dist[u] = mate_l[u] == kFree ? 0 : kFree;
      if (mate_l[u] == kFree) q.push(u);
    }
    bool found = false;
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (auto v : adj[u]) {
        auto w = mate_r[v];
        if (w == kFree) {
          found = true;
        } else if (dist[w] == kFree) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  }

  bool dfs(std::size_t u) {
    for (auto v : adj[u]) {
      auto w = mate_r[v];
      if (w == kFree || (dist[w] == dist[u] + 1 && dfs(w))) {
        mate_l[u] = v;
        mate_r[v] = u;
        return true;
      }
    }
    dist[u] = kFree;
    return false;
  }

  std::size_t run() {
    std::size_t size = 0;
    while (bfs()) {
      for (std::size_t u = 0; u < adj.size(); ++u) {
        if (mate_l[u] == kFree && dfs(u)) ++size;
      }
    }
    return size;
  }
};

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> maximum_matching(const BipartiteMatchGraph& g) {
  HopcroftKarp hk(g);
  hk.run();
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t u = 0; u < hk.mate_l.size(); ++u) {
    if (hk.mate_l[u] != kFree) out.emplace_back(u, hk.mate_l[u]);
  }
  return out;
}

HallResult check_hall(const BipartiteMatchGraph& g) {
  HopcroftKarp hk(g);
  HallResult res;
  res.matching_size = hk.run();
  res.perfect = res.matching_size == g.sources.size();
  if (res.perfect) return res;

  std::size_t root = 0;
  while (hk.mate_l[root] != kFree) ++root;
  // Alternating reachability: any link out of a left vertex, matched link back.
  std::vector<bool> in_r(g.sources.size()), in_d(g.targets.size());
  std::queue<std::size_t> q;
  in_r[root] = true;
  q.push(root);
  while (!q.empty()) {
    auto u = q.front();
    q.pop();
    for (auto v : hk.adj[u]) {
      if (in_d[v]) continue;
      in_d[v] = true;
      auto w = hk.mate_r[v];  // never free: the matching is maximum
      if (w != kFree && !in_r[w]) {
        in_r[w] = true;
        q.push(w);
      }
    }
  }
  DeficientSet d;
  for (std::size_t u = 0; u < in_r.size(); ++u) {
    if (in_r[u]) d.sources.push_back(u);
  }
  // d(R) recounted from the links, not from the search.
  std::set<std::size_t> nb;
  for (const auto& [u, v] : g.links) {
    if (in_r[u]) nb.insert(v);
  }
  d.neighborhood.assign(nb.begin(), nb.end());
  if (d.neighborhood.size() >= d.sources.size()) {
    throw Error(ErrorCode::InvalidArgument, "internal: Hall witness is not deficient");
  }
  res.deficient = std::move(d);
  return res;
}

int score_rule(const MappingRule& r) {
  switch (r.rule_kind()) {
    case RuleKind::OneToOne: return 3;
    case RuleKind::ManyToOne: return 2;
    case RuleKind::OneToMany: return r.reliability;
  }
  return 0;
}

int score_path(const MappingSet& set, const MappingPath& p) {
  int total = 0;
  for (const auto& id : p.rules) {
    const auto* r = set.find(id);
    if (!r) throw Error(ErrorCode::NonComposable, "unknown rule " + id);
    total += score_rule(*r);
  }
  return total;
}

std::string_view to_string(FindingKind k) {
  switch (k) {
    case FindingKind::EqualScoreCommutative: return "EQUAL_SCORE_COMMUTATIVE";
    case FindingKind::Recommendation: return "RECOMMENDATION";
    case FindingKind::ConsistencyError: return "CONSISTENCY_ERROR";
  }
  return "?";
}

std::size_t QualityReport::consistency_errors() const {
  return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(), [](const PathFinding& f) {
    return f.kind == FindingKind::ConsistencyError;
  }));
}

namespace {

bool ref_less(const ElementRef& a, const ElementRef& b) { return a.str() < b.str(); }

// Elements a target-schema rule writes, SPLIT parts included.
std::vector<ElementRef> produced(const MappingRule& r) {
  if (r.transform.kind != TransformKind::Split) return {r.target};
  std::vector<ElementRef> out;
  for (const auto& p : r.transform.parts) out.push_back(ElementRef::of_property(r.target.schema, r.target.node, p.target));
  return out;
}

}  // namespace

QualityReport quality_report(const QualityInput& in) {
  if (!in.target || !in.decisions || !in.rules) {
    throw Error(ErrorCode::InvalidArgument, "quality report needs a target schema, decisions and rules");
  }
  QualityReport rep;
  auto g = build_match_graph(in.sources, *in.target, *in.decisions);
  auto hall = check_hall(g);
  rep.maximum_matching_size = hall.matching_size;
  rep.perfect = hall.perfect;
  if (hall.deficient) {
    std::vector<ElementRef> r, d;
    for (auto i : hall.deficient->sources) r.push_back(g.sources[i]);
    for (auto i : hall.deficient->neighborhood) d.push_back(g.targets[i]);
    rep.deficient_set = std::make_pair(std::move(r), std::move(d));
  }
  std::vector<bool> lm(g.sources.size()), rm(g.targets.size());
  for (const auto& [u, v] : maximum_matching(g)) {
    lm[u] = true;
    rm[v] = true;
  }
  for (std::size_t i = 0; i < lm.size(); ++i) {
    if (!lm[i]) rep.unmatched_sources.push_back(g.sources[i]);
  }
  for (std::size_t i = 0; i < rm.size(); ++i) {
    if (!rm[i]) rep.unmatched_targets.push_back(g.targets[i]);
  }

  auto accepted = in.decisions->accepted();
  for (const auto* s : in.sources) {
    for (const auto& n : s->nodes) {
      for (const auto& p : n.properties) {
        ++rep.properties_total;
        auto ref = ElementRef::of_property(s->name, n.label, p.name);
        bool hit = std::any_of(accepted.begin(), accepted.end(),
                               [&](const Correspondence* c) {
                                 return c->source == ref && c->target.schema == in.target->name;
                               });
        if (hit) ++rep.properties_matched;
      }
    }
  }

  for (const auto& r : in.rules->rules) {
    rep.rule_scores[r.id] = score_rule(r);
    rep.overall_score += rep.rule_scores[r.id];
  }

  // Path pairs between source elements and produced target elements.
  std::set<std::string> source_names;
  for (const auto* s : in.sources) source_names.insert(s->name);
  std::vector<ElementRef> froms, tos;
  for (const auto& r : in.rules->rules) {
    for (const auto& s : r.sources) {
      if (source_names.count(s.schema)) froms.push_back(s);
    }
    if (r.target.schema == in.target->name) {
      for (auto& t : produced(r)) tos.push_back(std::move(t));
    }
  }
  auto uniq = [](std::vector<ElementRef>& v) {
    std::sort(v.begin(), v.end(), ref_less);
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(froms);
  uniq(tos);

  MappingContext ctx;
  ctx.schemas = in.sources;
  ctx.schemas.push_back(in.target);
  const InstanceGraph empty;
  std::set<std::vector<std::string>> scored;
  for (const auto& from : froms) {
    for (const auto& to : tos) {
      auto paths = enumerate_paths(*in.rules, from, to, in.max_path_length);
      for (const auto& p : paths) {
        if (scored.insert(p.rules).second) rep.path_scores.emplace_back(p, score_path(*in.rules, p));
      }
      if (paths.size() < 2) continue;
      auto wit = in.witnesses.find(from.schema);
      const InstanceGraph& witness = wit == in.witnesses.end() ? empty : *wit->second;
      for (std::size_t i = 0; i < paths.size(); ++i) {
        for (std::size_t j = i + 1; j < paths.size(); ++j) {
          PathFinding f;
          f.p1 = paths[i];
          f.p2 = paths[j];
          f.score1 = score_path(*in.rules, f.p1);
          f.score2 = score_path(*in.rules, f.p2);
          f.commutativity = check_commutativity(*in.rules, f.p1, f.p2, witness, ctx);
          if (!f.commutativity.commutes) {
            f.kind = FindingKind::ConsistencyError;
          } else if (f.score1 == f.score2) {
            f.kind = FindingKind::EqualScoreCommutative;
          } else {
            f.kind = FindingKind::Recommendation;
            f.recommended = f.score1 > f.score2 ? f.p1 : f.p2;
          }
          rep.findings.push_back(std::move(f));
        }
      }
    }
  }
  return rep;
}

Json to_json(const QualityReport& r) {
  auto refs = [](const std::vector<ElementRef>& v) {
    Json a = Json::array();
    for (const auto& x : v) a.push_back(x.str());
    return a;
  };
  Json j;
  j["maximumMatchingSize"] = r.maximum_matching_size;
  j["perfect"] = r.perfect;
  if (r.deficient_set) {
    j["deficientSet"] = Json{{"sources", refs(r.deficient_set->first)},
                             {"neighborhood", refs(r.deficient_set->second)}};
  } else {
    j["deficientSet"] = nullptr;
  }
  j["ruleScores"] = r.rule_scores;
  Json paths = Json::array();
  for (const auto& [p, points] : r.path_scores) {
    Json e = to_json(p);
    e["points"] = points;
    paths.push_back(e);
  }
  j["pathScores"] = paths;
  Json findings = Json::array();
  for (const auto& f : r.findings) {
    Json e{{"kind", std::string(to_string(f.kind))},
           {"paths", Json::array({to_json(f.p1), to_json(f.p2)})},
           {"scores", Json::array({f.score1, f.score2})}};
    e["recommended"] = f.recommended ? to_json(*f.recommended) : Json(nullptr);
    e["commutativity"] = to_json(f.commutativity);
    findings.push_back(e);
  }
  j["commutativityFindings"] = findings;
  j["unmatchedSources"] = refs(r.unmatched_sources);
  j["unmatchedTargets"] = refs(r.unmatched_targets);
  j["propertyCoverage"] = Json{{"matched", r.properties_matched}, {"total", r.properties_total}};
  j["overallScore"] = r.overall_score;
  return j;
}

}  // namespace tgm
