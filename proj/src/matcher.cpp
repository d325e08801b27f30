#include "tgm/matcher.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "tgm/error.hpp"
#include "tgm/hash.hpp"

namespace tgm {

// ---- name similarity -------------------------------------------------------

std::string normalize_name(std::string_view name) {
  // Tokens are joined without separator, so splitting camelCase and
  // snake_case reduces to dropping separators and folding case.
  std::string out;
  for (unsigned char c : name) {
    if (c >= 0x80) {
      out += static_cast<char>(c);
    } else if (std::isalnum(c)) {
      out += static_cast<char>(std::tolower(c));
    }
  }
  return out;
}

namespace {

std::u32string code_points(std::string_view s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = s[i];
    int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 1;
    char32_t cp = len == 1 ? c : c & (0x7F >> len);
    for (int k = 1; k < len && i + k < s.size(); ++k) cp = (cp << 6) | (s[i + k] & 0x3F);
    out += cp;
    i += len;
  }
  return out;
}

double quantize(double x) { return std::round(x * 1e9) / 1e9; }

// Synonym table with normalized terms, built once per matching run.
class NameIndex {
 public:
  explicit NameIndex(const SynonymTable& t) {
    for (std::size_t g = 0; g < t.groups.size(); ++g) {
      for (const auto& term : t.groups[g]) group_of_[normalize_name(term)].insert(g);
    }
    for (const auto& group : t.distinct) {
      for (const auto& a : group) {
        for (const auto& b : group) {
          auto na = normalize_name(a), nb = normalize_name(b);
          if (na != nb) distinct_.emplace(na, nb);
        }
      }
    }
  }

  double similarity(std::string_view a, std::string_view b) const {
    std::string na = normalize_name(a), nb = normalize_name(b);
    if (na == nb) return 1.0;
    if (distinct_.count({na, nb})) return 0.0;
    auto ga = group_of_.find(na), gb = group_of_.find(nb);
    if (ga != group_of_.end() && gb != group_of_.end()) {
      for (auto g : ga->second) {
        if (gb->second.count(g)) return 1.0;
      }
    }
    auto ca = code_points(na), cb = code_points(nb);
    std::size_t longest = std::max(ca.size(), cb.size());
    return 1.0 - static_cast<double>(lev(ca, cb)) / static_cast<double>(longest);
  }

  static std::size_t lev(const std::u32string& a, const std::u32string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      cur[0] = i;
      for (std::size_t j = 1; j <= b.size(); ++j) {
        cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
      }
      std::swap(prev, cur);
    }
    return prev[b.size()];
  }

 private:
  std::map<std::string, std::set<std::size_t>> group_of_;
  std::set<std::pair<std::string, std::string>> distinct_;
};

// (sum over a of best match in b + sum over b of best match in a) / (|a|+|b|).
template <typename T, typename F>
double best_pairing_mean(const std::vector<T>& a, const std::vector<T>& b, F sim) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  std::vector<double> best_b(b.size(), 0.0);
  double total = 0;
  for (const auto& x : a) {
    double best = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      double s = sim(x, b[j]);
      best = std::max(best, s);
      best_b[j] = std::max(best_b[j], s);
    }
    total += best;
  }
  for (double s : best_b) total += s;
  return total / static_cast<double>(a.size() + b.size());
}

}  // namespace

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return NameIndex::lev(code_points(a), code_points(b));
}

double name_similarity(std::string_view a, std::string_view b, const SynonymTable& synonyms) {
  return NameIndex(synonyms).similarity(a, b);
}

// ---- type compatibility ----------------------------------------------------

double type_compatibility(const DataType& a, const DataType& b) {
  auto widening = [](TypeKind k) {
    return k == TypeKind::Integer || k == TypeKind::Decimal || k == TypeKind::String;
  };
  if (a.kind == TypeKind::Composite && b.kind == TypeKind::Composite) {
    std::size_t n = std::max(a.fields.size(), b.fields.size());
    if (n == 0) return 1.0;
    double sum = 0;
    for (const auto& fa : a.fields) {
      for (const auto& fb : b.fields) {
        if (fa.name == fb.name) sum += type_compatibility(fa.type, fb.type);
      }
    }
    return sum / static_cast<double>(n);
  }
  if (a.kind == TypeKind::Enumeration && b.kind == TypeKind::Enumeration) {
    std::set<std::string> va, vb;
    for (const auto& v : a.allowed) va.insert(nfc(v));
    for (const auto& v : b.allowed) vb.insert(nfc(v));
    return va == vb ? 1.0 : 0.5;
  }
  if (a.kind == b.kind) return 1.0;
  if (widening(a.kind) && widening(b.kind)) return 0.8;
  if ((a.kind == TypeKind::String && b.kind == TypeKind::Enumeration) ||
      (a.kind == TypeKind::Enumeration && b.kind == TypeKind::String)) {
    return 0.5;
  }
  return 0.0;
}

// ---- structure -------------------------------------------------------------

namespace {

struct Incidence {
  std::vector<std::pair<EdgeKind, bool>> signature;  // (kind, outgoing)
  std::vector<std::string> neighbors;                // labels
};

Incidence incidence_of(const TypedGraphSchema& s, std::string_view node_id) {
  Incidence out;
  for (const auto& e : s.edges) {
    for (std::size_t i = 0; i < e.endpoints.size(); ++i) {
      if (e.endpoints[i].node != node_id) continue;
      out.signature.emplace_back(e.kind, i == 0);
      for (std::size_t j = 0; j < e.endpoints.size(); ++j) {
        if (j == i) continue;
        const auto* n = s.node(e.endpoints[j].node);
        out.neighbors.push_back(n ? n->label : e.endpoints[j].node);
      }
    }
  }
  return out;
}

double multiset_jaccard(const std::vector<std::pair<EdgeKind, bool>>& a,
                        const std::vector<std::pair<EdgeKind, bool>>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::map<std::pair<EdgeKind, bool>, std::pair<int, int>> counts;
  for (const auto& x : a) ++counts[x].first;
  for (const auto& x : b) ++counts[x].second;
  int inter = 0, uni = 0;
  for (const auto& [k, c] : counts) {
    inter += std::min(c.first, c.second);
    uni += std::max(c.first, c.second);
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

StructuralScore structural(const Incidence& a, const Incidence& b, const NameIndex& names) {
  StructuralScore s;
  s.signature_jaccard = multiset_jaccard(a.signature, b.signature);
  s.neighbor = best_pairing_mean(a.neighbors, b.neighbors,
                                 [&](const std::string& x, const std::string& y) { return names.similarity(x, y); });
  s.score = (s.signature_jaccard + s.neighbor) / 2;
  return s;
}

double edge_kind_compatibility(EdgeKind a, EdgeKind b) {
  if (a == b) return 1.0;
  auto directed = [](EdgeKind k) { return k == EdgeKind::Function || k == EdgeKind::Aggregation; };
  return directed(a) && directed(b) ? 0.5 : 0.0;
}

}  // namespace

StructuralScore structural_similarity(const TypedGraphSchema& s, std::string_view s_node,
                                      const TypedGraphSchema& g, std::string_view g_node,
                                      const SynonymTable& synonyms) {
  const auto* a = s.node_by_label(s_node);
  const auto* b = g.node_by_label(g_node);
  if (!a || !b) {
    throw Error(ErrorCode::UnknownElement, "structural similarity of unresolved nodes " + std::string(s_node) +
                                               " / " + std::string(g_node));
  }
  NameIndex names(synonyms);
  return structural(incidence_of(s, a->id), incidence_of(g, b->id), names);
}

// ---- scoring kernels -------------------------------------------------------

void MatchConfig::check() const {
  double sum = w_name + w_type + w_structure + w_description;
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "match weights must sum to 1");
  if (w_name < 0 || w_type < 0 || w_structure < 0 || w_description < 0) {
    throw Error(ErrorCode::InvalidArgument, "match weights must be non-negative");
  }
  if (threshold < 0 || threshold > 1) throw Error(ErrorCode::InvalidArgument, "threshold must lie in [0,1]");
}

namespace {

template <typename F>
void for_each_pair(std::size_t n, std::size_t m, bool parallel, F f) {
  const long total = static_cast<long>(n * m);
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long k = 0; k < total; ++k) f(static_cast<std::size_t>(k) / m, static_cast<std::size_t>(k) % m);
  } else {
    for (long k = 0; k < total; ++k) f(static_cast<std::size_t>(k) / m, static_cast<std::size_t>(k) % m);
  }
}

}  // namespace

MatchScores score_all_pairs(const TypedGraphSchema& source, const TypedGraphSchema& target,
                            const MatchConfig& config, const SynonymTable& synonyms, bool parallel) {
  config.check();
  NameIndex names(synonyms);
  MatchScores out;
  auto combine = [&](PairScore& p) {
    p.name = quantize(p.name);
    p.type = quantize(p.type);
    p.structure = quantize(p.structure);
    p.combined = quantize(config.w_name * p.name + config.w_type * p.type + config.w_structure * p.structure);
  };

  std::vector<Incidence> s_inc, g_inc;
  std::vector<std::pair<std::size_t, std::size_t>> s_prop_at, g_prop_at;  // (node index, property index)
  for (std::size_t i = 0; i < source.nodes.size(); ++i) {
    const auto& n = source.nodes[i];
    out.source_nodes.push_back(ElementRef::of_node(source.name, n.label));
    s_inc.push_back(incidence_of(source, n.id));
    for (std::size_t p = 0; p < n.properties.size(); ++p) {
      out.source_props.push_back(ElementRef::of_property(source.name, n.label, n.properties[p].name));
      s_prop_at.emplace_back(i, p);
    }
  }
  for (std::size_t j = 0; j < target.nodes.size(); ++j) {
    const auto& n = target.nodes[j];
    out.target_nodes.push_back(ElementRef::of_node(target.name, n.label));
    g_inc.push_back(incidence_of(target, n.id));
    for (std::size_t p = 0; p < n.properties.size(); ++p) {
      out.target_props.push_back(ElementRef::of_property(target.name, n.label, n.properties[p].name));
      g_prop_at.emplace_back(j, p);
    }
  }
  for (const auto& e : source.edges) out.source_edges.push_back(ElementRef::of_edge(source.name, e.id));
  for (const auto& e : target.edges) out.target_edges.push_back(ElementRef::of_edge(target.name, e.id));

  const std::size_t sn = source.nodes.size(), gn = target.nodes.size();
  out.nodes.resize(sn * gn);
  for_each_pair(sn, gn, parallel, [&](std::size_t i, std::size_t j) {
    const auto& a = source.nodes[i];
    const auto& b = target.nodes[j];
    PairScore& p = out.nodes[i * gn + j];
    p.i = i;
    p.j = j;
    p.name = names.similarity(a.label, b.label);
    p.type = best_pairing_mean(a.properties, b.properties, [](const Property& x, const Property& y) {
      return type_compatibility(x.type, y.type);
    });
    p.structure = structural(s_inc[i], g_inc[j], names).score;
    combine(p);
  });

  const std::size_t sp = s_prop_at.size(), gp = g_prop_at.size();
  out.props.resize(sp * gp);
  for_each_pair(sp, gp, parallel, [&](std::size_t i, std::size_t j) {
    auto [ni, pi] = s_prop_at[i];
    auto [nj, pj] = g_prop_at[j];
    const auto& a = source.nodes[ni].properties[pi];
    const auto& b = target.nodes[nj].properties[pj];
    PairScore& p = out.props[i * gp + j];
    p.i = i;
    p.j = j;
    p.name = names.similarity(a.name, b.name);
    p.type = type_compatibility(a.type, b.type);
    p.structure = out.nodes[ni * gn + nj].structure;
    combine(p);
  });

  const std::size_t se = source.edges.size(), ge = target.edges.size();
  out.edges.resize(se * ge);
  for_each_pair(se, ge, parallel, [&](std::size_t i, std::size_t j) {
    const auto& a = source.edges[i];
    const auto& b = target.edges[j];
    PairScore& p = out.edges[i * ge + j];
    p.i = i;
    p.j = j;
    p.name = names.similarity(a.label, b.label);
    p.type = edge_kind_compatibility(a.kind, b.kind);
    std::vector<std::string> la, lb;
    for (const auto& ep : a.endpoints) la.push_back(source.node(ep.node)->label);
    for (const auto& ep : b.endpoints) lb.push_back(target.node(ep.node)->label);
    p.structure = best_pairing_mean(la, lb, [&](const std::string& x, const std::string& y) {
      return names.similarity(x, y);
    });
    combine(p);
  });
  return out;
}

std::string correspondence_id(const ElementRef& source, const ElementRef& target) {
  return "m" + short_hash(source.str() + "|" + target.str(), 10);
}

namespace {

Correspondence proposal(const ElementRef& s, const ElementRef& t, const PairScore& p) {
  Correspondence c;
  c.id = correspondence_id(s, t);
  c.source = s;
  c.target = t;
  c.confidence = p.combined;
  c.evidence = {{"name", p.name}, {"type", p.type}, {"structure", p.structure}};
  return c;
}

}  // namespace

std::vector<Correspondence> propose_matches(const TypedGraphSchema& source, const TypedGraphSchema& target,
                                            const MatchConfig& config, const SynonymTable& synonyms,
                                            const std::vector<Correspondence>* existing, bool parallel) {
  MatchScores sc = score_all_pairs(source, target, config, synonyms, parallel);
  const double threshold = quantize(config.threshold);
  const double strong = quantize(config.threshold + config.property_margin);
  std::vector<Correspondence> out;

  std::set<std::pair<std::string, std::string>> node_ok;
  if (existing) {
    for (const auto& c : *existing) {
      if (c.status == CorrespondenceStatus::Accepted && c.source.kind == ElementKind::Node &&
          c.target.kind == ElementKind::Node) {
        node_ok.emplace(c.source.str(), c.target.str());
      }
    }
  }
  for (const auto& p : sc.nodes) {
    if (p.combined < threshold) continue;
    const auto& s = sc.source_nodes[p.i];
    const auto& t = sc.target_nodes[p.j];
    node_ok.emplace(s.str(), t.str());
    out.push_back(proposal(s, t, p));
  }
  for (const auto& p : sc.props) {
    if (p.combined < threshold) continue;
    const auto& s = sc.source_props[p.i];
    const auto& t = sc.target_props[p.j];
    if (p.combined < strong && !node_ok.count({s.owner().str(), t.owner().str()})) continue;
    out.push_back(proposal(s, t, p));
  }
  for (const auto& p : sc.edges) {
    if (p.combined < threshold) continue;
    out.push_back(proposal(sc.source_edges[p.i], sc.target_edges[p.j], p));
  }
  std::sort(out.begin(), out.end(), [](const Correspondence& a, const Correspondence& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.source.str() != b.source.str()) return a.source.str() < b.source.str();
    return a.target.str() < b.target.str();
  });
  return out;
}

// ---- decisions -------------------------------------------------------------

std::string_view to_string(CorrespondenceStatus s) {
  switch (s) {
    case CorrespondenceStatus::Proposed: return "PROPOSED";
    case CorrespondenceStatus::Accepted: return "ACCEPTED";
    case CorrespondenceStatus::Rejected: return "REJECTED";
  }
  return "?";
}

CorrespondenceSet::CorrespondenceSet(std::vector<Correspondence> items) : items_(std::move(items)) {
  if (!invariant_holds()) {
    throw Error(ErrorCode::ConflictingAccept, "correspondence list accepts the same pair twice");
  }
}

const Correspondence* CorrespondenceSet::find(std::string_view id) const {
  for (const auto& c : items_) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

std::vector<const Correspondence*> CorrespondenceSet::accepted() const {
  std::vector<const Correspondence*> out;
  for (const auto& c : items_) {
    if (c.status == CorrespondenceStatus::Accepted) out.push_back(&c);
  }
  return out;
}

bool CorrespondenceSet::is_accepted(const ElementRef& source, const ElementRef& target) const {
  for (const auto& c : items_) {
    if (c.status == CorrespondenceStatus::Accepted && c.source == source && c.target == target) return true;
  }
  return false;
}

DecisionOutcome CorrespondenceSet::decide(std::string_view id, Verdict verdict, const std::string& who,
                                          const DependentRules& dependents) {
  auto it = std::find_if(items_.begin(), items_.end(), [&](const Correspondence& c) { return c.id == id; });
  if (it == items_.end()) throw Error(ErrorCode::UnknownCorrespondence, "no correspondence " + std::string(id));
  DecisionOutcome out;
  if (verdict == Verdict::Accept) {
    for (const auto& other : items_) {
      if (other.id != it->id && other.status == CorrespondenceStatus::Accepted && other.source == it->source &&
          other.target == it->target) {
        throw Error(ErrorCode::ConflictingAccept, it->source.str() + " -> " + it->target.str() +
                                                      " is already accepted as " + other.id);
      }
    }
    it->status = CorrespondenceStatus::Accepted;
  } else {
    bool was_accepted = it->status == CorrespondenceStatus::Accepted;
    it->status = CorrespondenceStatus::Rejected;
    if (was_accepted && dependents) {
      auto rules = dependents(*it);
      if (!rules.empty()) {
        std::string list;
        for (std::size_t i = 0; i < rules.size(); ++i) list += (i ? ", " : "") + rules[i];
        out.warnings.push_back("rejected " + it->id + " (" + it->source.str() + " -> " + it->target.str() +
                               ") but mapping rules depend on it: " + list);
      }
    }
  }
  it->decided_by = who;
  out.updated = *it;
  return out;
}

const Correspondence& CorrespondenceSet::add(const ElementRef& source, const ElementRef& target,
                                             CorrespondenceStatus status, const std::string& who) {
  if (status == CorrespondenceStatus::Accepted && is_accepted(source, target)) {
    throw Error(ErrorCode::ConflictingAccept, source.str() + " -> " + target.str() + " is already accepted");
  }
  Correspondence c;
  c.source = source;
  c.target = target;
  c.confidence = 1.0;
  c.evidence = {{"manual", 1.0}};
  c.status = status;
  if (status != CorrespondenceStatus::Proposed) c.decided_by = who;
  std::string base = correspondence_id(source, target);
  c.id = base;
  for (int n = 2; find(c.id); ++n) c.id = base + "-" + std::to_string(n);
  items_.push_back(std::move(c));
  return items_.back();
}

void CorrespondenceSet::merge_proposals(const std::vector<Correspondence>& fresh) {
  std::erase_if(items_, [](const Correspondence& c) { return c.status == CorrespondenceStatus::Proposed; });
  std::set<std::pair<std::string, std::string>> decided;
  for (const auto& c : items_) decided.emplace(c.source.str(), c.target.str());
  for (const auto& f : fresh) {
    if (decided.count({f.source.str(), f.target.str()}) || find(f.id)) continue;
    items_.push_back(f);
  }
}

bool CorrespondenceSet::invariant_holds() const {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& c : items_) {
    if (c.status != CorrespondenceStatus::Accepted) continue;
    if (!seen.emplace(c.source.str(), c.target.str()).second) return false;
  }
  return true;
}

// ---- JSON ------------------------------------------------------------------

Json to_json(const SynonymTable& t) {
  return Json{{"groups", t.groups}, {"distinct", t.distinct}};
}

SynonymTable synonyms_from_json(const JsonCursor& c) {
  c.only({"groups", "distinct"});
  SynonymTable t;
  auto read = [&](std::string_view key, std::vector<std::vector<std::string>>& into) {
    if (!c.has(key)) return;
    auto list = c.at(key);
    for (std::size_t i = 0; i < list.array().size(); ++i) {
      auto g = list.at(i);
      std::vector<std::string> group;
      for (std::size_t k = 0; k < g.array().size(); ++k) group.push_back(g.at(k).str());
      if (group.empty()) g.fail("synonym group is empty");
      into.push_back(std::move(group));
    }
  };
  read("groups", t.groups);
  read("distinct", t.distinct);
  return t;
}

Json to_json(const ElementRef& r) {
  std::string element = r.str().substr(r.schema.size() + 1);
  return Json{{"schema", r.schema}, {"kind", std::string(to_string(r.kind))}, {"element", element}};
}

ElementRef element_ref_from_json(const JsonCursor& c) {
  if (c.json().is_string()) {
    try {
      return ElementRef::parse(c.str());
    } catch (const Error& e) {
      c.fail(e.what());
    }
  }
  c.only({"schema", "kind", "element"});
  ElementRef r;
  try {
    r = ElementRef::parse(c.at("schema").str() + ":" + c.at("element").str());
  } catch (const Error& e) {
    c.fail(e.what());
  }
  if (c.has("kind") && c.at("kind").str() != to_string(r.kind)) {
    c.at("kind").fail("kind does not match element '" + c.at("element").str() + "'");
  }
  return r;
}

Json to_json(const Correspondence& c) {
  Json ev = Json::array();
  for (const auto& e : c.evidence) ev.push_back(Json{{"signal", e.signal}, {"score", e.score}});
  Json j{{"id", c.id},
         {"source", to_json(c.source)},
         {"target", to_json(c.target)},
         {"confidence", c.confidence},
         {"evidence", ev},
         {"status", std::string(to_string(c.status))}};
  j["decidedBy"] = c.decided_by ? Json(*c.decided_by) : Json(nullptr);
  return j;
}

namespace {

double unit_score(const JsonCursor& c) {
  if (!c.json().is_number()) c.fail("expected a number");
  double v = c.json().get<double>();
  if (v < 0 || v > 1) c.fail("score must lie in [0,1]");
  return v;
}

}  // namespace

Correspondence correspondence_from_json(const JsonCursor& c) {
  c.only({"id", "source", "target", "confidence", "evidence", "status", "decidedBy"});
  Correspondence out;
  out.id = c.at("id").str();
  out.source = element_ref_from_json(c.at("source"));
  out.target = element_ref_from_json(c.at("target"));
  out.confidence = c.has("confidence") ? unit_score(c.at("confidence")) : 1.0;
  if (c.has("evidence")) {
    auto ev = c.at("evidence");
    for (std::size_t i = 0; i < ev.array().size(); ++i) {
      auto e = ev.at(i);
      e.only({"signal", "score"});
      out.evidence.push_back({e.at("signal").str(), unit_score(e.at("score"))});
    }
  }
  std::string status = c.has("status") ? c.at("status").str() : "PROPOSED";
  if (status == "PROPOSED") out.status = CorrespondenceStatus::Proposed;
  else if (status == "ACCEPTED") out.status = CorrespondenceStatus::Accepted;
  else if (status == "REJECTED") out.status = CorrespondenceStatus::Rejected;
  else c.at("status").fail("unknown status '" + status + "'");
  if (c.has("decidedBy") && !c.at("decidedBy").json().is_null()) out.decided_by = c.at("decidedBy").str();
  return out;
}

Json to_json(const std::vector<Correspondence>& list) {
  Json j = Json::array();
  for (const auto& c : list) j.push_back(to_json(c));
  return j;
}

std::vector<Correspondence> correspondences_from_json(const JsonCursor& c) {
  std::vector<Correspondence> out;
  for (std::size_t i = 0; i < c.array().size(); ++i) out.push_back(correspondence_from_json(c.at(i)));
  return out;
}

}  // namespace tgm
