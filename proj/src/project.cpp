#include "tgm/project.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "tgm/importers.hpp"

namespace tgm {

bool operator==(const ProjectConfig& a, const ProjectConfig& b) {
  const auto& x = a.match;
  const auto& y = b.match;
  return x.w_name == y.w_name && x.w_type == y.w_type && x.w_structure == y.w_structure &&
         x.w_description == y.w_description && x.threshold == y.threshold &&
         x.property_margin == y.property_margin && a.max_path_length == b.max_path_length && a.cors == b.cors &&
         a.cors_origin == b.cors_origin;
}

bool operator==(const Project& a, const Project& b) { return to_json(a) == to_json(b); }

const TypedGraphSchema* Project::schema(std::string_view n) const {
  if (target.name == n) return &target;
  for (const auto& s : sources) {
    if (s.name == n) return &s;
  }
  return nullptr;
}

MappingContext Project::context() const {
  MappingContext ctx;
  for (const auto& s : sources) ctx.schemas.push_back(&s);
  ctx.schemas.push_back(&target);
  ctx.correspondences = &correspondences;
  return ctx;
}

void Project::check() const {
  std::set<std::string> names{target.name};
  for (const auto& s : sources) {
    if (!names.insert(s.name).second) throw Error(ErrorCode::InvalidArgument, "duplicate schema name '" + s.name + "'");
  }
  config.match.check();
  if (config.max_path_length < 1) throw Error(ErrorCode::InvalidArgument, "maxPathLength must be >= 1");
  auto resolve = [&](const ElementRef& r, const std::string& where) {
    const auto* s = schema(r.schema);
    if (!s) throw Error(ErrorCode::UnknownSchema, where + ": no schema '" + r.schema + "'");
    if (!resolves(r, *s)) throw Error(ErrorCode::UnresolvedReference, where + ": " + r.str() + " names nothing");
  };
  for (const auto& c : correspondences.items()) {
    resolve(c.source, "correspondence " + c.id);
    resolve(c.target, "correspondence " + c.id);
  }
  if (!correspondences.invariant_holds()) {
    throw Error(ErrorCode::ConflictingAccept, "more than one ACCEPTED record for a pair");
  }
  auto ctx = context();
  for (const auto& r : rules.rules) compile_rule(r, ctx);
  for (const auto& [label, props] : rules.keys) {
    for (const auto& k : props) resolve(ElementRef::of_property(target.name, label, k), "key of " + label);
  }
  for (const auto& [name, path] : data) {
    if (!schema(name)) throw Error(ErrorCode::UnknownSchema, "data file for unknown schema '" + name + "'");
  }
}

// ---- JSON ------------------------------------------------------------------

namespace {

Json config_json(const ProjectConfig& c) {
  return Json{{"match",
               {{"wName", c.match.w_name},
                {"wType", c.match.w_type},
                {"wStructure", c.match.w_structure},
                {"wDescription", c.match.w_description},
                {"threshold", c.match.threshold},
                {"propertyMargin", c.match.property_margin}}},
              {"maxPathLength", c.max_path_length},
              {"cors", {{"enabled", c.cors}, {"origin", c.cors_origin}}}};
}

double number(const JsonCursor& c) {
  if (!c.json().is_number()) c.fail("expected a number");
  return c.json().get<double>();
}

ProjectConfig config_from(const JsonCursor& c) {
  c.only({"match", "maxPathLength", "cors"});
  ProjectConfig cfg;
  if (c.has("match")) {
    auto m = c.at("match");
    m.only({"wName", "wType", "wStructure", "wDescription", "threshold", "propertyMargin"});
    auto get = [&](std::string_view key, double& into) {
      if (m.has(key)) into = number(m.at(key));
    };
    get("wName", cfg.match.w_name);
    get("wType", cfg.match.w_type);
    get("wStructure", cfg.match.w_structure);
    get("wDescription", cfg.match.w_description);
    get("threshold", cfg.match.threshold);
    get("propertyMargin", cfg.match.property_margin);
  }
  if (c.has("maxPathLength")) cfg.max_path_length = static_cast<int>(c.at("maxPathLength").integer());
  if (c.has("cors")) {
    auto k = c.at("cors");
    k.only({"enabled", "origin"});
    if (k.has("enabled")) cfg.cors = k.at("enabled").boolean();
    if (k.has("origin")) cfg.cors_origin = k.at("origin").str();
  }
  return cfg;
}

}  // namespace

Json to_json(const Project& p) {
  Json sources = Json::array();
  for (const auto& s : p.sources) sources.push_back(to_json(s));
  Json data = Json::object();
  for (const auto& [k, v] : p.data) data[k] = v;
  return Json{{"formatVersion", kProjectFormatVersion},
              {"name", p.name},
              {"revision", p.revision},
              {"config", config_json(p.config)},
              {"sources", sources},
              {"target", to_json(p.target)},
              {"data", data},
              {"synonyms", to_json(p.synonyms)},
              {"correspondences", to_json(p.correspondences.items())},
              {"rules", to_json(p.rules)}};
}

Project project_from_json(const JsonCursor& c) {
  c.object();
  if (!c.has("formatVersion")) c.fail("missing formatVersion");
  auto version = c.at("formatVersion").integer();
  if (version != kProjectFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "project format version " + std::to_string(version) +
                                                " is not supported (expected " +
                                                std::to_string(kProjectFormatVersion) + ")");
  }
  c.only({"formatVersion", "name", "revision", "config", "sources", "target", "data", "synonyms", "correspondences",
          "rules"});
  Project p;
  p.name = c.at("name").str();
  if (c.has("revision")) {
    auto rev = c.at("revision").integer();
    if (rev < 0) c.at("revision").fail("revision must be non-negative");
    p.revision = static_cast<std::uint64_t>(rev);
  }
  if (c.has("config")) p.config = config_from(c.at("config"));
  if (c.has("sources")) {
    auto s = c.at("sources");
    for (std::size_t i = 0; i < s.array().size(); ++i) p.sources.push_back(schema_from_json(s.at(i)));
  }
  p.target = schema_from_json(c.at("target"));
  if (c.has("data")) {
    auto d = c.at("data");
    for (const auto& [k, v] : d.object().items()) p.data[k] = d.at(k).str();
  }
  if (c.has("synonyms")) p.synonyms = synonyms_from_json(c.at("synonyms"));
  if (c.has("correspondences")) p.correspondences = CorrespondenceSet(correspondences_from_json(c.at("correspondences")));
  if (c.has("rules")) p.rules = mapping_set_from_json(c.at("rules"));
  p.check();
  return p;
}

Project load_project(const std::filesystem::path& path) {
  auto doc = parse_json_text(read_file(path), path.string());
  return project_from_json(JsonCursor(doc));
}

void save_project(const Project& p, const std::filesystem::path& path,
                  const std::function<void(const std::filesystem::path&)>& before_commit) {
  write_file_atomic(path, to_json(p).dump(2) + "\n", before_commit);
}

// ---- workflow --------------------------------------------------------------

void add_source(Project& p, TypedGraphSchema schema) {
  if (p.schema(schema.name)) throw Error(ErrorCode::InvalidArgument, "schema '" + schema.name + "' already exists");
  schema.check();
  p.sources.push_back(std::move(schema));
}

std::vector<Correspondence> run_match(Project& p, bool parallel) {
  std::vector<Correspondence> fresh;
  for (const auto& s : p.sources) {
    auto existing = p.correspondences.items();
    auto got = propose_matches(s, p.target, p.config.match, p.synonyms, &existing, parallel);
    fresh.insert(fresh.end(), got.begin(), got.end());
  }
  p.correspondences.merge_proposals(fresh);
  return fresh;
}

ImportedSource import_source(std::string_view kind, std::string_view content, const std::string& name,
                             bool with_data) {
  ImportedSource out;
  if (kind == "relational") {
    if (with_data) throw Error(ErrorCode::InvalidArgument, "relational sources carry no instance data");
    out.schema = import_relational(content, name.empty() ? "relational" : name);
  } else if (kind == "json") {
    auto doc = parse_json_text(content, "json source");
    HierarchicalOptions o;
    if (!name.empty()) o.schema_name = name;
    out.schema = import_hierarchical(doc, o).schema;
    if (with_data) out.data = load_hierarchical_instances(doc, out.schema, o);
  } else if (kind == "csv") {
    CsvOptions o;
    if (!name.empty()) o.schema_name = name;
    out.schema = import_csv(content, o).schema;
    if (with_data) out.data = load_csv_instances(content, out.schema, o.node_name);
  } else {
    throw Error(ErrorCode::InvalidArgument, "kind must be relational, json or csv, not '" + std::string(kind) + "'");
  }
  return out;
}

void attach_source(Project& p, ImportedSource src, const std::filesystem::path& project_file) {
  auto name = src.schema.name;
  add_source(p, std::move(src.schema));
  if (!src.data) return;
  auto file = name + ".data.json";
  write_file_atomic(project_file.parent_path() / file, to_json(*src.data).dump(2) + "\n");
  p.data[name] = file;
}

const Correspondence& add_correspondence(Project& p, const ElementRef& source, const ElementRef& target,
                                         const std::string& who) {
  for (const auto* r : {&source, &target}) {
    const auto* s = p.schema(r->schema);
    if (!s) throw Error(ErrorCode::UnknownSchema, "no schema '" + r->schema + "'");
    if (!resolves(*r, *s)) throw Error(ErrorCode::UnresolvedReference, r->str() + " names nothing");
  }
  return p.correspondences.add(source, target, CorrespondenceStatus::Accepted, who);
}

Verdict verdict_from_string(std::string_view s) {
  std::string up(s);
  for (auto& ch : up) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  if (up == "ACCEPT") return Verdict::Accept;
  if (up == "REJECT") return Verdict::Reject;
  throw Error(ErrorCode::InvalidArgument, "verdict must be ACCEPT or REJECT, not '" + std::string(s) + "'");
}

DecisionOutcome decide(Project& p, std::string_view id, Verdict verdict, const std::string& who) {
  const auto& rules = p.rules;
  return p.correspondences.decide(id, verdict, who,
                                  [&](const Correspondence& c) { return rules_depending_on(rules, c); });
}

CompileReport replace_rules(Project& p, const MappingSet& drafts) {
  auto report = compile_rules(drafts, p.context());
  for (const auto& [label, props] : drafts.keys) {
    for (const auto& k : props) {
      auto ref = ElementRef::of_property(p.target.name, label, k);
      if (!resolves(ref, p.target)) report.errors.push_back({"UNRESOLVED_REFERENCE", "", "key " + ref.str()});
    }
  }
  if (report.ok()) p.rules = report.set;
  return report;
}

std::map<std::string, InstanceGraph> load_project_data(const Project& p, const std::filesystem::path& base) {
  std::map<std::string, InstanceGraph> out;
  for (const auto& [name, file] : p.data) {
    std::filesystem::path path(file);
    if (path.is_relative()) path = base / path;
    auto g = load_data_file(p, path);
    if (g.schema_ref != name) throw Error(ErrorCode::InvalidArgument, path.string() + " holds data for " + g.schema_ref);
    out.emplace(name, std::move(g));
  }
  return out;
}

InstanceGraph load_data_file(const Project& p, const std::filesystem::path& path) {
  auto doc = parse_json_text(read_file(path), path.string());
  JsonCursor c(doc);
  const auto* schema = p.schema(c.at("schema").str());
  if (!schema) c.at("schema").fail("no schema '" + c.at("schema").str() + "' in project " + p.name);
  return instance_from_json(c, schema);
}

QualityReport run_quality(const Project& p, const std::map<std::string, InstanceGraph>& data) {
  QualityInput in;
  for (const auto& s : p.sources) in.sources.push_back(&s);
  in.target = &p.target;
  in.decisions = &p.correspondences;
  in.rules = &p.rules;
  for (const auto& [name, g] : data) in.witnesses[name] = &g;
  in.max_path_length = p.config.max_path_length;
  return quality_report(in);
}

namespace {

ExecutionInput execution_input(const Project& p, const std::vector<InstanceGraph>& sources) {
  ExecutionInput in;
  in.target = &p.target;
  for (const auto& s : p.sources) in.source_schemas.push_back(&s);
  in.rules = &p.rules;
  for (const auto& g : sources) in.sources.push_back(&g);
  return in;
}

}  // namespace

ExecutionResult run_execute(const Project& p, const std::vector<InstanceGraph>& sources) {
  return execute(execution_input(p, sources));
}

QueryView run_view(const Project& p, const std::vector<InstanceGraph>& sources, const std::string& node) {
  return run_query_view(execution_input(p, sources), node);
}

Json to_json(const CompileReport& r) {
  Json warnings = Json::array();
  for (const auto& w : r.warnings) warnings.push_back(to_json(w));
  Json errors = Json::array();
  for (const auto& e : r.errors) errors.push_back(to_json(e));
  return Json{{"ok", r.ok()}, {"warnings", warnings}, {"errors", errors}};
}

Json to_json(const DecisionOutcome& d) {
  return Json{{"correspondence", to_json(d.updated)}, {"warnings", d.warnings}};
}

Json to_json(const ExecutionResult& r) {
  Json conflicts = Json::array();
  for (const auto& c : r.conflicts) conflicts.push_back(to_json(c));
  Json provenance = Json::array();
  for (const auto& e : r.provenance) provenance.push_back(to_json(e));
  Json warnings = Json::array();
  for (const auto& w : r.warnings) warnings.push_back(to_json(w));
  Json image = Json::object();
  for (const auto& [k, v] : r.edge_image) image[k] = v;
  return Json{{"target", to_json(r.target)},
              {"conflicts", conflicts},
              {"provenance", provenance},
              {"warnings", warnings},
              {"edgeImage", image}};
}

}  // namespace tgm
