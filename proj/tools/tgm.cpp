// tgm: command-line front end for the integration workflow.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "tgm/importers.hpp"
#include "tgm/json_io.hpp"
#include "tgm/project.hpp"
#include "tgm/service.hpp"

namespace fs = std::filesystem;
using namespace tgm;

namespace {

std::string dumped(const Json& j) { return j.dump(2) + "\n"; }

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << dumped(j);
  } else {
    write_file_atomic(out, dumped(j));
  }
}

// Loads, applies `change`, bumps the revision and saves.
template <class F>
void mutate(const std::string& file, F&& change) {
  auto p = load_project(file);
  change(p);
  p.revision += 1;
  save_project(p, file);
}

MappingPath parse_path(const std::string& ids, const std::string& from, const std::string& to) {
  MappingPath p;
  p.from = ElementRef::parse(from);
  p.to = ElementRef::parse(to);
  std::stringstream in(ids);
  std::string id;
  while (std::getline(in, id, ',')) {
    if (!id.empty()) p.rules.push_back(id);
  }
  if (p.rules.empty()) throw Error(ErrorCode::InvalidArgument, "empty path '" + ids + "'");
  return p;
}

std::vector<InstanceGraph> load_data(const Project& p, const fs::path& project_file,
                                     const std::vector<std::string>& files) {
  std::vector<InstanceGraph> out;
  if (files.empty()) {
    for (auto& [name, g] : load_project_data(p, project_file.parent_path())) out.push_back(std::move(g));
  }
  for (const auto& f : files) out.push_back(load_data_file(p, f));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Typed-graph schema integration"};
  app.require_subcommand(1);
  int exit_code = 0;

  // ---- import / export ----
  std::string kind, in, out, name, data_out;
  auto* imp = app.add_subcommand("import", "Import a source into a .tgs.json schema");
  imp->add_option("--kind", kind, "relational|json|csv")->required();
  imp->add_option("--in", in)->required();
  imp->add_option("--out", out)->required();
  imp->add_option("--name", name, "schema name");
  imp->add_option("--data-out", data_out, "also write the file's instances (json, csv)");
  imp->callback([&] {
    auto src = import_source(kind, read_file(in), name, !data_out.empty());
    save_schema(src.schema, out);
    if (src.data) write_file_atomic(data_out, dumped(to_json(*src.data)));
  });

  auto* exp = app.add_subcommand("export", "Export a schema as SQL DDL");
  exp->add_option("--kind", kind)->required()->check(CLI::IsMember({"relational"}));
  exp->add_option("--in", in)->required();
  exp->add_option("--out", out)->required();
  exp->callback([&] { write_file_atomic(out, export_relational(load_schema(in))); });

  // ---- project setup ----
  std::string project, target_file, synonyms_file;
  auto* init = app.add_subcommand("init", "Create a project around a target schema");
  init->add_option("--name", name)->required();
  init->add_option("--target", target_file, ".tgs.json of the mediated schema")->required();
  init->add_option("--synonyms", synonyms_file);
  init->add_option("--out", out)->required();
  init->callback([&] {
    Project p;
    p.name = name;
    p.target = load_schema(target_file);
    if (!synonyms_file.empty()) {
      auto doc = parse_json_text(read_file(synonyms_file), synonyms_file);
      p.synonyms = synonyms_from_json(JsonCursor(doc));
    }
    p.check();
    save_project(p, out);
  });

  bool with_data = false;
  auto* source = app.add_subcommand("source", "Add a source schema to a project");
  source->add_option("--project", project)->required();
  source->add_option("--kind", kind, "relational|json|csv")->required();
  source->add_option("--in", in)->required();
  source->add_option("--name", name);
  source->add_flag("--with-data", with_data, "keep the file's instances as project data");
  source->callback([&] {
    auto src = import_source(kind, read_file(in), name, with_data);
    mutate(project, [&](Project& p) { attach_source(p, std::move(src), project); });
  });

  // ---- matching ----
  std::string source_file;
  auto* match = app.add_subcommand("match", "Propose correspondences");
  match->add_option("--source", source_file);
  match->add_option("--target", target_file);
  match->add_option("--synonyms", synonyms_file);
  match->add_option("--project", project, "match every project source and save the proposals");
  match->add_option("--out", out);
  match->callback([&] {
    if (!project.empty()) {
      std::vector<Correspondence> fresh;
      mutate(project, [&](Project& p) { fresh = run_match(p); });
      emit(to_json(fresh), out);
      return;
    }
    if (source_file.empty() || target_file.empty()) {
      throw Error(ErrorCode::InvalidArgument, "match needs --project or both --source and --target");
    }
    SynonymTable syn;
    if (!synonyms_file.empty()) {
      auto doc = parse_json_text(read_file(synonyms_file), synonyms_file);
      syn = synonyms_from_json(JsonCursor(doc));
    }
    emit(to_json(propose_matches(load_schema(source_file), load_schema(target_file), MatchConfig{}, syn)), out);
  });

  std::string id, verdict, who, src_ref, tgt_ref;
  auto* decide_cmd = app.add_subcommand("decide", "Accept or reject a correspondence");
  decide_cmd->add_option("--project", project)->required();
  decide_cmd->add_option("--id", id)->required();
  decide_cmd->add_option("--verdict", verdict, "ACCEPT|REJECT")->required();
  decide_cmd->add_option("--who", who)->required();
  decide_cmd->callback([&] {
    auto v = verdict_from_string(verdict);
    Json result;
    mutate(project, [&](Project& p) { result = to_json(decide(p, id, v, who)); });
    emit(result, "");
  });

  auto* correspond = app.add_subcommand("correspond", "Record an expert-supplied accepted pair");
  correspond->add_option("--project", project)->required();
  correspond->add_option("--source", src_ref, "schema:Node[.prop]")->required();
  correspond->add_option("--target", tgt_ref)->required();
  correspond->add_option("--who", who)->required();
  correspond->callback([&] {
    auto s = ElementRef::parse(src_ref);
    auto t = ElementRef::parse(tgt_ref);
    Json result;
    mutate(project, [&](Project& p) { result = to_json(add_correspondence(p, s, t, who)); });
    emit(result, "");
  });

  // ---- mapping ----
  auto* map = app.add_subcommand("map", "Mapping rules");
  map->require_subcommand(1);
  std::string rules_file;
  auto* compile = map->add_subcommand("compile", "Compile a .map.json into the project");
  compile->add_option("--project", project)->required();
  compile->add_option("--rules", rules_file)->required();
  compile->callback([&] {
    auto doc = parse_json_text(read_file(rules_file), rules_file);
    auto drafts = mapping_set_from_json(JsonCursor(doc));
    auto p = load_project(project);
    auto rep = replace_rules(p, drafts);
    emit(to_json(rep), "");
    if (!rep.ok()) {
      exit_code = 1;
      return;
    }
    p.revision += 1;
    save_project(p, project);
  });

  std::string from, to;
  int max_length = 0;
  auto* paths = map->add_subcommand("paths", "List rule chains between two elements");
  paths->add_option("--project", project)->required();
  paths->add_option("--from", from)->required();
  paths->add_option("--to", to)->required();
  paths->add_option("--max-length", max_length, "defaults to the project setting");
  paths->callback([&] {
    auto p = load_project(project);
    int len = max_length > 0 ? max_length : p.config.max_path_length;
    Json list = Json::array();
    for (const auto& path : enumerate_paths(p.rules, ElementRef::parse(from), ElementRef::parse(to), len)) {
      auto j = to_json(path);
      j["score"] = score_path(p.rules, path);
      list.push_back(std::move(j));
    }
    emit(list, "");
  });

  std::string p1, p2, witness;
  auto* commute = map->add_subcommand("commute", "Check that two rule chains agree on witness data");
  commute->add_option("--project", project)->required();
  commute->add_option("--p1", p1, "comma-separated rule ids")->required();
  commute->add_option("--p2", p2)->required();
  commute->add_option("--from", from)->required();
  commute->add_option("--to", to)->required();
  commute->add_option("--witness", witness, "instance data of the source schema")->required();
  commute->callback([&] {
    auto p = load_project(project);
    auto a = parse_path(p1, from, to);
    auto b = parse_path(p2, from, to);
    check_path(p.rules, a);
    check_path(p.rules, b);
    auto g = load_data_file(p, witness);
    auto r = check_commutativity(p.rules, a, b, g, p.context());
    emit(to_json(r), "");
    if (!r.commutes) exit_code = 2;
  });

  // ---- quality ----
  auto* quality = app.add_subcommand("quality", "Coverage and consistency report");
  quality->add_option("--project", project)->required();
  quality->add_option("--out", out);
  quality->callback([&] {
    auto p = load_project(project);
    auto rep = run_quality(p, load_project_data(p, fs::path(project).parent_path()));
    emit(to_json(rep), out);
    if (!rep.perfect || rep.consistency_errors() > 0) exit_code = 2;
  });

  // ---- execution ----
  std::vector<std::string> sources;
  std::string log, format = "json", node;
  auto* run = app.add_subcommand("run", "Materialize the target instance graph");
  run->add_option("--project", project)->required();
  run->add_option("--sources", sources, "instance data files; defaults to the project data");
  run->add_option("--out", out)->required();
  run->add_option("--log", log, "conflicts, provenance, warnings and edge image");
  run->callback([&] {
    auto p = load_project(project);
    auto j = to_json(run_execute(p, load_data(p, project, sources)));
    emit(j["target"], out);
    j.erase("target");
    if (!log.empty()) emit(j, log);
  });

  auto* view = app.add_subcommand("view", "Query one target node type");
  view->add_option("--project", project)->required();
  view->add_option("--target", node, "target node label")->required();
  view->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  view->add_option("--sources", sources);
  view->add_option("--out", out);
  view->callback([&] {
    auto p = load_project(project);
    auto v = run_view(p, load_data(p, project, sources), node);
    if (format == "json") {
      emit(to_json(v), out);
    } else if (out.empty() || out == "-") {
      std::cout << to_csv(v);
    } else {
      write_file_atomic(out, to_csv(v));
    }
  });

  // ---- service ----
  std::string addr = "127.0.0.1:8080", token;
  bool cors = false;
  auto* serve = app.add_subcommand("serve", "HTTP API over a project file");
  serve->add_option("--project", project)->required();
  serve->add_option("--addr", addr, "host:port");
  serve->add_flag("--cors", cors, "send CORS headers (also enabled by the project config)");
  serve->add_option("--token", token, "require Authorization: Bearer <token>");
  serve->callback([&] {
    auto colon = addr.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--addr must be host:port");
    int port = std::stoi(addr.substr(colon + 1));
    auto p = load_project(project);
    ServiceOptions o;
    o.cors = cors || p.config.cors;
    o.cors_origin = p.config.cors_origin;
    o.token = token;
    Service svc(std::move(p), project, o);
    std::cerr << "serving " << project << " on http://" << addr << "/api/v1\n";
    svc.serve(addr.substr(0, colon), port);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
