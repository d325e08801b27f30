#include "tgm/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <regex>
#include <thread>


namespace tgm {

namespace {

std::string body_of(const Json& j) { return j.dump(2) + "\n"; }

ApiResponse json_response(int status, const Json& j) {
  ApiResponse r;
  r.status = status;
  r.body = body_of(j);
  return r;
}

ApiResponse error_response(int status, std::string_view code, const std::string& message, Json extra = nullptr) {
  Json j{{"error", std::string(code)}, {"message", message}};
  if (!extra.is_null()) j["details"] = std::move(extra);
  return json_response(status, j);
}

int status_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::UnknownCorrespondence:
    case ErrorCode::UnknownTarget:
      return 404;
    case ErrorCode::ConflictingAccept:
      return 409;
    case ErrorCode::TranslateMiss:
    case ErrorCode::PolicyFail:
    case ErrorCode::TargetInvalid:
    case ErrorCode::NonComposable:
      return 422;
    case ErrorCode::Io:
      return 500;
    default:
      return 400;
  }
}

std::string unquote(std::string s) {
  if (s.starts_with("W/")) s = s.substr(2);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::string etag(std::uint64_t revision) { return "\"" + std::to_string(revision) + "\""; }

}  // namespace

struct Service::Impl {
  std::filesystem::path file;
  ServiceOptions options;
  mutable std::mutex snapshot_mu;  // guards the pointer swap only
  std::shared_ptr<const Project> current;
  std::mutex writer;
  httplib::Server server;
  std::thread background;

  std::shared_ptr<const Project> snapshot() const {
    std::lock_guard lock(snapshot_mu);
    return current;
  }

  void publish(Project next) {
    auto p = std::make_shared<const Project>(std::move(next));
    std::lock_guard lock(snapshot_mu);
    current = std::move(p);
  }

  std::filesystem::path base() const { return file.parent_path(); }

  // Applies `change` to a copy of the current project when If-Match holds.
  template <class F>
  ApiResponse mutate(const ApiRequest& req, F&& change) {
    std::lock_guard lock(writer);
    auto cur = snapshot();
    auto it = req.headers.find("if-match");
    if (it == req.headers.end()) {
      return error_response(428, "PRECONDITION_REQUIRED", "mutations need If-Match: " + etag(cur->revision));
    }
    if (unquote(it->second) != std::to_string(cur->revision)) {
      auto r = error_response(412, "STALE_REVISION",
                              "If-Match " + it->second + " does not match revision " + etag(cur->revision));
      r.headers["ETag"] = etag(cur->revision);
      return r;
    }
    Project next = *cur;
    ApiResponse r = change(next);
    if (r.status >= 300) return r;
    next.revision = cur->revision + 1;
    save_project(next, file);
    publish(std::move(next));
    r.headers["ETag"] = etag(cur->revision + 1);
    return r;
  }

  std::vector<InstanceGraph> data_for(const Project& p, const Json* refs) {
    std::vector<InstanceGraph> out;
    if (!refs || refs->is_null()) {
      for (auto& [name, g] : load_project_data(p, base())) out.push_back(std::move(g));
      return out;
    }
    JsonCursor c(*refs, "/sources");
    for (std::size_t i = 0; i < c.array().size(); ++i) {
      std::filesystem::path path(c.at(i).str());
      if (path.is_relative()) path = base() / path;
      out.push_back(load_data_file(p, path));
    }
    return out;
  }

  ApiResponse get_project() {
    auto p = snapshot();
    auto r = json_response(200, to_json(*p));
    r.headers["ETag"] = etag(p->revision);
    return r;
  }

  static bool truthy(const std::map<std::string, std::string>& form, const std::string& key) {
    auto it = form.find(key);
    return it != form.end() && (it->second == "true" || it->second == "1");
  }

  ApiResponse post_source(const ApiRequest& req) {
    auto kind = req.form.find("kind");
    auto content = req.form.find("file");
    if (kind == req.form.end() || content == req.form.end()) {
      return error_response(400, "INVALID_ARGUMENT", "multipart fields 'kind' and 'file' are required");
    }
    std::string name = req.form.count("name") ? req.form.at("name") : "";
    auto src = import_source(kind->second, content->second, name, truthy(req.form, "withData"));
    return mutate(req, [&](Project& p) {
      if (p.schema(src.schema.name)) {
        return error_response(409, "DUPLICATE_SOURCE", "schema '" + src.schema.name + "' already exists");
      }
      auto body = to_json(src.schema);
      attach_source(p, std::move(src), file);
      return json_response(201, body);
    });
  }

  ApiResponse post_match(const ApiRequest& req) {
    return mutate(req, [&](Project& p) { return json_response(200, to_json(run_match(p))); });
  }

  ApiResponse post_correspondence(const ApiRequest& req) {
    auto doc = parse_json_text(req.body, "body");
    JsonCursor c(doc);
    c.only({"source", "target", "who"});
    auto source = element_ref_from_json(c.at("source"));
    auto target = element_ref_from_json(c.at("target"));
    auto who = c.at("who").str();
    return mutate(req, [&](Project& p) {
      return json_response(201, to_json(add_correspondence(p, source, target, who)));
    });
  }

  ApiResponse post_decision(const ApiRequest& req, const std::string& id) {
    auto doc = parse_json_text(req.body, "body");
    JsonCursor c(doc);
    c.only({"verdict", "who"});
    auto verdict = verdict_from_string(c.at("verdict").str());
    auto who = c.at("who").str();
    return mutate(req, [&](Project& p) { return json_response(200, to_json(decide(p, id, verdict, who))); });
  }

  ApiResponse put_rules(const ApiRequest& req) {
    auto doc = parse_json_text(req.body, "body");
    auto drafts = mapping_set_from_json(JsonCursor(doc));
    return mutate(req, [&](Project& p) {
      auto rep = replace_rules(p, drafts);
      if (!rep.ok()) return json_response(422, to_json(rep));
      return json_response(200, to_json(rep));
    });
  }

  ApiResponse get_quality() {
    auto p = snapshot();
    auto rep = run_quality(*p, load_project_data(*p, base()));
    auto r = json_response(200, to_json(rep));
    r.headers["ETag"] = etag(p->revision);
    return r;
  }

  ApiResponse post_execute(const ApiRequest& req) {
    auto p = snapshot();
    Json doc = req.body.empty() ? Json::object() : parse_json_text(req.body, "body");
    JsonCursor c(doc);
    c.only({"sources"});
    const Json* refs = c.has("sources") ? &doc["sources"] : nullptr;
    auto res = run_execute(*p, data_for(*p, refs));
    return json_response(200, to_json(res));
  }

  ApiResponse get_view(const ApiRequest& req, const std::string& node) {
    auto p = snapshot();
    auto view = run_view(*p, data_for(*p, nullptr), node);
    auto fmt = req.query.count("format") ? req.query.at("format") : "json";
    if (fmt == "csv") {
      ApiResponse r;
      r.body = to_csv(view);
      r.content_type = "text/csv";
      return r;
    }
    if (fmt != "json") return error_response(400, "INVALID_ARGUMENT", "format must be csv or json");
    return json_response(200, to_json(view));
  }

  ApiResponse route(const ApiRequest& req) {
    static const std::string prefix = "/api/v1";
    if (!req.path.starts_with(prefix)) return error_response(404, "NOT_FOUND", "no route " + req.path);
    auto path = req.path.substr(prefix.size());
    const auto& m = req.method;
    static const std::regex decision(R"(^/correspondences/([^/]+)/decision$)");
    static const std::regex view(R"(^/view/([^/]+)$)");
    std::smatch hit;
    if (path == "/project" && m == "GET") return get_project();
    if (path == "/sources" && m == "POST") return post_source(req);
    if (path == "/match" && m == "POST") return post_match(req);
    if (path == "/correspondences" && m == "POST") return post_correspondence(req);
    if (std::regex_match(path, hit, decision) && m == "POST") return post_decision(req, hit[1]);
    if (path == "/rules" && m == "PUT") return put_rules(req);
    if (path == "/quality" && m == "GET") return get_quality();
    if (path == "/execute" && m == "POST") return post_execute(req);
    if (std::regex_match(path, hit, view) && m == "GET") return get_view(req, hit[1]);
    return error_response(404, "NOT_FOUND", "no route " + m + " " + req.path);
  }
};

Service::Service(Project project, std::filesystem::path file, ServiceOptions options) : impl_(new Impl) {
  impl_->file = std::move(file);
  impl_->options = std::move(options);
  impl_->publish(std::move(project));
}

Service::~Service() { stop(); }

std::shared_ptr<const Project> Service::snapshot() const { return impl_->snapshot(); }

ApiResponse Service::handle(const ApiRequest& req) {
  ApiResponse r;
  const auto& opt = impl_->options;
  if (opt.cors && req.method == "OPTIONS") {
    r.status = 204;
  } else if (!opt.token.empty() &&
             (!req.headers.count("authorization") || req.headers.at("authorization") != "Bearer " + opt.token)) {
    r = error_response(401, "UNAUTHORIZED", "missing or wrong bearer token");
  } else {
    try {
      r = impl_->route(req);
    } catch (const TargetInvalidError& e) {
      Json violations = Json::array();
      for (const auto& v : e.report()) violations.push_back(to_json(v));
      r = error_response(422, to_string(e.code()), e.what(), violations);
    } catch (const Error& e) {
      r = error_response(status_for(e.code()), to_string(e.code()), e.what());
    } catch (const std::exception& e) {
      r = error_response(500, "INTERNAL", e.what());
    }
  }
  if (opt.cors) {
    r.headers["Access-Control-Allow-Origin"] = opt.cors_origin;
    r.headers["Access-Control-Allow-Methods"] = "GET, POST, PUT, OPTIONS";
    r.headers["Access-Control-Allow-Headers"] = "Content-Type, If-Match, Authorization";
    r.headers["Access-Control-Expose-Headers"] = "ETag";
  }
  return r;
}

namespace {

ApiRequest from_httplib(const httplib::Request& in) {
  ApiRequest r;
  r.method = in.method;
  r.path = in.path;
  for (const auto& [k, v] : in.headers) {
    std::string key = k;
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char ch) { return std::tolower(ch); });
    r.headers[key] = v;
  }
  for (const auto& [k, v] : in.params) r.query[k] = v;
  for (const auto& [k, f] : in.files) r.form[k] = f.content;
  r.body = in.body;
  return r;
}

}  // namespace

static void install(Service& svc, httplib::Server& server) {
  auto handler = [&svc](const httplib::Request& in, httplib::Response& out) {
    auto r = svc.handle(from_httplib(in));
    out.status = r.status;
    for (const auto& [k, v] : r.headers) out.set_header(k, v);
    out.set_content(r.body, r.content_type);
  };
  const std::string pattern = R"(/api/v1/.*)";
  server.Get(pattern, handler);
  server.Post(pattern, handler);
  server.Put(pattern, handler);
  server.Options(pattern, handler);
}

void Service::serve(const std::string& host, int port) {
  install(*this, impl_->server);
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->server.listen_after_bind();
}

int Service::serve_background(const std::string& host) {
  install(*this, impl_->server);
  int port = impl_->server.bind_to_any_port(host);
  if (port < 0) throw Error(ErrorCode::Io, "cannot bind " + host);
  impl_->background = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->background.joinable()) impl_->background.join();
}

}  // namespace tgm
