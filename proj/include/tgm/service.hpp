#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "tgm/project.hpp"

namespace tgm {

struct ServiceOptions {
  bool cors = false;
  std::string cors_origin = "*";
  std::string token;  // bearer token; empty disables the check
};

/// Transport-neutral request. Header names are lower case.
struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> headers;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> form;  // multipart fields, name -> content
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
  std::map<std::string, std::string> headers;
};

/// One project per process. Reads work on immutable snapshots; mutations
/// are serialized by a writer lock, need If-Match: "<revision>" and bump the
/// revision by one before the project file is saved.
class Service {
 public:
  Service(Project project, std::filesystem::path file, ServiceOptions options = {});

  ApiResponse handle(const ApiRequest& req);
  std::shared_ptr<const Project> snapshot() const;

  /// Blocks until stop(). Throws Error(Io) when the address cannot be bound.
  void serve(const std::string& host, int port);
  /// Binds an ephemeral port, serves on a background thread and returns the port.
  int serve_background(const std::string& host);
  void stop();

  ~Service();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tgm
