#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "tgm/instance.hpp"
#include "tgm/schema.hpp"

namespace tgm {

using Json = nlohmann::ordered_json;

/// Walks a JSON document while tracking the JSON pointer of the current
/// position, so decode failures report e.g. "/nodes/2/label".
class JsonCursor {
 public:
  JsonCursor(const Json& j, std::string pointer = "") : j_(&j), ptr_(std::move(pointer)) {}

  const Json& json() const { return *j_; }
  const std::string& pointer() const { return ptr_; }

  JsonCursor at(std::string_view key) const;
  JsonCursor at(std::size_t index) const;
  bool has(std::string_view key) const;

  std::string str() const;
  std::int64_t integer() const;
  bool boolean() const;
  const Json& array() const;
  const Json& object() const;

  /// Rejects members other than `allowed`.
  void only(std::initializer_list<std::string_view> allowed) const;

  [[noreturn]] void fail(const std::string& message) const;

 private:
  const Json* j_;
  std::string ptr_;
};

/// Parses text, mapping syntax errors to Error(ParseError) with a byte offset.
Json parse_json_text(std::string_view text, std::string_view what = "input");

std::string read_file(const std::filesystem::path& path);
/// Writes via temp file + rename so readers never observe partial content.
/// `before_commit` (if set) sees the temp path before the rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content,
                       const std::function<void(const std::filesystem::path&)>& before_commit = {});

Json to_json(const Value& v);
/// Untyped decode (integers, decimals from JSON numbers, strings, booleans).
Value value_from_json(const Json& j);
/// Decode against a declared type; falls back to the untyped value when it
/// cannot conform, leaving the mismatch for validation to report.
Value value_from_json(const Json& j, const DataType& type);

Json to_json(const DataType& t);
DataType datatype_from_json(const JsonCursor& c, const TypedGraphSchema* named_types = nullptr);

/// Canonical `.tgs.json` form: {name, types, nodes, edges, constraints}.
Json to_json(const TypedGraphSchema& s);
/// Strict decode: unknown fields are rejected; the result is check()ed.
TypedGraphSchema schema_from_json(const JsonCursor& c);
TypedGraphSchema load_schema(const std::filesystem::path& path);
void save_schema(const TypedGraphSchema& s, const std::filesystem::path& path);

/// Instance-graph data file: {schema, nodes:[{id,type,values}], edges:[{id,type,endpoints,values}]}.
Json to_json(const InstanceGraph& g);
InstanceGraph instance_from_json(const JsonCursor& c, const TypedGraphSchema* schema = nullptr);
InstanceGraph load_instance(const std::filesystem::path& path, const TypedGraphSchema* schema = nullptr);

Json to_json(const Violation& v);

}  // namespace tgm
