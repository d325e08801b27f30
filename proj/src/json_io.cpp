#include "tgm/json_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "tgm/error.hpp"

namespace tgm {

namespace {

std::string escape_pointer_token(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

}  // namespace

JsonCursor JsonCursor::at(std::string_view key) const {
  if (!j_->is_object()) fail("expected an object");
  auto it = j_->find(std::string(key));
  std::string p = ptr_ + "/" + escape_pointer_token(key);
  if (it == j_->end()) {
    throw Error(ErrorCode::ParseError, "missing member at " + p);
  }
  return JsonCursor(*it, p);
}

JsonCursor JsonCursor::at(std::size_t index) const {
  if (!j_->is_array() || index >= j_->size()) fail("expected an array element");
  return JsonCursor((*j_)[index], ptr_ + "/" + std::to_string(index));
}

bool JsonCursor::has(std::string_view key) const {
  return j_->is_object() && j_->contains(std::string(key));
}

std::string JsonCursor::str() const {
  if (!j_->is_string()) fail("expected a string");
  return j_->get<std::string>();
}

std::int64_t JsonCursor::integer() const {
  if (!j_->is_number_integer()) fail("expected an integer");
  return j_->get<std::int64_t>();
}

bool JsonCursor::boolean() const {
  if (!j_->is_boolean()) fail("expected a boolean");
  return j_->get<bool>();
}

const Json& JsonCursor::array() const {
  if (!j_->is_array()) fail("expected an array");
  return *j_;
}

const Json& JsonCursor::object() const {
  if (!j_->is_object()) fail("expected an object");
  return *j_;
}

void JsonCursor::only(std::initializer_list<std::string_view> allowed) const {
  for (const auto& [key, _] : object().items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) fail("unknown member '" + key + "'");
  }
}

void JsonCursor::fail(const std::string& message) const {
  throw Error(ErrorCode::ParseError, message + " at " + (ptr_.empty() ? "/" : ptr_));
}

Json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": malformed JSON at byte " +
                                           std::to_string(e.byte) + " (pointer \"\")");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content,
                       const std::function<void(const std::filesystem::path&)>& before_commit) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  if (before_commit) before_commit(tmp);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot replace " + path.string() + ": " + ec.message());
}

// ---- values ----------------------------------------------------------------

Json to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> Json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, bool> || std::is_same_v<T, std::int64_t> ||
                             std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, std::shared_ptr<const Composite>>) {
          Json o = Json::object();
          for (const auto& [k, f] : x->fields) o[k] = to_json(f);
          return o;
        } else {
          // decimals travel as strings to stay exact
          return x.to_string();
        }
      },
      v);
}

Value value_from_json(const Json& j) {
  if (j.is_null()) return {};
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    std::string text = j.dump();
    if (auto d = Decimal::parse(text)) return *d;
    return text;
  }
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object()) {
    auto c = std::make_shared<Composite>();
    for (const auto& [k, f] : j.items()) c->fields.emplace_back(k, value_from_json(f));
    return std::shared_ptr<const Composite>(std::move(c));
  }
  return j.dump();
}

Value value_from_json(const Json& j, const DataType& type) {
  if (type.kind == TypeKind::Composite && j.is_object()) {
    auto c = std::make_shared<Composite>();
    for (const auto& f : type.fields) {
      auto it = j.find(f.name);
      c->fields.emplace_back(f.name, it == j.end() ? Value{} : value_from_json(*it, f.type));
    }
    if (j.size() != type.fields.size()) return value_from_json(j);
    return std::shared_ptr<const Composite>(std::move(c));
  }
  Value raw = value_from_json(j);
  if (auto v = coerce(raw, type)) return *v;
  return raw;
}

// ---- data types ------------------------------------------------------------

Json to_json(const DataType& t) {
  Json j;
  j["kind"] = std::string(to_string(t.kind));
  switch (t.kind) {
    case TypeKind::String:
      if (t.length) j["length"] = *t.length;
      if (t.fixed_length) j["fixed"] = true;
      break;
    case TypeKind::Decimal:
      if (t.precision) j["precision"] = *t.precision;
      j["scale"] = t.scale;
      break;
    case TypeKind::Enumeration:
      j["name"] = t.name;
      j["values"] = t.allowed;
      break;
    case TypeKind::Composite: {
      j["name"] = t.name;
      Json fields = Json::array();
      for (const auto& f : t.fields) fields.push_back(Json{{"name", f.name}, {"type", to_json(f.type)}});
      j["fields"] = fields;
      break;
    }
    default:
      break;
  }
  if (t.unit) j["unit"] = *t.unit;
  return j;
}

namespace {

DataType decode_type(const JsonCursor& c, const TypedGraphSchema* named,
                     std::set<std::string>& resolving) {
  if (c.has("ref")) {
    c.only({"ref"});
    auto name = c.at("ref").str();
    const DataType* t = named ? named->type(name) : nullptr;
    if (!t) c.fail("unknown type reference '" + name + "'");
    if (!resolving.insert(name).second) c.fail("recursive type reference '" + name + "'");
    resolving.erase(name);
    return *t;
  }
  auto kind_text = c.at("kind").str();
  auto kind = parse_type_kind(kind_text);
  if (!kind) c.at("kind").fail("unknown type kind '" + kind_text + "'");
  DataType t;
  t.kind = *kind;
  switch (*kind) {
    case TypeKind::String:
      c.only({"kind", "length", "fixed", "unit"});
      if (c.has("length")) t.length = static_cast<int>(c.at("length").integer());
      if (c.has("fixed")) t.fixed_length = c.at("fixed").boolean();
      break;
    case TypeKind::Decimal:
      c.only({"kind", "precision", "scale", "unit"});
      if (c.has("precision")) t.precision = static_cast<int>(c.at("precision").integer());
      if (c.has("scale")) t.scale = static_cast<int>(c.at("scale").integer());
      break;
    case TypeKind::Enumeration: {
      c.only({"kind", "name", "values", "unit"});
      t.name = c.at("name").str();
      auto values = c.at("values");
      for (std::size_t i = 0; i < values.array().size(); ++i) t.allowed.push_back(values.at(i).str());
      break;
    }
    case TypeKind::Composite: {
      c.only({"kind", "name", "fields", "unit"});
      t.name = c.at("name").str();
      if (!resolving.insert("composite:" + t.name).second) c.fail("recursive composite '" + t.name + "'");
      auto fields = c.at("fields");
      for (std::size_t i = 0; i < fields.array().size(); ++i) {
        auto f = fields.at(i);
        f.only({"name", "type"});
        t.fields.push_back({f.at("name").str(), decode_type(f.at("type"), named, resolving)});
      }
      resolving.erase("composite:" + t.name);
      break;
    }
    default:
      c.only({"kind", "unit"});
      break;
  }
  if (c.has("unit")) t.unit = c.at("unit").str();
  try {
    t.check();
  } catch (const Error& e) {
    c.fail(e.what());
  }
  return t;
}

Json properties_json(const std::vector<Property>& props) {
  Json arr = Json::array();
  for (const auto& p : props) arr.push_back(Json{{"name", p.name}, {"type", to_json(p.type)}});
  return arr;
}

std::vector<Property> properties_from(const JsonCursor& c, const TypedGraphSchema* named) {
  std::vector<Property> out;
  for (std::size_t i = 0; i < c.array().size(); ++i) {
    auto p = c.at(i);
    p.only({"name", "type"});
    out.push_back({p.at("name").str(), datatype_from_json(p.at("type"), named)});
  }
  return out;
}

}  // namespace

DataType datatype_from_json(const JsonCursor& c, const TypedGraphSchema* named_types) {
  std::set<std::string> resolving;
  return decode_type(c, named_types, resolving);
}

// ---- schema ----------------------------------------------------------------

Json to_json(const TypedGraphSchema& s) {
  Json j;
  j["name"] = s.name;
  j["types"] = Json::array();
  for (const auto& t : s.types) j["types"].push_back(to_json(t));
  j["nodes"] = Json::array();
  for (const auto& n : s.nodes) {
    j["nodes"].push_back(Json{{"id", n.id}, {"label", n.label}, {"properties", properties_json(n.properties)}});
  }
  j["edges"] = Json::array();
  for (const auto& e : s.edges) {
    Json ej;
    ej["id"] = e.id;
    ej["label"] = e.label;
    ej["kind"] = std::string(to_string(e.kind));
    ej["endpoints"] = Json::array();
    for (const auto& ep : e.endpoints) {
      Json pj;
      pj["node"] = ep.node;
      pj["role"] = ep.role;
      pj["min"] = ep.multiplicity.min;
      if (ep.multiplicity.max) pj["max"] = *ep.multiplicity.max;
      else pj["max"] = "*";
      ej["endpoints"].push_back(pj);
    }
    if (!e.properties.empty()) ej["properties"] = properties_json(e.properties);
    j["edges"].push_back(ej);
  }
  j["constraints"] = Json::array();
  for (const auto& c : s.constraints) {
    Json cj;
    cj["kind"] = std::string(to_string(c.kind));
    cj["node"] = c.node;
    cj["properties"] = c.properties;
    if (c.min) cj["min"] = to_json(*c.min);
    if (c.max) cj["max"] = to_json(*c.max);
    if (c.kind == ConstraintKind::EnumMember) cj["values"] = c.values;
    j["constraints"].push_back(cj);
  }
  return j;
}

TypedGraphSchema schema_from_json(const JsonCursor& c) {
  c.only({"name", "types", "nodes", "edges", "constraints"});
  TypedGraphSchema s;
  s.name = c.at("name").str();
  if (c.has("types")) {
    auto types = c.at("types");
    for (std::size_t i = 0; i < types.array().size(); ++i) {
      s.types.push_back(datatype_from_json(types.at(i), &s));
    }
  }
  if (c.has("nodes")) {
    auto nodes = c.at("nodes");
    for (std::size_t i = 0; i < nodes.array().size(); ++i) {
      auto n = nodes.at(i);
      n.only({"id", "label", "properties"});
      SchemaNode node{n.at("id").str(), n.at("label").str(), {}};
      if (n.has("properties")) node.properties = properties_from(n.at("properties"), &s);
      s.nodes.push_back(std::move(node));
    }
  }
  if (c.has("edges")) {
    auto edges = c.at("edges");
    for (std::size_t i = 0; i < edges.array().size(); ++i) {
      auto e = edges.at(i);
      e.only({"id", "label", "kind", "endpoints", "properties"});
      SchemaEdge edge;
      edge.id = e.at("id").str();
      edge.label = e.at("label").str();
      auto kind = parse_edge_kind(e.at("kind").str());
      if (!kind) e.at("kind").fail("unknown edge kind");
      edge.kind = *kind;
      auto eps = e.at("endpoints");
      for (std::size_t k = 0; k < eps.array().size(); ++k) {
        auto p = eps.at(k);
        p.only({"node", "role", "min", "max"});
        Endpoint ep;
        ep.node = p.at("node").str();
        ep.role = p.at("role").str();
        ep.multiplicity.min = static_cast<std::uint32_t>(p.at("min").integer());
        auto mx = p.at("max");
        if (mx.json().is_string()) {
          if (mx.str() != "*") mx.fail("max must be an integer or \"*\"");
        } else {
          ep.multiplicity.max = static_cast<std::uint32_t>(mx.integer());
        }
        edge.endpoints.push_back(std::move(ep));
      }
      if (e.has("properties")) edge.properties = properties_from(e.at("properties"), &s);
      s.edges.push_back(std::move(edge));
    }
  }
  if (c.has("constraints")) {
    auto cons = c.at("constraints");
    for (std::size_t i = 0; i < cons.array().size(); ++i) {
      auto k = cons.at(i);
      k.only({"kind", "node", "properties", "min", "max", "values"});
      Constraint con;
      auto kind = parse_constraint_kind(k.at("kind").str());
      if (!kind) k.at("kind").fail("unknown constraint kind");
      con.kind = *kind;
      con.node = k.at("node").str();
      auto props = k.at("properties");
      for (std::size_t p = 0; p < props.array().size(); ++p) con.properties.push_back(props.at(p).str());
      const SchemaNode* owner = s.node(con.node);
      const Property* prop = owner && !con.properties.empty() ? owner->property(con.properties.front()) : nullptr;
      auto decode_bound = [&](const char* key) -> std::optional<Value> {
        if (!k.has(key)) return std::nullopt;
        return prop ? value_from_json(k.at(key).json(), prop->type) : value_from_json(k.at(key).json());
      };
      con.min = decode_bound("min");
      con.max = decode_bound("max");
      if (k.has("values")) {
        auto vals = k.at("values");
        for (std::size_t v = 0; v < vals.array().size(); ++v) con.values.push_back(vals.at(v).str());
      }
      s.constraints.push_back(std::move(con));
    }
  }
  try {
    s.check();
  } catch (const Error& e) {
    c.fail(e.what());
  }
  return s;
}

TypedGraphSchema load_schema(const std::filesystem::path& path) {
  Json j = parse_json_text(read_file(path), path.string());
  return schema_from_json(JsonCursor(j));
}

void save_schema(const TypedGraphSchema& s, const std::filesystem::path& path) {
  write_file_atomic(path, to_json(s).dump(2) + "\n");
}

// ---- instances -------------------------------------------------------------

namespace {

Json values_json(const PropertyValues& values) {
  Json o = Json::object();
  for (const auto& [k, v] : values) o[k] = to_json(v);
  return o;
}

PropertyValues values_from(const JsonCursor& c, const std::vector<Property>* declared) {
  PropertyValues out;
  for (const auto& [k, v] : c.object().items()) {
    const Property* p = nullptr;
    if (declared) {
      for (const auto& d : *declared) {
        if (d.name == k) p = &d;
      }
    }
    out[k] = p ? value_from_json(v, p->type) : value_from_json(v);
  }
  return out;
}

}  // namespace

Json to_json(const InstanceGraph& g) {
  Json j;
  j["schema"] = g.schema_ref;
  j["nodes"] = Json::array();
  for (const auto& n : g.nodes) {
    j["nodes"].push_back(Json{{"id", n.id}, {"type", n.schema_node}, {"values", values_json(n.values)}});
  }
  j["edges"] = Json::array();
  for (const auto& e : g.edges) {
    Json ej{{"id", e.id}, {"type", e.schema_edge}, {"endpoints", e.endpoints}};
    if (!e.values.empty()) ej["values"] = values_json(e.values);
    j["edges"].push_back(ej);
  }
  return j;
}

InstanceGraph instance_from_json(const JsonCursor& c, const TypedGraphSchema* schema) {
  c.only({"schema", "nodes", "edges"});
  InstanceGraph g;
  g.schema_ref = c.at("schema").str();
  if (schema && schema->name != g.schema_ref) schema = nullptr;
  if (c.has("nodes")) {
    auto nodes = c.at("nodes");
    for (std::size_t i = 0; i < nodes.array().size(); ++i) {
      auto n = nodes.at(i);
      n.only({"id", "type", "values"});
      InstanceNode node{n.at("id").str(), n.at("type").str(), {}};
      const SchemaNode* sn = schema ? schema->node(node.schema_node) : nullptr;
      if (n.has("values")) node.values = values_from(n.at("values"), sn ? &sn->properties : nullptr);
      g.nodes.push_back(std::move(node));
    }
  }
  if (c.has("edges")) {
    auto edges = c.at("edges");
    for (std::size_t i = 0; i < edges.array().size(); ++i) {
      auto e = edges.at(i);
      e.only({"id", "type", "endpoints", "values"});
      InstanceEdge edge;
      edge.id = e.at("id").str();
      edge.schema_edge = e.at("type").str();
      auto eps = e.at("endpoints");
      for (std::size_t k = 0; k < eps.array().size(); ++k) edge.endpoints.push_back(eps.at(k).str());
      const SchemaEdge* se = schema ? schema->edge(edge.schema_edge) : nullptr;
      if (e.has("values")) edge.values = values_from(e.at("values"), se ? &se->properties : nullptr);
      g.edges.push_back(std::move(edge));
    }
  }
  return g;
}

InstanceGraph load_instance(const std::filesystem::path& path, const TypedGraphSchema* schema) {
  Json j = parse_json_text(read_file(path), path.string());
  return instance_from_json(JsonCursor(j), schema);
}

Json to_json(const Violation& v) {
  return Json{{"kind", std::string(to_string(v.kind))}, {"element", v.element}, {"message", v.message}};
}

}  // namespace tgm
