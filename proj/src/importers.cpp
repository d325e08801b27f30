#include "tgm/importers.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include "tgm/error.hpp"

namespace tgm {

namespace {

std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

DataType from_sql(const SqlType& t) {
  switch (t.base) {
    case SqlType::Base::Char: return DataType::string(t.length, true);
    case SqlType::Base::Varchar: return DataType::string(t.length, false);
    case SqlType::Base::Int: return DataType::integer();
    case SqlType::Base::Decimal: return DataType::decimal(t.precision, t.scale);
    case SqlType::Base::Date: return DataType::date();
    case SqlType::Base::Boolean: return DataType::boolean();
  }
  return DataType::string();
}

std::size_t code_points(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

SqlType to_sql(const DataType& t, const std::string& where) {
  SqlType out;
  switch (t.kind) {
    case TypeKind::String:
      out.base = t.length && t.fixed_length ? SqlType::Base::Char : SqlType::Base::Varchar;
      out.length = t.length.value_or(255);
      break;
    case TypeKind::Integer:
      out.base = SqlType::Base::Int;
      break;
    case TypeKind::Decimal:
      out.base = SqlType::Base::Decimal;
      out.scale = t.scale;
      out.precision = t.precision.value_or(std::max(18, t.scale));
      break;
    case TypeKind::Boolean:
      out.base = SqlType::Base::Boolean;
      break;
    case TypeKind::Date:
      out.base = SqlType::Base::Date;
      break;
    case TypeKind::Enumeration: {
      out.base = SqlType::Base::Varchar;
      std::size_t longest = 1;
      for (const auto& v : t.allowed) longest = std::max(longest, code_points(v));
      out.length = static_cast<int>(longest);
      break;
    }
    case TypeKind::Composite:
      throw Error(ErrorCode::UnsupportedConstruct, where + " has composite type " + t.describe());
  }
  return out;
}

// Canonical numeric text: optional minus, no leading zeros, optional fraction.
// Returns the kind and the number of fraction digits.
std::optional<std::pair<TypeKind, int>> numeric_text(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && s[i] == '-') ++i;
  std::size_t int_start = i;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
  std::size_t int_digits = i - int_start;
  if (int_digits == 0 || (int_digits > 1 && s[int_start] == '0')) return std::nullopt;
  if (i == s.size()) {
    std::int64_t v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{}) return std::nullopt;
    return std::make_pair(TypeKind::Integer, 0);
  }
  if (s[i] != '.') return std::nullopt;
  std::size_t frac_start = ++i;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
  if (i != s.size() || i == frac_start) return std::nullopt;
  if (!Decimal::parse(s)) return std::nullopt;
  return std::make_pair(TypeKind::Decimal, static_cast<int>(i - frac_start));
}

}  // namespace

// ---- relational ------------------------------------------------------------

TypedGraphSchema import_relational(const RelationalModel& model, std::string schema_name) {
  model.check();
  TypedGraphSchema s;
  s.name = std::move(schema_name);
  for (const auto& t : model.tables) {
    SchemaNode n;
    n.id = n.label = t.name;
    for (const auto& c : t.columns) {
      n.properties.push_back({c.name, from_sql(c.type)});
      if (c.not_null) s.constraints.push_back({ConstraintKind::NotNull, t.name, {c.name}, {}, {}, {}});
    }
    if (!t.primary_key.empty()) {
      s.constraints.push_back({ConstraintKind::Key, t.name, t.primary_key, {}, {}, {}});
    }
    s.nodes.push_back(std::move(n));
  }
  for (const auto& t : model.tables) {
    for (std::size_t i = 0; i < t.foreign_keys.size(); ++i) {
      const auto& fk = t.foreign_keys[i];
      SchemaEdge e;
      e.id = "fk_" + t.name + "_" + std::to_string(i + 1);
      e.label = "FK_" + join(fk.columns, "_");
      e.kind = EdgeKind::Function;
      e.endpoints.push_back({t.name, join(fk.columns, ","), Multiplicity::any()});
      e.endpoints.push_back({fk.table, join(fk.ref_columns, ","), Multiplicity::exactly_one()});
      s.edges.push_back(std::move(e));
    }
  }
  s.check();
  return s;
}

TypedGraphSchema import_relational(std::string_view ddl, std::string schema_name) {
  return import_relational(parse_ddl(ddl), std::move(schema_name));
}

RelationalModel to_relational(const TypedGraphSchema& schema) {
  RelationalModel m;
  std::map<std::string, std::size_t> table_of;  // node id -> index
  for (const auto& n : schema.nodes) {
    Table t;
    t.name = n.label;
    for (const auto& p : n.properties) {
      t.columns.push_back({p.name, to_sql(p.type, n.label + "." + p.name), false});
    }
    table_of[n.id] = m.tables.size();
    m.tables.push_back(std::move(t));
  }
  std::set<std::string> keyed;
  for (const auto& c : schema.constraints) {
    Table& t = m.tables[table_of.at(c.node)];
    if (c.kind == ConstraintKind::NotNull) {
      for (auto& col : t.columns) {
        if (col.name == c.property()) col.not_null = true;
      }
    } else if (c.kind == ConstraintKind::Key && keyed.insert(c.node).second) {
      t.primary_key = c.properties;
    }
  }
  for (const auto& e : schema.edges) {
    if (e.is_hyper()) {
      throw Error(ErrorCode::UnsupportedConstruct, "edge " + e.id + " has " +
                                                       std::to_string(e.endpoints.size()) +
                                                       " endpoints; reify it first");
    }
    if (e.kind != EdgeKind::Function && e.kind != EdgeKind::Aggregation) {
      throw Error(ErrorCode::UnsupportedConstruct,
                  std::string(to_string(e.kind)) + " edge " + e.id + " has no relational form");
    }
    if (!e.properties.empty()) {
      throw Error(ErrorCode::UnsupportedConstruct, "edge " + e.id + " carries properties");
    }
    // FUNCTION points referencing -> referenced; AGGREGATION is whole -> part
    // and becomes an FK from the part.
    const Endpoint& from = e.kind == EdgeKind::Function ? e.endpoints[0] : e.endpoints[1];
    const Endpoint& to = e.kind == EdgeKind::Function ? e.endpoints[1] : e.endpoints[0];
    Table& local = m.tables[table_of.at(from.node)];
    const Table& remote = m.tables[table_of.at(to.node)];
    ForeignKey fk;
    fk.table = remote.name;
    auto local_cols = split(from.role, ',');
    auto remote_cols = split(to.role, ',');
    bool named = local_cols.size() == remote_cols.size() &&
                 std::all_of(local_cols.begin(), local_cols.end(),
                             [&](const std::string& c) { return local.column(c) != nullptr; }) &&
                 std::all_of(remote_cols.begin(), remote_cols.end(),
                             [&](const std::string& c) { return remote.column(c) != nullptr; });
    if (named) {
      fk.columns = local_cols;
      fk.ref_columns = remote_cols;
    } else {
      auto key = schema.key_of(to.node);
      if (key.empty()) {
        throw Error(ErrorCode::UnsupportedConstruct,
                    "edge " + e.id + " needs a KEY on " + remote.name + " to become a foreign key");
      }
      for (const auto& k : key) {
        std::string col = remote.name + "_" + k;
        if (!local.column(col)) local.columns.push_back({col, remote.column(k)->type, false});
        fk.columns.push_back(col);
        fk.ref_columns.push_back(k);
      }
    }
    local.foreign_keys.push_back(std::move(fk));
  }
  return m;
}

std::string export_relational(const TypedGraphSchema& schema) {
  return render_ddl(to_relational(schema));
}

// ---- hierarchical ----------------------------------------------------------

namespace {

void collect(const std::string& name, const Json& content, std::vector<HierElement>& out) {
  if (content.is_array()) {
    for (const auto& item : content) collect(name, item, out);
    return;
  }
  HierElement e;
  e.name = name;
  if (content.is_object()) {
    e.interior = true;
    for (const auto& [k, v] : content.items()) collect(k, v, e.children);
  } else {
    e.scalar = content;
  }
  out.push_back(std::move(e));
}

using Path = std::vector<std::string>;

struct PathInfo {
  bool interior = false;
  bool leaf = false;
  std::vector<std::string> leaf_order;
  std::map<std::string, std::vector<Json>> samples;
  std::vector<Path> children;
};

struct PathTable {
  std::map<Path, PathInfo> info;
  std::vector<Path> order;  // interior paths, first-seen

  PathInfo& at(const Path& p) {
    auto [it, fresh] = info.try_emplace(p);
    (void)fresh;
    return it->second;
  }

  void walk(const HierElement& e, const Path& parent) {
    Path path = parent;
    path.push_back(e.name);
    PathInfo& me = at(path);
    if (!e.interior) {
      me.leaf = true;
      return;
    }
    if (!me.interior) order.push_back(path);
    me.interior = true;
    for (const auto& c : e.children) {
      Path cp = path;
      cp.push_back(c.name);
      if (c.interior) {
        auto& kids = at(path).children;
        if (std::find(kids.begin(), kids.end(), cp) == kids.end()) kids.push_back(cp);
        walk(c, path);
      } else {
        auto& self = at(path);
        if (!self.samples.count(c.name)) self.leaf_order.push_back(c.name);
        self.samples[c.name].push_back(c.scalar);
        at(cp).leaf = true;
      }
    }
  }
};

std::string path_str(const Path& p) { return join(p, "/"); }

// Labels are element names, or underscore-joined paths where names collide.
std::map<Path, std::string> assign_labels(const std::vector<Path>& paths) {
  std::map<std::string, int> uses;
  for (const auto& p : paths) ++uses[p.back()];
  std::map<Path, std::string> out;
  for (const auto& p : paths) out[p] = uses[p.back()] > 1 ? join(p, "_") : p.back();
  return out;
}

DataType infer_leaf(const std::string& where, const std::vector<Json>& samples,
                    std::vector<std::string>& warnings) {
  int bools = 0, numbers = 0, total = 0;
  for (const auto& s : samples) {
    if (s.is_null()) continue;
    ++total;
    if (s.is_boolean()) ++bools;
    if (s.is_number()) ++numbers;
  }
  if (total == 0) return DataType::string();
  if (bools > 0) {
    if (bools == total) return DataType::boolean();
    throw Error(ErrorCode::HeterogeneousLeaf,
                where + " mixes boolean values with other kinds; no common supertype");
  }
  if (numbers == 0) return DataType::string();
  // Numbers present: strings are either read as numbers or force string.
  int rank = 0, scale = 0, reread = 0, widened = 0;
  for (const auto& s : samples) {
    if (s.is_null()) continue;
    std::optional<std::pair<TypeKind, int>> num;
    if (s.is_number_integer()) {
      num = std::make_pair(TypeKind::Integer, 0);
    } else if (s.is_number_float()) {
      num = numeric_text(s.dump());
      if (num && num->first == TypeKind::Integer) num->first = TypeKind::Decimal;
    } else {
      num = numeric_text(s.get<std::string>());
      if (num) ++reread;
    }
    if (!num) {
      ++widened;
      rank = 2;
      continue;
    }
    rank = std::max(rank, num->first == TypeKind::Integer ? 0 : 1);
    scale = std::max(scale, num->second);
  }
  DataType out = rank == 0 ? DataType::integer()
                 : rank == 1 ? DataType::decimal(std::nullopt, scale)
                             : DataType::string();
  if (rank < 2 && reread > 0) {
    warnings.push_back(where + ": " + std::to_string(reread) + " string sample(s) read as " +
                       std::string(to_string(out.kind)));
  }
  if (widened > 0) {
    warnings.push_back(where + ": numeric and text samples mixed; widened to string");
  }
  return out;
}

std::string leaf_where(const std::string& label, const std::string& leaf) { return label + "." + leaf; }

}  // namespace

std::vector<HierElement> hierarchical_from_json(const Json& doc, const HierarchicalOptions& options) {
  std::vector<HierElement> out;
  if (doc.is_object() && doc.size() == 1 &&
      (doc.begin().value().is_object() || doc.begin().value().is_array())) {
    collect(doc.begin().key(), doc.begin().value(), out);
  } else if (doc.is_object() || doc.is_array()) {
    collect(options.root_name, doc, out);
  } else {
    throw Error(ErrorCode::InvalidArgument, "hierarchical document must be a JSON object or array");
  }
  for (const auto& e : out) {
    if (!e.interior) {
      throw Error(ErrorCode::InvalidArgument, "top-level element '" + e.name + "' is a scalar");
    }
  }
  return out;
}

ImportResult import_hierarchical(const std::vector<HierElement>& doc, const HierarchicalOptions& options) {
  PathTable table;
  for (const auto& e : doc) table.walk(e, {});
  for (const auto& [path, info] : table.info) {
    if (info.interior && info.leaf) {
      throw Error(ErrorCode::HeterogeneousLeaf,
                  "element " + path_str(path) + " is both a scalar and a structure");
    }
  }
  ImportResult r;
  r.schema.name = options.schema_name;
  auto labels = assign_labels(table.order);
  for (const auto& path : table.order) {
    const PathInfo& info = table.info.at(path);
    SchemaNode n;
    n.id = n.label = labels.at(path);
    for (const auto& leaf : info.leaf_order) {
      n.properties.push_back(
          {leaf, infer_leaf(leaf_where(n.label, leaf), info.samples.at(leaf), r.warnings)});
    }
    r.schema.nodes.push_back(std::move(n));
  }
  for (const auto& path : table.order) {
    const std::string& parent = labels.at(path);
    for (const auto& child_path : table.info.at(path).children) {
      const std::string& child = labels.at(child_path);
      SchemaEdge e;
      e.id = "agg_" + child;
      e.label = parent + "_" + child;
      e.kind = EdgeKind::Aggregation;
      e.endpoints.push_back({parent, parent, Multiplicity::exactly_one()});
      e.endpoints.push_back({child, child, Multiplicity::any()});
      r.schema.edges.push_back(std::move(e));
    }
  }
  r.schema.check();
  return r;
}

ImportResult import_hierarchical(const Json& doc, const HierarchicalOptions& options) {
  return import_hierarchical(hierarchical_from_json(doc, options), options);
}

namespace {

struct HierLoader {
  const TypedGraphSchema& schema;
  InstanceGraph g;
  std::map<std::string, int> counters;

  const SchemaNode& resolve(const Path& path) {
    for (const auto& label : {join(path, "_"), path.back()}) {
      if (const auto* n = schema.node_by_label(label)) return *n;
    }
    throw Error(ErrorCode::UnknownElement,
                "no node of schema '" + schema.name + "' for element " + path_str(path));
  }

  std::string next_id(const std::string& base) { return base + "#" + std::to_string(++counters[base]); }

  std::string load(const HierElement& e, const Path& parent, const SchemaNode* parent_node,
                   const std::string& parent_id) {
    Path path = parent;
    path.push_back(e.name);
    const SchemaNode& sn = resolve(path);
    InstanceNode inst;
    inst.id = next_id(sn.label);
    inst.schema_node = sn.id;
    std::string id = inst.id;
    std::vector<const HierElement*> nested;
    for (const auto& c : e.children) {
      if (c.interior) {
        nested.push_back(&c);
        continue;
      }
      const Property* p = sn.property(c.name);
      if (!p) {
        throw Error(ErrorCode::UnknownElement, "property " + sn.label + "." + c.name + " is not declared");
      }
      if (c.scalar.is_null() || inst.values.count(c.name)) continue;
      inst.values[c.name] = value_from_json(c.scalar, p->type);
    }
    g.nodes.push_back(std::move(inst));
    if (parent_node) {
      const SchemaEdge* edge = nullptr;
      for (const auto& se : schema.edges) {
        if (se.kind == EdgeKind::Aggregation && se.endpoints.size() == 2 &&
            se.endpoints[0].node == parent_node->id && se.endpoints[1].node == sn.id) {
          edge = &se;
          break;
        }
      }
      if (!edge) {
        throw Error(ErrorCode::UnknownElement,
                    "no aggregation edge " + parent_node->label + " -> " + sn.label);
      }
      g.edges.push_back({next_id(edge->id), edge->id, {parent_id, id}, {}});
    }
    for (const auto* c : nested) load(*c, path, &sn, id);
    return id;
  }
};

}  // namespace

InstanceGraph load_hierarchical_instances(const Json& doc, const TypedGraphSchema& schema,
                                          const HierarchicalOptions& options) {
  HierLoader loader{schema, {}, {}};
  loader.g.schema_ref = schema.name;
  for (const auto& e : hierarchical_from_json(doc, options)) loader.load(e, {}, nullptr, "");
  return std::move(loader.g);
}

// ---- csv -------------------------------------------------------------------

namespace {

enum CsvRank { kBool = 0, kInt, kDec, kDate, kStr };

bool parses_as(const std::string& s, int rank) {
  switch (rank) {
    case kBool: return s == "true" || s == "false" || s == "TRUE" || s == "FALSE" || s == "True" || s == "False";
    case kInt: {
      auto n = numeric_text(s);
      return n && n->first == TypeKind::Integer;
    }
    case kDec: return numeric_text(s).has_value();
    case kDate: return Date::parse(s).has_value();
    default: return true;
  }
}

int most_specific(const std::string& s) {
  for (int r = kBool; r < kStr; ++r) {
    if (parses_as(s, r)) return r;
  }
  return kStr;
}

DataType infer_column(const std::vector<const std::string*>& samples) {
  int rank = -1;
  for (const auto* s : samples) rank = std::max(rank, most_specific(*s));
  if (rank < 0) return DataType::string();
  // The join of the sample kinds is only a candidate: move up the chain until
  // every sample reads as the candidate kind.
  while (rank < kStr && !std::all_of(samples.begin(), samples.end(),
                                     [&](const std::string* s) { return parses_as(*s, rank); })) {
    ++rank;
  }
  switch (rank) {
    case kBool: return DataType::boolean();
    case kInt: return DataType::integer();
    case kDec: {
      int scale = 0;
      for (const auto* s : samples) scale = std::max(scale, numeric_text(*s)->second);
      return DataType::decimal(std::nullopt, scale);
    }
    case kDate: return DataType::date();
    default: return DataType::string();
  }
}

void check_arity(const CsvRow& header, const std::vector<CsvRow>& rows, std::size_t first_line) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != header.size()) {
      throw Error(ErrorCode::ArityMismatch, "row " + std::to_string(i + first_line) + " has " +
                                                std::to_string(rows[i].size()) + " fields, header has " +
                                                std::to_string(header.size()));
    }
  }
}

}  // namespace

ImportResult import_csv(const CsvRow& header, const std::vector<CsvRow>& rows, const CsvOptions& options) {
  if (header.empty()) throw Error(ErrorCode::InvalidArgument, "csv header is empty");
  std::set<std::string> seen;
  for (const auto& h : header) {
    if (h.empty()) throw Error(ErrorCode::InvalidArgument, "csv header has an empty column name");
    if (!seen.insert(h).second) throw Error(ErrorCode::InvalidArgument, "csv header repeats " + h);
  }
  check_arity(header, rows, 1);
  ImportResult r;
  r.schema.name = options.schema_name;
  SchemaNode n;
  n.id = n.label = options.node_name;
  std::size_t sampled = std::min(rows.size(), options.max_sample_rows);
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::vector<const std::string*> samples;
    for (std::size_t i = 0; i < sampled; ++i) {
      if (!rows[i][c].empty()) samples.push_back(&rows[i][c]);
    }
    n.properties.push_back({header[c], infer_column(samples)});
  }
  if (rows.size() > sampled) {
    r.warnings.push_back("types inferred from the first " + std::to_string(sampled) + " of " +
                         std::to_string(rows.size()) + " rows");
  }
  r.schema.nodes.push_back(std::move(n));
  r.schema.check();
  return r;
}

ImportResult import_csv(std::string_view text, const CsvOptions& options) {
  auto rows = parse_csv(text);
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "csv input has no header row");
  CsvRow header = std::move(rows.front());
  rows.erase(rows.begin());
  return import_csv(header, rows, options);
}

InstanceGraph load_csv_instances(std::string_view text, const TypedGraphSchema& schema,
                                 const std::string& node_label) {
  const SchemaNode* n = schema.node_by_label(node_label);
  if (!n) throw Error(ErrorCode::UnknownElement, "schema '" + schema.name + "' has no node " + node_label);
  auto rows = parse_csv(text);
  InstanceGraph g;
  g.schema_ref = schema.name;
  if (rows.empty()) return g;
  CsvRow header = std::move(rows.front());
  rows.erase(rows.begin());
  std::vector<const Property*> props;
  for (const auto& h : header) {
    const Property* p = n->property(h);
    if (!p) throw Error(ErrorCode::UnknownElement, "column " + h + " is not a property of " + node_label);
    props.push_back(p);
  }
  check_arity(header, rows, 2);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    InstanceNode inst;
    inst.id = node_label + "#" + std::to_string(i + 1);
    inst.schema_node = n->id;
    for (std::size_t c = 0; c < header.size(); ++c) {
      const std::string& cell = rows[i][c];
      if (cell.empty()) continue;
      auto v = coerce(Value{cell}, props[c]->type);
      inst.values[header[c]] = v ? *v : Value{cell};
    }
    g.nodes.push_back(std::move(inst));
  }
  return g;
}

}  // namespace tgm
