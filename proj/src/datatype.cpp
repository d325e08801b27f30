#include "tgm/datatype.hpp"

#include <charconv>
#include <set>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "tgm/error.hpp"

namespace tgm {

std::string_view to_string(TypeKind kind) {
  switch (kind) {
    case TypeKind::String: return "string";
    case TypeKind::Integer: return "integer";
    case TypeKind::Decimal: return "decimal";
    case TypeKind::Boolean: return "boolean";
    case TypeKind::Date: return "date";
    case TypeKind::Enumeration: return "enumeration";
    case TypeKind::Composite: return "composite";
  }
  return "?";
}

std::optional<TypeKind> parse_type_kind(std::string_view text) {
  for (auto k : {TypeKind::String, TypeKind::Integer, TypeKind::Decimal, TypeKind::Boolean,
                 TypeKind::Date, TypeKind::Enumeration, TypeKind::Composite}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

DataType DataType::string(std::optional<int> length, bool fixed) {
  DataType t;
  t.kind = TypeKind::String;
  t.length = length;
  t.fixed_length = fixed;
  return t;
}

DataType DataType::integer() {
  DataType t;
  t.kind = TypeKind::Integer;
  return t;
}

DataType DataType::decimal(std::optional<int> precision, int scale) {
  DataType t;
  t.kind = TypeKind::Decimal;
  t.precision = precision;
  t.scale = scale;
  return t;
}

DataType DataType::boolean() {
  DataType t;
  t.kind = TypeKind::Boolean;
  return t;
}

DataType DataType::date() {
  DataType t;
  t.kind = TypeKind::Date;
  return t;
}

DataType DataType::enumeration(std::string name, std::vector<std::string> values) {
  DataType t;
  t.kind = TypeKind::Enumeration;
  t.name = std::move(name);
  t.allowed = std::move(values);
  return t;
}

DataType DataType::composite(std::string name, std::vector<CompositeField> fields) {
  DataType t;
  t.kind = TypeKind::Composite;
  t.name = std::move(name);
  t.fields = std::move(fields);
  return t;
}

void DataType::check() const {
  if (kind == TypeKind::Enumeration) {
    if (allowed.empty()) {
      throw Error(ErrorCode::InvalidArgument, "enumeration '" + name + "' has no values");
    }
    std::set<std::string> seen;
    for (const auto& v : allowed) {
      if (!seen.insert(nfc(v)).second) {
        throw Error(ErrorCode::InvalidArgument,
                    "enumeration '" + name + "' repeats value '" + v + "'");
      }
    }
  }
  if (kind == TypeKind::Composite) {
    std::set<std::string> seen;
    for (const auto& f : fields) {
      if (!seen.insert(f.name).second) {
        throw Error(ErrorCode::InvalidArgument,
                    "composite '" + name + "' repeats field '" + f.name + "'");
      }
      f.type.check();
    }
  }
  if (kind == TypeKind::Decimal && (scale < 0 || scale > 18)) {
    throw Error(ErrorCode::InvalidArgument, "decimal scale out of range");
  }
}

std::string DataType::describe() const {
  std::string out(to_string(kind));
  switch (kind) {
    case TypeKind::String:
      if (length) out += (fixed_length ? "(char " : "(") + std::to_string(*length) + ")";
      break;
    case TypeKind::Decimal:
      out += "(" + (precision ? std::to_string(*precision) : std::string("*")) + "," +
             std::to_string(scale) + ")";
      break;
    case TypeKind::Enumeration: {
      out = "enum " + name + "{";
      for (std::size_t i = 0; i < allowed.size(); ++i) out += (i ? "," : "") + allowed[i];
      out += "}";
      break;
    }
    case TypeKind::Composite: {
      out = "composite " + name + "{";
      for (std::size_t i = 0; i < fields.size(); ++i) {
        out += (i ? "," : "") + fields[i].name + ":" + fields[i].type.describe();
      }
      out += "}";
      break;
    }
    default:
      break;
  }
  if (unit) out += " [" + *unit + "]";
  return out;
}

bool operator==(const DataType& a, const DataType& b) {
  return a.kind == b.kind && a.name == b.name && a.allowed == b.allowed &&
         a.fields == b.fields && a.unit == b.unit && a.length == b.length &&
         a.fixed_length == b.fixed_length && a.precision == b.precision && a.scale == b.scale;
}

std::string nfc(std::string_view utf8) {
  bool ascii = true;
  for (unsigned char c : utf8) {
    if (c >= 0x80) {
      ascii = false;
      break;
    }
  }
  if (ascii) return std::string(utf8);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) return std::string(utf8);
  icu::UnicodeString src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<std::int32_t>(utf8.size())));
  icu::UnicodeString dst = norm->normalize(src, status);
  if (U_FAILURE(status)) return std::string(utf8);
  std::string out;
  dst.toUTF8String(out);
  return out;
}

namespace {

std::size_t code_points(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  if (s.starts_with('+')) s.remove_prefix(1);
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

bool decimal_fits(const Decimal& d, const DataType& t) {
  if (d.scale() > t.scale) return false;
  if (!t.precision) return true;
  // integer part may use at most precision - scale digits
  std::int64_t whole = d.units();
  for (int i = 0; i < d.scale(); ++i) whole /= 10;
  if (whole < 0) whole = -whole;
  int digits = 0;
  while (whole > 0) {
    whole /= 10;
    ++digits;
  }
  return digits <= *t.precision - t.scale;
}

}  // namespace

bool conforms(const Value& v, const DataType& type) {
  if (is_null(v)) return true;
  switch (type.kind) {
    case TypeKind::String: {
      const auto* s = std::get_if<std::string>(&v);
      return s && (!type.length || code_points(*s) <= static_cast<std::size_t>(*type.length));
    }
    case TypeKind::Integer:
      return std::holds_alternative<std::int64_t>(v);
    case TypeKind::Decimal: {
      const auto* d = std::get_if<Decimal>(&v);
      return d && decimal_fits(*d, type);
    }
    case TypeKind::Boolean:
      return std::holds_alternative<bool>(v);
    case TypeKind::Date:
      return std::holds_alternative<Date>(v);
    case TypeKind::Enumeration: {
      const auto* s = std::get_if<std::string>(&v);
      if (!s) return false;
      auto key = nfc(*s);
      for (const auto& a : type.allowed) {
        if (nfc(a) == key) return true;
      }
      return false;
    }
    case TypeKind::Composite: {
      const auto* c = std::get_if<std::shared_ptr<const Composite>>(&v);
      if (!c || !*c || (*c)->fields.size() != type.fields.size()) return false;
      for (std::size_t i = 0; i < type.fields.size(); ++i) {
        if ((*c)->fields[i].first != type.fields[i].name) return false;
        if (!conforms((*c)->fields[i].second, type.fields[i].type)) return false;
      }
      return true;
    }
  }
  return false;
}

std::optional<Value> coerce(const Value& v, const DataType& type) {
  if (is_null(v)) return v;
  const auto* s = std::get_if<std::string>(&v);
  Value out = v;
  switch (type.kind) {
    case TypeKind::Integer:
      if (s) {
        auto i = parse_int(*s);
        if (!i) return std::nullopt;
        out = *i;
      } else if (const auto* d = std::get_if<Decimal>(&v)) {
        auto n = d->normalized();
        if (n.scale() != 0) return std::nullopt;
        out = n.units();
      }
      break;
    case TypeKind::Decimal:
      if (s) {
        auto d = Decimal::parse(*s);
        if (!d) return std::nullopt;
        out = *d;
      } else if (const auto* i = std::get_if<std::int64_t>(&v)) {
        out = Decimal::from_integer(*i);
      }
      if (const auto* d = std::get_if<Decimal>(&out)) {
        auto r = d->rescaled(std::max(type.scale, 0));
        if (r != *d) return std::nullopt;
        out = r;
      }
      break;
    case TypeKind::Boolean:
      if (s) {
        if (*s == "true" || *s == "TRUE" || *s == "True") out = true;
        else if (*s == "false" || *s == "FALSE" || *s == "False") out = false;
        else return std::nullopt;
      }
      break;
    case TypeKind::Date:
      if (s) {
        auto d = Date::parse(*s);
        if (!d) return std::nullopt;
        out = *d;
      }
      break;
    case TypeKind::Enumeration:
      if (s) {
        auto key = nfc(*s);
        for (const auto& a : type.allowed) {
          if (nfc(a) == key) {
            out = a;
            break;
          }
        }
      }
      break;
    case TypeKind::String:
    case TypeKind::Composite:
      break;
  }
  if (!conforms(out, type)) return std::nullopt;
  return out;
}

}  // namespace tgm
