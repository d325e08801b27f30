#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tgm/value.hpp"

namespace tgm {

enum class TypeKind { String, Integer, Decimal, Boolean, Date, Enumeration, Composite };

std::string_view to_string(TypeKind kind);
std::optional<TypeKind> parse_type_kind(std::string_view text);

struct CompositeField;

/// A TGM data type: primitive, enumeration or composite, with an optional unit
/// tag. Primitive facets (length, precision/scale) carry the SQL column shape so
/// relational round trips are lossless.
struct DataType {
  TypeKind kind = TypeKind::String;
  std::string name;                   // enumerations and composites
  std::vector<std::string> allowed;   // enumeration values
  std::vector<CompositeField> fields; // composite members, ordered
  std::optional<std::string> unit;

  std::optional<int> length;  // string: CHAR(n)/VARCHAR(n)
  bool fixed_length = false;  // string: CHAR vs VARCHAR
  std::optional<int> precision;  // decimal
  int scale = 0;                 // decimal

  static DataType string(std::optional<int> length = std::nullopt, bool fixed = false);
  static DataType integer();
  static DataType decimal(std::optional<int> precision = std::nullopt, int scale = 0);
  static DataType boolean();
  static DataType date();
  static DataType enumeration(std::string name, std::vector<std::string> values);
  static DataType composite(std::string name, std::vector<CompositeField> fields);

  bool is_primitive() const {
    return kind != TypeKind::Enumeration && kind != TypeKind::Composite;
  }
  bool is_numeric() const { return kind == TypeKind::Integer || kind == TypeKind::Decimal; }

  /// Throws tgm::Error(InvalidArgument) on broken enumeration/composite invariants.
  void check() const;

  /// Compact display, e.g. "decimal(10,2)", "enum Region{N,S}".
  std::string describe() const;

  friend bool operator==(const DataType&, const DataType&);
};

struct CompositeField {
  std::string name;
  DataType type;

  friend bool operator==(const CompositeField&, const CompositeField&) = default;
};

/// Canonical Unicode NFC form of a UTF-8 string.
std::string nfc(std::string_view utf8);

/// Coerces a value to `type`: integers widen to decimals, strings holding a
/// literal of the target kind are parsed, decimals are rescaled exactly when
/// no digits are lost. Returns nullopt when the value cannot conform.
std::optional<Value> coerce(const Value& v, const DataType& type);

/// True iff `v` is NULL or already conforms to `type` without coercion.
bool conforms(const Value& v, const DataType& type);

}  // namespace tgm
