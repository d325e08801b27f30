#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace tgm {

/// Exact fixed-point number: units * 10^-scale.
class Decimal {
 public:
  Decimal() = default;
  Decimal(std::int64_t units, int scale);

  static Decimal from_integer(std::int64_t v) { return Decimal(v, 0); }
  /// Parses "-12.50", "3", "1e2" is rejected. Returns nullopt on bad input.
  static std::optional<Decimal> parse(std::string_view text);

  std::int64_t units() const { return units_; }
  int scale() const { return scale_; }

  /// Round half-to-even to the given scale.
  Decimal rescaled(int scale) const;
  /// Drop trailing zero digits of the fraction.
  Decimal normalized() const;

  std::string to_string() const;

  friend bool operator==(const Decimal& a, const Decimal& b);
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);

 private:
  std::int64_t units_ = 0;
  int scale_ = 0;
};

/// Exact rational with int64 numerator/denominator, kept in lowest terms
/// with a positive denominator. Overflow throws tgm::Error.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  static Rational from_decimal(const Decimal& d);
  /// Accepts "3/2", "-1.25", "7".
  static std::optional<Rational> parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_integer() const { return den_ == 1; }

  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;

  /// Round half-to-even to `scale` fractional digits.
  Decimal to_decimal(int scale) const;
  std::string to_string() const;

  friend bool operator==(const Rational&, const Rational&) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  static std::optional<Date> parse(std::string_view iso);
  std::string to_string() const;

  friend auto operator<=>(const Date&, const Date&) = default;
};

struct Composite;

/// A property value. monostate is SQL-style NULL.
using Value = std::variant<std::monostate, bool, std::int64_t, Decimal, Date,
                           std::string, std::shared_ptr<const Composite>>;

struct Composite {
  std::vector<std::pair<std::string, Value>> fields;
};

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

/// Structural equality; composites compare by content.
bool values_equal(const Value& a, const Value& b);
/// Total order used for deterministic sorting (kind first, then content).
std::weak_ordering compare_values(const Value& a, const Value& b);

/// Human/CSV rendering; NULL renders as the empty string.
std::string render(const Value& v);

struct ValueLess {
  bool operator()(const Value& a, const Value& b) const {
    return compare_values(a, b) < 0;
  }
};

}  // namespace tgm
