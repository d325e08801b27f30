#include "tgm/value.hpp"

#include <charconv>
#include <cstdio>
#include <limits>
#include <numeric>

#include "tgm/error.hpp"

namespace tgm {

namespace {

using i128 = __int128;

constexpr int kMaxScale = 18;

i128 pow10(int n) {
  i128 r = 1;
  for (int i = 0; i < n; ++i) r *= 10;
  return r;
}

std::int64_t narrow(i128 v) {
  if (v > std::numeric_limits<std::int64_t>::max() ||
      v < std::numeric_limits<std::int64_t>::min()) {
    throw Error(ErrorCode::InvalidArgument, "numeric overflow");
  }
  return static_cast<std::int64_t>(v);
}

// num/den rounded half-to-even; den > 0.
i128 div_half_even(i128 num, i128 den) {
  i128 q = num / den;
  i128 r = num % den;
  if (r == 0) return q;
  if (r < 0) {
    r += den;
    q -= 1;
  }
  i128 twice = 2 * r;
  if (twice > den || (twice == den && (q % 2 != 0))) q += 1;
  return q;
}

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::UnresolvedReference: return "UNRESOLVED_REFERENCE";
    case ErrorCode::UnknownSchema: return "UNKNOWN_SCHEMA";
    case ErrorCode::UnknownElement: return "UNKNOWN_ELEMENT";
    case ErrorCode::HeterogeneousLeaf: return "HETEROGENEOUS_LEAF";
    case ErrorCode::ArityMismatch: return "ARITY_MISMATCH";
    case ErrorCode::UnsupportedConstruct: return "UNSUPPORTED_CONSTRUCT";
    case ErrorCode::UnknownCorrespondence: return "UNKNOWN_CORRESPONDENCE";
    case ErrorCode::ConflictingAccept: return "CONFLICTING_ACCEPT";
    case ErrorCode::TypeMismatch: return "TYPE_MISMATCH";
    case ErrorCode::NonComposable: return "NON_COMPOSABLE";
    case ErrorCode::TranslateMiss: return "TRANSLATE_MISS";
    case ErrorCode::PolicyFail: return "POLICY_FAIL";
    case ErrorCode::TargetInvalid: return "TARGET_INVALID";
    case ErrorCode::UnknownTarget: return "UNKNOWN_TARGET";
    case ErrorCode::VersionMismatch: return "VERSION_MISMATCH";
    case ErrorCode::Io: return "IO_ERROR";
  }
  return "UNKNOWN";
}

// ---- Decimal ---------------------------------------------------------------

Decimal::Decimal(std::int64_t units, int scale) : units_(units), scale_(scale) {
  if (scale < 0 || scale > kMaxScale) {
    throw Error(ErrorCode::InvalidArgument, "decimal scale out of range");
  }
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  std::size_t i = 0;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    i = 1;
  }
  i128 units = 0;
  int scale = 0;
  bool seen_dot = false;
  bool seen_digit = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (seen_dot) return std::nullopt;
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') return std::nullopt;
    seen_digit = true;
    units = units * 10 + (c - '0');
    if (seen_dot) ++scale;
    if (scale > kMaxScale || units > std::numeric_limits<std::int64_t>::max()) {
      return std::nullopt;
    }
  }
  if (!seen_digit) return std::nullopt;
  return Decimal(static_cast<std::int64_t>(negative ? -units : units), scale);
}

Decimal Decimal::rescaled(int scale) const {
  if (scale == scale_) return *this;
  if (scale > scale_) {
    return Decimal(narrow(static_cast<i128>(units_) * pow10(scale - scale_)), scale);
  }
  return Decimal(narrow(div_half_even(units_, pow10(scale_ - scale))), scale);
}

Decimal Decimal::normalized() const {
  std::int64_t u = units_;
  int s = scale_;
  while (s > 0 && u % 10 == 0) {
    u /= 10;
    --s;
  }
  return Decimal(u, s);
}

std::string Decimal::to_string() const {
  i128 mag = units_ < 0 ? -static_cast<i128>(units_) : static_cast<i128>(units_);
  std::string digits;
  do {
    digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(mag % 10)));
    mag /= 10;
  } while (mag > 0);
  if (scale_ > 0) {
    while (static_cast<int>(digits.size()) <= scale_) digits.insert(digits.begin(), '0');
    digits.insert(digits.end() - scale_, '.');
  }
  if (units_ < 0) digits.insert(digits.begin(), '-');
  return digits;
}

bool operator==(const Decimal& a, const Decimal& b) { return (a <=> b) == 0; }

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
  int s = std::max(a.scale_, b.scale_);
  i128 x = static_cast<i128>(a.units_) * pow10(s - a.scale_);
  i128 y = static_cast<i128>(b.units_) * pow10(s - b.scale_);
  if (x < y) return std::strong_ordering::less;
  if (x > y) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

// ---- Rational --------------------------------------------------------------

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(ErrorCode::InvalidArgument, "zero denominator");
  i128 n = num, d = den;
  if (d < 0) {
    n = -n;
    d = -d;
  }
  i128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  num_ = narrow(n);
  den_ = narrow(d);
}

namespace {
Rational make_rational(i128 n, i128 d) {
  if (d == 0) throw Error(ErrorCode::InvalidArgument, "division by zero");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  i128 g = gcd128(n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  return Rational(narrow(n), narrow(d));
}
}  // namespace

Rational Rational::from_decimal(const Decimal& d) {
  return make_rational(d.units(), pow10(d.scale()));
}

std::optional<Rational> Rational::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    auto d = Decimal::parse(text);
    if (!d) return std::nullopt;
    return from_decimal(*d);
  }
  std::int64_t n = 0, d = 0;
  auto num = text.substr(0, slash);
  auto den = text.substr(slash + 1);
  if (num.starts_with('+')) num.remove_prefix(1);
  auto r1 = std::from_chars(num.data(), num.data() + num.size(), n);
  auto r2 = std::from_chars(den.data(), den.data() + den.size(), d);
  if (r1.ec != std::errc{} || r1.ptr != num.data() + num.size() || r2.ec != std::errc{} ||
      r2.ptr != den.data() + den.size() || d == 0) {
    return std::nullopt;
  }
  return Rational(n, d);
}

Rational Rational::operator+(const Rational& o) const {
  return make_rational(static_cast<i128>(num_) * o.den_ + static_cast<i128>(o.num_) * den_,
                       static_cast<i128>(den_) * o.den_);
}

Rational Rational::operator-(const Rational& o) const {
  return make_rational(static_cast<i128>(num_) * o.den_ - static_cast<i128>(o.num_) * den_,
                       static_cast<i128>(den_) * o.den_);
}

Rational Rational::operator*(const Rational& o) const {
  return make_rational(static_cast<i128>(num_) * o.num_, static_cast<i128>(den_) * o.den_);
}

Rational Rational::operator/(const Rational& o) const {
  return make_rational(static_cast<i128>(num_) * o.den_, static_cast<i128>(den_) * o.num_);
}

Decimal Rational::to_decimal(int scale) const {
  return Decimal(narrow(div_half_even(static_cast<i128>(num_) * pow10(scale), den_)), scale);
}

std::string Rational::to_string() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
  i128 x = static_cast<i128>(a.num_) * b.den_;
  i128 y = static_cast<i128>(b.num_) * a.den_;
  if (x < y) return std::strong_ordering::less;
  if (x > y) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

// ---- Date ------------------------------------------------------------------

std::optional<Date> Date::parse(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    auto r = std::from_chars(iso.data() + pos, iso.data() + pos + len, v);
    if (r.ec != std::errc{} || r.ptr != iso.data() + pos + len) return std::nullopt;
    return v;
  };
  auto y = num(0, 4), m = num(5, 2), d = num(8, 2);
  if (!y || !m || !d || *m < 1 || *m > 12 || *d < 1) return std::nullopt;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  bool leap = (*y % 4 == 0 && *y % 100 != 0) || *y % 400 == 0;
  int max_day = kDays[*m - 1] + ((*m == 2 && leap) ? 1 : 0);
  if (*d > max_day) return std::nullopt;
  return Date{*y, *m, *d};
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

// ---- Value -----------------------------------------------------------------

bool values_equal(const Value& a, const Value& b) { return compare_values(a, b) == 0; }

std::weak_ordering compare_values(const Value& a, const Value& b) {
  if (a.index() != b.index()) return a.index() <=> b.index();
  return std::visit(
      [&](const auto& x) -> std::weak_ordering {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b);
        if constexpr (std::is_same_v<T, std::monostate>) {
          return std::weak_ordering::equivalent;
        } else if constexpr (std::is_same_v<T, std::shared_ptr<const Composite>>) {
          const auto& fx = x->fields;
          const auto& fy = y->fields;
          for (std::size_t i = 0; i < std::min(fx.size(), fy.size()); ++i) {
            if (auto c = fx[i].first <=> fy[i].first; c != 0) return c;
            if (auto c = compare_values(fx[i].second, fy[i].second); c != 0) return c;
          }
          return fx.size() <=> fy.size();
        } else {
          return x <=> y;
        }
      },
      a);
}

std::string render(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<T, std::shared_ptr<const Composite>>) {
          std::string out = "{";
          for (std::size_t i = 0; i < x->fields.size(); ++i) {
            if (i) out += ", ";
            out += x->fields[i].first + ": " + render(x->fields[i].second);
          }
          return out + "}";
        } else {
          return x.to_string();
        }
      },
      v);
}

}  // namespace tgm
