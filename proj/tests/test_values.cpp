#include <gtest/gtest.h>

#include <random>

#include "tgm/datatype.hpp"
#include "tgm/error.hpp"
#include "tgm/value.hpp"

using namespace tgm;

TEST(Decimal, ParseAndRender) {
  EXPECT_EQ(Decimal::parse("-12.50")->to_string(), "-12.50");
  EXPECT_EQ(Decimal::parse("0.05")->to_string(), "0.05");
  EXPECT_EQ(Decimal::parse("7")->to_string(), "7");
  EXPECT_FALSE(Decimal::parse("1e2"));
  EXPECT_FALSE(Decimal::parse("."));
  EXPECT_FALSE(Decimal::parse(""));
  EXPECT_FALSE(Decimal::parse("1.2.3"));
}

TEST(Decimal, EqualityIgnoresTrailingZeros) {
  EXPECT_EQ(*Decimal::parse("1.50"), *Decimal::parse("1.5"));
  EXPECT_LT(*Decimal::parse("-0.1"), *Decimal::parse("0"));
  EXPECT_EQ(Decimal::parse("2.500")->normalized().to_string(), "2.5");
}

TEST(Decimal, HalfEvenRescale) {
  EXPECT_EQ(Decimal::parse("2.5")->rescaled(0).to_string(), "2");
  EXPECT_EQ(Decimal::parse("3.5")->rescaled(0).to_string(), "4");
  EXPECT_EQ(Decimal::parse("-2.5")->rescaled(0).to_string(), "-2");
  EXPECT_EQ(Decimal::parse("-3.5")->rescaled(0).to_string(), "-4");
  EXPECT_EQ(Decimal::parse("1.005")->rescaled(2).to_string(), "1.00");
  EXPECT_EQ(Decimal::parse("1.0051")->rescaled(2).to_string(), "1.01");
  EXPECT_EQ(Decimal::parse("1.2")->rescaled(3).to_string(), "1.200");
}

// Oracle: pick the nearer of floor/ceil by comparing twice the remainder,
// breaking ties toward the even candidate.
TEST(Decimal, HalfEvenMatchesOracle) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> units(-1'000'000, 1'000'000);
  std::uniform_int_distribution<int> drop(1, 4);
  for (int i = 0; i < 2000; ++i) {
    std::int64_t u = units(rng);
    int k = drop(rng);
    std::int64_t p = 1;
    for (int j = 0; j < k; ++j) p *= 10;
    std::int64_t lo = u >= 0 ? u / p : -((-u + p - 1) / p);  // floor
    std::int64_t rem2 = 2 * (u - lo * p);
    std::int64_t expect = rem2 < p ? lo : rem2 > p ? lo + 1 : (lo % 2 == 0 ? lo : lo + 1);
    EXPECT_EQ(Decimal(u, 6).rescaled(6 - k), Decimal(expect, 6 - k)) << u << " k=" << k;
  }
}

TEST(Rational, ArithmeticIsExact) {
  Rational a(10), b(12);
  EXPECT_EQ(((a + b) / Rational(2)).to_string(), "11");
  EXPECT_EQ((Rational(1, 3) + Rational(1, 6)).to_string(), "1/2");
  EXPECT_EQ(Rational::parse("-1.25")->to_string(), "-5/4");
  EXPECT_EQ(Rational::parse("6/4")->to_string(), "3/2");
  EXPECT_EQ(Rational(1, 3).to_decimal(4).to_string(), "0.3333");
  EXPECT_EQ(Rational(5, 2).to_decimal(0).to_string(), "2");
  EXPECT_THROW(Rational(1, 0), Error);
  EXPECT_FALSE(Rational::parse("1/0"));
}

TEST(Date, ParseValidates) {
  EXPECT_TRUE(Date::parse("2024-02-29"));
  EXPECT_FALSE(Date::parse("2023-02-29"));
  EXPECT_FALSE(Date::parse("1900-02-29"));
  EXPECT_TRUE(Date::parse("2000-02-29"));
  EXPECT_FALSE(Date::parse("2023-13-01"));
  EXPECT_FALSE(Date::parse("2023-1-01"));
  EXPECT_EQ(Date::parse("2021-03-04")->to_string(), "2021-03-04");
}

TEST(Value, OrderingIsTotalAndKindFirst) {
  Value a = std::int64_t{3}, b = std::string("3"), n;
  EXPECT_TRUE(compare_values(a, b) != 0);
  EXPECT_TRUE(compare_values(n, a) < 0);
  EXPECT_TRUE(values_equal(Value{Decimal(150, 2)}, Value{Decimal(15, 1)}));
  EXPECT_EQ(render(n), "");
  EXPECT_EQ(render(Value{true}), "true");
}

TEST(DataType, ConformsRespectsLengthAndPrecision) {
  auto ch = DataType::string(6, true);
  EXPECT_TRUE(conforms(Value{std::string("N01")}, ch));
  EXPECT_FALSE(conforms(Value{std::string("TOOLONG")}, ch));
  EXPECT_TRUE(conforms(Value{std::string("äöüäöü")}, ch));  // code points, not bytes
  auto dec = DataType::decimal(5, 2);
  EXPECT_TRUE(conforms(Value{*Decimal::parse("123.45")}, dec));
  EXPECT_FALSE(conforms(Value{*Decimal::parse("1234.5")}, dec));
  EXPECT_FALSE(conforms(Value{*Decimal::parse("1.234")}, dec));
  EXPECT_FALSE(conforms(Value{std::int64_t{1}}, dec));
  EXPECT_TRUE(conforms(Value{}, dec));
}

TEST(DataType, CoerceParsesAndWidens) {
  EXPECT_EQ(std::get<std::int64_t>(*coerce(Value{std::string("42")}, DataType::integer())), 42);
  EXPECT_FALSE(coerce(Value{std::string("4x")}, DataType::integer()));
  auto d = coerce(Value{std::int64_t{3}}, DataType::decimal(std::nullopt, 2));
  ASSERT_TRUE(d);
  EXPECT_EQ(std::get<Decimal>(*d).to_string(), "3.00");
  EXPECT_FALSE(coerce(Value{*Decimal::parse("1.234")}, DataType::decimal(std::nullopt, 2)));
  EXPECT_TRUE(std::get<bool>(*coerce(Value{std::string("true")}, DataType::boolean())));
  EXPECT_EQ(std::get<Date>(*coerce(Value{std::string("2021-01-02")}, DataType::date())).day, 2);
}

TEST(DataType, EnumerationComparesUnderNfcCaseSensitive) {
  // "é" precomposed (U+00E9) vs "e" + combining acute (U+0301).
  auto t = DataType::enumeration("Ward", {"caf\xC3\xA9", "North"});
  EXPECT_TRUE(conforms(Value{std::string("cafe\xCC\x81")}, t));
  EXPECT_FALSE(conforms(Value{std::string("north")}, t));
  EXPECT_EQ(std::get<std::string>(*coerce(Value{std::string("cafe\xCC\x81")}, t)), "caf\xC3\xA9");
  EXPECT_EQ(nfc("cafe\xCC\x81"), "caf\xC3\xA9");
}

TEST(DataType, CheckRejectsBadEnumAndComposite) {
  EXPECT_THROW(DataType::enumeration("E", {}).check(), Error);
  EXPECT_THROW(DataType::enumeration("E", {"a", "a"}).check(), Error);
  EXPECT_THROW(DataType::composite("C", {{"x", DataType::integer()}, {"x", DataType::date()}}).check(),
               Error);
  EXPECT_NO_THROW(DataType::composite("C", {{"x", DataType::integer()}}).check());
}
