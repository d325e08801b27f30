#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tgm {

struct SqlType {
  enum class Base { Char, Varchar, Int, Decimal, Date, Boolean };
  Base base = Base::Int;
  int length = 0;     // CHAR / VARCHAR
  int precision = 0;  // DECIMAL
  int scale = 0;      // DECIMAL

  std::string str() const;
  friend bool operator==(const SqlType&, const SqlType&) = default;
};

struct Column {
  std::string name;
  SqlType type;
  bool not_null = false;

  friend bool operator==(const Column&, const Column&) = default;
};

struct ForeignKey {
  std::vector<std::string> columns;
  std::string table;
  std::vector<std::string> ref_columns;

  friend bool operator==(const ForeignKey&, const ForeignKey&) = default;
};

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::string> primary_key;
  std::vector<ForeignKey> foreign_keys;

  const Column* column(std::string_view name) const;
};

struct RelationalModel {
  std::vector<Table> tables;

  const Table* table(std::string_view name) const;
  /// Throws Error(UnresolvedReference) for FKs to unknown tables/columns or
  /// PK columns missing from their table.
  void check() const;
};

/// Parses the supported CREATE TABLE subset:
///
///   CREATE TABLE name ( column type [NOT NULL] [PRIMARY KEY] [REFERENCES t(c)], ...
///                       [, PRIMARY KEY (cols)] [, FOREIGN KEY (cols) REFERENCES t(cols)] );
///
/// with types CHAR(n), VARCHAR(n), INT|INTEGER, DECIMAL(p[,s]), DATE, BOOLEAN.
/// Keywords are case-insensitive; "--" and "/* */" comments are skipped.
/// Errors are Error(ParseError) with "line L, column C". References are not
/// resolved here; see RelationalModel::check.
RelationalModel parse_ddl(std::string_view ddl);

std::string render_ddl(const RelationalModel& model);

/// Order-insensitive structural equality: table/column/PK/FK sets.
bool equivalent(const RelationalModel& a, const RelationalModel& b);

}  // namespace tgm
