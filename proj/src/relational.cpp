#include "tgm/relational.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <tuple>

#include "tgm/error.hpp"

namespace tgm {

std::string SqlType::str() const {
  switch (base) {
    case Base::Char: return "CHAR(" + std::to_string(length) + ")";
    case Base::Varchar: return "VARCHAR(" + std::to_string(length) + ")";
    case Base::Int: return "INT";
    case Base::Decimal:
      return "DECIMAL(" + std::to_string(precision) + "," + std::to_string(scale) + ")";
    case Base::Date: return "DATE";
    case Base::Boolean: return "BOOLEAN";
  }
  return "?";
}

const Column* Table::column(std::string_view n) const {
  for (const auto& c : columns) {
    if (c.name == n) return &c;
  }
  return nullptr;
}

const Table* RelationalModel::table(std::string_view n) const {
  for (const auto& t : tables) {
    if (t.name == n) return &t;
  }
  return nullptr;
}

void RelationalModel::check() const {
  for (const auto& t : tables) {
    for (const auto& k : t.primary_key) {
      if (!t.column(k)) {
        throw Error(ErrorCode::UnresolvedReference,
                    "primary key column " + t.name + "." + k + " is not declared");
      }
    }
    for (const auto& fk : t.foreign_keys) {
      for (const auto& c : fk.columns) {
        if (!t.column(c)) {
          throw Error(ErrorCode::UnresolvedReference,
                      "foreign key column " + t.name + "." + c + " is not declared");
        }
      }
      const Table* ref = table(fk.table);
      if (!ref) {
        throw Error(ErrorCode::UnresolvedReference,
                    "table " + t.name + " references unknown table " + fk.table);
      }
      for (const auto& c : fk.ref_columns) {
        if (!ref->column(c)) {
          throw Error(ErrorCode::UnresolvedReference,
                      "table " + t.name + " references unknown column " + fk.table + "." + c);
        }
      }
    }
  }
}

// ---- parser ----------------------------------------------------------------

namespace {

struct Token {
  enum Kind { Ident, Number, Punct, End } kind = End;
  std::string text;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : s_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (i_ >= s_.size()) {
        out.push_back(t);
        return out;
      }
      char c = s_[i_];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        t.kind = Token::Ident;
        while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) {
          t.text += advance();
        }
      } else if (c == '"' || c == '`') {
        char quote = advance();
        t.kind = Token::Ident;
        while (i_ < s_.size() && s_[i_] != quote) t.text += advance();
        if (i_ >= s_.size()) error(t.line, t.col, "unterminated quoted identifier");
        advance();
        if (t.text.empty()) error(t.line, t.col, "empty quoted identifier");
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Token::Number;
        while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) t.text += advance();
      } else if (c == '(' || c == ')' || c == ',' || c == ';') {
        t.kind = Token::Punct;
        t.text = advance();
      } else {
        error(t.line, t.col, std::string("unexpected character '") + c + "'");
      }
      out.push_back(std::move(t));
    }
  }

  [[noreturn]] static void error(int line, int col, const std::string& msg) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
  }

 private:
  char advance() {
    char c = s_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (i_ < s_.size()) {
      char c = s_[i_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '-' && i_ + 1 < s_.size() && s_[i_ + 1] == '-') {
        while (i_ < s_.size() && s_[i_] != '\n') advance();
      } else if (c == '/' && i_ + 1 < s_.size() && s_[i_ + 1] == '*') {
        int l = line_, cc = col_;
        advance();
        advance();
        while (i_ + 1 < s_.size() && !(s_[i_] == '*' && s_[i_ + 1] == '/')) advance();
        if (i_ + 1 >= s_.size()) error(l, cc, "unterminated comment");
        advance();
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view s_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  RelationalModel run() {
    RelationalModel m;
    while (peek().kind != Token::End) {
      if (is_punct(";")) {
        ++p_;
        continue;
      }
      Table t = create_table();
      if (m.table(t.name)) fail(last_name_tok_, "duplicate table " + t.name);
      m.tables.push_back(std::move(t));
    }
    return m;
  }

 private:
  const Token& peek() const { return t_[p_]; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    Lexer::error(t.line, t.col, msg);
  }

  [[noreturn]] void unexpected(const std::string& wanted) const {
    const Token& t = peek();
    fail(t, "expected " + wanted + ", found " + (t.kind == Token::End ? "end of input" : "'" + t.text + "'"));
  }

  bool is_kw(std::string_view kw) const {
    return peek().kind == Token::Ident && upper(peek().text) == kw;
  }
  bool is_punct(std::string_view p) const { return peek().kind == Token::Punct && peek().text == p; }

  void expect_kw(std::string_view kw) {
    if (!is_kw(kw)) unexpected(std::string(kw));
    ++p_;
  }
  void expect_punct(std::string_view p) {
    if (!is_punct(p)) unexpected("'" + std::string(p) + "'");
    ++p_;
  }
  std::string ident() {
    if (peek().kind != Token::Ident) unexpected("identifier");
    return t_[p_++].text;
  }
  int number() {
    if (peek().kind != Token::Number) unexpected("number");
    const auto& s = t_[p_].text;
    int v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{}) fail(peek(), "number out of range");
    ++p_;
    return v;
  }

  std::vector<std::string> ident_list() {
    expect_punct("(");
    std::vector<std::string> out{ident()};
    while (is_punct(",")) {
      ++p_;
      out.push_back(ident());
    }
    expect_punct(")");
    return out;
  }

  SqlType sql_type() {
    const Token& at = peek();
    std::string kw = upper(ident());
    SqlType t;
    if (kw == "CHAR" || kw == "CHARACTER" || kw == "VARCHAR") {
      t.base = kw == "VARCHAR" ? SqlType::Base::Varchar : SqlType::Base::Char;
      expect_punct("(");
      t.length = number();
      expect_punct(")");
      if (t.length <= 0) fail(at, "string length must be positive");
    } else if (kw == "INT" || kw == "INTEGER") {
      t.base = SqlType::Base::Int;
    } else if (kw == "DECIMAL" || kw == "NUMERIC") {
      t.base = SqlType::Base::Decimal;
      expect_punct("(");
      t.precision = number();
      if (is_punct(",")) {
        ++p_;
        t.scale = number();
      }
      expect_punct(")");
      if (t.precision <= 0 || t.scale > t.precision || t.scale > 18) {
        fail(at, "invalid DECIMAL precision/scale");
      }
    } else if (kw == "DATE") {
      t.base = SqlType::Base::Date;
    } else if (kw == "BOOLEAN" || kw == "BOOL") {
      t.base = SqlType::Base::Boolean;
    } else {
      fail(at, "unsupported column type '" + at.text + "'");
    }
    return t;
  }

  void set_pk(Table& t, std::vector<std::string> cols, const Token& at) {
    if (!t.primary_key.empty()) fail(at, "table " + t.name + " declares more than one primary key");
    t.primary_key = std::move(cols);
  }

  Table create_table() {
    expect_kw("CREATE");
    expect_kw("TABLE");
    last_name_tok_ = peek();
    Table t;
    t.name = ident();
    expect_punct("(");
    for (;;) {
      const Token& at = peek();
      if (is_kw("CONSTRAINT")) {
        ++p_;
        ident();
      }
      if (is_kw("PRIMARY")) {
        ++p_;
        expect_kw("KEY");
        set_pk(t, ident_list(), at);
      } else if (is_kw("FOREIGN")) {
        ++p_;
        expect_kw("KEY");
        ForeignKey fk;
        fk.columns = ident_list();
        expect_kw("REFERENCES");
        fk.table = ident();
        fk.ref_columns = ident_list();
        if (fk.columns.size() != fk.ref_columns.size()) {
          fail(at, "foreign key column count differs from referenced column count");
        }
        t.foreign_keys.push_back(std::move(fk));
      } else {
        column_def(t);
      }
      if (is_punct(",")) {
        ++p_;
        continue;
      }
      expect_punct(")");
      break;
    }
    if (is_punct(";")) ++p_;
    return t;
  }

  void column_def(Table& t) {
    const Token& at = peek();
    Column c;
    c.name = ident();
    if (t.column(c.name)) fail(at, "duplicate column " + t.name + "." + c.name);
    c.type = sql_type();
    for (;;) {
      const Token& mod = peek();
      if (is_kw("NOT")) {
        ++p_;
        expect_kw("NULL");
        c.not_null = true;
      } else if (is_kw("NULL")) {
        ++p_;
      } else if (is_kw("PRIMARY")) {
        ++p_;
        expect_kw("KEY");
        set_pk(t, {c.name}, mod);
      } else if (is_kw("REFERENCES")) {
        ++p_;
        ForeignKey fk;
        fk.columns = {c.name};
        fk.table = ident();
        fk.ref_columns = ident_list();
        if (fk.ref_columns.size() != 1) fail(mod, "column reference must name one column");
        t.foreign_keys.push_back(std::move(fk));
      } else {
        break;
      }
    }
    t.columns.push_back(std::move(c));
  }

  std::vector<Token> t_;
  std::size_t p_ = 0;
  Token last_name_tok_;
};

}  // namespace

RelationalModel parse_ddl(std::string_view ddl) {
  return Parser(Lexer(ddl).run()).run();
}

std::string render_ddl(const RelationalModel& model) {
  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
    return out;
  };
  std::string out;
  for (const auto& t : model.tables) {
    if (!out.empty()) out += "\n";
    out += "CREATE TABLE " + t.name + " (\n";
    std::vector<std::string> lines;
    for (const auto& c : t.columns) {
      lines.push_back("  " + c.name + " " + c.type.str() + (c.not_null ? " NOT NULL" : ""));
    }
    if (!t.primary_key.empty()) lines.push_back("  PRIMARY KEY (" + join(t.primary_key) + ")");
    for (const auto& fk : t.foreign_keys) {
      lines.push_back("  FOREIGN KEY (" + join(fk.columns) + ") REFERENCES " + fk.table + " (" +
                      join(fk.ref_columns) + ")");
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      out += lines[i] + (i + 1 < lines.size() ? ",\n" : "\n");
    }
    out += ");\n";
  }
  return out;
}

namespace {

// Canonical, order-free image of a table.
auto canonical(const Table& t) {
  std::set<std::tuple<std::string, std::string, bool>> cols;
  for (const auto& c : t.columns) cols.emplace(c.name, c.type.str(), c.not_null);
  std::vector<std::string> pk = t.primary_key;
  std::sort(pk.begin(), pk.end());
  std::multiset<std::tuple<std::string, std::vector<std::pair<std::string, std::string>>>> fks;
  for (const auto& fk : t.foreign_keys) {
    // Column pairs stay aligned; their listing order is immaterial.
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < fk.columns.size(); ++i) pairs.emplace_back(fk.columns[i], fk.ref_columns[i]);
    std::sort(pairs.begin(), pairs.end());
    fks.emplace(fk.table, std::move(pairs));
  }
  return std::make_tuple(t.name, cols, pk, fks);
}

}  // namespace

bool equivalent(const RelationalModel& a, const RelationalModel& b) {
  if (a.tables.size() != b.tables.size()) return false;
  using Canon = decltype(canonical(std::declval<const Table&>()));
  std::set<Canon> ca, cb;
  for (const auto& t : a.tables) ca.insert(canonical(t));
  for (const auto& t : b.tables) cb.insert(canonical(t));
  return ca == cb;
}

}  // namespace tgm
