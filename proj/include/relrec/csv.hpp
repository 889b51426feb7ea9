#pragma once
// Minimal RFC 4180 reader/writer: comma separated, double-quote escaping,
// quoted fields may span lines.

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "relrec/error.hpp"

namespace relrec::csv {

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line on which the record starts
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::optional<Record> next() {
    Record rec;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    rec.line = line_;
    while ((c = in_.get()) != EOF) {
      any = true;
      if (in_quotes) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            in_quotes = false;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(static_cast<char>(c));
        }
        continue;
      }
      if (c == '"' && field.empty()) {
        in_quotes = true;
      } else if (c == ',') {
        rec.fields.push_back(std::move(field));
        field.clear();
      } else if (c == '\r' && in_.peek() == '\n') {
        continue;
      } else if (c == '\n') {
        ++line_;
        rec.fields.push_back(std::move(field));
        return rec;
      } else {
        field.push_back(static_cast<char>(c));
      }
    }
    if (in_quotes) throw Error(ErrorCode::parse, "unterminated quoted field", "line " + std::to_string(rec.line));
    if (!any) return std::nullopt;
    rec.fields.push_back(std::move(field));
    return rec;
  }

  // Skips records that are entirely blank.
  std::optional<Record> next_nonblank() {
    while (auto r = next())
      if (!(r->fields.size() == 1 && r->fields[0].empty())) return r;
    return std::nullopt;
  }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << quote(fields[i]);
  }
  out << '\n';
}

}  // namespace relrec::csv
