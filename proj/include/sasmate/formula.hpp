#pragma once

#include <cctype>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sasmate/elements.hpp"
#include "sasmate/error.hpp"

namespace sasmate {

/// Element symbol -> count, kept in order of first appearance. Counts may be
/// fractional (average formulas of mixtures).
class Composition {
 public:
  using Entry = std::pair<std::string, double>;

  Composition() = default;

  void add(std::string_view symbol, double count) {
    for (auto& [sym, n] : entries_) {
      if (sym == symbol) {
        n += count;
        return;
      }
    }
    entries_.emplace_back(std::string(symbol), count);
  }

  double count(std::string_view symbol) const {
    for (const auto& [sym, n] : entries_)
      if (sym == symbol) return n;
    return 0.0;
  }

  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  Composition scaled(double factor) const {
    Composition out = *this;
    for (auto& e : out.entries_) e.second *= factor;
    return out;
  }

  /// Canonical text, e.g. "C4H8O" or "H1.5D0.5O"; parses back to an equal value.
  std::string to_string() const {
    std::string out;
    for (const auto& [sym, n] : entries_) {
      out += sym;
      if (n != 1.0) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", n);
        out += buf;
      }
    }
    return out;
  }

  /// Order-insensitive equality.
  friend bool operator==(const Composition& a, const Composition& b) {
    if (a.size() != b.size()) return false;
    for (const auto& [sym, n] : a.entries_)
      if (b.count(sym) != n) return false;
    return true;
  }

 private:
  std::vector<Entry> entries_;
};

namespace detail {

class FormulaParser {
 public:
  FormulaParser(std::string_view text, const ElementTable& table) : text_(text), table_(table) {}

  Composition parse() {
    skip_space();
    if (pos_ >= text_.size()) throw Error(ErrorCode::EmptyFormula, "formula is empty");
    Composition out = parse_sequence(0);
    if (pos_ < text_.size()) {
      // only a stray ')' can stop the top-level sequence early
      throw Error(ErrorCode::UnbalancedParenthesis, "unexpected ')' at position " + std::to_string(pos_));
    }
    return out;
  }

 private:
  Composition parse_sequence(int depth) {
    Composition out;
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) break;
      const char c = text_[pos_];
      if (c == ')') {
        if (depth == 0)
          throw Error(ErrorCode::UnbalancedParenthesis,
                      "unexpected ')' at position " + std::to_string(pos_));
        break;
      }
      if (c == '(') {
        const std::size_t open = pos_++;
        Composition group = parse_sequence(depth + 1);
        if (pos_ >= text_.size() || text_[pos_] != ')')
          throw Error(ErrorCode::UnbalancedParenthesis,
                      "'(' at position " + std::to_string(open) + " is never closed");
        ++pos_;
        if (group.empty())
          throw Error(ErrorCode::EmptyFormula, "empty group at position " + std::to_string(open));
        const double mult = parse_count();
        for (const auto& [sym, n] : group.entries()) out.add(sym, n * mult);
        continue;
      }
      const std::string symbol = parse_symbol();
      table_.at(symbol);
      out.add(symbol, parse_count());
    }
    return out;
  }

  std::string parse_symbol() {
    const std::size_t start = pos_;
    if (!std::isupper(static_cast<unsigned char>(text_[pos_]))) {
      std::size_t end = pos_ + 1;
      while (end < text_.size() && std::isalpha(static_cast<unsigned char>(text_[end]))) ++end;
      throw Error(ErrorCode::UnknownElement, std::string(text_.substr(start, end - start)));
    }
    ++pos_;
    while (pos_ < text_.size() && std::islower(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '[') {
      const std::size_t close = text_.find(']', pos_);
      if (close == std::string_view::npos)
        throw Error(ErrorCode::UnknownElement, std::string(text_.substr(start)));
      pos_ = close + 1;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  double parse_count() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ == start) return 1.0;
    const std::string digits(text_.substr(start, pos_ - start));
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(digits, &used);
      if (used != digits.size()) throw std::invalid_argument(digits);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ZeroCount, "malformed count '" + digits + "' at position " +
                                            std::to_string(start));
    }
    if (value <= 0.0)
      throw Error(ErrorCode::ZeroCount, "count must be positive at position " + std::to_string(start));
    return value;
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view text_;
  const ElementTable& table_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Grammar: (Element Count? | '(' group ')' Count?)*, where Element is an
/// uppercase letter, optional lowercase letters and an optional "[A]" mass
/// number. Group counts multiply through; repeated symbols accumulate.
inline Composition parse_formula(std::string_view text,
                                 const ElementTable& table = ElementTable::builtin()) {
  return detail::FormulaParser(text, table).parse();
}

}  // namespace sasmate
