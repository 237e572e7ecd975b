#pragma once

#include <charconv>
#include <sstream>
#include <string>
#include <string_view>

#include "slan/lts.hpp"

namespace slan {

/// Aldebaran text: `des (initial, #transitions, #states)` followed by one
/// `(src,"label",dst)` line per transition in canonical order.
inline std::string export_aut(const Lts& lts) {
  std::string out = "des (" + std::to_string(lts.initial()) + "," +
                    std::to_string(lts.num_transitions()) + "," +
                    std::to_string(lts.num_states()) + ")\n";
  for (const auto& t : lts.transitions()) {
    out += "(" + std::to_string(t.src) + ",\"" + to_string(t.label) + "\"," +
           std::to_string(t.dst) + ")\n";
  }
  return out;
}

namespace detail {

class AutLine {
 public:
  AutLine(std::string_view text, std::size_t line) : s_(text), line_(line) {}

  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' ||
                                s_[pos_] == '\r'))
      ++pos_;
  }
  void expect(char c) {
    skip_space();
    if (pos_ >= s_.size() || s_[pos_] != c)
      throw ParseError(line_, std::string("expected '") + c + "'");
    ++pos_;
  }
  void expect(std::string_view word) {
    skip_space();
    if (s_.substr(pos_, word.size()) != word)
      throw ParseError(line_, "expected '" + std::string(word) + "'");
    pos_ += word.size();
  }
  std::size_t number() {
    skip_space();
    std::size_t value = 0;
    auto [ptr, ec] =
        std::from_chars(s_.data() + pos_, s_.data() + s_.size(), value);
    if (ec != std::errc{}) throw ParseError(line_, "expected a number");
    pos_ = std::size_t(ptr - s_.data());
    return value;
  }
  std::string_view quoted() {
    expect('"');
    std::size_t end = s_.find('"', pos_);
    if (end == std::string_view::npos)
      throw ParseError(line_, "unterminated label");
    std::string_view text = s_.substr(pos_, end - pos_);
    pos_ = end + 1;
    return text;
  }
  void finish() {
    skip_space();
    if (pos_ != s_.size()) throw ParseError(line_, "trailing characters");
  }

 private:
  std::string_view s_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses Aldebaran text produced by export_aut (or compatible tools using
/// the same label syntax). Errors carry the 1-based line number.
inline Lts import_aut(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string_view::npos)
        return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError(1, "missing des header");
  detail::AutLine header(line, line_no);
  header.expect("des");
  header.expect('(');
  std::size_t initial = header.number();
  header.expect(',');
  std::size_t num_transitions = header.number();
  header.expect(',');
  std::size_t num_states = header.number();
  header.expect(')');
  header.finish();
  if (num_states == 0) throw ParseError(line_no, "state count must be positive");
  if (initial != 0) throw ParseError(line_no, "initial state must be 0");

  std::vector<Transition> transitions;
  transitions.reserve(num_transitions);
  while (next_line(line)) {
    detail::AutLine l(line, line_no);
    l.expect('(');
    std::size_t src = l.number();
    l.expect(',');
    std::string_view label_text = l.quoted();
    l.expect(',');
    std::size_t dst = l.number();
    l.expect(')');
    l.finish();
    if (src >= num_states || dst >= num_states)
      throw ParseError(line_no, "state index out of range");
    auto label = parse_label(label_text);
    if (!label)
      throw ParseError(line_no,
                       "unknown label \"" + std::string(label_text) + "\"");
    transitions.push_back({StateIndex(src), *label, StateIndex(dst)});
  }
  if (transitions.size() != num_transitions)
    throw ParseError(line_no, "header announces " +
                                  std::to_string(num_transitions) +
                                  " transitions, found " +
                                  std::to_string(transitions.size()));
  return Lts(num_states, std::move(transitions));
}

/// Graphviz rendering; graph name `slan`, node ids are state indices.
inline std::string export_dot(const Lts& lts) {
  std::ostringstream out;
  out << "digraph slan {\n";
  out << "  " << lts.initial() << " [shape=doublecircle];\n";
  for (const auto& t : lts.transitions())
    out << "  " << t.src << " -> " << t.dst << " [label=\""
        << to_string(t.label) << "\"];\n";
  out << "}\n";
  return out.str();
}

}  // namespace slan
