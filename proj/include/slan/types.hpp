#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace slan {

/// A service level. Valid levels are < Config::max; the value max itself
/// encodes "None" (nothing settled or recorded yet).
using Level = std::uint8_t;

/// Largest supported number of levels (LevelSet is a 32-bit mask).
inline constexpr unsigned kMaxLevels = 31;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A channel would grow beyond Config::queue_cap.
class QueueCapExceeded : public Error {
 public:
  using Error::Error;
};

/// Malformed input text (.aut, labels, scenario files).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class PartyId : std::uint8_t { Id1 = 0, Id2 = 1 };

constexpr PartyId peer(PartyId p) noexcept {
  return p == PartyId::Id1 ? PartyId::Id2 : PartyId::Id1;
}
constexpr std::size_t index_of(PartyId p) noexcept {
  return static_cast<std::size_t>(p);
}
inline constexpr PartyId kParties[] = {PartyId::Id1, PartyId::Id2};

/// Finite set of levels, stored as a bit mask.
class LevelSet {
 public:
  constexpr LevelSet() = default;

  static constexpr LevelSet of(Level l) noexcept {
    LevelSet s;
    s.bits_ = 1u << l;
    return s;
  }

  constexpr bool empty() const noexcept { return bits_ == 0; }
  constexpr bool contains(Level l) const noexcept {
    return (bits_ >> l) & 1u;
  }
  constexpr LevelSet with(Level l) const noexcept {
    LevelSet s = *this;
    s.bits_ |= 1u << l;
    return s;
  }
  /// Smallest element, or `none` when empty.
  constexpr Level min_or(Level none) const noexcept {
    if (bits_ == 0) return none;
    Level l = 0;
    while (!contains(l)) ++l;
    return l;
  }
  constexpr std::uint32_t bits() const noexcept { return bits_; }

  friend constexpr bool operator==(LevelSet, LevelSet) = default;
  friend constexpr auto operator<=>(LevelSet, LevelSet) = default;

 private:
  std::uint32_t bits_ = 0;
};

enum class MessageKind : std::uint8_t { Inform = 0, Decide = 1 };

struct Message {
  MessageKind kind = MessageKind::Inform;
  Level level = 0;

  static constexpr Message inform(Level l) noexcept {
    return {MessageKind::Inform, l};
  }
  static constexpr Message decide(Level l) noexcept {
    return {MessageKind::Decide, l};
  }

  friend constexpr bool operator==(const Message&, const Message&) = default;
  friend constexpr auto operator<=>(const Message&, const Message&) = default;
};

enum class ActionKind : std::uint8_t {
  Propose = 0,
  Agreed = 1,
  InQ = 2,
  OutQ = 3,
  Tau = 4,
  Delta = 5,
};

/// Transition label. The declaration order of the fields defines the
/// canonical label order used everywhere (sorting, exports).
struct ActionLabel {
  ActionKind kind = ActionKind::Tau;
  /// Acting party for propose/agreed, channel owner for in_q/out_q.
  PartyId party = PartyId::Id1;
  MessageKind message_kind = MessageKind::Inform;
  Level level = 0;

  static constexpr ActionLabel propose(PartyId p, Level l) noexcept {
    return {ActionKind::Propose, p, MessageKind::Inform, l};
  }
  static constexpr ActionLabel agreed(PartyId p, Level l) noexcept {
    return {ActionKind::Agreed, p, MessageKind::Inform, l};
  }
  static constexpr ActionLabel in_q(PartyId owner, Message m) noexcept {
    return {ActionKind::InQ, owner, m.kind, m.level};
  }
  static constexpr ActionLabel out_q(PartyId owner, Message m) noexcept {
    return {ActionKind::OutQ, owner, m.kind, m.level};
  }
  static constexpr ActionLabel tau() noexcept { return {}; }
  static constexpr ActionLabel delta() noexcept {
    return {ActionKind::Delta, PartyId::Id1, MessageKind::Inform, 0};
  }

  constexpr bool is(ActionKind k) const noexcept { return kind == k; }
  constexpr bool is(ActionKind k, PartyId p) const noexcept {
    return kind == k && party == p;
  }
  constexpr Message message() const noexcept { return {message_kind, level}; }

  /// Dense 32-bit code preserving the canonical order.
  constexpr std::uint32_t code() const noexcept {
    return (std::uint32_t(kind) << 24) | (std::uint32_t(party) << 16) |
           (std::uint32_t(message_kind) << 8) | level;
  }
  static constexpr ActionLabel from_code(std::uint32_t c) noexcept {
    return {ActionKind((c >> 24) & 0xff), PartyId((c >> 16) & 0xff),
            MessageKind((c >> 8) & 0xff), Level(c & 0xff)};
  }

  friend constexpr bool operator==(const ActionLabel&,
                                   const ActionLabel&) = default;
  friend constexpr auto operator<=>(const ActionLabel&,
                                    const ActionLabel&) = default;
};

inline std::string to_string(PartyId p) {
  return p == PartyId::Id1 ? "id1" : "id2";
}

inline std::string to_string(const Message& m) {
  return std::string(m.kind == MessageKind::Inform ? "inform(" : "decide(") +
         std::to_string(m.level) + ")";
}

/// Renders a label as in .aut files: `propose(id1,0)`, `agreed(id2,1)`,
/// `in_q(id1,inform(0))`, `out_q(id2,decide(1))`, `tau`, `delta`.
inline std::string to_string(const ActionLabel& a) {
  switch (a.kind) {
    case ActionKind::Propose:
      return "propose(" + to_string(a.party) + "," + std::to_string(a.level) +
             ")";
    case ActionKind::Agreed:
      return "agreed(" + to_string(a.party) + "," + std::to_string(a.level) +
             ")";
    case ActionKind::InQ:
      return "in_q(" + to_string(a.party) + "," + to_string(a.message()) + ")";
    case ActionKind::OutQ:
      return "out_q(" + to_string(a.party) + "," + to_string(a.message()) +
             ")";
    case ActionKind::Tau:
      return "tau";
    case ActionKind::Delta:
      return "delta";
  }
  return "?";
}

namespace detail {

class LabelCursor {
 public:
  explicit LabelCursor(std::string_view s) : s_(s) {}

  bool literal(std::string_view lit) {
    if (s_.substr(pos_, lit.size()) != lit) return false;
    pos_ += lit.size();
    return true;
  }
  std::optional<Level> number() {
    unsigned value = 0;
    std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') {
      value = value * 10 + unsigned(s_[pos_] - '0');
      if (value > 255) return std::nullopt;
      ++pos_;
    }
    if (pos_ == start) return std::nullopt;
    return Level(value);
  }
  std::optional<PartyId> party() {
    if (literal("id1")) return PartyId::Id1;
    if (literal("id2")) return PartyId::Id2;
    return std::nullopt;
  }
  std::optional<Message> message() {
    MessageKind kind;
    if (literal("inform(")) {
      kind = MessageKind::Inform;
    } else if (literal("decide(")) {
      kind = MessageKind::Decide;
    } else {
      return std::nullopt;
    }
    auto l = number();
    if (!l || !literal(")")) return std::nullopt;
    return Message{kind, *l};
  }
  bool done() const { return pos_ == s_.size(); }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Inverse of to_string(ActionLabel); nullopt on malformed text.
inline std::optional<ActionLabel> parse_label(std::string_view text) {
  if (text == "tau") return ActionLabel::tau();
  if (text == "delta") return ActionLabel::delta();
  detail::LabelCursor cur(text);
  std::optional<ActionLabel> result;
  if (cur.literal("propose(") || cur.literal("agreed(")) {
    bool is_propose = text.front() == 'p';
    auto p = cur.party();
    if (!p || !cur.literal(",")) return std::nullopt;
    auto l = cur.number();
    if (!l || !cur.literal(")")) return std::nullopt;
    result = is_propose ? ActionLabel::propose(*p, *l)
                        : ActionLabel::agreed(*p, *l);
  } else if (cur.literal("in_q(") || cur.literal("out_q(")) {
    bool is_in = text.front() == 'i';
    auto p = cur.party();
    if (!p || !cur.literal(",")) return std::nullopt;
    auto m = cur.message();
    if (!m || !cur.literal(")")) return std::nullopt;
    result = is_in ? ActionLabel::in_q(*p, *m) : ActionLabel::out_q(*p, *m);
  }
  if (!result || !cur.done()) return std::nullopt;
  return result;
}

/// Parses `inform(l)` / `decide(l)`.
inline std::optional<Message> parse_message(std::string_view text) {
  detail::LabelCursor cur(text);
  auto m = cur.message();
  if (!m || !cur.done()) return std::nullopt;
  return m;
}

inline std::optional<PartyId> parse_party(std::string_view text) {
  if (text == "id1") return PartyId::Id1;
  if (text == "id2") return PartyId::Id2;
  return std::nullopt;
}

/// Swaps the roles of the two parties in a label.
constexpr ActionLabel mirrored(ActionLabel a) noexcept {
  if (a.kind != ActionKind::Tau && a.kind != ActionKind::Delta)
    a.party = peer(a.party);
  return a;
}

}  // namespace slan
