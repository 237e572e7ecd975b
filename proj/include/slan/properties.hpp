#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "slan/graph.hpp"
#include "slan/lts.hpp"

namespace slan {

struct CheckResult {
  bool holds = true;
  /// Shortest trace to the violation; present iff !holds.
  std::optional<std::vector<ActionLabel>> counterexample;
  /// Extra context for the violation (e.g. the failing annotation).
  std::string detail;
};

/// A requirement-IV annotation list left the lengths {1, 2}.
class AnnotationOverflow : public Error {
 public:
  using Error::Error;
};

namespace detail {

/// Breadth-first search over the product of `lts` with a deterministic
/// observer. `step(m, label)` returns the next observer state or nullopt
/// for a violating step; `bad(s, m)` flags violating product states.
template <class MState, class Step, class Bad, class Hash = std::hash<MState>>
CheckResult product_search(const Lts& lts, MState init, Step&& step,
                           Bad&& bad) {
  struct Key {
    StateIndex state;
    MState monitor;
    bool operator==(const Key& o) const {
      return state == o.state && monitor == o.monitor;
    }
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return Hash{}(k.monitor) * 0x9e3779b97f4a7c15ull ^ k.state;
    }
  };
  std::unordered_map<Key, std::uint32_t, KeyHash> seen;
  std::vector<Key> nodes;
  std::vector<std::uint32_t> parent;
  std::vector<ActionLabel> via;

  auto trace_to = [&](std::uint32_t node) {
    std::vector<ActionLabel> trace;
    while (node != 0) {
      trace.push_back(via[node]);
      node = parent[node];
    }
    std::reverse(trace.begin(), trace.end());
    return trace;
  };

  nodes.push_back({lts.initial(), std::move(init)});
  parent.push_back(0);
  via.push_back(ActionLabel::tau());
  seen.emplace(nodes.front(), 0);
  for (std::uint32_t cur = 0; cur < nodes.size(); ++cur) {
    const StateIndex s = nodes[cur].state;
    if (std::optional<std::string> why = bad(s, nodes[cur].monitor))
      return {false, trace_to(cur), *why};
    for (const auto& t : lts.outgoing(s)) {
      std::optional<MState> next = step(nodes[cur].monitor, t.label);
      if (!next) {
        auto trace = trace_to(cur);
        trace.push_back(t.label);
        return {false, std::move(trace), ""};
      }
      Key key{t.dst, std::move(*next)};
      if (seen.try_emplace(key, std::uint32_t(nodes.size())).second) {
        nodes.push_back(std::move(key));
        parent.push_back(cur);
        via.push_back(t.label);
      }
    }
  }
  return {};
}

struct NoBadStates {
  template <class M>
  std::optional<std::string> operator()(StateIndex, const M&) const {
    return std::nullopt;
  }
};

}  // namespace detail

/// Runs a deterministic safety observer over every path of `lts`.
/// `step(m, label)` yields the next observer state or nullopt when the step
/// violates the property.
template <class MState, class Step>
CheckResult check_safety_monitor(const Lts& lts, MState init, Step&& step) {
  return detail::product_search<MState>(lts, std::move(init),
                                        std::forward<Step>(step),
                                        detail::NoBadStates{});
}

template <class Monitor>
CheckResult check_safety_monitor(const Lts& lts, const Monitor& monitor) {
  return check_safety_monitor(
      lts, monitor.initial(),
      [&monitor](const typename Monitor::State& m, const ActionLabel& a) {
        return monitor.step(m, a);
      });
}

/// Requirement I: an agreed level was proposed by the same party in the
/// same round.
struct MonitorR1 {
  using State = LevelSet;  // proposed
  PartyId party;

  State initial() const { return {}; }
  std::optional<State> step(const State& proposed, const ActionLabel& a) const {
    if (a.is(ActionKind::Propose, party)) return proposed.with(a.level);
    if (a.is(ActionKind::Agreed, party)) {
      if (!proposed.contains(a.level)) return std::nullopt;
      return State{};
    }
    return proposed;
  }
};

struct RejectionState {
  LevelSet proposed;
  LevelSet rejected;
  friend bool operator==(const RejectionState&,
                         const RejectionState&) = default;
};

/// Requirement II: a level proposed above the running minimum (and not
/// proposed before) is rejected and must not be agreed in that round.
struct MonitorR2 {
  using State = RejectionState;
  PartyId party;

  State initial() const { return {}; }
  std::optional<State> step(const State& m, const ActionLabel& a) const {
    if (a.is(ActionKind::Propose, party)) {
      const Level l = a.level;
      // Any value above every level plays the role of min(empty) = None.
      const Level current_min = m.proposed.min_or(Level(kMaxLevels + 1));
      State next = m;
      if (m.proposed.contains(l)) return next;
      if (l > current_min) {
        next.rejected = m.rejected.with(l);
      } else {
        next.proposed = m.proposed.with(l);
      }
      return next;
    }
    if (a.is(ActionKind::Agreed, party)) {
      if (m.rejected.contains(a.level)) return std::nullopt;
      return State{};
    }
    return m;
  }
};

struct RoundAgreement {
  std::optional<Level> a1;
  std::optional<Level> a2;
  friend bool operator==(const RoundAgreement&,
                         const RoundAgreement&) = default;
};

/// Requirement III: within a round both parties agree on the same level.
struct MonitorR3 {
  using State = RoundAgreement;

  State initial() const { return {}; }
  std::optional<State> step(const State& m, const ActionLabel& a) const {
    if (!a.is(ActionKind::Agreed)) return m;
    const bool first = a.party == PartyId::Id1;
    const std::optional<Level>& other = first ? m.a2 : m.a1;
    if (other) {
      if (*other != a.level) return std::nullopt;
      return State{};
    }
    if (m.a1 || m.a2) return std::nullopt;
    State next;
    (first ? next.a1 : next.a2) = a.level;
    return next;
  }
};

inline MonitorR1 monitor_req1(PartyId id) { return {id}; }
inline MonitorR2 monitor_req2(PartyId id) { return {id}; }
inline MonitorR3 monitor_req3() { return {}; }

/// Every reachable state has an outgoing transition.
inline CheckResult check_deadlock_free(const Lts& lts) {
  return detail::product_search<char>(
      lts, char(0),
      [](char m, const ActionLabel&) { return std::optional<char>(m); },
      [&lts](StateIndex s, char) -> std::optional<std::string> {
        if (lts.outgoing(s).empty())
          return "state " + std::to_string(s) + " has no outgoing transition";
        return std::nullopt;
      });
}

/// Every proposal in the LTS uses a valid level (< max).
inline CheckResult check_valid_levels(const Lts& lts, const Config& cfg) {
  return check_safety_monitor(
      lts, char(0), [&cfg](char m, const ActionLabel& a) -> std::optional<char> {
        if (a.is(ActionKind::Propose) && a.level >= cfg.max)
          return std::nullopt;
        return m;
      });
}

/// Truth table of the inner requirement-IV fixpoint over
/// (state, m1, m2) with m1, m2 in [0, max].
class InnerTable {
 public:
  InnerTable() = default;
  InnerTable(std::size_t num_states, std::size_t levels)
      : levels_(levels), value_(num_states * levels * levels, 0) {}

  std::size_t levels() const noexcept { return levels_; }
  std::size_t size() const noexcept { return value_.size(); }
  std::size_t index(StateIndex s, Level m1, Level m2) const noexcept {
    return (std::size_t(s) * levels_ + m1) * levels_ + m2;
  }
  bool at(StateIndex s, Level m1, Level m2) const {
    return value_[index(s, m1, m2)] != 0;
  }
  void set(std::size_t i, bool v) { value_[i] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return value_[i] != 0; }

  friend bool operator==(const InnerTable&, const InnerTable&) = default;

 private:
  std::size_t levels_ = 0;
  std::vector<char> value_;
};

namespace detail {

/// Edge classes of the inner requirement-IV formula for party `id`.
enum class InnerEdge : std::uint8_t { Free, Progress, Proposal };

inline InnerEdge classify_inner(const ActionLabel& a, PartyId id) {
  if (a.is(ActionKind::Agreed, id)) return InnerEdge::Free;
  if (a.is(ActionKind::Propose)) return InnerEdge::Proposal;
  return InnerEdge::Progress;
}

/// Successor parameters after a proposal.
inline std::pair<Level, Level> after_proposal(const ActionLabel& a, Level m1,
                                              Level m2) {
  if (a.party == PartyId::Id1) return {std::min(m1, a.level), m2};
  return {m1, std::min(m2, a.level)};
}

/// A proposal that cannot advance agreement: a wrong level, or the
/// proposer's minimum is already at or below the peer's.
inline bool redundant_proposal(const ActionLabel& a, Level m1, Level m2) {
  if (!a.is(ActionKind::Propose)) return false;
  if (a.party == PartyId::Id1) return a.level != m2 || m1 <= m2;
  return a.level != m1 || m2 <= m1;
}

inline bool has_useful_step(const Lts& lts, StateIndex s, Level m1, Level m2) {
  for (const auto& t : lts.outgoing(s))
    if (!redundant_proposal(t.label, m1, m2)) return true;
  return false;
}

}  // namespace detail

/// Inner fixpoint of requirement IV for party `id`:
///   muZ(m1,m2). nuY(m1,m2). [progress]Z(m1,m2) && [propose]Y(updated)
///                           && <non-redundant>true
/// where progress labels are everything except agreed(id,.) and proposals.
///
/// All modalities but the last are boxes, so a node (s,m1,m2) is in the
/// fixpoint iff no node reachable over progress/proposal edges lacks a
/// non-redundant step, and no reachable cycle contains a progress edge
/// (Z is a least fixpoint, Y a greatest). Decided per SCC in one pass.
inline InnerTable eval_inner_iv(const Lts& lts, PartyId id,
                                const Config& cfg) {
  const std::size_t k = std::size_t(cfg.max) + 1;
  const std::size_t n = lts.num_states();
  InnerTable table(n, k);
  const std::size_t total = table.size();

  auto decode = [k](std::size_t node) {
    Level m2 = Level(node % k);
    Level m1 = Level((node / k) % k);
    return std::tuple<StateIndex, Level, Level>(StateIndex(node / (k * k)),
                                                m1, m2);
  };
  auto for_each_edge = [&](std::size_t node, auto&& visit) {
    auto [s, m1, m2] = decode(node);
    for (const auto& t : lts.outgoing(s)) {
      switch (detail::classify_inner(t.label, id)) {
        case detail::InnerEdge::Free:
          break;
        case detail::InnerEdge::Progress:
          visit(table.index(t.dst, m1, m2), true);
          break;
        case detail::InnerEdge::Proposal: {
          auto [n1, n2] = detail::after_proposal(t.label, m1, m2);
          visit(table.index(t.dst, n1, n2), false);
          break;
        }
      }
    }
  };

  auto scc = graph::strongly_connected_components(
      total, [&](std::uint32_t u, auto&& visit) {
        for_each_edge(u, [&](std::size_t v, bool) { visit(std::uint32_t(v)); });
      });

  // Components complete successors-first, so increasing id order sees
  // every successor component before its predecessors.
  std::vector<std::uint32_t> start(scc.count + 1, 0);
  for (auto c : scc.component) ++start[c + 1];
  for (std::size_t c = 1; c <= scc.count; ++c) start[c] += start[c - 1];
  std::vector<std::uint32_t> members(total);
  {
    std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
    for (std::uint32_t u = 0; u < total; ++u)
      members[fill[scc.component[u]]++] = u;
  }
  std::vector<char> bad(scc.count, 0);
  for (std::uint32_t c = 0; c < scc.count; ++c) {
    bool is_bad = false;
    for (std::uint32_t i = start[c]; i < start[c + 1] && !is_bad; ++i) {
      const std::uint32_t u = members[i];
      auto [s, m1, m2] = decode(u);
      if (!detail::has_useful_step(lts, s, m1, m2)) {
        is_bad = true;
        break;
      }
      for_each_edge(u, [&](std::size_t v, bool progress) {
        const auto cv = scc.component[v];
        if (cv == c ? progress : bad[cv] != 0) is_bad = true;
      });
    }
    bad[c] = is_bad;
  }
  for (std::size_t u = 0; u < total; ++u)
    table.set(u, !bad[scc.component[u]]);
  return table;
}

/// Round-minimum lists of requirement IV; index 0 is the oldest open round.
struct AnnotationIV {
  std::array<Level, 2> q1{};
  std::array<Level, 2> q2{};
  std::uint8_t len1 = 1;
  std::uint8_t len2 = 1;

  friend bool operator==(const AnnotationIV&, const AnnotationIV&) = default;
};

}  // namespace slan

template <>
struct std::hash<slan::AnnotationIV> {
  std::size_t operator()(const slan::AnnotationIV& a) const noexcept {
    return std::size_t(a.q1[0]) | std::size_t(a.q1[1]) << 8 |
           std::size_t(a.q2[0]) << 16 | std::size_t(a.q2[1]) << 24 |
           std::size_t(a.len1) << 32 | std::size_t(a.len2) << 40;
  }
};

template <>
struct std::hash<slan::RejectionState> {
  std::size_t operator()(const slan::RejectionState& s) const noexcept {
    return std::size_t(s.proposed.bits()) << 32 | s.rejected.bits();
  }
};

template <>
struct std::hash<slan::RoundAgreement> {
  std::size_t operator()(const slan::RoundAgreement& s) const noexcept {
    return std::size_t(s.a1 ? *s.a1 + 1 : 0) << 16 | (s.a2 ? *s.a2 + 1 : 0);
  }
};

template <>
struct std::hash<slan::LevelSet> {
  std::size_t operator()(const slan::LevelSet& s) const noexcept {
    return s.bits();
  }
};

namespace slan {

/// Deterministic annotation update of requirement IV.
inline AnnotationIV update_annotation(const AnnotationIV& in,
                                      const ActionLabel& a, Level none) {
  AnnotationIV out = in;
  auto pop_front = [](std::array<Level, 2>& q, std::uint8_t& len) {
    if (len == 0) throw AnnotationOverflow("tail of an empty list");
    q[0] = q[1];
    --len;
  };
  auto push_back = [none](std::array<Level, 2>& q, std::uint8_t& len) {
    if (len >= 2) throw AnnotationOverflow("annotation list exceeds length 2");
    q[len++] = none;
  };
  if (a.is(ActionKind::Propose)) {
    auto& q = a.party == PartyId::Id1 ? out.q1 : out.q2;
    auto len = a.party == PartyId::Id1 ? out.len1 : out.len2;
    if (len == 0) throw AnnotationOverflow("empty annotation list");
    q[len - 1] = std::min(q[len - 1], a.level);
  } else if (a.is(ActionKind::Agreed, PartyId::Id1)) {
    if (in.len2 != 1) {
      pop_front(out.q1, out.len1);
      push_back(out.q1, out.len1);
      pop_front(out.q2, out.len2);
    } else {
      push_back(out.q1, out.len1);
    }
  } else if (a.is(ActionKind::Agreed, PartyId::Id2)) {
    if (in.len1 != 1) {
      pop_front(out.q1, out.len1);
      pop_front(out.q2, out.len2);
      push_back(out.q2, out.len2);
    } else {
      push_back(out.q2, out.len2);
    }
  }
  if (out.len1 + out.len2 < 2 || out.len1 + out.len2 > 3)
    throw AnnotationOverflow("annotation lengths sum outside {2, 3}");
  // Unused slots are normalised so equal lists compare equal.
  if (out.len1 < 2) out.q1[1] = 0;
  if (out.len2 < 2) out.q2[1] = 0;
  return out;
}

inline std::string describe(const AnnotationIV& a, Level none) {
  auto list = [none](const std::array<Level, 2>& q, std::uint8_t len) {
    std::string s = "[";
    for (std::uint8_t i = 0; i < len; ++i) {
      if (i) s += ",";
      s += q[i] == none ? "None" : std::to_string(q[i]);
    }
    return s + "]";
  };
  return "q1=" + list(a.q1, a.len1) + " q2=" + list(a.q2, a.len2);
}

/// Requirement IV: once both parties' current-round minima are set, the
/// party with a single open round inevitably agrees unless postponed by
/// redundant proposals. The outer greatest fixpoint only has box
/// modalities, so it holds iff no reachable annotated state fails the
/// inner condition.
inline CheckResult check_req4(const Lts& lts, const Config& cfg) {
  const Level none = cfg.none();
  const std::array<InnerTable, 2> tables{
      eval_inner_iv(lts, PartyId::Id1, cfg),
      eval_inner_iv(lts, PartyId::Id2, cfg)};
  AnnotationIV init;
  init.q1 = {none, 0};
  init.q2 = {none, 0};
  return detail::product_search<AnnotationIV>(
      lts, init,
      [none](const AnnotationIV& m, const ActionLabel& a) {
        return std::optional<AnnotationIV>(update_annotation(m, a, none));
      },
      [&](StateIndex s, const AnnotationIV& m) -> std::optional<std::string> {
        const Level h1 = m.q1[0], h2 = m.q2[0];
        if (h1 == none || h2 == none) return std::nullopt;
        for (PartyId p : kParties) {
          const auto len = p == PartyId::Id1 ? m.len1 : m.len2;
          if (len == 1 && !tables[index_of(p)].at(s, h1, h2))
            return "agreement of " + to_string(p) +
                   " is not inevitable at state " + std::to_string(s) +
                   " with " + describe(m, none);
        }
        return std::nullopt;
      });
}

enum class Property { I, II, III, IV, Deadlock, ValidLevels };

inline std::string to_string(Property p) {
  switch (p) {
    case Property::I:
      return "I";
    case Property::II:
      return "II";
    case Property::III:
      return "III";
    case Property::IV:
      return "IV";
    case Property::Deadlock:
      return "deadlock";
    case Property::ValidLevels:
      return "valid-levels";
  }
  return "?";
}

inline std::optional<Property> parse_property(std::string_view s) {
  for (Property p : {Property::I, Property::II, Property::III, Property::IV,
                     Property::Deadlock, Property::ValidLevels})
    if (s == to_string(p)) return p;
  return std::nullopt;
}

struct PropertyReport {
  Property property;
  /// Set when the check was restricted to one party (I and II only).
  std::optional<PartyId> party;
  CheckResult result;
};

/// Runs one property. I and II check both parties unless `party` is set;
/// the first failing party's counterexample is reported.
inline PropertyReport check_property(const Lts& lts, const Config& cfg,
                                     Property property,
                                     std::optional<PartyId> party = {}) {
  PropertyReport report{property, party, {}};
  auto per_party = [&](auto make_monitor) {
    for (PartyId p : kParties) {
      if (party && *party != p) continue;
      CheckResult r = check_safety_monitor(lts, make_monitor(p));
      if (!r.holds) {
        r.detail = "violated for " + to_string(p) +
                   (r.detail.empty() ? "" : ": " + r.detail);
        return r;
      }
    }
    return CheckResult{};
  };
  switch (property) {
    case Property::I:
      report.result = per_party(monitor_req1);
      break;
    case Property::II:
      report.result = per_party(monitor_req2);
      break;
    case Property::III:
      report.result = check_safety_monitor(lts, monitor_req3());
      break;
    case Property::IV:
      report.result = check_req4(lts, cfg);
      break;
    case Property::Deadlock:
      report.result = check_deadlock_free(lts);
      break;
    case Property::ValidLevels:
      report.result = check_valid_levels(lts, cfg);
      break;
  }
  return report;
}

inline std::vector<PropertyReport> check_all(const Lts& lts,
                                             const Config& cfg) {
  std::vector<PropertyReport> out;
  for (Property p : {Property::I, Property::II, Property::III, Property::IV,
                     Property::Deadlock, Property::ValidLevels})
    out.push_back(check_property(lts, cfg, p));
  return out;
}

/// {property, max, holds, counterexample: [labels]} (+ party, detail when
/// present).
inline nlohmann::json to_json(const PropertyReport& r, const Config& cfg) {
  nlohmann::json j;
  j["property"] = to_string(r.property);
  if (r.party) j["party"] = to_string(*r.party);
  j["max"] = int(cfg.max);
  j["holds"] = r.result.holds;
  if (r.result.counterexample) {
    auto& trace = j["counterexample"] = nlohmann::json::array();
    for (const auto& a : *r.result.counterexample) trace.push_back(to_string(a));
  } else {
    j["counterexample"] = nullptr;
  }
  if (!r.result.detail.empty()) j["detail"] = r.result.detail;
  return j;
}

}  // namespace slan
