#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <deque>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "slan/protocol.hpp"
#include "slan/types.hpp"

namespace slan {

using StateIndex = std::uint32_t;

struct Transition {
  StateIndex src = 0;
  ActionLabel label;
  StateIndex dst = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
  friend auto operator<=>(const Transition&, const Transition&) = default;
};

/// Immutable labeled transition system. The initial state is always 0.
/// Transitions are kept sorted by (src, label, dst) without duplicates.
class Lts {
 public:
  Lts() : Lts(1, {}) {}

  Lts(std::size_t num_states, std::vector<Transition> transitions)
      : num_states_(num_states), transitions_(std::move(transitions)) {
    if (num_states_ == 0) throw Error("an LTS needs at least one state");
    for (const auto& t : transitions_) {
      if (t.src >= num_states_ || t.dst >= num_states_)
        throw Error("transition index out of range");
    }
    if (!std::is_sorted(transitions_.begin(), transitions_.end()))
      std::sort(transitions_.begin(), transitions_.end());
    transitions_.erase(std::unique(transitions_.begin(), transitions_.end()),
                       transitions_.end());
    offsets_.assign(num_states_ + 1, 0);
    for (const auto& t : transitions_) ++offsets_[t.src + 1];
    for (std::size_t i = 1; i < offsets_.size(); ++i)
      offsets_[i] += offsets_[i - 1];
  }

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_transitions() const noexcept { return transitions_.size(); }
  StateIndex initial() const noexcept { return 0; }
  const std::vector<Transition>& transitions() const noexcept {
    return transitions_;
  }
  std::span<const Transition> outgoing(StateIndex s) const {
    return {transitions_.data() + offsets_[s],
            transitions_.data() + offsets_[s + 1]};
  }

  /// Distinct labels in canonical order.
  std::vector<ActionLabel> label_alphabet() const {
    std::vector<ActionLabel> labels;
    labels.reserve(transitions_.size());
    for (const auto& t : transitions_) labels.push_back(t.label);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
  }

  std::size_t count(ActionKind kind) const {
    return std::size_t(std::count_if(
        transitions_.begin(), transitions_.end(),
        [kind](const Transition& t) { return t.label.kind == kind; }));
  }

  bool all_reachable() const {
    std::vector<char> seen(num_states_, 0);
    std::vector<StateIndex> todo{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!todo.empty()) {
      StateIndex s = todo.back();
      todo.pop_back();
      for (const auto& t : outgoing(s)) {
        if (!seen[t.dst]) {
          seen[t.dst] = 1;
          ++reached;
          todo.push_back(t.dst);
        }
      }
    }
    return reached == num_states_;
  }

  friend bool operator==(const Lts& a, const Lts& b) {
    return a.num_states_ == b.num_states_ && a.transitions_ == b.transitions_;
  }

 private:
  std::size_t num_states_;
  std::vector<Transition> transitions_;
  std::vector<std::size_t> offsets_;
};

struct ExplorationStats {
  std::size_t states = 0;
  std::size_t transitions = 0;
  /// Maximum occupancy per channel, indexed by owner.
  std::array<std::size_t, 2> max_queue_len{0, 0};
  double wall_time_s = 0;

  std::size_t max_queue() const {
    return std::max(max_queue_len[0], max_queue_len[1]);
  }
};

/// Memory ran out during exploration; carries what was reached so far.
class ResourceExhausted : public Error {
 public:
  ResourceExhausted(const std::string& what, ExplorationStats partial)
      : Error(what), partial_(partial) {}
  const ExplorationStats& partial() const noexcept { return partial_; }

 private:
  ExplorationStats partial_;
};

struct Exploration {
  Lts lts;
  ExplorationStats stats;
  /// Reachable states, indexed like the LTS (filled on request).
  std::vector<SystemState> states;
};

/// Internal invariant of the protocol model was broken during exploration.
class ModelInvariantViolated : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

namespace detail {

inline void check_state_invariants(const SystemState& s, const Config& cfg) {
  for (PartyId p : kParties) {
    const auto& core = s.entity(p).core;
    if (core.decision != cfg.none() && !core.mine.empty())
      throw ModelInvariantViolated("decision set while mine is nonempty");
  }
}

inline void check_label_determinism(const std::vector<Successor>& succ) {
  for (std::size_t i = 0; i < succ.size(); ++i)
    for (std::size_t j = i + 1; j < succ.size(); ++j)
      if (succ[i].label == succ[j].label)
        throw ModelInvariantViolated("two transitions labeled " +
                                     to_string(succ[i].label));
}

}  // namespace detail

struct ExploreOptions {
  bool keep_states = false;
  /// Check per-state model invariants (label determinism, mine = {} when a
  /// decision is set) while exploring.
  bool check_invariants = true;
};

/// Breadth-first construction of the reachable state space. States are
/// numbered in discovery order.
inline Exploration explore(const Config& cfg, ExploreOptions options = {}) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  std::unordered_map<SystemState, StateIndex> index;
  std::vector<const SystemState*> by_index;
  std::vector<Transition> transitions;
  ExplorationStats stats;

  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  };

  try {
    auto intern = [&](SystemState&& s) -> StateIndex {
      auto [it, inserted] =
          index.try_emplace(std::move(s), StateIndex(by_index.size()));
      if (inserted) {
        by_index.push_back(&it->first);
        for (PartyId p : kParties) {
          auto& m = stats.max_queue_len[index_of(p)];
          m = std::max(m, it->first.channel(p).queue.size());
        }
      }
      return it->second;
    };

    intern(initial_state(cfg));
    for (StateIndex cur = 0; cur < by_index.size(); ++cur) {
      const SystemState& s = *by_index[cur];
      auto succ = enabled_transitions(s, cfg);
      if (options.check_invariants) {
        detail::check_state_invariants(s, cfg);
        detail::check_label_determinism(succ);
      }
      for (auto& [label, target] : succ) {
        StateIndex dst = intern(std::move(target));
        transitions.push_back({cur, label, dst});
      }
    }
  } catch (const std::bad_alloc&) {
    stats.states = by_index.size();
    stats.transitions = transitions.size();
    stats.wall_time_s = elapsed();
    throw ResourceExhausted("out of memory after " +
                                std::to_string(stats.states) + " states",
                            stats);
  }

  Exploration result{Lts(by_index.size(), std::move(transitions)), {}, {}};
  stats.states = result.lts.num_states();
  stats.transitions = result.lts.num_transitions();
  stats.wall_time_s = elapsed();
  result.stats = stats;
  if (options.keep_states) {
    result.states.reserve(by_index.size());
    for (const auto* s : by_index) result.states.push_back(*s);
  }
  return result;
}

/// Relabels every transition whose label satisfies `hidden` to tau.
template <class Predicate>
Lts hide(const Lts& lts, Predicate&& hidden) {
  std::vector<Transition> out = lts.transitions();
  for (auto& t : out)
    if (hidden(t.label)) t.label = ActionLabel::tau();
  return Lts(lts.num_states(), std::move(out));
}

/// Label classes that can be hidden, as accepted by the command line:
/// `in_q`, `out_q`, `propose:id1`, `propose:id2`, `agreed:id1`,
/// `agreed:id2`.
struct HideSet {
  bool in_q = false;
  bool out_q = false;
  std::array<bool, 2> propose{false, false};
  std::array<bool, 2> agreed{false, false};

  bool operator()(const ActionLabel& a) const {
    switch (a.kind) {
      case ActionKind::InQ:
        return in_q;
      case ActionKind::OutQ:
        return out_q;
      case ActionKind::Propose:
        return propose[index_of(a.party)];
      case ActionKind::Agreed:
        return agreed[index_of(a.party)];
      default:
        return false;
    }
  }

  static HideSet channels() {
    HideSet h;
    h.in_q = h.out_q = true;
    return h;
  }
  /// Everything except the propose/agreed actions of `p`.
  static HideSet single_party(PartyId p) {
    HideSet h = channels();
    h.propose[index_of(peer(p))] = true;
    h.agreed[index_of(peer(p))] = true;
    return h;
  }
  /// Everything except agreed actions.
  static HideSet agreed_only() {
    HideSet h = channels();
    h.propose = {true, true};
    return h;
  }

  /// Parses a comma-separated list; an empty string hides nothing.
  static HideSet parse(std::string_view spec) {
    HideSet h;
    std::size_t pos = 0;
    while (pos <= spec.size() && !spec.empty()) {
      std::size_t comma = spec.find(',', pos);
      std::string_view item = spec.substr(
          pos, comma == std::string_view::npos ? std::string_view::npos
                                               : comma - pos);
      if (item == "in_q") {
        h.in_q = true;
      } else if (item == "out_q") {
        h.out_q = true;
      } else if (item == "propose:id1") {
        h.propose[0] = true;
      } else if (item == "propose:id2") {
        h.propose[1] = true;
      } else if (item == "agreed:id1") {
        h.agreed[0] = true;
      } else if (item == "agreed:id2") {
        h.agreed[1] = true;
      } else {
        throw Error("unknown hide entry '" + std::string(item) + "'");
      }
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return h;
  }
};

}  // namespace slan
