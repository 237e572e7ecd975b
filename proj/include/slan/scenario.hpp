#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "slan/protocol.hpp"
#include "slan/types.hpp"

namespace slan {

struct Act {
  ActionLabel label;
};

struct ExpectQueue {
  PartyId owner = PartyId::Id1;
  std::vector<Message> newest_first;
};

struct ExpectEnabled {
  ActionLabel label;
  bool enabled = true;
};

using ScenarioStep = std::variant<Act, ExpectQueue, ExpectEnabled>;

struct Scenario {
  Level max = 1;
  std::vector<ScenarioStep> steps;
};

/// Malformed scenario document.
class ScenarioFormatError : public Error {
 public:
  using Error::Error;
};

struct ActNotEnabled {
  std::size_t step = 0;
  ActionLabel label;
  std::vector<ActionLabel> enabled;
};

struct ExpectationFailed {
  std::size_t step = 0;
  std::string actual;
};

using ReplayFailure = std::variant<ActNotEnabled, ExpectationFailed>;

struct ReplayLogEntry {
  std::size_t step = 0;
  std::string outcome;
};

struct ReplayResult {
  SystemState final_state;
  std::vector<ReplayLogEntry> log;
  std::optional<std::size_t> failed_at;
  std::optional<ReplayFailure> failure;
  /// Largest channel occupancy over all visited states.
  std::size_t max_queue_seen = 0;

  bool ok() const noexcept { return !failed_at; }
};

inline std::string to_string(const ScenarioStep& step) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Act>) {
          return "act " + to_string(s.label);
        } else if constexpr (std::is_same_v<T, ExpectQueue>) {
          std::string out = "expect_queue " + to_string(s.owner) + " [";
          for (std::size_t i = 0; i < s.newest_first.size(); ++i)
            out += (i ? ", " : "") + to_string(s.newest_first[i]);
          return out + "]";
        } else {
          return "expect_enabled " + to_string(s.label) + " " +
                 (s.enabled ? "true" : "false");
        }
      },
      step);
}

inline std::string to_string(const ReplayFailure& failure) {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, ActNotEnabled>) {
          std::string out = "step " + std::to_string(f.step) + ": " +
                            to_string(f.label) + " is not enabled; enabled: [";
          for (std::size_t i = 0; i < f.enabled.size(); ++i)
            out += (i ? ", " : "") + to_string(f.enabled[i]);
          return out + "]";
        } else {
          return "step " + std::to_string(f.step) +
                 ": expectation failed; actual " + f.actual;
        }
      },
      failure);
}

/// Labels of the enabled transitions, sorted canonically, no duplicates.
inline std::vector<ActionLabel> enabled_menu(const SystemState& s,
                                             const Config& cfg) {
  std::vector<ActionLabel> labels;
  for (const auto& succ : enabled_transitions(s, cfg))
    labels.push_back(succ.label);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

/// Successor of `s` under `label`, or nullopt when not enabled.
inline std::optional<SystemState> fire(const SystemState& s,
                                       const ActionLabel& label,
                                       const Config& cfg) {
  std::optional<SystemState> result;
  for (auto& succ : enabled_transitions(s, cfg)) {
    if (succ.label != label) continue;
    if (result && *result != succ.target)
      throw Error("label " + to_string(label) +
                  " leads to two different states");
    result = std::move(succ.target);
  }
  return result;
}

inline std::vector<Message> newest_first(const ChannelState& ch) {
  return {ch.queue.rbegin(), ch.queue.rend()};
}

namespace detail {

inline std::string render_queue(const std::vector<Message>& q) {
  std::string out = "[";
  for (std::size_t i = 0; i < q.size(); ++i)
    out += (i ? ", " : "") + to_string(q[i]);
  return out + "]";
}

inline std::size_t occupancy(const SystemState& s) {
  return std::max(s.ch1.queue.size(), s.ch2.queue.size());
}

}  // namespace detail

/// Runs `steps` from the initial state, stopping at the first failure.
inline ReplayResult replay(const std::vector<ScenarioStep>& steps,
                           const Config& cfg) {
  cfg.validate();
  ReplayResult result;
  result.final_state = initial_state(cfg);
  SystemState& cur = result.final_state;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const ScenarioStep& step = steps[i];
    std::optional<ReplayFailure> failure;
    if (const auto* act = std::get_if<Act>(&step)) {
      if (auto next = fire(cur, act->label, cfg)) {
        cur = std::move(*next);
        result.max_queue_seen =
            std::max(result.max_queue_seen, detail::occupancy(cur));
      } else {
        failure = ActNotEnabled{i, act->label, enabled_menu(cur, cfg)};
      }
    } else if (const auto* eq = std::get_if<ExpectQueue>(&step)) {
      auto actual = newest_first(cur.channel(eq->owner));
      if (actual != eq->newest_first)
        failure = ExpectationFailed{i, detail::render_queue(actual)};
    } else if (const auto* ee = std::get_if<ExpectEnabled>(&step)) {
      auto menu = enabled_menu(cur, cfg);
      bool enabled =
          std::find(menu.begin(), menu.end(), ee->label) != menu.end();
      if (enabled != ee->enabled)
        failure = ExpectationFailed{i, enabled ? "enabled" : "not enabled"};
    }
    if (failure) {
      result.log.push_back({i, "FAIL " + to_string(*failure)});
      result.failed_at = i;
      result.failure = std::move(failure);
      return result;
    }
    result.log.push_back({i, "ok " + to_string(step)});
  }
  return result;
}

namespace detail {

inline ActionLabel json_label(const nlohmann::json& j, const char* what) {
  if (!j.is_string())
    throw ScenarioFormatError(std::string(what) + " must be a label string");
  auto label = parse_label(j.get<std::string>());
  if (!label || label->is(ActionKind::Tau) || label->is(ActionKind::Delta))
    throw ScenarioFormatError("bad label '" + j.get<std::string>() + "'");
  return *label;
}

}  // namespace detail

/// Reads the JSON scenario format:
/// {"max": K, "steps": [{"act": "propose(id1,0)"},
///   {"expect_queue": {"owner": "id1", "newest_first": ["inform(0)"]}},
///   {"expect_enabled": {"label": "agreed(id2,1)", "value": true}}]}
inline Scenario parse_scenario(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioFormatError(e.what());
  }
  if (!doc.is_object() || !doc.contains("max") ||
      !doc["max"].is_number_unsigned() || !doc.contains("steps") ||
      !doc["steps"].is_array())
    throw ScenarioFormatError(
        "scenario needs an unsigned \"max\" and a \"steps\" array");
  Scenario sc;
  const auto max = doc["max"].get<unsigned>();
  if (max < 1 || max > kMaxLevels)
    throw ScenarioFormatError("max out of range");
  sc.max = Level(max);
  for (const auto& item : doc["steps"]) {
    if (!item.is_object() || item.size() != 1)
      throw ScenarioFormatError("each step must be an object with one key");
    if (item.contains("act")) {
      sc.steps.push_back(Act{detail::json_label(item["act"], "act")});
    } else if (item.contains("expect_queue")) {
      const auto& q = item["expect_queue"];
      if (!q.is_object() || !q.contains("owner") || !q["owner"].is_string() ||
          !q.contains("newest_first") || !q["newest_first"].is_array())
        throw ScenarioFormatError(
            "expect_queue needs \"owner\" and \"newest_first\"");
      auto owner = parse_party(q["owner"].get<std::string>());
      if (!owner) throw ScenarioFormatError("bad owner");
      ExpectQueue eq{*owner, {}};
      for (const auto& m : q["newest_first"]) {
        auto msg = m.is_string() ? parse_message(m.get<std::string>())
                                 : std::nullopt;
        if (!msg) throw ScenarioFormatError("bad message " + m.dump());
        eq.newest_first.push_back(*msg);
      }
      sc.steps.push_back(std::move(eq));
    } else if (item.contains("expect_enabled")) {
      const auto& e = item["expect_enabled"];
      if (!e.is_object() || !e.contains("label") || !e.contains("value") ||
          !e["value"].is_boolean())
        throw ScenarioFormatError("expect_enabled needs \"label\" and \"value\"");
      sc.steps.push_back(ExpectEnabled{
          detail::json_label(e["label"], "expect_enabled label"),
          e["value"].get<bool>()});
    } else {
      throw ScenarioFormatError("unknown step " + item.dump());
    }
  }
  return sc;
}

inline nlohmann::json to_json(const ReplayResult& r) {
  nlohmann::json j;
  j["ok"] = r.ok();
  j["failed_at"] = r.failed_at ? nlohmann::json(*r.failed_at) : nullptr;
  j["max_queue_seen"] = r.max_queue_seen;
  auto& log = j["log"] = nlohmann::json::array();
  for (const auto& e : r.log)
    log.push_back({{"step", e.step}, {"outcome", e.outcome}});
  return j;
}

/// Interactive stepping with undo.
class Stepper {
 public:
  explicit Stepper(Config cfg) : cfg_(cfg), history_{initial_state(cfg)} {}

  const Config& config() const noexcept { return cfg_; }
  const SystemState& current() const noexcept { return history_.back(); }
  std::size_t depth() const noexcept { return history_.size() - 1; }
  std::vector<ActionLabel> menu() const { return enabled_menu(current(), cfg_); }

  /// Fires the `index`-th menu entry; false if out of range.
  bool choose(std::size_t index) {
    auto labels = menu();
    if (index >= labels.size()) return false;
    history_.push_back(*fire(current(), labels[index], cfg_));
    return true;
  }
  /// Returns to the previous state; false at the initial state.
  bool undo() {
    if (history_.size() == 1) return false;
    history_.pop_back();
    return true;
  }

 private:
  Config cfg_;
  std::vector<SystemState> history_;
};

}  // namespace slan
