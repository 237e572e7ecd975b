#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slan/types.hpp"

namespace slan {

/// Channel a confirmation (the echo of a received decide) is written to.
enum class ConfirmChannel : std::uint8_t {
  /// The confirmer's own outgoing channel, matching the channel topology.
  OwnOutgoing,
  /// `s(from, decide(l))` read literally: the channel the confirmer reads.
  LiteralFrom,
};

struct Config {
  /// Number of service levels; also the None sentinel.
  Level max = 1;
  ConfirmChannel confirm_channel = ConfirmChannel::OwnOutgoing;
  std::size_t queue_cap = 5;
  /// When false, a received decide is adopted without echoing it back.
  /// Only used to build the mutant protocol in tests.
  bool reply_to_decide = true;

  static Config with_max(unsigned max) {
    Config cfg;
    cfg.max = Level(max);
    cfg.queue_cap = 3 * std::size_t(max) + 2;
    cfg.validate();
    return cfg;
  }

  Level none() const noexcept { return max; }

  void validate() const {
    if (max < 1 || max > kMaxLevels)
      throw Error("max must lie in [1, " + std::to_string(kMaxLevels) + "]");
    if (queue_cap < 1) throw Error("queue cap must be positive");
  }
};

/// Negotiation variables of one party.
struct CoreFields {
  LevelSet mine;
  Level theirs = 0;
  Level decision = 0;
  bool hold = false;

  static CoreFields initial(const Config& cfg) {
    return {LevelSet{}, cfg.none(), cfg.none(), false};
  }

  friend bool operator==(const CoreFields&, const CoreFields&) = default;
};

/// A message the entity must write before doing anything else, and the
/// core it continues with afterwards.
struct Pending {
  Message message;
  CoreFields next;
  /// Set for the echo of a received decide (routing differs under
  /// ConfirmChannel::LiteralFrom).
  bool confirm = false;

  friend bool operator==(const Pending&, const Pending&) = default;
};

/// One protocol entity. Three control locations:
///  - idle: `evaluating` and `pending` both empty;
///  - evaluating: a proposal `l` was just accepted from the environment and
///    the negotiation guard is about to be applied to `core`;
///  - pending: a send is due; `core` equals `pending->next`.
struct EntityState {
  PartyId id = PartyId::Id1;
  CoreFields core;
  std::optional<Level> evaluating;
  std::optional<Pending> pending;

  PartyId peer_id() const noexcept { return peer(id); }
  bool idle() const noexcept { return !evaluating && !pending; }

  friend bool operator==(const EntityState&, const EntityState&) = default;
};

/// FIFO channel written by `owner`, read by its peer. Oldest message first.
struct ChannelState {
  PartyId owner = PartyId::Id1;
  std::vector<Message> queue;

  friend bool operator==(const ChannelState&, const ChannelState&) = default;
};

struct SystemState {
  EntityState e1;
  EntityState e2;
  ChannelState ch1;
  ChannelState ch2;

  const EntityState& entity(PartyId p) const {
    return p == PartyId::Id1 ? e1 : e2;
  }
  EntityState& entity(PartyId p) { return p == PartyId::Id1 ? e1 : e2; }
  const ChannelState& channel(PartyId owner) const {
    return owner == PartyId::Id1 ? ch1 : ch2;
  }
  ChannelState& channel(PartyId owner) {
    return owner == PartyId::Id1 ? ch1 : ch2;
  }

  friend bool operator==(const SystemState&, const SystemState&) = default;
};

/// Result of the negotiation guard for a proposal; nullopt means the
/// proposal is ignored.
struct Send {
  Message message;
  CoreFields next;

  friend bool operator==(const Send&, const Send&) = default;
};

/// Applies the negotiation rule to a proposal `l`. Requires
/// core.decision == None and l < max.
inline std::optional<Send> negotiate_on_propose(const CoreFields& core, Level l,
                                                const Config& cfg) {
  const Level none = cfg.none();
  if (l < core.mine.min_or(none) && l <= core.theirs) {
    if (l == core.theirs)
      return Send{Message::decide(l), {LevelSet{}, none, l, true}};
    CoreFields next = core;
    next.mine = core.mine.with(l);
    return Send{Message::inform(l), next};
  }
  return std::nullopt;
}

struct ReceiveOutcome {
  CoreFields next;
  std::optional<Message> reply;
  bool reply_is_confirm = false;

  friend bool operator==(const ReceiveOutcome&,
                         const ReceiveOutcome&) = default;
};

/// Consumes a message read from the peer's channel.
inline ReceiveOutcome on_receive(const CoreFields& core, Message msg,
                                 const Config& cfg) {
  const Level none = cfg.none();
  ReceiveOutcome out{core, std::nullopt, false};
  if (core.hold) {
    if (msg.kind == MessageKind::Decide) out.next.hold = false;
    return out;
  }
  if (msg.kind == MessageKind::Decide) {
    out.next = {LevelSet{}, none, msg.level, core.hold};
    if (cfg.reply_to_decide) {
      out.reply = Message::decide(msg.level);
      out.reply_is_confirm = true;
    }
    return out;
  }
  if (core.mine.contains(msg.level) && core.decision == none) {
    out.next = {LevelSet{}, none, msg.level, true};
    out.reply = Message::decide(msg.level);
    return out;
  }
  out.next.theirs = std::min(core.theirs, msg.level);
  return out;
}

/// The send an entity is committed to, if any: an explicit pending message,
/// or an evaluated proposal whose guard holds.
inline std::optional<Pending> due_send(const EntityState& e,
                                       const Config& cfg) {
  if (e.pending) return e.pending;
  if (e.evaluating) {
    if (auto send = negotiate_on_propose(e.core, *e.evaluating, cfg))
      return Pending{send->message, send->next, false};
  }
  return std::nullopt;
}

/// Channel a pending message is written to.
inline PartyId target_channel(const EntityState& e, const Pending& p,
                              const Config& cfg) {
  if (p.confirm && cfg.confirm_channel == ConfirmChannel::LiteralFrom)
    return e.peer_id();
  return e.id;
}

struct Successor {
  ActionLabel label;
  SystemState target;

  friend bool operator==(const Successor&, const Successor&) = default;
};

namespace detail {

inline void push_message(SystemState& s, PartyId owner, Message m,
                         const Config& cfg) {
  auto& q = s.channel(owner).queue;
  if (q.size() + 1 > cfg.queue_cap)
    throw QueueCapExceeded("channel " + to_string(owner) + " would exceed " +
                           std::to_string(cfg.queue_cap) + " messages");
  q.push_back(m);
}

inline void set_idle(EntityState& e, const CoreFields& core) {
  e.core = core;
  e.evaluating.reset();
  e.pending.reset();
}

inline void entity_transitions(const SystemState& s, PartyId id,
                               const Config& cfg,
                               std::vector<Successor>& out) {
  const EntityState& e = s.entity(id);

  // Committed send: nothing else is enabled for this entity.
  if (auto send = due_send(e, cfg)) {
    SystemState t = s;
    PartyId target = target_channel(e, *send, cfg);
    push_message(t, target, send->message, cfg);
    set_idle(t.entity(id), send->next);
    out.push_back({ActionLabel::in_q(target, send->message), std::move(t)});
    return;
  }

  // Idle, or an evaluated proposal that was ignored (behaves as idle).
  const CoreFields& core = e.core;
  const Level none = cfg.none();
  if (core.decision != none) {
    SystemState t = s;
    CoreFields next = core;
    next.decision = none;
    set_idle(t.entity(id), next);
    out.push_back({ActionLabel::agreed(id, core.decision), std::move(t)});
    for (Level l = 0; l < cfg.max; ++l)
      out.push_back({ActionLabel::propose(id, l), s});
  } else {
    for (Level l = 0; l < cfg.max; ++l) {
      SystemState t = s;
      EntityState& te = t.entity(id);
      te.evaluating = l;
      te.pending.reset();
      out.push_back({ActionLabel::propose(id, l), std::move(t)});
    }
  }

  const ChannelState& incoming = s.channel(e.peer_id());
  if (!incoming.queue.empty()) {
    const Message m = incoming.queue.front();
    SystemState t = s;
    auto& q = t.channel(e.peer_id()).queue;
    q.erase(q.begin());
    ReceiveOutcome r = on_receive(core, m, cfg);
    EntityState& te = t.entity(id);
    set_idle(te, r.next);
    if (r.reply) te.pending = Pending{*r.reply, r.next, r.reply_is_confirm};
    out.push_back({ActionLabel::out_q(e.peer_id(), m), std::move(t)});
  }
}

}  // namespace detail

/// All successors of `s` in canonical order: entity id1 before id2; per
/// entity agreed, proposals by ascending level, send, receive.
inline std::vector<Successor> enabled_transitions(const SystemState& s,
                                                  const Config& cfg) {
  std::vector<Successor> out;
  out.reserve(2 * (std::size_t(cfg.max) + 2));
  detail::entity_transitions(s, PartyId::Id1, cfg, out);
  detail::entity_transitions(s, PartyId::Id2, cfg, out);
  return out;
}

inline SystemState initial_state(const Config& cfg) {
  SystemState s;
  s.e1 = {PartyId::Id1, CoreFields::initial(cfg), std::nullopt, std::nullopt};
  s.e2 = {PartyId::Id2, CoreFields::initial(cfg), std::nullopt, std::nullopt};
  s.ch1.owner = PartyId::Id1;
  s.ch2.owner = PartyId::Id2;
  return s;
}

/// Exchanges the two parties (entities, channels and ids).
inline SystemState mirrored(const SystemState& s) {
  SystemState m;
  m.e1 = s.e2;
  m.e2 = s.e1;
  m.e1.id = PartyId::Id1;
  m.e2.id = PartyId::Id2;
  m.ch1 = {PartyId::Id1, s.ch2.queue};
  m.ch2 = {PartyId::Id2, s.ch1.queue};
  return m;
}

/// Human-readable dump; queues are printed newest-first.
inline std::string describe(const SystemState& s, const Config& cfg) {
  auto opt = [&](Level l) {
    return l == cfg.none() ? std::string("None") : std::to_string(l);
  };
  std::string out;
  for (PartyId p : kParties) {
    const EntityState& e = s.entity(p);
    out += to_string(p) + ": mine={";
    bool first = true;
    for (Level l = 0; l < cfg.max; ++l) {
      if (!e.core.mine.contains(l)) continue;
      if (!first) out += ",";
      out += std::to_string(l);
      first = false;
    }
    out += "} theirs=" + opt(e.core.theirs) +
           " decision=" + opt(e.core.decision) +
           " hold=" + (e.core.hold ? "true" : "false");
    if (e.evaluating) out += " evaluating=" + std::to_string(*e.evaluating);
    if (e.pending) out += " pending=" + to_string(e.pending->message);
    out += "\n";
  }
  for (PartyId p : kParties) {
    out += "queue " + to_string(p) + ": [";
    const auto& q = s.channel(p).queue;
    for (auto it = q.rbegin(); it != q.rend(); ++it) {
      if (it != q.rbegin()) out += ", ";
      out += to_string(*it);
    }
    out += "]\n";
  }
  return out;
}

}  // namespace slan

template <>
struct std::hash<slan::SystemState> {
  std::size_t operator()(const slan::SystemState& s) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
      h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    };
    for (const auto* e : {&s.e1, &s.e2}) {
      const auto& c = e->core;
      mix(c.mine.bits() | (std::uint64_t(c.theirs) << 32) |
          (std::uint64_t(c.decision) << 40) | (std::uint64_t(c.hold) << 48));
      mix(e->evaluating ? 0x100u | *e->evaluating : 0);
      if (e->pending) {
        const auto& p = *e->pending;
        mix(0x10000u | (std::uint64_t(p.message.kind) << 8) |
            p.message.level | (std::uint64_t(p.confirm) << 9));
      }
    }
    for (const auto* ch : {&s.ch1, &s.ch2}) {
      mix(ch->queue.size());
      for (auto m : ch->queue)
        mix((std::uint64_t(m.kind) << 8) | m.level);
    }
    return std::size_t(h);
  }
};
