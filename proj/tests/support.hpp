#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "slan/slan.hpp"

namespace slan::testing {

/// Explorations are shared between tests; max=3 takes a few seconds.
inline const Exploration& explored(unsigned max) {
  static std::map<unsigned, Exploration> cache;
  auto it = cache.find(max);
  if (it == cache.end())
    it = cache.emplace(max, explore(Config::with_max(max), {true, true})).first;
  return it->second;
}

inline ActionLabel label(std::string_view text) {
  auto l = parse_label(text);
  if (!l) throw Error("bad test label " + std::string(text));
  return *l;
}

/// Builds an LTS from named states; the first name listed is initial.
struct Fixture {
  std::vector<std::string> names;
  std::vector<std::tuple<std::string, std::string, std::string>> edges;

  Lts build() const {
    std::map<std::string, StateIndex> id;
    for (const auto& n : names) id.emplace(n, StateIndex(id.size()));
    std::vector<Transition> ts;
    for (const auto& [src, lab, dst] : edges)
      ts.push_back({id.at(src), label(lab), id.at(dst)});
    return Lts(names.size(), std::move(ts));
  }
};

/// Rooted isomorphism of two deterministic LTSs, by walking both in
/// lockstep from the initial states.
inline bool deterministic_isomorphic(const Lts& a, const Lts& b) {
  if (a.num_states() != b.num_states() ||
      a.num_transitions() != b.num_transitions())
    return false;
  std::vector<long> map(a.num_states(), -1), back(b.num_states(), -1);
  std::vector<StateIndex> todo{0};
  map[0] = 0;
  back[0] = 0;
  while (!todo.empty()) {
    StateIndex s = todo.back();
    todo.pop_back();
    auto ea = a.outgoing(s);
    auto eb = b.outgoing(StateIndex(map[s]));
    if (ea.size() != eb.size()) return false;
    for (std::size_t i = 0; i < ea.size(); ++i) {
      if (ea[i].label != eb[i].label) return false;
      if (i > 0 && ea[i].label == ea[i - 1].label) return false;
      StateIndex x = ea[i].dst, y = eb[i].dst;
      if (map[x] == -1 && back[y] == -1) {
        map[x] = y;
        back[y] = x;
        todo.push_back(x);
      } else if (map[x] != long(y) || back[y] != long(x)) {
        return false;
      }
    }
  }
  return std::find(map.begin(), map.end(), -1) == map.end();
}

/// Visible traces of length <= depth, computed by exhaustive search over
/// (state, trace) pairs.
inline std::set<std::vector<ActionLabel>> weak_traces(const Lts& lts,
                                                      std::size_t depth) {
  std::set<std::pair<StateIndex, std::vector<ActionLabel>>> seen;
  std::vector<std::pair<StateIndex, std::vector<ActionLabel>>> todo;
  std::set<std::vector<ActionLabel>> traces;
  todo.push_back({0, {}});
  seen.insert(todo.back());
  while (!todo.empty()) {
    auto [s, trace] = todo.back();
    todo.pop_back();
    traces.insert(trace);
    for (const auto& t : lts.outgoing(s)) {
      auto next = trace;
      if (!t.label.is(ActionKind::Tau)) {
        if (next.size() == depth) continue;
        next.push_back(t.label);
      }
      std::pair<StateIndex, std::vector<ActionLabel>> item{t.dst, next};
      if (seen.insert(item).second) todo.push_back(std::move(item));
    }
  }
  return traces;
}

/// Checks that "same block" is a branching bisimulation on `lts` (divergence
/// marks are ordinary labels here): every state of a block can match every
/// step of every other state of its block after inert tau steps.
inline bool is_branching_bisimulation(const Lts& lts,
                                      const std::vector<StateIndex>& block) {
  const std::size_t n = lts.num_states();
  using Step = std::pair<ActionLabel, StateIndex>;
  auto direct = [&](StateIndex s) {
    std::set<Step> out;
    for (const auto& t : lts.outgoing(s))
      if (!(t.label.is(ActionKind::Tau) && block[t.dst] == block[s]))
        out.insert({t.label, block[t.dst]});
    return out;
  };
  std::vector<std::set<Step>> reach(n);
  for (StateIndex s = 0; s < n; ++s) {
    std::vector<char> seen(n, 0);
    std::vector<StateIndex> todo{s};
    seen[s] = 1;
    while (!todo.empty()) {
      StateIndex u = todo.back();
      todo.pop_back();
      for (const auto& st : direct(u)) reach[s].insert(st);
      for (const auto& t : lts.outgoing(u))
        if (t.label.is(ActionKind::Tau) && block[t.dst] == block[s] &&
            !seen[t.dst]) {
          seen[t.dst] = 1;
          todo.push_back(t.dst);
        }
    }
  }
  std::map<StateIndex, const std::set<Step>*> per_block;
  for (StateIndex s = 0; s < n; ++s) {
    auto [it, fresh] = per_block.emplace(block[s], &reach[s]);
    if (!fresh && *it->second != reach[s]) return false;
  }
  return true;
}

/// Requirement-IV inner table by literal nested iteration: Z grows from
/// empty; for each Z the greatest Y is found by shrinking the full set.
inline std::vector<char> naive_inner_iv(const Lts& lts, PartyId id,
                                        const Config& cfg) {
  const std::size_t k = std::size_t(cfg.max) + 1;
  const std::size_t total = lts.num_states() * k * k;
  auto at = [k](std::size_t s, std::size_t m1, std::size_t m2) {
    return (s * k + m1) * k + m2;
  };
  std::vector<char> z(total, 0);
  while (true) {
    std::vector<char> y(total, 1);
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t s = 0; s < lts.num_states(); ++s)
        for (std::size_t m1 = 0; m1 < k; ++m1)
          for (std::size_t m2 = 0; m2 < k; ++m2) {
            const std::size_t node = at(s, m1, m2);
            if (!y[node]) continue;
            bool ok_a = true, ok_b = true, witness = false;
            for (const auto& t : lts.outgoing(StateIndex(s))) {
              const ActionLabel& a = t.label;
              if (a.is(ActionKind::Propose)) {
                std::size_t n1 = m1, n2 = m2;
                if (a.party == PartyId::Id1) {
                  n1 = std::min<std::size_t>(m1, a.level);
                  if (a.level == m2 && m1 > m2) witness = true;
                } else {
                  n2 = std::min<std::size_t>(m2, a.level);
                  if (a.level == m1 && m2 > m1) witness = true;
                }
                ok_b = ok_b && y[at(t.dst, n1, n2)];
              } else {
                witness = true;
                if (!a.is(ActionKind::Agreed, id))
                  ok_a = ok_a && z[at(t.dst, m1, m2)];
              }
            }
            if (!(ok_a && ok_b && witness)) {
              y[node] = 0;
              changed = true;
            }
          }
    }
    if (y == z) return z;
    z = std::move(y);
  }
}

/// Index map from each explored state to the index of its mirror image,
/// or an empty vector if some mirror image is not reachable.
inline std::vector<StateIndex> mirror_map(const Exploration& ex) {
  std::unordered_map<SystemState, StateIndex> index;
  for (StateIndex i = 0; i < ex.states.size(); ++i) index.emplace(ex.states[i], i);
  std::vector<StateIndex> map;
  for (const auto& s : ex.states) {
    auto it = index.find(mirrored(s));
    if (it == index.end()) return {};
    map.push_back(it->second);
  }
  return map;
}

/// The explored LTS is invariant under exchanging the parties.
inline bool symmetric(const Exploration& ex) {
  auto map = mirror_map(ex);
  if (map.size() != ex.lts.num_states()) return false;
  std::vector<Transition> image;
  for (const auto& t : ex.lts.transitions())
    image.push_back({map[t.src], mirrored(t.label), map[t.dst]});
  std::sort(image.begin(), image.end());
  return image == ex.lts.transitions();
}

/// Round-automaton fixtures.
inline Lts single_party_view_max2() {
  return Fixture{{"A", "B", "C", "D"},
                 {{"A", "propose(id1,0)", "B"},
                  {"A", "propose(id1,1)", "D"},
                  {"B", "agreed(id1,0)", "A"},
                  {"B", "propose(id1,0)", "B"},
                  {"B", "propose(id1,1)", "B"},
                  {"D", "agreed(id1,1)", "A"},
                  {"D", "propose(id1,0)", "C"},
                  {"D", "propose(id1,1)", "D"},
                  {"C", "agreed(id1,0)", "A"},
                  {"C", "agreed(id1,1)", "A"},
                  {"C", "propose(id1,0)", "C"},
                  {"C", "propose(id1,1)", "C"}}}
      .build();
}

inline Lts single_party_view_max3() {
  Fixture f{{"A", "B", "C", "D", "E", "F", "G", "H"}, {}};
  auto edge = [&](const char* s, const std::string& l, const char* d) {
    f.edges.emplace_back(s, l, d);
  };
  auto p = [](int l) { return "propose(id1," + std::to_string(l) + ")"; };
  auto a = [](int l) { return "agreed(id1," + std::to_string(l) + ")"; };
  edge("A", p(2), "D");
  edge("A", p(1), "F");
  edge("A", p(0), "H");
  edge("D", a(2), "A");
  edge("D", p(0), "E");
  edge("D", p(1), "C");
  edge("D", p(2), "D");
  edge("E", a(0), "A");
  edge("E", a(2), "A");
  for (int l = 0; l < 3; ++l) edge("E", p(l), "E");
  edge("C", a(1), "A");
  edge("C", a(2), "A");
  edge("C", p(0), "B");
  edge("C", p(1), "C");
  edge("C", p(2), "C");
  for (int l = 0; l < 3; ++l) edge("B", a(l), "A");
  for (int l = 0; l < 3; ++l) edge("B", p(l), "B");
  edge("F", a(1), "A");
  edge("F", p(0), "G");
  edge("F", p(1), "F");
  edge("F", p(2), "F");
  edge("G", a(0), "A");
  edge("G", a(1), "A");
  for (int l = 0; l < 3; ++l) edge("G", p(l), "G");
  edge("H", a(0), "A");
  for (int l = 0; l < 3; ++l) edge("H", p(l), "H");
  return f.build();
}

/// From the idle round, either party agrees first on l; the other then
/// agrees on the same l.
inline Lts agreed_rounds_view(unsigned max) {
  Fixture f{{"A"}, {}};
  for (unsigned l = 0; l < max; ++l)
    for (PartyId p : kParties) {
      std::string mid = to_string(p) + "@" + std::to_string(l);
      f.names.push_back(mid);
      f.edges.emplace_back("A", to_string(ActionLabel::agreed(p, Level(l))), mid);
      f.edges.emplace_back(mid, to_string(ActionLabel::agreed(peer(p), Level(l))),
                           "A");
    }
  return f.build();
}

/// Whether `value` rounds to `printed` * `unit`, e.g. 7.9k is (79, 100).
inline bool rounds_to(double value, long printed, double unit) {
  return std::llround(value / unit) == printed;
}

}  // namespace slan::testing
