#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "slan/graph.hpp"
#include "slan/lts.hpp"

namespace slan {

/// Assignment of states to dense block ids.
struct Partition {
  std::vector<std::uint32_t> block_of;
  std::uint32_t num_blocks = 0;
};

struct ReducedLts {
  Lts lts;
  /// Original state -> reduced state. Empty when the reduced LTS is not a
  /// quotient of the input (weak-trace determinisation).
  std::vector<StateIndex> projection;
};

/// The determinised automaton would exceed the configured state budget.
class SubsetBlowup : public Error {
 public:
  using Error::Error;
};

namespace detail {

struct VectorHash {
  template <class T>
  std::size_t operator()(const std::vector<T>& v) const noexcept {
    std::uint64_t h = 0x84222325cbf29ce4ull ^ v.size();
    for (auto x : v) {
      h ^= std::uint64_t(x) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return std::size_t(h);
  }
};

/// Breadth-first renumbering from `root`, following outgoing edges in
/// canonical order. Unreached states keep their relative order after the
/// reached ones.
inline std::vector<StateIndex> bfs_numbering(
    std::size_t num_states, const std::vector<Transition>& sorted,
    StateIndex root) {
  constexpr StateIndex kUnset = ~StateIndex(0);
  std::vector<std::size_t> offsets(num_states + 1, 0);
  for (const auto& t : sorted) ++offsets[t.src + 1];
  for (std::size_t i = 1; i <= num_states; ++i) offsets[i] += offsets[i - 1];

  std::vector<StateIndex> number(num_states, kUnset);
  std::vector<StateIndex> order{root};
  number[root] = 0;
  for (std::size_t head = 0; head < order.size(); ++head) {
    StateIndex s = order[head];
    for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) {
      StateIndex d = sorted[i].dst;
      if (number[d] == kUnset) {
        number[d] = StateIndex(order.size());
        order.push_back(d);
      }
    }
  }
  StateIndex next = StateIndex(order.size());
  for (auto& n : number)
    if (n == kUnset) n = next++;
  return number;
}

/// Builds the LTS obtained by renaming states through `number`.
inline Lts renumbered(std::size_t num_states,
                      const std::vector<Transition>& transitions,
                      const std::vector<StateIndex>& number) {
  std::vector<Transition> out;
  out.reserve(transitions.size());
  for (const auto& t : transitions)
    out.push_back({number[t.src], t.label, number[t.dst]});
  return Lts(num_states, std::move(out));
}

}  // namespace detail

/// Adds a delta self-loop to every state on a cycle of tau transitions
/// (tau self-loops included).
inline Lts mark_divergence(const Lts& lts) {
  const auto n = lts.num_states();
  auto scc = graph::strongly_connected_components(n, [&](std::uint32_t s,
                                                         auto&& visit) {
    for (const auto& t : lts.outgoing(s))
      if (t.label.is(ActionKind::Tau)) visit(t.dst);
  });
  std::vector<std::uint32_t> size(scc.count, 0);
  for (auto c : scc.component) ++size[c];

  std::vector<Transition> out = lts.transitions();
  for (StateIndex s = 0; s < n; ++s) {
    bool divergent = size[scc.component[s]] > 1;
    for (const auto& t : lts.outgoing(s))
      divergent = divergent || (t.label.is(ActionKind::Tau) && t.dst == s);
    if (divergent) out.push_back({s, ActionLabel::delta(), s});
  }
  return Lts(n, std::move(out));
}

/// Contracts every strongly connected component of the tau subgraph to a
/// single state and drops the resulting tau self-loops. Components are
/// numbered by their smallest member, so state 0 stays initial.
inline ReducedLts collapse_tau_sccs(const Lts& lts) {
  const auto n = lts.num_states();
  auto scc = graph::strongly_connected_components(n, [&](std::uint32_t s,
                                                         auto&& visit) {
    for (const auto& t : lts.outgoing(s))
      if (t.label.is(ActionKind::Tau)) visit(t.dst);
  });
  constexpr StateIndex kUnset = ~StateIndex(0);
  std::vector<StateIndex> rename(scc.count, kUnset);
  std::vector<StateIndex> projection(n);
  StateIndex next = 0;
  for (StateIndex s = 0; s < n; ++s) {
    auto& r = rename[scc.component[s]];
    if (r == kUnset) r = next++;
    projection[s] = r;
  }
  std::vector<Transition> out;
  out.reserve(lts.num_transitions());
  for (const auto& t : lts.transitions()) {
    StateIndex a = projection[t.src], b = projection[t.dst];
    if (t.label.is(ActionKind::Tau) && a == b) continue;
    out.push_back({a, t.label, b});
  }
  return {Lts(next, std::move(out)), std::move(projection)};
}

/// Coarsest branching bisimulation of a tau-acyclic LTS, treating delta as
/// a visible label. Signature refinement: a state's signature is the set
/// of (label, block) pairs it can reach after inert tau steps (tau steps
/// inside its own block), excluding inert steps themselves.
inline Partition branching_partition(const Lts& lts) {
  const auto n = lts.num_states();

  // Tau-successors before tau-predecessors.
  std::vector<std::uint32_t> pending(n, 0);
  for (const auto& t : lts.transitions())
    if (t.label.is(ActionKind::Tau)) ++pending[t.src];
  std::vector<std::vector<StateIndex>> tau_pred(n);
  for (const auto& t : lts.transitions())
    if (t.label.is(ActionKind::Tau)) tau_pred[t.dst].push_back(t.src);
  std::vector<StateIndex> order;
  order.reserve(n);
  for (StateIndex s = 0; s < n; ++s)
    if (pending[s] == 0) order.push_back(s);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (StateIndex p : tau_pred[order[i]])
      if (--pending[p] == 0) order.push_back(p);
  if (order.size() != n)
    throw Error("branching_partition requires a tau-acyclic LTS");

  Partition part{std::vector<std::uint32_t>(n, 0), 1};
  std::vector<std::uint32_t> sig_of(n);
  for (;;) {
    std::unordered_map<std::vector<std::uint64_t>, std::uint32_t,
                       detail::VectorHash>
        sig_ids;
    std::vector<const std::vector<std::uint64_t>*> sigs;
    std::vector<std::uint64_t> sig;
    for (StateIndex s : order) {
      sig.clear();
      const auto block = part.block_of[s];
      for (const auto& t : lts.outgoing(s)) {
        if (t.label.is(ActionKind::Tau) && part.block_of[t.dst] == block) {
          const auto& inherited = *sigs[sig_of[t.dst]];
          sig.insert(sig.end(), inherited.begin(), inherited.end());
        } else {
          sig.push_back((std::uint64_t(t.label.code()) << 32) |
                        part.block_of[t.dst]);
        }
      }
      std::sort(sig.begin(), sig.end());
      sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
      auto [it, inserted] =
          sig_ids.try_emplace(sig, std::uint32_t(sigs.size()));
      if (inserted) sigs.push_back(&it->first);
      sig_of[s] = it->second;
    }

    std::unordered_map<std::uint64_t, std::uint32_t> next_ids;
    Partition next{std::vector<std::uint32_t>(n), 0};
    for (StateIndex s = 0; s < n; ++s) {
      std::uint64_t key = (std::uint64_t(part.block_of[s]) << 32) | sig_of[s];
      auto [it, inserted] = next_ids.try_emplace(key, next.num_blocks);
      if (inserted) ++next.num_blocks;
      next.block_of[s] = it->second;
    }
    bool stable = next.num_blocks == part.num_blocks;
    part = std::move(next);
    if (stable) return part;
  }
}

/// Quotient of `lts` by `part`, dropping inert tau steps.
inline Lts quotient(const Lts& lts, const Partition& part) {
  std::vector<Transition> out;
  out.reserve(lts.num_transitions());
  for (const auto& t : lts.transitions()) {
    StateIndex a = part.block_of[t.src], b = part.block_of[t.dst];
    if (t.label.is(ActionKind::Tau) && a == b) continue;
    out.push_back({a, t.label, b});
  }
  return Lts(part.num_blocks, std::move(out));
}

/// Minimal LTS modulo divergence-preserving branching bisimulation.
/// Divergence is made visible as delta self-loops, which are kept in the
/// result. Delta loops already present are treated as marked divergence.
inline ReducedLts minimize_dpbb(const Lts& lts) {
  ReducedLts collapsed = collapse_tau_sccs(mark_divergence(lts));
  Partition part = branching_partition(collapsed.lts);
  Lts q = quotient(collapsed.lts, part);
  auto number = detail::bfs_numbering(q.num_states(), q.transitions(),
                                      StateIndex(part.block_of[0]));
  ReducedLts result{
      detail::renumbered(q.num_states(), q.transitions(), number), {}};
  result.projection.resize(lts.num_states());
  for (StateIndex s = 0; s < lts.num_states(); ++s)
    result.projection[s] =
        number[part.block_of[collapsed.projection[s]]];
  return result;
}

/// Whether the initial states of `a` and `b` are divergence-preserving
/// branching bisimilar.
inline bool equivalent_modulo_dpbb(const Lts& a, const Lts& b) {
  const auto offset = StateIndex(a.num_states());
  std::vector<Transition> joined = a.transitions();
  for (const auto& t : b.transitions())
    joined.push_back({t.src + offset, t.label, t.dst + offset});
  Lts both(a.num_states() + b.num_states(), std::move(joined));
  ReducedLts collapsed = collapse_tau_sccs(mark_divergence(both));
  Partition part = branching_partition(collapsed.lts);
  return part.block_of[collapsed.projection[0]] ==
         part.block_of[collapsed.projection[offset]];
}

namespace detail {

/// Hopcroft minimisation of a complete DFA. `delta[q * k + a]` is the
/// successor of q on symbol a; `accepting[q]` splits the initial partition.
inline Partition hopcroft(std::size_t n, std::size_t k,
                          const std::vector<std::uint32_t>& delta,
                          const std::vector<char>& accepting) {
  // Inverse transitions per symbol (CSR).
  std::vector<std::vector<std::uint32_t>> inv_offsets(
      k, std::vector<std::uint32_t>(n + 1, 0));
  std::vector<std::vector<std::uint32_t>> inv(k, std::vector<std::uint32_t>(n));
  for (std::size_t q = 0; q < n; ++q)
    for (std::size_t a = 0; a < k; ++a) ++inv_offsets[a][delta[q * k + a] + 1];
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t i = 1; i <= n; ++i)
      inv_offsets[a][i] += inv_offsets[a][i - 1];
    std::vector<std::uint32_t> fill(inv_offsets[a].begin(),
                                    inv_offsets[a].end() - 1);
    for (std::size_t q = 0; q < n; ++q)
      inv[a][fill[delta[q * k + a]]++] = std::uint32_t(q);
  }

  // Refinable partition: elems is grouped by block; [first, mid) of a
  // block holds its marked elements during a splitting round.
  std::vector<std::uint32_t> elems(n), loc(n), blk(n);
  std::vector<std::uint32_t> first, end, mid;
  {
    std::uint32_t pos = 0;
    for (char want : {char(1), char(0)}) {
      std::uint32_t start = pos;
      for (std::uint32_t q = 0; q < n; ++q) {
        if ((accepting[q] != 0) != (want != 0)) continue;
        elems[pos] = q;
        loc[q] = pos++;
        blk[q] = std::uint32_t(first.size());
      }
      if (pos > start) {
        first.push_back(start);
        end.push_back(pos);
        mid.push_back(start);
      }
    }
  }

  std::vector<std::vector<char>> in_work;
  std::deque<std::pair<std::uint32_t, std::uint32_t>> work;
  auto add_work = [&](std::uint32_t b, std::uint32_t a) {
    if (in_work.size() <= b) in_work.resize(b + 1, std::vector<char>(k, 0));
    if (!in_work[b][a]) {
      in_work[b][a] = 1;
      work.emplace_back(b, a);
    }
  };
  in_work.assign(first.size(), std::vector<char>(k, 0));
  if (first.size() == 2) {
    std::uint32_t smaller =
        (end[0] - first[0]) <= (end[1] - first[1]) ? 0 : 1;
    for (std::uint32_t a = 0; a < k; ++a) add_work(smaller, a);
  }

  std::vector<std::uint32_t> splitter, touched;
  while (!work.empty()) {
    auto [s, a] = work.front();
    work.pop_front();
    in_work[s][a] = 0;
    splitter.assign(elems.begin() + first[s], elems.begin() + end[s]);
    for (std::uint32_t target : splitter) {
      for (std::uint32_t i = inv_offsets[a][target];
           i < inv_offsets[a][target + 1]; ++i) {
        std::uint32_t q = inv[a][i];
        std::uint32_t b = blk[q];
        if (loc[q] < mid[b]) continue;
        if (mid[b] == first[b]) touched.push_back(b);
        std::uint32_t other = elems[mid[b]];
        std::swap(elems[loc[q]], elems[mid[b]]);
        loc[other] = loc[q];
        loc[q] = mid[b]++;
      }
    }
    for (std::uint32_t b : touched) {
      if (mid[b] == end[b]) {
        mid[b] = first[b];
        continue;
      }
      auto nb = std::uint32_t(first.size());
      first.push_back(first[b]);
      end.push_back(mid[b]);
      mid.push_back(first[b]);
      first[b] = mid[b];
      for (std::uint32_t i = first[nb]; i < end[nb]; ++i) blk[elems[i]] = nb;
      if (in_work.size() <= nb) in_work.resize(nb + 1, std::vector<char>(k, 0));
      std::uint32_t size_b = end[b] - first[b], size_nb = end[nb] - first[nb];
      for (std::uint32_t c = 0; c < k; ++c) {
        if (in_work[b][c])
          add_work(nb, c);
        else
          add_work(size_nb <= size_b ? nb : b, c);
      }
    }
    touched.clear();
  }
  return {std::move(blk), std::uint32_t(first.size())};
}

}  // namespace detail

/// Minimal deterministic LTS with the same weak traces (tau erased, prefix
/// closed). States are numbered canonically (breadth-first, labels in
/// canonical order), so two results are isomorphic iff they are equal.
inline ReducedLts minimize_weak_trace(const Lts& lts,
                                      std::size_t subset_budget = 1'000'000) {
  const auto n = lts.num_states();
  std::vector<ActionLabel> alphabet;
  for (const auto& l : lts.label_alphabet())
    if (!l.is(ActionKind::Tau)) alphabet.push_back(l);
  const std::size_t k = alphabet.size();
  auto symbol_of = [&](const ActionLabel& l) {
    return std::size_t(std::lower_bound(alphabet.begin(), alphabet.end(), l) -
                       alphabet.begin());
  };

  std::vector<std::uint32_t> stamp(n, 0);
  std::uint32_t generation = 0;
  std::vector<StateIndex> stack;
  auto close = [&](std::vector<StateIndex>& set) {
    ++generation;
    stack.clear();
    for (StateIndex s : set) {
      if (stamp[s] != generation) {
        stamp[s] = generation;
        stack.push_back(s);
      }
    }
    set.clear();
    while (!stack.empty()) {
      StateIndex s = stack.back();
      stack.pop_back();
      set.push_back(s);
      for (const auto& t : lts.outgoing(s)) {
        if (t.label.is(ActionKind::Tau) && stamp[t.dst] != generation) {
          stamp[t.dst] = generation;
          stack.push_back(t.dst);
        }
      }
    }
    std::sort(set.begin(), set.end());
  };

  std::unordered_map<std::vector<StateIndex>, std::uint32_t,
                     detail::VectorHash>
      subset_ids;
  std::vector<const std::vector<StateIndex>*> subsets;
  auto intern = [&](std::vector<StateIndex>&& set) {
    auto [it, inserted] =
        subset_ids.try_emplace(std::move(set), std::uint32_t(subsets.size()));
    if (inserted) {
      if (subsets.size() >= subset_budget)
        throw SubsetBlowup("weak-trace determinisation exceeds " +
                           std::to_string(subset_budget) + " subsets");
      subsets.push_back(&it->first);
    }
    return it->second;
  };

  constexpr std::uint32_t kMissing = ~std::uint32_t(0);
  std::vector<std::uint32_t> dfa;  // dfa[q * k + a], kMissing if none
  {
    std::vector<StateIndex> start{lts.initial()};
    close(start);
    intern(std::move(start));
  }
  std::vector<std::vector<StateIndex>> by_symbol(k);
  for (std::size_t q = 0; q < subsets.size(); ++q) {
    for (auto& v : by_symbol) v.clear();
    for (StateIndex s : *subsets[q])
      for (const auto& t : lts.outgoing(s))
        if (!t.label.is(ActionKind::Tau))
          by_symbol[symbol_of(t.label)].push_back(t.dst);
    dfa.resize((q + 1) * k, kMissing);
    for (std::size_t a = 0; a < k; ++a) {
      if (by_symbol[a].empty()) continue;
      std::vector<StateIndex> target = by_symbol[a];
      close(target);
      dfa[q * k + a] = intern(std::move(target));
    }
  }

  // Complete with a rejecting sink and minimise.
  const std::size_t m = subsets.size();
  const bool has_sink =
      std::find(dfa.begin(), dfa.end(), kMissing) != dfa.end();
  const std::size_t total = m + (has_sink ? 1 : 0);
  std::vector<std::uint32_t> delta(total * k);
  for (std::size_t q = 0; q < m; ++q)
    for (std::size_t a = 0; a < k; ++a)
      delta[q * k + a] = dfa[q * k + a] == kMissing ? std::uint32_t(m)
                                                    : dfa[q * k + a];
  if (has_sink)
    for (std::size_t a = 0; a < k; ++a) delta[m * k + a] = std::uint32_t(m);
  std::vector<char> accepting(total, 1);
  if (has_sink) accepting[m] = 0;
  Partition part = detail::hopcroft(total, k, delta, accepting);

  const std::uint32_t sink_block =
      has_sink ? part.block_of[m] : ~std::uint32_t(0);
  // Blocks other than the sink, densely renamed.
  std::vector<StateIndex> dense(part.num_blocks, ~StateIndex(0));
  StateIndex count = 0;
  for (std::size_t q = 0; q < m; ++q) {
    auto b = part.block_of[q];
    if (b != sink_block && dense[b] == ~StateIndex(0)) dense[b] = count++;
  }
  std::vector<Transition> edges;
  std::vector<char> emitted(part.num_blocks, 0);
  for (std::size_t q = 0; q < m; ++q) {
    auto b = part.block_of[q];
    if (emitted[b]) continue;
    emitted[b] = 1;
    for (std::size_t a = 0; a < k; ++a) {
      auto target = part.block_of[delta[q * k + a]];
      if (target == sink_block) continue;
      edges.push_back({dense[b], alphabet[a], dense[target]});
    }
  }
  std::sort(edges.begin(), edges.end());
  auto number = detail::bfs_numbering(count, edges, dense[part.block_of[0]]);
  return {detail::renumbered(count, edges, number), {}};
}

}  // namespace slan
