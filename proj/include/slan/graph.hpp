#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace slan::graph {

struct Components {
  /// Component id per node. Ids are assigned in completion order, so every
  /// edge u -> v satisfies component[u] >= component[v].
  std::vector<std::uint32_t> component;
  std::uint32_t count = 0;
};

/// Iterative Tarjan. `for_each_successor(u, f)` must call f(v) for every
/// successor v of u, in a deterministic order.
template <class ForEachSuccessor>
Components strongly_connected_components(std::size_t num_nodes,
                                         ForEachSuccessor&& for_each_successor) {
  constexpr std::uint32_t kUnvisited = std::numeric_limits<std::uint32_t>::max();
  Components result;
  result.component.assign(num_nodes, kUnvisited);
  std::vector<std::uint32_t> index(num_nodes, kUnvisited);
  std::vector<std::uint32_t> lowlink(num_nodes, 0);
  std::vector<std::uint32_t> stack;
  std::vector<char> on_stack(num_nodes, 0);

  struct Frame {
    std::uint32_t node;
    std::vector<std::uint32_t> successors;
    std::size_t next = 0;
  };
  std::vector<Frame> call_stack;
  std::uint32_t counter = 0;

  auto enter = [&](std::uint32_t v) {
    index[v] = lowlink[v] = counter++;
    stack.push_back(v);
    on_stack[v] = 1;
    Frame f{v, {}, 0};
    for_each_successor(v, [&](std::uint32_t w) { f.successors.push_back(w); });
    call_stack.push_back(std::move(f));
  };

  for (std::uint32_t root = 0; root < num_nodes; ++root) {
    if (index[root] != kUnvisited) continue;
    enter(root);
    while (!call_stack.empty()) {
      Frame& top = call_stack.back();
      if (top.next < top.successors.size()) {
        std::uint32_t w = top.successors[top.next++];
        if (index[w] == kUnvisited) {
          enter(w);
        } else if (on_stack[w]) {
          lowlink[top.node] = std::min(lowlink[top.node], index[w]);
        }
        continue;
      }
      std::uint32_t v = top.node;
      call_stack.pop_back();
      if (!call_stack.empty()) {
        std::uint32_t parent = call_stack.back().node;
        lowlink[parent] = std::min(lowlink[parent], lowlink[v]);
      }
      if (lowlink[v] == index[v]) {
        std::uint32_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          result.component[w] = result.count;
        } while (w != v);
        ++result.count;
      }
    }
  }
  return result;
}

}  // namespace slan::graph
