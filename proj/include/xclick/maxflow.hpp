#pragma once

#include <cstdint>
#include <vector>

namespace xclick {

// s-t max-flow with two search trees (source and sink) that are grown,
// augmented and repaired by orphan adoption. Capacities are doubles and must
// be non-negative.
class MaxFlowGraph {
 public:
  explicit MaxFlowGraph(int node_count);

  int node_count() const noexcept { return static_cast<int>(nodes_.size()); }

  // Adds terminal capacities (source -> i and i -> sink).
  void add_terminal_edge(int i, double source_cap, double sink_cap);
  // Adds an arc pair i -> j (cap) and j -> i (reverse_cap).
  void add_edge(int i, int j, double cap, double reverse_cap);

  double solve();

  // After solve(): true iff `i` is reachable from the source in the residual graph.
  bool in_source_set(int i) const noexcept;

 private:
  static constexpr int kNone = -1;      // free node
  static constexpr int kTerminal = -2;  // parent is the terminal
  static constexpr int kOrphan = -3;

  struct Node {
    int first_arc = -1;
    int parent = kNone;
    bool is_sink = false;
    bool queued = false;
    int timestamp = 0;
    int dist = 0;
    double terminal_cap = 0.0;  // > 0: residual from source, < 0: residual to sink
  };
  struct Arc {
    int head;
    int next;
    double residual;
  };

  static int sister(int a) noexcept { return a ^ 1; }

  void activate(int i);
  int next_active();
  void augment(int middle_arc);
  void adopt(int i);

  std::vector<Node> nodes_;
  std::vector<Arc> arcs_;
  std::vector<int> active_;
  std::size_t active_head_ = 0;
  std::vector<int> orphans_;
  double constant_flow_ = 0.0;
  double flow_ = 0.0;
  int time_ = 0;
};

}  // namespace xclick
