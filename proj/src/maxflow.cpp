#include "xclick/maxflow.hpp"

#include <algorithm>
#include <limits>

#include "xclick/error.hpp"

namespace xclick {

MaxFlowGraph::MaxFlowGraph(int node_count) {
  if (node_count < 0) throw Error(ErrorCode::InvalidArgument, "negative node count");
  nodes_.resize(static_cast<std::size_t>(node_count));
}

void MaxFlowGraph::add_terminal_edge(int i, double source_cap, double sink_cap) {
  if (source_cap < 0.0 || sink_cap < 0.0) {
    throw Error(ErrorCode::Submodularity, "terminal capacities must be non-negative");
  }
  // Only the difference matters; the shared part is flow that always passes.
  constant_flow_ += std::min(source_cap, sink_cap);
  nodes_[static_cast<std::size_t>(i)].terminal_cap += source_cap - sink_cap;
}

void MaxFlowGraph::add_edge(int i, int j, double cap, double reverse_cap) {
  if (cap < 0.0 || reverse_cap < 0.0) {
    throw Error(ErrorCode::Submodularity, "pairwise capacities must be non-negative");
  }
  if (i == j) return;
  const int a = static_cast<int>(arcs_.size());
  arcs_.push_back({j, nodes_[static_cast<std::size_t>(i)].first_arc, cap});
  arcs_.push_back({i, nodes_[static_cast<std::size_t>(j)].first_arc, reverse_cap});
  nodes_[static_cast<std::size_t>(i)].first_arc = a;
  nodes_[static_cast<std::size_t>(j)].first_arc = a + 1;
}

void MaxFlowGraph::activate(int i) {
  Node& n = nodes_[static_cast<std::size_t>(i)];
  if (!n.queued) {
    n.queued = true;
    active_.push_back(i);
  }
}

int MaxFlowGraph::next_active() {
  while (active_head_ < active_.size()) {
    const int i = active_[active_head_++];
    Node& n = nodes_[static_cast<std::size_t>(i)];
    n.queued = false;
    if (n.parent != kNone) return i;
  }
  active_.clear();
  active_head_ = 0;
  return kNone;
}

void MaxFlowGraph::augment(int middle) {
  // Bottleneck over source half, middle arc, sink half.
  double bottleneck = arcs_[static_cast<std::size_t>(middle)].residual;
  for (int i = arcs_[static_cast<std::size_t>(sister(middle))].head;;) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.parent == kTerminal) {
      bottleneck = std::min(bottleneck, n.terminal_cap);
      break;
    }
    bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(sister(n.parent))].residual);
    i = arcs_[static_cast<std::size_t>(n.parent)].head;
  }
  for (int i = arcs_[static_cast<std::size_t>(middle)].head;;) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.parent == kTerminal) {
      bottleneck = std::min(bottleneck, -n.terminal_cap);
      break;
    }
    bottleneck = std::min(bottleneck, arcs_[static_cast<std::size_t>(n.parent)].residual);
    i = arcs_[static_cast<std::size_t>(n.parent)].head;
  }

  arcs_[static_cast<std::size_t>(middle)].residual -= bottleneck;
  arcs_[static_cast<std::size_t>(sister(middle))].residual += bottleneck;

  for (int i = arcs_[static_cast<std::size_t>(sister(middle))].head;;) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.parent == kTerminal) {
      n.terminal_cap -= bottleneck;
      if (n.terminal_cap <= 0.0) {
        n.terminal_cap = 0.0;
        n.parent = kOrphan;
        orphans_.push_back(i);
      }
      break;
    }
    const int down = sister(n.parent);  // parent -> i
    arcs_[static_cast<std::size_t>(down)].residual -= bottleneck;
    arcs_[static_cast<std::size_t>(n.parent)].residual += bottleneck;
    const int next = arcs_[static_cast<std::size_t>(n.parent)].head;
    if (arcs_[static_cast<std::size_t>(down)].residual <= 0.0) {
      arcs_[static_cast<std::size_t>(down)].residual = 0.0;
      n.parent = kOrphan;
      orphans_.push_back(i);
    }
    i = next;
  }
  for (int i = arcs_[static_cast<std::size_t>(middle)].head;;) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.parent == kTerminal) {
      n.terminal_cap += bottleneck;
      if (n.terminal_cap >= 0.0) {
        n.terminal_cap = 0.0;
        n.parent = kOrphan;
        orphans_.push_back(i);
      }
      break;
    }
    const int up = n.parent;  // i -> parent
    arcs_[static_cast<std::size_t>(up)].residual -= bottleneck;
    arcs_[static_cast<std::size_t>(sister(up))].residual += bottleneck;
    const int next = arcs_[static_cast<std::size_t>(up)].head;
    if (arcs_[static_cast<std::size_t>(up)].residual <= 0.0) {
      arcs_[static_cast<std::size_t>(up)].residual = 0.0;
      n.parent = kOrphan;
      orphans_.push_back(i);
    }
    i = next;
  }
  flow_ += bottleneck;
}

void MaxFlowGraph::adopt(int i) {
  constexpr int kInf = std::numeric_limits<int>::max();
  Node& orphan = nodes_[static_cast<std::size_t>(i)];
  int best_arc = kNone;
  int best_dist = kInf;

  for (int a = orphan.first_arc; a >= 0; a = arcs_[static_cast<std::size_t>(a)].next) {
    // Residual capacity in the tree's flow direction (toward i for the
    // source tree, away from i for the sink tree).
    const double cap = orphan.is_sink ? arcs_[static_cast<std::size_t>(a)].residual
                                      : arcs_[static_cast<std::size_t>(sister(a))].residual;
    if (cap <= 0.0) continue;
    int j = arcs_[static_cast<std::size_t>(a)].head;
    const Node& cand = nodes_[static_cast<std::size_t>(j)];
    if (cand.is_sink != orphan.is_sink || cand.parent == kNone) continue;

    // Is j still rooted at a terminal?
    int d = 0;
    while (true) {
      Node& n = nodes_[static_cast<std::size_t>(j)];
      if (n.timestamp == time_) {
        d += n.dist;
        break;
      }
      ++d;
      if (n.parent == kTerminal) {
        n.timestamp = time_;
        n.dist = 1;
        break;
      }
      if (n.parent == kOrphan) {
        d = kInf;
        break;
      }
      j = arcs_[static_cast<std::size_t>(n.parent)].head;
    }
    if (d == kInf) continue;
    if (d < best_dist) {
      best_arc = a;
      best_dist = d;
    }
    // Cache distances along the verified chain.
    for (j = arcs_[static_cast<std::size_t>(a)].head;
         nodes_[static_cast<std::size_t>(j)].timestamp != time_;
         j = arcs_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(j)].parent)].head) {
      nodes_[static_cast<std::size_t>(j)].timestamp = time_;
      nodes_[static_cast<std::size_t>(j)].dist = d--;
    }
  }

  if (best_arc != kNone) {
    orphan.parent = best_arc;
    orphan.timestamp = time_;
    orphan.dist = best_dist + 1;
    return;
  }

  // No valid parent: i becomes free; its children become orphans.
  for (int a = orphan.first_arc; a >= 0; a = arcs_[static_cast<std::size_t>(a)].next) {
    const int j = arcs_[static_cast<std::size_t>(a)].head;
    Node& n = nodes_[static_cast<std::size_t>(j)];
    if (n.is_sink != orphan.is_sink || n.parent == kNone) continue;
    const double cap = orphan.is_sink ? arcs_[static_cast<std::size_t>(a)].residual
                                      : arcs_[static_cast<std::size_t>(sister(a))].residual;
    if (cap > 0.0) activate(j);
    if (n.parent != kTerminal && n.parent != kOrphan &&
        arcs_[static_cast<std::size_t>(n.parent)].head == i) {
      n.parent = kOrphan;
      orphans_.push_back(j);
    }
  }
  orphan.parent = kNone;
}

double MaxFlowGraph::solve() {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    n.parent = kNone;
    n.timestamp = 0;
    if (n.terminal_cap != 0.0) {
      n.is_sink = n.terminal_cap < 0.0;
      n.parent = kTerminal;
      n.dist = 1;
      activate(static_cast<int>(i));
    }
  }

  int current = kNone;
  while (true) {
    if (current == kNone || nodes_[static_cast<std::size_t>(current)].parent == kNone) {
      current = next_active();
      if (current == kNone) break;
    }
    Node& ni = nodes_[static_cast<std::size_t>(current)];

    int middle = kNone;
    for (int a = ni.first_arc; a >= 0; a = arcs_[static_cast<std::size_t>(a)].next) {
      const double cap = ni.is_sink ? arcs_[static_cast<std::size_t>(sister(a))].residual
                                    : arcs_[static_cast<std::size_t>(a)].residual;
      if (cap <= 0.0) continue;
      const int j = arcs_[static_cast<std::size_t>(a)].head;
      Node& nj = nodes_[static_cast<std::size_t>(j)];
      if (nj.parent == kNone) {
        nj.is_sink = ni.is_sink;
        nj.parent = sister(a);
        nj.timestamp = ni.timestamp;
        nj.dist = ni.dist + 1;
        activate(j);
      } else if (nj.is_sink != ni.is_sink) {
        middle = ni.is_sink ? sister(a) : a;
        break;
      }
    }

    if (middle == kNone) {
      current = kNone;
      continue;
    }

    ++time_;
    augment(middle);
    while (!orphans_.empty()) {
      const int o = orphans_.back();
      orphans_.pop_back();
      adopt(o);
    }
    // `current` keeps growing if it survived adoption.
  }
  return flow_ + constant_flow_;
}

bool MaxFlowGraph::in_source_set(int i) const noexcept {
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  return n.parent != kNone && !n.is_sink;
}

}  // namespace xclick
