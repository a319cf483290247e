#pragma once

// Two-terminal graphs for binary MRF energies and a shortest-augmenting-path
// max-flow solver (Dinic's level-graph variant).
//
// Orientation: the source side is FG. cap_src(i) = cost_bg(i) is cut when i
// is BG, cap_snk(i) = cost_fg(i) when i is FG, and the arc i->j carries
// V(i->j), cut when i is FG and j is BG. The cost of any s/t cut therefore
// equals energy_of of the induced labeling.

#include <iosfwd>
#include <vector>

#include "biprop/core.hpp"

namespace biprop {

struct EdgeEnds {
  int a = 0;
  int b = 0;
};

struct FlowGraph {
  std::vector<double> cap_src;
  std::vector<double> cap_snk;
  std::vector<EdgeEnds> ends;       // one entry per adjacent pair
  std::vector<DirectedWeight> cap;  // forward a->b, backward b->a

  std::size_t node_count() const { return cap_src.size(); }
};

struct ResidualGraph {
  std::vector<double> res_src;
  std::vector<double> res_snk;
  std::vector<EdgeEnds> ends;
  std::vector<DirectedWeight> res;

  std::size_t node_count() const { return res_src.size(); }
};

/// Throws std::invalid_argument on negative or non-finite weights.
FlowGraph build_graph(const UnaryField& unary, const BinaryField& binary,
                      const RegionAdjacency& adj);

/// Search instrumentation. search_steps counts arc inspections in both the
/// breadth-first level construction and the path search.
struct SolveStats {
  long augmentations = 0;
  long search_steps = 0;
  long phases = 0;

  SolveStats& operator+=(const SolveStats& o) {
    augmentations += o.augmentations;
    search_steps += o.search_steps;
    phases += o.phases;
    return *this;
  }
};

struct FlowResult {
  double flow_value = 0.0;
  ResidualGraph residual;
  SolveStats stats;
};

/// Reusable solver; scratch buffers persist across calls.
class MaxFlowSolver {
 public:
  /// Pushes flow until no augmenting path remains. Returns the flow added.
  double augment(ResidualGraph& g, SolveStats& stats);

 private:
  void build_adjacency(const ResidualGraph& g);
  bool build_levels(const ResidualGraph& g, SolveStats& stats);

  struct Arc {
    int to;
    int edge;
    bool forward;  // true when the arc runs ends[edge].a -> ends[edge].b
  };
  std::vector<int> first_;
  std::vector<Arc> arcs_;
  std::vector<int> level_;
  std::vector<int> current_;
  std::vector<int> queue_;
  int sink_level_ = 0;
};

FlowResult max_flow(const FlowGraph& g);

ResidualGraph residual_of(const FlowGraph& g);

/// Source-reachable nodes through positive residual arcs are FG. Throws
/// std::logic_error when an augmenting path still exists.
Labeling min_cut_labeling(const ResidualGraph& residual);

struct OracleSolution {
  Labeling labeling;
  double energy = 0.0;
};

/// Exhaustive minimum over all 2^n labelings (n <= 16). Ties go to the
/// lexicographically smallest labeling with FG < BG.
OracleSolution oracle_min_energy(const UnaryField& unary, const BinaryField& binary,
                                 const RegionAdjacency& adj);

/// Textual dump: "GRAPH v1", "nodes N edges M", then N lines
/// "id cap_src cap_snk res_src res_snk" and M lines
/// "a b cap_fwd cap_bwd res_fwd res_bwd".
void write_graph_dump(std::ostream& os, const FlowGraph& g, const ResidualGraph& r);

}  // namespace biprop
