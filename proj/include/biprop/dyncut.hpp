#pragma once

// Dynamic graph cut across frames with changing graph structure. After a
// frame is solved its residual graph is carried to the next frame by the
// same linear filter that propagates the energies, and the next frame is
// solved from that propagated residual instead of from the full energy.
//
// Filtering a valid flow does not in general preserve flow conservation
// at each node. The consumed flow of every edge is therefore propagated
// alongside the residuals, and each node's conservation excess is folded
// back into its terminal capacities before solving (excess repair). With
// the repair, the residual-graph energy differs from the propagated full
// energy by a constant, so both have the same minimizers.

#include <atomic>
#include <optional>
#include <vector>

#include "biprop/core.hpp"
#include "biprop/ipbe.hpp"
#include "biprop/maxflow.hpp"
#include "biprop/propagate.hpp"

namespace biprop {

struct ResidualFields {
  std::vector<double> res_src;
  std::vector<double> res_snk;
  BinaryField res_binary;  // forward: residual a->b, backward: residual b->a

  std::size_t node_count() const { return res_src.size(); }
};

/// Copies terminal residuals per node and both arc residuals per pair.
ResidualFields extract_residual(const ResidualGraph& residual, const RegionAdjacency& adj);

/// Propagates res_src and res_snk like unary planes and the two arc
/// directions like edge planes. Every output value is checked to be
/// nonnegative; a violation is counted and raised as std::logic_error.
ResidualFields propagate_residual(const ResidualFields& fields, const FrameRegions& prev,
                                  const FrameRegions& cur, const Image& guide_prev,
                                  const Image& guide_cur, const PermeabilityParams& p);

struct ResidualAudit {
  long checked_calls = 0;
  long violations = 0;
};
/// Process-wide counters over all propagate_residual calls.
ResidualAudit residual_audit();

struct DynamicOptions {
  bool repair_excess = true;
};

struct DynState {
  std::size_t frame_index = 0;
  ResidualFields residual;
  std::vector<double> edge_flow;  // consumed capacity a->b per pair (antisymmetric)
  FrameRegions regions;
  std::optional<Energy> full_energy;  // kept only when verifying
};

/// State after a from-scratch solve of `energy` on `regions`.
DynState make_state(std::size_t frame_index, const FrameRegions& regions, const Energy& energy,
                    const FlowResult& solved, bool keep_energy);

/// Energy equivalent to the frame's full energy up to an additive constant,
/// reconstructed from the residual state.
Energy equivalent_energy(const DynState& state);

struct StepResult {
  Labeling labeling;
  DynState state;
  FlowGraph graph;  // the graph that was solved
  double flow_value = 0.0;
  SolveStats stats;
  double propagate_seconds = 0.0;
  double solve_seconds = 0.0;
};

/// Propagates the residual state onto `cur`, builds the graph from it
/// (res_snk as cost_fg, res_src as cost_bg) and solves.
StepResult dynamic_step(const DynState& state, const FrameRegions& cur, const Image& frame_prev,
                        const Image& frame_cur, const PermeabilityParams& p,
                        const DynamicOptions& options = {});

struct Verification {
  double discrepancy = 0.0;
  double energy_dynamic = 0.0;
  double energy_scratch = 0.0;
  Energy full_energy;     // propagated full energy of frame t
  FlowResult scratch;     // from-scratch solve of full_energy
  Labeling scratch_labeling;
};

/// Propagates the full energy of frame t-1 (state.full_energy), solves it
/// from scratch and compares the full energies of both labelings:
/// |E(dynamic) - E(scratch)| / max(E(scratch), eps).
Verification verify_step(const DynState& state, const StepResult& dynamic, const FrameRegions& cur,
                         const Image& frame_prev, const Image& frame_cur,
                         const PermeabilityParams& p);

}  // namespace biprop
