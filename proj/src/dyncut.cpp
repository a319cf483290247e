#include "biprop/dyncut.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace biprop {
namespace {

std::atomic<long> g_checked_calls{0};
std::atomic<long> g_violations{0};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Net outflow of every node under an antisymmetric edge flow.
std::vector<double> divergence(const std::vector<double>& edge_flow, const RegionAdjacency& adj) {
  std::vector<double> div(adj.region_count(), 0.0);
  for (std::size_t k = 0; k < adj.pairs.size(); ++k) {
    div[static_cast<std::size_t>(adj.pairs[k].a)] += edge_flow[k];
    div[static_cast<std::size_t>(adj.pairs[k].b)] -= edge_flow[k];
  }
  return div;
}

void audit_nonnegative(const ResidualFields& f) {
  ++g_checked_calls;
  auto bad = [](double v) { return !(v >= 0.0); };
  bool violated = std::ranges::any_of(f.res_src, bad) || std::ranges::any_of(f.res_snk, bad);
  for (const auto& w : f.res_binary) violated = violated || bad(w.forward) || bad(w.backward);
  if (violated) {
    ++g_violations;
    throw std::logic_error("propagated residual has a negative value");
  }
}

struct Propagated {
  ResidualFields residual;
  std::vector<double> node_divergence;  // filtered net terminal flow
  std::vector<double> edge_flow;        // filtered edge flow a->b
};

// Residual channels, plus the consumed flow when with_flow is set, through
// one filtering call per lattice.
Propagated propagate_all(const ResidualFields& fields, const std::vector<double>* edge_flow,
                         const FrameRegions& prev, const FrameRegions& cur, const Image& guide_prev,
                         const Image& guide_cur, const PermeabilityParams& p) {
  if (fields.node_count() != prev.node_count() ||
      fields.res_binary.size() != prev.adjacency.pairs.size()) {
    throw std::invalid_argument("propagate_residual: fields do not match the previous frame");
  }
  NodeChannels nodes{fields.res_src, fields.res_snk};
  std::vector<BinaryField> edges{fields.res_binary};
  if (edge_flow) {
    nodes.push_back(divergence(*edge_flow, prev.adjacency));
    BinaryField flow(edge_flow->size());
    for (std::size_t k = 0; k < flow.size(); ++k) flow[k] = {(*edge_flow)[k], -(*edge_flow)[k]};
    edges.push_back(std::move(flow));
  }
  auto n = propagate_node_channels(nodes, prev, cur, guide_prev, guide_cur, p);
  auto e = propagate_edge_channels(edges, prev, cur, guide_prev, guide_cur, p);

  Propagated out;
  out.residual = {std::move(n[0]), std::move(n[1]), std::move(e[0])};
  audit_nonnegative(out.residual);
  if (edge_flow) {
    out.node_divergence = std::move(n[2]);
    out.edge_flow.resize(e[1].size());
    for (std::size_t k = 0; k < e[1].size(); ++k) out.edge_flow[k] = e[1][k].forward;
  }
  return out;
}

}  // namespace

ResidualFields extract_residual(const ResidualGraph& residual, const RegionAdjacency& adj) {
  if (residual.ends.size() != adj.pairs.size()) {
    throw std::invalid_argument("extract_residual: adjacency mismatch");
  }
  return {residual.res_src, residual.res_snk, residual.res};
}

ResidualFields propagate_residual(const ResidualFields& fields, const FrameRegions& prev,
                                  const FrameRegions& cur, const Image& guide_prev,
                                  const Image& guide_cur, const PermeabilityParams& p) {
  return propagate_all(fields, nullptr, prev, cur, guide_prev, guide_cur, p).residual;
}

ResidualAudit residual_audit() { return {g_checked_calls.load(), g_violations.load()}; }

DynState make_state(std::size_t frame_index, const FrameRegions& regions, const Energy& energy,
                    const FlowResult& solved, bool keep_energy) {
  DynState s;
  s.frame_index = frame_index;
  s.residual = extract_residual(solved.residual, regions.adjacency);
  s.edge_flow.resize(energy.binary.size());
  for (std::size_t k = 0; k < energy.binary.size(); ++k) {
    s.edge_flow[k] = energy.binary[k].forward - solved.residual.res[k].forward;
  }
  s.regions = regions;
  if (keep_energy) s.full_energy = energy;
  return s;
}

Energy equivalent_energy(const DynState& state) {
  const auto div = divergence(state.edge_flow, state.regions.adjacency);
  Energy e;
  e.unary.resize(state.residual.node_count());
  for (std::size_t i = 0; i < e.unary.size(); ++i) {
    e.unary[i].bg = state.residual.res_src[i] + std::max(div[i], 0.0);
    e.unary[i].fg = state.residual.res_snk[i] + std::max(-div[i], 0.0);
  }
  e.binary.resize(state.residual.res_binary.size());
  for (std::size_t k = 0; k < e.binary.size(); ++k) {
    const auto& r = state.residual.res_binary[k];
    e.binary[k] = {std::max(r.forward + state.edge_flow[k], 0.0),
                   std::max(r.backward - state.edge_flow[k], 0.0)};
  }
  return e;
}

StepResult dynamic_step(const DynState& state, const FrameRegions& cur, const Image& frame_prev,
                        const Image& frame_cur, const PermeabilityParams& p,
                        const DynamicOptions& options) {
  StepResult out;
  auto t0 = Clock::now();
  Propagated prop = propagate_all(state.residual, options.repair_excess ? &state.edge_flow : nullptr,
                                  state.regions, cur, frame_prev, frame_cur, p);

  FlowGraph g;
  const std::size_t n = cur.node_count();
  g.cap_src = prop.residual.res_src;
  g.cap_snk = prop.residual.res_snk;
  if (options.repair_excess) {
    const auto div = divergence(prop.edge_flow, cur.adjacency);
    for (std::size_t i = 0; i < n; ++i) {
      const double excess = prop.node_divergence[i] - div[i];
      g.cap_snk[i] -= excess;
      if (g.cap_snk[i] < 0.0) {
        g.cap_src[i] -= g.cap_snk[i];
        g.cap_snk[i] = 0.0;
      }
    }
  }
  g.ends.resize(cur.adjacency.pairs.size());
  for (std::size_t k = 0; k < g.ends.size(); ++k) {
    g.ends[k] = {cur.adjacency.pairs[k].a, cur.adjacency.pairs[k].b};
  }
  g.cap = prop.residual.res_binary;
  out.propagate_seconds = seconds_since(t0);

  t0 = Clock::now();
  ResidualGraph r = residual_of(g);
  MaxFlowSolver solver;
  out.flow_value = solver.augment(r, out.stats);
  out.labeling = min_cut_labeling(r);
  out.solve_seconds = seconds_since(t0);

  out.state.frame_index = state.frame_index + 1;
  out.state.edge_flow.resize(g.ends.size());
  for (std::size_t k = 0; k < g.ends.size(); ++k) {
    const double pushed = g.cap[k].forward - r.res[k].forward;
    out.state.edge_flow[k] = (options.repair_excess ? prop.edge_flow[k] : 0.0) + pushed;
  }
  out.state.residual = extract_residual(r, cur.adjacency);
  out.state.regions = cur;
  out.graph = std::move(g);
  return out;
}

Verification verify_step(const DynState& state, const StepResult& dynamic, const FrameRegions& cur,
                         const Image& frame_prev, const Image& frame_cur,
                         const PermeabilityParams& p) {
  if (!state.full_energy) throw std::invalid_argument("verify_step: state carries no full energy");
  Verification v;
  v.full_energy = propagate_energy(*state.full_energy, state.regions, cur, frame_prev, frame_cur, p);
  v.scratch = max_flow(build_graph(v.full_energy.unary, v.full_energy.binary, cur.adjacency));
  v.scratch_labeling = min_cut_labeling(v.scratch.residual);
  v.energy_dynamic = energy_of(dynamic.labeling, v.full_energy, cur.adjacency);
  v.energy_scratch = energy_of(v.scratch_labeling, v.full_energy, cur.adjacency);
  v.discrepancy = std::abs(v.energy_dynamic - v.energy_scratch) /
                  std::max(v.energy_scratch, 1e-12);
  return v;
}

}  // namespace biprop
