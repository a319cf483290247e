#include "biprop/maxflow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace biprop {
namespace {

void check_weight(double w) {
  if (!(w >= 0.0) || !std::isfinite(w)) {
    throw std::invalid_argument("build_graph: negative or non-finite weight");
  }
}

}  // namespace

FlowGraph build_graph(const UnaryField& unary, const BinaryField& binary,
                      const RegionAdjacency& adj) {
  if (binary.size() != adj.pairs.size() ||
      (adj.region_count() != 0 && adj.region_count() != unary.size())) {
    throw std::invalid_argument("build_graph: fields cover different node sets");
  }
  FlowGraph g;
  g.cap_src.resize(unary.size());
  g.cap_snk.resize(unary.size());
  for (std::size_t i = 0; i < unary.size(); ++i) {
    check_weight(unary[i].fg);
    check_weight(unary[i].bg);
    g.cap_src[i] = unary[i].bg;
    g.cap_snk[i] = unary[i].fg;
  }
  g.ends.resize(binary.size());
  g.cap.resize(binary.size());
  for (std::size_t k = 0; k < binary.size(); ++k) {
    check_weight(binary[k].forward);
    check_weight(binary[k].backward);
    g.ends[k] = {adj.pairs[k].a, adj.pairs[k].b};
    g.cap[k] = binary[k];
  }
  return g;
}

ResidualGraph residual_of(const FlowGraph& g) {
  return {g.cap_src, g.cap_snk, g.ends, g.cap};
}

void MaxFlowSolver::build_adjacency(const ResidualGraph& g) {
  const std::size_t n = g.node_count();
  first_.assign(n + 1, 0);
  for (const auto& e : g.ends) {
    ++first_[static_cast<std::size_t>(e.a) + 1];
    ++first_[static_cast<std::size_t>(e.b) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) first_[i + 1] += first_[i];
  arcs_.resize(2 * g.ends.size());
  std::vector<int> fill(first_.begin(), first_.end() - 1);
  for (std::size_t k = 0; k < g.ends.size(); ++k) {
    const auto& e = g.ends[k];
    arcs_[static_cast<std::size_t>(fill[e.a]++)] = {e.b, static_cast<int>(k), true};
    arcs_[static_cast<std::size_t>(fill[e.b]++)] = {e.a, static_cast<int>(k), false};
  }
  level_.resize(n);
  current_.resize(n);
  queue_.reserve(n);
}

bool MaxFlowSolver::build_levels(const ResidualGraph& g, SolveStats& stats) {
  const std::size_t n = g.node_count();
  std::fill(level_.begin(), level_.end(), -1);
  queue_.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (g.res_src[i] > 0.0) {
      level_[i] = 1;
      queue_.push_back(static_cast<int>(i));
    }
  }
  stats.search_steps += static_cast<long>(n);
  sink_level_ = 0;
  for (std::size_t head = 0; head < queue_.size(); ++head) {
    const int u = queue_[head];
    if (sink_level_ != 0 && level_[u] >= sink_level_ - 1) break;
    if (g.res_snk[static_cast<std::size_t>(u)] > 0.0) {
      // Every node of this level may still reach the sink directly.
      sink_level_ = level_[u] + 1;
      continue;
    }
    for (int a = first_[u]; a < first_[u + 1]; ++a) {
      ++stats.search_steps;
      const Arc& arc = arcs_[static_cast<std::size_t>(a)];
      if (level_[arc.to] >= 0) continue;
      const auto& r = g.res[static_cast<std::size_t>(arc.edge)];
      if ((arc.forward ? r.forward : r.backward) > 0.0) {
        level_[arc.to] = level_[u] + 1;
        queue_.push_back(arc.to);
      }
    }
  }
  return sink_level_ != 0;
}

double MaxFlowSolver::augment(ResidualGraph& g, SolveStats& stats) {
  build_adjacency(g);
  const std::size_t n = g.node_count();
  double total = 0.0;
  std::vector<int> path_nodes;
  std::vector<int> path_arcs;

  auto residual = [&](const Arc& arc) -> double& {
    auto& r = g.res[static_cast<std::size_t>(arc.edge)];
    return arc.forward ? r.forward : r.backward;
  };
  auto reverse_residual = [&](const Arc& arc) -> double& {
    auto& r = g.res[static_cast<std::size_t>(arc.edge)];
    return arc.forward ? r.backward : r.forward;
  };

  // Length-two paths source -> i -> sink need no search.
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = std::min(g.res_src[i], g.res_snk[i]);
    if (delta > 0.0) {
      g.res_src[i] -= delta;
      g.res_snk[i] -= delta;
      total += delta;
      ++stats.augmentations;
    }
  }

  while (build_levels(g, stats)) {
    ++stats.phases;
    for (std::size_t i = 0; i < n; ++i) current_[i] = first_[i];
    for (std::size_t s = 0; s < n; ++s) {
      if (level_[s] != 1) continue;
      path_nodes.assign(1, static_cast<int>(s));
      path_arcs.clear();
      while (!path_nodes.empty() && g.res_src[s] > 0.0) {
        const int u = path_nodes.back();
        const auto uu = static_cast<std::size_t>(u);
        if (level_[uu] == sink_level_ - 1 && g.res_snk[uu] > 0.0) {
          // Bottleneck over source arc, path arcs and sink arc.
          double delta = std::min(g.res_src[s], g.res_snk[uu]);
          for (int a : path_arcs) delta = std::min(delta, residual(arcs_[static_cast<std::size_t>(a)]));
          g.res_src[s] -= delta;
          g.res_snk[uu] -= delta;
          std::size_t cut = path_arcs.size();
          for (std::size_t k = 0; k < path_arcs.size(); ++k) {
            const Arc& arc = arcs_[static_cast<std::size_t>(path_arcs[k])];
            residual(arc) -= delta;
            reverse_residual(arc) += delta;
            if (residual(arc) <= 0.0 && cut == path_arcs.size()) cut = k;
          }
          total += delta;
          ++stats.augmentations;
          // Resume from the tail of the first saturated arc.
          path_nodes.resize(cut + 1);
          path_arcs.resize(cut);
          continue;
        }
        bool advanced = false;
        if (level_[uu] < sink_level_ - 1) {
          for (int& a = current_[uu]; a < first_[uu + 1]; ++a) {
            ++stats.search_steps;
            const Arc& arc = arcs_[static_cast<std::size_t>(a)];
            if (level_[arc.to] == level_[uu] + 1 && residual(arc) > 0.0) {
              path_arcs.push_back(a);
              path_nodes.push_back(arc.to);
              advanced = true;
              break;
            }
          }
        }
        if (!advanced) {
          level_[uu] = -1;  // dead end for this phase
          path_nodes.pop_back();
          if (!path_arcs.empty()) {
            path_arcs.pop_back();
            ++current_[static_cast<std::size_t>(path_nodes.back())];
          }
        }
      }
    }
  }
  return total;
}

FlowResult max_flow(const FlowGraph& g) {
  FlowResult result;
  result.residual = residual_of(g);
  MaxFlowSolver solver;
  result.flow_value = solver.augment(result.residual, result.stats);
  return result;
}

Labeling min_cut_labeling(const ResidualGraph& residual) {
  const std::size_t n = residual.node_count();
  std::vector<std::vector<std::pair<int, bool>>> out(n);
  for (std::size_t k = 0; k < residual.ends.size(); ++k) {
    out[static_cast<std::size_t>(residual.ends[k].a)].push_back({static_cast<int>(k), true});
    out[static_cast<std::size_t>(residual.ends[k].b)].push_back({static_cast<int>(k), false});
  }
  Labeling labels(n, Label::kBackground);
  std::vector<int> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (residual.res_src[i] > 0.0) {
      labels[i] = Label::kForeground;
      queue.push_back(static_cast<int>(i));
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto u = static_cast<std::size_t>(queue[head]);
    if (residual.res_snk[u] > 0.0) {
      throw std::logic_error("min_cut_labeling: residual graph still has an augmenting path");
    }
    for (const auto& [k, forward] : out[u]) {
      const auto& e = residual.ends[static_cast<std::size_t>(k)];
      const auto& r = residual.res[static_cast<std::size_t>(k)];
      const int v = forward ? e.b : e.a;
      if ((forward ? r.forward : r.backward) > 0.0 &&
          labels[static_cast<std::size_t>(v)] == Label::kBackground) {
        labels[static_cast<std::size_t>(v)] = Label::kForeground;
        queue.push_back(v);
      }
    }
  }
  return labels;
}

OracleSolution oracle_min_energy(const UnaryField& unary, const BinaryField& binary,
                                 const RegionAdjacency& adj) {
  const std::size_t n = unary.size();
  if (n > 16) throw std::invalid_argument("oracle_min_energy: node count too large");
  OracleSolution best;
  Labeling labels(n);
  bool have = false;
  for (unsigned long m = 0; m < (1UL << n); ++m) {
    // Node 0 is the most significant bit so enumeration is lexicographic.
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = (m >> (n - 1 - i)) & 1UL ? Label::kBackground : Label::kForeground;
    }
    const double e = energy_of(labels, unary, binary, adj);
    if (!have || e < best.energy) {
      best = {labels, e};
      have = true;
    }
  }
  return best;
}

void write_graph_dump(std::ostream& os, const FlowGraph& g, const ResidualGraph& r) {
  os << "GRAPH v1\n";
  os << "nodes " << g.node_count() << " edges " << g.ends.size() << '\n';
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    os << i << ' ' << g.cap_src[i] << ' ' << g.cap_snk[i] << ' ' << r.res_src[i] << ' '
       << r.res_snk[i] << '\n';
  }
  for (std::size_t k = 0; k < g.ends.size(); ++k) {
    os << g.ends[k].a << ' ' << g.ends[k].b << ' ' << g.cap[k].forward << ' ' << g.cap[k].backward
       << ' ' << r.res[k].forward << ' ' << r.res[k].backward << '\n';
  }
}

}  // namespace biprop
