#include "biprop/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "biprop/image_io.hpp"
#include "biprop/maxflow.hpp"
#include "biprop/overseg.hpp"

namespace biprop {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string indexed_name(const char* prefix, std::size_t t, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu%s", prefix, t, ext);
  return buf;
}

bool has_marks(const ScribbleMask& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != Scribble::kNone) return true;
  }
  return false;
}

ResidualGraph residual_graph_of(const FlowGraph& g, const ResidualFields& f) {
  return {f.res_src, f.res_snk, g.ends, f.res_binary};
}

}  // namespace

bool VerifyPolicy::applies(std::size_t t) const {
  switch (kind) {
    case Kind::kOff: return false;
    case Kind::kAll: return true;
    case Kind::kSample: return t % static_cast<std::size_t>(every) == 0;
  }
  return false;
}

VerifyPolicy VerifyPolicy::parse(const std::string& text) {
  if (text == "off") return {};
  if (text == "all") return {Kind::kAll, 1};
  const std::string prefix = "sample:";
  if (text.rfind(prefix, 0) == 0) {
    const std::string num = text.substr(prefix.size());
    std::size_t used = 0;
    int k = 0;
    try {
      k = std::stoi(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == num.size() && !num.empty() && k >= 1) return {Kind::kSample, k};
  }
  throw std::invalid_argument("verify must be off, all or sample:K with K >= 1, got '" + text + "'");
}

std::string VerifyPolicy::to_string() const {
  switch (kind) {
    case Kind::kOff: return "off";
    case Kind::kAll: return "all";
    case Kind::kSample: return "sample:" + std::to_string(every);
  }
  return "off";
}

void RunConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be > 0");
  if (k_regions < 1) throw std::invalid_argument("k_regions must be >= 1");
  if (!(gamma_smooth > 0.0)) throw std::invalid_argument("gamma_smooth must be > 0");
  if (verify.kind == VerifyPolicy::Kind::kSample && verify.every < 1) {
    throw std::invalid_argument("verify sample interval must be >= 1");
  }
  if (binary_path == BinaryPath::kSmoothedPotts && dynamic) {
    throw std::invalid_argument("smoothed binaries cannot be combined with the dynamic solver");
  }
}

double RunReport::total_solve_seconds() const {
  double s = 0.0;
  for (const auto& f : frames) s += f.solve_seconds;
  return s;
}

double RunReport::total_propagate_seconds() const {
  double s = 0.0;
  for (const auto& f : frames) s += f.propagate_seconds;
  return s;
}

double RunReport::total_wall_seconds() const {
  double s = 0.0;
  for (const auto& f : frames) s += f.wall_seconds;
  return s;
}

long RunReport::total_augmentations() const {
  long s = 0;
  for (const auto& f : frames) s += f.stats.augmentations;
  return s;
}

long RunReport::total_search_steps() const {
  long s = 0;
  for (const auto& f : frames) s += f.stats.search_steps;
  return s;
}

std::size_t RunReport::fallbacks() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.fallback ? 1 : 0;
  return n;
}

double RunReport::max_discrepancy() const {
  double m = 0.0;
  for (const auto& f : frames) {
    if (f.discrepancy) m = std::max(m, *f.discrepancy);
  }
  return m;
}

void write_report_json(std::ostream& os, const RunReport& report, const RunConfig& cfg) {
  json frames = json::array();
  std::size_t verified = 0;
  for (const auto& f : report.frames) {
    json j = {{"frame", f.frame},
              {"nodes", f.nodes},
              {"edges", f.edges},
              {"dynamic_step", f.dynamic_step},
              {"overseg_seconds", f.overseg_seconds},
              {"propagate_seconds", f.propagate_seconds},
              {"solve_seconds", f.solve_seconds},
              {"wall_seconds", f.wall_seconds},
              {"flow_value", f.flow_value},
              {"augmentations", f.stats.augmentations},
              {"search_steps", f.stats.search_steps},
              {"phases", f.stats.phases},
              {"fallback", f.fallback}};
    if (f.discrepancy) {
      j["discrepancy"] = *f.discrepancy;
      ++verified;
    }
    frames.push_back(std::move(j));
  }
  const auto audit = residual_audit();
  const double n = static_cast<double>(std::max<std::size_t>(report.frames.size(), 1));
  json out = {
      {"config",
       {{"mode", cfg.mode == RegionMode::kPixel ? "pixel" : "superpixel"},
        {"dynamic", cfg.dynamic},
        {"verify", cfg.verify.to_string()},
        {"lambda", cfg.lambda},
        {"k_regions", cfg.k_regions},
        {"binary", cfg.binary_path == BinaryPath::kPropagated ? "propagated" : "smoothed"},
        {"gamma_smooth", cfg.gamma_smooth},
        {"repair_excess", cfg.dyn.repair_excess}}},
      {"frames", std::move(frames)},
      {"totals",
       {{"frames", report.frames.size()},
        {"solve_seconds", report.total_solve_seconds()},
        {"propagate_seconds", report.total_propagate_seconds()},
        {"wall_seconds", report.total_wall_seconds()},
        {"mean_frame_wall_seconds", report.total_wall_seconds() / n},
        {"augmentations", report.total_augmentations()},
        {"search_steps", report.total_search_steps()},
        {"verified_frames", verified},
        {"max_discrepancy", report.max_discrepancy()},
        {"fallbacks", report.fallbacks()}}},
      {"residual_audit", {{"checked_calls", audit.checked_calls}, {"violations", audit.violations}}},
  };
  os << out.dump(2) << '\n';
}

EnergySeed load_energy_seed(const std::filesystem::path& path, int width, int height) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open energy file " + path.string());
  auto fail = [&](const std::string& what) {
    throw IoError("energy file " + path.string() + ": " + what);
  };
  std::string magic, version, regions_kw, edges_kw;
  long n = -1, m = -1;
  if (!(in >> magic >> version) || magic != "ENERGY" || version != "v1") fail("bad header");
  if (!(in >> regions_kw >> n >> edges_kw >> m) || regions_kw != "regions" ||
      edges_kw != "edges" || n < 1 || m < 0) {
    fail("bad size line");
  }

  EnergySeed seed;
  auto map_path = path;
  map_path.replace_extension(".regions.png");
  if (std::filesystem::exists(map_path)) {
    seed.map = load_region_map(map_path);
    if (seed.map.width() != width || seed.map.height() != height) {
      fail("region map size does not match the frames");
    }
  } else if (n == static_cast<long>(width) * height) {
    seed.map = identity_region_map(width, height);
  } else {
    fail("no region map next to the file and node count differs from the pixel count");
  }
  if (seed.map.region_count != n) fail("node count differs from the region map");

  auto check = [&](double v) {
    if (!std::isfinite(v) || v < 0.0) fail("weights must be finite and nonnegative");
  };
  seed.energy.unary.resize(static_cast<std::size_t>(n));
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (long k = 0; k < n; ++k) {
    long id = -1;
    UnaryCost u;
    if (!(in >> id >> u.fg >> u.bg)) fail("truncated region section");
    if (id < 0 || id >= n || seen[static_cast<std::size_t>(id)]) {
      fail("region id " + std::to_string(id) + " is out of range or repeated");
    }
    check(u.fg);
    check(u.bg);
    seen[static_cast<std::size_t>(id)] = true;
    seed.energy.unary[static_cast<std::size_t>(id)] = u;
  }
  const auto adj = region_adjacency(seed.map);
  seed.energy.binary.assign(adj.pairs.size(), {});
  for (long k = 0; k < m; ++k) {
    int a = 0, b = 0;
    double wab = 0.0, wba = 0.0;
    if (!(in >> a >> b >> wab >> wba)) fail("truncated edge section");
    check(wab);
    check(wba);
    const long idx = a >= 0 && b >= 0 && a < n && b < n ? adj.pair_index(a, b) : -1;
    if (idx < 0) fail("pair " + std::to_string(a) + " " + std::to_string(b) + " is not adjacent");
    auto& w = seed.energy.binary[static_cast<std::size_t>(idx)];
    w = a < b ? DirectedWeight{wab, wba} : DirectedWeight{wba, wab};
  }
  return seed;
}

void save_energy_seed(const EnergySeed& seed, const std::filesystem::path& path) {
  const auto adj = region_adjacency(seed.map);
  if (seed.energy.unary.size() != adj.region_count() ||
      seed.energy.binary.size() != adj.pairs.size()) {
    throw std::invalid_argument("energy does not match the region map");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write energy file " + path.string());
  out.precision(17);
  out << "ENERGY v1\nregions " << seed.energy.unary.size() << " edges " << adj.pairs.size()
      << '\n';
  for (std::size_t i = 0; i < seed.energy.unary.size(); ++i) {
    out << i << ' ' << seed.energy.unary[i].fg << ' ' << seed.energy.unary[i].bg << '\n';
  }
  for (std::size_t k = 0; k < adj.pairs.size(); ++k) {
    out << adj.pairs[k].a << ' ' << adj.pairs[k].b << ' ' << seed.energy.binary[k].forward << ' '
        << seed.energy.binary[k].backward << '\n';
  }
  if (!out) throw IoError("failed writing energy file " + path.string());
  auto map_path = path;
  map_path.replace_extension(".regions.png");
  const bool identity = seed.map.ids == identity_region_map(seed.map.width(), seed.map.height()).ids;
  if (!identity) save_region_map(seed.map, map_path);
}

Mask labeling_to_mask(const Labeling& labeling, const RegionMap& map) {
  if (labeling.size() != static_cast<std::size_t>(map.region_count)) {
    throw std::invalid_argument("labeling does not cover the region map");
  }
  Mask mask(map.width(), map.height());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = labeling[static_cast<std::size_t>(map.ids[i])] == Label::kForeground ? 255 : 0;
  }
  return mask;
}

VideoSegmenter::VideoSegmenter(FrameSequence frames, RunConfig cfg)
    : frames_(std::move(frames)), cfg_(std::move(cfg)) {
  frames_.validate();
  cfg_.validate();
  if (!cfg_.output_dir.empty()) std::filesystem::create_directories(cfg_.output_dir);
}

FrameRegions VideoSegmenter::make_regions(std::size_t t) const {
  const Image& frame = frames_[t];
  if (cfg_.mode == RegionMode::kPixel) return pixel_regions(frame.width(), frame.height());
  SlicParams sp;
  sp.k_regions = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg_.k_regions), frame.size()));
  sp.compactness = cfg_.compactness;
  FrameRegions r;
  r.map = slic_segment(frame, sp);
  r.adjacency = region_adjacency(r.map);
  return r;
}

void VideoSegmenter::add_samples(std::size_t t, const ScribbleMask& scribbles) {
  const Image& frame = frames_[t];
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (scribbles[i] == Scribble::kForeground) fg_samples_.push_back(frame[i]);
    if (scribbles[i] == Scribble::kBackground) bg_samples_.push_back(frame[i]);
  }
}

void VideoSegmenter::seed_scribbles(const ScribbleMask& scribbles) {
  if (!scribbles.same_shape(frames_[0])) {
    throw std::invalid_argument("scribble mask does not match the frame size");
  }
  const auto start = Clock::now();
  auto models = fit_color_models(frames_[0], scribbles, cfg_.seed);
  FrameRegions regions = make_regions(0);
  const double overseg = seconds_since(start);
  Energy e;
  e.unary = scribble_unary(frames_[0], models, scribbles, regions.map, cfg_.seed);
  e.binary = potts_binary(frames_[0], regions.adjacency, regions.map, cfg_.gamma_smooth);
  fg_samples_.clear();
  bg_samples_.clear();
  add_samples(0, scribbles);
  models_ = std::move(models);
  snapshots_.clear();
  solve_keyframe(0, std::move(regions), std::move(e), overseg);
}

void VideoSegmenter::seed_energy(const EnergySeed& seed) {
  if (seed.map.width() != frames_.width() || seed.map.height() != frames_.height()) {
    throw std::invalid_argument("energy seed region map does not match the frame size");
  }
  FrameRegions regions{seed.map, region_adjacency(seed.map)};
  if (seed.energy.unary.size() != regions.node_count() ||
      seed.energy.binary.size() != regions.adjacency.pairs.size()) {
    throw std::invalid_argument("energy seed does not match its region map");
  }
  fg_samples_.clear();
  bg_samples_.clear();
  models_.reset();
  snapshots_.clear();
  solve_keyframe(0, std::move(regions), seed.energy, 0.0);
}

void VideoSegmenter::solve_keyframe(std::size_t t, FrameRegions regions, Energy energy,
                                    double overseg_seconds) {
  const auto wall = Clock::now();
  Snapshot s;
  s.report.frame = t;
  s.report.overseg_seconds = overseg_seconds;
  const auto start = Clock::now();
  const FlowGraph g = build_graph(energy.unary, energy.binary, regions.adjacency);
  FlowResult solved = max_flow(g);
  s.labeling = min_cut_labeling(solved.residual);
  s.report.solve_seconds = seconds_since(start);
  s.report.flow_value = solved.flow_value;
  s.report.stats = solved.stats;
  s.report.nodes = regions.node_count();
  s.report.edges = regions.adjacency.pairs.size();
  if (cfg_.dump_graphs && !cfg_.output_dir.empty()) {
    std::ofstream os(cfg_.output_dir / indexed_name("graph", t, ".txt"));
    write_graph_dump(os, g, solved.residual);
  }
  if (cfg_.dynamic) {
    s.state = make_state(t, regions, energy, solved, cfg_.verify.enabled());
  }
  if (!cfg_.dynamic || cfg_.verify.enabled()) s.energy = std::move(energy);
  s.regions = std::move(regions);
  s.report.wall_seconds = seconds_since(wall) + overseg_seconds;
  snapshots_.resize(t);
  snapshots_.push_back(std::move(s));
  emit(t);
}

void VideoSegmenter::solve_next() {
  const std::size_t t = snapshots_.size();
  const auto wall = Clock::now();
  Snapshot s;
  s.report.frame = t;
  auto start = Clock::now();
  s.regions = make_regions(t);
  s.report.overseg_seconds = seconds_since(start);
  s.report.nodes = s.regions.node_count();
  s.report.edges = s.regions.adjacency.pairs.size();
  const Snapshot& prev = snapshots_.back();
  const Image& fprev = frames_[t - 1];
  const Image& fcur = frames_[t];
  const auto p = params();

  if (cfg_.dynamic) {
    StepResult step = dynamic_step(prev.state, s.regions, fprev, fcur, p, cfg_.dyn);
    s.report.dynamic_step = true;
    s.report.propagate_seconds = step.propagate_seconds;
    s.report.solve_seconds = step.solve_seconds;
    s.report.flow_value = step.flow_value;
    s.report.stats = step.stats;
    if (cfg_.dump_graphs && !cfg_.output_dir.empty()) {
      std::ofstream os(cfg_.output_dir / indexed_name("graph", t, ".txt"));
      write_graph_dump(os, step.graph, residual_graph_of(step.graph, step.state.residual));
    }
    std::optional<Verification> v;
    if (cfg_.verify.applies(t)) v = verify_step(prev.state, step, s.regions, fprev, fcur, p);
    s.labeling = std::move(step.labeling);
    s.state = std::move(step.state);
    if (v) {
      s.report.discrepancy = v->discrepancy;
      if (v->discrepancy > cfg_.verify_tolerance) {
        s.report.fallback = true;
        s.labeling = v->scratch_labeling;
        s.state = make_state(t, s.regions, v->full_energy, v->scratch, true);
      }
      s.state.full_energy = std::move(v->full_energy);
    } else if (cfg_.verify.enabled()) {
      s.state.full_energy = propagate_energy(*prev.state.full_energy, prev.regions, s.regions,
                                             fprev, fcur, p);
    }
    if (s.state.full_energy) s.energy = s.state.full_energy;
  } else {
    start = Clock::now();
    Energy e = propagate_energy(*prev.energy, prev.regions, s.regions, fprev, fcur, p);
    if (cfg_.binary_path == BinaryPath::kSmoothedPotts) {
      const double beta = mean_adjacent_distance(fcur);
      e.binary = aggregate_binary(smoothed_potts_binary(fprev, fcur, p, beta > 0.0 ? beta : 1.0),
                                  s.regions.adjacency);
      for (auto& w : e.binary) {
        w.forward *= cfg_.gamma_smooth;
        w.backward *= cfg_.gamma_smooth;
      }
    }
    s.report.propagate_seconds = seconds_since(start);
    start = Clock::now();
    const FlowGraph g = build_graph(e.unary, e.binary, s.regions.adjacency);
    FlowResult solved = max_flow(g);
    s.labeling = min_cut_labeling(solved.residual);
    s.report.solve_seconds = seconds_since(start);
    s.report.flow_value = solved.flow_value;
    s.report.stats = solved.stats;
    if (cfg_.dump_graphs && !cfg_.output_dir.empty()) {
      std::ofstream os(cfg_.output_dir / indexed_name("graph", t, ".txt"));
      write_graph_dump(os, g, solved.residual);
    }
    s.energy = std::move(e);
  }
  s.report.wall_seconds = seconds_since(wall);
  snapshots_.push_back(std::move(s));
  emit(t);
}

void VideoSegmenter::emit(std::size_t t) {
  Snapshot& s = snapshots_[t];
  s.mask = labeling_to_mask(s.labeling, s.regions.map);
  if (cfg_.output_dir.empty()) return;
  save_mask(s.mask, cfg_.output_dir / mask_filename(t));
  if (cfg_.dump_energy) {
    const UnaryPlanes planes = rasterize_unary(frame_energy(t).unary, s.regions.map);
    save_heatmap(planes.fg, cfg_.output_dir / indexed_name("energy_fg", t, ".png"));
    save_heatmap(planes.bg, cfg_.output_dir / indexed_name("energy_bg", t, ".png"));
  }
}

void VideoSegmenter::run(const Progress& progress, std::size_t until) {
  if (snapshots_.empty()) throw std::logic_error("run: frame 0 has not been seeded");
  const std::size_t end = std::min(until, frames_.size());
  while (snapshots_.size() < end) {
    solve_next();
    if (progress) progress(snapshots_.size() - 1, snapshots_.size());
  }
}

void VideoSegmenter::apply_keyframe_correction(std::size_t k, const ScribbleMask& scribbles) {
  if (k >= snapshots_.size()) throw std::out_of_range("correction frame has not been solved");
  if (!scribbles.same_shape(frames_[k])) {
    throw std::invalid_argument("scribble mask does not match the frame size");
  }
  if (!has_marks(scribbles)) return;

  auto fg = fg_samples_, bg = bg_samples_;
  const Image& frame = frames_[k];
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (scribbles[i] == Scribble::kForeground) fg.push_back(frame[i]);
    if (scribbles[i] == Scribble::kBackground) bg.push_back(frame[i]);
  }
  if (fg.empty() || bg.empty()) {
    throw std::invalid_argument(
        "correction needs both FG and BG scribbles when no color models exist");
  }
  ColorModels models = fit_color_models(fg, bg, cfg_.seed);

  FrameRegions regions = snapshots_[k].regions;
  Energy e = frame_energy(k);
  const UnaryField su = scribble_unary(frame, models, scribbles, regions.map, cfg_.seed);
  const auto marks = region_scribbles(scribbles, regions.map);
  for (std::size_t r = 0; r < marks.size(); ++r) {
    if (marks[r] != Scribble::kNone) e.unary[r] = su[r];
  }
  fg_samples_ = std::move(fg);
  bg_samples_ = std::move(bg);
  models_ = std::move(models);
  solve_keyframe(k, std::move(regions), std::move(e), 0.0);
}

std::vector<Mask> VideoSegmenter::masks() const {
  std::vector<Mask> out;
  out.reserve(snapshots_.size());
  for (const auto& s : snapshots_) out.push_back(s.mask);
  return out;
}

Energy VideoSegmenter::frame_energy(std::size_t t) const {
  const Snapshot& s = snapshots_.at(t);
  if (s.energy) return *s.energy;
  return equivalent_energy(s.state);
}

RunReport VideoSegmenter::report() const {
  RunReport r;
  for (const auto& s : snapshots_) r.frames.push_back(s.report);
  return r;
}

SegmentResult segment_video(const FrameSequence& frames, const ScribbleMask* scribbles,
                            const EnergySeed* energy_seed, const RunConfig& cfg) {
  if ((scribbles == nullptr) == (energy_seed == nullptr)) {
    throw std::invalid_argument("exactly one of scribbles or an energy seed is required");
  }
  VideoSegmenter seg(frames, cfg);
  if (scribbles) {
    seg.seed_scribbles(*scribbles);
  } else {
    seg.seed_energy(*energy_seed);
  }
  seg.run();
  SegmentResult out{seg.masks(), seg.report()};
  if (!cfg.output_dir.empty()) {
    std::ofstream report(cfg.output_dir / "report.json");
    write_report_json(report, out.report, cfg);
    if (cfg.verify.enabled()) {
      std::ofstream log(cfg.output_dir / "verify.jsonl");
      for (const auto& f : out.report.frames) {
        if (!f.discrepancy) continue;
        log << json{{"frame", f.frame}, {"discrepancy", *f.discrepancy}, {"fallback", f.fallback}}
                   .dump()
            << '\n';
      }
    }
  }
  return out;
}

}  // namespace biprop
