// Command-line front end: run, eval, synth, serve.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "biprop/eval.hpp"
#include "biprop/image_io.hpp"
#include "biprop/pipeline.hpp"
#include "biprop/service.hpp"

namespace fs = std::filesystem;

namespace {

struct RunArgs {
  std::string frames, scribbles, out, seed_energy;
  std::string mode = "superpixel";
  int k_regions = 1000;
  double lambda = 30.0;
  std::string dynamic = "on";
  std::string verify = "off";
  std::string binary = "propagated";
  std::string repair = "on";
  bool dump_energy = false;
  bool dump_graphs = false;
};

int do_run(const RunArgs& a) {
  if (a.scribbles.empty() == a.seed_energy.empty()) {
    throw std::invalid_argument("give exactly one of --scribbles or --seed-energy");
  }
  biprop::RunConfig cfg;
  cfg.mode = a.mode == "pixel" ? biprop::RegionMode::kPixel : biprop::RegionMode::kSuperpixel;
  cfg.k_regions = a.k_regions;
  cfg.lambda = a.lambda;
  cfg.dynamic = a.dynamic == "on";
  cfg.verify = biprop::VerifyPolicy::parse(a.verify);
  cfg.binary_path =
      a.binary == "smoothed" ? biprop::BinaryPath::kSmoothedPotts : biprop::BinaryPath::kPropagated;
  cfg.dyn.repair_excess = a.repair == "on";
  cfg.output_dir = a.out;
  cfg.dump_energy = a.dump_energy;
  cfg.dump_graphs = a.dump_graphs;
  cfg.validate();

  const auto frames = biprop::load_sequence(a.frames);
  std::optional<biprop::ScribbleMask> scribbles;
  std::optional<biprop::EnergySeed> energy;
  if (!a.scribbles.empty()) {
    scribbles = biprop::load_scribbles(a.scribbles);
  } else {
    energy = biprop::load_energy_seed(a.seed_energy, frames.width(), frames.height());
  }
  const auto result = biprop::segment_video(frames, scribbles ? &*scribbles : nullptr,
                                            energy ? &*energy : nullptr, cfg);
  std::cout << "frames " << result.report.frames.size() << "  solve "
            << result.report.total_solve_seconds() << " s  propagate "
            << result.report.total_propagate_seconds() << " s  wall "
            << result.report.total_wall_seconds() << " s";
  if (cfg.verify.enabled()) {
    std::cout << "  max discrepancy " << result.report.max_discrepancy() << "  fallbacks "
              << result.report.fallbacks();
  }
  std::cout << "\nwrote " << (fs::path(a.out) / "report.json").string() << '\n';
  return 0;
}

int do_eval(const std::string& pred, const std::string& gt, const std::string& out) {
  const auto report = biprop::evaluate_dirs(pred, gt);
  std::ofstream os(out);
  if (!os) throw biprop::IoError("cannot write " + out);
  biprop::write_eval_json(os, report);
  const auto m = report.mean();
  std::cout << "frames " << report.frames.size() << "  mean precision " << m.precision
            << "  mean recall " << m.recall << '\n';
  return 0;
}

int do_synth(const biprop::SynthSpec& spec, const std::string& out) {
  const auto seq = biprop::synth_sequence(spec);
  const fs::path root(out);
  biprop::save_sequence(seq.frames, root / "frames");
  fs::create_directories(root / "gt");
  for (std::size_t t = 0; t < seq.gt.size(); ++t) {
    biprop::save_mask(seq.gt[t], root / "gt" / biprop::mask_filename(t));
  }
  biprop::save_scribbles(biprop::synth_scribbles(spec), root / "scribbles.png");
  std::cout << "wrote " << seq.frames.size() << " frames to " << (root / "frames").string()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive video object segmentation with propagated MRF energies"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Segment a frame directory");
  run->add_option("--frames", ra.frames, "Directory of frame_%05d.png")->required();
  run->add_option("--scribbles", ra.scribbles, "Frame-0 scribble PNG (0 none, 128 BG, 255 FG)");
  run->add_option("--out", ra.out, "Output directory")->required();
  run->add_option("--mode", ra.mode)->check(CLI::IsMember({"pixel", "superpixel"}));
  run->add_option("--k-regions", ra.k_regions)->check(CLI::PositiveNumber);
  run->add_option("--lambda", ra.lambda)->check(CLI::PositiveNumber);
  run->add_option("--dynamic", ra.dynamic)->check(CLI::IsMember({"on", "off"}));
  run->add_option("--verify", ra.verify, "off, all or sample:K");
  run->add_option("--binary", ra.binary)->check(CLI::IsMember({"propagated", "smoothed"}));
  run->add_option("--seed-energy", ra.seed_energy, "Frame-0 energy file instead of scribbles");
  run->add_option("--excess-repair", ra.repair, "Conservation repair in dynamic steps")
      ->check(CLI::IsMember({"on", "off"}));
  run->add_flag("--dump-energy", ra.dump_energy, "Write unary heatmaps per frame");
  run->add_flag("--dump-graphs", ra.dump_graphs, "Write solved graphs per frame");

  std::string pred, gt, eval_out;
  auto* eval = app.add_subcommand("eval", "Precision and recall against ground-truth masks");
  eval->add_option("--pred", pred, "Directory of predicted mask_%05d.png")->required();
  eval->add_option("--gt", gt, "Directory of ground-truth mask_%05d.png")->required();
  eval->add_option("--out", eval_out, "JSON report path")->required();

  biprop::SynthSpec spec;
  std::string shape = "disk", synth_out;
  std::vector<double> fg, bg;
  auto* synth = app.add_subcommand("synth", "Render a moving-shape sequence with ground truth");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--width", spec.width);
  synth->add_option("--height", spec.height);
  synth->add_option("--frames", spec.frames);
  synth->add_option("--shape", shape)->check(CLI::IsMember({"disk", "square"}));
  synth->add_option("--radius", spec.radius);
  synth->add_option("--start-x", spec.start_x);
  synth->add_option("--start-y", spec.start_y);
  synth->add_option("--vx", spec.velocity_x, "Pixels per frame");
  synth->add_option("--vy", spec.velocity_y, "Pixels per frame");
  synth->add_option("--fg", fg, "Foreground RGB")->expected(3);
  synth->add_option("--bg", bg, "Background RGB")->expected(3);
  synth->add_option("--noise", spec.noise_sigma, "Gaussian noise sigma");
  synth->add_option("--seed", spec.seed);

  biprop::ServiceOptions so;
  std::string host = "127.0.0.1";
  int port = 8650;
  std::string spill, static_dir;
  auto* serve = app.add_subcommand("serve", "Run the local HTTP service");
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--spill", spill, "Also write session masks under this directory");
  serve->add_option("--static", static_dir, "Directory served at /");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return do_run(ra);
    if (*eval) return do_eval(pred, gt, eval_out);
    if (*synth) {
      spec.shape = shape == "square" ? biprop::SynthShape::kSquare : biprop::SynthShape::kDisk;
      if (fg.size() == 3) spec.fg = {fg[0], fg[1], fg[2]};
      if (bg.size() == 3) spec.bg = {bg[0], bg[1], bg[2]};
      return do_synth(spec, synth_out);
    }
    if (*serve) {
      so.spill_dir = spill;
      so.static_dir = static_dir;
      std::cout << "listening on http://" << host << ':' << port << '\n' << std::flush;
      const int rc = biprop::serve(so, host, port);
      if (rc != 0) std::cerr << "error: cannot listen on " << host << ':' << port << '\n';
      return rc;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
