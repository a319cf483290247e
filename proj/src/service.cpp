#include "biprop/service.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <map>
#include <optional>
#include <random>
#include <thread>

#include "httplib.h"

#include "biprop/image_io.hpp"
#include "biprop/pipeline.hpp"

namespace biprop {

using nlohmann::json;

namespace {

enum class JobState { kIdle, kQueued, kRunning, kDone, kFailed };

const char* state_name(JobState s) {
  switch (s) {
    case JobState::kIdle: return "idle";
    case JobState::kQueued: return "queued";
    case JobState::kRunning: return "running";
    case JobState::kDone: return "done";
    case JobState::kFailed: return "failed";
  }
  return "idle";
}

std::string random_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

bool has_label(const ScribbleMask& s, Scribble label) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == label) return true;
  }
  return false;
}

RunConfig parse_run_config(const json& j, std::optional<std::filesystem::path>& seed_energy) {
  if (!j.is_object()) throw ServiceError(400, "run configuration must be a JSON object");
  RunConfig cfg;
  try {
    if (j.contains("mode")) {
      const auto m = j.at("mode").get<std::string>();
      if (m != "pixel" && m != "superpixel") throw ServiceError(400, "mode must be pixel or superpixel");
      cfg.mode = m == "pixel" ? RegionMode::kPixel : RegionMode::kSuperpixel;
    }
    if (j.contains("dynamic")) {
      const auto& d = j.at("dynamic");
      if (d.is_boolean()) {
        cfg.dynamic = d.get<bool>();
      } else {
        const auto v = d.get<std::string>();
        if (v != "on" && v != "off") throw ServiceError(400, "dynamic must be on or off");
        cfg.dynamic = v == "on";
      }
    }
    if (j.contains("verify")) cfg.verify = VerifyPolicy::parse(j.at("verify").get<std::string>());
    if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
    if (j.contains("k_regions")) cfg.k_regions = j.at("k_regions").get<int>();
    if (j.contains("binary")) {
      const auto b = j.at("binary").get<std::string>();
      if (b != "propagated" && b != "smoothed") {
        throw ServiceError(400, "binary must be propagated or smoothed");
      }
      cfg.binary_path = b == "smoothed" ? BinaryPath::kSmoothedPotts : BinaryPath::kPropagated;
    }
    if (j.contains("seed_energy")) seed_energy = j.at("seed_energy").get<std::string>();
    cfg.validate();
  } catch (const ServiceError&) {
    throw;
  } catch (const std::exception& e) {
    throw ServiceError(400, e.what());
  }
  return cfg;
}

}  // namespace

struct SegmentationService::Session {
  std::string id;
  std::filesystem::path frames_path;
  FrameSequence frames;

  std::mutex mutex;
  std::condition_variable idle_cv;
  std::map<std::size_t, ScribbleMask> scribbles;
  std::map<std::size_t, std::vector<unsigned char>> scribble_bytes;  // last upload, while unmerged
  std::vector<std::size_t> dirty;                                    // frames changed since last run
  std::vector<std::optional<Mask>> masks;
  JobState state = JobState::kIdle;
  double progress = 0.0;
  std::string message;
  std::string last_config;
  std::optional<std::filesystem::path> seed_energy;

  std::unique_ptr<VideoSegmenter> segmenter;  // touched only by the job thread while active
  std::thread worker;
  std::atomic<bool> stop{false};

  bool active() const { return state == JobState::kQueued || state == JobState::kRunning; }

  std::size_t frames_done() const {
    std::size_t n = 0;
    while (n < masks.size() && masks[n]) ++n;
    return n;
  }
};

json to_json(const SessionStatus& s) {
  return {{"state", s.state},
          {"progress", s.progress},
          {"frames_done", s.frames_done},
          {"message", s.message}};
}

SegmentationService::SegmentationService(ServiceOptions options) : options_(std::move(options)) {}

SegmentationService::~SegmentationService() {
  std::vector<std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(mutex_);
    sessions = sessions_;
  }
  for (auto& s : sessions) {
    s->stop = true;
    if (s->worker.joinable()) s->worker.join();
  }
}

std::shared_ptr<SegmentationService::Session> SegmentationService::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  for (auto& s : sessions_) {
    if (s->id == id) return s;
  }
  throw ServiceError(404, "unknown session " + id);
}

std::string SegmentationService::create_session(const std::filesystem::path& frames_path) {
  auto s = std::make_shared<Session>();
  try {
    s->frames = load_sequence(frames_path);
  } catch (const std::exception& e) {
    throw ServiceError(400, e.what());
  }
  s->frames_path = frames_path;
  s->masks.resize(s->frames.size());
  std::lock_guard lock(mutex_);
  do {
    s->id = random_id();
  } while (std::any_of(sessions_.begin(), sessions_.end(),
                       [&](const auto& o) { return o->id == s->id; }));
  sessions_.push_back(s);
  return s->id;
}

void SegmentationService::submit_scribbles(const std::string& id, std::size_t frame,
                                           const std::vector<unsigned char>& png) {
  auto s = find(id);
  ScribbleMask incoming;
  try {
    incoming = decode_scribbles_png(png);
  } catch (const std::exception& e) {
    throw ServiceError(400, e.what());
  }
  std::lock_guard lock(s->mutex);
  if (frame >= s->frames.size()) throw ServiceError(404, "frame out of range");
  if (!incoming.same_shape(s->frames[frame])) {
    throw ServiceError(400, "scribble mask dimensions do not match the frame");
  }
  if (s->active()) throw ServiceError(409, "a job is running for this session");
  auto [it, fresh] = s->scribbles.try_emplace(frame, incoming.width(), incoming.height());
  ScribbleMask& merged = it->second;
  for (std::size_t i = 0; i < incoming.size(); ++i) {
    if (incoming[i] != Scribble::kNone) merged[i] = incoming[i];
  }
  if (merged == incoming) {
    s->scribble_bytes[frame] = png;
  } else {
    s->scribble_bytes.erase(frame);
  }
  if (std::find(s->dirty.begin(), s->dirty.end(), frame) == s->dirty.end()) {
    s->dirty.push_back(frame);
  }
}

void SegmentationService::start_run(const std::string& id, const json& config) {
  auto s = find(id);
  std::optional<std::filesystem::path> seed_energy;
  const RunConfig cfg = parse_run_config(config, seed_energy);
  std::optional<EnergySeed> energy;

  std::unique_lock lock(s->mutex);
  if (s->active()) throw ServiceError(409, "a job is already running for this session");
  if (seed_energy) {
    try {
      energy = load_energy_seed(*seed_energy, s->frames.width(), s->frames.height());
    } catch (const std::exception& e) {
      throw ServiceError(400, e.what());
    }
  } else {
    auto it = s->scribbles.find(0);
    if (it == s->scribbles.end() || !has_label(it->second, Scribble::kForeground) ||
        !has_label(it->second, Scribble::kBackground)) {
      throw ServiceError(400, "seed incomplete: frame 0 needs FG and BG scribbles");
    }
  }
  if (s->worker.joinable()) {
    lock.unlock();
    s->worker.join();
    lock.lock();
  }

  const std::string cfg_key = config.dump();
  const bool full = !s->segmenter || cfg_key != s->last_config || seed_energy != s->seed_energy ||
                    std::find(s->dirty.begin(), s->dirty.end(), 0) != s->dirty.end();
  std::vector<std::size_t> keyframes;
  if (full) {
    for (const auto& [t, _] : s->scribbles) {
      if (t > 0) keyframes.push_back(t);
    }
  } else {
    keyframes = s->dirty;
    std::sort(keyframes.begin(), keyframes.end());
  }
  std::map<std::size_t, ScribbleMask> scribbles = s->scribbles;
  const std::size_t first = full ? 0 : (keyframes.empty() ? s->frames.size() : keyframes.front());
  for (std::size_t t = first; t < s->masks.size(); ++t) s->masks[t].reset();

  s->dirty.clear();
  s->last_config = cfg_key;
  s->seed_energy = seed_energy;
  s->state = JobState::kQueued;
  s->progress = static_cast<double>(s->frames_done()) / static_cast<double>(s->frames.size());
  s->message.clear();
  s->stop = false;

  const std::filesystem::path spill =
      options_.spill_dir.empty() ? std::filesystem::path{} : options_.spill_dir / s->id;
  s->worker = std::thread([s, cfg, full, keyframes, scribbles = std::move(scribbles),
                           energy = std::move(energy), spill] {
    {
      std::lock_guard l(s->mutex);
      s->state = JobState::kRunning;
    }
    auto publish = [&](std::size_t t) {
      if (s->stop) throw std::runtime_error("service shutting down");
      Mask m = s->segmenter->mask(t);
      if (!spill.empty()) {
        std::filesystem::create_directories(spill);
        save_mask(m, spill / mask_filename(t));
      }
      std::lock_guard l(s->mutex);
      for (std::size_t u = t + 1; u < s->masks.size(); ++u) s->masks[u].reset();
      s->masks[t] = std::move(m);
      const double p =
          static_cast<double>(s->frames_done()) / static_cast<double>(s->frames.size());
      s->progress = std::max(s->progress, p);
    };
    try {
      if (full) {
        s->segmenter = std::make_unique<VideoSegmenter>(s->frames, cfg);
        if (energy) {
          s->segmenter->seed_energy(*energy);
        } else {
          s->segmenter->seed_scribbles(scribbles.at(0));
        }
        publish(0);
      }
      auto progress = [&](std::size_t t, std::size_t) { publish(t); };
      for (std::size_t k : keyframes) {
        s->segmenter->run(progress, k + 1);
        s->segmenter->apply_keyframe_correction(k, scribbles.at(k));
        publish(k);
      }
      s->segmenter->run(progress);
      std::lock_guard l(s->mutex);
      s->state = JobState::kDone;
      s->progress = 1.0;
    } catch (const std::exception& e) {
      std::lock_guard l(s->mutex);
      s->state = JobState::kFailed;
      s->message = e.what();
      s->segmenter.reset();
    }
    s->idle_cv.notify_all();
  });
}

SessionStatus SegmentationService::status(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return {state_name(s->state), s->progress, s->frames_done(), s->message};
}

std::vector<unsigned char> SegmentationService::mask_png(const std::string& id, std::size_t frame) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (frame >= s->masks.size()) throw ServiceError(404, "frame out of range");
  if (!s->masks[frame]) throw ServiceError(404, "mask not available yet");
  return encode_mask_png(*s->masks[frame]);
}

std::vector<unsigned char> SegmentationService::frame_png(const std::string& id,
                                                          std::size_t frame) {
  auto s = find(id);
  if (frame >= s->frames.size()) throw ServiceError(404, "frame out of range");
  return encode_image_png(s->frames[frame]);
}

std::vector<unsigned char> SegmentationService::scribbles_png(const std::string& id,
                                                              std::size_t frame) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (frame >= s->frames.size()) throw ServiceError(404, "frame out of range");
  if (auto raw = s->scribble_bytes.find(frame); raw != s->scribble_bytes.end()) return raw->second;
  auto it = s->scribbles.find(frame);
  if (it == s->scribbles.end()) {
    return encode_scribbles_png(ScribbleMask(s->frames.width(), s->frames.height()));
  }
  return encode_scribbles_png(it->second);
}

void SegmentationService::wait(const std::string& id) {
  auto s = find(id);
  std::unique_lock lock(s->mutex);
  s->idle_cv.wait(lock, [&] { return !s->active(); });
}

void SegmentationService::register_routes(httplib::Server& server) {
  auto guarded = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      try {
        fn(req, res);
      } catch (const ServiceError& e) {
        res.status = e.status();
        res.set_content(json{{"message", e.what()}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"message", e.what()}}.dump(), "application/json");
      }
    };
  };
  auto frame_of = [](const httplib::Request& req) -> std::size_t {
    try {
      return std::stoul(req.matches[2].str());
    } catch (const std::exception&) {
      throw ServiceError(400, "bad frame index");
    }
  };
  auto png = [](httplib::Response& res, const std::vector<unsigned char>& bytes) {
    res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
  };

  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                json body = json::parse(req.body, nullptr, false);
                if (!body.is_object() || !body.contains("frames_path") ||
                    !body["frames_path"].is_string()) {
                  throw ServiceError(400, "body must be {\"frames_path\": string}");
                }
                const std::string id = create_session(body["frames_path"].get<std::string>());
                res.status = 201;
                res.set_content(json{{"id", id}}.dump(), "application/json");
              }));
  server.Post(R"(/sessions/([0-9a-f]+)/scribbles/(\d+))",
              guarded([this, frame_of](const httplib::Request& req, httplib::Response& res) {
                submit_scribbles(req.matches[1].str(), frame_of(req),
                                 std::vector<unsigned char>(req.body.begin(), req.body.end()));
                res.set_content(json{{"frame", frame_of(req)}}.dump(), "application/json");
              }));
  server.Get(R"(/sessions/([0-9a-f]+)/scribbles/(\d+))",
             guarded([this, frame_of, png](const httplib::Request& req, httplib::Response& res) {
               png(res, scribbles_png(req.matches[1].str(), frame_of(req)));
             }));
  server.Post(R"(/sessions/([0-9a-f]+)/run)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                json body = req.body.empty() ? json::object() : json::parse(req.body, nullptr, false);
                if (body.is_discarded()) throw ServiceError(400, "body is not valid JSON");
                start_run(req.matches[1].str(), body);
                res.status = 202;
                res.set_content(to_json(status(req.matches[1].str())).dump(), "application/json");
              }));
  server.Get(R"(/sessions/([0-9a-f]+)/status)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               res.set_content(to_json(status(req.matches[1].str())).dump(), "application/json");
             }));
  server.Get(R"(/sessions/([0-9a-f]+)/masks/(\d+))",
             guarded([this, frame_of, png](const httplib::Request& req, httplib::Response& res) {
               png(res, mask_png(req.matches[1].str(), frame_of(req)));
             }));
  server.Get(R"(/sessions/([0-9a-f]+)/frames/(\d+))",
             guarded([this, frame_of, png](const httplib::Request& req, httplib::Response& res) {
               png(res, frame_png(req.matches[1].str(), frame_of(req)));
             }));
  if (!options_.static_dir.empty()) server.set_mount_point("/", options_.static_dir.string());
}

int serve(const ServiceOptions& options, const std::string& host, int port) {
  SegmentationService service(options);
  httplib::Server server;
  service.register_routes(server);
  if (!server.bind_to_port(host, port)) return 1;
  return server.listen_after_bind() ? 0 : 1;
}

}  // namespace biprop
