#pragma once

// Local HTTP/JSON service: sessions over a frame directory, scribble
// submission per frame, asynchronous segmentation jobs, and PNG retrieval
// of frames, scribbles and masks.
//
//   POST /sessions                        {"frames_path": ...} -> {"id": ...}
//   POST /sessions/{id}/scribbles/{frame} scribble PNG body
//   GET  /sessions/{id}/scribbles/{frame} scribble PNG
//   POST /sessions/{id}/run               JSON run configuration
//   GET  /sessions/{id}/status            {"state", "progress", "frames_done", "message"}
//   GET  /sessions/{id}/masks/{frame}     mask PNG
//   GET  /sessions/{id}/frames/{frame}    frame PNG

#include <filesystem>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "biprop/core.hpp"

namespace httplib {
class Server;
}

namespace biprop {

/// Carries the HTTP status the error maps to.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& message)
      : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct ServiceOptions {
  std::filesystem::path spill_dir;   // when set, masks are also written under <spill_dir>/<id>/
  std::filesystem::path static_dir;  // when set, served at /
};

struct SessionStatus {
  std::string state;  // idle, queued, running, done, failed
  double progress = 0.0;
  std::size_t frames_done = 0;
  std::string message;
};

nlohmann::json to_json(const SessionStatus& s);

class SegmentationService {
 public:
  explicit SegmentationService(ServiceOptions options = {});
  ~SegmentationService();
  SegmentationService(const SegmentationService&) = delete;
  SegmentationService& operator=(const SegmentationService&) = delete;

  void register_routes(httplib::Server& server);

  // Direct forms of the endpoints. Errors are raised as ServiceError.
  std::string create_session(const std::filesystem::path& frames_path);
  void submit_scribbles(const std::string& id, std::size_t frame,
                        const std::vector<unsigned char>& png);
  /// Recognized fields: mode, dynamic, verify, lambda, k_regions, binary,
  /// seed_energy. The first run seeds from frame 0; later runs re-solve from
  /// the earliest frame whose scribbles changed.
  void start_run(const std::string& id, const nlohmann::json& config);
  SessionStatus status(const std::string& id);
  std::vector<unsigned char> mask_png(const std::string& id, std::size_t frame);
  std::vector<unsigned char> frame_png(const std::string& id, std::size_t frame);
  std::vector<unsigned char> scribbles_png(const std::string& id, std::size_t frame);
  /// Blocks until the session's current job, if any, has finished.
  void wait(const std::string& id);

  struct Session;

 private:
  std::shared_ptr<Session> find(const std::string& id);

  ServiceOptions options_;
  std::mutex mutex_;
  std::vector<std::shared_ptr<Session>> sessions_;
};

/// Runs the service until the process is stopped. Returns nonzero when the
/// port cannot be bound.
int serve(const ServiceOptions& options, const std::string& host, int port);

}  // namespace biprop
