#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "aerolabel/classification.hpp"
#include "aerolabel/error.hpp"
#include "aerolabel/project.hpp"

namespace aerolabel {

inline constexpr std::string_view kServiceName = "aerolabel";

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  std::filesystem::path data_root = "data";
  std::optional<std::filesystem::path> web_root;
  SegmenterParams default_segmenter;
  std::uint8_t overlay_alpha = 160;
  std::size_t workers = 1;
};

enum class JobStatus { Queued, Running, Done, Failed };
std::string_view to_string(JobStatus status);

struct JobView {
  std::string job_id;
  std::string project_id;
  std::string kind;
  JobStatus status = JobStatus::Queued;
  double progress = 0.0;
  nlohmann::json result;
  std::optional<ErrorCode> error_code;
  std::string error_message;
};

/// Payload plus the project revision it was produced from.
template <typename T>
struct Revisioned {
  T value;
  std::uint64_t revision = 0;
};

/// The labeling pipeline behind the HTTP surface. Every public call is
/// thread-safe: reads share a per-project lock, edits take it exclusively, and
/// edits are refused with ProjectLocked while a segment or cluster job is
/// queued or running for that project. Heavy jobs run on a worker pool against
/// a snapshot and publish their result as one revision.
class Workbench {
 public:
  explicit Workbench(ServiceConfig config);
  ~Workbench();
  Workbench(const Workbench&) = delete;
  Workbench& operator=(const Workbench&) = delete;

  const ServiceConfig& config() const { return config_; }
  nlohmann::json health() const;

  nlohmann::json create_project(const std::string& name);
  nlohmann::json list_projects() const;
  nlohmann::json describe_project(const std::string& id) const;
  Project snapshot(const std::string& id) const;

  nlohmann::json put_image(const std::string& id, std::string_view png_bytes);
  Revisioned<std::string> get_image_png(const std::string& id) const;
  Revisioned<std::string> get_label_png(const std::string& id) const;

  std::string start_segment_job(const std::string& id, const nlohmann::json& params);
  std::string start_cluster_job(const std::string& id, const nlohmann::json& params);
  JobView job(const std::string& job_id) const;
  /// Blocks until the job leaves QUEUED/RUNNING or the timeout elapses.
  JobView wait_for_job(const std::string& job_id, std::chrono::milliseconds timeout) const;

  Revisioned<std::string> get_segments(const std::string& id) const;
  nlohmann::json put_segments(const std::string& id, std::string_view raster_bytes);
  /// Applies {"batch_id", "ops": [...]} atomically and in order. Replaying a
  /// batch id returns the original acknowledgment without re-applying.
  nlohmann::json patch_segments(const std::string& id, const nlohmann::json& batch);

  nlohmann::json put_features(const std::string& id, std::string_view table_bytes);

  nlohmann::json get_classes(const std::string& id) const;
  nlohmann::json put_classes(const std::string& id, const nlohmann::json& body);
  nlohmann::json get_class_map(const std::string& id) const;
  nlohmann::json put_class_map(const std::string& id, const nlohmann::json& body);
  nlohmann::json patch_class_map(const std::string& id, const nlohmann::json& body);

  nlohmann::json put_control_points(const std::string& id, const nlohmann::json& body);
  nlohmann::json get_georeference(const std::string& id) const;
  nlohmann::json put_georeference(const std::string& id, const nlohmann::json& body);

  Revisioned<std::string> tile_png(const std::string& id, int z, std::uint32_t x, std::uint32_t y,
                                   std::optional<std::uint8_t> alpha) const;
  nlohmann::json stats(const std::string& id) const;
  Revisioned<nlohmann::json> geojson(const std::string& id) const;
  Revisioned<std::string> bundle(const std::string& id) const;

 private:
  struct Slot {
    mutable std::shared_mutex mutex;
    Project project;
    std::uint64_t revision = 1;
    std::optional<std::string> active_job;
    std::map<std::string, nlohmann::json> acknowledged_batches;
    std::optional<FeatureMatrix> external_features;
  };

  struct JobState {
    JobView view;
  };

  std::shared_ptr<Slot> slot(const std::string& id) const;
  void persist(const Slot& slot) const;
  void commit(Slot& slot);
  void require_unlocked(const Slot& slot) const;
  std::string enqueue_job(const std::shared_ptr<Slot>& slot, const std::string& kind,
                          std::function<void(Slot&)> work,
                          std::function<nlohmann::json(Slot&)> describe);
  void update_job(const std::string& job_id, const std::function<void(JobView&)>& fn);
  void load_existing();
  void worker_loop();
  std::string fresh_id();

  ServiceConfig config_;

  mutable std::shared_mutex projects_mutex_;
  std::map<std::string, std::shared_ptr<Slot>> projects_;

  mutable std::mutex jobs_mutex_;
  mutable std::condition_variable jobs_changed_;
  std::map<std::string, JobState> jobs_;

  std::mutex queue_mutex_;
  std::condition_variable queue_ready_;
  std::deque<std::function<void()>> queue_;
  bool stopping_ = false;
  std::vector<std::thread> workers_;

  std::mutex id_mutex_;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_ = 0;
};

/// HTTP front end for a Workbench; see docs/api.md for the route table.
class HttpService {
 public:
  explicit HttpService(ServiceConfig config);
  ~HttpService();

  /// Binds the listen socket and returns the bound port. Throws IoFailure.
  int bind();
  /// Serves until stop(); call bind() first.
  void run();
  void stop();

  Workbench& workbench();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aerolabel
