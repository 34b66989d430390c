#include "aerolabel/service.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <random>
#include <set>

#include "httplib.h"

#include "aerolabel/overlay.hpp"
#include "aerolabel/png_io.hpp"
#include "aerolabel/stats.hpp"
#include "aerolabel/store.hpp"

namespace aerolabel {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::Queued: return "QUEUED";
    case JobStatus::Running: return "RUNNING";
    case JobStatus::Done: return "DONE";
    case JobStatus::Failed: return "FAILED";
  }
  return "UNKNOWN";
}

namespace {

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); }

Point2 parse_point(const json& j) {
  if (!j.is_array() || j.size() != 2) invalid("point must be [x, y]");
  return {j.at(0).get<double>(), j.at(1).get<double>()};
}

std::vector<Point2> parse_points(const json& j) {
  if (!j.is_array()) invalid("expected an array of points");
  std::vector<Point2> out;
  for (const json& p : j) out.push_back(parse_point(p));
  return out;
}

SeedLabels parse_seeds(const json& j) {
  SeedLabels seeds;
  if (j.is_null()) return seeds;
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      std::size_t used = 0;
      const unsigned long id = std::stoul(key, &used);
      if (used != key.size()) invalid("seed key must be a segment id");
      seeds[static_cast<SegmentId>(id)] = value.get<ClassId>();
    }
  } else if (j.is_array()) {
    for (const json& pair : j) seeds[pair.at(0).get<SegmentId>()] = pair.at(1).get<ClassId>();
  } else {
    invalid("seeds must be an object or an array of pairs");
  }
  return seeds;
}

ClassSet parse_class_set(const json& j) {
  const json& list = j.is_object() ? j.at("classes") : j;
  std::vector<ClassDef> defs;
  for (const json& c : list) {
    const auto rgba = c.at("color").get<std::vector<int>>();
    if (rgba.size() != 4 && rgba.size() != 3) invalid("class colour must have 3 or 4 channels");
    for (int v : rgba) {
      if (v < 0 || v > 255) invalid("class colour channel outside 0..255");
    }
    defs.push_back({c.at("id").get<ClassId>(), c.at("name").get<std::string>(),
                    {std::uint8_t(rgba[0]), std::uint8_t(rgba[1]), std::uint8_t(rgba[2]),
                     std::uint8_t(rgba.size() == 4 ? rgba[3] : 255)}});
  }
  return ClassSet(std::move(defs));
}

json class_map_json(const ClassMap& map) {
  json out = json::object();
  for (const auto& [segment, cls] : map) out[std::to_string(segment)] = cls;
  return out;
}

ClassMap parse_class_map(const json& j) {
  ClassMap out;
  const json& body = j.contains("class_map") ? j.at("class_map") : j;
  for (const auto& [key, value] : body.items()) {
    std::size_t used = 0;
    const unsigned long id = std::stoul(key, &used);
    if (used != key.size()) invalid("class map key must be a segment id");
    out[static_cast<SegmentId>(id)] = value.get<ClassId>();
  }
  return out;
}

json georef_json(const std::optional<GeoReference>& g) {
  if (!g) return nullptr;
  const AffineTransform& t = g->transform;
  return {{"coefficients", {t.a, t.b, t.c, t.d, t.e, t.f}}, {"anchor_zoom", g->anchor_zoom}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Workbench

Workbench::Workbench(ServiceConfig config) : config_(std::move(config)) {
  std::random_device rd;
  id_salt_ = (std::uint64_t{rd()} << 32) ^ rd();
  std::error_code ec;
  fs::create_directories(config_.data_root, ec);
  if (ec || !fs::is_directory(config_.data_root)) {
    throw Error(ErrorCode::IoFailure, "data root " + config_.data_root.string() + " is not writable");
  }
  load_existing();
  const std::size_t workers = std::max<std::size_t>(1, config_.workers);
  for (std::size_t i = 0; i < workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

Workbench::~Workbench() {
  {
    std::lock_guard lock(queue_mutex_);
    stopping_ = true;
  }
  queue_ready_.notify_all();
  for (std::thread& t : workers_) t.join();
}

void Workbench::load_existing() {
  for (const auto& entry : fs::directory_iterator(config_.data_root)) {
    if (!entry.is_directory() || !fs::exists(entry.path() / kManifestFile)) continue;
    try {
      auto s = std::make_shared<Slot>();
      s->project = load_project(entry.path());
      projects_[s->project.id] = s;
    } catch (const Error& e) {
      spdlog::warn("skipping project directory {}: {}", entry.path().string(), e.what());
    }
  }
  spdlog::info("loaded {} project(s) from {}", projects_.size(), config_.data_root.string());
}

std::string Workbench::fresh_id() {
  std::lock_guard lock(id_mutex_);
  std::uint64_t x = id_salt_ + 0x9E3779B97F4A7C15ull * ++id_counter_;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  x ^= x >> 31;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

json Workbench::health() const {
  return {{"service", kServiceName}, {"format_version", kFormatVersion}};
}

std::shared_ptr<Workbench::Slot> Workbench::slot(const std::string& id) const {
  std::shared_lock lock(projects_mutex_);
  auto it = projects_.find(id);
  if (it == projects_.end()) throw Error(ErrorCode::NotFound, "no project " + id);
  return it->second;
}

void Workbench::persist(const Slot& s) const { save_project(s.project, config_.data_root / s.project.id); }

void Workbench::commit(Slot& s) {
  ++s.revision;
  s.project.modified = now_seconds();
  persist(s);
}

void Workbench::require_unlocked(const Slot& s) const {
  if (s.active_job) {
    throw Error(ErrorCode::ProjectLocked, "job " + *s.active_job + " is running on this project");
  }
}

json Workbench::create_project(const std::string& name) {
  auto s = std::make_shared<Slot>();
  s->project.id = fresh_id();
  s->project.name = name;
  s->project.created = s->project.modified = now_seconds();
  s->project.segmenter = config_.default_segmenter;
  persist(*s);
  {
    std::unique_lock lock(projects_mutex_);
    projects_[s->project.id] = s;
  }
  return {{"id", s->project.id}, {"revision", s->revision}};
}

json Workbench::list_projects() const {
  std::vector<std::string> ids;
  {
    std::shared_lock lock(projects_mutex_);
    for (const auto& [id, s] : projects_) ids.push_back(id);
  }
  json out = json::array();
  for (const std::string& id : ids) out.push_back(describe_project(id));
  return out;
}

json Workbench::describe_project(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  const Project& p = s->project;
  json out;
  out["id"] = p.id;
  out["name"] = p.name;
  out["revision"] = s->revision;
  out["created"] = p.created;
  out["modified"] = p.modified;
  out["format_version"] = kFormatVersion;
  out["width"] = p.image ? json(p.image->width()) : json(nullptr);
  out["height"] = p.image ? json(p.image->height()) : json(nullptr);
  out["segment_count"] = p.segments ? p.segments->registry().size() : 0;
  out["georeference"] = georef_json(p.georef);
  out["active_job"] = s->active_job ? json(*s->active_job) : json(nullptr);
  out["segmenter"] = {{"k", p.segmenter.k}, {"min_region_size", p.segmenter.min_region_size}};
  return out;
}

Project Workbench::snapshot(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  return s->project;
}

json Workbench::put_image(const std::string& id, std::string_view png_bytes) {
  RasterImage image = decode_png(png_bytes);
  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  require_unlocked(*s);
  set_image(s->project, std::move(image));
  s->external_features.reset();
  commit(*s);
  return {{"revision", s->revision},
          {"width", s->project.image->width()},
          {"height", s->project.image->height()}};
}

Revisioned<std::string> Workbench::get_image_png(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  return {encode_png(require_image(s->project)), s->revision};
}

Revisioned<std::string> Workbench::get_label_png(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  return {encode_png(render_label_image(s->project)), s->revision};
}

// --- jobs -------------------------------------------------------------------

std::string Workbench::enqueue_job(const std::shared_ptr<Slot>& s, const std::string& kind,
                                   std::function<void(Slot&)> apply,
                                   std::function<json(Slot&)> describe) {
  const std::string job_id = fresh_id();
  s->active_job = job_id;
  {
    std::lock_guard lock(jobs_mutex_);
    JobView view;
    view.job_id = job_id;
    view.project_id = s->project.id;
    view.kind = kind;
    jobs_[job_id] = {view};
  }
  auto task = [this, s, job_id, kind, apply = std::move(apply), describe = std::move(describe)] {
    update_job(job_id, [](JobView& v) {
      v.status = JobStatus::Running;
      v.progress = 0.1;
    });
    json result;
    std::optional<Error> failure;
    try {
      apply(*s);
    } catch (const Error& e) {
      failure = e;
    } catch (const std::exception& e) {
      failure = Error(ErrorCode::InvalidArgument, e.what());
    }
    {
      std::unique_lock lock(s->mutex);
      s->active_job.reset();
      s->project.jobs.push_back({job_id, kind, failure ? "FAILED" : "DONE",
                                 failure ? std::string(failure->what()) : std::string()});
      if (!failure) result = describe(*s);
      try {
        persist(*s);
      } catch (const Error& e) {
        spdlog::error("persisting project {} after job {} failed: {}", s->project.id, job_id, e.what());
      }
    }
    update_job(job_id, [&](JobView& v) {
      v.progress = 1.0;
      if (failure) {
        v.status = JobStatus::Failed;
        v.error_code = failure->code();
        v.error_message = failure->what();
      } else {
        v.status = JobStatus::Done;
        v.result = result;
      }
    });
    spdlog::info("job {} ({}) on project {} finished: {}", job_id, kind, s->project.id,
                 failure ? failure->what() : "ok");
  };
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(std::move(task));
  }
  queue_ready_.notify_one();
  return job_id;
}

void Workbench::update_job(const std::string& job_id, const std::function<void(JobView&)>& fn) {
  {
    std::lock_guard lock(jobs_mutex_);
    fn(jobs_.at(job_id).view);
  }
  jobs_changed_.notify_all();
}

void Workbench::worker_loop() {
  while (true) {
    std::function<void()> task;
    {
      std::unique_lock lock(queue_mutex_);
      queue_ready_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

JobView Workbench::job(const std::string& job_id) const {
  std::lock_guard lock(jobs_mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "no job " + job_id);
  return it->second.view;
}

JobView Workbench::wait_for_job(const std::string& job_id, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(jobs_mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "no job " + job_id);
  jobs_changed_.wait_for(lock, timeout, [&] {
    const JobStatus st = it->second.view.status;
    return st == JobStatus::Done || st == JobStatus::Failed;
  });
  return it->second.view;
}

std::string Workbench::start_segment_job(const std::string& id, const json& params) {
  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  require_unlocked(*s);
  SegmenterParams seg = s->project.segmenter;
  if (params.contains("k")) seg.k = params.at("k").get<double>();
  if (params.contains("min_region_size")) seg.min_region_size = params.at("min_region_size").get<std::uint32_t>();
  if (!(seg.k >= 0.0) || seg.min_region_size < 1) invalid("k must be >= 0 and min_region_size >= 1");
  RasterImage image = require_image(s->project);

  auto apply = [seg, image = std::move(image)](Slot& target) {
    SegmentMap segmap = segment_auto(image, seg);
    std::unique_lock lock(target.mutex);
    target.project.segmenter = seg;
    target.project.class_map = default_classification(segmap);
    target.project.segments = std::move(segmap);
    target.external_features.reset();
    ++target.revision;
    target.project.modified = now_seconds();
  };
  auto describe = [](Slot& target) -> json {
    return {{"revision", target.revision},
            {"segment_count", target.project.segments->registry().size()}};
  };
  return enqueue_job(s, "segment", std::move(apply), std::move(describe));
}

std::string Workbench::start_cluster_job(const std::string& id, const json& params) {
  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  require_unlocked(*s);
  const Project& p = s->project;
  const SegmentMap& segmap = require_segments(p);
  if (segmap.registry().empty()) throw Error(ErrorCode::EmptyRegistry, "no segments to cluster");

  ClusterParams cp = p.clustering;
  if (params.contains("k") && params.contains("t")) {
    throw Error(ErrorCode::InvalidStop, "give either k or t, not both");
  }
  if (params.contains("k")) {
    cp.k = params.at("k").get<std::size_t>();
    cp.t.reset();
  } else if (params.contains("t")) {
    cp.t = params.at("t").get<double>();
    cp.k.reset();
  }
  if (params.contains("propagate")) cp.propagate = params.at("propagate").get<bool>();
  if (params.contains("standardize")) cp.standardize = params.at("standardize").get<bool>();
  const SeedLabels seeds = parse_seeds(params.value("seeds", json()));
  const std::size_t n = segmap.registry().size();
  if (cp.k && (*cp.k < 1 || *cp.k > n)) {
    throw Error(ErrorCode::InvalidStop, "k must lie in 1.." + std::to_string(n));
  }
  if (cp.t && !(*cp.t >= 0.0)) throw Error(ErrorCode::InvalidStop, "t must be >= 0");
  for (const auto& [segment, cls] : seeds) {
    if (!segmap.contains(segment)) {
      throw Error(ErrorCode::UnknownSegmentId, "seed segment " + std::to_string(segment) + " is not registered");
    }
    if (!p.classes.contains(cls)) throw Error(ErrorCode::UnknownClass, "seed class " + std::to_string(cls) + " does not exist");
  }

  auto apply = [cp, seeds, image = require_image(p), segmap, classes = p.classes,
                external = s->external_features](Slot& target) {
    FeatureMatrix features;
    if (external) {
      std::set<SegmentId> have(external->segment_ids().begin(), external->segment_ids().end());
      if (have.size() != segmap.registry().size() ||
          !std::equal(have.begin(), have.end(), segmap.registry().begin(),
                      [](SegmentId a, const auto& b) { return a == b.first; })) {
        throw Error(ErrorCode::UnknownSegmentId, "uploaded features do not cover every segment");
      }
      features = *external;
    } else {
      features = extract_features(image, segmap);
    }
    if (cp.standardize) features = standardize(features);
    const ClusterStop stop = cp.k ? ClusterStop::clusters(*cp.k) : ClusterStop::threshold(*cp.t);
    const Clustering clustering = cluster(features, stop);
    Classification result = assign_classes(clustering, features, segmap, classes, seeds, cp.propagate);

    std::unique_lock lock(target.mutex);
    target.project.clustering = cp;
    target.project.classes = std::move(result.class_set);
    target.project.class_map = std::move(result.class_map);
    ++target.revision;
    target.project.modified = now_seconds();
  };
  auto describe = [](Slot& target) -> json {
    std::set<ClassId> used;
    for (const auto& [segment, cls] : target.project.class_map) used.insert(cls);
    return {{"revision", target.revision}, {"class_count", used.size()}};
  };
  return enqueue_job(s, "cluster", std::move(apply), std::move(describe));
}

// --- segment map ------------------------------------------------------------

Revisioned<std::string> Workbench::get_segments(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  return {encode_segment_raster(require_segments(s->project)), s->revision};
}

json Workbench::put_segments(const std::string& id, std::string_view raster_bytes) {
  const SegmentMap uploaded = decode_segment_raster(raster_bytes);
  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  require_unlocked(*s);
  const RasterImage& image = require_image(s->project);
  if (uploaded.width() != image.width() || uploaded.height() != image.height()) {
    throw Error(ErrorCode::DimensionMismatch, "uploaded raster does not match the image");
  }
  SegmentMap segmap = ingest_external_mask(uploaded.width(), uploaded.height(), uploaded.ids());
  s->project.class_map = default_classification(segmap);
  s->project.segments = std::move(segmap);
  s->external_features.reset();
  commit(*s);
  return {{"revision", s->revision}, {"segment_count", s->project.segments->registry().size()}};
}

json Workbench::patch_segments(const std::string& id, const json& batch) {
  if (!batch.is_object() || !batch.contains("batch_id") || !batch.at("batch_id").is_string()) {
    invalid("edit batch needs a string batch_id");
  }
  const std::string batch_id = batch.at("batch_id").get<std::string>();
  const json& ops = batch.value("ops", json::array());
  if (!ops.is_array()) invalid("ops must be an array");

  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  if (auto it = s->acknowledged_batches.find(batch_id); it != s->acknowledged_batches.end()) {
    return it->second;
  }
  require_unlocked(*s);
  SegmentMap segmap = require_segments(s->project);
  json created = json::array();
  for (const json& op : ops) {
    const std::string kind = op.at("op").get<std::string>();
    if (kind == "paint") {
      BrushStroke stroke;
      stroke.polyline = parse_points(op.at("polyline"));
      stroke.radius = op.at("radius").get<double>();
      stroke.target = op.at("target").get<SegmentId>();
      segmap = paint(segmap, stroke);
    } else if (kind == "merge") {
      const auto ids = op.at("ids").get<std::vector<SegmentId>>();
      segmap = merge_segments(segmap, ids);
    } else if (kind == "polygon") {
      const std::vector<Point2> ring = parse_points(op.at("ring"));
      PolygonEdit edit = create_segment_from_polygon(segmap, ring);
      segmap = std::move(edit.segmap);
      created.push_back(edit.new_id);
    } else if (kind == "fill") {
      segmap = fill_unassigned(segmap);
    } else if (kind == "split") {
      segmap = split_disconnected(segmap);
    } else {
      invalid("unknown edit op '" + kind + "'");
    }
  }
  set_segments(s->project, std::move(segmap));
  s->external_features.reset();
  commit(*s);
  json ack = {{"batch_id", batch_id},
              {"revision", s->revision},
              {"segment_count", s->project.segments->registry().size()},
              {"created_ids", created}};
  s->acknowledged_batches[batch_id] = ack;
  return ack;
}

json Workbench::put_features(const std::string& id, std::string_view table_bytes) {
  FeatureTable table = parse_feature_table(table_bytes);
  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  require_unlocked(*s);
  FeatureMatrix features = ingest_external_features(require_segments(s->project),
                                                    std::move(table.segment_ids), std::move(table.rows));
  const json out = {{"rows", features.rows()}, {"dims", features.dims()}, {"revision", s->revision}};
  s->external_features = std::move(features);
  return out;
}

// --- classes ----------------------------------------------------------------

json Workbench::get_classes(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  json out = classes_json(s->project);
  return {{"classes", out.at("classes")}, {"revision", s->revision}};
}

json Workbench::put_classes(const std::string& id, const json& body) {
  ClassSet classes = parse_class_set(body);
  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  require_unlocked(*s);
  // Segments of removed classes fall back to the default class.
  for (auto& [segment, cls] : s->project.class_map) {
    if (!classes.contains(cls)) cls = kDefaultClass;
  }
  s->project.classes = std::move(classes);
  commit(*s);
  return {{"revision", s->revision}};
}

json Workbench::get_class_map(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  return {{"class_map", class_map_json(s->project.class_map)}, {"revision", s->revision}};
}

json Workbench::put_class_map(const std::string& id, const json& body) {
  ClassMap map = parse_class_map(body);
  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  require_unlocked(*s);
  const SegmentMap& segmap = require_segments(s->project);
  for (const auto& [segment, cls] : map) {
    if (!segmap.contains(segment)) {
      throw Error(ErrorCode::UnknownSegmentId, "segment " + std::to_string(segment) + " is not registered");
    }
    if (!s->project.classes.contains(cls)) {
      throw Error(ErrorCode::UnknownClass, "class " + std::to_string(cls) + " does not exist");
    }
  }
  if (!is_total(map, segmap)) throw Error(ErrorCode::PartialClassMap, "class map must cover every segment");
  s->project.class_map = std::move(map);
  commit(*s);
  return {{"revision", s->revision}};
}

json Workbench::patch_class_map(const std::string& id, const json& body) {
  const ClassMap updates = parse_class_map(body);
  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  require_unlocked(*s);
  ClassMap map = s->project.class_map;
  for (const auto& [segment, cls] : updates) {
    map = set_class(map, require_segments(s->project), s->project.classes, segment, cls);
  }
  s->project.class_map = std::move(map);
  commit(*s);
  return {{"revision", s->revision}};
}

// --- georeference -------------------------------------------------------------

json Workbench::put_control_points(const std::string& id, const json& body) {
  std::vector<ControlPointPair> pairs;
  for (const json& cp : body.at("control_points")) {
    const Point2 image = parse_point(cp.at("image"));
    const Point2 geo = parse_point(cp.at("geo"));
    pairs.push_back({image, {geo.x, geo.y}});
  }
  const int zoom = body.value("anchor_zoom", kDefaultAnchorZoom);
  const GeoReference georef = estimate_affine(pairs, zoom);
  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  require_unlocked(*s);
  require_image(s->project);
  s->project.georef = georef;
  s->project.control_points = std::move(pairs);
  commit(*s);
  return {{"revision", s->revision}, {"georeference", georef_json(georef)}};
}

json Workbench::get_georeference(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  json points = json::array();
  for (const ControlPointPair& cp : s->project.control_points) {
    points.push_back({{"image", {cp.image.x, cp.image.y}}, {"geo", {cp.geo.lat, cp.geo.lon}}});
  }
  return {{"georeference", georef_json(s->project.georef)},
          {"control_points", points},
          {"revision", s->revision}};
}

json Workbench::put_georeference(const std::string& id, const json& body) {
  const auto coef = body.at("coefficients").get<std::vector<double>>();
  if (coef.size() != 6) invalid("coefficients must hold a, b, c, d, e, f");
  const GeoReference georef = make_georeference({coef[0], coef[1], coef[2], coef[3], coef[4], coef[5]},
                                                body.value("anchor_zoom", kDefaultAnchorZoom));
  auto s = slot(id);
  std::unique_lock lock(s->mutex);
  require_unlocked(*s);
  require_image(s->project);
  s->project.georef = georef;
  s->project.control_points.clear();
  commit(*s);
  return {{"revision", s->revision}, {"georeference", georef_json(georef)}};
}

// --- read-only products -----------------------------------------------------------

Revisioned<std::string> Workbench::tile_png(const std::string& id, int z, std::uint32_t x,
                                            std::uint32_t y, std::optional<std::uint8_t> alpha) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  const OverlayTile tile = render_overlay_tile(s->project, z, x, y, alpha.value_or(config_.overlay_alpha));
  return {encode_png_rgba(kTilePixels, kTilePixels, tile.pixels), s->revision};
}

json Workbench::stats(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  const SegmentMap& segmap = require_segments(s->project);
  const ClassStats stats = compute_stats(segmap, s->project.class_map, s->project.georef);
  nlohmann::ordered_json doc = stats_document(stats, s->project.classes);
  json out = json::parse(doc.dump());
  out["revision"] = s->revision;
  out["georeferenced"] = s->project.georef.has_value();
  return out;
}

Revisioned<json> Workbench::geojson(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  return {export_geojson(s->project), s->revision};
}

Revisioned<std::string> Workbench::bundle(const std::string& id) const {
  auto s = slot(id);
  std::shared_lock lock(s->mutex);
  return {export_bundle(s->project), s->revision};
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::ProjectLocked: return 409;
    case ErrorCode::IoFailure: return 500;
    default: return 400;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  res.status = status;
  res.set_content(json{{"code", code}, {"message", message}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const json& body) {
  res.status = 200;
  res.set_content(body.dump(), "application/json");
}

void set_revision(httplib::Response& res, std::uint64_t revision) {
  res.set_header("X-Revision", std::to_string(revision));
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

using RouteFn = std::function<void(const httplib::Request&, httplib::Response&)>;

httplib::Server::Handler guarded(RouteFn fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, to_string(ErrorCode::InvalidArgument), e.what());
    } catch (const std::invalid_argument& e) {
      send_error(res, 400, to_string(ErrorCode::InvalidArgument), e.what());
    } catch (const std::out_of_range& e) {
      send_error(res, 400, to_string(ErrorCode::InvalidArgument), e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {} failed: {}", req.method, req.path, e.what());
      send_error(res, 500, "Internal", e.what());
    }
  };
}

json job_json(const JobView& v) {
  json out = {{"job_id", v.job_id},
              {"project_id", v.project_id},
              {"kind", v.kind},
              {"status", to_string(v.status)},
              {"progress", v.progress},
              {"result", v.result}};
  if (v.error_code) {
    out["error"] = {{"code", to_string(*v.error_code)}, {"message", v.error_message}};
  } else {
    out["error"] = nullptr;
  }
  return out;
}

}  // namespace

struct HttpService::Impl {
  explicit Impl(ServiceConfig config) : bench(std::move(config)) { routes(); }

  void routes();

  Workbench bench;
  httplib::Server server;
  int port = -1;
};

void HttpService::Impl::routes() {
  Workbench& wb = bench;
  const std::string P = R"(/projects/([0-9A-Za-z_-]+))";

  if (wb.config().web_root && fs::is_directory(*wb.config().web_root)) {
    server.set_mount_point("/", wb.config().web_root->string());
  }

  server.Get("/health", guarded([&wb](auto&, auto& res) { send_json(res, wb.health()); }));

  server.Get("/projects", guarded([&wb](auto&, auto& res) { send_json(res, wb.list_projects()); }));
  server.Post("/projects", guarded([&wb](const httplib::Request& req, auto& res) {
    const json body = parse_body(req);
    send_json(res, wb.create_project(body.value("name", std::string("untitled"))));
  }));
  server.Get(P, guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.describe_project(req.matches[1]));
  }));

  server.Put(P + "/image", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.put_image(req.matches[1], req.body));
  }));
  server.Get(P + "/image", guarded([&wb](const httplib::Request& req, auto& res) {
    auto out = wb.get_image_png(req.matches[1]);
    set_revision(res, out.revision);
    res.set_content(out.value, "image/png");
  }));
  server.Get(P + "/labels.png", guarded([&wb](const httplib::Request& req, auto& res) {
    auto out = wb.get_label_png(req.matches[1]);
    set_revision(res, out.revision);
    res.set_content(out.value, "image/png");
  }));

  server.Post(P + "/jobs/segment", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, {{"job_id", wb.start_segment_job(req.matches[1], parse_body(req))}});
    res.status = 202;
  }));
  server.Post(P + "/jobs/cluster", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, {{"job_id", wb.start_cluster_job(req.matches[1], parse_body(req))}});
    res.status = 202;
  }));
  server.Get(R"(/jobs/([0-9A-Za-z_-]+))", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, job_json(wb.job(req.matches[1])));
  }));

  server.Get(P + "/segments", guarded([&wb](const httplib::Request& req, auto& res) {
    auto out = wb.get_segments(req.matches[1]);
    set_revision(res, out.revision);
    res.set_content(out.value, "application/octet-stream");
  }));
  server.Put(P + "/segments", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.put_segments(req.matches[1], req.body));
  }));
  server.Patch(P + "/segments", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.patch_segments(req.matches[1], parse_body(req)));
  }));
  server.Put(P + "/features", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.put_features(req.matches[1], req.body));
  }));

  server.Get(P + "/classes", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.get_classes(req.matches[1]));
  }));
  server.Put(P + "/classes", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.put_classes(req.matches[1], parse_body(req)));
  }));
  server.Get(P + "/classmap", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.get_class_map(req.matches[1]));
  }));
  server.Put(P + "/classmap", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.put_class_map(req.matches[1], parse_body(req)));
  }));
  server.Patch(P + "/classmap", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.patch_class_map(req.matches[1], parse_body(req)));
  }));

  server.Put(P + "/control-points", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.put_control_points(req.matches[1], parse_body(req)));
  }));
  server.Get(P + "/georeference", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.get_georeference(req.matches[1]));
  }));
  server.Put(P + "/georeference", guarded([&wb](const httplib::Request& req, auto& res) {
    send_json(res, wb.put_georeference(req.matches[1], parse_body(req)));
  }));

  server.Get(P + R"(/tiles/(\d+)/(\d+)/(\d+)(?:\.png)?)",
             guarded([&wb](const httplib::Request& req, auto& res) {
               std::optional<std::uint8_t> alpha;
               if (req.has_param("alpha")) {
                 const int a = std::stoi(req.get_param_value("alpha"));
                 if (a < 0 || a > 255) invalid("alpha must lie in 0..255");
                 alpha = static_cast<std::uint8_t>(a);
               }
               auto out = wb.tile_png(req.matches[1], std::stoi(req.matches[2]),
                                      static_cast<std::uint32_t>(std::stoul(req.matches[3])),
                                      static_cast<std::uint32_t>(std::stoul(req.matches[4])), alpha);
               set_revision(res, out.revision);
               res.set_content(out.value, "image/png");
             }));
  server.Get(P + "/stats", guarded([&wb](const httplib::Request& req, auto& res) {
    json out = wb.stats(req.matches[1]);
    set_revision(res, out.at("revision").get<std::uint64_t>());
    send_json(res, out);
  }));
  server.Get(P + "/export/geojson", guarded([&wb](const httplib::Request& req, auto& res) {
    auto out = wb.geojson(req.matches[1]);
    set_revision(res, out.revision);
    res.set_content(out.value.dump(), "application/geo+json");
  }));
  server.Get(P + "/export/bundle", guarded([&wb](const httplib::Request& req, auto& res) {
    auto out = wb.bundle(req.matches[1]);
    set_revision(res, out.revision);
    res.set_header("Content-Disposition", "attachment; filename=\"bundle.tar\"");
    res.set_content(out.value, "application/x-tar");
  }));

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "NotFound" : "HttpError", "no such route");
    }
  });
}

HttpService::HttpService(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpService::~HttpService() { stop(); }

int HttpService::bind() {
  const ServiceConfig& cfg = impl_->bench.config();
  if (cfg.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(cfg.host);
  } else {
    impl_->port = impl_->server.bind_to_port(cfg.host, cfg.port) ? cfg.port : -1;
  }
  if (impl_->port < 0) {
    throw Error(ErrorCode::IoFailure, "cannot bind " + cfg.host + ":" + std::to_string(cfg.port));
  }
  spdlog::info("listening on {}:{}", cfg.host, impl_->port);
  return impl_->port;
}

void HttpService::run() { impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

Workbench& HttpService::workbench() { return impl_->bench; }

}  // namespace aerolabel
