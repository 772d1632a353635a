#include "xclick/service.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "httplib.h"
#include "xclick/edge_map.hpp"
#include "xclick/error.hpp"
#include "xclick/grabcut.hpp"
#include "xclick/image_io.hpp"

namespace xclick {
namespace fs = std::filesystem;

void apply_json(ServiceConfig& c, const Json& j) {
  static const std::set<std::string> known = {"manifest", "event_log", "tolerance", "metric", "pay_per_batch",
                                              "seed", "static_dir", "mask_dir", "segment"};
  if (!j.is_object()) throw Error(ErrorCode::Parse, "service config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::Parse, "unknown service config key '" + key + "'");
  }
  try {
    if (j.contains("manifest")) c.manifest = j.at("manifest").get<std::string>();
    if (j.contains("event_log")) c.event_log = j.at("event_log").get<std::string>();
    if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<int>();
    if (j.contains("metric")) c.metric = distance_metric_from_string(j.at("metric").get<std::string>());
    if (j.contains("pay_per_batch")) c.pay_per_batch = j.at("pay_per_batch").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("static_dir")) c.static_dir = fs::path(j.at("static_dir").get<std::string>());
    if (j.contains("mask_dir")) c.mask_dir = fs::path(j.at("mask_dir").get<std::string>());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("service config: ") + e.what());
  }
  if (j.contains("segment")) apply_json(c.segment, j.at("segment"));
  if (c.tolerance < 0) throw Error(ErrorCode::InvalidArgument, "tolerance must be >= 0");
  if (!(c.pay_per_batch >= 0.0)) throw Error(ErrorCode::InvalidArgument, "pay_per_batch must be >= 0");
}

ServiceConfig load_service_config(const fs::path& path) {
  ServiceConfig c;
  apply_json(c, read_json_file(path));
  return c;
}

namespace {

Response json_response(const Json& body, int status = 200) {
  return {status, "application/json", body.dump()};
}

Response error_response(int status, const std::string& code, const std::string& message) {
  return json_response({{"error", {{"code", code}, {"message", message}}}}, status);
}

Response unknown_worker(const std::string& worker) {
  return error_response(404, "UNKNOWN_WORKER", "worker '" + worker + "' is not registered");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string content_type_for(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char b : digest) {
    out += hex[b >> 4];
    out += hex[b & 15];
  }
  return out;
}

std::string role_name(Role r) { return std::string(to_string(r)); }

// Parses "<prefix><a>-<b>" task ids.
std::optional<std::pair<std::string, std::size_t>> split_task(const std::string& task) {
  const auto dash = task.rfind('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 == task.size()) return std::nullopt;
  std::size_t index = 0;
  for (std::size_t i = dash + 1; i < task.size(); ++i) {
    if (task[i] < '0' || task[i] > '9') return std::nullopt;
    index = index * 10 + static_cast<std::size_t>(task[i] - '0');
  }
  return std::make_pair(task.substr(0, dash), index);
}

std::string qualification_task(int attempt, std::size_t index) {
  return "q" + std::to_string(attempt) + "-" + std::to_string(index);
}

std::string batch_task(const std::string& batch, std::size_t position) {
  return batch + "-" + std::to_string(position);
}

// Role played by each click, in click order.
std::array<Role, 4> click_roles(const ExtremeClicks& clicks) {
  std::array<Role, 4> roles{};
  for (Role r : kAllRoles) roles[static_cast<std::size_t>(clicks.role_to_click[static_cast<std::size_t>(r)])] = r;
  return roles;
}

struct ClickBody {
  std::string task;
  std::vector<Point> points;
  std::optional<std::int64_t> shown_ms;
  std::array<std::optional<std::int64_t>, 4> t_ms{};
};

std::optional<std::int64_t> optional_time(const Json& j, const char* what) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    throw Error(ErrorCode::Parse, std::string(what) + " must be an integer or null");
  }
  return j.get<std::int64_t>();
}

}  // namespace

QualityReport annotation_quality(const ProtocolState& state, const DatasetManifest& manifest) {
  std::map<std::string, const ManifestEntry*> by_id;
  for (const ManifestEntry& e : manifest.entries) by_id[e.id] = &e;
  std::map<std::string, BoundingBox> truth_cache;
  std::vector<BoxPair> pairs;
  for (const Annotation& a : state.annotations()) {
    if (a.golden) continue;
    const auto it = by_id.find(a.image);
    if (it == by_id.end()) continue;
    const ManifestEntry& e = *it->second;
    std::optional<BoundingBox> truth = e.box;
    if (!truth && e.mask) {
      auto cached = truth_cache.find(e.id);
      if (cached == truth_cache.end()) cached = truth_cache.emplace(e.id, tight_box_from_mask(load_mask(*e.mask))).first;
      truth = cached->second;
    }
    if (truth) pairs.push_back({a.image, e.class_label, box_from_clicks(a.clicks), *truth});
  }
  return class_metrics(pairs);
}

struct Service::Cache {
  std::mutex mutex;
  std::map<std::string, Json> responses;
  std::map<std::string, std::string> masks;
};

Service::Service(ServiceConfig config) : config_(std::move(config)), cache_(std::make_unique<Cache>()) {
  if (config_.manifest.empty()) throw Error(ErrorCode::InvalidArgument, "service config needs a manifest");
  if (config_.event_log.empty()) throw Error(ErrorCode::InvalidArgument, "service config needs an event_log");
  manifest_ = load_manifest(config_.manifest);
  for (std::size_t i = 0; i < manifest_.entries.size(); ++i) {
    const ManifestEntry& e = manifest_.entries[i];
    by_id_[e.id] = i;
    const std::string where = config_.manifest.string() + ":" + std::to_string(e.line) + ": ";
    if (e.image.empty()) throw Error(ErrorCode::InvalidArgument, where + "served entries need an image");
    if (e.pool != PoolRole::Task && !e.mask) {
      throw Error(ErrorCode::InvalidArgument, where + std::string(to_string(e.pool)) + " entries need a mask");
    }
    if (e.pool == PoolRole::Qualification && qualification_images_.size() < kQualificationImages) {
      qualification_images_.push_back(e.id);
    }
  }
  if (qualification_images_.size() < kQualificationImages) {
    throw Error(ErrorCode::InsufficientPool, "manifest needs " + std::to_string(kQualificationImages) +
                                                 " qualification entries");
  }
  if (config_.mask_dir) fs::create_directories(*config_.mask_dir);
  log_ = std::make_unique<EventLog>(config_.event_log);
  std::size_t line = 0;
  for (const Json& event : log_->replayed()) {
    ++line;
    try {
      state_.apply(event);
    } catch (const Error& err) {
      throw Error(err.code(), config_.event_log.string() + ":" + std::to_string(line) + ": " + err.what());
    }
  }
}

Service::~Service() = default;

const ManifestEntry* Service::entry(const std::string& id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &manifest_.entries[it->second];
}

const std::array<AcceptedArea, 4>& Service::areas_for(const ManifestEntry& e) {
  auto it = areas_.find(e.id);
  if (it == areas_.end()) {
    it = areas_.emplace(e.id, accepted_areas(load_mask(*e.mask), config_.tolerance, config_.metric)).first;
  }
  return it->second;
}

ImageSize Service::image_size(const ManifestEntry& e) {
  auto it = sizes_.find(e.id);
  if (it == sizes_.end()) {
    const RgbImage img = load_image(e.image);
    it = sizes_.emplace(e.id, ImageSize{img.width(), img.height()}).first;
  }
  return it->second;
}

void Service::commit(const Json& event) {
  state_.apply(event);
  try {
    log_->append(event);
  } catch (...) {
    ProtocolState rebuilt;
    for (const Json& e : read_event_log(config_.event_log)) rebuilt.apply(e);
    state_ = std::move(rebuilt);
    throw;
  }
}

Json Service::state_json() const {
  std::lock_guard lock(state_mutex_);
  return state_.to_json();
}

Response Service::register_worker(const std::string& worker) {
  if (worker.empty()) return error_response(400, "BAD_REQUEST", "worker id must not be empty");
  std::lock_guard lock(state_mutex_);
  const bool existed = state_.worker(worker) != nullptr;
  if (!existed) commit(events::registered(worker));
  const WorkerState& w = *state_.worker(worker);
  return json_response({{"worker", worker}, {"registered", !existed}, {"qualified", w.qualified}});
}

Response Service::next_task(const std::string& worker) {
  std::lock_guard lock(state_mutex_);
  return next_locked(worker);
}

Response Service::next_locked(const std::string& worker) {
  const WorkerState* w = state_.worker(worker);
  if (!w) return unknown_worker(worker);

  std::string task, image_id, kind;
  std::size_t index = 0, total = 0;
  if (!w->qualified) {
    if (!w->qualification || w->qualification->status == QualificationStatus::Failed) {
      commit(events::qualification_started(worker, w->qualification_attempts + 1, qualification_images_));
      w = state_.worker(worker);
    }
    const QualificationSession& q = *w->qualification;
    index = *q.next_image();
    total = q.images.size();
    task = qualification_task(q.attempt, index);
    image_id = q.images[index];
    kind = "qualification";
  } else {
    if (!w->current_batch) {
      std::map<std::string, std::vector<const ManifestEntry*>> open, golden;
      for (const ManifestEntry& e : manifest_.entries) {
        if (e.pool == PoolRole::Task && !state_.image_assigned(e.id)) open[e.class_label].push_back(&e);
        if (e.pool == PoolRole::Golden) golden[e.class_label].push_back(&e);
      }
      const auto n = state_.batches().size();
      for (const auto& [cls, pool] : open) {
        if (pool.size() + 1 < static_cast<std::size_t>(kBatchSize) || !golden.count(cls)) continue;
        const Batch b = build_batch("b" + std::to_string(n + 1), worker, pool, golden[cls], config_.seed + n);
        commit(events::batch_opened(b));
        break;
      }
      w = state_.worker(worker);
      if (!w->current_batch) return {204, "application/json", ""};
    }
    const Batch& b = *state_.batch(*w->current_batch);
    index = *b.next_image();
    total = b.images.size();
    task = batch_task(b.id, index);
    image_id = b.images[index];
    kind = "annotation";
  }

  const ManifestEntry& e = *entry(image_id);
  const ImageSize size = image_size(e);
  return json_response({{"task", task},
                        {"kind", kind},
                        {"image", "/api/worker/" + worker + "/tasks/" + task + "/image"},
                        {"class", e.class_label},
                        {"instruction", "Click the left-most, top-most, right-most and bottom-most points of the " +
                                            e.class_label + "."},
                        {"width", size.width},
                        {"height", size.height},
                        {"progress", {{"index", index + 1}, {"total", total}}}});
}

Response Service::post_clicks(const std::string& worker, const std::string& body) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception&) {
    return error_response(400, "BAD_REQUEST", "body is not valid JSON");
  }
  if (!j.is_object()) return error_response(400, "BAD_REQUEST", "body must be a JSON object");
  std::lock_guard lock(state_mutex_);
  const WorkerState* w = state_.worker(worker);
  if (!w) return unknown_worker(worker);

  if (!j.contains("points") || !j.at("points").is_array()) {
    return error_response(400, "CLICK_COUNT", "points must be an array of 4 [x, y] pairs");
  }
  if (j.at("points").size() != 4) {
    return error_response(400, "CLICK_COUNT", "expected 4 clicks, got " + std::to_string(j.at("points").size()));
  }
  if (!j.contains("task") || !j.at("task").is_string()) return error_response(400, "BAD_REQUEST", "task is required");
  try {
    for (const Json& p : j.at("points")) point_from_json(p);
    if (j.contains("t_ms") && (!j.at("t_ms").is_array() || j.at("t_ms").size() != 4)) {
      return error_response(400, "BAD_REQUEST", "t_ms must have 4 entries");
    }
  } catch (const Error& err) {
    return error_response(400, "BAD_REQUEST", err.what());
  }

  if (!w->qualified) return qualification_clicks(worker, j);
  return batch_clicks(worker, j);
}

namespace {

ClickBody read_click_body(const Json& j) {
  ClickBody c;
  c.task = j.at("task").get<std::string>();
  for (const Json& p : j.at("points")) c.points.push_back(point_from_json(p));
  if (j.contains("shown_ms")) c.shown_ms = optional_time(j.at("shown_ms"), "shown_ms");
  if (j.contains("t_ms")) {
    for (std::size_t i = 0; i < 4; ++i) c.t_ms[i] = optional_time(j.at("t_ms")[i], "t_ms entries");
  }
  return c;
}

std::optional<Response> check_bounds(const std::vector<Point>& points, ImageSize size) {
  for (const Point& p : points) {
    if (p.x < 0 || p.y < 0 || p.x >= size.width || p.y >= size.height) {
      return error_response(422, "OUT_OF_BOUNDS", "click (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                                      ") is outside the " + std::to_string(size.width) + "x" +
                                                      std::to_string(size.height) + " image");
    }
  }
  return std::nullopt;
}

}  // namespace

Response Service::qualification_clicks(const std::string& worker, const Json& j) {
  const WorkerState& w = *state_.worker(worker);
  ClickBody c;
  try {
    c = read_click_body(j);
  } catch (const Error& err) {
    return error_response(400, "BAD_REQUEST", err.what());
  }
  if (!w.qualification || w.qualification->status != QualificationStatus::InProgress) {
    return error_response(409, "STALE_TASK", "task '" + c.task + "' is not the current task");
  }
  const QualificationSession& q = *w.qualification;
  const std::size_t index = *q.next_image();
  if (c.task != qualification_task(q.attempt, index)) {
    return error_response(409, "STALE_TASK", "task '" + c.task + "' is not the current task");
  }
  const ManifestEntry& e = *entry(q.images[index]);
  const auto& areas = areas_for(e);
  if (auto bad = check_bounds(c.points, {areas[0].mask.width(), areas[0].mask.height()})) return *bad;

  const ExtremeClicks clicks = infer_roles(c.points);
  const std::array<bool, 4> by_role = check_clicks(clicks, areas);
  const int attempt = q.attempt;
  commit(events::qualification_clicks(worker, attempt, index, c.points, by_role, c.shown_ms, c.t_ms));

  const auto roles = click_roles(clicks);
  Json accepted = Json::array(), roles_json = Json::array();
  for (Role r : roles) {
    accepted.push_back(by_role[static_cast<std::size_t>(r)]);
    roles_json.push_back(role_name(r));
  }
  Json overlays = Json::object();
  const std::string task_url = "/api/worker/" + worker + "/tasks/" + c.task;
  for (Role r : kAllRoles) overlays[role_name(r)] = task_url + "/overlay/" + role_name(r) + ".png";

  const QualificationSession& after = *state_.worker(worker)->qualification;
  std::size_t remaining = 0;
  for (const auto& r : after.results) remaining += r ? 0 : 1;
  return json_response({{"status", "recorded"},
                        {"accepted", accepted},
                        {"roles", roles_json},
                        {"overlays", overlays},
                        {"qualification",
                         {{"status", std::string(to_string(after.status))},
                          {"attempt", after.attempt},
                          {"remaining", remaining}}}});
}

Response Service::batch_clicks(const std::string& worker, const Json& j) {
  const WorkerState& w = *state_.worker(worker);
  ClickBody c;
  try {
    c = read_click_body(j);
  } catch (const Error& err) {
    return error_response(400, "BAD_REQUEST", err.what());
  }
  if (!w.current_batch) return error_response(409, "STALE_TASK", "task '" + c.task + "' is not the current task");
  const Batch& b = *state_.batch(*w.current_batch);
  const std::size_t position = *b.next_image();
  if (c.task != batch_task(b.id, position)) {
    return error_response(409, "STALE_TASK", "task '" + c.task + "' is not the current task");
  }
  const ImageSize size = image_size(*entry(b.images[position]));
  if (auto bad = check_bounds(c.points, size)) return *bad;

  const std::string batch_id = b.id;
  commit(events::batch_clicks(worker, batch_id, position, c.points, c.shown_ms, c.t_ms));
  const Batch& now = *state_.batch(batch_id);
  if (now.next_image()) return json_response({{"status", "recorded"}});

  Batch trial = now;
  const ManifestEntry& golden = *entry(now.images[static_cast<std::size_t>(now.golden_index)]);
  const SubmitOutcome outcome = submit_batch(trial, areas_for(golden));
  commit(events::batch_submitted(worker, batch_id, outcome));
  if (outcome == SubmitOutcome::Blocked) return json_response({{"status", "blocked"}, {"retry", true}});
  return json_response({{"status", "submitted"}});
}

Response Service::qualification_feedback(const std::string& worker) {
  std::lock_guard lock(state_mutex_);
  const WorkerState* w = state_.worker(worker);
  if (!w) return unknown_worker(worker);
  if (!w->qualification) return error_response(409, "NO_QUALIFICATION", "no qualification session yet");
  std::vector<FeedbackItem> items;
  try {
    items = xclick::qualification_feedback(*w->qualification);
  } catch (const Error& err) {
    return error_response(409, "INCOMPLETE", err.what());
  }
  const QualificationSession& q = *w->qualification;
  Json images = Json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string task = qualification_task(q.attempt, i);
    const std::string url = "/api/worker/" + worker + "/tasks/" + task;
    Json clicks = Json::object(), accepted = Json::object(), overlays = Json::object();
    for (Role r : kAllRoles) {
      const auto k = static_cast<std::size_t>(r);
      clicks[role_name(r)] = to_json(items[i].clicks.at(r));
      accepted[role_name(r)] = items[i].accepted[k];
      overlays[role_name(r)] = url + "/overlay/" + role_name(r) + ".png";
    }
    images.push_back({{"task", task},
                      {"image", url + "/image"},
                      {"clicks", clicks},
                      {"accepted", accepted},
                      {"overlays", overlays}});
  }
  return json_response({{"status", std::string(to_string(q.status))},
                        {"attempt", q.attempt},
                        {"retake", q.status == QualificationStatus::Failed},
                        {"images", images}});
}

namespace {

// Entry id behind a task the worker has been shown, if any.
std::optional<std::string> task_entry(const ProtocolState& state, const std::string& worker, const std::string& task) {
  const WorkerState* w = state.worker(worker);
  const auto parts = split_task(task);
  if (!w || !parts) return std::nullopt;
  const auto& [prefix, index] = *parts;
  if (prefix.size() > 1 && prefix[0] == 'q' && w->qualification &&
      prefix == "q" + std::to_string(w->qualification->attempt)) {
    const auto& images = w->qualification->images;
    if (index < images.size()) return images[index];
    return std::nullopt;
  }
  const Batch* b = state.batch(prefix);
  if (b && b->worker == worker && index < b->images.size()) return b->images[index];
  return std::nullopt;
}

}  // namespace

Response Service::task_image(const std::string& worker, const std::string& task) {
  std::optional<std::string> id;
  {
    std::lock_guard lock(state_mutex_);
    if (!state_.worker(worker)) return unknown_worker(worker);
    id = task_entry(state_, worker, task);
  }
  if (!id) return error_response(404, "NOT_FOUND", "no task '" + task + "' for this worker");
  const ManifestEntry& e = *entry(*id);
  return {200, content_type_for(e.image), read_file(e.image)};
}

Response Service::overlay(const std::string& worker, const std::string& task, const std::string& role) {
  Role r;
  try {
    r = role_from_string(role);
  } catch (const Error&) {
    return error_response(404, "NOT_FOUND", "unknown role '" + role + "'");
  }
  std::lock_guard lock(state_mutex_);
  const WorkerState* w = state_.worker(worker);
  if (!w) return unknown_worker(worker);
  const auto id = task_entry(state_, worker, task);
  const auto parts = split_task(task);
  if (!id || !parts || parts->first[0] != 'q' || !w->qualification->results[parts->second]) {
    return error_response(404, "NOT_FOUND", "no overlay for task '" + task + "'");
  }
  const auto png = encode_mask_png(areas_for(*entry(*id))[static_cast<std::size_t>(r)].mask);
  return {200, "image/png", std::string(png.begin(), png.end())};
}

Response Service::segment(const std::string& body) {
  static const std::set<std::string> known = {"image", "clicks", "box", "mode", "config"};
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception&) {
    return error_response(400, "BAD_REQUEST", "body is not valid JSON");
  }
  if (!j.is_object()) return error_response(400, "BAD_REQUEST", "body must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) return error_response(400, "BAD_REQUEST", "unknown key '" + key + "'");
  }
  if (!j.contains("image") || !j.at("image").is_string()) {
    return error_response(400, "BAD_REQUEST", "image must name a manifest entry");
  }
  const ManifestEntry* e = entry(j.at("image").get<std::string>());
  if (!e) return error_response(404, "NOT_FOUND", "unknown image '" + j.at("image").get<std::string>() + "'");

  SegmentConfig cfg = config_.segment;
  std::optional<ExtremeClicks> clicks;
  std::optional<BoundingBox> box;
  try {
    if (j.contains("config")) apply_json(cfg, j.at("config"));
    if (j.contains("mode")) cfg.mode = segment_mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("clicks")) clicks = clicks_from_json(j.at("clicks"));
    if (j.contains("box")) box = box_from_json(j.at("box"));
  } catch (const Error& err) {
    return error_response(400, "BAD_REQUEST", err.what());
  } catch (const Json::exception& err) {
    return error_response(400, "BAD_REQUEST", err.what());
  }
  if (cfg.mode == SegmentMode::Clicks) {
    if (!clicks) return error_response(400, "MISSING_CLICKS", "click mode needs clicks");
    if (!e->edges) return error_response(422, "MISSING_EDGES", "click mode needs an edge map for this image");
  }
  if (!box && clicks) box = box_from_clicks(*clicks);
  if (!box) return error_response(400, "MISSING_BOX", "box mode needs a box or clicks");

  const Json key = {{"image", e->id},
                    {"clicks", clicks ? to_json(*clicks) : Json(nullptr)},
                    {"box", to_json(*box)},
                    {"config", to_json(cfg)}};
  const std::string hash = sha256_hex(key.dump());
  {
    std::lock_guard lock(cache_->mutex);
    const auto hit = cache_->responses.find(hash);
    if (hit != cache_->responses.end()) return json_response(hit->second);
  }

  try {
    const RgbImage image = load_image(e->image);
    if (image.width() > kMaxSegmentSide || image.height() > kMaxSegmentSide) {
      return error_response(413, "IMAGE_TOO_LARGE", "images are limited to " + std::to_string(kMaxSegmentSide) +
                                                        "x" + std::to_string(kMaxSegmentSide));
    }
    std::optional<EdgeMap> edges;
    if (e->edges) edges = load_edge_map(*e->edges, ImageSize{image.width(), image.height()});
    GrabCutInput input;
    input.image = &image;
    input.box = *box;
    input.clicks = clicks;
    input.edges = edges ? &*edges : nullptr;
    input.mode = cfg.mode;
    input.search_margin = cfg.search_margin;
    input.seed = cfg.seed;
    const SegmentationResult seg = grabcut(input, cfg.energy);
    const auto png = encode_mask_png(seg.labeling);
    const Json response = {{"mask", "/api/masks/" + hash + ".png"},
                           {"energy", seg.energy},
                           {"iterations", seg.iterations},
                           {"mode", std::string(to_string(cfg.mode))}};
    if (config_.mask_dir) {
      std::ofstream out(*config_.mask_dir / (hash + ".png"), std::ios::binary);
      out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
    }
    std::lock_guard lock(cache_->mutex);
    cache_->masks.emplace(hash, std::string(png.begin(), png.end()));
    cache_->responses.emplace(hash, response);
    return json_response(response);
  } catch (const Error& err) {
    const int status = err.code() == ErrorCode::Io || err.code() == ErrorCode::Internal ? 500 : 422;
    return error_response(status, to_string(err.code()), err.what());
  }
}

Response Service::mask(const std::string& hash) {
  std::lock_guard lock(cache_->mutex);
  const auto it = cache_->masks.find(hash);
  if (it == cache_->masks.end()) return error_response(404, "NOT_FOUND", "no mask " + hash);
  return {200, "image/png", it->second};
}

Response Service::metrics() {
  std::lock_guard lock(state_mutex_);
  std::size_t qualified = 0, submitted = 0, annotations = 0;
  for (const auto& [id, w] : state_.workers()) qualified += w.qualified ? 1 : 0;
  for (const auto& [id, b] : state_.batches()) submitted += b.status == BatchStatus::Accepted ? 1 : 0;
  for (const Annotation& a : state_.annotations()) annotations += a.golden ? 0 : 1;
  const TimingReport timing = timing_report(state_.click_events(), {config_.pay_per_batch, kBatchSize});
  return json_response({{"workers", state_.workers().size()},
                        {"qualified_workers", qualified},
                        {"batches_opened", state_.batches().size()},
                        {"batches_submitted", submitted},
                        {"annotations", annotations},
                        {"events", state_.event_count()},
                        {"quality", to_json(annotation_quality(state_, manifest_))},
                        {"timing", to_json(timing)}});
}

struct HttpServer::Impl {
  explicit Impl(Service& s) : service(s) {}
  Service& service;
  httplib::Server server;
};

namespace {

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  if (!r.body.empty() || r.status != 204) res.set_content(r.body, r.content_type);
}

}  // namespace

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
  auto& svr = impl_->server;
  Service& s = impl_->service;
  // Without SO_REUSEPORT a second server on a busy port fails to bind.
  svr.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  using Req = httplib::Request;
  using Res = httplib::Response;
  svr.Post(R"(/api/worker/([^/]+)/register)",
           [&s](const Req& req, Res& res) { send(res, s.register_worker(req.matches[1])); });
  svr.Get(R"(/api/worker/([^/]+)/next)", [&s](const Req& req, Res& res) { send(res, s.next_task(req.matches[1])); });
  svr.Post(R"(/api/worker/([^/]+)/clicks)",
           [&s](const Req& req, Res& res) { send(res, s.post_clicks(req.matches[1], req.body)); });
  svr.Get(R"(/api/worker/([^/]+)/qualification/feedback)",
          [&s](const Req& req, Res& res) { send(res, s.qualification_feedback(req.matches[1])); });
  svr.Get(R"(/api/worker/([^/]+)/tasks/([^/]+)/image)",
          [&s](const Req& req, Res& res) { send(res, s.task_image(req.matches[1], req.matches[2])); });
  svr.Get(R"(/api/worker/([^/]+)/tasks/([^/]+)/overlay/([a-z]+)\.png)", [&s](const Req& req, Res& res) {
    send(res, s.overlay(req.matches[1], req.matches[2], req.matches[3]));
  });
  svr.Post("/api/segment", [&s](const Req& req, Res& res) { send(res, s.segment(req.body)); });
  svr.Get(R"(/api/masks/([0-9a-f]+)\.png)", [&s](const Req& req, Res& res) { send(res, s.mask(req.matches[1])); });
  svr.Get("/api/admin/metrics", [&s](const Req&, Res& res) { send(res, s.metrics()); });
  svr.set_exception_handler([](const Req&, Res& res, std::exception_ptr ep) {
    // Details go to the operator log only; messages may name hidden images.
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "xclick: %s\n", e.what());
    } catch (...) {
    }
    send(res, error_response(500, "INTERNAL", "internal error"));
  });
  if (s.config().static_dir) svr.set_mount_point("/", s.config().static_dir->string());
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
  auto& svr = impl_->server;
  if (port == 0) {
    const int bound = svr.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::Io, "cannot bind to " + host);
    return bound;
  }
  if (!svr.bind_to_port(host, port)) throw Error(ErrorCode::Io, "port " + std::to_string(port) + " is not available");
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace xclick
