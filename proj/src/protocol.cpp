#include "xclick/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <tuple>

#include "xclick/error.hpp"

namespace xclick {

std::string_view to_string(DistanceMetric metric) noexcept {
  return metric == DistanceMetric::Chebyshev ? "chebyshev" : "euclidean";
}

DistanceMetric distance_metric_from_string(std::string_view name) {
  if (name == "euclidean") return DistanceMetric::Euclidean;
  if (name == "chebyshev") return DistanceMetric::Chebyshev;
  throw Error(ErrorCode::InvalidArgument, "unknown distance metric '" + std::string(name) + "'");
}

namespace {

constexpr std::int64_t kFar = std::numeric_limits<std::int64_t>::max() / 4;

// 1-D squared distance transform: lower envelope of the parabolas rooted at
// finite samples.
void distance_1d(const std::int64_t* f, std::int64_t* d, int n, std::vector<int>& v,
                 std::vector<double>& z) {
  auto intersect = [&](int p, int q) {
    const double fp = static_cast<double>(f[p]) + static_cast<double>(p) * p;
    const double fq = static_cast<double>(f[q]) + static_cast<double>(q) * q;
    return (fq - fp) / (2.0 * (q - p));
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] >= kFar) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = intersect(v[static_cast<std::size_t>(k)], q);
    while (s <= z[static_cast<std::size_t>(k)]) {
      --k;
      s = intersect(v[static_cast<std::size_t>(k)], q);
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  if (k < 0) {
    std::fill(d, d + n, kFar);
    return;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(k) + 1] < q) ++k;
    const std::int64_t dq = q - v[static_cast<std::size_t>(k)];
    d[q] = dq * dq + f[v[static_cast<std::size_t>(k)]];
  }
}

// Exact squared Euclidean distance to the nearest seed pixel.
std::vector<std::int64_t> squared_distance(const std::vector<char>& seed, int w, int h) {
  std::vector<std::int64_t> g(seed.size());
  for (std::size_t i = 0; i < seed.size(); ++i) g[i] = seed[i] ? 0 : kFar;
  const int n = std::max(w, h);
  std::vector<std::int64_t> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n));
  std::vector<int> v(static_cast<std::size_t>(n));
  std::vector<double> z(static_cast<std::size_t>(n) + 1);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[static_cast<std::size_t>(y)] = g[static_cast<std::size_t>(y) * w + x];
    distance_1d(f.data(), d.data(), h, v, z);
    for (int y = 0; y < h; ++y) g[static_cast<std::size_t>(y) * w + x] = d[static_cast<std::size_t>(y)];
  }
  for (int y = 0; y < h; ++y) {
    std::int64_t* row = g.data() + static_cast<std::size_t>(y) * w;
    std::copy(row, row + w, f.begin());
    distance_1d(f.data(), d.data(), w, v, z);
    std::copy(d.begin(), d.begin() + w, row);
  }
  return g;
}

// Square dilation via separable running maxima.
std::vector<char> chebyshev_dilate(const std::vector<char>& seed, int w, int h, int r) {
  std::vector<char> rows(seed.size(), 0), out(seed.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!seed[static_cast<std::size_t>(y) * w + x]) continue;
      for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx)
        rows[static_cast<std::size_t>(y) * w + xx] = 1;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!rows[static_cast<std::size_t>(y) * w + x]) continue;
      for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy)
        out[static_cast<std::size_t>(yy) * w + x] = 1;
    }
  return out;
}

}  // namespace

AcceptedArea accepted_area(const BinaryMask& truth, Role role, int tolerance, DistanceMetric metric) {
  if (tolerance < 0) throw Error(ErrorCode::InvalidArgument, "tolerance must be >= 0");
  if (truth.count(Label::Object) == 0) throw Error(ErrorCode::EmptyMask, "accepted_area: mask has no object pixels");
  const int w = truth.width(), h = truth.height();
  const BoundingBox box = tight_box_from_mask(truth);

  // Band of object pixels near the extreme coordinate.
  std::vector<char> band(truth.size(), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!truth.is_object(x, y)) continue;
      bool near = false;
      switch (role) {
        case Role::Left: near = x - box.x_min <= tolerance; break;
        case Role::Top: near = y - box.y_min <= tolerance; break;
        case Role::Right: near = box.x_max - x <= tolerance; break;
        case Role::Bottom: near = box.y_max - y <= tolerance; break;
      }
      band[static_cast<std::size_t>(y) * w + x] = near ? 1 : 0;
    }

  AcceptedArea area{role, BinaryMask(w, h), tolerance};
  if (metric == DistanceMetric::Chebyshev) {
    const auto dilated = chebyshev_dilate(band, w, h, tolerance);
    for (std::size_t i = 0; i < dilated.size(); ++i)
      if (dilated[i]) area.mask[i] = Label::Object;
  } else {
    const auto d2 = squared_distance(band, w, h);
    const auto limit = static_cast<std::int64_t>(tolerance) * tolerance;
    for (std::size_t i = 0; i < d2.size(); ++i)
      if (d2[i] <= limit) area.mask[i] = Label::Object;
  }
  return area;
}

std::array<AcceptedArea, 4> accepted_areas(const BinaryMask& truth, int tolerance, DistanceMetric metric) {
  return {accepted_area(truth, Role::Left, tolerance, metric), accepted_area(truth, Role::Top, tolerance, metric),
          accepted_area(truth, Role::Right, tolerance, metric),
          accepted_area(truth, Role::Bottom, tolerance, metric)};
}

ClickCheck validate_click(Point p, const AcceptedArea& area) noexcept {
  if (!area.mask.in_bounds(p)) return {false, true};
  return {area.mask.is_object(p.x, p.y), false};
}

std::array<bool, 4> check_clicks(const ExtremeClicks& clicks, const std::array<AcceptedArea, 4>& areas) noexcept {
  std::array<bool, 4> ok{};
  for (Role r : kAllRoles) {
    const auto i = static_cast<std::size_t>(r);
    ok[i] = validate_click(clicks.at(r), areas[i]).accepted;
  }
  return ok;
}

std::string_view to_string(QualificationStatus status) noexcept {
  switch (status) {
    case QualificationStatus::InProgress: return "in-progress";
    case QualificationStatus::Passed: return "passed";
    case QualificationStatus::Failed: return "failed";
  }
  return "in-progress";
}

QualificationSession::QualificationSession(std::string w, int a, std::vector<std::string> imgs)
    : worker(std::move(w)), attempt(a), images(std::move(imgs)), results(images.size()) {
  if (images.empty()) throw Error(ErrorCode::InvalidArgument, "qualification needs images");
}

std::optional<std::size_t> QualificationSession::next_image() const noexcept {
  for (std::size_t i = 0; i < results.size(); ++i)
    if (!results[i]) return i;
  return std::nullopt;
}

void QualificationSession::record(std::size_t index, ImageClicks result) {
  if (status != QualificationStatus::InProgress) throw Error(ErrorCode::State, "qualification session is closed");
  if (index >= results.size()) throw Error(ErrorCode::OutOfBounds, "qualification image index out of range");
  if (results[index]) throw Error(ErrorCode::State, "qualification image already clicked");
  results[index] = std::move(result);
  if (next_image()) return;
  const bool all = std::all_of(results.begin(), results.end(), [](const auto& r) { return r->all_accepted(); });
  status = all ? QualificationStatus::Passed : QualificationStatus::Failed;
}

std::vector<FeedbackItem> qualification_feedback(const QualificationSession& session) {
  std::string missing;
  for (std::size_t i = 0; i < session.results.size(); ++i) {
    if (session.results[i]) continue;
    missing += (missing.empty() ? "" : ", ") + session.images[i];
  }
  if (!missing.empty()) throw Error(ErrorCode::State, "qualification incomplete, missing clicks for: " + missing);
  std::vector<FeedbackItem> items;
  for (std::size_t i = 0; i < session.results.size(); ++i) {
    items.push_back({session.images[i], session.results[i]->clicks, session.results[i]->accepted});
  }
  return items;
}

std::string_view to_string(BatchStatus status) noexcept {
  return status == BatchStatus::Accepted ? "accepted" : "open";
}

std::optional<std::size_t> Batch::next_image() const noexcept {
  for (std::size_t i = 0; i < clicks.size(); ++i)
    if (!clicks[i]) return i;
  return std::nullopt;
}

Batch build_batch(std::string id, std::string worker, const std::vector<const ManifestEntry*>& pool,
                  const std::vector<const ManifestEntry*>& golden_pool, std::uint64_t seed) {
  constexpr std::size_t kTasks = kBatchSize - 1;
  if (pool.size() < kTasks) {
    throw Error(ErrorCode::InsufficientPool, "batch needs " + std::to_string(kTasks) + " task images, pool has " +
                                                 std::to_string(pool.size()));
  }
  const std::string& cls = pool.front()->class_label;
  for (const auto* e : pool) {
    if (e->class_label != cls) throw Error(ErrorCode::InvalidArgument, "batch pool mixes classes");
  }
  std::vector<const ManifestEntry*> goldens;
  for (const auto* g : golden_pool)
    if (g->class_label == cls) goldens.push_back(g);
  if (goldens.empty()) throw Error(ErrorCode::InsufficientPool, "no golden image of class '" + cls + "'");

  std::mt19937_64 rng(seed);
  const ManifestEntry* golden = goldens[rng() % goldens.size()];
  const int golden_index = static_cast<int>(rng() % kBatchSize);

  Batch b;
  b.id = std::move(id);
  b.worker = std::move(worker);
  b.class_label = cls;
  b.golden_index = golden_index;
  for (std::size_t i = 0; i < kTasks; ++i) b.images.push_back(pool[i]->id);
  b.images.insert(b.images.begin() + golden_index, golden->id);
  b.clicks.resize(b.images.size());
  return b;
}

std::string_view to_string(SubmitOutcome outcome) noexcept {
  return outcome == SubmitOutcome::Accepted ? "accepted" : "blocked";
}

namespace {

void require_complete(const Batch& batch) {
  if (batch.status != BatchStatus::Open) throw Error(ErrorCode::State, "batch " + batch.id + " is not open");
  if (batch.next_image()) throw Error(ErrorCode::State, "batch " + batch.id + " has images without clicks");
}

void settle(Batch& batch, SubmitOutcome outcome) {
  if (outcome == SubmitOutcome::Accepted) {
    batch.status = BatchStatus::Accepted;
  } else {
    ++batch.blocked_submissions;
    batch.clicks[static_cast<std::size_t>(batch.golden_index)].reset();
  }
}

}  // namespace

SubmitOutcome submit_batch(Batch& batch, const std::array<AcceptedArea, 4>& golden_areas) {
  require_complete(batch);
  const auto ok = check_clicks(*batch.clicks[static_cast<std::size_t>(batch.golden_index)], golden_areas);
  const bool pass = ok[0] && ok[1] && ok[2] && ok[3];
  const SubmitOutcome outcome = pass ? SubmitOutcome::Accepted : SubmitOutcome::Blocked;
  settle(batch, outcome);
  return outcome;
}

TimingReport timing_report(const std::vector<ClickEvent>& events, const PayConfig& pay) {
  using Key = std::tuple<std::string, std::string, std::string, int>;
  std::map<Key, std::vector<const ClickEvent*>> groups;
  for (const auto& e : events) groups[{e.worker, e.batch, e.image, e.attempt}].push_back(&e);

  TimingReport r;
  double total = 0.0, first = 0.0, later = 0.0;
  std::set<std::string> batches;
  std::size_t unbatched = 0;
  for (auto& [key, group] : groups) {
    std::array<const ClickEvent*, 4> seq{};
    bool valid = group.size() == 4;
    for (const auto* e : group) {
      if (e->sequence < 1 || e->sequence > 4 || seq[static_cast<std::size_t>(e->sequence - 1)]) {
        valid = false;
        break;
      }
      seq[static_cast<std::size_t>(e->sequence - 1)] = e;
    }
    if (valid) {
      for (const auto* e : seq) valid = valid && e && e->t_ms && e->shown_ms;
    }
    if (valid) {
      std::int64_t prev = *seq[0]->shown_ms;
      for (const auto* e : seq) {
        valid = valid && *e->t_ms >= prev;
        prev = *e->t_ms;
      }
    }
    if (!valid) {
      ++r.incomplete;
      continue;
    }
    const double shown = static_cast<double>(*seq[0]->shown_ms);
    total += (static_cast<double>(*seq[3]->t_ms) - shown) / 1000.0;
    first += (static_cast<double>(*seq[0]->t_ms) - shown) / 1000.0;
    later += (static_cast<double>(*seq[3]->t_ms - *seq[0]->t_ms) / 3.0) / 1000.0;
    ++r.instances;
    if (std::get<1>(key).empty()) {
      ++unbatched;
    } else {
      batches.insert(std::get<1>(key));
    }
  }
  if (r.instances > 0) {
    const auto n = static_cast<double>(r.instances);
    r.mean_total_s = total / n;
    r.mean_first_s = first / n;
    r.mean_later_s = later / n;
    r.total_hours = total / 3600.0;
  }
  const auto size = static_cast<std::size_t>(std::max(1, pay.batch_size));
  r.batches = batches.size() + (unbatched + size - 1) / size;
  r.cost = static_cast<double>(r.batches) * pay.pay_per_batch;
  return r;
}

Json to_json(const TimingReport& r) {
  return {{"instances", r.instances},
          {"incomplete", r.incomplete},
          {"mean_total_s", r.mean_total_s},
          {"mean_first_click_s", r.mean_first_s},
          {"mean_later_click_s", r.mean_later_s},
          {"total_hours", r.total_hours},
          {"batches", r.batches},
          {"cost", r.cost}};
}

// ---------------------------------------------------------------------------
// Event log fold

namespace events {
namespace {

Json base(const char* type, const std::string& worker) {
  return {{"v", ProtocolState::kVersion}, {"type", type}, {"worker", worker}};
}

Json points_json(const std::vector<Point>& points) {
  Json j = Json::array();
  for (Point p : points) j.push_back(to_json(p));
  return j;
}

Json times_json(std::optional<std::int64_t> shown, const std::array<std::optional<std::int64_t>, 4>& t) {
  Json times = Json::array();
  for (const auto& v : t) times.push_back(v ? Json(*v) : Json(nullptr));
  return {{"shown_ms", shown ? Json(*shown) : Json(nullptr)}, {"t_ms", times}};
}

}  // namespace

Json registered(const std::string& worker) { return base("register", worker); }

Json qualification_started(const std::string& worker, int attempt, const std::vector<std::string>& images) {
  Json j = base("qualification_start", worker);
  j["attempt"] = attempt;
  j["images"] = images;
  return j;
}

Json qualification_clicks(const std::string& worker, int attempt, std::size_t index,
                          const std::vector<Point>& points, const std::array<bool, 4>& accepted,
                          std::optional<std::int64_t> shown_ms,
                          const std::array<std::optional<std::int64_t>, 4>& t_ms) {
  Json j = base("qualification_clicks", worker);
  j["attempt"] = attempt;
  j["index"] = index;
  j["points"] = points_json(points);
  j["accepted"] = accepted;
  j.update(times_json(shown_ms, t_ms));
  return j;
}

Json batch_opened(const Batch& b) {
  Json j = base("batch_open", b.worker);
  j["batch"] = b.id;
  j["class"] = b.class_label;
  j["images"] = b.images;
  j["golden_index"] = b.golden_index;
  return j;
}

Json batch_clicks(const std::string& worker, const std::string& batch, std::size_t position,
                  const std::vector<Point>& points, std::optional<std::int64_t> shown_ms,
                  const std::array<std::optional<std::int64_t>, 4>& t_ms) {
  Json j = base("batch_clicks", worker);
  j["batch"] = batch;
  j["position"] = position;
  j["points"] = points_json(points);
  j.update(times_json(shown_ms, t_ms));
  return j;
}

Json batch_submitted(const std::string& worker, const std::string& batch, SubmitOutcome outcome) {
  Json j = base("batch_submit", worker);
  j["batch"] = batch;
  j["outcome"] = std::string(to_string(outcome));
  return j;
}

}  // namespace events

namespace {

std::vector<Point> read_points(const Json& j) {
  std::vector<Point> points;
  for (const Json& p : j.at("points")) points.push_back(point_from_json(p));
  if (points.size() != 4) throw Error(ErrorCode::Parse, "event needs four points");
  return points;
}

std::optional<std::int64_t> read_time(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::int64_t>();
}

std::array<std::optional<std::int64_t>, 4> read_times(const Json& j) {
  std::array<std::optional<std::int64_t>, 4> t{};
  const Json& arr = j.at("t_ms");
  if (!arr.is_array() || arr.size() != 4) throw Error(ErrorCode::Parse, "t_ms must have four entries");
  for (std::size_t i = 0; i < 4; ++i) t[i] = read_time(arr[i]);
  return t;
}

ExtremeClicks clicks_with_times(const std::vector<Point>& points, const std::array<std::optional<std::int64_t>, 4>& t) {
  return infer_roles(points, t);
}

Json clicks_state(const ExtremeClicks& c) {
  Json j = to_json(c);
  Json order = Json::array();
  for (Point p : c.points) order.push_back(to_json(p));
  j["order"] = order;
  return j;
}

}  // namespace

const WorkerState* ProtocolState::worker(const std::string& id) const {
  const auto it = workers_.find(id);
  return it == workers_.end() ? nullptr : &it->second;
}

const Batch* ProtocolState::batch(const std::string& id) const {
  const auto it = batches_.find(id);
  return it == batches_.end() ? nullptr : &it->second;
}

void ProtocolState::apply(const Json& event) {
  // Work on a copy so a rejected event leaves no trace.
  ProtocolState next = *this;
  try {
    next.apply_checked(event);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed event: ") + e.what());
  }
  *this = std::move(next);
}

void ProtocolState::apply_checked(const Json& e) {
  if (!e.is_object() || e.value("v", 0) != kVersion) throw Error(ErrorCode::Parse, "unsupported event version");
  const std::string type = e.at("type").get<std::string>();
  const std::string worker_id = e.at("worker").get<std::string>();

  if (type == "register") {
    workers_.try_emplace(worker_id);
    ++event_count_;
    return;
  }
  auto wit = workers_.find(worker_id);
  if (wit == workers_.end()) throw Error(ErrorCode::State, "unknown worker '" + worker_id + "'");
  WorkerState& w = wit->second;

  if (type == "qualification_start") {
    if (w.qualified) throw Error(ErrorCode::State, "worker already qualified");
    if (w.qualification && w.qualification->status == QualificationStatus::InProgress) {
      throw Error(ErrorCode::State, "qualification already in progress");
    }
    const int attempt = e.at("attempt").get<int>();
    if (attempt != w.qualification_attempts + 1) throw Error(ErrorCode::State, "qualification attempt out of order");
    w.qualification = QualificationSession(worker_id, attempt, e.at("images").get<std::vector<std::string>>());
    w.qualification_attempts = attempt;
  } else if (type == "qualification_clicks") {
    if (!w.qualification || w.qualification->attempt != e.at("attempt").get<int>()) {
      throw Error(ErrorCode::State, "no such qualification attempt");
    }
    const auto points = read_points(e);
    ImageClicks result{clicks_with_times(points, read_times(e)), e.at("accepted").get<std::array<bool, 4>>()};
    w.qualification->record(e.at("index").get<std::size_t>(), std::move(result));
    if (w.qualification->status == QualificationStatus::Passed) w.qualified = true;
  } else if (type == "batch_open") {
    if (!w.qualified) throw Error(ErrorCode::State, "worker not qualified");
    if (w.current_batch) throw Error(ErrorCode::State, "worker already has an open batch");
    Batch b;
    b.id = e.at("batch").get<std::string>();
    b.worker = worker_id;
    b.class_label = e.at("class").get<std::string>();
    b.images = e.at("images").get<std::vector<std::string>>();
    b.golden_index = e.at("golden_index").get<int>();
    if (b.images.size() != static_cast<std::size_t>(kBatchSize) || b.golden_index < 0 ||
        b.golden_index >= kBatchSize) {
      throw Error(ErrorCode::Parse, "malformed batch");
    }
    if (batches_.count(b.id)) throw Error(ErrorCode::State, "duplicate batch id " + b.id);
    b.clicks.resize(b.images.size());
    for (std::size_t i = 0; i < b.images.size(); ++i)
      if (static_cast<int>(i) != b.golden_index) ++assigned_[b.images[i]];
    w.current_batch = b.id;
    batches_.emplace(b.id, std::move(b));
  } else if (type == "batch_clicks" || type == "batch_submit") {
    const std::string id = e.at("batch").get<std::string>();
    auto bit = batches_.find(id);
    if (bit == batches_.end() || bit->second.worker != worker_id || w.current_batch != id) {
      throw Error(ErrorCode::State, "batch " + id + " is not the worker's current batch");
    }
    Batch& b = bit->second;
    if (type == "batch_clicks") {
      const auto pos = e.at("position").get<std::size_t>();
      if (pos >= b.clicks.size() || b.clicks[pos]) throw Error(ErrorCode::State, "batch position already clicked");
      const auto points = read_points(e);
      const auto times = read_times(e);
      b.clicks[pos] = clicks_with_times(points, times);
      const auto shown = read_time(e.at("shown_ms"));
      for (std::size_t i = 0; i < 4; ++i) {
        click_events_.push_back({worker_id, id, b.images[pos], b.blocked_submissions + 1, static_cast<int>(i) + 1,
                                 points[i], times[i], shown});
      }
    } else {
      require_complete(b);
      const std::string outcome = e.at("outcome").get<std::string>();
      if (outcome != "accepted" && outcome != "blocked") throw Error(ErrorCode::Parse, "unknown outcome");
      settle(b, outcome == "accepted" ? SubmitOutcome::Accepted : SubmitOutcome::Blocked);
      if (b.status == BatchStatus::Accepted) {
        for (std::size_t i = 0; i < b.images.size(); ++i) {
          annotations_.push_back({id, worker_id, b.images[i], *b.clicks[i], static_cast<int>(i) == b.golden_index});
        }
        w.current_batch.reset();
        ++w.batches_submitted;
      }
    }
  } else {
    throw Error(ErrorCode::Parse, "unknown event type '" + type + "'");
  }
  ++event_count_;
}

Json ProtocolState::to_json() const {
  Json workers = Json::object();
  for (const auto& [id, w] : workers_) {
    Json q = nullptr;
    if (w.qualification) {
      Json results = Json::array();
      for (const auto& r : w.qualification->results) {
        results.push_back(r ? Json{{"clicks", clicks_state(r->clicks)}, {"accepted", r->accepted}} : Json(nullptr));
      }
      q = {{"attempt", w.qualification->attempt},
           {"images", w.qualification->images},
           {"status", std::string(to_string(w.qualification->status))},
           {"results", results}};
    }
    workers[id] = {{"qualified", w.qualified},
                   {"qualification_attempts", w.qualification_attempts},
                   {"qualification", q},
                   {"current_batch", w.current_batch ? Json(*w.current_batch) : Json(nullptr)},
                   {"batches_submitted", w.batches_submitted}};
  }
  Json batches = Json::object();
  for (const auto& [id, b] : batches_) {
    Json clicks = Json::array();
    for (const auto& c : b.clicks) clicks.push_back(c ? clicks_state(*c) : Json(nullptr));
    batches[id] = {{"worker", b.worker},
                   {"class", b.class_label},
                   {"images", b.images},
                   {"golden_index", b.golden_index},
                   {"clicks", clicks},
                   {"status", std::string(xclick::to_string(b.status))},
                   {"blocked_submissions", b.blocked_submissions}};
  }
  Json annotations = Json::array();
  for (const auto& a : annotations_) {
    annotations.push_back({{"batch", a.batch},
                           {"worker", a.worker},
                           {"image", a.image},
                           {"clicks", clicks_state(a.clicks)},
                           {"golden", a.golden}});
  }
  Json clicks = Json::array();
  for (const auto& c : click_events_) {
    clicks.push_back({{"worker", c.worker},
                      {"batch", c.batch},
                      {"image", c.image},
                      {"attempt", c.attempt},
                      {"seq", c.sequence},
                      {"point", xclick::to_json(c.point)},
                      {"t_ms", c.t_ms ? Json(*c.t_ms) : Json(nullptr)},
                      {"shown_ms", c.shown_ms ? Json(*c.shown_ms) : Json(nullptr)}});
  }
  return {{"workers", workers},
          {"batches", batches},
          {"annotations", annotations},
          {"click_events", clicks},
          {"event_count", event_count_}};
}

}  // namespace xclick
