#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xclick/evaluation.hpp"
#include "xclick/geometry.hpp"
#include "xclick/json_io.hpp"

namespace xclick {

enum class DistanceMetric { Euclidean, Chebyshev };

std::string_view to_string(DistanceMetric metric) noexcept;
DistanceMetric distance_metric_from_string(std::string_view name);

struct AcceptedArea {
  Role role = Role::Top;
  BinaryMask mask;  // Object = accepted
  int tolerance = 10;
};

// For the top role: S0 = object pixels on the topmost row, S1 = object pixels
// whose row is within `tolerance` of it, area = pixels within `tolerance` of
// S1. Other roles by symmetry.
AcceptedArea accepted_area(const BinaryMask& truth, Role role, int tolerance = 10,
                           DistanceMetric metric = DistanceMetric::Euclidean);

std::array<AcceptedArea, 4> accepted_areas(const BinaryMask& truth, int tolerance = 10,
                                           DistanceMetric metric = DistanceMetric::Euclidean);

struct ClickCheck {
  bool accepted = false;
  bool out_of_bounds = false;
};

ClickCheck validate_click(Point p, const AcceptedArea& area) noexcept;

// Per role: does the click that plays the role fall in the role's area.
std::array<bool, 4> check_clicks(const ExtremeClicks& clicks,
                                 const std::array<AcceptedArea, 4>& areas) noexcept;

inline constexpr int kQualificationImages = 5;
inline constexpr int kBatchSize = 10;

enum class QualificationStatus { InProgress, Passed, Failed };
std::string_view to_string(QualificationStatus status) noexcept;

struct ImageClicks {
  ExtremeClicks clicks;
  std::array<bool, 4> accepted{};  // by role
  bool all_accepted() const noexcept { return accepted[0] && accepted[1] && accepted[2] && accepted[3]; }
};

struct QualificationSession {
  std::string worker;
  int attempt = 1;
  std::vector<std::string> images;
  std::vector<std::optional<ImageClicks>> results;
  QualificationStatus status = QualificationStatus::InProgress;

  QualificationSession() = default;
  QualificationSession(std::string worker, int attempt, std::vector<std::string> images);

  // Index of the first image without clicks, or nullopt when complete.
  std::optional<std::size_t> next_image() const noexcept;
  // Stores the result; the session passes once all 20 clicks are accepted
  // and fails as soon as it is complete with any rejection.
  void record(std::size_t index, ImageClicks result);
};

struct FeedbackItem {
  std::string image;
  ExtremeClicks clicks;
  std::array<bool, 4> accepted{};
};

// Throws Error(State) naming the images still missing clicks.
std::vector<FeedbackItem> qualification_feedback(const QualificationSession& session);

enum class BatchStatus { Open, Accepted };
std::string_view to_string(BatchStatus status) noexcept;

struct Batch {
  std::string id;
  std::string worker;
  std::string class_label;
  std::vector<std::string> images;  // kBatchSize entries
  int golden_index = 0;
  std::vector<std::optional<ExtremeClicks>> clicks;
  BatchStatus status = BatchStatus::Open;
  int blocked_submissions = 0;

  std::optional<std::size_t> next_image() const noexcept;
};

// 9 task images (the first 9 of `pool`, all one class) plus one golden image
// of the same class, drawn with the seed and inserted at a seeded position.
Batch build_batch(std::string id, std::string worker, const std::vector<const ManifestEntry*>& pool,
                  const std::vector<const ManifestEntry*>& golden_pool, std::uint64_t seed);

enum class SubmitOutcome { Accepted, Blocked };
std::string_view to_string(SubmitOutcome outcome) noexcept;

// Accepted iff the golden image's four clicks pass. On block the golden
// clicks are cleared so they can be redone. Throws Error(State) if any
// image lacks clicks.
SubmitOutcome submit_batch(Batch& batch, const std::array<AcceptedArea, 4>& golden_areas);

struct ClickEvent {
  std::string worker;
  std::string batch;  // empty outside batches
  std::string image;
  int attempt = 1;    // distinguishes redone images
  int sequence = 1;   // 1..4
  Point point;
  std::optional<std::int64_t> t_ms;
  std::optional<std::int64_t> shown_ms;
};

struct PayConfig {
  double pay_per_batch = 0.15;
  int batch_size = kBatchSize;
};

struct TimingReport {
  std::size_t instances = 0;
  std::size_t incomplete = 0;
  double mean_total_s = 0.0;
  double mean_first_s = 0.0;
  double mean_later_s = 0.0;
  double total_hours = 0.0;
  std::size_t batches = 0;
  double cost = 0.0;
};

// Instances are (worker, batch, image, attempt) groups. A complete instance
// has sequences 1..4, a shown time, and non-decreasing timestamps; others
// are excluded and counted. Batches are the distinct batch ids, plus
// ceil(n / batch_size) for complete instances without one.
TimingReport timing_report(const std::vector<ClickEvent>& events, const PayConfig& pay = {});
Json to_json(const TimingReport& report);

struct Annotation {
  std::string batch;
  std::string worker;
  std::string image;
  ExtremeClicks clicks;
  bool golden = false;
};

struct WorkerState {
  bool qualified = false;
  int qualification_attempts = 0;
  std::optional<QualificationSession> qualification;  // latest session
  std::optional<std::string> current_batch;
  int batches_submitted = 0;
};

// Protocol state as a pure fold over log events. Events are JSON objects
// with "v" and "type"; see apply() for the schema.
class ProtocolState {
 public:
  static constexpr int kVersion = 1;

  // Throws Error(State) if the event does not fit the current state and
  // Error(Parse) if it is malformed; the state is unchanged on error.
  void apply(const Json& event);

  const std::map<std::string, WorkerState>& workers() const noexcept { return workers_; }
  const std::map<std::string, Batch>& batches() const noexcept { return batches_; }
  const std::vector<Annotation>& annotations() const noexcept { return annotations_; }
  const std::vector<ClickEvent>& click_events() const noexcept { return click_events_; }
  std::size_t event_count() const noexcept { return event_count_; }
  bool image_assigned(const std::string& image) const { return assigned_.count(image) > 0; }

  const WorkerState* worker(const std::string& id) const;
  const Batch* batch(const std::string& id) const;

  Json to_json() const;

 private:
  void apply_checked(const Json& event);

  std::map<std::string, WorkerState> workers_;
  std::map<std::string, Batch> batches_;
  std::vector<Annotation> annotations_;
  std::vector<ClickEvent> click_events_;
  std::map<std::string, int> assigned_;
  std::size_t event_count_ = 0;
};

// Event constructors (the only shapes apply() accepts).
namespace events {
Json registered(const std::string& worker);
Json qualification_started(const std::string& worker, int attempt, const std::vector<std::string>& images);
Json qualification_clicks(const std::string& worker, int attempt, std::size_t index,
                          const std::vector<Point>& points, const std::array<bool, 4>& accepted_by_role,
                          std::optional<std::int64_t> shown_ms,
                          const std::array<std::optional<std::int64_t>, 4>& t_ms);
Json batch_opened(const Batch& batch);
Json batch_clicks(const std::string& worker, const std::string& batch, std::size_t position,
                  const std::vector<Point>& points, std::optional<std::int64_t> shown_ms,
                  const std::array<std::optional<std::int64_t>, 4>& t_ms);
Json batch_submitted(const std::string& worker, const std::string& batch, SubmitOutcome outcome);
}  // namespace events

}  // namespace xclick
