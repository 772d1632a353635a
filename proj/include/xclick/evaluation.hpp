#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xclick/geometry.hpp"
#include "xclick/json_io.hpp"

namespace xclick {

enum class PoolRole { Task, Golden, Qualification };

std::string_view to_string(PoolRole role) noexcept;

struct ManifestEntry {
  std::string id;
  std::filesystem::path image;  // empty when the line has none
  std::string class_label;
  std::optional<BoundingBox> box;
  std::optional<std::filesystem::path> mask;
  std::optional<ExtremeClicks> clicks;
  std::optional<std::filesystem::path> edges;
  PoolRole pool = PoolRole::Task;
  int line = 0;
};

struct DatasetManifest {
  std::string dataset_id;
  std::vector<ManifestEntry> entries;
};

// One JSON object per line:
//   {"id", "image", "class", "box", "mask", "clicks", "edges", "pool"}
// Only "class" is required; "id" defaults to the image (or mask) file stem.
// Relative paths are taken as given, i.e. relative to the working directory.
// Every referenced file must exist.
DatasetManifest load_manifest(const std::filesystem::path& path);
Json to_json(const ManifestEntry& entry);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

struct ScoredPair {
  std::string id;
  std::string class_label;
  double iou = 0.0;
};

struct ClassScores {
  double mean_iou = 0.0;
  double over_50 = 0.0;  // fraction with IoU > 0.5
  double over_70 = 0.0;
  double over_90 = 0.0;
  std::size_t count = 0;
};

// Per-class scores first, then unweighted means over classes.
struct QualityReport {
  std::map<std::string, ClassScores> classes;
  ClassScores macro;  // count = number of pairs
};

QualityReport class_metrics(const std::vector<ScoredPair>& pairs);

struct BoxPair {
  std::string id;
  std::string class_label;
  BoundingBox predicted;
  BoundingBox truth;
};
QualityReport class_metrics(const std::vector<BoxPair>& pairs);

Json to_json(const QualityReport& report);

// Mislabelled fraction over pixels that are not ignore in either mask.
double error_rate(const BinaryMask& predicted, const BinaryMask& truth);

struct DisagreementBuckets {
  std::vector<std::string> low;   // IoU < 0.3
  std::vector<std::string> mid;   // 0.3 <= IoU <= 0.7
  std::vector<std::string> high;  // IoU > 0.7
};

DisagreementBuckets bucket_disagreements(const std::vector<ScoredPair>& pairs);
Json to_json(const DisagreementBuckets& buckets);

struct EntryResult {
  std::string id;
  std::string class_label;
  double iou = 0.0;  // mask IoU when a GT mask exists, else box IoU
  std::optional<double> box_iou;
  std::optional<double> error_rate;
  double energy = 0.0;
  int iterations = 0;
  double time_ms = 0.0;
};

struct EntryFailure {
  std::string id;
  int line = 0;
  std::string message;
};

struct ExperimentReport {
  std::string dataset_id;
  SegmentMode mode = SegmentMode::Box;
  std::vector<EntryResult> entries;  // manifest order
  std::vector<EntryFailure> failures;
  QualityReport quality;
  std::optional<double> mean_error_rate;
  DisagreementBuckets buckets;
};

struct ExperimentOptions {
  SegmentConfig config;
  int jobs = 1;
  // Directory for predicted mask PNGs (named <id>.png); empty to skip.
  std::filesystem::path mask_dir;
};

ExperimentReport run_experiment(const DatasetManifest& manifest, const ExperimentOptions& options);

Json to_json(const ExperimentReport& report);

// Deterministic per-entry table: id,class,iou,box_iou,error_rate,energy,iterations.
std::string entries_csv(const ExperimentReport& report);
// Wall-clock per entry: id,time_ms.
std::string timings_csv(const ExperimentReport& report);

}  // namespace xclick
