#include "xclick/evaluation.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "xclick/edge_map.hpp"
#include "xclick/error.hpp"
#include "xclick/grabcut.hpp"
#include "xclick/image_io.hpp"

namespace xclick {
namespace fs = std::filesystem;

std::string_view to_string(PoolRole role) noexcept {
  switch (role) {
    case PoolRole::Task: return "task";
    case PoolRole::Golden: return "golden";
    case PoolRole::Qualification: return "qualification";
  }
  return "task";
}

namespace {

PoolRole pool_from_string(const std::string& s) {
  if (s == "task") return PoolRole::Task;
  if (s == "golden") return PoolRole::Golden;
  if (s == "qualification") return PoolRole::Qualification;
  throw Error(ErrorCode::Parse, "unknown pool '" + s + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

std::string string_field(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (!v.is_string()) throw Error(ErrorCode::Parse, std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

ManifestEntry parse_entry(const Json& j, int line) {
  static const std::set<std::string> kKeys = {"id",     "image", "class", "box",
                                              "mask",   "clicks", "edges", "pool"};
  if (!j.is_object()) throw Error(ErrorCode::Parse, "entry must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw Error(ErrorCode::Parse, "unknown key '" + key + "'");
  }
  ManifestEntry e;
  e.line = line;
  if (!j.contains("class")) throw Error(ErrorCode::Parse, "missing 'class'");
  e.class_label = string_field(j, "class");
  if (e.class_label.empty()) throw Error(ErrorCode::Parse, "empty class label");
  if (j.contains("image")) e.image = string_field(j, "image");
  if (j.contains("box")) e.box = box_from_json(j.at("box"));
  if (j.contains("mask")) e.mask = fs::path(string_field(j, "mask"));
  if (j.contains("clicks")) e.clicks = clicks_from_json(j.at("clicks"));
  if (j.contains("edges")) e.edges = fs::path(string_field(j, "edges"));
  if (j.contains("pool")) e.pool = pool_from_string(string_field(j, "pool"));
  if (j.contains("id")) {
    e.id = string_field(j, "id");
  } else if (!e.image.empty()) {
    e.id = e.image.stem().string();
  } else if (e.mask) {
    e.id = e.mask->stem().string();
  } else {
    e.id = "line" + std::to_string(line);
  }
  if (e.id.empty()) throw Error(ErrorCode::Parse, "empty id");
  return e;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot open manifest");
  DatasetManifest manifest;
  manifest.dataset_id = path.stem().string();
  std::set<std::string> ids;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line) + ": ";
    ManifestEntry entry;
    try {
      entry = parse_entry(Json::parse(text), line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::Parse, where + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + e.what());
    }
    auto require = [&](const fs::path& p, const char* what) {
      if (!fs::exists(p)) throw Error(ErrorCode::Io, where + "missing " + what + " '" + p.string() + "'");
    };
    if (!entry.image.empty()) require(entry.image, "image");
    if (entry.mask) require(*entry.mask, "mask");
    if (entry.edges) require(*entry.edges, "edge map");
    if (!ids.insert(entry.id).second) throw Error(ErrorCode::Parse, where + "duplicate id '" + entry.id + "'");
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

Json to_json(const ManifestEntry& e) {
  Json j = Json::object();
  j["id"] = e.id;
  if (!e.image.empty()) j["image"] = e.image.generic_string();
  j["class"] = e.class_label;
  if (e.box) j["box"] = to_json(*e.box);
  if (e.mask) j["mask"] = e.mask->generic_string();
  if (e.clicks) j["clicks"] = to_json(*e.clicks);
  if (e.edges) j["edges"] = e.edges->generic_string();
  if (e.pool != PoolRole::Task) j["pool"] = std::string(to_string(e.pool));
  return j;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, path.string() + ": cannot write");
  for (const auto& e : entries) out << to_json(e).dump() << '\n';
  if (!out) throw Error(ErrorCode::Io, path.string() + ": write failed");
}

QualityReport class_metrics(const std::vector<ScoredPair>& pairs) {
  QualityReport report;
  for (const auto& p : pairs) {
    ClassScores& c = report.classes[p.class_label];
    c.mean_iou += p.iou;
    c.over_50 += p.iou > 0.5 ? 1.0 : 0.0;
    c.over_70 += p.iou > 0.7 ? 1.0 : 0.0;
    c.over_90 += p.iou > 0.9 ? 1.0 : 0.0;
    ++c.count;
  }
  for (auto& [name, c] : report.classes) {
    const auto n = static_cast<double>(c.count);
    c.mean_iou /= n;
    c.over_50 /= n;
    c.over_70 /= n;
    c.over_90 /= n;
    report.macro.mean_iou += c.mean_iou;
    report.macro.over_50 += c.over_50;
    report.macro.over_70 += c.over_70;
    report.macro.over_90 += c.over_90;
  }
  if (!report.classes.empty()) {
    const auto k = static_cast<double>(report.classes.size());
    report.macro.mean_iou /= k;
    report.macro.over_50 /= k;
    report.macro.over_70 /= k;
    report.macro.over_90 /= k;
  }
  report.macro.count = pairs.size();
  return report;
}

QualityReport class_metrics(const std::vector<BoxPair>& pairs) {
  std::vector<ScoredPair> scored;
  scored.reserve(pairs.size());
  for (const auto& p : pairs) scored.push_back({p.id, p.class_label, iou_boxes(p.predicted, p.truth)});
  return class_metrics(scored);
}

namespace {

Json to_json(const ClassScores& c) {
  return {{"mean_iou", c.mean_iou},
          {"iou_over_0.5", c.over_50},
          {"iou_over_0.7", c.over_70},
          {"iou_over_0.9", c.over_90},
          {"count", c.count}};
}

}  // namespace

Json to_json(const QualityReport& report) {
  Json classes = Json::object();
  for (const auto& [name, c] : report.classes) classes[name] = to_json(c);
  return {{"classes", classes}, {"macro", to_json(report.macro)}};
}

double error_rate(const BinaryMask& predicted, const BinaryMask& truth) {
  if (predicted.width() != truth.width() || predicted.height() != truth.height()) {
    throw Error(ErrorCode::DimensionMismatch, "error_rate: masks differ in size");
  }
  std::size_t wrong = 0, total = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] == Label::Ignore || truth[i] == Label::Ignore) continue;
    ++total;
    if ((predicted[i] == Label::Object) != (truth[i] == Label::Object)) ++wrong;
  }
  return total == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(total);
}

DisagreementBuckets bucket_disagreements(const std::vector<ScoredPair>& pairs) {
  DisagreementBuckets b;
  for (const auto& p : pairs) {
    if (p.iou < 0.3) {
      b.low.push_back(p.id);
    } else if (p.iou <= 0.7) {
      b.mid.push_back(p.id);
    } else {
      b.high.push_back(p.id);
    }
  }
  return b;
}

Json to_json(const DisagreementBuckets& b) {
  return {{"iou_below_0.3", {{"count", b.low.size()}, {"ids", b.low}}},
          {"iou_0.3_to_0.7", {{"count", b.mid.size()}, {"ids", b.mid}}},
          {"iou_above_0.7", {{"count", b.high.size()}, {"ids", b.high}}}};
}

namespace {

EntryResult evaluate_entry(const ManifestEntry& e, const ExperimentOptions& options) {
  const SegmentConfig& config = options.config;
  if (e.image.empty()) throw Error(ErrorCode::InvalidArgument, "entry has no image");
  const RgbImage image = load_image(e.image);

  std::optional<BinaryMask> truth;
  if (e.mask) {
    truth = load_mask(*e.mask);
    if (truth->width() != image.width() || truth->height() != image.height()) {
      throw Error(ErrorCode::DimensionMismatch, "mask size differs from image size");
    }
  }
  const bool truth_has_object = truth && truth->count(Label::Object) > 0;
  std::optional<BoundingBox> truth_box = e.box;
  if (!truth_box && truth_has_object) truth_box = tight_box_from_mask(*truth);

  std::optional<EdgeMap> edges;
  if (e.edges) edges = load_edge_map(*e.edges, ImageSize{image.width(), image.height()});

  GrabCutInput input;
  input.image = &image;
  input.mode = config.mode;
  input.search_margin = config.search_margin;
  input.seed = config.seed;
  input.edges = edges ? &*edges : nullptr;
  if (config.mode == SegmentMode::Clicks) {
    if (!edges) throw Error(ErrorCode::InvalidArgument, "click mode needs an edge map (edges)");
    if (e.clicks) {
      input.clicks = e.clicks;
    } else if (truth_has_object) {
      input.clicks = simulate_extreme_clicks(*truth);
    } else {
      throw Error(ErrorCode::InvalidArgument, "click mode needs clicks or a mask");
    }
    input.box = box_from_clicks(*input.clicks);
  } else if (e.box) {
    input.box = *e.box;
  } else if (e.clicks) {
    input.box = box_from_clicks(*e.clicks);
  } else if (truth_has_object) {
    input.box = *truth_box;
  } else {
    throw Error(ErrorCode::InvalidArgument, "box mode needs a box, clicks or a mask");
  }
  if (!truth && !truth_box) throw Error(ErrorCode::InvalidArgument, "entry has no ground truth");

  const auto start = std::chrono::steady_clock::now();
  const SegmentationResult seg = grabcut(input, config.energy);
  const auto stop = std::chrono::steady_clock::now();

  if (!options.mask_dir.empty()) save_mask(options.mask_dir / (e.id + ".png"), seg.labeling);

  EntryResult r;
  r.id = e.id;
  r.class_label = e.class_label;
  r.energy = seg.energy;
  r.iterations = seg.iterations;
  r.time_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  if (truth_box) r.box_iou = iou_boxes(tight_box_from_mask(seg.labeling), *truth_box);
  if (truth) {
    r.iou = iou_masks(seg.labeling, *truth);
    r.error_rate = error_rate(seg.labeling, *truth);
  } else {
    r.iou = *r.box_iou;
  }
  return r;
}

}  // namespace

ExperimentReport run_experiment(const DatasetManifest& manifest, const ExperimentOptions& options) {
  options.config.energy.validate();
  if (!options.mask_dir.empty()) fs::create_directories(options.mask_dir);

  const std::size_t n = manifest.entries.size();
  std::vector<std::optional<EntryResult>> results(n);
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = evaluate_entry(manifest.entries[i], options);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(1, options.jobs)), 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  ExperimentReport report;
  report.dataset_id = manifest.dataset_id;
  report.mode = options.config.mode;
  std::vector<ScoredPair> scored;
  double error_sum = 0.0;
  std::size_t error_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const ManifestEntry& e = manifest.entries[i];
    if (!results[i]) {
      report.failures.push_back({e.id, e.line, errors[i]});
      continue;
    }
    const EntryResult& r = *results[i];
    scored.push_back({r.id, r.class_label, r.iou});
    if (r.error_rate) {
      error_sum += *r.error_rate;
      ++error_count;
    }
    report.entries.push_back(r);
  }
  report.quality = class_metrics(scored);
  report.buckets = bucket_disagreements(scored);
  if (error_count > 0) report.mean_error_rate = error_sum / static_cast<double>(error_count);
  return report;
}

Json to_json(const ExperimentReport& report) {
  Json failures = Json::array();
  for (const auto& f : report.failures) {
    failures.push_back({{"id", f.id}, {"line", f.line}, {"error", f.message}});
  }
  Json j = {{"dataset", report.dataset_id},
            {"mode", std::string(to_string(report.mode))},
            {"evaluated", report.entries.size()},
            {"failed", report.failures.size()},
            {"failures", failures},
            {"quality", to_json(report.quality)},
            {"disagreement", to_json(report.buckets)}};
  j["mean_error_rate"] = report.mean_error_rate ? Json(*report.mean_error_rate) : Json(nullptr);
  return j;
}

namespace {

// Quote only when needed.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string optional_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

std::string entries_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "id,class,iou,box_iou,error_rate,energy,iterations\n";
  for (const auto& r : report.entries) {
    out << csv_field(r.id) << ',' << csv_field(r.class_label) << ',' << format_double(r.iou) << ','
        << optional_field(r.box_iou) << ',' << optional_field(r.error_rate) << ','
        << format_double(r.energy) << ',' << r.iterations << '\n';
  }
  return out.str();
}

std::string timings_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "id,time_ms\n";
  for (const auto& r : report.entries) out << csv_field(r.id) << ',' << format_double(r.time_ms) << '\n';
  return out.str();
}

}  // namespace xclick
