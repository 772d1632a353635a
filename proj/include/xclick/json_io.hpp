#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "xclick/geometry.hpp"
#include "xclick/grabcut.hpp"

namespace xclick {

using Json = nlohmann::json;

// Point: [x, y]. Box: [x_min, y_min, x_max, y_max].
Json to_json(Point p);
Json to_json(const BoundingBox& box);
Point point_from_json(const Json& j);
BoundingBox box_from_json(const Json& j);

// Clicks are written as {"left": [x,y], "top": ..., "right": ..., "bottom": ...}.
// Reading also accepts a plain list of four points, whose roles are inferred.
Json to_json(const ExtremeClicks& clicks);
ExtremeClicks clicks_from_json(const Json& j);

Json to_json(const EnergyConfig& config);

// Overwrites the fields present in `j`; unknown keys are rejected.
void apply_json(EnergyConfig& config, const Json& j);

// Everything `segment` and `evaluate` need besides the inputs.
struct SegmentConfig {
  EnergyConfig energy;
  SegmentMode mode = SegmentMode::Box;
  int search_margin = 5;
  std::uint64_t seed = 0;
};

Json to_json(const SegmentConfig& config);
void apply_json(SegmentConfig& config, const Json& j);
SegmentConfig load_segment_config(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace xclick
