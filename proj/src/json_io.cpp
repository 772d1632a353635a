#include "xclick/json_io.hpp"

#include <fstream>
#include <set>
#include <vector>

#include "xclick/error.hpp"

namespace xclick {
namespace {

int as_int(const Json& j, const char* what) {
  if (!j.is_number_integer()) throw Error(ErrorCode::Parse, std::string(what) + " must be an integer");
  return j.get<int>();
}

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw Error(ErrorCode::Parse, std::string(what) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_number(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw Error(ErrorCode::Parse, std::string(key) + " must be an integer");
  } else {
    if (!v.is_number()) throw Error(ErrorCode::Parse, std::string(key) + " must be a number");
  }
  out = v.get<T>();
}

}  // namespace

Json to_json(Point p) { return Json::array({p.x, p.y}); }

Json to_json(const BoundingBox& box) {
  return Json::array({box.x_min, box.y_min, box.x_max, box.y_max});
}

Point point_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::Parse, "point must be [x, y]");
  return {as_int(j[0], "point x"), as_int(j[1], "point y")};
}

BoundingBox box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(ErrorCode::Parse, "box must be [x_min, y_min, x_max, y_max]");
  }
  const BoundingBox box{as_int(j[0], "box"), as_int(j[1], "box"), as_int(j[2], "box"),
                        as_int(j[3], "box")};
  if (!box.valid()) throw Error(ErrorCode::Parse, "box has min > max");
  return box;
}

Json to_json(const ExtremeClicks& clicks) {
  Json j = Json::object();
  for (Role r : kAllRoles) j[std::string(to_string(r))] = to_json(clicks.at(r));
  return j;
}

ExtremeClicks clicks_from_json(const Json& j) {
  if (j.is_array()) {
    std::vector<Point> points;
    for (const Json& p : j) points.push_back(point_from_json(p));
    return infer_roles(points);
  }
  reject_unknown(j, {"left", "top", "right", "bottom"}, "clicks");
  ExtremeClicks clicks;
  for (Role r : kAllRoles) {
    const std::string key(to_string(r));
    if (!j.contains(key)) throw Error(ErrorCode::Parse, "clicks: missing '" + key + "'");
    const auto i = static_cast<std::size_t>(r);
    clicks.points[i] = point_from_json(j.at(key));
    clicks.role_to_click[i] = static_cast<int>(i);
  }
  return clicks;
}

Json to_json(const EnergyConfig& c) {
  return {{"lambda", c.lambda},
          {"beta", c.beta},
          {"gmm_components", c.gmm_components},
          {"covariance_floor", c.covariance_floor},
          {"max_iterations", c.max_iterations},
          {"em_iterations", c.em_iterations}};
}

void apply_json(EnergyConfig& c, const Json& j) {
  reject_unknown(j,
                 {"lambda", "beta", "gmm_components", "covariance_floor", "max_iterations",
                  "em_iterations"},
                 "energy config");
  read_number(j, "lambda", c.lambda);
  read_number(j, "beta", c.beta);
  read_number(j, "gmm_components", c.gmm_components);
  read_number(j, "covariance_floor", c.covariance_floor);
  read_number(j, "max_iterations", c.max_iterations);
  read_number(j, "em_iterations", c.em_iterations);
  c.validate();
}

Json to_json(const SegmentConfig& c) {
  Json j = to_json(c.energy);
  j["mode"] = std::string(to_string(c.mode));
  j["search_margin"] = c.search_margin;
  j["seed"] = c.seed;
  return j;
}

void apply_json(SegmentConfig& c, const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "config must be a JSON object");
  Json energy = j;
  for (const char* key : {"mode", "search_margin", "seed"}) energy.erase(key);
  apply_json(c.energy, energy);
  if (j.contains("mode")) {
    if (!j.at("mode").is_string()) throw Error(ErrorCode::Parse, "mode must be a string");
    c.mode = segment_mode_from_string(j.at("mode").get<std::string>());
  }
  read_number(j, "search_margin", c.search_margin);
  if (c.search_margin < 0) throw Error(ErrorCode::InvalidArgument, "search_margin must be >= 0");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) {
      throw Error(ErrorCode::Parse, "seed must be an integer");
    }
    if (j.at("seed").is_number_integer() && j.at("seed").get<std::int64_t>() < 0) {
      throw Error(ErrorCode::Parse, "seed must be non-negative");
    }
    c.seed = j.at("seed").get<std::uint64_t>();
  }
}

SegmentConfig load_segment_config(const std::filesystem::path& path) {
  SegmentConfig c;
  apply_json(c, read_json_file(path));
  return c;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, path.string() + ": cannot write");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, path.string() + ": write failed");
}

}  // namespace xclick
