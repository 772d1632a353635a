#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "xclick/edge_map.hpp"
#include "xclick/event_log.hpp"
#include "xclick/evaluation.hpp"
#include "xclick/json_io.hpp"
#include "xclick/protocol.hpp"

namespace xclick {

struct ServiceConfig {
  std::filesystem::path manifest;
  std::filesystem::path event_log;
  int tolerance = 10;
  DistanceMetric metric = DistanceMetric::Euclidean;
  double pay_per_batch = 0.15;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> static_dir;
  std::optional<std::filesystem::path> mask_dir;  // segment results are also written here
  SegmentConfig segment;                          // defaults for /api/segment
};

// Keys as in the struct; "segment" takes the flat SegmentConfig object.
// Unknown keys are rejected.
void apply_json(ServiceConfig& config, const Json& j);
ServiceConfig load_service_config(const std::filesystem::path& path);

// Box quality of accepted non-hidden annotations: box of the clicks against
// the entry box, or the tight box of its mask. Entries without either are
// skipped.
QualityReport annotation_quality(const ProtocolState& state, const DatasetManifest& manifest);

inline constexpr int kMaxSegmentSide = 2048;

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Transport-independent handlers. Every state change is appended to the
// event log before the response is produced; constructing a Service on an
// existing log replays it.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Response register_worker(const std::string& worker);
  Response next_task(const std::string& worker);
  Response post_clicks(const std::string& worker, const std::string& body);
  Response qualification_feedback(const std::string& worker);
  Response task_image(const std::string& worker, const std::string& task);
  Response overlay(const std::string& worker, const std::string& task, const std::string& role);
  Response segment(const std::string& body);
  Response mask(const std::string& hash);
  Response metrics();

  Json state_json() const;
  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Cache;

  Response next_locked(const std::string& worker);
  Response qualification_clicks(const std::string& worker, const Json& body);
  Response batch_clicks(const std::string& worker, const Json& body);
  void commit(const Json& event);
  const ManifestEntry* entry(const std::string& id) const;
  const std::array<AcceptedArea, 4>& areas_for(const ManifestEntry& e);
  ImageSize image_size(const ManifestEntry& e);

  ServiceConfig config_;
  DatasetManifest manifest_;
  std::map<std::string, std::size_t> by_id_;
  std::vector<std::string> qualification_images_;

  mutable std::mutex state_mutex_;
  ProtocolState state_;
  std::unique_ptr<EventLog> log_;
  std::map<std::string, std::array<AcceptedArea, 4>> areas_;
  std::map<std::string, ImageSize> sizes_;

  std::unique_ptr<Cache> cache_;
};

// httplib binding. bind() throws Error(Io) when the port is taken and
// returns the bound port (0 picks a free one).
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace xclick
