#include <pthread.h>
#include <signal.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "xclick/edge_map.hpp"
#include "xclick/error.hpp"
#include "xclick/evaluation.hpp"
#include "xclick/event_log.hpp"
#include "xclick/grabcut.hpp"
#include "xclick/image_io.hpp"
#include "xclick/json_io.hpp"
#include "xclick/protocol.hpp"
#include "xclick/service.hpp"
#include "xclick/voc.hpp"

using namespace xclick;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

// Thrown for bad invocations that CLI11 cannot catch itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnergyFlags {
  std::optional<std::string> config;
  std::optional<std::string> mode;
  std::optional<double> lambda, beta, covariance_floor;
  std::optional<int> components, iterations, em_iterations, search_margin;
  std::uint64_t seed = 0;

  void add(CLI::App& app) {
    app.add_option("--config", config, "JSON config file (energy keys, mode, search_margin, seed)")
        ->check(CLI::ExistingFile);
    app.add_option("--mode", mode, "box or clicks")->check(CLI::IsMember({"box", "clicks"}));
    app.add_option("--lambda", lambda, "pairwise weight");
    app.add_option("--beta", beta, "edge sharpness of the pairwise term");
    app.add_option("--components", components, "GMM components per model");
    app.add_option("--covariance-floor", covariance_floor, "minimum covariance eigenvalue");
    app.add_option("--iterations", iterations, "GrabCut iterations");
    app.add_option("--em-iterations", em_iterations, "EM iterations per GMM fit");
    app.add_option("--search-margin", search_margin, "pixels added around the box for contour search");
    app.add_option("--seed", seed, "RNG seed")->default_val(0);
  }

  // Config file first, then flags.
  SegmentConfig resolve() const {
    SegmentConfig c;
    if (config) c = load_segment_config(*config);
    Json over = Json::object();
    if (mode) over["mode"] = *mode;
    if (lambda) over["lambda"] = *lambda;
    if (beta) over["beta"] = *beta;
    if (components) over["gmm_components"] = *components;
    if (covariance_floor) over["covariance_floor"] = *covariance_floor;
    if (iterations) over["max_iterations"] = *iterations;
    if (em_iterations) over["em_iterations"] = *em_iterations;
    if (search_margin) over["search_margin"] = *search_margin;
    over["seed"] = seed;
    apply_json(c, over);
    return c;
  }
};

// Inline JSON or a path to a JSON file.
Json json_argument(const std::string& arg) {
  if (fs::exists(arg)) return read_json_file(arg);
  try {
    return Json::parse(arg);
  } catch (const Json::exception&) {
    throw UsageError("'" + arg + "' is neither a file nor valid JSON");
  }
}

BoundingBox box_argument(const std::string& arg) {
  std::string s = arg;
  if (s.find('[') == std::string::npos) s = "[" + s + "]";
  try {
    return box_from_json(Json::parse(s));
  } catch (const Json::exception&) {
    throw UsageError("--box expects x0,y0,x1,y1");
  } catch (const Error& e) {
    throw UsageError(std::string("--box: ") + e.what());
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

struct SegmentArgs {
  std::string image, out;
  std::optional<std::string> clicks, box, edges;
  EnergyFlags energy;
};

int run_segment(const SegmentArgs& a) {
  const SegmentConfig cfg = a.energy.resolve();
  if (cfg.mode == SegmentMode::Clicks && !a.edges) throw UsageError("clicks mode needs --edges");
  if (cfg.mode == SegmentMode::Clicks && !a.clicks) throw UsageError("clicks mode needs --clicks");
  const RgbImage image = load_image(a.image);
  std::optional<ExtremeClicks> clicks;
  if (a.clicks) clicks = clicks_from_json(json_argument(*a.clicks));
  std::optional<BoundingBox> box;
  if (a.box) box = box_argument(*a.box);
  if (!box && clicks) box = box_from_clicks(*clicks);
  if (!box) throw UsageError("box mode needs --box or --clicks");
  std::optional<EdgeMap> edges;
  if (a.edges) edges = load_edge_map(*a.edges, ImageSize{image.width(), image.height()});

  GrabCutInput input;
  input.image = &image;
  input.box = *box;
  input.clicks = clicks;
  input.edges = edges ? &*edges : nullptr;
  input.mode = cfg.mode;
  input.search_margin = cfg.search_margin;
  input.seed = cfg.seed;
  const SegmentationResult seg = grabcut(input, cfg.energy);

  const fs::path out = a.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_mask(out, seg.labeling);
  fs::path sidecar = out;
  sidecar.replace_extension(".json");
  Json j = {{"image", a.image},
            {"mask", out.string()},
            {"width", image.width()},
            {"height", image.height()},
            {"mode", std::string(to_string(cfg.mode))},
            {"box", to_json(*box)},
            {"clicks", clicks ? to_json(*clicks) : Json(nullptr)},
            {"energy", seg.energy},
            {"iterations", seg.iterations},
            {"cut_energies", seg.cut_energies},
            {"config", to_json(cfg)}};
  write_json_file(sidecar, j);
  std::cout << "wrote " << out.string() << " and " << sidecar.string() << "\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string masks, out, cls = "object";
  std::optional<std::string> images, edges;
};

std::optional<fs::path> find_by_stem(const std::optional<std::string>& dir, const std::string& stem) {
  if (!dir) return std::nullopt;
  for (const char* ext : {".png", ".jpg", ".jpeg", ".PNG", ".JPG"}) {
    const fs::path p = fs::path(*dir) / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

int run_simulate(const SimulateArgs& a) {
  if (!fs::is_directory(a.masks)) throw UsageError("--masks: not a directory: " + a.masks);
  std::vector<fs::path> files;
  for (const auto& d : fs::directory_iterator(a.masks)) {
    if (d.is_regular_file() && d.path().extension() == ".png") files.push_back(d.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no mask PNGs in " + a.masks);

  std::vector<ManifestEntry> entries;
  for (const fs::path& f : files) {
    ManifestEntry e;
    e.id = f.stem().string();
    e.class_label = a.cls;
    try {
      e.clicks = simulate_extreme_clicks(load_mask(f));
    } catch (const Error& err) {
      std::cerr << "warning: skipping " << f.string() << ": " << err.what() << "\n";
      continue;
    }
    e.mask = f;
    if (auto img = find_by_stem(a.images, e.id)) e.image = *img;
    if (auto edge = find_by_stem(a.edges, e.id)) e.edges = *edge;
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw UsageError("every mask in " + a.masks + " was skipped");
  write_manifest(a.out, entries);
  std::cout << "wrote " << entries.size() << " entries to " << a.out << "\n";
  return kExitOk;
}

struct EvaluateArgs {
  std::string manifest, report;
  std::optional<std::string> masks_out;
  int jobs = 1;
  EnergyFlags energy;
};

int run_evaluate(const EvaluateArgs& a) {
  ExperimentOptions options;
  options.config = a.energy.resolve();
  options.jobs = a.jobs;
  if (a.masks_out) options.mask_dir = *a.masks_out;
  const DatasetManifest manifest = load_manifest(a.manifest);
  const ExperimentReport report = run_experiment(manifest, options);

  const fs::path dir = a.report;
  fs::create_directories(dir);
  write_json_file(dir / "report.json", to_json(report));
  std::ofstream(dir / "entries.csv", std::ios::binary) << entries_csv(report);
  std::ofstream(dir / "timings.csv", std::ios::binary) << timings_csv(report);

  for (const EntryFailure& f : report.failures) {
    std::cerr << a.manifest << ":" << f.line << ": " << f.id << ": " << f.message << "\n";
  }
  std::cout << "macro mIoU " << fixed(report.quality.macro.mean_iou, 4) << " over " << report.entries.size()
            << " entries (" << to_string(report.mode) << " mode)";
  if (!report.failures.empty()) std::cout << ", " << report.failures.size() << " failed";
  std::cout << "\n";
  return report.failures.empty() ? kExitOk : kExitPartial;
}

struct ServeArgs {
  std::optional<std::string> config, manifest, log, static_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::uint64_t> seed;
};

int run_serve(const ServeArgs& a) {
  ServiceConfig cfg;
  if (a.config) cfg = load_service_config(*a.config);
  if (a.manifest) cfg.manifest = *a.manifest;
  if (a.log) cfg.event_log = *a.log;
  if (a.static_dir) cfg.static_dir = fs::path(*a.static_dir);
  if (a.seed) cfg.seed = *a.seed;
  if (cfg.manifest.empty() || cfg.event_log.empty()) throw UsageError("serve needs a manifest and an event log");

  // Signals are taken synchronously on this thread; server threads inherit
  // the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(cfg);
  HttpServer server(service);
  int port = 0;
  try {
    port = server.bind(a.host, a.port);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  std::cout << "listening on http://" << a.host << ":" << port << std::endl;
  std::thread worker([&] { server.listen(); });
  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  worker.join();
  std::cout << "stopped" << std::endl;
  return kExitOk;
}

struct ReportArgs {
  std::string log;
  std::optional<std::string> manifest;
  double pay = 0.15;
  bool json = false;
};

int run_report(const ReportArgs& a) {
  ProtocolState state;
  for (const Json& e : read_event_log(a.log)) state.apply(e);
  const TimingReport t = timing_report(state.click_events(), {a.pay, kBatchSize});
  std::optional<QualityReport> quality;
  if (a.manifest) quality = annotation_quality(state, load_manifest(*a.manifest));

  if (a.json) {
    Json j = {{"events", state.event_count()}, {"timing", to_json(t)}};
    if (quality) j["quality"] = to_json(*quality);
    std::cout << j.dump(2) << "\n";
    return kExitOk;
  }
  std::cout << "events " << state.event_count() << ", workers " << state.workers().size() << "\n";
  std::cout << "instances " << t.instances << " (incomplete " << t.incomplete << ")\n";
  std::cout << "mean " << fixed(t.mean_total_s, 1) << " s/instance (first click " << fixed(t.mean_first_s, 1)
            << " s, later clicks " << fixed(t.mean_later_s, 1) << " s)\n";
  std::cout << "total " << fixed(t.total_hours, 3) << " h, " << t.batches << " batches, cost $" << fixed(t.cost, 2)
            << "\n";
  if (quality) {
    std::cout << "box mIoU " << fixed(quality->macro.mean_iou, 4) << " over " << quality->macro.count
              << " annotations\n";
    for (const auto& [cls, s] : quality->classes) {
      std::cout << "  " << cls << ": mIoU " << fixed(s.mean_iou, 4) << ", >0.7 " << fixed(s.over_70, 3) << " ("
                << s.count << ")\n";
    }
  }
  return kExitOk;
}

struct VocArgs {
  std::string annotations, images, out;
  std::optional<std::string> segmentation, masks_out, edges, image_set;
  bool skip_difficult = false;
};

int run_voc(const VocArgs& a) {
  if (a.segmentation && !a.masks_out) throw UsageError("--segmentation needs --masks-out");
  VocConvertOptions o;
  o.annotations_dir = a.annotations;
  o.images_dir = a.images;
  if (a.segmentation) o.segmentation_dir = fs::path(*a.segmentation);
  if (a.masks_out) o.mask_out_dir = fs::path(*a.masks_out);
  if (a.edges) o.edges_dir = fs::path(*a.edges);
  if (a.image_set) o.image_ids = read_image_set(*a.image_set);
  o.skip_difficult = a.skip_difficult;
  const auto entries = convert_voc(o);
  write_manifest(a.out, entries);
  std::cout << "wrote " << entries.size() << " entries to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segmentation from extreme clicks, and the crowd annotation service around it."};
  app.require_subcommand(1);

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "Segment one object from a box or four extreme clicks");
  segment->add_option("--image", seg.image, "input image (PNG or JPEG)")->required()->check(CLI::ExistingFile);
  segment->add_option("--clicks", seg.clicks, "clicks as JSON or a JSON file: {\"left\":[x,y],...} or 4 points");
  segment->add_option("--box", seg.box, "box as x0,y0,x1,y1 (inclusive pixels)");
  segment->add_option("--edges", seg.edges, "16-bit edge map PNG (required in clicks mode)")
      ->check(CLI::ExistingFile);
  segment->add_option("--out", seg.out, "output mask PNG; a .json sidecar is written next to it")->required();
  seg.energy.add(*segment);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate-clicks", "Write a manifest with clicks simulated from masks");
  simulate->add_option("--masks", sim.masks, "directory of mask PNGs")->required();
  simulate->add_option("--out", sim.out, "output manifest (JSON lines)")->required();
  simulate->add_option("--images", sim.images, "directory of images matched by file stem");
  simulate->add_option("--edges", sim.edges, "directory of edge maps matched by file stem");
  simulate->add_option("--class", sim.cls, "class label for every entry")->default_val("object");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Segment every manifest entry and score it");
  evaluate->add_option("--manifest", ev.manifest, "manifest (JSON lines)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--report", ev.report, "output directory for report.json, entries.csv, timings.csv")
      ->required();
  evaluate->add_option("--jobs", ev.jobs, "parallel workers")->default_val(1)->check(CLI::PositiveNumber);
  evaluate->add_option("--masks-out", ev.masks_out, "directory for predicted masks");
  ev.energy.add(*evaluate);

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the annotation HTTP service until SIGINT");
  serve->add_option("--config", sv.config, "service config JSON")->check(CLI::ExistingFile);
  serve->add_option("--manifest", sv.manifest, "manifest (overrides the config)");
  serve->add_option("--log", sv.log, "event log JSONL (overrides the config)");
  serve->add_option("--static", sv.static_dir, "directory served at / (overrides the config)");
  serve->add_option("--host", sv.host, "bind address")->default_val("127.0.0.1");
  serve->add_option("--port", sv.port, "port, 0 for any free port")->default_val(8080)->check(CLI::Range(0, 65535));
  serve->add_option("--seed", sv.seed, "batch assignment seed (overrides the config)");

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "Summarize timing and quality from an event log");
  report->add_option("--log", rp.log, "event log JSONL")->required()->check(CLI::ExistingFile);
  report->add_option("--manifest", rp.manifest, "manifest with ground truth for quality")
      ->check(CLI::ExistingFile);
  report->add_option("--pay", rp.pay, "pay per batch of 10")->default_val(0.15);
  report->add_flag("--json", rp.json, "print JSON instead of text");

  VocArgs voc;
  auto* voc_cmd = app.add_subcommand("voc-convert", "Build a manifest from a PASCAL VOC style tree");
  voc_cmd->add_option("--annotations", voc.annotations, "Annotations directory (*.xml)")
      ->required()
      ->check(CLI::ExistingDirectory);
  voc_cmd->add_option("--images", voc.images, "JPEGImages directory")->required()->check(CLI::ExistingDirectory);
  voc_cmd->add_option("--segmentation", voc.segmentation, "SegmentationObject directory")
      ->check(CLI::ExistingDirectory);
  voc_cmd->add_option("--masks-out", voc.masks_out, "directory for per-object masks");
  voc_cmd->add_option("--edges", voc.edges, "directory of edge maps named <stem>.png")
      ->check(CLI::ExistingDirectory);
  voc_cmd->add_option("--image-set", voc.image_set, "image set file, one id per line")->check(CLI::ExistingFile);
  voc_cmd->add_flag("--skip-difficult", voc.skip_difficult, "drop objects marked difficult");
  voc_cmd->add_option("--out", voc.out, "output manifest (JSON lines)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (segment->parsed()) return run_segment(seg);
    if (simulate->parsed()) return run_simulate(sim);
    if (evaluate->parsed()) return run_evaluate(ev);
    if (serve->parsed()) return run_serve(sv);
    if (report->parsed()) return run_report(rp);
    if (voc_cmd->parsed()) return run_voc(voc);
  } catch (const UsageError& e) {
    std::cerr << "xclick: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "xclick: " << e.what() << "\n";
    return e.code() == ErrorCode::Internal ? kExitPartial : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "xclick: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitUsage;
}
