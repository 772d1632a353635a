#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "xclick/event_log.hpp"
#include "xclick/protocol.hpp"

#include "httplib.h"

extern char** environ;

using namespace xclick;
namespace fs = std::filesystem;

namespace {

const fs::path kCli = XCLICK_CLI_PATH;
const fs::path kFixtures = XCLICK_FIXTURE_DIR;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("xclick_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

Run run(const std::vector<std::string>& args) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() / "xclick_cli_runs";
  fs::create_directories(dir);
  const fs::path out = dir / ("out" + std::to_string(counter) + ".txt");
  const fs::path err = dir / ("err" + std::to_string(counter++) + ".txt");
  std::string cmd = quote(kCli.string());
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " >" + quote(out.string()) + " 2>" + quote(err.string());
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

void write_fixture(const fs::path& dir, const std::string& id, const BinaryMask& truth, std::uint64_t seed) {
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "edges");
  const RgbImage img = testing::paint(truth, testing::kRed, testing::kBlue, 0.04, seed);
  save_image(dir / "images" / (id + ".png"), img);
  save_mask(dir / "masks" / (id + ".png"), truth);
  save_edge_map(gradient_edges(img), dir / "edges" / (id + ".png"));
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

// One worker: qualification, then one batch whose instances take 7.0 s.
void write_timing_log(const fs::path& path) {
  EventLog log(path);
  log.append(events::registered("w"));
  const std::vector<std::string> quals = {"q0", "q1", "q2", "q3", "q4"};
  log.append(events::qualification_started("w", 1, quals));
  const std::vector<Point> pts = {{0, 5}, {5, 0}, {9, 5}, {5, 9}};
  const std::array<std::optional<std::int64_t>, 4> none{};
  for (std::size_t i = 0; i < 5; ++i) {
    log.append(events::qualification_clicks("w", 1, i, pts, {true, true, true, true}, std::nullopt, none));
  }
  Batch b;
  b.id = "b1";
  b.worker = "w";
  b.class_label = "dog";
  for (int i = 0; i < 10; ++i) b.images.push_back("img" + std::to_string(i));
  b.golden_index = 4;
  log.append(events::batch_opened(b));
  std::int64_t shown = 1000;
  for (std::size_t i = 0; i < 10; ++i) {
    log.append(events::batch_clicks("w", "b1", i, pts, shown,
                                    {shown + 2500, shown + 4000, shown + 5500, shown + 7000}));
    shown += 20000;
  }
  log.append(events::batch_submitted("w", "b1", SubmitOutcome::Accepted));
}

}  // namespace

TEST_CASE("help on every subcommand documents every flag") {
  const std::map<std::string, std::vector<std::string>> flags = {
      {"segment",
       {"--image", "--clicks", "--box", "--edges", "--out", "--config", "--mode", "--lambda", "--beta", "--components",
        "--covariance-floor", "--iterations", "--em-iterations", "--search-margin", "--seed"}},
      {"simulate-clicks", {"--masks", "--out", "--images", "--edges", "--class"}},
      {"evaluate", {"--manifest", "--report", "--jobs", "--masks-out", "--config", "--mode", "--lambda", "--seed"}},
      {"serve", {"--config", "--manifest", "--log", "--static", "--host", "--port", "--seed"}},
      {"report", {"--log", "--manifest", "--pay", "--json"}},
      {"voc-convert",
       {"--annotations", "--images", "--segmentation", "--masks-out", "--edges", "--image-set", "--skip-difficult",
        "--out"}},
  };
  const Run top = run({"--help"});
  CHECK(top.code == 0);
  for (const auto& [cmd, expected] : flags) {
    CAPTURE(cmd);
    CHECK(top.out.find(cmd) != std::string::npos);
    const Run r = run({cmd, "--help"});
    CHECK(r.code == 0);
    for (const auto& f : expected) {
      CAPTURE(f);
      CHECK(r.out.find(f) != std::string::npos);
    }
  }
  CHECK(run({}).code == 2);
  CHECK(run({"segment", "--bogus"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("segment writes a mask and a sidecar") {
  const fs::path dir = scratch("segment");
  const BinaryMask truth = testing::square_fixture_mask();
  write_fixture(dir, "sq", truth, 1);
  const std::string image = (dir / "images" / "sq.png").string();
  const std::string edges = (dir / "edges" / "sq.png").string();
  const Json clicks = to_json(simulate_extreme_clicks(truth));

  const Run r = run({"segment", "--image", image, "--clicks", clicks.dump(), "--edges", edges, "--mode", "clicks",
                     "--out", (dir / "out" / "clicks.png").string()});
  REQUIRE(r.code == 0);
  CHECK(iou_masks(load_mask(dir / "out" / "clicks.png"), truth) >= 0.95);
  const Json sidecar = read_json_file(dir / "out" / "clicks.json");
  CHECK(sidecar.at("mode") == "clicks");
  CHECK(sidecar.at("box") == Json({16, 16, 47, 47}));
  CHECK(sidecar.at("iterations").get<int>() >= 1);
  CHECK(sidecar.at("config").at("seed") == 0);

  // Clicks from a file give byte-identical output.
  write_json_file(dir / "clicks.json", clicks);
  const Run again = run({"segment", "--image", image, "--clicks", (dir / "clicks.json").string(), "--edges", edges,
                         "--mode", "clicks", "--out", (dir / "out" / "again.png").string()});
  REQUIRE(again.code == 0);
  CHECK(slurp(dir / "out" / "again.png") == slurp(dir / "out" / "clicks.png"));

  const Run box = run({"segment", "--image", image, "--box", "16,16,47,47", "--mode", "box", "--out",
                       (dir / "out" / "box.png").string()});
  CHECK(box.code == 0);
  CHECK(load_mask(dir / "out" / "box.png").count(Label::Object) > 0);

  const Run no_edges = run({"segment", "--image", image, "--clicks", clicks.dump(), "--mode", "clicks", "--out",
                            (dir / "out" / "x.png").string()});
  CHECK(no_edges.code == 2);
  CHECK(no_edges.err.find("--edges") != std::string::npos);
  CHECK(run({"segment", "--image", image, "--mode", "box", "--out", (dir / "x.png").string()}).code == 2);
  CHECK(run({"segment", "--image", image, "--box", "1,2", "--out", (dir / "x.png").string()}).code == 2);
  CHECK(run({"segment", "--image", (dir / "missing.png").string(), "--box", "1,1,3,3", "--out", "x.png"}).code == 2);
  CHECK(run({"segment", "--image", image, "--box", "16,16,47,47", "--lambda", "-1", "--out", "x.png"}).code == 2);
}

TEST_CASE("simulate-clicks") {
  const fs::path dir = scratch("simulate");
  write_fixture(dir, "a", testing::square_fixture_mask(), 1);
  write_fixture(dir, "b", testing::l_fixture_mask(), 2);
  write_fixture(dir, "c", testing::u_fixture_mask(), 3);
  const std::string masks = (dir / "masks").string();
  const Run r = run({"simulate-clicks", "--masks", masks, "--images", (dir / "images").string(), "--out",
                     (dir / "m.jsonl").string()});
  REQUIRE(r.code == 0);
  const auto first = slurp(dir / "m.jsonl");
  const auto ls = lines(first);
  REQUIRE(ls.size() == 3);
  CHECK(Json::parse(ls[0]).at("id") == "a");
  CHECK(Json::parse(ls[2]).at("id") == "c");
  CHECK(Json::parse(ls[1]).at("class") == "object");
  CHECK(Json::parse(ls[1]).contains("image"));
  CHECK(clicks_from_json(Json::parse(ls[1]).at("clicks")) == simulate_extreme_clicks(testing::l_fixture_mask()));

  REQUIRE(run({"simulate-clicks", "--masks", masks, "--images", (dir / "images").string(), "--out",
               (dir / "m.jsonl").string()})
              .code == 0);
  CHECK(slurp(dir / "m.jsonl") == first);

  fs::create_directories(dir / "empty");
  CHECK(run({"simulate-clicks", "--masks", (dir / "empty").string(), "--out", (dir / "e.jsonl").string()}).code == 2);

  std::ofstream(dir / "masks" / "broken.png") << "not a png";
  const Run partial = run({"simulate-clicks", "--masks", masks, "--out", (dir / "p.jsonl").string()});
  CHECK(partial.code == 0);
  CHECK(partial.err.find("broken.png") != std::string::npos);
  CHECK(lines(slurp(dir / "p.jsonl")).size() == 3);

  fs::create_directories(dir / "bad");
  std::ofstream(dir / "bad" / "x.png") << "nope";
  save_mask(dir / "bad" / "y.png", BinaryMask(4, 4));
  CHECK(run({"simulate-clicks", "--masks", (dir / "bad").string(), "--out", (dir / "b.jsonl").string()}).code == 2);
}

TEST_CASE("evaluate") {
  const fs::path dir = scratch("evaluate");
  write_fixture(dir, "l", testing::l_fixture_mask(), 1);
  write_fixture(dir, "mirrored", testing::mirrored_l_fixture_mask(), 2);
  write_fixture(dir, "u", testing::u_fixture_mask(), 3);
  const std::string manifest = (dir / "m.jsonl").string();
  REQUIRE(run({"simulate-clicks", "--masks", (dir / "masks").string(), "--images", (dir / "images").string(),
               "--edges", (dir / "edges").string(), "--class", "shape", "--out", manifest})
              .code == 0);

  const Run box = run({"evaluate", "--manifest", manifest, "--mode", "box", "--report", (dir / "box").string()});
  const Run clicks = run({"evaluate", "--manifest", manifest, "--mode", "clicks", "--jobs", "3", "--report",
                          (dir / "clicks").string()});
  REQUIRE(box.code == 0);
  REQUIRE(clicks.code == 0);
  CHECK(clicks.out.find("macro mIoU") != std::string::npos);
  const Json box_report = read_json_file(dir / "box" / "report.json");
  const Json clicks_report = read_json_file(dir / "clicks" / "report.json");
  CHECK(clicks_report.at("mode") == "clicks");
  CHECK(clicks_report.at("quality").at("macro").at("mean_iou").get<double>() >=
        box_report.at("quality").at("macro").at("mean_iou").get<double>());
  CHECK_FALSE(clicks_report.at("mean_error_rate").is_null());
  const std::string csv = slurp(dir / "clicks" / "entries.csv");
  CHECK(csv.rfind("id,class,iou,box_iou,error_rate,energy,iterations\n", 0) == 0);
  CHECK(lines(csv).size() == 4);
  CHECK(lines(slurp(dir / "clicks" / "timings.csv")).size() == 4);

  // Config file plus flag overrides; same inputs give identical tables.
  write_json_file(dir / "cfg.json", Json{{"lambda", 4.0}, {"mode", "box"}, {"seed", 3}});
  const Run c1 = run({"evaluate", "--manifest", manifest, "--config", (dir / "cfg.json").string(), "--mode", "clicks",
                      "--report", (dir / "c1").string()});
  const Run c2 = run({"evaluate", "--manifest", manifest, "--config", (dir / "cfg.json").string(), "--mode", "clicks",
                      "--jobs", "2", "--report", (dir / "c2").string()});
  REQUIRE(c1.code == 0);
  REQUIRE(c2.code == 0);
  CHECK(slurp(dir / "c1" / "entries.csv") == slurp(dir / "c2" / "entries.csv"));
  CHECK(slurp(dir / "c1" / "report.json") == slurp(dir / "c2" / "report.json"));
  CHECK(read_json_file(dir / "c1" / "report.json").at("mode") == "clicks");
  CHECK(slurp(dir / "c1" / "entries.csv") != csv);

  // A manifest line with an unreadable image fails that entry only.
  {
    std::ofstream(dir / "none.png") << "corrupt";
    std::ofstream m(manifest, std::ios::app);
    m << Json{{"id", "ghost"}, {"image", (dir / "none.png").string()}, {"class", "shape"}, {"box", {1, 1, 5, 5}}}.dump()
      << "\n";
  }
  const Run partial = run({"evaluate", "--manifest", manifest, "--mode", "box", "--report", (dir / "p").string()});
  CHECK(partial.code == 1);
  CHECK(partial.err.find("ghost") != std::string::npos);
  CHECK(read_json_file(dir / "p" / "report.json").at("evaluated") == 3);
  CHECK(run({"evaluate", "--manifest", manifest, "--mode", "diagonal", "--report", "x"}).code == 2);
}

TEST_CASE("report") {
  const fs::path dir = scratch("report");
  write_timing_log(dir / "events.jsonl");
  const Run r = run({"report", "--log", (dir / "events.jsonl").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("mean 7.0 s/instance") != std::string::npos);
  CHECK(r.out.find("first click 2.5 s") != std::string::npos);
  CHECK(r.out.find("instances 10") != std::string::npos);
  CHECK(r.out.find("1 batches, cost $0.15") != std::string::npos);

  const Run j = run({"report", "--log", (dir / "events.jsonl").string(), "--json"});
  REQUIRE(j.code == 0);
  const Json report = Json::parse(j.out);
  CHECK(report.at("timing").at("total_hours").get<double>() == doctest::Approx(10 * 7.0 / 3600.0));

  std::ofstream(dir / "empty.jsonl").close();
  const Run empty = run({"report", "--log", (dir / "empty.jsonl").string()});
  CHECK(empty.code == 0);
  CHECK(empty.out.find("instances 0") != std::string::npos);
  CHECK(empty.out.find("mean 0.0 s/instance") != std::string::npos);
  CHECK(run({"report", "--log", (dir / "missing.jsonl").string()}).code == 2);
  std::ofstream(dir / "bad.jsonl") << "{\"v\":1}\n";
  CHECK(run({"report", "--log", (dir / "bad.jsonl").string()}).code == 2);
}

TEST_CASE("voc-convert") {
  const fs::path dir = scratch("voc");
  const fs::path voc = kFixtures / "voc";
  const Run r = run({"voc-convert", "--annotations", (voc / "Annotations").string(), "--images",
                     (voc / "JPEGImages").string(), "--segmentation", (voc / "SegmentationObject").string(),
                     "--masks-out", (dir / "masks").string(), "--out", (dir / "voc.jsonl").string()});
  REQUIRE(r.code == 0);
  const auto ls = lines(slurp(dir / "voc.jsonl"));
  REQUIRE(ls.size() == 2);
  CHECK(Json::parse(ls[0]).at("class") == "dog");
  CHECK(load_mask(dir / "masks" / "000042_1.png").count(Label::Object) == 54);

  const Run skip = run({"voc-convert", "--annotations", (voc / "Annotations").string(), "--images",
                        (voc / "JPEGImages").string(), "--skip-difficult", "--out", (dir / "easy.jsonl").string()});
  REQUIRE(skip.code == 0);
  CHECK(lines(slurp(dir / "easy.jsonl")).size() == 1);
  CHECK(run({"voc-convert", "--annotations", (voc / "Annotations").string(), "--images", (voc / "JPEGImages").string(),
             "--segmentation", (voc / "SegmentationObject").string(), "--out", (dir / "x.jsonl").string()})
            .code == 2);
}

TEST_CASE("serve until SIGINT, then replay the log") {
  const fs::path dir = scratch("serve");
  // A minimal campaign: five qualification images.
  {
    std::ofstream m(dir / "m.jsonl");
    for (int i = 0; i < 5; ++i) {
      const BinaryMask truth = testing::rect_mask(40, 40, 10 + i, 10, 30, 30);
      const std::string id = "q" + std::to_string(i);
      save_image(dir / (id + ".png"), testing::paint(truth, testing::kRed, testing::kBlue));
      save_mask(dir / (id + "_mask.png"), truth);
      m << Json{{"id", id},
                {"image", (dir / (id + ".png")).string()},
                {"mask", (dir / (id + "_mask.png")).string()},
                {"class", "object"},
                {"pool", "qualification"}}
               .dump()
        << "\n";
    }
  }
  write_json_file(dir / "service.json",
                  Json{{"manifest", (dir / "m.jsonl").string()}, {"event_log", (dir / "events.jsonl").string()}});

  int pipe_fd[2];
  REQUIRE(pipe(pipe_fd) == 0);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, pipe_fd[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, pipe_fd[0]);
  const std::string cli = kCli.string(), config = (dir / "service.json").string();
  std::vector<char*> argv = {const_cast<char*>(cli.c_str()), const_cast<char*>("serve"),
                             const_cast<char*>("--config"), const_cast<char*>(config.c_str()),
                             const_cast<char*>("--port"),   const_cast<char*>("0"),
                             nullptr};
  pid_t pid = 0;
  REQUIRE(posix_spawn(&pid, cli.c_str(), &actions, nullptr, argv.data(), environ) == 0);
  posix_spawn_file_actions_destroy(&actions);
  close(pipe_fd[1]);

  std::string banner;
  char ch = 0;
  while (read(pipe_fd[0], &ch, 1) == 1 && ch != '\n') banner += ch;
  const auto colon = banner.rfind(':');
  REQUIRE(colon != std::string::npos);
  const int port = std::stoi(banner.substr(colon + 1));

  httplib::Client client("127.0.0.1", port);
  REQUIRE(client.Post("/api/worker/w/register", "", "application/json")->status == 200);
  const auto next = client.Get("/api/worker/w/next");
  REQUIRE(next);
  CHECK(Json::parse(next->body).at("task") == "q1-0");

  const Run busy = run({"serve", "--config", config, "--port", std::to_string(port)});
  CHECK(busy.code == 2);

  kill(pid, SIGINT);
  int status = 0;
  waitpid(pid, &status, 0);
  close(pipe_fd[0]);
  CHECK(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);

  const auto log = read_event_log(dir / "events.jsonl");
  REQUIRE(log.size() == 2);
  ProtocolState state;
  for (const Json& e : log) state.apply(e);
  CHECK(state.worker("w")->qualification->attempt == 1);
}
