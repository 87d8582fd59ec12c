// Drives the strokesynth executable end to end.
// Usage: cli_integration <path-to-strokesynth> <work-dir>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>

#include "test_support.hpp"

namespace fs = std::filesystem;
namespace ts = testing_support;
using namespace strokesynth;

namespace {

std::string g_cli;
fs::path g_dir;
int g_failures = 0;

void check(bool ok, const std::string& name) {
  std::printf("%s - %s\n", ok ? "PASS" : "FAIL", name.c_str());
  if (!ok) ++g_failures;
}

std::string path(const std::string& name) { return (g_dir / name).string(); }

int run(const std::string& args, const std::string& log = "last.log") {
  const std::string cmd = "\"" + g_cli + "\" " + args + " > \"" + path(log) + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_wall_time(const std::string& report_path) {
  nlohmann::json j = nlohmann::json::parse(slurp(report_path));
  j.erase("wall_time_s");
  return j.dump();
}

double max_abs_diff(const RasterImage& a, const RasterImage& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) return 1e9;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: cli_integration <strokesynth> <work-dir>\n";
    return 2;
  }
  g_cli = argv[1];
  g_dir = argv[2];
  fs::create_directories(g_dir);

  save_png(ts::synthetic_image(6, 64, 64, 11), path("style.png"));
  save_png(ts::synthetic_image(8, 64, 64, 12), path("content.png"));
  save_png(ts::synthetic_image(6, 48, 64, 13), path("narrow.png"));

  check(run("--help") == 0, "help exits 0");
  check(run("") == 1, "missing subcommand exits 1");

  const int ex = run("extract --style " + path("style.png") + " --strokes 80 --out " + path("strokes.json") +
                     " --debug-labels " + path("labels.png"));
  check(ex == 0, "extract exits 0");
  const StrokeSet extracted = import_json(path("strokes.json"));
  check(extracted.size() >= 60 && extracted.size() <= 100 && extracted.canvas_width == 64,
        "extract writes about the requested stroke count (" + std::to_string(extracted.size()) + ")");
  check(load_png(path("labels.png")).width() == 64, "extract writes the label debug image");
  check(slurp(path("last.log")).find("extracted") != std::string::npos, "extract reports its count");

  check(run("extract --style " + path("style.png") + " --strokes 0 --out " + path("zero.json")) == 1,
        "extract with zero strokes exits 1");
  check(run("extract --style " + path("missing.png") + " --out " + path("m.json")) == 1,
        "extract with a missing image exits 1");

  check(run("reconstruct --style " + path("style.png") + " --strokes-in " + path("strokes.json") +
            " --iters 0 --out " + path("same.json")) == 0,
        "reconstruct with zero iterations exits 0");
  check(slurp(path("same.json")) == slurp(path("strokes.json")), "zero iterations leave the strokes unchanged");

  check(run("reconstruct --style " + path("style.png") + " --strokes-in " + path("strokes.json") +
            " --iters 15 --out " + path("fit.json") + " --render " + path("fit.png")) == 0,
        "reconstruct exits 0");
  {
    const std::string log = slurp(path("last.log"));
    double initial = 0, final_mse = 0;
    const auto at = log.find("initial_mse=");
    const bool parsed =
        at != std::string::npos && std::sscanf(log.c_str() + at, "initial_mse=%lf final_mse=%lf", &initial, &final_mse) == 2;
    check(parsed && final_mse < initial, "reconstruct lowers the pixel loss");
    check(max_abs_diff(load_png(path("fit.png")), render(import_json(path("fit.json"))).image) <= 0.5 / 255 + 1e-9,
          "reconstruct render matches the written strokes");
  }
  check(run("reconstruct --style " + path("narrow.png") + " --strokes-in " + path("strokes.json") +
            " --iters 5 --out " + path("bad.json")) == 1,
        "reconstruct with a mismatched canvas exits 1");

  const std::string synth_args = "synthesize --strokes-in " + path("fit.json") + " --style-render " + path("fit.png") +
                                 " --content " + path("content.png") + " --steps 4";
  check(run(synth_args + " --out-svg " + path("a.svg") + " --report " + path("a.json") + " --out-png " +
                path("a.png"),
            "synth_a.log") == 0,
        "synthesize exits 0");
  check(run(synth_args + " --out-svg " + path("b.svg") + " --report " + path("b.json"), "synth_b.log") == 0,
        "synthesize repeat exits 0");
  check(slurp(path("a.svg")) == slurp(path("b.svg")), "synthesize is reproducible (SVG)");
  check(without_wall_time(path("a.json")) == without_wall_time(path("b.json")),
        "synthesize is reproducible (report without wall time)");
  check(slurp(path("synth_a.log")) == slurp(path("synth_b.log")), "synthesize is reproducible (progress)");
  {
    std::istringstream lines(slurp(path("synth_a.log")));
    const std::regex re(R"(step=\d+ l2=[-+0-9.eE]+ ot=[-+0-9.eE]+)");
    std::string line;
    int count = 0;
    bool all = true;
    while (std::getline(lines, line)) {
      ++count;
      all = all && std::regex_match(line, re);
    }
    check(all && count == 4, "synthesize prints one progress line per step");
  }
  {
    const nlohmann::json rep = nlohmann::json::parse(slurp(path("a.json")));
    check(rep["kind"] == "synthesis" && rep["ot_trace"].size() == 4 && rep["l2_trace"].size() == 4,
          "report holds per-step traces");
  }
  check(run(synth_args + " --quiet --out-svg " + path("q.svg"), "synth_q.log") == 0 &&
            slurp(path("synth_q.log")).empty(),
        "quiet suppresses progress");
  check(run("synthesize --strokes-in " + path("fit.json") + " --style-render " + path("narrow.png") + " --content " +
            path("content.png") + " --steps 2 --out-svg " + path("bad.svg")) == 1,
        "synthesize with a mismatched canvas exits 1");

  check(run("synthesize --strokes-in " + path("fit.json") + " --style-render " + path("fit.png") + " --content " +
            path("content.png") + " --steps 0 --out-svg " + path("zero.svg")) == 0,
        "synthesize with zero steps exits 0");
  check(slurp(path("zero.svg")) == export_svg_string(import_json(path("fit.json"))),
        "zero steps export the input strokes");

  check(run("render --svg " + path("a.svg") + " --out " + path("a_rerender.png")) == 0, "render exits 0");
  check(max_abs_diff(load_png(path("a_rerender.png")), load_png(path("a.png"))) <= 2.0 / 255,
        "render of the SVG matches the synthesis preview");

  StrokeSet empty;
  empty.canvas_width = 20;
  empty.canvas_height = 10;
  export_svg(empty, path("empty.svg"));
  check(run("render --svg " + path("empty.svg") + " --out " + path("empty.png")) == 0, "render of an empty SVG exits 0");
  {
    const RasterImage white = load_png(path("empty.png"));
    bool all_white = white.width() == 20 && white.height() == 10;
    for (double v : white.data()) all_white = all_white && v == 1.0;
    check(all_white, "empty SVG renders a white canvas");
  }

  {
    std::ofstream out(path("circle.svg"));
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"10\" height=\"10\" viewBox=\"0 0 10 10\">"
           "<circle cx=\"5\" cy=\"5\" r=\"2\"/></svg>\n";
  }
  check(run("render --svg " + path("circle.svg") + " --out " + path("circle.png")) == 2,
        "render of unsupported SVG content exits 2");
  check(slurp(path("last.log")).find("circle") != std::string::npos, "unsupported content is named");

  save_png(ts::synthetic_image(1, 256, 256, 21), path("big.png"));
  check(run("extract --style " + path("big.png") + " --out " + path("big.json")) == 0, "default extract exits 0");
  const std::size_t big = import_json(path("big.json")).size();
  check(big >= 2900 && big <= 3100, "default extract yields about 3000 strokes (" + std::to_string(big) + ")");

  std::printf("%d failure(s)\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
