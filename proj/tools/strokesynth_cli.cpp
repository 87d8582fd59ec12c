// strokesynth: extract | reconstruct | synthesize | render

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <strokesynth/strokesynth.hpp>

namespace ss = strokesynth;

namespace {

struct ExtractArgs {
  std::string style, out, debug_labels;
  int strokes = 3000;
  double compactness = 10.0;
  int slic_iters = 10;
};

struct ReconstructArgs {
  std::string style, strokes_in, out, render;
  ss::OptimConfig optim;
  double softness = ss::kDefaultSoftness;
};

struct SynthesizeArgs {
  std::string strokes_in, style_render, content, out_svg, out_png, report;
  ss::OptimConfig optim;
  ss::SinkhornConfig ot;
  std::string ot_cost = "sqeuclidean";
  double lambda_ot = 1.0, lambda_l2 = 1.0;
  double softness = ss::kDefaultSoftness;
  bool quiet = false;
};

struct RenderArgs {
  std::string svg, out;
  double softness = ss::kDefaultSoftness;
};

void add_optim_flags(CLI::App* cmd, ss::OptimConfig& o) {
  cmd->add_option("--lr-points", o.lr_points, "Adam learning rate for control points")->capture_default_str();
  cmd->add_option("--lr-width", o.lr_width, "Adam learning rate for widths")->capture_default_str();
  cmd->add_option("--lr-color", o.lr_color, "Adam learning rate for colors")->capture_default_str();
}

void progress_line(const ss::StepInfo& s) {
  std::fprintf(stderr, "step=%d l2=%.9g ot=%.9g\n", s.step, s.l2, s.ot);
}

int run_extract(const ExtractArgs& a) {
  const ss::RasterImage img = ss::load_png(a.style);
  ss::SlicParams p;
  p.regions = a.strokes;
  p.compactness = a.compactness;
  p.iterations = a.slic_iters;
  const ss::LabelMap lm = ss::slic_segment(img, p);
  const ss::StrokeSet s = ss::extract_stroke_set(img, lm);
  ss::export_json(s, a.out);
  if (!a.debug_labels.empty()) ss::save_label_png(lm, a.debug_labels);
  std::fprintf(stderr, "extracted %zu strokes from %d superpixels\n", s.size(), lm.region_count);
  return 0;
}

int run_reconstruct(const ReconstructArgs& a) {
  const ss::RasterImage ref = ss::load_png(a.style);
  const ss::StrokeSet init = ss::import_json(a.strokes_in);
  const ss::RunReport r = ss::imitation_fit(init, ref, a.optim, a.softness, progress_line);
  const double initial = r.loss_trace.empty() ? r.final_loss : r.loss_trace.front();
  std::fprintf(stderr, "initial_mse=%.9g final_mse=%.9g\n", initial, r.final_loss);
  ss::export_json(r.strokes, a.out);
  if (!a.render.empty()) ss::save_png(ss::render(r.strokes, a.softness).image, a.render);
  return 0;
}

int run_synthesize(SynthesizeArgs a) {
  a.ot.cost = a.ot_cost == "euclidean" ? ss::OtCost::Euclidean : ss::OtCost::SqEuclidean;
  const ss::StrokeSet init = ss::import_json(a.strokes_in);
  const ss::RasterImage ref = ss::load_png(a.style_render);
  const ss::RasterImage content = ss::load_png(a.content);
  ss::ProgressFn progress;
  if (!a.quiet) progress = progress_line;
  const ss::RunReport r =
      ss::synthesize(init, ref, content, a.optim, a.ot, a.lambda_ot, a.lambda_l2, a.softness, progress);
  ss::export_svg(r.strokes, a.out_svg);
  if (!a.out_png.empty()) ss::save_png(ss::render(r.strokes, a.softness).image, a.out_png);
  if (!a.report.empty()) ss::export_report(r, a.report);
  return 0;
}

int run_render(const RenderArgs& a) {
  const ss::StrokeSet s = ss::import_svg(a.svg);
  ss::save_png(ss::render(s, a.softness).image, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Painterly stroke extraction, refinement and style-preserving synthesis"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();

  ExtractArgs ex;
  CLI::App* extract = app.add_subcommand("extract", "Segment a style image into superpixels and fit one stroke each");
  extract->add_option("--style", ex.style, "Style image (PNG)")->required()->check(CLI::ExistingFile);
  extract->add_option("--strokes", ex.strokes, "Target number of strokes")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  extract->add_option("--out", ex.out, "Output stroke JSON")->required();
  extract->add_option("--debug-labels", ex.debug_labels, "Write the label map as a color PNG");
  extract->add_option("--compactness", ex.compactness, "SLIC compactness")->capture_default_str();
  extract->add_option("--slic-iters", ex.slic_iters, "SLIC iterations")->capture_default_str();

  ReconstructArgs rc;
  CLI::App* reconstruct = app.add_subcommand("reconstruct", "Refine strokes so their render matches the style image");
  reconstruct->add_option("--style", rc.style, "Style image (PNG)")->required()->check(CLI::ExistingFile);
  reconstruct->add_option("--strokes-in", rc.strokes_in, "Input stroke JSON")->required()->check(CLI::ExistingFile);
  reconstruct->add_option("--iters", rc.optim.steps, "Optimization steps")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  reconstruct->add_option("--out", rc.out, "Output stroke JSON")->required();
  reconstruct->add_option("--render", rc.render, "Write the reconstruction as PNG");
  reconstruct->add_option("--softness", rc.softness, "Edge softness in pixels")->capture_default_str();
  add_optim_flags(reconstruct, rc.optim);

  SynthesizeArgs sy;
  sy.optim.steps = 2000;
  CLI::App* synth = app.add_subcommand("synthesize", "Move style strokes toward a content image");
  synth->add_option("--strokes-in", sy.strokes_in, "Input stroke JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--style-render", sy.style_render, "Render of the reference strokes (PNG)")
      ->required()
      ->check(CLI::ExistingFile);
  synth->add_option("--content", sy.content, "Content target image (PNG)")->required()->check(CLI::ExistingFile);
  synth->add_option("--steps", sy.optim.steps, "Optimization steps")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--lambda-ot", sy.lambda_ot, "Weight of the transport term")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--lambda-l2", sy.lambda_l2, "Weight of the pixel term")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--ot-grid", sy.ot.grid_size, "Transport grid size")->capture_default_str();
  synth->add_option("--ot-reg", sy.ot.reg, "Entropic regularization")->capture_default_str();
  synth->add_option("--ot-iters", sy.ot.max_iters, "Sinkhorn iteration cap")->capture_default_str();
  synth->add_option("--ot-cost", sy.ot_cost, "Ground cost")
      ->capture_default_str()
      ->check(CLI::IsMember({"euclidean", "sqeuclidean"}));
  synth->add_option("--out-svg", sy.out_svg, "Output SVG")->required();
  synth->add_option("--out-png", sy.out_png, "Write a raster preview");
  synth->add_option("--report", sy.report, "Write a JSON run report");
  synth->add_option("--softness", sy.softness, "Edge softness in pixels")->capture_default_str();
  synth->add_flag("--quiet", sy.quiet, "Suppress progress lines");
  add_optim_flags(synth, sy.optim);

  RenderArgs rd;
  CLI::App* rend = app.add_subcommand("render", "Rasterize an SVG written by this tool");
  rend->add_option("--svg", rd.svg, "Input SVG")->required()->check(CLI::ExistingFile);
  rend->add_option("--out", rd.out, "Output PNG")->required();
  rend->add_option("--softness", rd.softness, "Edge softness in pixels")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    ss::set_thread_count(threads);
    if (*extract) return run_extract(ex);
    if (*reconstruct) return run_reconstruct(rc);
    if (*synth) return run_synthesize(sy);
    if (*rend) return run_render(rd);
  } catch (const ss::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ss::ErrorKind::Unsupported ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
