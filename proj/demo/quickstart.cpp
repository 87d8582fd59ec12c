// End-to-end run on a generated image: extract, refine, synthesize, export.

#include <cmath>
#include <cstdio>
#include <string>

#include <strokesynth/strokesynth.hpp>

namespace ss = strokesynth;

namespace {

ss::RasterImage make_style(int w, int h) {
  ss::RasterImage img(w, h, 3, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double band = 0.5 + 0.5 * std::sin(0.15 * x + 0.05 * y);
      const bool disk = std::hypot(x - 0.6 * w, y - 0.4 * h) < 0.2 * w;
      img.at(x, y, 0) = disk ? 0.85 : 0.2 + 0.6 * band;
      img.at(x, y, 1) = disk ? 0.3 : 0.4 * band;
      img.at(x, y, 2) = disk ? 0.1 : 0.8 - 0.5 * band;
    }
  }
  return img;
}

ss::RasterImage make_content(int w, int h) {
  ss::RasterImage img(w, h, 3, 1.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = std::hypot(x - 0.35 * w, y - 0.6 * h) < 0.25 * w ? 0.15 : 0.9;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
    }
  }
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : ".";
  const int w = 96, h = 96;

  const ss::RasterImage style = make_style(w, h);
  const ss::LabelMap labels = ss::slic_segment(style, 150);
  const ss::StrokeSet extracted = ss::extract_stroke_set(style, labels);
  std::printf("extracted %zu strokes\n", extracted.size());

  ss::OptimConfig fit;
  fit.steps = 60;
  const ss::RunReport refined = ss::imitation_fit(extracted, style, fit);
  std::printf("imitation mse %.5f -> %.5f\n", refined.loss_trace.front(), refined.final_loss);

  const ss::RasterImage ref = ss::render(refined.strokes).image;
  ss::OptimConfig synth;
  synth.steps = 40;
  const ss::RunReport out = ss::synthesize(refined.strokes, ref, make_content(w, h), synth, ss::SinkhornConfig{});
  std::printf("synthesis l2 %.5f -> %.5f, mean displacement %.2f px\n", out.l2_trace.front(), out.l2_trace.back(),
              ss::mean_control_point_displacement(refined.strokes, out.strokes));

  ss::save_png(style, dir + "/quickstart_style.png");
  ss::save_png(ss::render(out.strokes).image, dir + "/quickstart_result.png");
  ss::export_svg(out.strokes, dir + "/quickstart_result.svg");
  return 0;
}
