#pragma once

// Lossless JSON interchange for stroke sets (schema version 1) and JSON run
// reports.
//
//   {"version": 1,
//    "canvas": {"width": W, "height": H},
//    "strokes": [{"points": [[x,y],[x,y],[x,y]], "color": [r,g,b,a], "width": w}, ...]}

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "core.hpp"
#include "optimization.hpp"

namespace strokesynth {

inline constexpr int kStrokeJsonVersion = 1;

inline nlohmann::json stroke_set_to_json(const StrokeSet& s) {
  nlohmann::json strokes = nlohmann::json::array();
  for (const Stroke& st : s.strokes) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : st.points) pts.push_back({p.x, p.y});
    strokes.push_back({{"points", pts},
                       {"color", {st.color.r, st.color.g, st.color.b, st.color.a}},
                       {"width", st.width}});
  }
  return {{"version", kStrokeJsonVersion},
          {"canvas", {{"width", s.canvas_width}, {"height", s.canvas_height}}},
          {"strokes", strokes}};
}

namespace detail {
inline double json_number(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number()) fail("stroke JSON: expected a number at " + where);
  return j.get<double>();
}
}  // namespace detail

inline StrokeSet stroke_set_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail("stroke JSON: top level must be an object");
  if (!j.contains("version") || !j["version"].is_number_integer()) fail("stroke JSON: missing integer \"version\"");
  const int version = j["version"].get<int>();
  if (version != kStrokeJsonVersion)
    throw Error(ErrorKind::Unsupported, "stroke JSON: unsupported schema version " + std::to_string(version) +
                                            " (expected " + std::to_string(kStrokeJsonVersion) + ")");
  if (!j.contains("canvas") || !j["canvas"].is_object()) fail("stroke JSON: missing \"canvas\" object");
  const auto& canvas = j["canvas"];
  if (!canvas.contains("width") || !canvas["width"].is_number_integer() || !canvas.contains("height") ||
      !canvas["height"].is_number_integer())
    fail("stroke JSON: canvas needs integer width and height");
  StrokeSet s;
  s.canvas_width = canvas["width"].get<int>();
  s.canvas_height = canvas["height"].get<int>();
  if (s.canvas_width <= 0 || s.canvas_height <= 0) fail("stroke JSON: canvas dimensions must be positive");
  if (!j.contains("strokes") || !j["strokes"].is_array()) fail("stroke JSON: missing \"strokes\" array");

  const auto& arr = j["strokes"];
  s.strokes.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& js = arr[i];
    const std::string at = "stroke " + std::to_string(i);
    if (!js.is_object()) fail("stroke JSON: " + at + " is not an object");
    if (!js.contains("points") || !js["points"].is_array() || js["points"].size() != 3)
      fail("stroke JSON: " + at + " must have exactly 3 control points");
    if (!js.contains("color") || !js["color"].is_array() || js["color"].size() != 4)
      fail("stroke JSON: " + at + " must have an RGBA color");
    if (!js.contains("width")) fail("stroke JSON: " + at + " has no width");
    Stroke st;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto& p = js["points"][k];
      if (!p.is_array() || p.size() != 2) fail("stroke JSON: " + at + " control point must be [x, y]");
      st.points[k] = {detail::json_number(p[0], at), detail::json_number(p[1], at)};
    }
    for (std::size_t c = 0; c < 4; ++c) st.color[c] = detail::json_number(js["color"][c], at);
    st.width = detail::json_number(js["width"], at);
    s.strokes.push_back(st);
  }
  return s;
}

inline std::string export_json_string(const StrokeSet& s) { return stroke_set_to_json(s).dump(1) + "\n"; }

inline StrokeSet import_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(std::string("stroke JSON: malformed JSON: ") + e.what());
  }
  return stroke_set_from_json(j);
}

namespace detail {
inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}
}  // namespace detail

inline void export_json(const StrokeSet& s, const std::string& path) { detail::write_file(path, export_json_string(s)); }

inline StrokeSet import_json(const std::string& path) { return import_json_string(detail::read_file(path)); }

// ---------------------------------------------------------------------------
// Run reports

inline nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json cfg = {{"lr_points", r.config.lr_points},   {"lr_width", r.config.lr_width},
                        {"lr_color", r.config.lr_color},     {"steps", r.config.steps},
                        {"adam_beta1", r.config.adam_beta1}, {"adam_beta2", r.config.adam_beta2},
                        {"adam_eps", r.config.adam_eps},     {"softness", r.softness}};
  nlohmann::json j = {{"kind", r.kind},
                      {"steps_executed", r.loss_trace.size()},
                      {"stroke_count", r.strokes.size()},
                      {"loss_trace", r.loss_trace},
                      {"l2_trace", r.l2_trace},
                      {"final_loss", r.final_loss},
                      {"wall_time_s", r.wall_time_s},
                      {"config", cfg}};
  if (r.kind == "synthesis") {
    j["ot_trace"] = r.ot_trace;
    j["config"]["lambda_ot"] = r.lambda_ot;
    j["config"]["lambda_l2"] = r.lambda_l2;
    j["config"]["ot"] = {{"grid_size", r.ot_config.grid_size},
                         {"reg", r.ot_config.reg},
                         {"max_iters", r.ot_config.max_iters},
                         {"marginal_tol", r.ot_config.marginal_tol},
                         {"cost", r.ot_config.cost == OtCost::SqEuclidean ? "sqeuclidean" : "euclidean"}};
  }
  return j;
}

inline void export_report(const RunReport& r, const std::string& path) {
  detail::write_file(path, report_to_json(r).dump(1) + "\n");
}

}  // namespace strokesynth
