#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <png.h>

#include "test_support.hpp"

using namespace strokesynth;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("strokesynth_io_" + name)).string();
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Validation;
}

}  // namespace

TEST_CASE("svg path element has the documented form") {
  Stroke st;
  st.points = {{{0, 0}, {5, 5}, {10, 0}}};
  st.color = {1, 0, 0, 1};
  st.width = 2;
  const std::string svg = export_svg_string(StrokeSet{{st}, 20, 10});
  CHECK_THAT(svg, ContainsSubstring("<path d=\"M 0.000 0.000 Q 5.000 5.000 10.000 0.000\" fill=\"none\" "
                                    "stroke=\"#FF0000\" stroke-opacity=\"1.000\" stroke-width=\"2.000\" "
                                    "stroke-linecap=\"round\"/>"));
  CHECK_THAT(svg, ContainsSubstring("width=\"20\" height=\"10\" viewBox=\"0 0 20 10\""));
}

TEST_CASE("empty stroke set exports a valid document") {
  const std::string svg = export_svg_string(StrokeSet{{}, 8, 8});
  CHECK(svg.find("<path") == std::string::npos);
  const StrokeSet back = import_svg_string(svg);
  CHECK(back.size() == 0);
  CHECK(back.canvas_width == 8);
}

TEST_CASE("svg round trip is exact to three decimals") {
  std::mt19937_64 rng(1);
  const StrokeSet s = clamp_params(testing_support::random_scene(rng, 64, 48, 25));
  const StrokeSet back = import_svg_string(export_svg_string(s));
  REQUIRE(back.size() == s.size());
  CHECK(back.canvas_width == 64);
  CHECK(back.canvas_height == 48);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      CHECK_THAT(back.strokes[i].points[k].x, WithinAbs(s.strokes[i].points[k].x, 5e-4 + 1e-12));
      CHECK_THAT(back.strokes[i].points[k].y, WithinAbs(s.strokes[i].points[k].y, 5e-4 + 1e-12));
    }
    for (std::size_t c = 0; c < 4; ++c) CHECK_THAT(back.strokes[i].color[c], WithinAbs(s.strokes[i].color[c], 5e-4));
    CHECK_THAT(back.strokes[i].width, WithinAbs(s.strokes[i].width, 5e-4 + 1e-12));
  }
}

TEST_CASE("svg importer rejects foreign content") {
  const std::string head = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"4\" height=\"4\" viewBox=\"0 0 4 4\">";
  CHECK_THROWS_WITH(import_svg_string(head + "<circle cx=\"1\" cy=\"1\" r=\"1\"/></svg>"),
                    ContainsSubstring("unsupported element"));
  CHECK(kind_of([&] { import_svg_string(head + "<circle cx=\"1\" cy=\"1\" r=\"1\"/></svg>"); }) ==
        ErrorKind::Unsupported);
  CHECK_THROWS_WITH(
      import_svg_string(head + "<path d=\"M 0 0 C 1 1 2 2 3 3\" fill=\"none\" stroke=\"#000000\"/></svg>"),
      ContainsSubstring("unsupported command"));
  CHECK_THROWS_WITH(
      import_svg_string(head + "<path d=\"M 0 0 Q 1 x 2 2\" fill=\"none\" stroke=\"#000000\"/></svg>"),
      ContainsSubstring("byte"));
  CHECK(kind_of([&] { import_svg_string(head + "<path d=\"M 0 0 Q 1 x 2 2\" stroke=\"#000000\"/></svg>"); }) ==
        ErrorKind::Validation);
}

TEST_CASE("parse error offsets point into the document") {
  const std::string doc =
      "<svg width=\"4\" height=\"4\" viewBox=\"0 0 4 4\"><path d=\"M 0 0 Q 1 1 2 ?\" stroke=\"#000000\"/></svg>";
  try {
    import_svg_string(doc);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string msg = e.what();
    const auto at = msg.find("byte ");
    REQUIRE(at != std::string::npos);
    const std::size_t offset = std::stoul(msg.substr(at + 5));
    CHECK(offset == doc.find('?'));
  }
}

TEST_CASE("render after svg round trip stays within quantization") {
  std::mt19937_64 rng(2);
  const StrokeSet s = clamp_params(testing_support::random_scene(rng, 40, 40, 30));
  const RasterImage a = render(s).image;
  const RasterImage b = render(import_svg_string(export_svg_string(s))).image;
  double worst = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  CHECK(worst <= 1e-3);
}

TEST_CASE("json round trip is bit exact") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const StrokeSet s = testing_support::random_scene(rng, 17 + trial, 9, trial * 3);
    CHECK(import_json_string(export_json_string(s)) == s);
  }
  const StrokeSet s = testing_support::random_scene(rng, 30, 30, 4);
  const std::string path = temp_path("roundtrip.json");
  export_json(s, path);
  CHECK(import_json(path) == s);
  std::remove(path.c_str());
}

TEST_CASE("json schema errors") {
  CHECK(kind_of([] { import_json_string(R"({"version": 2, "canvas": {"width": 1, "height": 1}, "strokes": []})"); }) ==
        ErrorKind::Unsupported);
  CHECK_THROWS_WITH(
      import_json_string(
          R"({"version": 1, "canvas": {"width": 4, "height": 4},
              "strokes": [{"points": [[0,0],[1,1]], "color": [0,0,0,1], "width": 1}]})"),
      ContainsSubstring("3 control points"));
  CHECK_THROWS_WITH(import_json_string("{not json"), ContainsSubstring("malformed"));
  CHECK(kind_of([] { import_json("/nonexistent/dir/x.json"); }) == ErrorKind::Io);
}

TEST_CASE("png save and load stay within one quantization step") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  RasterImage img(13, 7, 3);
  for (double& v : img.data()) v = u(rng);
  const std::string path = temp_path("rgb.png");
  save_png(img, path);
  const RasterImage back = load_png(path);
  REQUIRE(back.same_shape(img));
  for (std::size_t i = 0; i < img.data().size(); ++i) CHECK(std::abs(back.data()[i] - img.data()[i]) <= 1.0 / 255);
  std::remove(path.c_str());
}

TEST_CASE("png quantization rounds half up") {
  CHECK(quantize_byte(0.5 / 255) == 1);
  CHECK(quantize_byte(1.49 / 255) == 1);
  CHECK(quantize_byte(-0.2) == 0);
  CHECK(quantize_byte(1.7) == 255);
}

TEST_CASE("transparent png pixels load as white") {
  const std::string path = temp_path("rgba.png");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 2;
  image.height = 1;
  image.format = PNG_FORMAT_RGBA;
  const unsigned char px[8] = {0, 0, 0, 0, 255, 0, 0, 255};
  REQUIRE(png_image_write_to_file(&image, path.c_str(), 0, px, 0, nullptr));
  const RasterImage img = load_png(path);
  CHECK(img.at(0, 0, 0) == 1.0);
  CHECK(img.at(0, 0, 2) == 1.0);
  CHECK(img.at(1, 0, 0) == 1.0);
  CHECK(img.at(1, 0, 1) == 0.0);
  std::remove(path.c_str());
}

TEST_CASE("16-bit png is rejected as unsupported") {
  const std::string path = temp_path("deep.png");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 2;
  image.height = 2;
  image.format = PNG_FORMAT_LINEAR_RGB;
  const png_uint_16 px[12] = {0, 100, 200, 300, 400, 500, 600, 700, 800, 900, 1000, 1100};
  REQUIRE(png_image_write_to_file(&image, path.c_str(), 0, px, 0, nullptr));
  CHECK(kind_of([&] { load_png(path); }) == ErrorKind::Unsupported);
  std::remove(path.c_str());
}

TEST_CASE("missing png is an io error") { CHECK(kind_of([] { load_png("/nonexistent.png"); }) == ErrorKind::Io); }

TEST_CASE("label map image gives equal labels equal colors") {
  LabelMap lm{3, 1, {0, 1, 0}, 2};
  const RasterImage img = label_map_image(lm);
  for (int c = 0; c < 3; ++c) CHECK(img.at(0, 0, c) == img.at(2, 0, c));
  CHECK_FALSE((img.at(0, 0, 0) == img.at(1, 0, 0) && img.at(0, 0, 1) == img.at(1, 0, 1) &&
               img.at(0, 0, 2) == img.at(1, 0, 2)));
}
