#pragma once

// SVG export of stroke sets and a strict importer for the same subset: one
// root <svg> holding <path> elements of the form
//   <path d="M x1 y1 Q x2 y2 x3 y3" fill="none" stroke="#RRGGBB"
//         stroke-opacity="a" stroke-width="w" stroke-linecap="round"/>
// Numbers carry three decimals. Colors that are not exact 8-bit values are
// written as rgb(r%, g%, b%) so they survive the round trip.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <string>
#include <string_view>

#include "core.hpp"
#include "json_io.hpp"

namespace strokesynth {

namespace detail {

inline std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

inline bool is_byte_exact(double c) {
  const double scaled = c * 255.0;
  return std::abs(scaled - std::round(scaled)) < 1e-9;
}

inline std::string svg_color(const Rgba& c) {
  char buf[96];
  if (is_byte_exact(c.r) && is_byte_exact(c.g) && is_byte_exact(c.b)) {
    std::snprintf(buf, sizeof buf, "#%02X%02X%02X", int(std::lround(c.r * 255.0)), int(std::lround(c.g * 255.0)),
                  int(std::lround(c.b * 255.0)));
    return buf;
  }
  return "rgb(" + fixed3(c.r * 100.0) + "%, " + fixed3(c.g * 100.0) + "%, " + fixed3(c.b * 100.0) + "%)";
}

}  // namespace detail

inline std::string export_svg_string(const StrokeSet& s) {
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  const std::string w = std::to_string(s.canvas_width), h = std::to_string(s.canvas_height);
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + w + "\" height=\"" + h +
         "\" viewBox=\"0 0 " + w + " " + h + "\">\n";
  for (const Stroke& st : s.strokes) {
    const auto& p = st.points;
    out += "<path d=\"M " + detail::fixed3(p[0].x) + " " + detail::fixed3(p[0].y) + " Q " + detail::fixed3(p[1].x) +
           " " + detail::fixed3(p[1].y) + " " + detail::fixed3(p[2].x) + " " + detail::fixed3(p[2].y) +
           "\" fill=\"none\" stroke=\"" + detail::svg_color(st.color) + "\" stroke-opacity=\"" +
           detail::fixed3(st.color.a) + "\" stroke-width=\"" + detail::fixed3(st.width) +
           "\" stroke-linecap=\"round\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

inline void export_svg(const StrokeSet& s, const std::string& path) { detail::write_file(path, export_svg_string(s)); }

// ---------------------------------------------------------------------------
// Import

namespace detail {

class SvgReader {
 public:
  explicit SvgReader(std::string_view text) : text_(text) {}

  StrokeSet parse() {
    StrokeSet out;
    bool in_svg = false, done = false;
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) break;
      if (text_[pos_] != '<') error("unexpected text content", pos_);
      if (starts_with("<?")) {
        skip_past("?>");
        continue;
      }
      if (starts_with("<!--")) {
        skip_past("-->");
        continue;
      }
      if (starts_with("<!")) {
        skip_past(">");
        continue;
      }
      if (done) unsupported("content after </svg>", pos_);
      if (starts_with("</")) {
        const std::size_t at = pos_;
        pos_ += 2;
        const std::string name = read_name();
        skip_space();
        expect('>');
        if (name != "svg" || !in_svg) error("unexpected closing tag </" + name + ">", at);
        done = true;
        continue;
      }
      const std::size_t at = pos_;
      ++pos_;
      const std::string name = read_name();
      std::map<std::string, std::pair<std::string, std::size_t>> attrs;
      bool self_closing = read_attributes(attrs);
      if (name == "svg") {
        if (in_svg) unsupported("nested <svg>", at);
        if (self_closing) done = true;
        in_svg = true;
        out.canvas_width = int(std::lround(number_attr(attrs, "width", at)));
        out.canvas_height = int(std::lround(number_attr(attrs, "height", at)));
        if (out.canvas_width <= 0 || out.canvas_height <= 0) error("svg width/height must be positive", at);
      } else if (name == "path") {
        if (!in_svg) error("<path> outside <svg>", at);
        if (!self_closing) unsupported("<path> with child content", at);
        out.strokes.push_back(parse_path(attrs, at));
      } else {
        unsupported("unsupported element <" + name + ">", at);
      }
    }
    if (!in_svg) error("no <svg> root element", 0);
    if (!done) error("missing </svg>", text_.size());
    return out;
  }

 private:
  using Attrs = std::map<std::string, std::pair<std::string, std::size_t>>;

  [[noreturn]] void error(const std::string& what, std::size_t at) const {
    fail("SVG parse error at byte " + std::to_string(at) + ": " + what);
  }
  [[noreturn]] void unsupported(const std::string& what, std::size_t at) const {
    throw Error(ErrorKind::Unsupported, "SVG: " + what + " at byte " + std::to_string(at));
  }

  bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void skip_past(std::string_view end) {
    const std::size_t found = text_.find(end, pos_);
    if (found == std::string_view::npos) error("unterminated markup", pos_);
    pos_ = found + end.size();
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) error(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  std::string read_name() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-' ||
                                   text_[pos_] == '_' || text_[pos_] == ':' || text_[pos_] == '.'))
      ++pos_;
    if (pos_ == start) error("expected a name", start);
    return std::string(text_.substr(start, pos_ - start));
  }

  // Returns true for "/>", false for ">".
  bool read_attributes(Attrs& attrs) {
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) error("unterminated tag", pos_);
      if (starts_with("/>")) {
        pos_ += 2;
        return true;
      }
      if (text_[pos_] == '>') {
        ++pos_;
        return false;
      }
      const std::string key = read_name();
      skip_space();
      expect('=');
      skip_space();
      if (pos_ >= text_.size() || (text_[pos_] != '"' && text_[pos_] != '\'')) error("expected quoted value", pos_);
      const char quote = text_[pos_++];
      const std::size_t start = pos_;
      const std::size_t end = text_.find(quote, pos_);
      if (end == std::string_view::npos) error("unterminated attribute value", start);
      attrs[key] = {std::string(text_.substr(start, end - start)), start};
      pos_ = end + 1;
    }
  }

  static double parse_number(const std::string& s, std::size_t& i, bool& ok) {
    while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == ',')) ++i;
    const char* begin = s.c_str() + i;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    ok = end != begin && std::isfinite(v);
    if (ok) i += std::size_t(end - begin);
    return v;
  }

  double number_attr(const Attrs& attrs, const std::string& key, std::size_t at) const {
    const auto it = attrs.find(key);
    if (it == attrs.end()) error("missing attribute " + key, at);
    std::size_t i = 0;
    bool ok = false;
    const double v = parse_number(it->second.first, i, ok);
    std::string rest = it->second.first.substr(i);
    if (rest == "px") rest.clear();
    if (!ok || !rest.empty()) error("malformed number in attribute " + key, it->second.second + i);
    return v;
  }

  Rgba parse_color(const std::string& v, std::size_t at) const {
    Rgba c;
    if (v.size() == 7 && v[0] == '#') {
      for (std::size_t k = 0; k < 3; ++k) {
        char* end = nullptr;
        const std::string hex = v.substr(1 + 2 * k, 2);
        const long byte = std::strtol(hex.c_str(), &end, 16);
        if (end != hex.c_str() + 2) error("malformed hex color", at + 1 + 2 * k);
        c[k] = double(byte) / 255.0;
      }
      return c;
    }
    if (v.rfind("rgb(", 0) == 0 && v.back() == ')') {
      std::size_t i = 4;
      for (std::size_t k = 0; k < 3; ++k) {
        bool ok = false;
        const double pct = parse_number(v, i, ok);
        if (!ok || i >= v.size() || v[i] != '%') error("malformed rgb() color", at + i);
        ++i;
        c[k] = pct / 100.0;
      }
      while (i < v.size() && std::isspace(static_cast<unsigned char>(v[i]))) ++i;
      if (i != v.size() - 1) error("malformed rgb() color", at + i);
      return c;
    }
    throw Error(ErrorKind::Unsupported, "SVG: unsupported color \"" + v + "\" at byte " + std::to_string(at));
  }

  Stroke parse_path(const Attrs& attrs, std::size_t at) const {
    static const char* kKnown[] = {"d", "fill", "stroke", "stroke-opacity", "stroke-width", "stroke-linecap"};
    for (const auto& [key, val] : attrs) {
      bool known = false;
      for (const char* k : kKnown) known = known || key == k;
      if (!known) unsupported("unsupported path attribute " + key, val.second);
    }
    const auto d = attrs.find("d");
    if (d == attrs.end()) error("<path> without d", at);
    if (const auto f = attrs.find("fill"); f != attrs.end() && f->second.first != "none")
      unsupported("filled paths", f->second.second);
    if (const auto lc = attrs.find("stroke-linecap"); lc != attrs.end() && lc->second.first != "round")
      unsupported("stroke-linecap other than round", lc->second.second);

    Stroke st;
    const std::string& path = d->second.first;
    const std::size_t base = d->second.second;
    std::size_t i = 0;
    auto command = [&](char want) {
      while (i < path.size() && std::isspace(static_cast<unsigned char>(path[i]))) ++i;
      if (i >= path.size()) error("path data ended early", base + i);
      const char cmd = path[i];
      if (std::isalpha(static_cast<unsigned char>(cmd)) && cmd != want)
        throw Error(ErrorKind::Unsupported, std::string("SVG: unsupported command '") + cmd + "' at byte " +
                                                std::to_string(base + i));
      if (cmd != want) error(std::string("expected path command '") + want + "'", base + i);
      ++i;
    };
    auto point = [&](ControlPoint& p) {
      bool ok = false;
      p.x = parse_number(path, i, ok);
      if (!ok) error("malformed path coordinate", base + i);
      p.y = parse_number(path, i, ok);
      if (!ok) error("malformed path coordinate", base + i);
    };
    command('M');
    point(st.points[0]);
    command('Q');
    point(st.points[1]);
    point(st.points[2]);
    while (i < path.size() && std::isspace(static_cast<unsigned char>(path[i]))) ++i;
    if (i != path.size()) {
      if (std::isalpha(static_cast<unsigned char>(path[i])))
        throw Error(ErrorKind::Unsupported, std::string("SVG: unsupported command '") + path[i] +
                                                "' at byte " + std::to_string(base + i));
      error("trailing path data", base + i);
    }

    const auto stroke = attrs.find("stroke");
    if (stroke == attrs.end()) error("<path> without stroke color", at);
    st.color = parse_color(stroke->second.first, stroke->second.second);
    st.color.a = attrs.count("stroke-opacity") ? number_attr(attrs, "stroke-opacity", at) : 1.0;
    st.width = attrs.count("stroke-width") ? number_attr(attrs, "stroke-width", at) : 1.0;
    return st;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline StrokeSet import_svg_string(std::string_view text) { return detail::SvgReader(text).parse(); }

inline StrokeSet import_svg(const std::string& path) { return import_svg_string(detail::read_file(path)); }

}  // namespace strokesynth
