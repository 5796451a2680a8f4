#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ddet/errors.hpp"
#include "ddet/geometry.hpp"

namespace ddet {

// ---------------------------------------------------------------------------
// small helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline std::optional<double> to_double(std::string_view tok) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) return std::nullopt;
  return v;
}

inline std::optional<float> to_float(std::string_view tok) {
  float v = 0.0f;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> to_int(std::string_view tok) {
  long long v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) return std::nullopt;
  return v;
}

// %.9g keeps 9 significant digits; enough to round-trip every float32 and
// all hand-written test coordinates exactly.
inline std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::uint8_t parse_color_byte(std::string_view tok, std::size_t line_no) {
  auto v = to_int(tok);
  if (!v) throw ParseError("expected color component, got '" + std::string(tok) + "'", line_no);
  if (*v < 0 || *v > 255)
    throw ValueError("color component out of range [0,255] on line " + std::to_string(line_no));
  return static_cast<std::uint8_t>(*v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// file helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// XYZ text: one point per line, "x y z" or "x y z r g b", '#' comments
// ---------------------------------------------------------------------------

inline PointCloud parse_xyz(std::string_view text) {
  PointCloud cloud;
  int arity = 0;  // 0 = undecided, 3 or 6 once the first data line is seen
  std::vector<Rgb> colors;

  std::size_t pos = 0, line_no = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    ++line_no;
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;

    auto toks = detail::split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;

    if (toks.size() != 3 && toks.size() != 6)
      throw ParseError("expected 3 or 6 fields, got " + std::to_string(toks.size()), line_no);
    if (arity == 0)
      arity = static_cast<int>(toks.size());
    else if (arity != static_cast<int>(toks.size()))
      throw FormatError("mixed 3- and 6-field lines (line " + std::to_string(line_no) + ")");

    Point3 p;
    double* coords[3] = {&p.x, &p.y, &p.z};
    for (int i = 0; i < 3; ++i) {
      auto v = detail::to_double(toks[i]);
      if (!v) throw ParseError("expected number, got '" + std::string(toks[i]) + "'", line_no);
      *coords[i] = *v;
    }
    if (!is_finite(p))
      throw ValueError("non-finite coordinate on line " + std::to_string(line_no));
    cloud.points.push_back(p);

    if (arity == 6) {
      Rgb c{detail::parse_color_byte(toks[3], line_no),
            detail::parse_color_byte(toks[4], line_no),
            detail::parse_color_byte(toks[5], line_no)};
      colors.push_back(c);
    }
  }

  if (arity == 6) cloud.colors = std::move(colors);
  return cloud;
}

inline std::string write_xyz(const PointCloud& cloud) {
  std::string out;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    out += detail::fmt_g9(p.x);
    out += ' ';
    out += detail::fmt_g9(p.y);
    out += ' ';
    out += detail::fmt_g9(p.z);
    if (cloud.colors) {
      const Rgb& c = (*cloud.colors)[i];
      out += ' ';
      out += std::to_string(c.r);
      out += ' ';
      out += std::to_string(c.g);
      out += ' ';
      out += std::to_string(c.b);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// PCD v0.7, ASCII variant. rgb is decoded from the packed 0x00RRGGBB
// convention, stored either as a reinterpreted float (TYPE F) or as an
// unsigned integer (TYPE U/I).
// ---------------------------------------------------------------------------

inline PointCloud parse_pcd(std::string_view bytes) {
  std::vector<std::string> fields;
  std::vector<char> types;
  std::vector<int> counts;
  long long n_points = -1, width = -1, height = -1;
  std::string data_mode;

  std::size_t pos = 0, line_no = 0;
  bool header_done = false;
  while (!header_done && pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    std::string_view line = bytes.substr(pos, eol == std::string_view::npos ? bytes.size() - pos : eol - pos);
    ++line_no;
    pos = (eol == std::string_view::npos) ? bytes.size() : eol + 1;

    auto toks = detail::split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;

    std::string key(toks[0]);
    if (key == "FIELDS") {
      for (std::size_t i = 1; i < toks.size(); ++i) fields.emplace_back(toks[i]);
    } else if (key == "TYPE") {
      for (std::size_t i = 1; i < toks.size(); ++i) types.push_back(toks[i][0]);
    } else if (key == "COUNT") {
      for (std::size_t i = 1; i < toks.size(); ++i) {
        auto v = detail::to_int(toks[i]);
        if (!v || *v < 1) throw ParseError("bad COUNT entry", line_no);
        counts.push_back(static_cast<int>(*v));
      }
    } else if (key == "WIDTH") {
      if (toks.size() < 2 || !(detail::to_int(toks[1]))) throw ParseError("bad WIDTH", line_no);
      width = *detail::to_int(toks[1]);
    } else if (key == "HEIGHT") {
      if (toks.size() < 2 || !(detail::to_int(toks[1]))) throw ParseError("bad HEIGHT", line_no);
      height = *detail::to_int(toks[1]);
    } else if (key == "POINTS") {
      if (toks.size() < 2 || !(detail::to_int(toks[1]))) throw ParseError("bad POINTS", line_no);
      n_points = *detail::to_int(toks[1]);
    } else if (key == "DATA") {
      if (toks.size() < 2) throw ParseError("bad DATA line", line_no);
      data_mode = std::string(toks[1]);
      header_done = true;
    }
    // VERSION, SIZE, VIEWPOINT are accepted and ignored.
  }

  if (!header_done) throw FormatError("PCD header has no DATA line");
  if (data_mode != "ascii")
    throw UnsupportedFormatError("PCD DATA '" + data_mode + "' not supported (ascii only)");
  if (fields.empty()) throw FormatError("PCD header has no FIELDS line");
  if (counts.empty()) counts.assign(fields.size(), 1);
  if (types.size() != fields.size() || counts.size() != fields.size())
    throw FormatError("PCD FIELDS/TYPE/COUNT lengths disagree");
  if (n_points < 0) {
    if (width < 0 || height < 0) throw FormatError("PCD header missing POINTS");
    n_points = width * height;
  }

  int ix = -1, iy = -1, iz = -1, irgb = -1;
  std::vector<int> offsets(fields.size(), 0);
  int off = 0;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    offsets[i] = off;
    off += counts[i];
    if (fields[i] == "x") ix = static_cast<int>(i);
    if (fields[i] == "y") iy = static_cast<int>(i);
    if (fields[i] == "z") iz = static_cast<int>(i);
    if (fields[i] == "rgb" || fields[i] == "rgba") irgb = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw FormatError("PCD FIELDS must contain x y z");
  const int tokens_per_row = off;

  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(n_points));
  std::vector<Rgb> colors;
  if (irgb >= 0) colors.reserve(static_cast<std::size_t>(n_points));

  long long rows = 0;
  while (pos <= bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    std::string_view line = bytes.substr(pos, eol == std::string_view::npos ? bytes.size() - pos : eol - pos);
    ++line_no;
    bool last = (eol == std::string_view::npos);
    pos = last ? bytes.size() + 1 : eol + 1;

    auto toks = detail::split_ws(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    if (rows == n_points)
      throw ParseError("more data rows than declared POINTS " + std::to_string(n_points), line_no);
    if (static_cast<int>(toks.size()) != tokens_per_row)
      throw ParseError("expected " + std::to_string(tokens_per_row) + " values, got " +
                           std::to_string(toks.size()), line_no);

    Point3 p;
    auto coord = [&](int field_idx) -> double {
      auto v = detail::to_double(toks[offsets[field_idx]]);
      if (!v) throw ParseError("expected number in point row", line_no);
      return *v;
    };
    p.x = coord(ix);
    p.y = coord(iy);
    p.z = coord(iz);
    if (!is_finite(p))
      throw ValueError("non-finite coordinate on line " + std::to_string(line_no));
    cloud.points.push_back(p);

    if (irgb >= 0) {
      std::string_view tok = toks[offsets[irgb]];
      std::uint32_t packed = 0;
      if (types[irgb] == 'F') {
        auto f = detail::to_float(tok);
        if (!f) throw ParseError("bad packed rgb float", line_no);
        packed = std::bit_cast<std::uint32_t>(*f);
      } else {
        auto v = detail::to_int(tok);
        if (!v || *v < 0) throw ParseError("bad rgb integer", line_no);
        packed = static_cast<std::uint32_t>(*v);
      }
      colors.push_back(Rgb{static_cast<std::uint8_t>((packed >> 16) & 0xFF),
                           static_cast<std::uint8_t>((packed >> 8) & 0xFF),
                           static_cast<std::uint8_t>(packed & 0xFF)});
    }
    ++rows;
  }

  if (rows != n_points)
    throw ParseError("header declares POINTS " + std::to_string(n_points) + " but found " +
                     std::to_string(rows) + " data rows");
  if (irgb >= 0) cloud.colors = std::move(colors);
  return cloud;
}

inline std::string write_pcd(const PointCloud& cloud) {
  const bool rgb = cloud.has_colors();
  std::string out;
  out += "# .PCD v0.7 - Point Cloud Data file format\n";
  out += "VERSION 0.7\n";
  out += rgb ? "FIELDS x y z rgb\n" : "FIELDS x y z\n";
  out += rgb ? "SIZE 4 4 4 4\n" : "SIZE 4 4 4\n";
  out += rgb ? "TYPE F F F U\n" : "TYPE F F F\n";
  out += rgb ? "COUNT 1 1 1 1\n" : "COUNT 1 1 1\n";
  out += "WIDTH " + std::to_string(cloud.size()) + "\n";
  out += "HEIGHT 1\n";
  out += "VIEWPOINT 0 0 0 1 0 0 0\n";
  out += "POINTS " + std::to_string(cloud.size()) + "\n";
  out += "DATA ascii\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    out += detail::fmt_g9(p.x);
    out += ' ';
    out += detail::fmt_g9(p.y);
    out += ' ';
    out += detail::fmt_g9(p.z);
    if (rgb) {
      const Rgb& c = (*cloud.colors)[i];
      std::uint32_t packed = (static_cast<std::uint32_t>(c.r) << 16) |
                             (static_cast<std::uint32_t>(c.g) << 8) | c.b;
      out += ' ';
      out += std::to_string(packed);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// PLY, ASCII variant: vertex element with x/y/z, optional red/green/blue
// ---------------------------------------------------------------------------

inline PointCloud parse_ply(std::string_view bytes) {
  struct Element {
    std::string name;
    long long count = 0;
    std::vector<std::string> props;   // scalar property names, in order
    bool has_list = false;
  };

  std::size_t pos = 0, line_no = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos > bytes.size()) return std::nullopt;
    std::size_t eol = bytes.find('\n', pos);
    std::string_view line = bytes.substr(pos, eol == std::string_view::npos ? bytes.size() - pos : eol - pos);
    pos = (eol == std::string_view::npos) ? bytes.size() + 1 : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  auto first = next_line();
  if (!first || detail::split_ws(*first) != std::vector<std::string_view>{"ply"})
    throw FormatError("not a PLY file (missing 'ply' magic)");

  std::vector<Element> elements;
  bool header_done = false, format_seen = false;
  while (!header_done) {
    auto line = next_line();
    if (!line) throw FormatError("PLY header has no end_header");
    auto toks = detail::split_ws(*line);
    if (toks.empty() || toks[0] == "comment" || toks[0] == "obj_info") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2) throw ParseError("bad format line", line_no);
      if (toks[1] != "ascii")
        throw UnsupportedFormatError("PLY format '" + std::string(toks[1]) + "' not supported (ascii only)");
      format_seen = true;
    } else if (toks[0] == "element") {
      if (toks.size() != 3) throw ParseError("bad element line", line_no);
      auto c = detail::to_int(toks[2]);
      if (!c || *c < 0) throw ParseError("bad element count", line_no);
      elements.push_back(Element{std::string(toks[1]), *c, {}, false});
    } else if (toks[0] == "property") {
      if (elements.empty()) throw ParseError("property before any element", line_no);
      if (toks.size() >= 2 && toks[1] == "list") {
        elements.back().has_list = true;
      } else {
        if (toks.size() != 3) throw ParseError("bad property line", line_no);
        elements.back().props.emplace_back(toks[2]);
      }
    } else if (toks[0] == "end_header") {
      header_done = true;
    } else {
      throw ParseError("unrecognized header line '" + std::string(toks[0]) + "'", line_no);
    }
  }
  if (!format_seen) throw FormatError("PLY header has no format line");

  const Element* vertex = nullptr;
  for (const auto& e : elements)
    if (e.name == "vertex") vertex = &e;
  if (!vertex) throw FormatError("PLY has no vertex element");
  if (vertex->has_list)
    throw UnsupportedFormatError("list property on vertex element not supported");

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
  for (std::size_t i = 0; i < vertex->props.size(); ++i) {
    const std::string& n = vertex->props[i];
    if (n == "x") ix = static_cast<int>(i);
    if (n == "y") iy = static_cast<int>(i);
    if (n == "z") iz = static_cast<int>(i);
    if (n == "red") ir = static_cast<int>(i);
    if (n == "green") ig = static_cast<int>(i);
    if (n == "blue") ib = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw FormatError("PLY vertex element must have x y z");
  const int n_colors = (ir >= 0) + (ig >= 0) + (ib >= 0);
  if (n_colors != 0 && n_colors != 3)
    throw FormatError("PLY vertex has incomplete red/green/blue properties");
  const bool rgb = n_colors == 3;

  PointCloud cloud;
  std::vector<Rgb> colors;
  for (const auto& elem : elements) {
    for (long long row = 0; row < elem.count; ++row) {
      auto line = next_line();
      while (line && detail::split_ws(*line).empty()) line = next_line();
      if (!line)
        throw ParseError("unexpected end of file in element '" + elem.name + "' (row " +
                         std::to_string(row + 1) + " of " + std::to_string(elem.count) + ")");
      if (&elem != vertex) continue;  // rows of other elements are skipped

      auto toks = detail::split_ws(*line);
      if (toks.size() != vertex->props.size())
        throw ParseError("expected " + std::to_string(vertex->props.size()) + " values, got " +
                             std::to_string(toks.size()), line_no);
      Point3 p;
      auto coord = [&](int idx) -> double {
        auto v = detail::to_double(toks[idx]);
        if (!v) throw ParseError("expected number in vertex row", line_no);
        return *v;
      };
      p.x = coord(ix);
      p.y = coord(iy);
      p.z = coord(iz);
      if (!is_finite(p))
        throw ValueError("non-finite coordinate on line " + std::to_string(line_no));
      cloud.points.push_back(p);
      if (rgb)
        colors.push_back(Rgb{detail::parse_color_byte(toks[ir], line_no),
                             detail::parse_color_byte(toks[ig], line_no),
                             detail::parse_color_byte(toks[ib], line_no)});
    }
  }

  if (rgb) cloud.colors = std::move(colors);
  return cloud;
}

// ---------------------------------------------------------------------------
// PPM (binary P6, maxval 255): header "P6\n{w} {h}\n255\n" + raw rgb bytes
// ---------------------------------------------------------------------------

inline std::string write_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.bytes().data()), img.bytes().size());
  return out;
}

inline Image parse_ppm(std::string_view bytes) {
  std::size_t pos = 0;
  auto skip_ws_comments = [&]() {
    while (pos < bytes.size()) {
      char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto next_int = [&]() -> long long {
    skip_ws_comments();
    std::size_t start = pos;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') ++pos;
    auto v = detail::to_int(bytes.substr(start, pos - start));
    if (!v) throw ParseError("bad PPM header integer");
    return *v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw UnsupportedFormatError("not a binary PPM (P6) file");
  pos = 2;
  long long w = next_int();
  long long h = next_int();
  long long maxval = next_int();
  if (w <= 0 || h <= 0) throw ParseError("PPM dimensions must be positive");
  if (maxval != 255) throw UnsupportedFormatError("PPM maxval must be 255");
  if (pos >= bytes.size()) throw ParseError("PPM truncated before pixel data");
  const char sep = bytes[pos];
  if (sep != '\n' && sep != ' ' && sep != '\t' && sep != '\r')
    throw ParseError("PPM header must end with a single whitespace byte");
  ++pos;

  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - pos < need) throw ParseError("PPM pixel data truncated");

  Image img(static_cast<int>(w), static_cast<int>(h));
  std::memcpy(img.bytes().data(), bytes.data() + pos, need);
  return img;
}

// ---------------------------------------------------------------------------
// annotation: 1-pixel rectangle outlines and 5x7 bitmap labels
// ---------------------------------------------------------------------------

// Returns a copy with the box outline drawn, clipped to image bounds.
// A box that misses the image entirely is a no-op, not an error.
inline Image draw_bbox(const Image& img, const BBox2D& box, Rgb color) {
  Image out = img;
  const int x0 = std::max(box.x_min, 0);
  const int x1 = std::min(box.x_max, img.width());
  const int y0 = std::max(box.y_min, 0);
  const int y1 = std::min(box.y_max, img.height());
  if (x0 >= x1 || y0 >= y1) return out;

  auto hline = [&](int y) {
    if (y < 0 || y >= img.height()) return;
    for (int x = x0; x < x1; ++x) out.set(x, y, color);
  };
  auto vline = [&](int x) {
    if (x < 0 || x >= img.width()) return;
    for (int y = y0; y < y1; ++y) out.set(x, y, color);
  };
  hline(box.y_min);
  hline(box.y_max - 1);
  vline(box.x_min);
  vline(box.x_max - 1);
  return out;
}

namespace detail {

// 5x7 glyphs, one byte per row, low 5 bits used (MSB of the 5 = left column).
struct Glyph {
  char c;
  std::uint8_t rows[7];
};

inline const Glyph* find_glyph(char c) {
  static const Glyph table[] = {
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
      {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
      {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
      {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
      {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
      {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {'A', {0x0E, 0x11, 0x11, 0x11, 0x1F, 0x11, 0x11}},
      {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
      {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
      {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
      {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
      {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
      {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
      {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
      {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
      {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
      {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
      {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
      {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
      {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
      {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
      {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
      {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
      {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
      {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
      {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
      {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
      {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
      {'-', {0x00, 0x00, 0x00, 0x0E, 0x00, 0x00, 0x00}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
  };
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  for (const auto& g : table)
    if (g.c == c) return &g;
  return nullptr;
}

}  // namespace detail

// Draws `text` with the builtin 5x7 font, top-left corner at (x, y), clipped.
// Characters without a glyph advance the cursor but draw nothing.
inline void draw_label(Image& img, std::string_view text, int x, int y, Rgb color) {
  int cx = x;
  for (char c : text) {
    if (const detail::Glyph* g = detail::find_glyph(c)) {
      for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
          if ((g->rows[row] >> (4 - col)) & 1) {
            int px = cx + col, py = y + row;
            if (img.in_bounds(px, py)) img.set(px, py, color);
          }
    }
    cx += 6;
  }
}

}  // namespace ddet
