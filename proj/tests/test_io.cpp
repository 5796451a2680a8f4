#include <doctest.h>

#include <bit>
#include <cstdint>

#include "ddet/io.hpp"
#include "ddet/rng.hpp"

using namespace ddet;

TEST_CASE("parse_xyz basic forms") {
  SUBCASE("three-field lines") {
    const PointCloud c = parse_xyz("0 0 1\n1 0 1\n");
    REQUIRE(c.size() == 2);
    CHECK(c.points[0] == Point3{0, 0, 1});
    CHECK(c.points[1] == Point3{1, 0, 1});
    CHECK(!c.has_colors());
  }
  SUBCASE("empty input is an empty cloud") {
    CHECK(parse_xyz("").size() == 0);
    CHECK(parse_xyz("\n\n# only comments\n").size() == 0);
  }
  SUBCASE("six-field lines carry color") {
    const PointCloud c = parse_xyz("0 0 1 255 0 0\n");
    REQUIRE(c.size() == 1);
    REQUIRE(c.has_colors());
    CHECK((*c.colors)[0] == Rgb{255, 0, 0});
  }
  SUBCASE("comments and blank lines are skipped") {
    const PointCloud c = parse_xyz("# header\n\n1 2 3\n   # indented comment\n4 5 6\n");
    CHECK(c.size() == 2);
  }
}

TEST_CASE("parse_xyz error paths") {
  SUBCASE("malformed line carries its line number") {
    try {
      parse_xyz("0 0 1\nnot a number here\n");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("wrong field count") {
    CHECK_THROWS_AS(parse_xyz("1 2\n"), ParseError);
    CHECK_THROWS_AS(parse_xyz("1 2 3 4\n"), ParseError);
  }
  SUBCASE("mixed 3- and 6-field lines") {
    CHECK_THROWS_AS(parse_xyz("1 2 3\n1 2 3 255 0 0\n"), FormatError);
    CHECK_THROWS_AS(parse_xyz("1 2 3 255 0 0\n1 2 3\n"), FormatError);
  }
  SUBCASE("non-finite coordinates are rejected, never emitted") {
    CHECK_THROWS_AS(parse_xyz("nan 0 0\n"), ValueError);
    CHECK_THROWS_AS(parse_xyz("0 inf 0\n"), ValueError);
  }
  SUBCASE("color component range") {
    CHECK_THROWS_AS(parse_xyz("0 0 1 256 0 0\n"), ValueError);
    CHECK_THROWS_AS(parse_xyz("0 0 1 -1 0 0\n"), ValueError);
  }
}

TEST_CASE("xyz round-trip") {
  // 9-significant-digit values survive write/parse exactly
  PointCloud c;
  c.points = {Point3{1.25, -0.5, 3.0}, Point3{0.123456789, 100.25, -42.0}};
  const PointCloud back = parse_xyz(write_xyz(c));
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(back.points[i] == c.points[i]);

  // arbitrary doubles survive to 9 significant digits
  Xoshiro256ss rng(11);
  PointCloud r;
  std::vector<Rgb> colors;
  for (int i = 0; i < 200; ++i) {
    r.points.push_back(Point3{rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)});
    colors.push_back(Rgb{static_cast<std::uint8_t>(rng.below(256)),
                         static_cast<std::uint8_t>(rng.below(256)),
                         static_cast<std::uint8_t>(rng.below(256))});
  }
  r.colors = colors;
  const PointCloud rb = parse_xyz(write_xyz(r));
  REQUIRE(rb.size() == r.size());
  REQUIRE(rb.has_colors());
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(rb.points[i].x == doctest::Approx(r.points[i].x).epsilon(1e-8));
    CHECK(rb.points[i].y == doctest::Approx(r.points[i].y).epsilon(1e-8));
    CHECK(rb.points[i].z == doctest::Approx(r.points[i].z).epsilon(1e-8));
    CHECK((*rb.colors)[i] == (*r.colors)[i]);
  }
}

TEST_CASE("parse_pcd") {
  SUBCASE("minimal one-point file") {
    const char* text =
        "VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n"
        "WIDTH 1\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 1\nDATA ascii\n0 0 1\n";
    const PointCloud c = parse_pcd(text);
    REQUIRE(c.size() == 1);
    CHECK(c.points[0] == Point3{0, 0, 1});
    CHECK(!c.has_colors());
  }
  SUBCASE("declared point count must match data rows") {
    const char* text =
        "VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n"
        "WIDTH 2\nHEIGHT 1\nPOINTS 2\nDATA ascii\n0 0 1\n";
    CHECK_THROWS_AS(parse_pcd(text), ParseError);
    const char* extra =
        "VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n"
        "WIDTH 1\nHEIGHT 1\nPOINTS 1\nDATA ascii\n0 0 1\n0 0 2\n";
    CHECK_THROWS_AS(parse_pcd(extra), ParseError);
  }
  SUBCASE("packed-float rgb decodes") {
    // independent packing oracle: (255, 64, 8) -> 0x00FF4008 -> float bits
    const std::uint32_t packed = (255u << 16) | (64u << 8) | 8u;
    const float as_float = std::bit_cast<float>(packed);
    const std::string text =
        "VERSION 0.7\nFIELDS x y z rgb\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\n"
        "WIDTH 1\nHEIGHT 1\nPOINTS 1\nDATA ascii\n1 2 3 " +
        detail::fmt_g9(static_cast<double>(as_float)) + "\n";
    const PointCloud c = parse_pcd(text);
    REQUIRE(c.has_colors());
    CHECK((*c.colors)[0] == Rgb{255, 64, 8});
  }
  SUBCASE("binary data is unsupported, not misread") {
    const char* text =
        "VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n"
        "WIDTH 1\nHEIGHT 1\nPOINTS 1\nDATA binary\n";
    CHECK_THROWS_AS(parse_pcd(text), UnsupportedFormatError);
  }
  SUBCASE("non-finite coordinates error instead of leaking through") {
    const char* text =
        "VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n"
        "WIDTH 1\nHEIGHT 1\nPOINTS 1\nDATA ascii\nnan 0 1\n";
    CHECK_THROWS_AS(parse_pcd(text), ValueError);
  }
  SUBCASE("x y z fields are mandatory") {
    const char* text =
        "VERSION 0.7\nFIELDS x y\nSIZE 4 4\nTYPE F F\nCOUNT 1 1\n"
        "WIDTH 1\nHEIGHT 1\nPOINTS 1\nDATA ascii\n0 0\n";
    CHECK_THROWS_AS(parse_pcd(text), FormatError);
  }
  SUBCASE("write/parse round-trip keeps coordinates and colors") {
    PointCloud c;
    Xoshiro256ss rng(5);
    std::vector<Rgb> colors;
    for (int i = 0; i < 64; ++i) {
      c.points.push_back(Point3{rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(0.5, 6)});
      colors.push_back(Rgb{static_cast<std::uint8_t>(rng.below(256)),
                           static_cast<std::uint8_t>(rng.below(256)),
                           static_cast<std::uint8_t>(rng.below(256))});
    }
    c.colors = colors;
    const PointCloud back = parse_pcd(write_pcd(c));
    REQUIRE(back.size() == c.size());
    REQUIRE(back.has_colors());
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(back.points[i].x == doctest::Approx(c.points[i].x).epsilon(1e-8));
      CHECK((*back.colors)[i] == (*c.colors)[i]);
    }
  }
}

TEST_CASE("parse_ply") {
  SUBCASE("one-vertex ascii file") {
    const char* text =
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property float x\nproperty float y\nproperty float z\nend_header\n0.5 -1 2\n";
    const PointCloud c = parse_ply(text);
    REQUIRE(c.size() == 1);
    CHECK(c.points[0] == Point3{0.5, -1, 2});
  }
  SUBCASE("binary is unsupported") {
    const char* text =
        "ply\nformat binary_little_endian 1.0\nelement vertex 1\n"
        "property float x\nproperty float y\nproperty float z\nend_header\n";
    CHECK_THROWS_AS(parse_ply(text), UnsupportedFormatError);
  }
  SUBCASE("red/green/blue populate colors") {
    const char* text =
        "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 2\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\n"
        "end_header\n0 0 1 255 0 0\n1 1 2 0 0 255\n";
    const PointCloud c = parse_ply(text);
    REQUIRE(c.size() == 2);
    REQUIRE(c.has_colors());
    CHECK((*c.colors)[0] == Rgb{255, 0, 0});
    CHECK((*c.colors)[1] == Rgb{0, 0, 255});
  }
  SUBCASE("vertex row count must match the header") {
    const char* text =
        "ply\nformat ascii 1.0\nelement vertex 2\n"
        "property float x\nproperty float y\nproperty float z\nend_header\n0 0 1\n";
    CHECK_THROWS_AS(parse_ply(text), ParseError);
  }
  SUBCASE("non-vertex elements are skipped") {
    const char* text =
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property float x\nproperty float y\nproperty float z\n"
        "element face 1\nproperty list uchar int vertex_indices\nend_header\n"
        "1 2 3\n3 0 0 0\n";
    const PointCloud c = parse_ply(text);
    CHECK(c.size() == 1);
  }
  SUBCASE("missing magic") { CHECK_THROWS_AS(parse_ply("plyx\n"), FormatError); }
  SUBCASE("non-finite coordinates error instead of leaking through") {
    const char* text =
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property float x\nproperty float y\nproperty float z\nend_header\ninf 0 1\n";
    CHECK_THROWS_AS(parse_ply(text), ValueError);
  }
}

TEST_CASE("write_ppm is byte-exact") {
  SUBCASE("1x1 white") {
    Image img(1, 1, Rgb{255, 255, 255});
    const std::string bytes = write_ppm(img);
    CHECK(bytes == std::string("P6\n1 1\n255\n") + "\xff\xff\xff");
  }
  SUBCASE("2x1 black then red") {
    Image img(2, 1, Rgb{0, 0, 0});
    img.set(1, 0, Rgb{255, 0, 0});
    const std::string bytes = write_ppm(img);
    const std::string expect = std::string("P6\n2 1\n255\n") +
                               std::string("\x00\x00\x00\xff\x00\x00", 6);
    CHECK(bytes == expect);
  }
  SUBCASE("length formula and round-trip") {
    Xoshiro256ss rng(3);
    Image img(17, 9);
    for (int y = 0; y < 9; ++y)
      for (int x = 0; x < 17; ++x)
        img.set(x, y, Rgb{static_cast<std::uint8_t>(rng.below(256)),
                          static_cast<std::uint8_t>(rng.below(256)),
                          static_cast<std::uint8_t>(rng.below(256))});
    const std::string bytes = write_ppm(img);
    CHECK(bytes.size() == std::string("P6\n17 9\n255\n").size() + 3u * 17 * 9);
    CHECK(parse_ppm(bytes) == img);
  }
}

TEST_CASE("parse_ppm error paths") {
  CHECK_THROWS_AS(parse_ppm("P5\n1 1\n255\n"), UnsupportedFormatError);
  CHECK_THROWS_AS(parse_ppm("P6\n1 1\n65535\n"), UnsupportedFormatError);
  CHECK_THROWS_AS(parse_ppm("P6\n2 2\n255\nxx"), ParseError);
}

TEST_CASE("draw_bbox") {
  SUBCASE("full-frame box: 12 border pixels, 4 interior untouched") {
    const Image img(4, 4, Rgb{0, 0, 0});
    const Image out = draw_bbox(img, BBox2D(0, 0, 4, 4), Rgb{255, 255, 255});
    int white = 0;
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        const bool border = x == 0 || x == 3 || y == 0 || y == 3;  // enumeration oracle
        const Rgb expect = border ? Rgb{255, 255, 255} : Rgb{0, 0, 0};
        CHECK(out.get(x, y) == expect);
        if (out.get(x, y) == Rgb{255, 255, 255}) ++white;
      }
    CHECK(white == 12);
  }
  SUBCASE("unit box is its own outline") {
    const Image img(4, 4, Rgb{0, 0, 0});
    const Image out = draw_bbox(img, BBox2D(1, 1, 2, 2), Rgb{9, 9, 9});
    int colored = 0;
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x)
        if (!(out.get(x, y) == Rgb{0, 0, 0})) ++colored;
    CHECK(colored == 1);
    CHECK(out.get(1, 1) == Rgb{9, 9, 9});
  }
  SUBCASE("box fully outside is a no-op") {
    const Image img(4, 4, Rgb{7, 7, 7});
    CHECK(draw_bbox(img, BBox2D(10, 10, 20, 20), Rgb{1, 2, 3}) == img);
    CHECK(draw_bbox(img, BBox2D(-5, -5, -1, -1), Rgb{1, 2, 3}) == img);
  }
  SUBCASE("partial overlap clips to bounds") {
    const Image img(4, 4, Rgb{0, 0, 0});
    const Image out = draw_bbox(img, BBox2D(-2, -2, 2, 2), Rgb{255, 0, 0});
    // only the clipped right column and bottom row of the outline are visible
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) {
        const bool on_outline = (x == 1 && y <= 1) || (y == 1 && x <= 1);
        CHECK(out.get(x, y) == (on_outline ? Rgb{255, 0, 0} : Rgb{0, 0, 0}));
      }
  }
}

TEST_CASE("draw_label puts glyph pixels inside the image only") {
  Image img(20, 10, Rgb{0, 0, 0});
  draw_label(img, "A1", 1, 1, Rgb{255, 255, 255});
  int lit = 0;
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 20; ++x)
      if (!(img.get(x, y) == Rgb{0, 0, 0})) ++lit;
  CHECK(lit > 10);  // both glyphs drew something
  Image clipped(3, 3, Rgb{0, 0, 0});
  draw_label(clipped, "WWW", -2, -2, Rgb{255, 255, 255});  // must not throw
}

TEST_CASE("file helpers error on missing paths") {
  CHECK_THROWS_AS(read_file("/nonexistent/path/file.xyz"), IoError);
  CHECK_THROWS_AS(write_file("/nonexistent/dir/file.xyz", "x"), IoError);
}
