#include <doctest.h>

#include <cmath>

#include "ddet/calibration.hpp"
#include "ddet/svd.hpp"
#include "test_helpers.hpp"

using namespace ddet;

namespace {

ProjectionMatrix identity_camera() {
  ProjectionMatrix p;
  p.at(0, 0) = p.at(1, 1) = p.at(2, 2) = 1.0;
  return p;
}

double matrix_distance(const ProjectionMatrix& a, const ProjectionMatrix& b) {
  double d = 0;
  for (int i = 0; i < 12; ++i) d = std::max(d, std::abs(a.m[i] - b.m[i]));
  return d;
}

}  // namespace

TEST_CASE("jacobi_svd recovers known singular values") {
  SUBCASE("diagonal") {
    // rows (3, 0), (0, 2), (0, 0)
    const std::vector<double> a = {3, 0, 0, 2, 0, 0};
    const auto svd = jacobi_svd(a, 3, 2);
    CHECK(svd.sigma[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(svd.sigma[1] == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("rank deficient") {
    const std::vector<double> a = {1, 1, 2, 2, 3, 3};
    const auto svd = jacobi_svd(a, 3, 2);
    CHECK(svd.sigma[1] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }
  SUBCASE("random matrices: V orthogonal, ||A v_j|| = sigma_j, sigma descending") {
    Xoshiro256ss rng(13);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t m = 8 + rng.below(20), n = 2 + rng.below(7);
      std::vector<double> a(m * n);
      for (auto& v : a) v = rng.uniform(-2, 2);
      const auto svd = jacobi_svd(a, m, n);
      for (std::size_t j = 0; j + 1 < n; ++j) CHECK(svd.sigma[j] >= svd.sigma[j + 1]);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double dot = 0;
          for (std::size_t r = 0; r < n; ++r) dot += svd.v[r * n + i] * svd.v[r * n + j];
          CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-12));
        }
      for (std::size_t j = 0; j < n; ++j) {
        double norm2 = 0;
        for (std::size_t r = 0; r < m; ++r) {
          double av = 0;
          for (std::size_t c = 0; c < n; ++c) av += a[r * n + c] * svd.v[c * n + j];
          norm2 += av * av;
        }
        CHECK(std::sqrt(norm2) == doctest::Approx(svd.sigma[j]).scale(1.0).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("project_point") {
  const ProjectionMatrix p = canonicalize(identity_camera());
  SUBCASE("optical axis") {
    const auto px = project_point(p, Point3{0, 0, 2});
    REQUIRE(px);
    CHECK(px->u == doctest::Approx(0.0).scale(1.0));
    CHECK(px->v == doctest::Approx(0.0).scale(1.0));
  }
  SUBCASE("perspective division") {
    const auto px = project_point(p, Point3{1, 1, 2});
    REQUIRE(px);
    CHECK(px->u == doctest::Approx(0.5));
    CHECK(px->v == doctest::Approx(0.5));
  }
  SUBCASE("behind the camera") {
    CHECK(!project_point(p, Point3{0, 0, -1}));
    CHECK(!project_point(p, Point3{0, 0, 0}));  // w below epsilon
  }
  SUBCASE("matrix scale cancels in the division") {
    ProjectionMatrix scaled = identity_camera();
    for (double& e : scaled.m) e *= 37.5;
    const auto a = project_point(identity_camera(), Point3{0.3, -0.7, 1.9});
    const auto b = project_point(scaled, Point3{0.3, -0.7, 1.9});
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->u == doctest::Approx(b->u).epsilon(1e-14));
    CHECK(a->v == doctest::Approx(b->v).epsilon(1e-14));
  }
}

TEST_CASE("canonicalize") {
  SUBCASE("frobenius norm one and scale invariance") {
    Xoshiro256ss rng(4);
    ProjectionMatrix p = test_helpers::random_camera(rng);
    const ProjectionMatrix c1 = canonicalize(p);
    ProjectionMatrix scaled = p;
    for (double& e : scaled.m) e *= 2.0;
    ProjectionMatrix negated = p;
    for (double& e : negated.m) e *= -3.0;
    CHECK(matrix_distance(c1, canonicalize(scaled)) < 1e-14);
    CHECK(matrix_distance(c1, canonicalize(negated)) < 1e-14);
    double norm2 = 0;
    for (double e : c1.m) norm2 += e * e;
    CHECK(std::sqrt(norm2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c1.at(2, 3) >= 0.0);
  }
  SUBCASE("zero m[2][3] falls back to the first nonzero of row 3") {
    ProjectionMatrix p = identity_camera();
    for (double& e : p.m) e = -e;
    const ProjectionMatrix c = canonicalize(p);
    CHECK(c.at(2, 2) > 0.0);
    CHECK(c.at(0, 0) > 0.0);
  }
}

TEST_CASE("solve_projection_dlt") {
  SUBCASE("canonical [I|0] camera from hand correspondences") {
    std::vector<Correspondence> corr = {
        {Point3{0, 0, 1}, Pixel{0, 0}},        {Point3{1, 0, 1}, Pixel{1, 0}},
        {Point3{0, 1, 1}, Pixel{0, 1}},        {Point3{1, 1, 2}, Pixel{0.5, 0.5}},
        {Point3{-1, 0, 2}, Pixel{-0.5, 0}},    {Point3{0, -1, 2}, Pixel{0, -0.5}},
        {Point3{0.5, 0.5, 3}, Pixel{1.0 / 6, 1.0 / 6}},
        {Point3{-0.5, 0.25, 1.5}, Pixel{-1.0 / 3, 1.0 / 6}},
    };
    const ProjectionMatrix p = solve_projection_dlt(corr);
    const ProjectionMatrix expect = canonicalize(identity_camera());
    CHECK(matrix_distance(p, expect) < 1e-9);
    CHECK(reprojection_rms(p, corr) < 1e-9);
  }
  SUBCASE("exact recovery of random cameras") {
    Xoshiro256ss rng(21);
    for (int trial = 0; trial < 10; ++trial) {
      const ProjectionMatrix truth = test_helpers::random_camera(rng);
      const auto corr = test_helpers::exact_correspondences(rng, truth, 12);
      const ProjectionMatrix p = solve_projection_dlt(corr);
      CAPTURE(trial);
      CHECK(reprojection_rms(p, corr) < 1e-8);
      CHECK(matrix_distance(p, canonicalize(truth)) < 1e-8);
    }
  }
  SUBCASE("five correspondences are too few") {
    Xoshiro256ss rng(2);
    const ProjectionMatrix truth = test_helpers::random_camera(rng);
    auto corr = test_helpers::exact_correspondences(rng, truth, 5);
    CHECK_THROWS_AS(solve_projection_dlt(corr), ArityError);
    CHECK_THROWS_AS(reprojection_rms(truth, {}), ArityError);
  }
  SUBCASE("coplanar points are detected as degenerate") {
    Xoshiro256ss rng(9);
    const ProjectionMatrix truth = test_helpers::random_camera(rng);
    std::vector<Correspondence> corr;
    for (int i = 0; i < 10; ++i) {
      const Point3 w{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 0.25};  // one plane
      corr.push_back(Correspondence{w, *project_point(truth, w)});
    }
    CHECK_THROWS_AS(solve_projection_dlt(corr), DegenerateError);
  }
  SUBCASE("normalized and unnormalized solves agree on well-conditioned data") {
    Xoshiro256ss rng(33);
    const ProjectionMatrix truth = test_helpers::random_camera(rng);
    const auto corr = test_helpers::exact_correspondences(rng, truth, 20);
    DltOptions raw;
    raw.hartley_normalize = false;
    const ProjectionMatrix a = solve_projection_dlt(corr);
    const ProjectionMatrix b = solve_projection_dlt(corr, raw);
    CHECK(matrix_distance(a, b) < 1e-6);
  }
  SUBCASE("noise robustness: rms <= 1 px on sigma 0.5 px (light run)") {
    Xoshiro256ss rng(64);
    int ok = 0;
    for (int trial = 0; trial < 10; ++trial) {
      const ProjectionMatrix truth = test_helpers::random_camera(rng);
      auto corr = test_helpers::exact_correspondences(rng, truth, 20);
      auto noisy = corr;
      for (auto& c : noisy) {
        c.pixel.u += 0.5 * rng.gaussian();
        c.pixel.v += 0.5 * rng.gaussian();
      }
      const ProjectionMatrix p = solve_projection_dlt(noisy);
      if (reprojection_rms(p, corr) <= 1.0) ++ok;
    }
    CHECK(ok >= 9);
  }
}

TEST_CASE("reprojection_rms") {
  Xoshiro256ss rng(8);
  const ProjectionMatrix p = test_helpers::random_camera(rng);
  auto corr = test_helpers::exact_correspondences(rng, p, 16);
  SUBCASE("exact correspondences give ~zero") {
    CHECK(reprojection_rms(p, corr) < 1e-8);
  }
  SUBCASE("one (3,4) pixel perturbation among n gives 5/sqrt(n)") {
    corr[3].pixel.u += 3.0;
    corr[3].pixel.v += 4.0;
    CHECK(reprojection_rms(p, corr) ==
          doctest::Approx(5.0 / std::sqrt(16.0)).epsilon(1e-9));
  }
  SUBCASE("behind-camera correspondences propagate") {
    // walk back along the camera's depth row until w goes negative
    const double k = p.at(2, 3) + 5.0;
    corr[0].world = Point3{-k * p.at(2, 0), -k * p.at(2, 1), -k * p.at(2, 2)};
    CHECK_THROWS_AS(reprojection_rms(p, corr), BehindCameraError);
  }
}
