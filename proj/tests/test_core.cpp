#include "support.hpp"

#include "bpmri/difference.hpp"
#include "bpmri/error.hpp"
#include "bpmri/fft.hpp"
#include "bpmri/io.hpp"
#include "bpmri/metrics.hpp"
#include "bpmri/patches.hpp"

#include <doctest.h>

#include <fstream>

using namespace bpmri;
using namespace bpmri::test;

TEST_CASE("fft2 of a delta is flat")
{
  ImageGrid d(4);
  d[0] = 1.0;
  auto const k = fft2(d);
  for (auto v : k.pixels()) {
    CHECK(std::abs(v - Cx(0.25, 0.0)) < 1e-15);
  }
}

TEST_CASE("fft2 matches the dense DFT")
{
  for (Index n : {4, 6, 8}) {
    auto const x = RandomImage(n, Mode::Complex, 11 + n);
    Eigen::VectorXcd const want = DenseDft(n) * ToVector(x);
    auto const got = fft2(x);
    CHECK((ToVector(got) - want).norm() / want.norm() < 1e-12);
  }
}

TEST_CASE("fft2 round trip and Parseval")
{
  for (Index n : {4, 8, 16, 64}) {
    for (auto mode : {Mode::Real, Mode::Complex}) {
      auto const x = RandomImage(n, mode, 100 + n);
      auto const k = fft2(x);
      auto const back = ifft2(k, mode);
      CHECK(RelDiff(back, x) < 1e-12);
      CHECK(std::abs(Norm(k) - Norm(x)) / Norm(x) < 1e-12);
      if (mode == Mode::Real) {
        for (auto v : back.pixels()) {
          CHECK(v.imag() == 0.0);
        }
      }
    }
  }
}

TEST_CASE("patch extraction indexing")
{
  ImageGrid img(2);
  img[0] = 1; // a
  img[1] = 2; // b
  img[2] = 3; // c
  img[3] = 4; // d
  auto const X = extract_patches<double>(img, {2});
  CHECK(X.cols() == 4);
  CHECK(X(0, 0) == 1);
  CHECK(X(1, 0) == 2);
  CHECK(X(2, 0) == 3);
  CHECK(X(3, 0) == 4);

  // 4x4 ramp, patch at (3,3) wraps to (3,3),(3,0),(0,3),(0,0)
  ImageGrid ramp(4);
  for (Index i = 0; i < 16; i++) {
    ramp[i] = static_cast<double>(i);
  }
  auto const R = extract_patches<double>(ramp, {2});
  CHECK(R(0, 15) == 15);
  CHECK(R(1, 15) == 12);
  CHECK(R(2, 15) == 3);
  CHECK(R(3, 15) == 0);

  ImageGrid flat(8);
  for (auto &v : flat.pixels()) {
    v = 7.5;
  }
  auto const F = extract_patches<double>(flat, {3});
  CHECK(F.cols() == 64);
  CHECK((F.array() == 7.5).all());

  CHECK_THROWS_AS(extract_patches<double>(flat, {9}), InvalidConfig);
}

TEST_CASE("patch partition of unity")
{
  for (auto mode : {Mode::Real, Mode::Complex}) {
    auto const x = RandomImage(16, mode, 5);
    ImageGrid back;
    if (mode == Mode::Real) {
      back = aggregate_patches<double>(extract_patches<double>(x, {6}), {6});
    } else {
      back = aggregate_patches<Cx>(extract_patches<Cx>(x, {6}), {6});
    }
    CHECK(RelDiff(back, x) < 1e-12);
  }
  Matrix<double> zero = Matrix<double>::Zero(36, 64);
  auto const z = aggregate_patches<double>(zero, {6});
  CHECK(Norm(z) == 0.0);
  CHECK_THROWS_AS(aggregate_patches<double>(Matrix<double>::Zero(36, 63), {6}), DimensionMismatch);
}

TEST_CASE("sum of R_i^T R_i is P times identity on 4x4 with 2x2 patches")
{
  Index const n = 4;
  PatchConfig const cfg{2};
  Index const N = n * n, P = cfg.dim();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(N, N);
  for (Index i = 0; i < N; i++) {
    Eigen::MatrixXd Ri = Eigen::MatrixXd::Zero(P, N);
    Index const r0 = i / n, c0 = i % n;
    for (Index a = 0; a < 2; a++) {
      for (Index b = 0; b < 2; b++) {
        Ri(a * 2 + b, ((r0 + a) % n) * n + (c0 + b) % n) = 1;
      }
    }
    for (Index r = 0; r < P; r++) {
      Eigen::Index col;
      Ri.row(r).maxCoeff(&col);
      CHECK(PatchPixel(i, r, n, cfg) == col);
    }
    // single nonzero entry at (i, r) -> 1/P at the pixel R_i addresses
    Matrix<double> cols = Matrix<double>::Zero(P, N);
    cols(1, i) = 1.0;
    auto const img = aggregate_patches<double>(cols, cfg);
    Eigen::Index pix;
    Ri.row(1).maxCoeff(&pix);
    CHECK(img[pix].real() == doctest::Approx(1.0 / P));
    CHECK(std::abs(Norm(img) - 1.0 / P) < 1e-15);
    sum += Ri.transpose() * Ri;
  }
  CHECK((sum - P * Eigen::MatrixXd::Identity(N, N)).norm() == 0.0);
}

TEST_CASE("psi matches the dense stencil and its transpose is the adjoint")
{
  Index const n = 4;
  auto const Psi = DensePsi(n);
  auto const x = RandomImage(n, Mode::Complex, 3);
  auto const beta = psi_apply(x);
  Eigen::VectorXcd const want = Psi.cast<Cx>() * ToVector(x);
  for (Index j = 0; j < 2 * n * n; j++) {
    CHECK(std::abs(beta[j] - want(j)) < 1e-14);
  }

  ImageGrid two(2);
  two(0, 1) = 1;
  two(1, 1) = 1;
  auto const b2 = psi_apply(two);
  for (Index i = 0; i < 4; i++) {
    CHECK(b2[2 * i] == Cx(0.0));
    CHECK(std::abs(b2[2 * i + 1].real()) == 1.0);
  }

  for (std::uint64_t s = 0; s < 10; s++) {
    auto const u = RandomImage(n, Mode::Complex, 50 + s);
    auto const v = RandomImage(2 * n, Mode::Complex, 80 + s);
    TvCoefficients b(v.pixels().begin(), v.pixels().begin() + 2 * n * n);
    auto const lhs = psi_apply(u);
    Cx l{0}, r{0};
    for (Index j = 0; j < 2 * n * n; j++) {
      l += std::conj(b[j]) * lhs[j];
    }
    auto const pt = psi_transpose_apply(b, n);
    for (Index i = 0; i < n * n; i++) {
      r += std::conj(pt[i]) * u[i];
    }
    CHECK(std::abs(l - r) <= 1e-12 * std::abs(l));
  }

  ImageGrid flat(8);
  for (auto &v : flat.pixels()) {
    v = 3.0;
  }
  for (auto v : psi_apply(flat)) {
    CHECK(v == Cx(0.0));
  }
  CHECK(Norm(psi_transpose_apply(psi_apply(flat), 8)) == 0.0);
  CHECK(Norm(psi_transpose_apply(TvCoefficients(128), 8)) == 0.0);
  CHECK_THROWS_AS(psi_transpose_apply(TvCoefficients(10), 8), DimensionMismatch);
}

TEST_CASE("F Psi^T Psi F^H is diagonal with the closed-form eigenvalues")
{
  Index const n = 8, N = n * n;
  auto const Psi = DensePsi(n);
  Eigen::MatrixXcd const F = DenseDft(n);
  Eigen::MatrixXcd const L = F * (Psi.transpose() * Psi).cast<Cx>() * F.adjoint();
  double off = 0;
  for (Index a = 0; a < N; a++) {
    for (Index b = 0; b < N; b++) {
      if (a != b) { off += std::norm(L(a, b)); }
    }
  }
  CHECK(off < 1e-10);

  auto const eig = laplacian_eigenvalues(n);
  REQUIRE(eig.eigenvalues.size() == static_cast<size_t>(N));
  Index zeros = 0;
  for (Index k1 = 0; k1 < n; k1++) {
    for (Index k2 = 0; k2 < n; k2++) {
      double const closed = 4 - 2 * std::cos(2 * std::numbers::pi * k1 / n) - 2 * std::cos(2 * std::numbers::pi * k2 / n);
      double const got = eig.eigenvalues[k1 * n + k2];
      CHECK(std::abs(got - closed) < 1e-12);
      CHECK(std::abs(got - L(k1 * n + k2, k1 * n + k2).real()) < 1e-12);
      CHECK(got >= 0.0);
      CHECK(got == doctest::Approx(eig.eigenvalues[((n - k1) % n) * n + (n - k2) % n]).epsilon(1e-14));
      zeros += got == 0.0;
    }
  }
  CHECK(zeros == 1);
  CHECK(eig.eigenvalues[0] == 0.0);
  CHECK(std::abs(laplacian_eigenvalues(4).eigenvalues[2 * 4 + 2] - 8.0) < 1e-12);

  // dense eigendecomposition of the 16x16 operator has the same spectrum
  auto const P4 = DensePsi(4);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P4.transpose() * P4);
  std::vector<double> dense(es.eigenvalues().data(), es.eigenvalues().data() + 16);
  auto fast = laplacian_eigenvalues(4).eigenvalues;
  std::sort(fast.begin(), fast.end());
  for (int i = 0; i < 16; i++) {
    CHECK(std::abs(dense[i] - fast[i]) < 1e-12);
  }
}

TEST_CASE("||Psi x||^2 equals the eigenvalue-weighted spectrum")
{
  Index const n = 16;
  auto const x = RandomImage(n, Mode::Real, 9);
  auto const beta = psi_apply(x);
  double lhs = 0;
  for (auto v : beta) {
    lhs += std::norm(v);
  }
  auto const th = fft2(x);
  auto const eig = laplacian_eigenvalues(n);
  double rhs = 0;
  for (Index i = 0; i < n * n; i++) {
    rhs += eig.eigenvalues[i] * std::norm(th[i]);
  }
  CHECK(std::abs(lhs - rhs) / lhs < 1e-10);
}

TEST_CASE("real mode keeps imaginary parts at zero")
{
  auto x = RandomImage(8, Mode::Complex, 1);
  x.setMode(Mode::Real);
  for (auto v : x.pixels()) {
    CHECK(v.imag() == 0.0);
  }
  auto const b = psi_transpose_apply(psi_apply(x), 8, Mode::Real);
  for (auto v : b.pixels()) {
    CHECK(v.imag() == 0.0);
  }
  auto const agg = aggregate_patches<double>(extract_patches<double>(x, {3}), {3});
  for (auto v : agg.pixels()) {
    CHECK(v.imag() == 0.0);
  }
}

TEST_CASE("psnr arithmetic")
{
  ImageGrid a(4), b(4);
  for (Index i = 0; i < 16; i++) {
    a[i] = static_cast<double>(10 * i);
    b[i] = static_cast<double>(10 * i + 1);
  }
  CHECK(std::abs(psnr(b, a) - 10 * std::log10(255.0 * 255.0)) < 1e-12);
  CHECK(std::abs(psnr(b, a) - 48.1308036086791) < 1e-9);
  CHECK(psnr(a, a) == std::numeric_limits<double>::infinity());
  CHECK(psnr(a, b) == psnr(b, a));

  // hand-computed MSE on three toy pairs
  struct Pair
  {
    std::vector<double> x, ref;
    double mse;
  };
  std::vector<Pair> const pairs{{{0, 0, 0, 0}, {0, 0, 0, 4}, 4.0},
                                {{1, 2, 3, 4}, {2, 2, 2, 3}, 0.75},
                                {{255, 0, 128, 64}, {250, 5, 120, 70}, (25 + 25 + 64 + 36) / 4.0}};
  for (auto const &p : pairs) {
    auto const x = ImageGrid::FromReal(2, p.x);
    auto const r = ImageGrid::FromReal(2, p.ref);
    CHECK(mse(x, r) == doctest::Approx(p.mse).epsilon(1e-15));
    CHECK(std::abs(psnr(x, r) - 10 * std::log10(255.0 * 255.0 / p.mse)) < 1e-12);
  }

  ImageGrid flat(4);
  CHECK_THROWS_AS(psnr(a, flat), InvalidConfig);
  CHECK_THROWS_AS(psnr(a, ImageGrid(8)), DimensionMismatch);
}

TEST_CASE("image files round trip")
{
  TempDir tmp("core_io");
  ImageGrid img(16);
  for (Index i = 0; i < 256; i++) {
    img[i] = static_cast<double>(i);
  }
  SavePng(img, tmp.path / "a.png");
  SavePgm(img, tmp.path / "a.pgm");
  CHECK(LoadImage(tmp.path / "a.png") == img);
  CHECK(LoadImage(tmp.path / "a.pgm") == img);

  auto const z = RandomImage(8, Mode::Complex, 4);
  SaveComplexImage(z, tmp.path / "z.bin", "random");
  CHECK(LoadComplexImage(tmp.path / "z.bin") == z);
  CHECK(std::filesystem::exists(tmp.path / "z.bin.json"));
  CHECK(std::filesystem::file_size(tmp.path / "z.bin") == 64 * 16);

  CHECK_THROWS_AS(LoadImage(tmp.path / "missing.png"), IoError);
  std::ofstream(tmp.path / "junk.png") << "not an image";
  CHECK_THROWS_AS(LoadImage(tmp.path / "junk.png"), IoError);
}

TEST_CASE("bundled camera image loads")
{
  auto const cam = LoadImage(BPMRI_TEST_DATA "/camera.pgm");
  CHECK(cam.side() == 512);
  auto const m = cam.real();
  CHECK(*std::max_element(m.begin(), m.end()) <= 255.0);
  CHECK(*std::min_element(m.begin(), m.end()) >= 0.0);
}
