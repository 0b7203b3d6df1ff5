#include "oracles.hpp"
#include "support.hpp"

#include "bpmri/bpfa.hpp"
#include "bpmri/bpfa_io.hpp"
#include "bpmri/error.hpp"
#include "bpmri/io.hpp"
#include "bpmri/metrics.hpp"
#include "bpmri/phantom.hpp"

#include <doctest.h>
#include <omp.h>

using namespace bpmri;
using namespace bpmri::test;

namespace {

template <typename S>
SparseCodes<S> EmptyCodes(Index K, Index N)
{
  SparseCodes<S> c;
  c.Z.setZero(K, N);
  c.S.setZero(K, N);
  return c;
}

BpfaState ToyState(Index K, double ge, double gs, double pi)
{
  BpfaState st;
  st.hp.K = std::max<Index>(K, 6);
  st.hp.data_noise_prior = false;
  st.pi = Eigen::VectorXd::Constant(K, pi);
  st.gamma_eps = ge;
  st.gamma_s = Eigen::VectorXd::Constant(K, gs);
  st.seed = 99;
  return st;
}

// Independent dense Cholesky (lower) for the dictionary oracle.
Eigen::MatrixXd NaiveCholesky(Eigen::MatrixXd const &A)
{
  Index const n = A.rows();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; j++) {
    double s = A(j, j);
    for (Index k = 0; k < j; k++) {
      s -= L(j, k) * L(j, k);
    }
    L(j, j) = std::sqrt(s);
    for (Index i = j + 1; i < n; i++) {
      double t = A(i, j);
      for (Index k = 0; k < j; k++) {
        t -= L(i, k) * L(j, k);
      }
      L(i, j) = t / L(j, j);
    }
  }
  return L;
}

} // namespace

TEST_CASE("hyperparameters")
{
  HyperParams hp;
  CHECK(hp.a0() + hp.b0() == doctest::Approx(hp.c).epsilon(1e-15));
  CHECK(hp.a0() == doctest::Approx(5.0 / 108));
  hp.validate();
  auto bad = hp;
  bad.gamma = 200;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = hp;
  bad.e0 = 0;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
  bad = hp;
  bad.data_noise_prior = false;
  bad.h0 = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidConfig);
}

TEST_CASE("init_state")
{
  auto const img = RandomImage(16, Mode::Real, 3);
  auto const X = extract_patches<double>(img, {6});
  HyperParams hp;
  auto const m = init_state<double>(X, hp, 5);
  CHECK(m.dict.atoms.rows() == 36);
  CHECK(m.dict.atoms.cols() == 108);
  CHECK(m.codes.active() == 0);
  CHECK((m.state.pi.array() == 0.1).all());
  CHECK((m.state.gamma_s.array() == 1.0).all());
  CHECK(m.state.gamma_eps == doctest::Approx(m.state.hp.g0 / m.state.hp.h0));
  CHECK(m.state.hp.g0 == doctest::Approx(0.05 * 256));

  // the first 36 atoms are orthonormal eigenvectors of X X^T in decreasing order
  Eigen::MatrixXd const G = X * X.transpose();
  Eigen::MatrixXd const D36 = m.dict.atoms.leftCols(36);
  CHECK((D36.transpose() * D36 - Eigen::MatrixXd::Identity(36, 36)).norm() < 1e-10);
  double prev = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < 36; k++) {
    Eigen::VectorXd const d = D36.col(k);
    double const lambda = d.dot(G * d);
    CHECK((G * d - lambda * d).norm() < 1e-8 * G.norm());
    CHECK(lambda <= prev * (1 + 1e-12));
    prev = lambda;
  }
  // the rest look like N(0, I/P) draws
  double const v = m.dict.atoms.rightCols(72).squaredNorm() / (72.0 * 36.0);
  CHECK(v == doctest::Approx(1.0 / 36).epsilon(0.1));

  auto const again = init_state<double>(X, hp, 5);
  CHECK(again.dict.atoms == m.dict.atoms);
  CHECK(again.codes.S == m.codes.S);

  Matrix<double> const zero = Matrix<double>::Zero(36, 50);
  auto const z = init_state<double>(zero, hp, 1);
  CHECK(z.dict.atoms.allFinite());
  CHECK(z.state.gamma_eps > 0);
}

TEST_CASE("dictionary draw matches a dense oracle")
{
  Index const P = 4, K = 2, N = 3;
  Philox rng(4, 4);
  std::normal_distribution<double> g;
  Matrix<double> X(P, N), W(K, P);
  for (Index j = 0; j < X.size(); j++) {
    X.data()[j] = g(rng);
  }
  for (Index j = 0; j < W.size(); j++) {
    W.data()[j] = g(rng);
  }
  auto codes = EmptyCodes<double>(K, N);
  codes.Z << 1, 0, 1, 1, 1, 0;
  codes.S << 0.7, 9.0, -1.2, 0.4, 2.0, 5.0;
  double const ge = 3.5;

  Eigen::MatrixXd alpha(K, N);
  for (Index k = 0; k < K; k++) {
    for (Index i = 0; i < N; i++) {
      alpha(k, i) = codes.Z(k, i) ? codes.S(k, i) : 0.0;
    }
  }
  Eigen::MatrixXd const A = alpha * alpha.transpose() + (P / ge) * Eigen::MatrixXd::Identity(K, K);
  Eigen::MatrixXd const mean = X * alpha.transpose() * A.inverse();
  Eigen::MatrixXd const M = ge * alpha * alpha.transpose() + P * Eigen::MatrixXd::Identity(K, K);
  Eigen::MatrixXd const L = NaiveCholesky(M);
  // rows of E ~ N(0, M^{-1}): E^T = L^{-T} W
  Eigen::MatrixXd const E = (L.transpose().inverse() * W).transpose();
  auto const D = DictionaryDraw<double>(X, codes, ge, W);
  CHECK((D - (mean + E)).norm() < 1e-12 * (mean + E).norm());

  // with no atoms in use the draw is pure prior noise
  auto const none = DictionaryDraw<double>(X, EmptyCodes<double>(K, N), ge, W);
  CHECK((none - W.transpose() / std::sqrt(double(P))).norm() < 1e-14);

  // complex arithmetic on real data gives the same answer
  Matrix<Cx> const Xc = X.cast<Cx>();
  SparseCodes<Cx> cc;
  cc.Z = codes.Z;
  cc.S = codes.S.cast<Cx>();
  auto const Dc = DictionaryDraw<Cx>(Xc, cc, ge, W.cast<Cx>());
  CHECK((Dc.real() - D).norm() < 1e-13);
  CHECK(Dc.imag().norm() == 0.0);
}

TEST_CASE("dictionary mean approaches least squares for large gamma_eps")
{
  Matrix<double> X(3, 1);
  X << 1.0, -2.0, 0.5;
  auto codes = EmptyCodes<double>(1, 1);
  codes.Z(0, 0) = 1;
  codes.S(0, 0) = 2.0;
  Matrix<double> const W = Matrix<double>::Zero(1, 3);
  auto const D = DictionaryDraw<double>(X, codes, 1e12, W);
  CHECK((D.col(0) - X.col(0) * 2.0 / 4.0).norm() < 1e-10);
}

TEST_CASE("prior dictionary draws have variance 1/P")
{
  Index const P = 9, K = 4, N = 5;
  Matrix<double> const X = Matrix<double>::Ones(P, N);
  auto st = ToyState(K, 2.0, 1.0, 0.5);
  double s2 = 0;
  int const reps = 2000;
  for (int t = 0; t < reps; t++) {
    st.sweep = t;
    auto const D = sample_dictionary<double>(X, EmptyCodes<double>(K, N), st);
    s2 += D.atoms.squaredNorm();
  }
  CHECK(s2 / (reps * P * K) == doctest::Approx(1.0 / P).epsilon(0.03));
}

TEST_CASE("code posterior equals the quadrature oracle")
{
  Eigen::VectorXd x(2), d(2);
  x << 2, 0;
  d << 1, 0;
  auto const q = QuadraturePosterior(x, d, 1, 1, 0.5);
  auto const post = CodeConditional(0.5, 1, 1, d.squaredNorm(), std::pow(d.dot(x), 2));
  CHECK(std::abs(post.prob - q.prob) < 1e-6);
  CHECK(std::abs(post.mean_scale * d.dot(x) - q.mean_on) < 1e-6);

  Philox rng(8, 8);
  std::normal_distribution<double> g;
  for (int t = 0; t < 10; t++) {
    Index const P = 3;
    Eigen::VectorXd xv(P), dv(P);
    for (Index p = 0; p < P; p++) {
      xv(p) = 1.5 * g(rng);
      dv(p) = 0.7 * g(rng);
    }
    double const ge = 0.5 + 3 * rng.uniform(), gs = 0.2 + 2 * rng.uniform(), pi = 0.05 + 0.9 * rng.uniform();
    auto const qq = QuadraturePosterior(xv, dv, ge, gs, pi);
    auto const pp = CodeConditional(pi, ge, gs, dv.squaredNorm(), std::pow(dv.dot(xv), 2));
    CHECK(std::abs(pp.prob - qq.prob) < 1e-6);
    CHECK(std::abs(pp.mean_scale * dv.dot(xv) - qq.mean_on) < 1e-6);
  }

  CHECK(CodeConditional(0.0, 1, 1, 1, 100).prob == 0.0);
  CHECK(CodeConditional(1.0, 1, 1, 1, 0).prob == 1.0);
  CHECK(CodeConditional(0.3, 1, 1, 0, 0).prob == doctest::Approx(0.3).epsilon(1e-14));
  auto const huge = CodeConditional(0.5, 1e6, 1, 1, 1e6);
  CHECK(huge.prob == 1.0);
  CHECK(std::isfinite(huge.log_odds));
}

TEST_CASE("sampled code frequencies match the posterior")
{
  Matrix<double> X(2, 1);
  X << 2, 0;
  Dictionary<double> dict{Matrix<double>(2, 1), 2.0};
  dict.atoms << 1, 0;
  auto st = ToyState(1, 1, 1, 0.5);
  auto const q = QuadraturePosterior(X.col(0), dict.atoms.col(0), 1, 1, 0.5);
  auto codes = EmptyCodes<double>(1, 1);
  int const n = 100000;
  int on = 0;
  double s_on = 0;
  for (int t = 0; t < n; t++) {
    st.sweep = t;
    codes = sample_codes<double>(X, dict, codes, st);
    if (codes.Z(0, 0)) {
      on++;
      s_on += codes.S(0, 0);
    }
  }
  CHECK(std::abs(double(on) / n - q.prob) < 0.01);
  CHECK(std::abs(s_on / on - q.mean_on) < 0.01);
}

TEST_CASE("degenerate inclusion probabilities")
{
  Index const K = 3, N = 2000;
  Matrix<double> X = Matrix<double>::Ones(4, N);
  Dictionary<double> dict{Matrix<double>::Ones(4, K), 4.0};
  auto st = ToyState(K, 1, 4, 0.0);
  auto const c0 = sample_codes<double>(X, dict, EmptyCodes<double>(K, N), st);
  CHECK(c0.active() == 0);
  CHECK(c0.S.allFinite());
  CHECK(c0.S.squaredNorm() / (K * N) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(c0.alpha().norm() == 0.0);

  st.pi.setOnes();
  auto const c1 = sample_codes<double>(X, dict, EmptyCodes<double>(K, N), st);
  CHECK(c1.active() == K * N);
  CHECK(c1.S.allFinite());

  // an all-zero atom leaves the prior unchanged
  Dictionary<double> zero{Matrix<double>::Zero(4, 1), 4.0};
  auto st2 = ToyState(1, 1, 1, 0.3);
  auto const c2 = sample_codes<double>(X, zero, EmptyCodes<double>(1, N), st2);
  CHECK(double(c2.active()) / N == doctest::Approx(0.3).epsilon(0.1));
  auto const a = c2.alpha();
  for (Index i = 0; i < N; i++) {
    if (!c2.Z(0, i)) { CHECK(a(0, i) == 0.0); }
  }
}

TEST_CASE("precision and probability posteriors")
{
  int const n = 100000;
  SUBCASE("gamma and beta samplers")
  {
    for (auto [shape, rate] : {std::pair{1.5, 0.5}, {3.0, 0.5}, {40.0, 7.0}}) {
      auto rng = MakeRng(1, StreamTag::Test);
      auto const [m, v] = Moments(n, [&](int) { return SampleGamma(rng, shape, rate); });
      CHECK(std::abs(m - shape / rate) < 0.02 * shape / rate);
      CHECK(std::abs(v - shape / (rate * rate)) < 0.02 * shape / (rate * rate));
    }
    for (auto [a, b] : {std::pair{2.0, 5.0}, {37.05, 163.95}, {50.0, 950.0}}) {
      auto rng = MakeRng(2, StreamTag::Test);
      auto const [m, v] = Moments(n, [&](int) { return SampleBeta(rng, a, b); });
      double const mean = a / (a + b), var = a * b / ((a + b) * (a + b) * (a + b + 1));
      CHECK(std::abs(m - mean) < 0.02 * mean);
      CHECK(std::abs(v - var) < 0.02 * var);
    }
  }
  SUBCASE("weight precisions")
  {
    auto codes = EmptyCodes<double>(2, 10);
    codes.Z.row(0).setOnes();
    codes.S.row(0).setConstant(2.0);
    codes.S.row(1).setConstant(7.0); // unused, must not count
    auto st = ToyState(2, 1, 1, 0.5);
    st.hp.e0 = 1.5;
    st.hp.f0 = 0.5;
    double m0 = 0, m1 = 0;
    int const reps = 20000;
    for (int t = 0; t < reps; t++) {
      st.sweep = t;
      auto const g = sample_weight_precisions<double>(codes, st);
      CHECK((g.array() > 0).all());
      m0 += g(0);
      m1 += g(1);
    }
    CHECK(m0 / reps == doctest::Approx((1.5 + 5) / (0.5 + 20)).epsilon(0.02));
    CHECK(m1 / reps == doctest::Approx(1.5 / 0.5).epsilon(0.02));
  }
  SUBCASE("inclusion probabilities")
  {
    Index const N = 200, m = 37;
    auto codes = EmptyCodes<double>(3, N);
    codes.Z.row(0).setOnes();
    codes.Z.block(1, 0, 1, m).setOnes();
    auto st = ToyState(3, 1, 1, 0.5);
    st.hp.K = 108;
    double const a0 = st.hp.a0(), b0 = st.hp.b0();
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (int t = 0; t < n; t++) {
      st.sweep = t;
      sum += sample_pi<double>(codes, st);
    }
    sum /= n;
    CHECK(sum(0) == doctest::Approx((a0 + N) / (a0 + b0 + N)).epsilon(0.01));
    CHECK(sum(1) == doctest::Approx((a0 + m) / (a0 + b0 + N)).epsilon(0.01));
    CHECK(sum(2) == doctest::Approx(a0 / (a0 + b0 + N)).epsilon(0.01));
    CHECK(sum(0) > 0.99);
    CHECK(sum(2) < 0.01);
  }
  SUBCASE("noise precision")
  {
    Index const P = 4, N = 10000;
    double const sigma = 0.3;
    Philox rng(3, 3);
    std::normal_distribution<double> g(0.0, sigma);
    Matrix<double> X(P, N);
    for (Index j = 0; j < X.size(); j++) {
      X.data()[j] = g(rng);
    }
    Dictionary<double> dict{Matrix<double>::Zero(P, 2), double(P)};
    auto st = ToyState(2, 1, 1, 0.5);
    st.hp.g0 = st.hp.h0 = 1e-6;
    double sum = 0;
    for (int t = 0; t < 1000; t++) {
      st.sweep = t;
      sum += sample_noise_precision<double>(X, dict, EmptyCodes<double>(2, N), st);
    }
    CHECK(std::abs(sum / 1000 * sigma * sigma - 1.0) < 0.05);

    // zero residual: the posterior keeps the prior rate
    st.hp.g0 = 2.0;
    st.hp.h0 = 50.0;
    Matrix<double> const Z0 = Matrix<double>::Zero(P, 100);
    double z = 0;
    for (int t = 0; t < 5000; t++) {
      st.sweep = t;
      z += sample_noise_precision<double>(Z0, dict, EmptyCodes<double>(2, 100), st);
    }
    CHECK(z / 5000 == doctest::Approx((2.0 + 200) / 50.0).epsilon(0.01));
    st.sweep = 3;
    CHECK(sample_noise_precision<double>(X, dict, EmptyCodes<double>(2, N), st) ==
          sample_noise_precision<double>(X, dict, EmptyCodes<double>(2, N), st));
  }
}

TEST_CASE("prior atoms per patch average gamma")
{
  HyperParams hp;
  auto const use = prior_atoms_per_patch(hp, 100000, 1);
  double const mean = std::accumulate(use.begin(), use.end(), 0.0) / use.size();
  CHECK(std::abs(mean - 5.0) < 0.5);
}

TEST_CASE("gibbs sweeps fit rank-one patches")
{
  Index const P = 9, N = 400;
  Philox rng(6, 6);
  std::normal_distribution<double> g;
  Eigen::VectorXd d(P);
  for (Index p = 0; p < P; p++) {
    d(p) = g(rng);
  }
  Matrix<double> X(P, N);
  for (Index i = 0; i < N; i++) {
    X.col(i) = d * (3.0 + g(rng));
  }
  HyperParams hp;
  hp.K = 8;
  hp.gamma = 2;
  hp.data_noise_prior = false;
  auto model = init_state<double>(X, hp, 2);
  PatchConfig const patch{3};
  for (int t = 0; t < 50; t++) {
    gibbs_sweep<double>(X, model, patch);
  }
  double const rel = std::sqrt(ResidualNorms<double>(X, model.dict, model.codes).sum()) / X.norm();
  CHECK(rel < 0.05);
}

TEST_CASE("log joint bookkeeping")
{
  auto const img = RandomImage(12, Mode::Real, 7);
  auto const X = extract_patches<double>(img, {3});
  HyperParams hp;
  hp.K = 10;
  auto model = init_state<double>(X, hp, 4);
  gibbs_sweep<double>(X, model, {3});
  gibbs_sweep<double>(X, model, {3});
  auto const &st = model.state;
  double const base = log_joint<double>(X, model.dict, model.codes, st);

  // flipping one z at fixed s changes the log joint by the Bernoulli odds plus the likelihood change
  auto flipped = model.codes;
  Index const k = 2, i = 5;
  flipped.Z(k, i) ^= 1;
  double const s = model.codes.S(k, i);
  Eigen::VectorXd r = X.col(i);
  for (Index j = 0; j < hp.K; j++) {
    if (model.codes.Z(j, i) && j != k) { r -= model.codes.S(j, i) * model.dict.atoms.col(j); }
  }
  double const on = std::log(st.pi(k)) - 0.5 * st.gamma_eps * (r - s * model.dict.atoms.col(k)).squaredNorm();
  double const off = std::log1p(-st.pi(k)) - 0.5 * st.gamma_eps * r.squaredNorm();
  double const expect = model.codes.Z(k, i) ? off - on : on - off;
  double const got = log_joint<double>(X, model.dict, flipped, st) - base;
  CHECK(std::abs(got - expect) < 1e-6 * std::abs(base));

  // exchangeable in the patch order
  std::vector<Index> perm(X.cols());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  Matrix<double> Xp(X.rows(), X.cols());
  auto cp = model.codes;
  for (Index j = 0; j < X.cols(); j++) {
    Xp.col(j) = X.col(perm[j]);
    cp.Z.col(j) = model.codes.Z.col(perm[j]);
    cp.S.col(j) = model.codes.S.col(perm[j]);
  }
  CHECK(log_joint<double>(Xp, model.dict, cp, st) == doctest::Approx(base).epsilon(1e-12));

  // zero residual: the gamma_eps dependence is closed form
  auto exact = model;
  Matrix<double> const Xa = exact.dict.atoms * exact.codes.alpha();
  auto s1 = exact.state, s2 = exact.state;
  s1.gamma_eps = 2.0;
  s2.gamma_eps = 5.0;
  double const diff = log_joint<double>(Xa, exact.dict, exact.codes, s2) - log_joint<double>(Xa, exact.dict, exact.codes, s1);
  double const PN = double(Xa.size());
  double const want = (0.5 * PN + s1.hp.g0 - 1) * std::log(5.0 / 2.0) - s1.hp.h0 * 3.0;
  CHECK(diff == doctest::Approx(want).epsilon(1e-9));

  auto bad = st;
  bad.gamma_eps = 0;
  CHECK_THROWS_AS(log_joint<double>(X, model.dict, model.codes, bad), InvalidConfig);
}

TEST_CASE("sweeps are deterministic and independent of the thread count")
{
  auto const img = RandomImage(24, Mode::Real, 1);
  auto const X = extract_patches<double>(img, {6});
  HyperParams hp;
  hp.K = 20;
  int const threads = omp_get_max_threads();
  auto run = [&](int t) {
    omp_set_num_threads(t);
    auto m = init_state<double>(X, hp, 8);
    ImageGrid out;
    for (int s = 0; s < 4; s++) {
      out = gibbs_sweep<double>(X, m, {6});
    }
    return std::pair{out, m.dict.atoms};
  };
  auto const a = run(1);
  auto const b = run(1);
  auto const c = run(3);
  omp_set_num_threads(threads);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first == c.first);
  CHECK(a.second == c.second);
}

TEST_CASE("complex mode follows real mode on real data")
{
  // identical conditionals: same evidence from |d^H r|^2 whether stored as real or complex
  Eigen::VectorXd d(3), r(3);
  d << 0.3, -1.0, 0.5;
  r << 1.0, 2.0, -0.5;
  Eigen::VectorXcd const dc = d.cast<Cx>(), rc = r.cast<Cx>();
  auto const pr = CodeConditional(0.2, 3.0, 1.5, d.squaredNorm(), std::pow(d.dot(r), 2));
  auto const pc = CodeConditional(0.2, 3.0, 1.5, dc.squaredNorm(), std::norm(dc.dot(rc)));
  CHECK(pr.prob == pc.prob);
  CHECK(pr.mean_scale == pc.mean_scale);

  // SVD initialisation of real patches stays real
  auto const img = RandomImage(12, Mode::Real, 2);
  auto const Xc = extract_patches<Cx>(img, {3});
  auto const Xr = extract_patches<double>(img, {3});
  HyperParams hp;
  hp.K = 12;
  auto const mc = init_state<Cx>(Xc, hp, 3);
  auto const mr = init_state<double>(Xr, hp, 3);
  for (Index k = 0; k < 9; k++) {
    Eigen::VectorXcd const a = mc.dict.atoms.col(k);
    Eigen::VectorXd const b = mr.dict.atoms.col(k);
    // eigenvectors agree up to a unit phase
    Cx const phase = a.dot(b.cast<Cx>());
    CHECK(std::abs(std::abs(phase) - 1.0) < 1e-9);
    CHECK((a * phase - b.cast<Cx>()).norm() < 1e-8);
  }
}

TEST_CASE("checkpoint round trip")
{
  TempDir tmp("bpfa_ckpt");
  auto const img = RandomImage(12, Mode::Real, 2);
  auto const X = extract_patches<double>(img, {3});
  HyperParams hp;
  hp.K = 12;
  auto m = init_state<double>(X, hp, 3);
  gibbs_sweep<double>(X, m, {3});
  SaveCheckpoint(m, tmp.path);
  auto const ck = LoadCheckpoint(tmp.path);
  CHECK(ck.mode == Mode::Real);
  CHECK((ck.atoms.real() - m.dict.atoms).norm() == 0.0);
  CHECK(ck.state.sweep == 1);
  CHECK(ck.state.gamma_eps == m.state.gamma_eps);
  CHECK(ck.state.pi == m.state.pi);
  CHECK(ck.state.hp.K == 12);
}

TEST_CASE("denoising a clean image learns a small noise level")
{
  auto const cam = LoadImage(BPMRI_TEST_DATA "/camera.pgm");
  ImageGrid crop(64);
  for (Index r = 0; r < 64; r++) {
    for (Index c = 0; c < 64; c++) {
      crop(r, c) = cam(200 + r, 200 + c);
    }
  }
  HyperParams hp;
  hp.data_noise_prior = false;
  auto const res = denoise(crop, hp, 30, 4);
  CHECK(res.diagnostics.noise_std < 25.5);
  CHECK(res.noise_trace.size() == 30);
  Index total = 0;
  for (auto c : res.diagnostics.atoms_per_patch) {
    total += c;
  }
  CHECK(total == 64 * 64);
  CHECK(std::is_sorted(res.diagnostics.sorted_pi.rbegin(), res.diagnostics.sorted_pi.rend()));
  CHECK(res.image.side() == 64);
}
