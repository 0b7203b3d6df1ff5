#include "bpmri/bpfa.hpp"

#include "bpmri/error.hpp"
#include "bpmri/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace bpmri {

namespace {

inline double Conj(double x) { return x; }
inline Cx Conj(Cx x) { return std::conj(x); }
inline double AbsSq(double x) { return x * x; }
inline double AbsSq(Cx x) { return std::norm(x); }

// Standard normal in the real case, circularly-symmetric unit-variance complex normal otherwise.
template <typename Scalar, typename Rng>
Scalar StdNormal(Rng &rng, std::normal_distribution<double> &normal)
{
  if constexpr (std::is_same_v<Scalar, double>) {
    return normal(rng);
  } else {
    double const re = normal(rng);
    double const im = normal(rng);
    return Cx(re, im) * std::sqrt(0.5);
  }
}

template <typename Scalar>
Matrix<Scalar> PriorAtoms(Index P, Index K, Philox &rng)
{
  std::normal_distribution<double> normal;
  double const scale = 1.0 / std::sqrt(static_cast<double>(P));
  Matrix<Scalar> D(P, K);
  for (Index k = 0; k < K; k++) {
    for (Index p = 0; p < P; p++) {
      D(p, k) = scale * StdNormal<Scalar>(rng, normal);
    }
  }
  return D;
}

template <typename Scalar>
double EntryVariance(Matrix<Scalar> const &X)
{
  if (X.size() == 0) { return 0.0; }
  Scalar const mean = X.mean();
  double sum = 0.0;
  for (Index j = 0; j < X.cols(); j++) {
    for (Index p = 0; p < X.rows(); p++) {
      sum += AbsSq(X(p, j) - mean);
    }
  }
  return sum / static_cast<double>(X.size());
}

void CheckPositive(double v, char const *what)
{
  if (!(v > 0.0) || !std::isfinite(v)) { throw InvalidConfig(std::string(what) + " must be finite and > 0"); }
}

// Sum of s_ik d_k over the atoms patch i uses.
template <typename Scalar>
void AddApproximation(Dictionary<Scalar> const &dict,
                      SparseCodes<Scalar> const &codes,
                      Index i,
                      Scalar sign,
                      Scalar *out)
{
  Index const P = dict.atoms.rows();
  for (Index k = 0; k < codes.Z.rows(); k++) {
    if (!codes.Z(k, i)) { continue; }
    Scalar const w = sign * codes.S(k, i);
    Scalar const *d = dict.atoms.col(k).data();
    for (Index p = 0; p < P; p++) {
      out[p] += w * d[p];
    }
  }
}

template <typename Scalar>
void CheckShapes(Matrix<Scalar> const &X, Dictionary<Scalar> const &dict, SparseCodes<Scalar> const &codes)
{
  if (dict.atoms.rows() != X.rows() || codes.Z.cols() != X.cols() || codes.Z.rows() != dict.atoms.cols() ||
      codes.S.rows() != codes.Z.rows() || codes.S.cols() != codes.Z.cols()) {
    throw DimensionMismatch("BPFA shapes disagree: X " + std::to_string(X.rows()) + "x" + std::to_string(X.cols()) +
                            ", D " + std::to_string(dict.atoms.rows()) + "x" + std::to_string(dict.atoms.cols()) +
                            ", Z " + std::to_string(codes.Z.rows()) + "x" + std::to_string(codes.Z.cols()));
  }
}

} // namespace

void HyperParams::validate() const
{
  if (K < 1) { throw InvalidConfig("K must be >= 1"); }
  CheckPositive(c, "c");
  CheckPositive(gamma, "gamma");
  if (!(gamma < static_cast<double>(K))) { throw InvalidConfig("gamma must be smaller than K"); }
  CheckPositive(e0, "e0");
  CheckPositive(f0, "f0");
  if (!data_noise_prior) {
    CheckPositive(g0, "g0");
    CheckPositive(h0, "h0");
  }
}

template <typename Scalar>
Matrix<Scalar> SparseCodes<Scalar>::alpha() const
{
  Matrix<Scalar> a = S;
  for (Index i = 0; i < a.cols(); i++) {
    for (Index k = 0; k < a.rows(); k++) {
      if (!Z(k, i)) { a(k, i) = Scalar{0}; }
    }
  }
  return a;
}

template <typename Scalar>
Index SparseCodes<Scalar>::active() const
{
  return Z.template cast<Index>().sum();
}

template <typename Scalar>
std::vector<Index> SparseCodes<Scalar>::usagePerAtom() const
{
  std::vector<Index> use(Z.rows(), 0);
  for (Index i = 0; i < Z.cols(); i++) {
    for (Index k = 0; k < Z.rows(); k++) {
      use[k] += Z(k, i);
    }
  }
  return use;
}

template <typename Scalar>
std::vector<Index> SparseCodes<Scalar>::atomsPerPatch() const
{
  std::vector<Index> count(Z.cols(), 0);
  for (Index i = 0; i < Z.cols(); i++) {
    for (Index k = 0; k < Z.rows(); k++) {
      count[i] += Z(k, i);
    }
  }
  return count;
}

template <typename Scalar>
BpfaModel<Scalar> init_state(Matrix<Scalar> const &X, HyperParams const &hp_in, std::uint64_t seed)
{
  hp_in.validate();
  Index const P = X.rows();
  Index const N = X.cols();
  Index const K = hp_in.K;
  if (P < 1 || N < 1) { throw DimensionMismatch("patch matrix is empty"); }

  BpfaModel<Scalar> model;
  auto &state = model.state;
  state.hp = hp_in;
  state.seed = seed;
  state.sweep = 0;
  if (state.hp.data_noise_prior) {
    double v = EntryVariance(X);
    if (!(v > 0.0)) { v = 1.0; }
    state.hp.g0 = 0.5 * static_cast<double>(N) / 10.0;
    state.hp.h0 = state.hp.g0 * v / 8.0;
  }

  auto rng = MakeRng(seed, StreamTag::Init);
  model.dict.prior_precision = static_cast<double>(P);
  model.dict.atoms = PriorAtoms<Scalar>(P, K, rng);

  // Leading left singular vectors of X = leading eigenvectors of X X^H.
  Matrix<Scalar> const gram = X * X.adjoint();
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(gram);
  if (eig.info() == Eigen::Success) {
    auto const &values = eig.eigenvalues();
    double const top = values(P - 1);
    Index const want = std::min<Index>({36, K, P});
    for (Index j = 0; j < want; j++) {
      Index const col = P - 1 - j;
      if (!(top > 0.0) || values(col) <= 1e-12 * top) { break; }
      model.dict.atoms.col(j) = eig.eigenvectors().col(col);
    }
  }

  state.pi = Eigen::VectorXd::Constant(K, 0.1);
  state.gamma_eps = state.hp.g0 / state.hp.h0;
  state.gamma_s = Eigen::VectorXd::Constant(K, state.hp.e0 / state.hp.f0);

  model.codes.Z.setZero(K, N);
  model.codes.S.resize(K, N);
  std::normal_distribution<double> normal;
  for (Index i = 0; i < N; i++) {
    for (Index k = 0; k < K; k++) {
      model.codes.S(k, i) = StdNormal<Scalar>(rng, normal) / std::sqrt(state.gamma_s(k));
    }
  }
  return model;
}

template <typename Scalar>
Matrix<Scalar> DictionaryDraw(Matrix<Scalar> const &X,
                              SparseCodes<Scalar> const &codes,
                              double gamma_eps,
                              Matrix<Scalar> const &W)
{
  Index const P = X.rows();
  Index const K = codes.Z.rows();
  Index const N = X.cols();
  // G = alpha alpha^H and B = X alpha^H, accumulated over each patch's active atoms only.
  Matrix<Scalar> G = Matrix<Scalar>::Zero(K, K);
  Matrix<Scalar> B = Matrix<Scalar>::Zero(P, K);
  std::vector<Index> on;
  on.reserve(K);
  for (Index i = 0; i < N; i++) {
    on.clear();
    for (Index k = 0; k < K; k++) {
      if (codes.Z(k, i)) { on.push_back(k); }
    }
    for (Index a : on) {
      Scalar const sa = codes.S(a, i);
      for (Index b : on) {
        G(a, b) += sa * Conj(codes.S(b, i));
      }
      B.col(a) += X.col(i) * Conj(sa);
    }
  }
  // M = gamma_eps G + P I is Hermitian positive definite.
  Matrix<Scalar> M = gamma_eps * G;
  M.diagonal().array() += static_cast<double>(P);
  Eigen::LLT<Matrix<Scalar>> llt(M);
  if (llt.info() != Eigen::Success) { throw Error("dictionary posterior precision is not positive definite"); }
  // Mean gamma_eps B M^{-1}; noise rows ~ N(0, M^{-1}) via L^{-H} W.
  Matrix<Scalar> const mean = gamma_eps * llt.solve(B.adjoint()).adjoint();
  Matrix<Scalar> const noise = llt.matrixU().solve(W).adjoint();
  return mean + noise;
}

template <typename Scalar>
Dictionary<Scalar> sample_dictionary(Matrix<Scalar> const &X, SparseCodes<Scalar> const &codes, BpfaState const &state)
{
  Index const P = X.rows();
  Index const K = codes.Z.rows();
  if (codes.Z.cols() != X.cols()) { throw DimensionMismatch("codes and patches disagree on N"); }
  CheckPositive(state.gamma_eps, "gamma_eps");
  auto rng = MakeRng(state.seed, StreamTag::Dictionary, state.sweep);
  std::normal_distribution<double> normal;
  Matrix<Scalar> W(K, P);
  for (Index p = 0; p < P; p++) {
    for (Index k = 0; k < K; k++) {
      W(k, p) = StdNormal<Scalar>(rng, normal);
    }
  }
  return Dictionary<Scalar>{DictionaryDraw(X, codes, state.gamma_eps, W), static_cast<double>(P)};
}

CodePosterior CodeConditional(double pi, double gamma_eps, double gamma_s, double dtd, double dtr_sq)
{
  CodePosterior post{};
  double const ratio = gamma_s / gamma_eps;
  post.mean_scale = 1.0 / (ratio + dtd);
  post.var_on = 1.0 / (gamma_s + gamma_eps * dtd);
  post.var_off = 1.0 / gamma_s;
  double const evidence = -0.5 * std::log1p(gamma_eps / gamma_s * dtd) + 0.5 * gamma_eps * dtr_sq * post.mean_scale;
  if (pi <= 0.0) {
    post.log_odds = -std::numeric_limits<double>::infinity();
    post.prob = 0.0;
  } else if (pi >= 1.0) {
    post.log_odds = std::numeric_limits<double>::infinity();
    post.prob = 1.0;
  } else {
    post.log_odds = std::log(pi) - std::log1p(-pi) + evidence;
    post.prob = post.log_odds >= 0.0 ? 1.0 / (1.0 + std::exp(-post.log_odds)) :
                                       std::exp(post.log_odds) / (1.0 + std::exp(post.log_odds));
  }
  return post;
}

template <typename Scalar>
SparseCodes<Scalar> sample_codes(Matrix<Scalar> const &X,
                                 Dictionary<Scalar> const &dict,
                                 SparseCodes<Scalar> const &codes,
                                 BpfaState const &state)
{
  CheckShapes(X, dict, codes);
  CheckPositive(state.gamma_eps, "gamma_eps");
  Index const P = X.rows();
  Index const N = X.cols();
  Index const K = dict.atoms.cols();

  // Per-atom terms that do not depend on the patch.
  struct AtomTerms
  {
    double pi, gamma_s, dtd;
  };
  std::vector<AtomTerms> terms(K);
  for (Index k = 0; k < K; k++) {
    CheckPositive(state.gamma_s(k), "gamma_s");
    terms[k] = {std::clamp(state.pi(k), 0.0, 1.0), state.gamma_s(k), dict.atoms.col(k).squaredNorm()};
  }

  SparseCodes<Scalar> next = codes;
#pragma omp parallel
  {
    Vector<Scalar> r(P);
#pragma omp for schedule(static)
    for (Index i = 0; i < N; i++) {
      auto rng = MakeRng(state.seed, StreamTag::Codes, state.sweep, static_cast<std::uint64_t>(i));
      std::normal_distribution<double> normal;
      r = X.col(i);
      AddApproximation(dict, next, i, Scalar{-1}, r.data());
      for (Index k = 0; k < K; k++) {
        Scalar const *d = dict.atoms.col(k).data();
        if (next.Z(k, i)) {
          Scalar const s = next.S(k, i);
          for (Index p = 0; p < P; p++) {
            r[p] += s * d[p];
          }
        }
        Scalar dtr{0};
        for (Index p = 0; p < P; p++) {
          dtr += Conj(d[p]) * r[p];
        }
        auto const &t = terms[k];
        auto const post = CodeConditional(t.pi, state.gamma_eps, t.gamma_s, t.dtd, AbsSq(dtr));
        bool const z = rng.uniform() < post.prob;
        Scalar const noise = StdNormal<Scalar>(rng, normal);
        Scalar s;
        if (z) {
          s = post.mean_scale * dtr + std::sqrt(post.var_on) * noise;
          for (Index p = 0; p < P; p++) {
            r[p] -= s * d[p];
          }
        } else {
          s = std::sqrt(post.var_off) * noise;
        }
        next.Z(k, i) = z ? 1 : 0;
        next.S(k, i) = s;
      }
    }
  }
  return next;
}

template <typename Scalar>
Eigen::VectorXd ResidualNorms(Matrix<Scalar> const &X, Dictionary<Scalar> const &dict, SparseCodes<Scalar> const &codes)
{
  CheckShapes(X, dict, codes);
  Index const N = X.cols();
  Eigen::VectorXd norms(N);
#pragma omp parallel
  {
    Vector<Scalar> r(X.rows());
#pragma omp for schedule(static)
    for (Index i = 0; i < N; i++) {
      r = X.col(i);
      AddApproximation(dict, codes, i, Scalar{-1}, r.data());
      norms(i) = r.squaredNorm();
    }
  }
  return norms;
}

template <typename Scalar>
double sample_noise_precision(Matrix<Scalar> const &X,
                              Dictionary<Scalar> const &dict,
                              SparseCodes<Scalar> const &codes,
                              BpfaState const &state)
{
  auto const norms = ResidualNorms(X, dict, codes);
  double sse = 0.0;
  for (Index i = 0; i < norms.size(); i++) { // fixed order
    sse += norms(i);
  }
  double const shape = state.hp.g0 + 0.5 * static_cast<double>(X.rows() * X.cols());
  double const rate = state.hp.h0 + 0.5 * sse;
  auto rng = MakeRng(state.seed, StreamTag::NoisePrecision, state.sweep);
  return SampleGamma(rng, shape, rate);
}

template <typename Scalar>
Eigen::VectorXd sample_weight_precisions(SparseCodes<Scalar> const &codes, BpfaState const &state)
{
  Index const K = codes.Z.rows();
  Index const N = codes.Z.cols();
  auto rng = MakeRng(state.seed, StreamTag::WeightPrecision, state.sweep);
  Eigen::VectorXd out(K);
  for (Index k = 0; k < K; k++) {
    double used = 0.0;
    double energy = 0.0;
    for (Index i = 0; i < N; i++) {
      if (codes.Z(k, i)) {
        used += 1.0;
        energy += AbsSq(codes.S(k, i));
      }
    }
    out(k) = SampleGamma(rng, state.hp.e0 + 0.5 * used, state.hp.f0 + 0.5 * energy);
    // Gamma support is (0, inf); guard against underflow of tiny shapes.
    out(k) = std::max(out(k), std::numeric_limits<double>::min());
  }
  return out;
}

template <typename Scalar>
Eigen::VectorXd sample_pi(SparseCodes<Scalar> const &codes, BpfaState const &state)
{
  Index const K = codes.Z.rows();
  Index const N = codes.Z.cols();
  auto const use = codes.usagePerAtom();
  auto rng = MakeRng(state.seed, StreamTag::Probabilities, state.sweep);
  Eigen::VectorXd out(K);
  for (Index k = 0; k < K; k++) {
    auto const m = static_cast<double>(use[k]);
    out(k) = SampleBeta(rng, state.hp.a0() + m, state.hp.b0() + static_cast<double>(N) - m);
  }
  return out;
}

std::vector<Index> prior_atoms_per_patch(HyperParams const &hp, Index patches, std::uint64_t seed)
{
  hp.validate();
  std::vector<Index> count(patches, 0);
  for (Index i = 0; i < patches; i++) {
    auto rng = MakeRng(seed, StreamTag::Probabilities, 0, static_cast<std::uint64_t>(i));
    for (Index k = 0; k < hp.K; k++) {
      double const pi = SampleBeta(rng, hp.a0(), hp.b0());
      count[i] += rng.uniform() < pi;
    }
  }
  return count;
}

template <typename Scalar>
Matrix<Scalar> Approximation(Dictionary<Scalar> const &dict, SparseCodes<Scalar> const &codes)
{
  Index const N = codes.Z.cols();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(dict.atoms.rows(), N);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < N; i++) {
    AddApproximation(dict, codes, i, Scalar{1}, out.col(i).data());
  }
  return out;
}

template <typename Scalar>
ImageGrid gibbs_sweep(Matrix<Scalar> const &X, BpfaModel<Scalar> &model, PatchConfig const &patch)
{
  auto &state = model.state;
  if (model.codes.active() > 0) { model.dict = sample_dictionary(X, model.codes, state); }
  model.codes = sample_codes(X, model.dict, model.codes, state);
  state.gamma_eps = sample_noise_precision(X, model.dict, model.codes, state);
  state.gamma_s = sample_weight_precisions(model.codes, state);
  state.pi = sample_pi(model.codes, state);
  state.sweep++;
  return aggregate_patches<Scalar>(Approximation(model.dict, model.codes), patch);
}

template <typename Scalar>
double log_joint(Matrix<Scalar> const &X,
                 Dictionary<Scalar> const &dict,
                 SparseCodes<Scalar> const &codes,
                 BpfaState const &state)
{
  auto const &hp = state.hp;
  CheckPositive(state.gamma_eps, "gamma_eps");
  for (Index k = 0; k < state.gamma_s.size(); k++) {
    CheckPositive(state.gamma_s(k), "gamma_s");
  }
  auto const P = static_cast<double>(X.rows());
  auto const N = static_cast<double>(X.cols());
  Index const K = codes.Z.rows();

  auto const norms = ResidualNorms(X, dict, codes);
  double sse = 0.0;
  for (Index i = 0; i < norms.size(); i++) {
    sse += norms(i);
  }
  double total = 0.5 * P * N * std::log(state.gamma_eps) - 0.5 * state.gamma_eps * sse;

  auto const use = codes.usagePerAtom();
  double const tiny = std::numeric_limits<double>::min();
  for (Index k = 0; k < K; k++) {
    double const gs = state.gamma_s(k);
    double const pi = state.pi(k);
    // weights
    total += 0.5 * N * std::log(gs) - 0.5 * gs * codes.S.row(k).squaredNorm();
    // inclusions; 0 log 0 = 0
    auto const m = static_cast<double>(use[k]);
    if (m > 0) { total += m * std::log(pi); }
    if (N - m > 0) { total += (N - m) * std::log1p(-pi); }
    // beta prior on pi, clamped away from the endpoints where its density diverges
    double const pc = std::clamp(pi, tiny, 1.0 - 1e-16);
    total += (hp.a0() - 1.0) * std::log(pc) + (hp.b0() - 1.0) * std::log1p(-pc);
    // gamma prior on gamma_s
    total += (hp.e0 - 1.0) * std::log(gs) - hp.f0 * gs;
  }
  total += -0.5 * dict.prior_precision * dict.atoms.squaredNorm();
  total += (hp.g0 - 1.0) * std::log(state.gamma_eps) - hp.h0 * state.gamma_eps;
  return total;
}

template <typename Scalar>
BpfaDiagnostics Diagnose(BpfaModel<Scalar> const &model)
{
  BpfaDiagnostics diag;
  auto const &state = model.state;
  Index const K = model.codes.Z.rows();
  diag.noise_std = 1.0 / std::sqrt(state.gamma_eps);
  diag.pi.assign(state.pi.data(), state.pi.data() + state.pi.size());
  diag.sorted_pi = diag.pi;
  std::sort(diag.sorted_pi.begin(), diag.sorted_pi.end(), std::greater<>());
  diag.atoms_per_patch.assign(K + 1, 0);
  for (auto m : model.codes.atomsPerPatch()) {
    diag.atoms_per_patch[m]++;
  }
  auto const use = model.codes.usagePerAtom();
  diag.atoms_in_use = std::count_if(use.begin(), use.end(), [](Index u) { return u > 0; });
  diag.patch_dim = model.dict.atoms.rows();
  diag.atoms.resize(model.dict.atoms.size());
  for (Index j = 0; j < model.dict.atoms.size(); j++) {
    diag.atoms[j] = Cx(model.dict.atoms.data()[j]);
  }
  return diag;
}

namespace {

template <typename Scalar>
DenoiseResult DenoiseWith(ImageGrid img, HyperParams const &hp, Index sweeps, std::uint64_t seed,
                          PatchConfig const &patch, double scale)
{
  for (auto &v : img.pixels()) {
    v /= scale;
  }
  auto const X = extract_patches<Scalar>(img, patch);
  auto model = init_state<Scalar>(X, hp, seed);
  DenoiseResult result;
  for (Index t = 0; t < sweeps; t++) {
    result.image = gibbs_sweep<Scalar>(X, model, patch);
    result.noise_trace.push_back(scale / std::sqrt(model.state.gamma_eps));
  }
  for (auto &v : result.image.pixels()) {
    v *= scale;
  }
  result.image.setMode(img.mode());
  result.diagnostics = Diagnose(model);
  result.diagnostics.noise_std *= scale;
  return result;
}

} // namespace

DenoiseResult denoise(ImageGrid const &img, HyperParams const &hp, Index sweeps, std::uint64_t seed,
                      PatchConfig const &patch, double scale)
{
  if (sweeps < 1) { throw InvalidConfig("denoising needs at least one sweep"); }
  if (!(scale > 0.0) || !std::isfinite(scale)) { throw InvalidConfig("scale must be finite and > 0"); }
  if (img.isReal()) { return DenoiseWith<double>(img, hp, sweeps, seed, patch, scale); }
  return DenoiseWith<Cx>(img, hp, sweeps, seed, patch, scale);
}

#define BPMRI_INSTANTIATE(S)                                                                                      \
  template struct SparseCodes<S>;                                                                                 \
  template BpfaModel<S> init_state<S>(Matrix<S> const &, HyperParams const &, std::uint64_t);                     \
  template Matrix<S> DictionaryDraw<S>(Matrix<S> const &, SparseCodes<S> const &, double, Matrix<S> const &);     \
  template Dictionary<S> sample_dictionary<S>(Matrix<S> const &, SparseCodes<S> const &, BpfaState const &);      \
  template SparseCodes<S> sample_codes<S>(Matrix<S> const &, Dictionary<S> const &, SparseCodes<S> const &,       \
                                          BpfaState const &);                                                     \
  template Eigen::VectorXd ResidualNorms<S>(Matrix<S> const &, Dictionary<S> const &, SparseCodes<S> const &);    \
  template double sample_noise_precision<S>(Matrix<S> const &, Dictionary<S> const &, SparseCodes<S> const &,     \
                                            BpfaState const &);                                                   \
  template Eigen::VectorXd sample_weight_precisions<S>(SparseCodes<S> const &, BpfaState const &);                \
  template Eigen::VectorXd sample_pi<S>(SparseCodes<S> const &, BpfaState const &);                               \
  template ImageGrid gibbs_sweep<S>(Matrix<S> const &, BpfaModel<S> &, PatchConfig const &);                      \
  template double log_joint<S>(Matrix<S> const &, Dictionary<S> const &, SparseCodes<S> const &,                  \
                               BpfaState const &);                                                                \
  template BpfaDiagnostics Diagnose<S>(BpfaModel<S> const &);

BPMRI_INSTANTIATE(double)
BPMRI_INSTANTIATE(Cx)

#undef BPMRI_INSTANTIATE

} // namespace bpmri
