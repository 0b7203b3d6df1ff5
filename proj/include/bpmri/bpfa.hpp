#pragma once

#include "image.hpp"
#include "patches.hpp"

#include <cstdint>
#include <vector>

namespace bpmri {

/*
 * Beta process factor analysis with truncation K. Each patch is modelled as
 *   x_i = D (s_i o z_i) + eps_i,  eps_i ~ N(0, 1/gamma_eps I_P),
 *   d_k ~ N(0, 1/P I_P), z_ik ~ Bernoulli(pi_k), pi_k ~ Beta(c*gamma/K, c*(1 - gamma/K)),
 *   s_ik ~ N(0, 1/gamma_sk), gamma_eps ~ Gamma(g0, h0), gamma_sk ~ Gamma(e0, f0).
 * Gamma distributions are shape-rate throughout.
 */
struct HyperParams
{
  Index K = 108;
  double c = 1.0;
  double gamma = 5.0;
  double e0 = 1.0;
  double f0 = 1.0;
  // When set, init_state replaces g0/h0 with the data-driven noise prior
  // g0 = 0.05 * pixels, h0 = g0 * v / 8 (v: variance of the initial image).
  bool data_noise_prior = true;
  double g0 = 1e-6;
  double h0 = 1e-6;

  double a0() const { return c * gamma / static_cast<double>(K); }
  double b0() const { return c * (1.0 - gamma / static_cast<double>(K)); }
  void validate() const;
};

template <typename Scalar>
struct Dictionary
{
  Matrix<Scalar> atoms;        // P x K
  double prior_precision = 1;  // d_k ~ N(0, 1/prior_precision I); equals P
};

template <typename Scalar>
struct SparseCodes
{
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> Z; // K x N
  Matrix<Scalar> S;                                              // K x N

  Matrix<Scalar> alpha() const;
  Index active() const;                 // total number of z_ik = 1
  std::vector<Index> usagePerAtom() const;
  std::vector<Index> atomsPerPatch() const;
};

struct BpfaState
{
  HyperParams hp;
  Eigen::VectorXd pi;
  double gamma_eps = 1.0;
  Eigen::VectorXd gamma_s;
  std::uint64_t seed = 0;
  std::uint64_t sweep = 0; // completed sweeps; selects the RNG streams of the next one
};

template <typename Scalar>
struct BpfaModel
{
  Dictionary<Scalar> dict;
  SparseCodes<Scalar> codes;
  BpfaState state;
};

template <typename Scalar>
BpfaModel<Scalar> init_state(Matrix<Scalar> const &X, HyperParams const &hp, std::uint64_t seed);

template <typename Scalar>
Dictionary<Scalar> sample_dictionary(Matrix<Scalar> const &X, SparseCodes<Scalar> const &codes, BpfaState const &state);

// The dictionary draw with its Gaussian noise supplied: W is K x P standard normal.
template <typename Scalar>
Matrix<Scalar> DictionaryDraw(Matrix<Scalar> const &X,
                              SparseCodes<Scalar> const &codes,
                              double gamma_eps,
                              Matrix<Scalar> const &W);

template <typename Scalar>
SparseCodes<Scalar> sample_codes(Matrix<Scalar> const &X,
                                 Dictionary<Scalar> const &dict,
                                 SparseCodes<Scalar> const &codes,
                                 BpfaState const &state);

// Posterior of (z_ik, s_ik) given the residual with atom k removed.
struct CodePosterior
{
  double log_odds;   // log p(z=1|-) - log p(z=0|-)
  double prob;       // p(z=1|-)
  double mean_scale; // E[s|z=1] = mean_scale * d^H r
  double var_on;     // Var[s|z=1]
  double var_off;    // Var[s|z=0]
};

CodePosterior CodeConditional(double pi, double gamma_eps, double gamma_s, double dtd, double dtr_sq);

template <typename Scalar>
double sample_noise_precision(Matrix<Scalar> const &X,
                              Dictionary<Scalar> const &dict,
                              SparseCodes<Scalar> const &codes,
                              BpfaState const &state);

template <typename Scalar>
Eigen::VectorXd sample_weight_precisions(SparseCodes<Scalar> const &codes, BpfaState const &state);

template <typename Scalar>
Eigen::VectorXd sample_pi(SparseCodes<Scalar> const &codes, BpfaState const &state);

// Per-patch squared residual norms ||x_i - D alpha_i||^2.
template <typename Scalar>
Eigen::VectorXd ResidualNorms(Matrix<Scalar> const &X, Dictionary<Scalar> const &dict, SparseCodes<Scalar> const &codes);

/*
 * Atoms used by `patches` independent draws from the prior: each draw takes
 * fresh pi_k ~ Beta(a0, b0) and z_k ~ Bernoulli(pi_k), k = 1..K.
 */
std::vector<Index> prior_atoms_per_patch(HyperParams const &hp, Index patches, std::uint64_t seed);

/*
 * One Gibbs sweep: D, then (z, s), gamma_eps, gamma_s, pi. Returns the
 * denoised proposal aggregate_patches(D alpha). While no atom is in use
 * (fresh state) the dictionary keeps its initialisation, since its
 * conditional would be the prior.
 */
template <typename Scalar>
ImageGrid gibbs_sweep(Matrix<Scalar> const &X, BpfaModel<Scalar> &model, PatchConfig const &patch);

// Log joint density of patches and all model variables, up to an additive constant.
template <typename Scalar>
double log_joint(Matrix<Scalar> const &X,
                 Dictionary<Scalar> const &dict,
                 SparseCodes<Scalar> const &codes,
                 BpfaState const &state);

struct BpfaDiagnostics
{
  double noise_std = 0;               // 1/sqrt(gamma_eps), pixel units
  std::vector<double> pi;             // atom order
  std::vector<double> sorted_pi;      // descending
  std::vector<Index> atoms_per_patch; // histogram: entry m counts patches using m atoms, m = 0..K
  Index atoms_in_use = 0;             // atoms with at least one z_ik = 1
  Index patch_dim = 0;
  std::vector<Cx> atoms;              // P x K column-major
};

template <typename Scalar>
BpfaDiagnostics Diagnose(BpfaModel<Scalar> const &model);

struct DenoiseResult
{
  ImageGrid image;
  BpfaDiagnostics diagnostics;
  std::vector<double> noise_trace; // learned noise std after each sweep
};

// The sampler sees img / scale; the image, noise trace and noise std come back in img's units.
DenoiseResult denoise(ImageGrid const &img,
                      HyperParams const &hp,
                      Index sweeps,
                      std::uint64_t seed,
                      PatchConfig const &patch = {},
                      double scale = 255.0);

} // namespace bpmri
