#pragma once

#include "bpfa.hpp"
#include "io.hpp"

#include <nlohmann/json.hpp>

namespace bpmri {

void to_json(nlohmann::json &j, HyperParams const &hp);
void from_json(nlohmann::json const &j, HyperParams &hp);

/*
 * <dir>/dictionary.bin: P x K atoms, column-major, float64 (re, im) pairs.
 * <dir>/manifest.json: {K, P, sweep, seed, mode, hyperparams, pi, gamma_eps, gamma_s}.
 */
template <typename Scalar>
void SaveCheckpoint(BpfaModel<Scalar> const &model, fs::path const &dir);

struct Checkpoint
{
  Mode mode = Mode::Real;
  Matrix<Cx> atoms;
  BpfaState state;
};

Checkpoint LoadCheckpoint(fs::path const &dir);

} // namespace bpmri
