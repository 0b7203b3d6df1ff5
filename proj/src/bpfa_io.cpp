#include "bpmri/bpfa_io.hpp"

#include "bpmri/error.hpp"

#include <fstream>

namespace bpmri {

using json = nlohmann::json;

void to_json(json &j, HyperParams const &hp)
{
  j = json{{"K", hp.K},
           {"c", hp.c},
           {"gamma", hp.gamma},
           {"e0", hp.e0},
           {"f0", hp.f0},
           {"data_noise_prior", hp.data_noise_prior},
           {"g0", hp.g0},
           {"h0", hp.h0}};
}

void from_json(json const &j, HyperParams &hp)
{
  HyperParams const defaults;
  hp.K = j.value("K", defaults.K);
  hp.c = j.value("c", defaults.c);
  hp.gamma = j.value("gamma", defaults.gamma);
  hp.e0 = j.value("e0", defaults.e0);
  hp.f0 = j.value("f0", defaults.f0);
  hp.data_noise_prior = j.value("data_noise_prior", defaults.data_noise_prior);
  hp.g0 = j.value("g0", defaults.g0);
  hp.h0 = j.value("h0", defaults.h0);
}

template <typename Scalar>
void SaveCheckpoint(BpfaModel<Scalar> const &model, fs::path const &dir)
{
  fs::create_directories(dir);
  auto const &D = model.dict.atoms;
  std::vector<Cx> flat(D.size());
  for (Index j = 0; j < D.size(); j++) {
    flat[j] = Cx(D.data()[j]);
  }
  WriteRawComplex(dir / "dictionary.bin", flat);
  auto const &st = model.state;
  json manifest{{"K", D.cols()},
                {"P", D.rows()},
                {"sweep", st.sweep},
                {"seed", st.seed},
                {"mode", std::is_same_v<Scalar, double> ? "real" : "complex"},
                {"hyperparams", st.hp},
                {"gamma_eps", st.gamma_eps},
                {"pi", std::vector<double>(st.pi.data(), st.pi.data() + st.pi.size())},
                {"gamma_s", std::vector<double>(st.gamma_s.data(), st.gamma_s.data() + st.gamma_s.size())}};
  std::ofstream out(dir / "manifest.json");
  if (!out) { throw IoError("cannot write '" + (dir / "manifest.json").string() + "'"); }
  out << manifest.dump(2) << "\n";
}

Checkpoint LoadCheckpoint(fs::path const &dir)
{
  std::ifstream in(dir / "manifest.json");
  if (!in) { throw IoError("cannot open '" + (dir / "manifest.json").string() + "'"); }
  Checkpoint cp;
  Index K = 0, P = 0;
  try {
    auto const m = json::parse(in);
    K = m.at("K").get<Index>();
    P = m.at("P").get<Index>();
    cp.mode = ParseMode(m.at("mode").get<std::string>());
    cp.state.hp = m.at("hyperparams").get<HyperParams>();
    cp.state.sweep = m.at("sweep").get<std::uint64_t>();
    cp.state.seed = m.at("seed").get<std::uint64_t>();
    cp.state.gamma_eps = m.at("gamma_eps").get<double>();
    auto const pi = m.at("pi").get<std::vector<double>>();
    auto const gs = m.at("gamma_s").get<std::vector<double>>();
    if (static_cast<Index>(pi.size()) != K || static_cast<Index>(gs.size()) != K) {
      throw IoError("checkpoint vectors do not have K entries");
    }
    cp.state.pi = Eigen::Map<Eigen::VectorXd const>(pi.data(), K);
    cp.state.gamma_s = Eigen::Map<Eigen::VectorXd const>(gs.data(), K);
  } catch (json::exception const &e) {
    throw IoError("bad checkpoint manifest in '" + dir.string() + "': " + e.what());
  }
  auto const flat = ReadRawComplex(dir / "dictionary.bin");
  if (static_cast<Index>(flat.size()) != P * K) { throw IoError("dictionary.bin does not hold P*K values"); }
  cp.atoms = Eigen::Map<Matrix<Cx> const>(flat.data(), P, K);
  return cp;
}

template void SaveCheckpoint<double>(BpfaModel<double> const &, fs::path const &);
template void SaveCheckpoint<Cx>(BpfaModel<Cx> const &, fs::path const &);

} // namespace bpmri
