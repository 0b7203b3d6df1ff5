#include "bpmri/harness.hpp"

#include "bpmri/error.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace bpmri {

using json = nlohmann::json;

namespace {

std::ofstream OpenCsv(fs::path const &path)
{
  std::ofstream out(path);
  if (!out) { throw IoError("cannot write '" + path.string() + "'"); }
  return out;
}

// Shortest representation that round-trips, so reruns produce identical text.
std::string Num(double v)
{
  if (std::isnan(v)) { return "nan"; }
  if (std::isinf(v)) { return v > 0 ? "inf" : "-inf"; }
  return fmt::format("{}", v);
}

std::string Quote(std::string s)
{
  std::replace(s.begin(), s.end(), '"', '\'');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

} // namespace

void WriteIterationHeader(std::ostream &out)
{
  out << "iter,psnr,psnr_x,psnr_bpfa,gamma_eps,tv_value,primal_residual,atoms_in_use,log_joint,kspace_error,"
         "seconds\n";
}

void WriteIterationRow(std::ostream &out, IterationRecord const &r)
{
  out << r.iter << ',' << Num(r.psnr) << ',' << Num(r.psnr_x) << ',' << Num(r.psnr_bpfa) << ',' << Num(r.gamma_eps)
      << ',' << Num(r.tv_value) << ',' << Num(r.primal_residual) << ',' << r.atoms_in_use << ',' << Num(r.log_joint)
      << ',' << Num(r.kspace_error) << ',' << Num(r.seconds) << '\n';
}

void WriteIterationLog(IterationLog const &log, fs::path const &path)
{
  auto out = OpenCsv(path);
  WriteIterationHeader(out);
  for (auto const &r : log) {
    WriteIterationRow(out, r);
  }
}

void WriteCellsCsv(std::vector<CellResult> const &cells, fs::path const &path)
{
  auto out = OpenCsv(path);
  out << "image,mask,rate,achieved_rate,variant,replicate,seed,psnr,psnr_x,psnr_bpfa,atoms_above_0.01,noise_std,"
         "primal_residual_first,primal_residual_last,kspace_error,status,seconds\n";
  for (auto const &c : cells) {
    out << c.image << ',' << ToString(c.mask) << ',' << Num(c.rate) << ',' << Num(c.achieved_rate) << ','
        << ToString(c.variant) << ',' << c.replicate << ',' << c.seed << ',' << Num(c.psnr) << ',' << Num(c.psnr_x)
        << ',' << Num(c.psnr_bpfa) << ',' << c.atoms_above << ',' << Num(c.noise_std) << ',' << Num(c.primal_first)
        << ',' << Num(c.primal_last) << ',' << Num(c.kspace_error) << ",\"" << Quote(c.status) << "\"," << Num(c.seconds)
        << '\n';
  }
}

Index AtomsAbove(BpfaDiagnostics const &diag, double threshold)
{
  return std::count_if(diag.pi.begin(), diag.pi.end(), [&](double p) { return p > threshold; });
}

std::vector<double> CumulativePi(std::vector<double> const &sorted_pi)
{
  std::vector<double> out(sorted_pi.size());
  std::partial_sum(sorted_pi.begin(), sorted_pi.end(), out.begin());
  return out;
}

std::vector<fs::path> dict_report(BpfaDiagnostics const &diag, fs::path const &dir)
{
  fs::create_directories(dir);
  std::vector<fs::path> files;

  auto const sorted_path = dir / "pi_sorted.csv";
  {
    auto out = OpenCsv(sorted_path);
    out << "rank,pi\n";
    for (size_t k = 0; k < diag.sorted_pi.size(); k++) {
      out << k + 1 << ',' << Num(diag.sorted_pi[k]) << '\n';
    }
  }
  files.push_back(sorted_path);

  // The last value reads off the expected number of atoms per patch.
  auto const cum_path = dir / "pi_cumulative.csv";
  {
    auto out = OpenCsv(cum_path);
    out << "rank,cumulative_pi\n";
    auto const cum = CumulativePi(diag.sorted_pi);
    for (size_t k = 0; k < cum.size(); k++) {
      out << k + 1 << ',' << Num(cum[k]) << '\n';
    }
  }
  files.push_back(cum_path);

  auto const hist_path = dir / "atoms_per_patch.csv";
  {
    auto out = OpenCsv(hist_path);
    out << "atoms,patches\n";
    for (size_t m = 0; m < diag.atoms_per_patch.size(); m++) {
      out << m << ',' << diag.atoms_per_patch[m] << '\n';
    }
  }
  files.push_back(hist_path);

  Index const P = diag.patch_dim;
  auto const K = static_cast<Index>(diag.pi.size());
  if (P > 0 && K > 0 && static_cast<Index>(diag.atoms.size()) == P * K) {
    auto const ps = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(P))));
    auto const cols = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(K))));
    Index const rows = (K + cols - 1) / cols;
    Index const cell = ps + 1;
    Index const width = cols * cell + 1;
    Index const height = rows * cell + 1;
    std::vector<unsigned char> bytes(static_cast<size_t>(width * height), 0);
    std::vector<Index> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return diag.pi[a] > diag.pi[b]; });
    bool const complex = std::any_of(diag.atoms.begin(), diag.atoms.end(), [](Cx v) { return v.imag() != 0.0; });
    for (Index t = 0; t < K; t++) {
      Index const k = order[t];
      std::vector<double> vals(P);
      for (Index p = 0; p < P; p++) {
        auto const v = diag.atoms[k * P + p];
        vals[p] = complex ? std::abs(v) : v.real();
      }
      auto const [lo, hi] = std::minmax_element(vals.begin(), vals.end());
      double const span = *hi - *lo;
      Index const r0 = (t / cols) * cell + 1;
      Index const c0 = (t % cols) * cell + 1;
      for (Index p = 0; p < P; p++) {
        double const level = span > 0 ? (vals[p] - *lo) / span : 0.5;
        bytes[(r0 + p / ps) * width + c0 + p % ps] = static_cast<unsigned char>(std::lround(level * 255.0));
      }
    }
    auto const atlas = dir / "dictionary.png";
    SaveGrayPng(bytes, width, height, atlas);
    files.push_back(atlas);
  }
  return files;
}

void SaveDiagnostics(BpfaDiagnostics const &diag, fs::path const &path)
{
  std::vector<double> re(diag.atoms.size()), im(diag.atoms.size());
  for (size_t j = 0; j < diag.atoms.size(); j++) {
    re[j] = diag.atoms[j].real();
    im[j] = diag.atoms[j].imag();
  }
  json j{{"noise_std", diag.noise_std},
         {"pi", diag.pi},
         {"sorted_pi", diag.sorted_pi},
         {"atoms_per_patch", diag.atoms_per_patch},
         {"atoms_in_use", diag.atoms_in_use},
         {"patch_dim", diag.patch_dim},
         {"atoms_re", re},
         {"atoms_im", im}};
  std::ofstream out(path);
  if (!out) { throw IoError("cannot write '" + path.string() + "'"); }
  out << j.dump() << "\n";
}

BpfaDiagnostics LoadDiagnostics(fs::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw IoError("cannot open '" + path.string() + "'"); }
  BpfaDiagnostics d;
  try {
    auto const j = json::parse(in);
    d.noise_std = j.at("noise_std").get<double>();
    d.pi = j.at("pi").get<std::vector<double>>();
    d.sorted_pi = j.at("sorted_pi").get<std::vector<double>>();
    d.atoms_per_patch = j.at("atoms_per_patch").get<std::vector<Index>>();
    d.atoms_in_use = j.at("atoms_in_use").get<Index>();
    d.patch_dim = j.at("patch_dim").get<Index>();
    auto const re = j.at("atoms_re").get<std::vector<double>>();
    auto const im = j.at("atoms_im").get<std::vector<double>>();
    if (re.size() != im.size()) { throw IoError("atom arrays differ in length"); }
    d.atoms.resize(re.size());
    for (size_t k = 0; k < re.size(); k++) {
      d.atoms[k] = Cx(re[k], im[k]);
    }
  } catch (json::exception const &e) {
    throw IoError("bad diagnostics file '" + path.string() + "': " + e.what());
  }
  return d;
}

} // namespace bpmri
