#pragma once

#include "bpfa.hpp"
#include "io.hpp"
#include "recon.hpp"
#include "sampling.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace bpmri {

enum class Variant
{
  BpfaTv,   // dictionary + TV
  Bpfa,     // lambda_g = 0
  TvOnly,   // dictionary term weight 0
  ZeroFill
};

char const *ToString(Variant v);
Variant ParseVariant(std::string_view text);

// Apply a variant's switches to a base configuration.
ReconConfig ConfigFor(Variant v, ReconConfig base);

struct ExperimentPlan
{
  std::vector<std::string> images; // file paths, or "phantom:ge-like" / "phantom:shepp-like"
  Index side = 128;                // side of synthetic phantoms
  std::vector<MaskKind> masks{MaskKind::Cartesian, MaskKind::Radial};
  std::vector<double> rates{0.1, 0.2, 0.3};
  std::vector<Variant> variants{Variant::BpfaTv, Variant::Bpfa, Variant::TvOnly, Variant::ZeroFill};
  Index replicates = 3;
  std::uint64_t seed = 0; // replicate r uses seed + r for its mask, noise and sampler
  Index iterations = 200;
  double noise_sigma = 0.0; // image-domain noise added to the truth before sampling
  CartesianOptions cartesian;
  ReconConfig recon;
  fs::path output_dir = "sweep";
  bool artifacts = true; // per-cell images, logs and dictionary reports

  void validate() const;
};

void to_json(nlohmann::json &j, ExperimentPlan const &plan);
void from_json(nlohmann::json const &j, ExperimentPlan &plan);
ExperimentPlan LoadPlan(fs::path const &path);

struct CellResult
{
  std::string image;
  MaskKind mask = MaskKind::Full;
  double rate = 0;
  double achieved_rate = 0;
  Variant variant = Variant::ZeroFill;
  Index replicate = 0;
  std::uint64_t seed = 0;
  double psnr = 0;
  double psnr_x = 0;
  double psnr_bpfa = 0;
  Index atoms_above = 0; // atoms with pi_k > 0.01
  double noise_std = 0;
  double primal_first = 0;
  double primal_last = 0;
  double kspace_error = 0; // worst over all iterations
  double seconds = 0;
  std::string status = "ok";
  fs::path directory;
};

struct SweepReport
{
  std::vector<CellResult> cells;
  std::vector<fs::path> files;
};

// Mean over f x f blocks, f = img.side() / side (must divide exactly).
ImageGrid box_downsample(ImageGrid const &img, Index side);

// "phantom:<kind>" is generated at `side`; files are box-averaged down to `side` (0 keeps the file's size).
ImageGrid LoadSource(std::string const &source, Index side);

// One (image, mask, rate, variant, replicate) cell. Artifacts go to `dir` when non-empty.
CellResult RunCell(ExperimentPlan const &plan,
                   std::string const &source,
                   ImageGrid const &truth,
                   MaskKind mask,
                   double rate,
                   Variant variant,
                   Index replicate,
                   fs::path const &dir,
                   ReconResult *keep = nullptr);

/*
 * Runs every cell of the plan. Writes cells.csv (one row per cell),
 * summary_<mask>.csv (mean PSNR per rate and variant) and index.json listing
 * every emitted file. Failing cells are recorded and the sweep continues.
 */
SweepReport run_sweep(ExperimentPlan const &plan);

// CSV helpers shared with the command-line tool.
void WriteIterationHeader(std::ostream &out);
void WriteIterationRow(std::ostream &out, IterationRecord const &rec);
void WriteIterationLog(IterationLog const &log, fs::path const &path);
void WriteCellsCsv(std::vector<CellResult> const &cells, fs::path const &path);

Index AtomsAbove(BpfaDiagnostics const &diag, double threshold = 0.01);
std::vector<double> CumulativePi(std::vector<double> const &sorted_pi);

/*
 * pi_sorted.csv, pi_cumulative.csv, atoms_per_patch.csv and dictionary.png
 * (atoms tiled in decreasing pi order, each scaled to its own range).
 */
std::vector<fs::path> dict_report(BpfaDiagnostics const &diag, fs::path const &dir);
void SaveDiagnostics(BpfaDiagnostics const &diag, fs::path const &path);
BpfaDiagnostics LoadDiagnostics(fs::path const &path);

} // namespace bpmri
