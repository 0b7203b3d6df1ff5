#include "bpmri/harness.hpp"

#include "bpmri/error.hpp"
#include "bpmri/metrics.hpp"
#include "bpmri/phantom.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

namespace bpmri {

using json = nlohmann::json;

char const *ToString(Variant v)
{
  switch (v) {
  case Variant::BpfaTv: return "bpfa+tv";
  case Variant::Bpfa: return "bpfa";
  case Variant::TvOnly: return "tv";
  case Variant::ZeroFill: return "zero-fill";
  }
  return "?";
}

Variant ParseVariant(std::string_view text)
{
  if (text == "bpfa+tv") { return Variant::BpfaTv; }
  if (text == "bpfa") { return Variant::Bpfa; }
  if (text == "tv") { return Variant::TvOnly; }
  if (text == "zero-fill") { return Variant::ZeroFill; }
  throw InvalidConfig("unknown variant '" + std::string(text) + "' (bpfa+tv, bpfa, tv, zero-fill)");
}

ReconConfig ConfigFor(Variant v, ReconConfig base)
{
  switch (v) {
  case Variant::BpfaTv: base.use_dictionary = true; break;
  case Variant::Bpfa:
    base.use_dictionary = true;
    base.lambda_g = 0.0;
    break;
  case Variant::TvOnly:
    base.use_dictionary = false;
    if (!base.tvEnabled()) { throw InvalidConfig("tv variant needs lambda_g > 0"); }
    break;
  case Variant::ZeroFill: break;
  }
  return base;
}

void ExperimentPlan::validate() const
{
  if (images.empty()) { throw InvalidConfig("plan needs at least one image"); }
  if (rates.empty()) { throw InvalidConfig("plan needs at least one rate"); }
  if (masks.empty()) { throw InvalidConfig("plan needs at least one mask kind"); }
  if (variants.empty()) { throw InvalidConfig("plan needs at least one variant"); }
  for (double r : rates) {
    if (!(r > 0.0 && r <= 1.0)) { throw InvalidConfig(fmt::format("rate {} outside (0,1]", r)); }
  }
  if (replicates < 1) { throw InvalidConfig("replicates must be >= 1"); }
  if (iterations < 1) { throw InvalidConfig("iterations must be >= 1"); }
  if (side < 32) { throw InvalidConfig("phantom side must be >= 32"); }
  if (!(noise_sigma >= 0.0)) { throw InvalidConfig("noise_sigma must be >= 0"); }
  auto cfg = recon;
  cfg.iterations = iterations;
  cfg.validate();
}

void to_json(json &j, ExperimentPlan const &p)
{
  std::vector<std::string> masks, variants;
  for (auto m : p.masks) {
    masks.emplace_back(ToString(m));
  }
  for (auto v : p.variants) {
    variants.emplace_back(ToString(v));
  }
  j = json{{"images", p.images},
           {"side", p.side},
           {"masks", masks},
           {"rates", p.rates},
           {"variants", variants},
           {"replicates", p.replicates},
           {"seed", p.seed},
           {"iterations", p.iterations},
           {"noise_sigma", p.noise_sigma},
           {"cartesian",
            {{"center_fraction", p.cartesian.center_fraction}, {"density_power", p.cartesian.density_power}}},
           {"recon", p.recon},
           {"output_dir", p.output_dir.string()},
           {"artifacts", p.artifacts}};
}

void from_json(json const &j, ExperimentPlan &p)
{
  ExperimentPlan const d;
  p.images = j.value("images", d.images);
  p.side = j.value("side", d.side);
  if (j.contains("masks")) {
    p.masks.clear();
    for (auto const &m : j.at("masks")) {
      p.masks.push_back(ParseMaskKind(m.get<std::string>()));
    }
  }
  p.rates = j.value("rates", d.rates);
  if (j.contains("variants")) {
    p.variants.clear();
    for (auto const &v : j.at("variants")) {
      p.variants.push_back(ParseVariant(v.get<std::string>()));
    }
  }
  p.replicates = j.value("replicates", d.replicates);
  p.seed = j.value("seed", d.seed);
  p.iterations = j.value("iterations", d.iterations);
  p.noise_sigma = j.value("noise_sigma", d.noise_sigma);
  if (j.contains("cartesian")) {
    auto const &c = j.at("cartesian");
    p.cartesian.center_fraction = c.value("center_fraction", d.cartesian.center_fraction);
    p.cartesian.density_power = c.value("density_power", d.cartesian.density_power);
  }
  if (j.contains("recon")) { p.recon = j.at("recon").get<ReconConfig>(); }
  p.output_dir = j.value("output_dir", d.output_dir.string());
  p.artifacts = j.value("artifacts", d.artifacts);
}

ExperimentPlan LoadPlan(fs::path const &path)
{
  std::ifstream in(path);
  if (!in) { throw IoError("cannot open plan '" + path.string() + "'"); }
  try {
    auto plan = json::parse(in).get<ExperimentPlan>();
    plan.validate();
    return plan;
  } catch (json::exception const &e) {
    throw InvalidConfig("bad plan '" + path.string() + "': " + e.what());
  }
}

ImageGrid box_downsample(ImageGrid const &img, Index side)
{
  Index const n = img.side();
  if (side <= 0 || n % side != 0) {
    throw DimensionMismatch(fmt::format("cannot box-average a {0}x{0} image to {1}x{1}", n, side));
  }
  Index const f = n / side;
  ImageGrid out(side, img.mode());
  for (Index r = 0; r < side; r++) {
    for (Index c = 0; c < side; c++) {
      Cx sum{0};
      for (Index a = 0; a < f; a++) {
        for (Index b = 0; b < f; b++) {
          sum += img(r * f + a, c * f + b);
        }
      }
      out(r, c) = sum / static_cast<double>(f * f);
    }
  }
  return out;
}

ImageGrid LoadSource(std::string const &source, Index side)
{
  constexpr std::string_view prefix = "phantom:";
  if (source.starts_with(prefix)) { return make_phantom(side, ParsePhantomKind(source.substr(prefix.size()))); }
  auto img = LoadImage(source);
  if (side == 0 || side == img.side()) { return img; }
  return box_downsample(img, side);
}

namespace {

std::string SourceName(std::string const &source)
{
  if (source.starts_with("phantom:")) { return source.substr(8); }
  return fs::path(source).stem().string();
}

} // namespace

CellResult RunCell(ExperimentPlan const &plan,
                   std::string const &source,
                   ImageGrid const &truth,
                   MaskKind mask_kind,
                   double rate,
                   Variant variant,
                   Index replicate,
                   fs::path const &dir,
                   ReconResult *keep)
{
  auto const start = std::chrono::steady_clock::now();
  CellResult cell;
  cell.image = SourceName(source);
  cell.mask = mask_kind;
  cell.rate = rate;
  cell.variant = variant;
  cell.replicate = replicate;
  cell.seed = plan.seed + static_cast<std::uint64_t>(replicate);
  cell.directory = dir;

  auto const n = truth.side();
  auto const mask = MakeMask(mask_kind, n, rate, cell.seed, plan.cartesian);
  cell.achieved_rate = mask.rate;
  auto measured = truth;
  measured.setMode(plan.recon.mode);
  if (plan.noise_sigma > 0) { measured = add_noise(measured, plan.noise_sigma, cell.seed); }
  auto const y = apply_mask(measured, mask);
  if (!dir.empty()) { fs::create_directories(dir); }

  ReconResult rr;
  if (variant == Variant::ZeroFill) {
    rr.x = zero_fill(y, plan.recon.mode);
    rr.x_bpfa = rr.x;
    rr.image = rr.x;
    cell.psnr = cell.psnr_x = cell.psnr_bpfa = psnr(rr.image, truth);
    cell.primal_first = cell.primal_last = std::nan("");
  } else {
    auto cfg = ConfigFor(variant, plan.recon);
    cfg.iterations = plan.iterations;
    cfg.seed = cell.seed;
    rr = reconstruct(y, cfg, &truth);
    auto const &last = rr.log.back();
    cell.psnr = last.psnr;
    cell.psnr_x = last.psnr_x;
    cell.psnr_bpfa = last.psnr_bpfa;
    cell.primal_first = rr.log.front().primal_residual;
    cell.primal_last = last.primal_residual;
    for (auto const &r : rr.log) {
      cell.kspace_error = std::max(cell.kspace_error, r.kspace_error);
    }
    if (rr.diagnostics) {
      cell.atoms_above = AtomsAbove(*rr.diagnostics);
      cell.noise_std = rr.diagnostics->noise_std;
    }
    if (!dir.empty()) {
      WriteIterationLog(rr.log, dir / "iterations.csv");
      if (rr.diagnostics) {
        dict_report(*rr.diagnostics, dir);
        SaveDiagnostics(*rr.diagnostics, dir / "diagnostics.json");
      }
    }
  }
  if (!dir.empty()) {
    SavePng(rr.image, dir / "recon.png");
    SaveComplexImage(rr.image, dir / "recon.bin", "reconstruction");
  }
  cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (keep) { *keep = std::move(rr); }
  return cell;
}

namespace {

std::vector<fs::path> ListFiles(fs::path const &dir)
{
  std::vector<fs::path> out;
  if (!fs::exists(dir)) { return out; }
  for (auto const &e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) { out.push_back(e.path()); }
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path WriteSummary(std::vector<CellResult> const &cells, MaskKind mask, fs::path const &dir)
{
  struct Acc
  {
    Index n = 0;
    double sum = 0, sq = 0, atoms = 0;
  };
  std::map<std::pair<double, int>, Acc> acc;
  for (auto const &c : cells) {
    if (c.mask != mask || c.status != "ok") { continue; }
    auto &a = acc[{c.rate, static_cast<int>(c.variant)}];
    a.n++;
    a.sum += c.psnr;
    a.sq += c.psnr * c.psnr;
    a.atoms += static_cast<double>(c.atoms_above);
  }
  auto const path = dir / fmt::format("summary_{}.csv", ToString(mask));
  std::ofstream out(path);
  if (!out) { throw IoError("cannot write '" + path.string() + "'"); }
  out << "rate,variant,cells,mean_psnr,sd_psnr,mean_atoms_above_0.01\n";
  for (auto const &[key, a] : acc) {
    double const mean = a.sum / static_cast<double>(a.n);
    double const var = a.n > 1 ? std::max(0.0, (a.sq - a.n * mean * mean) / static_cast<double>(a.n - 1)) : 0.0;
    out << fmt::format("{},{},{},{},{},{}\n", key.first, ToString(static_cast<Variant>(key.second)), a.n, mean,
                       std::sqrt(var), a.atoms / static_cast<double>(a.n));
  }
  return path;
}

} // namespace

SweepReport run_sweep(ExperimentPlan const &plan)
{
  plan.validate();
  SweepReport report;
  fs::create_directories(plan.output_dir);
  {
    std::ofstream out(plan.output_dir / "plan.json");
    out << json(plan).dump(2) << "\n";
  }
  for (auto const &source : plan.images) {
    ImageGrid truth;
    std::string load_error;
    try {
      truth = LoadSource(source, plan.side);
    } catch (std::exception const &e) {
      load_error = e.what();
    }
    for (auto mask : plan.masks) {
      for (double rate : plan.rates) {
        for (auto variant : plan.variants) {
          for (Index r = 0; r < plan.replicates; r++) {
            fs::path dir;
            if (plan.artifacts) {
              dir = plan.output_dir / "cells" /
                    fmt::format("{}_{}_{:.0f}_{}_r{}", SourceName(source), ToString(mask), rate * 100,
                                ToString(variant), r);
            }
            CellResult cell;
            if (!load_error.empty()) {
              cell.image = SourceName(source);
              cell.mask = mask;
              cell.rate = rate;
              cell.variant = variant;
              cell.replicate = r;
              cell.seed = plan.seed + static_cast<std::uint64_t>(r);
              cell.status = "error: " + load_error;
            } else {
              try {
                cell = RunCell(plan, source, truth, mask, rate, variant, r, dir);
              } catch (std::exception const &e) {
                cell.image = SourceName(source);
                cell.mask = mask;
                cell.rate = rate;
                cell.variant = variant;
                cell.replicate = r;
                cell.seed = plan.seed + static_cast<std::uint64_t>(r);
                cell.status = std::string("error: ") + e.what();
              }
            }
            report.cells.push_back(std::move(cell));
          }
        }
      }
    }
  }
  WriteCellsCsv(report.cells, plan.output_dir / "cells.csv");
  for (auto mask : plan.masks) {
    WriteSummary(report.cells, mask, plan.output_dir);
  }

  report.files = ListFiles(plan.output_dir);
  json index;
  index["cells"] = report.cells.size();
  index["failed"] = std::count_if(report.cells.begin(), report.cells.end(), [](auto const &c) { return c.status != "ok"; });
  std::vector<std::string> rel;
  for (auto const &f : report.files) {
    rel.push_back(fs::relative(f, plan.output_dir).generic_string());
  }
  rel.push_back("index.json");
  index["files"] = rel;
  std::ofstream out(plan.output_dir / "index.json");
  if (!out) { throw IoError("cannot write index.json"); }
  out << index.dump(2) << "\n";
  report.files.push_back(plan.output_dir / "index.json");
  return report;
}

} // namespace bpmri
