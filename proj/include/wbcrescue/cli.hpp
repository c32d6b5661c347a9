#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>

#include "core.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "fileio.hpp"
#include "image.hpp"
#include "ingest.hpp"
#include "metrics.hpp"
#include "morphology.hpp"
#include "noise.hpp"
#include "parallel.hpp"
#include "rescue.hpp"

namespace wbcr::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kValidation = 1, kIo = 2 };

struct Globals {
  bool verbose = false;
  unsigned threads = 0;
  std::ostream* log = &std::cerr;

  void info(const std::string& msg) const {
    if (verbose) *log << "wbcrescue: " << msg << "\n";
  }
};

inline LabelSet labels_from(const std::string& path) {
  return path.empty() ? default_label_set() : load_label_set(path);
}

struct RescueArgs {
  std::string swin, med, counts, images, masks, gate, config, out, trace, labels;
  bool skip_missing = false;
};

inline void cmd_rescue(const RescueArgs& a, const Globals& g) {
  const LabelSet labels = labels_from(a.labels);
  RescueConfig config = a.config.empty() ? RescueConfig{} : parse_rescue_config(a.config);
  try {
    validate_config(config, labels);
  } catch (const ValidationError& e) {
    throw ValidationError((a.config.empty() ? std::string("default config") : a.config) + ": " +
                          e.what());
  }
  const ProbTable swin = parse_prob_table(a.swin, labels);
  const ProbTable med = parse_prob_table(a.med, labels);
  const ClassCounts counts = parse_class_counts(a.counts, labels);
  BoostFactors boosts = compute_boost_factors(counts, config, labels);
  std::optional<GaussianGate> gate;
  if (!a.gate.empty()) gate = load_gate(a.gate);
  const RescueEngine engine(labels, config, std::move(boosts), gate);

  std::map<std::string, fs::path> images, masks;
  if (!a.images.empty()) images = fileio::list_netpbm(a.images);
  if (!a.masks.empty()) masks = fileio::list_netpbm(a.masks);
  SampleSource source = [&](const std::string& id) -> std::optional<CellSample> {
    auto img = images.find(id);
    auto msk = masks.find(id);
    if (img == images.end() || msk == masks.end()) return std::nullopt;
    return load_cell_sample(img->second, msk->second, id);
  };

  const auto traces = rescue_batch(swin, med, source, engine, {g.threads, a.skip_missing});
  std::size_t rescued = 0, candidates = 0;
  for (const auto& t : traces) {
    candidates += t.candidate.has_value();
    rescued += t.phase == Phase::Rescued;
    if (!t.note.empty()) g.info(t.image_id + ": " + t.note);
  }
  g.info("rescue: " + std::to_string(traces.size()) + " images, " + std::to_string(candidates) +
         " candidates, " + std::to_string(rescued) + " rescued");

  fileio::AtomicOutputs outputs;
  outputs.add(a.out, serialize_predictions(traces, labels));
  if (!a.trace.empty()) outputs.add(a.trace, serialize_traces(traces, labels));
  outputs.commit();
}

struct EnsembleArgs {
  std::vector<std::string> inputs;
  std::string out, labels;
};

inline void cmd_ensemble(const EnsembleArgs& a, const Globals& g) {
  const LabelSet labels = labels_from(a.labels);
  std::vector<ProbTable> tables(a.inputs.size());
  parallel_for(a.inputs.size(), g.threads,
               [&](std::size_t i) { tables[i] = parse_prob_table(a.inputs[i], labels); });
  const ProbTable mean = average_prob_tables(tables);
  g.info("ensemble: averaged " + std::to_string(tables.size()) + " tables over " +
         std::to_string(mean.size()) + " images");
  fileio::write_atomic(a.out, serialize_prob_table(mean));
}

// Feature rows restricted to images whose ground-truth label is in `classes`
// (all rows when no truth file is given).
inline std::vector<FeatureRow> select_features(const std::string& features_path,
                                               const std::string& truth_path,
                                               const std::vector<std::string>& classes,
                                               const LabelSet& labels) {
  auto rows = parse_features(features_path);
  if (truth_path.empty()) return rows;
  std::vector<char> wanted(labels.size(), 0);
  for (const auto& c : classes) wanted[labels.index_of(c)] = 1;
  std::unordered_map<std::string, ClassId> truth;
  for (const auto& r : parse_label_csv(truth_path, labels)) truth.emplace(r.image_id, r.label);
  std::vector<FeatureRow> out;
  for (auto& r : rows) {
    auto it = truth.find(r.image_id);
    if (it != truth.end() && wanted[it->second]) out.push_back(std::move(r));
  }
  return out;
}

struct FitArgs {
  std::string features, truth, out, labels;
  std::string group = std::string(kPlasmaCell);
  double ridge_scale = 1e-6;
};

inline void cmd_fit_pc_model(const FitArgs& a, const Globals& g) {
  const LabelSet labels = labels_from(a.labels);
  const auto rows = select_features(a.features, a.truth, {a.group}, labels);
  std::vector<Vec3> samples;
  for (const auto& r : rows) {
    if (r.morph) samples.push_back(r.morph->as_array());
  }
  const GaussianGate gate = fit_gaussian_gate(samples, a.ridge_scale);
  g.info("fit-pc-model: fitted gate '" + a.group + "' on " + std::to_string(samples.size()) +
         " samples");
  fileio::write_atomic(a.out, serialize_gate(gate));
}

struct CalibrateArgs {
  std::string features, truth, out, labels;
  std::vector<std::string> reference{"LY"};
  double k = 2.0;
};

inline void cmd_calibrate_spikiness(const CalibrateArgs& a, const Globals& g) {
  const LabelSet labels = labels_from(a.labels);
  const auto rows = select_features(a.features, a.truth, a.reference, labels);
  std::vector<double> scores;
  for (const auto& r : rows) {
    if (r.spikiness) scores.push_back(*r.spikiness);
  }
  const double tau_s = calibrate_spikiness_threshold(scores, a.k);
  g.info("calibrate-spikiness: " + std::to_string(scores.size()) + " reference scores");
  fileio::write_atomic(a.out, "tau_s = " + text::fmt_exact(tau_s) + "\n");
}

struct FeaturesArgs {
  std::string images, masks, out;
};

inline void cmd_features(const FeaturesArgs& a, const Globals& g) {
  const auto images = fileio::list_netpbm(a.images);
  const auto masks = fileio::list_netpbm(a.masks);
  std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> jobs;
  for (const auto& [id, mask_path] : masks) {
    auto img = images.find(id);
    if (img == images.end()) {
      throw ValidationError("no image for mask '" + mask_path.string() + "'");
    }
    jobs.push_back({id, {img->second, mask_path}});
  }
  std::vector<FeatureRow> rows(jobs.size());
  std::vector<std::string> notes(jobs.size());
  parallel_for(jobs.size(), g.threads, [&](std::size_t i) {
    const auto& [id, paths] = jobs[i];
    const CellFeatures f = measure_cell(load_cell_sample(paths.first, paths.second, id));
    rows[i] = {id, f.morph, f.spikiness};
    notes[i] = f.error;
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!notes[i].empty()) g.info(rows[i].image_id + ": " + notes[i]);
  }
  g.info("features: " + std::to_string(rows.size()) + " cells");
  fileio::write_atomic(a.out, serialize_features(rows));
}

struct NoiseScoreArgs {
  std::string images, out;
  std::optional<double> threshold;
};

inline void cmd_noise_score(const NoiseScoreArgs& a, const Globals& g) {
  if (a.threshold && !(*a.threshold >= 0.0)) throw ValidationError("--threshold must be >= 0");
  const auto images = fileio::list_netpbm(a.images);
  std::vector<NoiseReport> reports(images.size());
  std::vector<fs::path> paths;
  for (const auto& [id, path] : images) {
    reports[paths.size()].image_id = id;
    paths.push_back(path);
  }
  parallel_for(paths.size(), g.threads, [&](std::size_t i) {
    reports[i].residual = noise_score(netpbm::to_rgb(netpbm::read(paths[i].string())));
  });
  std::string out = a.threshold ? "image_id,residual,is_noisy\n" : "image_id,residual\n";
  if (a.threshold) {
    const auto split = partition_by_noise(reports, *a.threshold);
    g.info("noise-score: " + std::to_string(split.noisy.size()) + " noisy, " +
           std::to_string(split.clean.size()) + " clean");
  }
  for (const auto& r : reports) {
    out += r.image_id + "," + text::fmt_exact(r.residual);
    if (a.threshold) out += r.is_noisy ? ",1" : ",0";
    out += "\n";
  }
  fileio::write_atomic(a.out, out);
}

struct InjectArgs {
  std::string images, out;
  double density = 0.0;
  double salt_ratio = 0.5;
  std::uint64_t seed = 0;
};

inline void cmd_inject_noise(const InjectArgs& a, const Globals& g) {
  if (!(a.density >= 0.0 && a.density <= 1.0)) throw ValidationError("--density must lie in [0,1]");
  if (!(a.salt_ratio >= 0.0 && a.salt_ratio <= 1.0)) {
    throw ValidationError("--salt-ratio must lie in [0,1]");
  }
  const auto images = fileio::list_netpbm(a.images);
  std::error_code ec;
  if (fs::exists(a.out, ec) && fs::equivalent(a.out, a.images, ec)) {
    throw ValidationError("--out must differ from --images");
  }
  std::vector<std::pair<std::string, fs::path>> jobs(images.begin(), images.end());
  std::vector<std::string> encoded(jobs.size());
  std::vector<std::size_t> corrupted(jobs.size());
  parallel_for(jobs.size(), g.threads, [&](std::size_t i) {
    const auto raster = netpbm::read(jobs[i].second.string());
    auto noisy = inject_salt_pepper(netpbm::to_rgb(raster), a.density, a.salt_ratio,
                                    per_image_seed(a.seed, jobs[i].first));
    encoded[i] = raster.channels == 1 ? netpbm::encode_pgm(noisy.image)
                                      : netpbm::encode_ppm(noisy.image);
    corrupted[i] = noisy.corrupted;
  });
  std::size_t total = 0;
  for (auto c : corrupted) total += c;
  g.info("inject-noise: " + std::to_string(jobs.size()) + " images, " + std::to_string(total) +
         " pixels corrupted");

  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create '" + a.out + "': " + ec.message());
  fileio::AtomicOutputs outputs;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    outputs.add(fs::path(a.out) / jobs[i].second.filename(), std::move(encoded[i]));
  }
  outputs.commit();
}

struct EvaluateArgs {
  std::string pred, truth, labels, out, confusion;
};

inline void cmd_evaluate(const EvaluateArgs& a, const Globals& g) {
  const LabelSet labels = labels_from(a.labels);
  const Evaluation e = evaluate(a.pred, a.truth, labels);
  g.info("evaluate: macro_f1 " + text::fmt_fixed(e.report.macro_f1, 6));
  fileio::AtomicOutputs outputs;
  outputs.add(a.out, format_report(e.report, labels, e.confusion.total()));
  if (!a.confusion.empty()) outputs.add(a.confusion, serialize_confusion(e.confusion, labels));
  outputs.commit();
}

/// Entry point of the `wbcrescue` tool. `args` excludes the program name.
/// Returns 0 on success, 1 on validation/configuration errors, 2 on I/O errors.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Suppress-and-rescue refinement for long-tail white blood cell classification",
               "wbcrescue"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  g.log = &err;
  app.add_flag("--verbose", g.verbose, "Log progress to standard error");
  app.add_option("--threads", g.threads, "Worker threads (0 = one per core)");

  RescueArgs ra;
  auto* rescue = app.add_subcommand("rescue", "Apply boosting, verification and morphology");
  rescue->add_option("--swin", ra.swin, "Base classifier probabilities (CSV)")->required();
  rescue->add_option("--med", ra.med, "Verification branch probabilities (CSV)")->required();
  rescue->add_option("--counts", ra.counts, "Training class counts (CSV)")->required();
  rescue->add_option("--images", ra.images, "Directory of cell images (netpbm)");
  rescue->add_option("--masks", ra.masks, "Directory of cell masks (P5)");
  rescue->add_option("--gate", ra.gate, "Plasma-cell gate model file");
  rescue->add_option("--config", ra.config, "key=value rescue configuration");
  rescue->add_option("--out", ra.out, "Predictions CSV (image_id,label)")->required();
  rescue->add_option("--trace", ra.trace, "Decision trace CSV");
  rescue->add_option("--labels", ra.labels, "Class catalog, one name per line");
  rescue->add_flag("--skip-missing", ra.skip_missing, "Deny rescue when a sample is missing");

  EnsembleArgs ea;
  auto* ensemble = app.add_subcommand("ensemble", "Average probability tables");
  ensemble->add_option("--inputs", ea.inputs, "Probability CSVs")->required()->expected(1, -1);
  ensemble->add_option("--out", ea.out, "Averaged probability CSV")->required();
  ensemble->add_option("--labels", ea.labels, "Class catalog, one name per line");

  FitArgs fa;
  auto* fit = app.add_subcommand("fit-pc-model", "Fit a Gaussian morphology gate");
  fit->add_option("--features", fa.features, "Feature CSV")->required();
  fit->add_option("--out", fa.out, "Gate model file")->required();
  fit->add_option("--truth", fa.truth, "Ground truth CSV used to select the group");
  fit->add_option("--class", fa.group, "Group to fit when --truth is given")->capture_default_str();
  fit->add_option("--ridge-scale", fa.ridge_scale, "Ridge as a fraction of mean variance")
      ->capture_default_str();
  fit->add_option("--labels", fa.labels, "Class catalog, one name per line");

  CalibrateArgs ca;
  auto* calib = app.add_subcommand("calibrate-spikiness", "Derive the spikiness threshold");
  calib->add_option("--features", ca.features, "Feature CSV")->required();
  calib->add_option("--out", ca.out, "Output file (tau_s = value)")->required();
  calib->add_option("--truth", ca.truth, "Ground truth CSV used to select the reference set");
  calib->add_option("--reference", ca.reference, "Reference classes when --truth is given")
      ->delimiter(',')
      ->capture_default_str();
  calib->add_option("--k", ca.k, "Standard deviations above the mean")->capture_default_str();
  calib->add_option("--labels", ca.labels, "Class catalog, one name per line");

  FeaturesArgs xa;
  auto* feats = app.add_subcommand("features", "Dump morphology features per cell");
  feats->add_option("--images", xa.images, "Directory of cell images")->required();
  feats->add_option("--masks", xa.masks, "Directory of cell masks")->required();
  feats->add_option("--out", xa.out, "Feature CSV")->required();

  NoiseScoreArgs na;
  auto* nscore = app.add_subcommand("noise-score", "Median-residual noise score per image");
  nscore->add_option("--images", na.images, "Directory of images")->required();
  nscore->add_option("--out", na.out, "CSV image_id,residual")->required();
  nscore->add_option("--threshold", na.threshold, "Add an is_noisy column (residual > t)");

  InjectArgs ia;
  auto* inject = app.add_subcommand("inject-noise", "Write salt-and-pepper corrupted copies");
  inject->add_option("--images", ia.images, "Directory of clean images")->required();
  inject->add_option("--out", ia.out, "Output directory")->required();
  inject->add_option("--density", ia.density, "Corruption probability per pixel")->required();
  inject->add_option("--salt-ratio", ia.salt_ratio, "Share of white impulses")
      ->capture_default_str();
  inject->add_option("--seed", ia.seed, "Generator seed")->required();

  EvaluateArgs va;
  auto* eval = app.add_subcommand("evaluate", "Macro metrics of predictions against truth");
  eval->add_option("--pred", va.pred, "Predictions CSV")->required();
  eval->add_option("--truth", va.truth, "Ground truth CSV")->required();
  eval->add_option("--labels", va.labels, "Class catalog, one name per line");
  eval->add_option("--out", va.out, "Report file")->required();
  eval->add_option("--confusion", va.confusion, "Confusion matrix CSV");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "wbcrescue: " << e.what() << "\n\n" << app.help();
    return kValidation;
  }

  try {
    if (*rescue) cmd_rescue(ra, g);
    else if (*ensemble) cmd_ensemble(ea, g);
    else if (*fit) cmd_fit_pc_model(fa, g);
    else if (*calib) cmd_calibrate_spikiness(ca, g);
    else if (*feats) cmd_features(xa, g);
    else if (*nscore) cmd_noise_score(na, g);
    else if (*inject) cmd_inject_noise(ia, g);
    else if (*eval) cmd_evaluate(va, g);
  } catch (const IoError& e) {
    err << "wbcrescue: I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ValidationError& e) {
    err << "wbcrescue: " << e.what() << "\n";
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    err << "wbcrescue: I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    err << "wbcrescue: " << e.what() << "\n";
    return kValidation;
  }
  return kOk;
}

}  // namespace wbcr::cli
