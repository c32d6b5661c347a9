#pragma once

// Synthetic end-to-end corpus: cell images and masks, two base-classifier
// probability tables, verification probabilities, training counts, ground
// truth and a calibration set for the plasma-cell gate and the spikiness
// threshold. Rare classes are morphologically distinctive but suppressed in
// the base probabilities; some common cells carry misleading rare scores.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "synthetic.hpp"
#include "temp_dir.hpp"
#include "wbcrescue/image.hpp"
#include "wbcrescue/ingest.hpp"

namespace wbcr::synth {

inline constexpr int kCellSize = 48;

struct DemoCell {
  RgbImage image;
  BinaryMask mask;
};

inline DemoCell prolymphocyte_cell(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> amp(3.5, 5.0), phase(0, 6.283185307179586);
  const auto mask = star_mask(kCellSize, kCellSize, 24, 24, 14, amp(rng), 8, phase(rng));
  return {cell_image(mask, 24, 24, 8, 50, 170), mask};
}

inline DemoCell plasma_cell(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> off(5.5, 7.5), nr(5.0, 7.0), angle(0, 6.283185307179586);
  std::uniform_int_distribution<int> cyto(195, 225);
  const auto mask = disc_mask(kCellSize, kCellSize, 24, 24, 15);
  const double a = angle(rng), d = off(rng);
  return {cell_image(mask, 24 + d * std::cos(a), 24 + d * std::sin(a), nr(rng), 40,
                     static_cast<std::uint8_t>(cyto(rng))),
          mask};
}

inline DemoCell round_cell(std::mt19937_64& rng, double nucleus_fraction) {
  std::uniform_real_distribution<double> r(12.0, 15.0);
  const double radius = r(rng);
  const auto mask = disc_mask(kCellSize, kCellSize, 24, 24, radius);
  return {cell_image(mask, 24, 24, radius * nucleus_fraction, 60, 180), mask};
}

struct DemoCorpus {
  std::vector<std::string> ids;
  std::vector<std::string> truth;
};

/// Generated layout under `root`:
///   images/, masks/              cells of the evaluation corpus
///   swin.csv, swin_tta.csv       base probabilities (two views)
///   med.csv, counts.csv, truth.csv
///   calib/images, calib/masks, calib/truth.csv  gate/threshold calibration cells
///   config.txt                   default thresholds
inline DemoCorpus write_demo_corpus(const testutil::TempDir& root, std::size_t n, std::uint64_t seed) {
  const LabelSet labels = default_label_set();
  const std::size_t k = labels.size();
  const ClassId ly = labels.index_of("LY"), ply = labels.index_of("PLY"), pc = labels.index_of("PC");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  auto jitter = [&](double scale) {
    ProbVector p(k);
    for (auto& v : p) v = scale * u(rng);
    return p;
  };
  auto normalized = [](ProbVector p) {
    double s = 0;
    for (double v : p) s += v;
    for (double& v : p) v /= s;
    return p;
  };

  DemoCorpus corpus;
  ProbTable swin(labels), swin_tta(labels), med(labels);
  std::string truth_csv = "image_id,label\n";
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cell%04zu", i);
    const std::string id = buf;
    const double roll = u(rng);
    ClassId truth;
    DemoCell cell;
    ProbVector ps = jitter(0.02), pm = jitter(0.02);
    if (roll < 0.08) {
      truth = ply;
      cell = prolymphocyte_cell(rng);
      ps[ly] = 0.45 + 0.1 * u(rng);
      ps[ply] = 0.10 + 0.04 * u(rng);
      pm[ply] = 0.6 + 0.3 * u(rng);
    } else if (roll < 0.16) {
      truth = pc;
      cell = plasma_cell(rng);
      const ClassId base = u(rng) < 0.5 ? ly : labels.index_of("SNE");
      ps[base] = 0.45 + 0.1 * u(rng);
      ps[pc] = 0.13 + 0.04 * u(rng);
      pm[pc] = 0.6 + 0.3 * u(rng);
    } else if (roll < 0.40) {
      truth = ly;
      cell = round_cell(rng, 0.65);
      ps[ly] = 0.5 + 0.1 * u(rng);
      pm[ly] = 0.5;
      if (u(rng) < 0.4) {  // misleading rare score
        const ClassId rare = u(rng) < 0.5 ? ply : pc;
        ps[rare] = rare == ply ? 0.12 : 0.15;
        pm[rare] = u(rng) < 0.5 ? 0.7 : 0.2;
      }
    } else {
      // SNE heavy, the rest spread over the remaining common classes.
      const std::vector<ClassId> common{labels.index_of("SNE"), labels.index_of("SNE"),
                                        labels.index_of("VLY"), 5, 6, 7, 8, 9, 10, 11, 12};
      truth = common[rng() % common.size()];
      cell = round_cell(rng, 0.5);
      ps[truth] = 0.7;
      pm[truth] = 0.6;
    }
    ps = normalized(ps);
    ProbVector pt = ps;
    for (double& v : pt) v *= 0.95 + 0.1 * u(rng);
    swin.add(id, ps);
    swin_tta.add(id, normalized(pt));
    med.add(id, normalized(pm));
    root.write("images/" + id + ".ppm", netpbm::encode_ppm(cell.image));
    root.write("masks/" + id + ".pgm", netpbm::encode_mask(cell.mask));
    truth_csv += id + "," + labels.name_at(truth) + "\n";
    corpus.ids.push_back(id);
    corpus.truth.push_back(labels.name_at(truth));
  }
  root.write("swin.csv", serialize_prob_table(swin));
  root.write("swin_tta.csv", serialize_prob_table(swin_tta));
  root.write("med.csv", serialize_prob_table(med));
  root.write("truth.csv", truth_csv);

  std::string counts = "class,count\n";
  for (const auto& name : labels.names()) {
    const int c = name == "SNE" ? 17354 : name == "PC" ? 90 : name == "PLY" ? 14 : 1000;
    counts += name + "," + std::to_string(c) + "\n";
  }
  root.write("counts.csv", counts);

  std::string calib_truth = "image_id,label\n";
  for (int i = 0; i < 80; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cal%03d", i);
    const bool is_pc = i % 2 == 0;
    const DemoCell cell = is_pc ? plasma_cell(rng) : round_cell(rng, 0.65);
    root.write(std::string("calib/images/") + buf + ".ppm", netpbm::encode_ppm(cell.image));
    root.write(std::string("calib/masks/") + buf + ".pgm", netpbm::encode_mask(cell.mask));
    calib_truth += std::string(buf) + (is_pc ? ",PC\n" : ",LY\n");
  }
  root.write("calib/truth.csv", calib_truth);
  root.write("config.txt", "# default thresholds\ntau = 0.5\ntau_s = 0.15\ntau_m = 3.0\n");
  return corpus;
}

}  // namespace wbcr::synth
