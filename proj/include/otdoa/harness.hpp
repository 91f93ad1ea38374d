#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otdoa/airlink.hpp"
#include "otdoa/emsic.hpp"
#include "otdoa/refine.hpp"
#include "otdoa/scenario.hpp"
#include "otdoa/types.hpp"

namespace otdoa::harness {

enum class Variant { kNoIc, kEmSic, kEmSicFoc, kEmSicFocUp };
enum class Channel { kAwgn, kEtu };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct ExperimentSpec {
  Variant variant = Variant::kEmSicFoc;
  Channel channel = Channel::kAwgn;
  std::vector<double> snr_grid_db;  // sweep mode
  double fixed_snr_db = 10.0;       // toa-error mode
  int trials = 500;
  int devices = 200;
  int drops = 3;
  std::uint64_t seed = 1;
  int iterations = 2;
  double eta1 = 0.8;
  double eta2 = 3.0;
  double gamma = 7.0;
  int num_lags = 64;
  int window = 20;  // W
  int threads = 1;
  bool three_cell_fo = false;  // residual FO in the 3-cell preset
  std::string out_path;
};

// Unified detector front-end: baseline or EM-SIC stage 1, optional stage 2.
struct DetectionOutcome {
  std::vector<emsic::CellReport> reports;
  std::vector<double> refined_toa_ts;   // high-rate samples, per cell
  std::vector<bool> refinement_failed;
};
DetectionOutcome detect(const ComplexSignal& y,
                        const std::vector<prs::PrsPlan>& plans,
                        const std::vector<prs::AcfProfile>& acfs,
                        const ExperimentSpec& spec);

// Detection experiment: per-SNR, per-cell detection probability
// (gate passed and coarse ToA within +-2 low-rate samples of truth).
struct DetectionSweepResult {
  std::vector<double> snr_db;                       // grid
  std::vector<std::vector<double>> detect_prob;     // [snr][cell]
};
DetectionSweepResult run_detection_sweep(const ExperimentSpec& spec);

// ToA-error experiment: single active cell, per-trial ToA errors in Ts units
// for the threshold rule, the coarse strongest-path pick, and the refined
// MPD estimate.
struct ToaErrorResult {
  std::vector<double> true_toa_ts;
  std::vector<double> err_threshold_ts;
  std::vector<double> err_coarse_ts;
  std::vector<double> err_refined_ts;
  std::vector<bool> detected;
};
ToaErrorResult run_toa_error(const ExperimentSpec& spec);

// Positioning experiment: per-device fixes over the 6-site deployment.
struct PositioningResult {
  struct Row {
    int drop = 0;
    int device = 0;
    double true_x = 0.0, true_y = 0.0;
    double est_x = 0.0, est_y = 0.0;
    double error_m = 0.0;
    int sites_detected = 0;
    bool localized = false;  // >= 3 sites and error < 500 m
  };
  std::vector<Row> rows;
  double localization_ratio = 0.0;
  double median_error_m = 0.0;  // among localized devices
};
PositioningResult run_positioning(const ExperimentSpec& spec);

// CSV writers; header comment block records the spec and seed.
void write_sweep_csv(const DetectionSweepResult& res,
                     const ExperimentSpec& spec, const std::string& path);
void write_toa_csv(const ToaErrorResult& res, const ExperimentSpec& spec,
                   const std::string& path);
void write_positioning_csv(const PositioningResult& res,
                           const ExperimentSpec& spec, const std::string& path);

double median(std::vector<double> v);

}  // namespace otdoa::harness
