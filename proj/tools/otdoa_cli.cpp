// Command-line front-end for the OTDOA link-level simulator.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "otdoa/airlink.hpp"
#include "otdoa/harness.hpp"
#include "otdoa/locate.hpp"
#include "otdoa/prs.hpp"

using namespace otdoa;

namespace {

struct CliOptions {
  harness::ExperimentSpec spec;
  std::string channel = "awgn";
  std::string variant = "em-sic-foc";
  std::string config_path;
  double snr_min = -20.0, snr_max = 4.0, snr_step = 2.0;
};

void apply_config_file(CliOptions& o) {
  if (o.config_path.empty()) return;
  std::ifstream is(o.config_path);
  if (!is) throw std::runtime_error("cannot open config " + o.config_path);
  nlohmann::json j;
  is >> j;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j[key].template get<std::decay_t<decltype(field)>>();
  };
  get("variant", o.variant);
  get("channel", o.channel);
  get("trials", o.spec.trials);
  get("devices", o.spec.devices);
  get("drops", o.spec.drops);
  get("seed", o.spec.seed);
  get("iterations", o.spec.iterations);
  get("eta1", o.spec.eta1);
  get("eta2", o.spec.eta2);
  get("gamma", o.spec.gamma);
  get("num_lags", o.spec.num_lags);
  get("window", o.spec.window);
  get("threads", o.spec.threads);
  get("snr_db", o.spec.fixed_snr_db);
  get("snr_min", o.snr_min);
  get("snr_max", o.snr_max);
  get("snr_step", o.snr_step);
  get("three_cell_fo", o.spec.three_cell_fo);
}

void finalize(CliOptions& o) {
  o.spec.variant = harness::parse_variant(o.variant);
  o.spec.channel = (o.channel == "etu") ? harness::Channel::kEtu
                                        : harness::Channel::kAwgn;
  o.spec.snr_grid_db.clear();
  for (double s = o.snr_min; s <= o.snr_max + 1e-9; s += o.snr_step)
    o.spec.snr_grid_db.push_back(s);
}

void add_common(CLI::App* app, CliOptions& o) {
  app->add_option("--config", o.config_path, "JSON config file");
  app->add_option("--seed", o.spec.seed, "master seed");
  app->add_option("--trials", o.spec.trials, "Monte Carlo trials");
  app->add_option("--variant", o.variant,
                  "no-ic | em-sic | em-sic-foc | em-sic-foc-up");
  app->add_option("--channel", o.channel, "awgn | etu");
  app->add_option("--iterations", o.spec.iterations, "EM-SIC global iterations");
  app->add_option("--threads", o.spec.threads, "worker threads");
  app->add_option("--out", o.spec.out_path, "output CSV path");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OTDOA NB-IoT positioning simulator"};
  app.require_subcommand(1);
  CliOptions o;

  auto* sweep = app.add_subcommand("sweep-detect",
                                   "detection probability vs SNR (3 cells)");
  add_common(sweep, o);
  sweep->add_option("--snr-min", o.snr_min, "lowest SNR in dB");
  sweep->add_option("--snr-max", o.snr_max, "highest SNR in dB");
  sweep->add_option("--snr-step", o.snr_step, "SNR grid step in dB");
  sweep->add_flag("--with-fo", o.spec.three_cell_fo,
                  "apply the preset residual FOs");

  auto* toa = app.add_subcommand("toa-error",
                                 "ToA error statistics, single active cell");
  add_common(toa, o);
  toa->add_option("--snr", o.spec.fixed_snr_db, "operating SNR in dB");

  auto* pos = app.add_subcommand("position",
                                 "deployment positioning runs (6-site hexagonal world)");
  add_common(pos, o);
  pos->add_option("--devices", o.spec.devices, "devices per drop");
  pos->add_option("--drops", o.spec.drops, "independent drops");

  auto* crlb = app.add_subcommand("crlb", "print the ToA variance bound");
  int crlb_pci = 0;
  double crlb_sigma2 = 1.0;
  crlb->add_option("--pci", crlb_pci, "cell identity");
  crlb->add_option("--sigma2", crlb_sigma2, "noise variance");

  auto* replay = app.add_subcommand("replay", "run the detector on an IQ file");
  std::string iq_path;
  add_common(replay, o);
  replay->add_option("file", iq_path, "IQ capture")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    apply_config_file(o);
    finalize(o);

    if (sweep->parsed()) {
      auto res = harness::run_detection_sweep(o.spec);
      if (!o.spec.out_path.empty())
        harness::write_sweep_csv(res, o.spec, o.spec.out_path);
      for (size_t si = 0; si < res.snr_db.size(); ++si) {
        std::printf("snr %+6.1f dB:", res.snr_db[si]);
        for (double p : res.detect_prob[si]) std::printf("  %.3f", p);
        std::printf("\n");
      }
    } else if (toa->parsed()) {
      auto res = harness::run_toa_error(o.spec);
      if (!o.spec.out_path.empty())
        harness::write_toa_csv(res, o.spec, o.spec.out_path);
      std::vector<double> thr, coarse, refined;
      for (size_t i = 0; i < res.detected.size(); ++i) {
        if (!res.detected[i]) continue;
        thr.push_back(std::abs(res.err_threshold_ts[i]));
        coarse.push_back(std::abs(res.err_coarse_ts[i]));
        refined.push_back(std::abs(res.err_refined_ts[i]));
      }
      std::printf("median |err| Ts: threshold %.2f, coarse %.2f, refined %.2f\n",
                  harness::median(thr), harness::median(coarse),
                  harness::median(refined));
    } else if (pos->parsed()) {
      auto res = harness::run_positioning(o.spec);
      if (!o.spec.out_path.empty())
        harness::write_positioning_csv(res, o.spec, o.spec.out_path);
      std::printf("localization ratio %.3f, median error %.1f m\n",
                  res.localization_ratio, res.median_error_m);
    } else if (crlb->parsed()) {
      prs::PrsConfig cfg;
      cfg.pci = crlb_pci;
      auto plan = prs::build_plan(cfg);
      std::printf("crlb var(n) = %.6g samples^2 (printed-variant %.6g)\n",
                  locate::crlb_toa(plan, crlb_sigma2),
                  locate::crlb_toa(plan, crlb_sigma2, true));
    } else if (replay->parsed()) {
      std::vector<int> pcis;
      auto sig = airlink::load_iq(iq_path, &pcis);
      std::vector<prs::PrsPlan> plans;
      std::vector<prs::AcfProfile> acfs;
      for (int pci : pcis) {
        prs::PrsConfig cfg;
        cfg.pci = pci;
        plans.push_back(prs::build_plan(cfg));
        acfs.push_back(prs::prs_acf(plans.back(), 2 * o.spec.window + 1,
                                    kUpsampleFactor));
      }
      auto outcome = harness::detect(sig, plans, acfs, o.spec);
      for (size_t p = 0; p < plans.size(); ++p) {
        const auto& rep = outcome.reports[p];
        std::printf(
            "pci %2d: detected=%d coarse=%d refined_ts=%.2f fo=%+.4f |h|=%.4g\n",
            pcis[p], rep.detected, rep.coarse_toa, outcome.refined_toa_ts[p],
            rep.fo_estimate, std::abs(rep.lmmse_channel));
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
