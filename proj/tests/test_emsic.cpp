#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "otdoa/airlink.hpp"
#include "otdoa/emsic.hpp"
#include "otdoa/rng.hpp"
#include "otdoa/harness.hpp"
#include "otdoa/scenario.hpp"

using namespace otdoa;

namespace {
constexpr int kLags = 64;
constexpr int kFrame = kSymbolsPerSubframe * kSymbolLen + kLags;
constexpr double kPi = std::numbers::pi;

airlink::CellLink make_link(int pci, double toa_ts, double power_db, double fo) {
  airlink::CellLink link;
  prs::PrsConfig cfg;
  cfg.pci = pci;
  link.plan = prs::build_plan(cfg);
  link.taps.push_back({toa_ts, cplx{1.0, 0.0}});
  link.tx_power_db = power_db;
  link.residual_fo = fo;
  return link;
}

// Synthetic per-symbol profiles carrying an exact phase ramp across symbols.
correlate::CorrelationSet ramp_profiles(double eps,
                                        const std::vector<int>& indices,
                                        int lags, int peak_lag) {
  correlate::CorrelationSet set;
  for (int s = 0; s < kPrsSymbols; ++s) {
    cvec prof(lags, cplx{0.0, 0.0});
    const double a = 2.0 * kPi * eps * kSymbolLen * indices[s] / kFftSize;
    prof[peak_lag] = cplx{std::cos(a), std::sin(a)};
    set.per_symbol.push_back(std::move(prof));
  }
  return set;
}

const std::vector<int> kIdx = {3, 5, 6, 8, 9, 10, 12, 13};
}  // namespace

TEST_CASE("BLUE weights are the published values and sum to one") {
  CHECK(emsic::kBlueWeights[0] == doctest::Approx(0.4762));
  CHECK(emsic::kBlueWeights[1] == doctest::Approx(0.3095));
  CHECK(emsic::kBlueWeights[2] == doctest::Approx(0.1667));
  CHECK(emsic::kBlueWeights[3] == doctest::Approx(0.0476));
  double sum = 0.0;
  for (double w : emsic::kBlueWeights) sum += w;
  CHECK(std::abs(sum - 1.0) <= 5e-4);
}

TEST_CASE("blue_fo recovers synthetic ramps exactly") {
  for (double eps : {-0.05, -0.02, 0.0, 0.02, 0.05}) {
    auto set = ramp_profiles(eps, kIdx, kLags, 11);
    CHECK(std::abs(emsic::blue_fo(set, kIdx, 11) - eps) < 1e-6);
  }
  // Zero-magnitude products contribute angle zero
  correlate::CorrelationSet zeros;
  for (int s = 0; s < 8; ++s) zeros.per_symbol.push_back(cvec(kLags, 0.0));
  CHECK(emsic::blue_fo(zeros, kIdx, 5) == 0.0);
}

TEST_CASE("coherent combining with and without FO") {
  // eps == 0: plain sum of the 8 profiles
  auto set = ramp_profiles(0.0, kIdx, kLags, 7);
  std::vector<double> fo(kLags, 0.0);
  auto combined = emsic::coherent_combine(set, kIdx, fo);
  CHECK(std::abs(combined[7] - cplx{8.0, 0.0}) < 1e-12);

  // True eps: perfect derotation reaches 8x the single-symbol magnitude
  const double eps = 0.03;
  auto ramped = ramp_profiles(eps, kIdx, kLags, 7);
  auto fo_all = emsic::blue_fo_all(ramped, kIdx);
  auto comb2 = emsic::coherent_combine(ramped, kIdx, fo_all);
  CHECK(std::abs(comb2[7]) == doctest::Approx(8.0).epsilon(1e-6));

  // Non-coherent sum bounds the coherent one
  double noncoh = 0.0;
  for (int s = 0; s < 8; ++s) noncoh += std::abs(ramped.per_symbol[s][7]);
  CHECK(noncoh + 1e-12 >= std::abs(comb2[7]));
}

TEST_CASE("strongest_path: argmax with smallest-index tie rule") {
  cvec combined(kLags, cplx{0.0, 0.0});
  combined[12] = 4.0;
  combined[30] = 4.0;
  std::vector<double> fo(kLags, 0.0);
  fo[12] = 0.013;
  auto pick = emsic::strongest_path(combined, fo);
  CHECK(pick.lag == 12);
  CHECK(pick.fo == doctest::Approx(0.013));
}

TEST_CASE("end-to-end FO estimate from a synthesized subframe") {
  for (double eps : {-0.04, 0.02}) {
    auto link = make_link(0, 320.0, 0.0, eps);
    auto y = airlink::superpose({link}, 0.0, 1, kFrame, true);
    auto set = correlate::correlate_all(y, link.plan, kLags);
    auto fo = emsic::blue_fo_all(set, kIdx);
    auto combined = emsic::coherent_combine(set, kIdx, fo);
    auto pick = emsic::strongest_path(combined, fo);
    CHECK(pick.lag == 20);
    CHECK(std::abs(pick.fo - eps) < 2e-3);
  }
}

TEST_CASE("channel estimation: exact ratio average and LMMSE limits") {
  const cplx h{0.6, -0.45};
  auto link = make_link(0, 320.0, 0.0, 0.02);
  link.taps[0].gain = h;
  auto y = airlink::superpose({link}, 0.0, 1, kFrame, true);
  auto est = emsic::estimate_channel(y.samples, link.plan, 20, 0.02);
  CHECK(std::abs(est.raw - h) < 1e-9);
  CHECK(est.noise < 1e-12);
  // sigma^2 -> 0 gives h_tilde -> h_hat
  CHECK(std::abs(est.lmmse - est.raw) < 1e-9);

  // |h|^2 == sigma^2 shrinks by exactly one half
  emsic::ChannelEstimate mid;
  mid.raw = cplx{1.0, 0.0};
  mid.noise = 1.0;
  const cplx shrunk = mid.raw / (1.0 + mid.noise / std::norm(mid.raw));
  CHECK(std::abs(shrunk - cplx{0.5, 0.0}) < 1e-12);
}

TEST_CASE("noiseless subtraction cancels the cell and add-back restores it") {
  auto link = make_link(0, 320.0, 0.0, 0.02);
  auto y = airlink::superpose({link}, 0.0, 1, kFrame, true);
  double in_energy = 0.0;
  for (const auto& x : y.samples) in_energy += std::norm(x);

  emsic::SicState state;
  state.residual = y.samples;
  state.subtracted.resize(1);
  auto est = emsic::estimate_channel(state.residual, link.plan, 20, 0.02);
  emsic::subtract_cell(state, 0, link.plan, est.lmmse, 20, 0.02);

  double out_energy = 0.0;
  for (const auto& x : state.residual) out_energy += std::norm(x);
  CHECK(out_energy / in_energy < 1e-12);

  // Bookkeeping: add back then compare bit-level
  emsic::add_back_cell(state, 0);
  for (size_t i = 0; i < y.samples.size(); ++i)
    CHECK(std::abs(state.residual[i] - y.samples[i]) < 1e-12);
}

TEST_CASE("bookkeeping identity holds through a full noisy run") {
  auto links = scenario::three_cell_links({}, true, false, 3);
  auto y = airlink::superpose(links, 0.05, 17, kFrame);
  std::vector<prs::PrsPlan> plans;
  for (const auto& l : links) plans.push_back(l.plan);

  // Re-run stage 1 by hand to inspect the state after every subtraction
  emsic::SicState state;
  state.residual = y.samples;
  state.subtracted.resize(plans.size());
  for (int it = 0; it < 2; ++it) {
    for (size_t p = 0; p < plans.size(); ++p) {
      emsic::add_back_cell(state, static_cast<int>(p));
      ComplexSignal wrapped{state.residual, y.rate_hz, 0};
      auto set = correlate::correlate_all(wrapped, plans[p], kLags);
      auto fo = emsic::blue_fo_all(set, plans[p].config.prs_symbol_indices);
      auto combined =
          emsic::coherent_combine(set, plans[p].config.prs_symbol_indices, fo);
      auto pick = emsic::strongest_path(combined, fo);
      auto est = emsic::estimate_channel(state.residual, plans[p], pick.lag,
                                         pick.fo);
      emsic::subtract_cell(state, static_cast<int>(p), plans[p], est.lmmse,
                           pick.lag, pick.fo);

      // residual + sum of subtracted components == original y
      double err = 0.0, ref = 0.0;
      for (size_t i = 0; i < y.samples.size(); ++i) {
        cplx sum = state.residual[i];
        for (const auto& comp : state.subtracted)
          if (!comp.empty()) sum += comp[i];
        err += std::norm(sum - y.samples[i]);
        ref += std::norm(y.samples[i]);
      }
      CHECK(err / ref < 1e-10);
    }
  }
}

TEST_CASE("run_stage1 finds the preset delays and FOs at high SNR") {
  auto links = scenario::three_cell_links({}, true, false, 3);
  auto y = airlink::superpose(links, 1e-6, 5, kFrame);
  std::vector<prs::PrsPlan> plans;
  for (const auto& l : links) plans.push_back(l.plan);
  emsic::Stage1Options opts;
  auto reports = emsic::run_stage1(y, plans, opts);
  const int expect[3] = {20, 30, 40};
  const double fos[3] = {0.02, 0.01, 0.01};
  for (int p = 0; p < 3; ++p) {
    CHECK(reports[p].detected);
    CHECK(std::abs(reports[p].coarse_toa - expect[p]) <= 1);
    CHECK(std::abs(reports[p].fo_estimate - fos[p]) < 5e-3);
    CHECK(std::abs(reports[p].fo_estimate) <= 0.05 + 1e-6);
  }
}

TEST_CASE("single cell: 1 vs 3 iterations identical when noiseless") {
  auto link = make_link(2, 480.0, 0.0, 0.015);
  auto y = airlink::superpose({link}, 0.0, 1, kFrame);
  emsic::Stage1Options o1, o3;
  o1.iterations = 1;
  o3.iterations = 3;
  auto r1 = emsic::run_stage1(y, {link.plan}, o1);
  auto r3 = emsic::run_stage1(y, {link.plan}, o3);
  CHECK(r1[0].detected == r3[0].detected);
  CHECK(r1[0].coarse_toa == r3[0].coarse_toa);
  CHECK(std::abs(r1[0].fo_estimate - r3[0].fo_estimate) < 1e-9);
}

TEST_CASE("subtracting the strong cell raises the weak cell's peak ratio") {
  // 100-trial median comparison of cell 2's peak-to-average profile ratio
  // with and without subtraction of cell 0
  std::vector<double> before_v, after_v;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    auto links = scenario::three_cell_links({}, false, false, t);
    const double sigma2 = airlink::signal_power();  // 0 dB operating point
    auto y = airlink::superpose(links, sigma2, 100 + t, kFrame);
    std::vector<prs::PrsPlan> plans;
    for (const auto& l : links) plans.push_back(l.plan);

    auto ratio_of = [&](const cvec& samples) {
      ComplexSignal w{samples, kLowRateHz, 0};
      auto set = correlate::correlate_all(w, plans[2], kLags);
      auto comb = correlate::plain_sum(set);
      double peak = 0.0, mean = 0.0;
      for (int n = 0; n < kLags; ++n) {
        peak = std::max(peak, std::abs(comb[n]));
        mean += std::abs(comb[n]);
      }
      return peak / (mean / kLags);
    };

    const double before = ratio_of(y.samples);
    emsic::SicState state;
    state.residual = y.samples;
    state.subtracted.resize(3);
    ComplexSignal w{state.residual, kLowRateHz, 0};
    auto set0 = correlate::correlate_all(w, plans[0], kLags);
    auto fo0 = emsic::blue_fo_all(set0, plans[0].config.prs_symbol_indices);
    auto c0 =
        emsic::coherent_combine(set0, plans[0].config.prs_symbol_indices, fo0);
    auto pick0 = emsic::strongest_path(c0, fo0);
    auto est0 =
        emsic::estimate_channel(state.residual, plans[0], pick0.lag, pick0.fo);
    emsic::subtract_cell(state, 0, plans[0], est0.lmmse, pick0.lag, pick0.fo);
    before_v.push_back(before);
    after_v.push_back(ratio_of(state.residual));
  }
  const double med_before = harness::median(before_v);
  const double med_after = harness::median(after_v);
  MESSAGE("median peak ratio: " << med_before << " -> " << med_after);
  CHECK(med_after > med_before);
}

TEST_CASE("2 iterations never degrade detection vs 1 under ETU") {
  // Paired trials; compare per-cell detection counts
  const int trials = 200;
  int det1[3] = {0, 0, 0}, det2[3] = {0, 0, 0};
  const double sigma2 = airlink::signal_power() / std::pow(10.0, -0.2);
  for (int t = 0; t < trials; ++t) {
    auto links = scenario::three_cell_links({}, true, true, 7000 + t);
    auto y = airlink::superpose(links, sigma2, 200 + t, kFrame);
    std::vector<prs::PrsPlan> plans;
    for (const auto& l : links) plans.push_back(l.plan);
    emsic::Stage1Options o1, o2;
    o1.iterations = 1;
    o2.iterations = 2;
    auto r1 = emsic::run_stage1(y, plans, o1);
    auto r2 = emsic::run_stage1(y, plans, o2);
    for (int p = 0; p < 3; ++p) {
      const int true_lag = static_cast<int>(links[p].taps[0].delay_ts) / 16;
      if (r1[p].detected && std::abs(r1[p].coarse_toa - true_lag) <= 2)
        ++det1[p];
      if (r2[p].detected && std::abs(r2[p].coarse_toa - true_lag) <= 2)
        ++det2[p];
    }
  }
  for (int p = 0; p < 3; ++p) {
    MESSAGE("cell " << p << ": 1-iter " << det1[p] << ", 2-iter " << det2[p]);
    CHECK(det2[p] + trials / 20 >= det1[p]);  // non-degrading within MC noise
  }
}
