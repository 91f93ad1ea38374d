#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otdoa/airlink.hpp"
#include "otdoa/locate.hpp"
#include "otdoa/types.hpp"

namespace otdoa::scenario {

struct Deployment {
  std::vector<locate::Xy> sites;        // 6 e-NodeBs
  int sectors_per_site = 3;             // PCI = 3*site + sector
  double inter_site_distance_m = 1732.0;
  double tx_power_dbm = 46.0;
  double noise_density_awgn_dbm_hz = -174.0;
  double noise_density_etu_dbm_hz = -184.0;
  double bandwidth_hz = 1.92e6;
  double shadowing_sigma_db = 8.0;
  double shadowing_corr_sites = 0.5;    // between e-NodeBs
  double shadowing_corr_sectors = 1.0;  // between sectors of one e-NodeB
  double fo_range = 0.03;               // residual FO uniform in [-r, r]
  int serving_pci = 8;

  int num_cells() const {
    return static_cast<int>(sites.size()) * sectors_per_site;
  }
  int site_of(int pci) const { return pci / sectors_per_site; }
};

// Hexagonal ring of 6 sites around the origin, ISD 1732 m.
Deployment default_deployment();

// Table I path loss, d in km: L = 120.9 + 37.6 log10(d).
double path_loss_db(double d_km);

// Jointly Gaussian per-sector shadowing offsets, sigma 8 dB, correlation 1.0
// within a site and 0.5 across sites. Site-major ordering.
std::vector<double> shadowing(std::uint64_t seed, int n_sites, int n_sectors);

struct Device {
  locate::Xy xy;
  std::vector<double> shadow_db;  // per sector
  int serving_pci = -1;
};

// Uniform drops over the deployment area, kept when the serving site
// (strongest received power, shadowing included) is the site of the target
// PCI. geometric=true falls back to nearest-site association.
std::vector<Device> drop_devices(const Deployment& dep, int n,
                                 std::uint64_t seed, bool geometric = false);

// Per-sector SNR in dB at the device (rx power - noise power in band).
std::vector<double> link_budget(const Deployment& dep, const Device& dev,
                                bool etu);

// The controlled 3-cell test: PCIs {0,1,2}, ToAs {320,480,640} Ts,
// powers {0,-4,-8} dB, residual FOs {0.02,0.01,0.01}.
struct ThreeCellPreset {
  std::vector<int> pcis = {0, 1, 2};
  std::vector<double> toas_ts = {320.0, 480.0, 640.0};
  std::vector<double> powers_db = {0.0, -4.0, -8.0};
  std::vector<double> fos = {0.02, 0.01, 0.01};
};

// Links for the 3-cell preset; power_scale_db shifts all cells together
// (used by SNR sweeps), with_fo=false zeroes the residual FOs. ETU taps are
// drawn per cell from the seed when etu=true.
std::vector<airlink::CellLink> three_cell_links(const ThreeCellPreset& preset,
                                                bool with_fo, bool etu,
                                                std::uint64_t seed);

}  // namespace otdoa::scenario
