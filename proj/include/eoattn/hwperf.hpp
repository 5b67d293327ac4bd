#pragma once

#include <span>
#include <string>
#include <vector>

#include "eoattn/errors.hpp"

namespace eoattn::hw {

/// Physical parameters of the signal chain. Defaults are the characterized
/// bench values at a 10 GBaud symbol rate.
struct HwConfig {
  double f_baud = 10e9;            // symbols/s
  double samples_per_symbol = 4.0; // DAC/ADC oversampling
  double l_mzm_m = 7.3e-3;         // modulator length
  double n_eff = 1.2;              // group index of the optical mode
  double f_3db_hz = 40e9;          // TIA bandwidth
  // TIA bandwidth policy for baud-rate sweeps: keep the default fixed value,
  // or track the converter rate (4x baud) so 10 GBaud reproduces 40 GHz.
  bool tia_tracks_baud = false;

  // laser diode
  double laser_v_bias_v = 1.6;
  double laser_slope_eff_w_per_a = 0.24;  // 0.24 mW/mA
  double laser_i_threshold_a = 60e-3;
  double laser_p_opt_w = 50e-3;

  // modulators: RF termination plus thermal bias per architecture
  double mzm_v_max_optmax_v = 2.87;
  double mzm_v_max_optmoid_v = 5.73;
  double mzm_r_term_ohm = 50.0;
  double mzm_p_dc_optmax_w = 13.8e-3;
  double mzm_p_dc_optmoid_w = 25.6e-3;

  // mixed-signal converters, linear power scaling with sampling rate
  double p_dac_ref_w = 132.25e-3;
  double p_adc_ref_w = 130.25e-3;
  double rate_ref_sps = 97e9;

  double p_drive_w = 100e-3;
  double p_pd_w = 1e-3;
  double p_tia_w = 11.2e-3;

  double effective_f_3db() const {
    return tia_tracks_baud ? samples_per_symbol * f_baud : f_3db_hz;
  }
};

/// Optmax runs two modulation trains (two MZMs, two PD+TIA pairs, one shared
/// drive amplifier); Optmoid is a single train.
enum class ArchKind { Optmax, Optmoid };

std::string to_string(ArchKind kind);
ArchKind arch_from_string(const std::string& name);

struct StageLatencies {
  double t_dac;   // 1/(sps * f_B)
  double t_prop;  // n_eff * L / c
  double t_tia;   // 5/(2 pi f_3dB)
  double t_adc;   // 1/(sps * f_B)
};

struct PowerBreakdown {
  double laser_w = 0.0;
  double mzm_w = 0.0;    // all modulators incl. thermal bias
  double dac_w = 0.0;
  double drive_w = 0.0;
  double pd_w = 0.0;
  double tia_w = 0.0;
  double adc_w = 0.0;

  double total() const { return laser_w + mzm_w + dac_w + drive_w + pd_w + tia_w + adc_w; }
};

struct PerfReport {
  ArchKind arch;
  long n = 0;
  double latency_s = 0.0;
  PowerBreakdown power;
  double energy_per_sequence_j = 0.0;  // P_tot * T
  double energy_per_element_j = 0.0;   // P_tot * T / n
  double ops_per_second = 0.0;         // n / T
};

StageLatencies stage_latencies(const HwConfig& cfg);

/// Pipelined latency: n/f_B per modulation train plus the cumulative stage
/// delays (the ADC appears once; everything upstream doubles for Optmax).
double latency(ArchKind arch, long n, const HwConfig& cfg);

/// Single-MZM power for one architecture's drive swing:
/// V_RMS^2/R + P_DC with V_RMS = V_max/(2*sqrt(3)) for a uniform drive.
double mzm_subsystem_power(ArchKind arch, const HwConfig& cfg);

PowerBreakdown power(ArchKind arch, const HwConfig& cfg);

PerfReport energy(ArchKind arch, long n, const HwConfig& cfg);

struct SweepRow {
  ArchKind arch;
  long n;
  double f_baud;
  double latency_s;
  double power_w;
  double energy_seq_j;
  double energy_elem_j;
};

std::vector<SweepRow> sweep(std::span<const ArchKind> archs, std::span<const long> n_grid,
                            std::span<const double> f_baud_grid, const HwConfig& cfg);

/// One row of the published comparison: literature rows are fixed constants
/// defined at n = 64; the electro-optic rows are computed from the config.
struct ComparisonRow {
  std::string architecture;
  double latency_s;
  double energy_seq_j;
  std::string type;
  std::string technology;
  bool computed;  // false for literature constants
};

std::vector<ComparisonRow> comparison_table(long n, const HwConfig& cfg);

}  // namespace eoattn::hw
