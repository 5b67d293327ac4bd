#include "eoattn/hwperf.hpp"

#include <cmath>
#include <numbers>

namespace eoattn::hw {

namespace {
constexpr double kSpeedOfLight = 299792458.0;  // m/s
}

std::string to_string(ArchKind kind) {
  return kind == ArchKind::Optmax ? "optmax" : "optmoid";
}

ArchKind arch_from_string(const std::string& name) {
  if (name == "optmax") return ArchKind::Optmax;
  if (name == "optmoid") return ArchKind::Optmoid;
  throw Error(ErrorCode::ConfigError, "unknown architecture '" + name + "'");
}

StageLatencies stage_latencies(const HwConfig& cfg) {
  StageLatencies s;
  s.t_dac = 1.0 / (cfg.samples_per_symbol * cfg.f_baud);
  s.t_prop = cfg.n_eff * cfg.l_mzm_m / kSpeedOfLight;
  s.t_tia = 5.0 / (2.0 * std::numbers::pi * cfg.effective_f_3db());
  s.t_adc = s.t_dac;
  return s;
}

double latency(ArchKind arch, long n, const HwConfig& cfg) {
  const StageLatencies s = stage_latencies(cfg);
  const double t_mod = double(n) / cfg.f_baud;
  if (arch == ArchKind::Optmax) {
    return 2.0 * t_mod + 2.0 * s.t_dac + 2.0 * s.t_prop + 2.0 * s.t_tia + s.t_adc;
  }
  return t_mod + s.t_dac + s.t_prop + s.t_tia + s.t_adc;
}

double mzm_subsystem_power(ArchKind arch, const HwConfig& cfg) {
  const double v_max =
      arch == ArchKind::Optmax ? cfg.mzm_v_max_optmax_v : cfg.mzm_v_max_optmoid_v;
  const double p_dc =
      arch == ArchKind::Optmax ? cfg.mzm_p_dc_optmax_w : cfg.mzm_p_dc_optmoid_w;
  const double v_rms = v_max / (2.0 * std::sqrt(3.0));
  return v_rms * v_rms / cfg.mzm_r_term_ohm + p_dc;
}

PowerBreakdown power(ArchKind arch, const HwConfig& cfg) {
  PowerBreakdown p;
  p.laser_w = cfg.laser_v_bias_v *
              (cfg.laser_p_opt_w / cfg.laser_slope_eff_w_per_a + cfg.laser_i_threshold_a);
  const double rate = cfg.samples_per_symbol * cfg.f_baud;
  const double p_dac = cfg.p_dac_ref_w * rate / cfg.rate_ref_sps;
  const double p_adc = cfg.p_adc_ref_w * rate / cfg.rate_ref_sps;
  const int trains = arch == ArchKind::Optmax ? 2 : 1;
  p.mzm_w = trains * mzm_subsystem_power(arch, cfg);
  p.dac_w = trains * p_dac;
  p.drive_w = cfg.p_drive_w;  // the accumulation MZM is driven by the TIA, no second amp
  p.pd_w = trains * cfg.p_pd_w;
  p.tia_w = trains * cfg.p_tia_w;
  p.adc_w = p_adc;
  return p;
}

PerfReport energy(ArchKind arch, long n, const HwConfig& cfg) {
  if (n < 1) throw Error(ErrorCode::UnsupportedN, "sequence length must be >= 1");
  PerfReport r;
  r.arch = arch;
  r.n = n;
  r.latency_s = latency(arch, n, cfg);
  r.power = power(arch, cfg);
  const double p_tot = r.power.total();
  r.energy_per_sequence_j = p_tot * r.latency_s;
  r.energy_per_element_j = r.energy_per_sequence_j / double(n);
  r.ops_per_second = double(n) / r.latency_s;
  return r;
}

std::vector<SweepRow> sweep(std::span<const ArchKind> archs, std::span<const long> n_grid,
                            std::span<const double> f_baud_grid, const HwConfig& cfg) {
  if (archs.empty() || n_grid.empty() || f_baud_grid.empty()) {
    throw Error(ErrorCode::ConfigError, "sweep grids must be nonempty");
  }
  std::vector<SweepRow> rows;
  rows.reserve(archs.size() * n_grid.size() * f_baud_grid.size());
  for (const ArchKind arch : archs) {
    for (const long n : n_grid) {
      for (const double f : f_baud_grid) {
        HwConfig c = cfg;
        c.f_baud = f;
        const PerfReport r = energy(arch, n, c);
        rows.push_back({arch, n, f, r.latency_s, r.power.total(), r.energy_per_sequence_j,
                        r.energy_per_element_j});
      }
    }
  }
  return rows;
}

std::vector<ComparisonRow> comparison_table(long n, const HwConfig& cfg) {
  if (n != 64) {
    throw Error(ErrorCode::UnsupportedN,
                "literature comparison constants are defined at n = 64 only");
  }
  std::vector<ComparisonRow> rows;
  rows.push_back({"nMOS SMA", 5.5e-4, 1.9e-8, "Electronic", "Analog", false});
  rows.push_back({"Softermax", 7.7e-4, 1.3e-8, "Electronic", "Digital", false});
  rows.push_back({"Softonic", 1.7e-5, 4.5e-11, "Optic", "Analog", false});
  rows.push_back({"VEXP", 2.2e-7, 5.0e-8, "Electronic", "Digital", false});
  for (const ArchKind arch : {ArchKind::Optmax, ArchKind::Optmoid}) {
    const PerfReport r = energy(arch, n, cfg);
    rows.push_back({arch == ArchKind::Optmax ? "Optmax" : "Optmoid", r.latency_s,
                    r.energy_per_sequence_j, "Electro-Optic", "Analog", true});
  }
  return rows;
}

}  // namespace eoattn::hw
