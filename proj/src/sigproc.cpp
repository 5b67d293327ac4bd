#include "eoattn/sigproc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eoattn/csv.hpp"

namespace eoattn::dsp {

namespace {
constexpr double kPi = std::numbers::pi;
}

Trace synthesize_trace(std::span<const double> symbols, const WaveformSpec& spec,
                       const mzm::SineTransferModel& model, const mzm::AffineEncoder& encoder,
                       const act::NoiseSpec& noise, Rng* rng) {
  const double sps_f = spec.samples_per_symbol();
  const long sps = std::lround(sps_f);
  if (std::abs(sps_f - double(sps)) > 1e-9 || sps < 1) {
    throw Error(ErrorCode::NonIntegralSps, "synthesis needs an integral samples-per-symbol");
  }
  if (noise.mode != act::NoiseMode::None && noise.sigma > 0.0 && !rng) {
    throw Error(ErrorCode::MissingRng, "noise enabled but no random source given");
  }

  Trace trace;
  trace.sample_rate = spec.sample_rate;
  trace.t0 = 0.0;
  trace.samples.reserve(symbols.size() * sps);
  // Noise scale for the signal-max reference is the clean trace maximum.
  double clean_max = 0.0;
  std::vector<double> clean;
  clean.reserve(symbols.size() * sps);
  for (const double w : symbols) {
    const double t = mzm::transmission(model, encoder.encode(w));
    clean_max = std::max(clean_max, t);
    for (long k = 0; k < sps; ++k) clean.push_back(t);
  }
  for (const double t : clean) {
    trace.samples.push_back(rng ? act::apply_noise_scalar(t, clean_max, noise, *rng) : t);
  }
  return trace;
}

std::vector<double> uniform_symbols(const WaveformSpec& spec, double w_min, double w_max,
                                    Rng& rng) {
  const long levels = 1L << spec.bit_depth;
  std::vector<double> out(spec.n);
  for (long i = 0; i < spec.n; ++i) {
    const double level = double(rng.index(levels));
    out[i] = w_min + (w_max - w_min) * level / double(levels - 1);
  }
  return out;
}

std::vector<double> fir_taps(const FirSpec& spec, double sample_rate) {
  if (!(spec.cutoff_hz > 0.0) || spec.cutoff_hz >= sample_rate / 2.0) {
    throw Error(ErrorCode::CutoffAboveNyquist, "cutoff must sit below Nyquist");
  }
  if (spec.taps < 3 || spec.taps % 2 == 0) {
    throw Error(ErrorCode::ConfigError, "tap count must be odd and >= 3");
  }
  const int m = spec.taps - 1;  // order
  const double fc = spec.cutoff_hz / sample_rate;
  std::vector<double> h(spec.taps);
  double sum = 0.0;
  for (int k = 0; k < spec.taps; ++k) {
    const double x = k - m / 2.0;
    const double sinc = x == 0.0 ? 2.0 * fc : std::sin(2.0 * kPi * fc * x) / (kPi * x);
    const double window = 0.54 - 0.46 * std::cos(2.0 * kPi * k / m);
    h[k] = sinc * window;
    sum += h[k];
  }
  for (double& v : h) v /= sum;  // unit DC gain
  return h;
}

Trace fir_lowpass(const Trace& trace, const FirSpec& spec) {
  const std::vector<double> h = fir_taps(spec, trace.sample_rate);
  const long n = long(trace.samples.size());
  const int half = spec.taps / 2;

  // Reflect padding keeps the output length equal to the input length; the
  // symmetric kernel is centered on each sample, compensating group delay.
  auto sample_at = [&](long idx) {
    if (idx < 0) idx = -idx;
    if (idx >= n) idx = 2 * (n - 1) - idx;
    idx = std::clamp(idx, 0L, n - 1);
    return trace.samples[size_t(idx)];
  };

  Trace out;
  out.sample_rate = trace.sample_rate;
  out.t0 = trace.t0;
  out.samples.resize(size_t(n));
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < spec.taps; ++k) {
      acc += h[size_t(k)] * sample_at(i + k - half);
    }
    out.samples[size_t(i)] = acc;
  }
  return out;
}

Trace decimate(const Trace& trace, int factor) {
  if (factor < 1) throw Error(ErrorCode::ZeroFactor, "decimation factor must be >= 1");
  Trace out;
  out.sample_rate = trace.sample_rate / factor;
  out.t0 = trace.t0;
  out.samples.reserve(trace.samples.size() / factor + 1);
  for (size_t i = 0; i < trace.samples.size(); i += size_t(factor)) {
    out.samples.push_back(trace.samples[i]);
  }
  return out;
}

int decimation_factor_for(double sample_rate, double baud, double target_sps) {
  const double sps = sample_rate / baud;
  const int factor = int(std::lround(sps / target_sps));
  return std::max(factor, 1);
}

std::vector<double> integrate_symbols(const Trace& trace, double baud, double window_fraction) {
  const double symbol_period = 1.0 / baud;
  const double window = window_fraction * symbol_period;
  if (window < 1.0 / trace.sample_rate) {
    throw Error(ErrorCode::EmptyWindow, "integration window shorter than one sample");
  }
  const long n_symbols = long(std::floor(trace.duration() * baud));
  if (n_symbols < 1) {
    throw Error(ErrorCode::EmptyWindow, "trace spans less than one symbol");
  }
  std::vector<double> out;
  out.reserve(size_t(n_symbols));
  for (long k = 0; k < n_symbols; ++k) {
    // Window centered on the symbol, in time relative to t0.
    const double center = (double(k) + 0.5) * symbol_period;
    const double lo = center - window / 2.0;
    const double hi = center + window / 2.0;
    const long i_lo = long(std::ceil(lo * trace.sample_rate - 1e-9));
    const long i_hi = long(std::floor(hi * trace.sample_rate + 1e-9));
    double acc = 0.0;
    long count = 0;
    for (long i = std::max(i_lo, 0L); i <= i_hi && i < long(trace.samples.size()); ++i) {
      acc += trace.samples[size_t(i)];
      ++count;
    }
    if (count == 0) {
      throw Error(ErrorCode::EmptyWindow,
                  "no samples inside the integration window of symbol " + std::to_string(k));
    }
    out.push_back(acc / double(count));
  }
  return out;
}

ErrorStats error_stats(std::span<const double> measured, std::span<const double> reference,
                       int bins, ErrorNormalization norm) {
  if (measured.size() != reference.size()) {
    throw Error(ErrorCode::LengthMismatch, "measured and reference lengths differ");
  }
  if (measured.empty()) {
    throw Error(ErrorCode::LengthMismatch, "empty inputs");
  }
  double ref_max = 0.0;
  for (const double r : reference) ref_max = std::max(ref_max, std::abs(r));
  if (ref_max == 0.0) {
    throw Error(ErrorCode::ZeroReference, "reference scale is zero");
  }

  ErrorStats stats;
  stats.errors.resize(measured.size());
  for (size_t i = 0; i < measured.size(); ++i) {
    const double denom = norm == ErrorNormalization::GlobalMax ? ref_max : reference[i];
    if (denom == 0.0) {
      throw Error(ErrorCode::ZeroReference, "zero per-symbol reference at index " +
                                                std::to_string(i));
    }
    stats.errors[i] = (measured[i] - reference[i]) / denom;
  }

  double mean = 0.0;
  for (const double e : stats.errors) mean += e;
  mean /= double(stats.errors.size());
  stats.mean_error = mean;
  double var = 0.0;
  for (const double e : stats.errors) var += (e - mean) * (e - mean);
  stats.sigma_hat =
      stats.errors.size() > 1 ? std::sqrt(var / double(stats.errors.size() - 1)) : 0.0;

  if (bins < 1) bins = 1;
  double e_lo = *std::min_element(stats.errors.begin(), stats.errors.end());
  double e_hi = *std::max_element(stats.errors.begin(), stats.errors.end());
  if (e_lo == e_hi) {
    e_lo -= 0.5;
    e_hi += 0.5;
  }
  stats.bin_edges.resize(size_t(bins) + 1);
  stats.counts.assign(size_t(bins), 0);
  for (int b = 0; b <= bins; ++b) {
    stats.bin_edges[size_t(b)] = e_lo + (e_hi - e_lo) * double(b) / bins;
  }
  for (const double e : stats.errors) {
    int b = int(std::floor((e - e_lo) / (e_hi - e_lo) * bins));
    b = std::clamp(b, 0, bins - 1);
    ++stats.counts[size_t(b)];
  }
  return stats;
}

Trace load_trace(const std::string& path) {
  const std::vector<std::string> header = {"time_s", "amplitude"};
  const io::CsvTable table = io::read_csv(path, header);
  if (table.rows.size() < 2) {
    throw Error(ErrorCode::ParseError, path + ": need at least two samples");
  }
  std::vector<double> times(table.rows.size()), amps(table.rows.size());
  for (size_t i = 0; i < table.rows.size(); ++i) {
    times[i] = io::parse_double(table.rows[i][0], path, i + 2);
    amps[i] = io::parse_double(table.rows[i][1], path, i + 2);
  }
  std::vector<double> steps(times.size() - 1);
  for (size_t i = 1; i < times.size(); ++i) steps[i - 1] = times[i] - times[i - 1];
  std::vector<double> sorted = steps;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (!(median > 0.0)) {
    throw Error(ErrorCode::NonUniformSampling, path + ": non-increasing time axis");
  }
  for (size_t i = 0; i < steps.size(); ++i) {
    if (std::abs(steps[i] - median) / median > 1e-3) {
      throw Error(ErrorCode::NonUniformSampling,
                  path + ": time step at row " + std::to_string(i + 3) +
                      " deviates more than 0.1% from the median");
    }
  }
  Trace trace;
  trace.samples = std::move(amps);
  trace.sample_rate = 1.0 / median;
  trace.t0 = times[0];
  return trace;
}

void save_trace(const Trace& trace, const std::string& path) {
  const std::vector<std::string> header = {"time_s", "amplitude"};
  io::CsvWriter w(path, header);
  for (size_t i = 0; i < trace.samples.size(); ++i) {
    const double t = trace.t0 + double(i) / trace.sample_rate;
    w.row(std::vector<std::string>{io::fmt(t), io::fmt(trace.samples[i])});
  }
  w.commit();
}

void save_error_stats(const ErrorStats& stats, const std::string& path) {
  const std::vector<std::string> header = {"bin_lo", "bin_hi", "count"};
  io::CsvWriter w(path, header);
  for (size_t b = 0; b < stats.counts.size(); ++b) {
    w.row(std::vector<std::string>{io::fmt(stats.bin_edges[b]), io::fmt(stats.bin_edges[b + 1]),
                                   io::fmt((long long)stats.counts[b])});
  }
  w.raw_line("# symbols=" + std::to_string(stats.errors.size()) +
             " mean_error=" + io::fmt(stats.mean_error) + " sigma_hat=" + io::fmt(stats.sigma_hat));
  w.commit();
}

}  // namespace eoattn::dsp
