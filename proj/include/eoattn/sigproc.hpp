#pragma once

#include <span>
#include <string>
#include <vector>

#include "eoattn/activations.hpp"
#include "eoattn/errors.hpp"
#include "eoattn/mzm.hpp"
#include "eoattn/rng.hpp"

namespace eoattn::dsp {

struct Trace {
  std::vector<double> samples;
  double sample_rate = 1.0;  // samples/s
  double t0 = 0.0;           // time of samples[0]

  double duration() const { return samples.size() / sample_rate; }
};

struct WaveformSpec {
  double baud = 10e9;
  double sample_rate = 80e9;
  int bit_depth = 5;  // used when generating uniform symbol streams
  long n = 2048;      // symbol count

  double samples_per_symbol() const { return sample_rate / baud; }
};

/// Linear-phase windowed-sinc low-pass (Hamming window, odd tap count).
struct FirSpec {
  double cutoff_hz = 12e9;
  int taps = 129;
};

struct ErrorStats {
  std::vector<double> errors;  // per symbol
  std::vector<double> bin_edges;
  std::vector<long> counts;
  double sigma_hat = 0.0;  // sample standard deviation of the errors
  double mean_error = 0.0;
};

/// Zero-order-hold symbol waveform -> affine voltage encoding -> transmission
/// through the model -> per-sample noise. Symbol boundaries start at t0 = 0.
Trace synthesize_trace(std::span<const double> symbols, const WaveformSpec& spec,
                       const mzm::SineTransferModel& model, const mzm::AffineEncoder& encoder,
                       const act::NoiseSpec& noise = {}, Rng* rng = nullptr);

/// Uniform random symbol stream over the encoder's digital range at the
/// spec's bit depth (2^bits distinct levels).
std::vector<double> uniform_symbols(const WaveformSpec& spec, double w_min, double w_max,
                                    Rng& rng);

std::vector<double> fir_taps(const FirSpec& spec, double sample_rate);

/// Group-delay-compensated filtering with reflect padding; output length
/// equals input length.
Trace fir_lowpass(const Trace& trace, const FirSpec& spec);

Trace decimate(const Trace& trace, int factor);

/// Integer decimation factor that brings a trace to the target oversampling.
int decimation_factor_for(double sample_rate, double baud, double target_sps);

/// Mean amplitude over a centered window of each symbol period
/// (window_fraction of 1/baud). Returns floor(duration * baud) values.
std::vector<double> integrate_symbols(const Trace& trace, double baud,
                                      double window_fraction = 0.2);

enum class ErrorNormalization { GlobalMax, PerSymbol };

ErrorStats error_stats(std::span<const double> measured, std::span<const double> reference,
                       int bins, ErrorNormalization norm = ErrorNormalization::GlobalMax);

/// Two-column CSV `time_s,amplitude`; sample rate inferred from the median
/// time step, rejecting jitter beyond 0.1%.
Trace load_trace(const std::string& path);
void save_trace(const Trace& trace, const std::string& path);

void save_error_stats(const ErrorStats& stats, const std::string& path);

}  // namespace eoattn::dsp
