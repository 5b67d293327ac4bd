#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eoattn/errors.hpp"
#include "eoattn/mzm.hpp"
#include "eoattn/rng.hpp"

namespace eoattn::act {

// ---------------------------------------------------------------------------
// Quantization (DAC q_in / ADC q_out model)
// ---------------------------------------------------------------------------

enum class QuantRounding { Truncate, Nearest };

/// bits == 0 disables quantization (identity). The default Truncate mode
/// floors values to the lower edge of their bin of width (hi-lo)/2^bits;
/// exact bin edges, including hi itself, map to themselves.
struct QuantSpec {
  int bits = 0;
  double lo = 0.0;
  double hi = 1.0;
  QuantRounding rounding = QuantRounding::Truncate;

  bool enabled() const { return bits > 0; }
};

double quantize(double v, const QuantSpec& spec);

// ---------------------------------------------------------------------------
// Stochastic perturbation model
// ---------------------------------------------------------------------------

enum class NoiseMode { None, Additive, Multiplicative };

/// Additive/Absolute:  s_i + N(0, sigma^2)
/// Additive/SignalMax: s_i + N(0, (sigma * max_j s_j)^2)
/// Multiplicative:     s_i * N(1, sigma^2)
enum class NoiseReference { Absolute, SignalMax };

struct NoiseSpec {
  NoiseMode mode = NoiseMode::None;
  double sigma = 0.0;
  NoiseReference reference = NoiseReference::Absolute;
};

void apply_noise(std::span<double> s, const NoiseSpec& spec, Rng& rng);
double apply_noise_scalar(double s, double signal_max, const NoiseSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Normalized slope segments of a transfer model
// ---------------------------------------------------------------------------

/// A transfer-model slice rescaled to span [0, 1] across an activation-domain
/// window [x_lo, x_hi]. Outside the window the value saturates exactly at the
/// endpoint values (0 and 1 for a rising segment, 1 and 0 for a falling one).
struct SineSegment {
  mzm::SineTransferModel model;
  mzm::AffineEncoder encoder;  // activation domain -> volts
  double x_lo = 0.0;
  double x_hi = 1.0;
  double t_min = 0.0;   // smaller endpoint transmission
  double t_span = 1.0;  // |T(encode(x_hi)) - T(encode(x_lo))|, > 0
  double sat_lo = 0.0;  // exact value at/below x_lo (0 rising, 1 falling)
  double sat_hi = 1.0;  // exact value at/above x_hi

  double value(double x) const;
  double deriv(double x) const;  // 0 in the saturated regions
};

SineSegment make_segment(const mzm::SineTransferModel& model, mzm::SlopeSegment kind,
                         double x_lo, double x_hi);

// ---------------------------------------------------------------------------
// Optmax stages
// ---------------------------------------------------------------------------

/// Numerator stage: MZM rising slope by default; ExactExp is the ideal limit
/// used to recover the reference Softmax for equivalence checks.
struct ExpStage {
  enum class Kind { Sine, ExactExp };
  Kind kind = Kind::Sine;
  SineSegment segment;

  double value(double x) const;
  double deriv(double x) const;
};

/// Normalization factor N(z) = alpha * [beta + (1-beta) * f_rec(z)] over the
/// accumulated-sum domain [z_min, z_max], or the ideal reciprocal 1/z.
struct NormModel {
  enum class Kind { Sine, ExactReciprocal };
  Kind kind = Kind::Sine;
  double alpha = 1.0;
  double beta = 0.0;
  SineSegment f_rec;  // falling slope, 1 at z_min down to 0 at z_max
  double z_min = 1.0;
  double z_max = 2.0;
  double fit_residual = 0.0;  // sum of squared (N(z) - 1/z) over the fit grid

  double value(double z) const;  // caller clamps z to [z_min, z_max] first
  double deriv(double z) const;
};

struct NormFitResult {
  double alpha = 1.0;
  double beta = 0.0;
  double residual = 0.0;
};

/// Least-squares calibration of (alpha, beta) against the ideal reciprocal
/// 1/z on a uniform grid. Linear in (alpha*beta, alpha*(1-beta)), so the
/// optimum is closed-form; beta is clamped to [0, 1].
NormFitResult fit_norm_factor(const std::function<double(double)>& f_rec, double z_min,
                              double z_max, int grid_points);

NormModel make_norm_model(const mzm::SineTransferModel& model, double z_min, double z_max,
                          int grid_points = 257);

// ---------------------------------------------------------------------------
// Parameter records
// ---------------------------------------------------------------------------

struct OptmaxParams {
  double x_min = 0.0;
  double x_max = 4.0;
  ExpStage f_exp;
  NormModel norm;
  QuantSpec q_in;   // over [x_min, x_max]
  QuantSpec q_out;  // over the output range, [0, 1] by default
  NoiseSpec noise;
};

struct OptmoidParams {
  double bias = 0.0;   // added to inputs before clipping
  double x_min = -4.0; // clip bounds in the biased domain
  double x_max = 4.0;
  SineSegment f_sig;   // full swing, 0 at x_min up to 1 at x_max
  QuantSpec q_in;
  QuantSpec q_out;
  NoiseSpec noise;
  double calib_residual_max = 0.0;  // max |f_sig - sigmoid| recorded at calibration
  double calib_residual_rms = 0.0;
};

/// Ideal-limit Optmax: exact exponential numerator, exact reciprocal
/// normalization, clips wide open, quantizers disabled, no noise.
OptmaxParams ideal_optmax();

/// Builds Optmax parameters from a fitted transfer model: rising slope onto
/// [x_min, x_max], falling slope onto [z_min, z_max] with (alpha, beta)
/// fitted against 1/z.
OptmaxParams calibrate_optmax(const mzm::SineTransferModel& model, double x_min, double x_max,
                              double z_min, double z_max, const QuantSpec& q_in = {},
                              const QuantSpec& q_out = {}, const NoiseSpec& noise = {});

/// Builds Optmoid parameters. When clip_half_width <= 0, the input scaling is
/// calibrated by a least-squares match of the full-swing segment against the
/// logistic on a dense grid; the residual is recorded in the result.
OptmoidParams calibrate_optmoid(const mzm::SineTransferModel& model, double bias,
                                double clip_half_width = 0.0, const QuantSpec& q_in = {},
                                const QuantSpec& q_out = {}, const NoiseSpec& noise = {});

// ---------------------------------------------------------------------------
// Reference activations
// ---------------------------------------------------------------------------

std::vector<double> softmax_ref(std::span<const double> x);
std::vector<double> sigmoid_ref(std::span<const double> x, double bias);

/// Negative logarithmic sequence length, -ln(n).
double default_bias(long n);

// ---------------------------------------------------------------------------
// Forward models
// ---------------------------------------------------------------------------

/// s_i = q_out(noise(N(clamp_z(sum_j f_exp(q_in(clip(x_j))))) * f_exp(q_in(clip(x_i)))))
std::vector<double> optmax_forward(std::span<const double> x, const OptmaxParams& p,
                                   Rng* rng = nullptr);

/// s_i = q_out(noise(f_sig(q_in(clip(x_i + bias)))))
std::vector<double> optmoid_forward(std::span<const double> x, const OptmoidParams& p,
                                    Rng* rng = nullptr);

// ---------------------------------------------------------------------------
// Gradients (reverse mode on the smooth surrogate)
// ---------------------------------------------------------------------------

/// Smooth surrogate: noise off, quantizers straight-through (clip gradient —
/// identity inside [lo, hi], zero outside; forward value is the clipped,
/// unquantized signal so central differences agree with the reverse pass).
struct ActivationVjp {
  std::vector<double> value;
  // vjp(upstream cotangent) -> gradient w.r.t. x
  std::function<std::vector<double>(std::span<const double>)> vjp;
};

ActivationVjp softmax_vjp(std::span<const double> x);
ActivationVjp sigmoid_vjp(std::span<const double> x, double bias);
ActivationVjp optmax_vjp(std::span<const double> x, const OptmaxParams& p);
ActivationVjp optmoid_vjp(std::span<const double> x, const OptmoidParams& p);

enum class ActivationKind { Softmax, Sigmoid, Optmax, Optmoid };

ActivationKind activation_kind_from_string(const std::string& name);
std::string to_string(ActivationKind kind);

/// Row activations behind one switch: softmax/optmax normalize across the
/// vector, sigmoid/optmoid act element-wise.
struct ActivationSet {
  ActivationKind kind = ActivationKind::Softmax;
  double sigmoid_bias = 0.0;
  OptmaxParams optmax;
  OptmoidParams optmoid;

  std::vector<double> forward(std::span<const double> x, Rng* rng) const;
  ActivationVjp grad(std::span<const double> x) const;  // smooth surrogate
};

/// activation_grad per the module contract: the reverse-mode JVP/VJP entry
/// point used by gradient checks.
ActivationVjp activation_grad(const ActivationSet& set, std::span<const double> x);

// ---------------------------------------------------------------------------
// Parameter document (calibration file) round trip
// ---------------------------------------------------------------------------

struct CalibrationDoc {
  mzm::SineTransferModel transfer;  // the fitted device curve
  double transfer_residual = 0.0;
  OptmaxParams optmax;
  OptmoidParams optmoid;
};

std::string serialize_params(const CalibrationDoc& doc);
CalibrationDoc parse_params(const std::string& text);
void save_params(const CalibrationDoc& doc, const std::string& path);
CalibrationDoc load_params(const std::string& path);

}  // namespace eoattn::act
