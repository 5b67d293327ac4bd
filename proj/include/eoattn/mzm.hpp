#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eoattn/errors.hpp"

namespace eoattn::mzm {

struct VoltageWindow {
  double v_min = 0.0;
  double v_max = 0.0;

  double width() const { return v_max - v_min; }
  double center() const { return 0.5 * (v_min + v_max); }
  bool contains(double v) const { return v >= v_min && v <= v_max; }
};

/// Fitted interferometer transmission curve T(V) = a * (1 + sin(b*V + c)),
/// valid over `window`. a is half the peak transmission, b the phase rate in
/// rad/V and c the static phase offset. The half-wave voltage is pi/b.
struct SineTransferModel {
  double a = 0.5;
  double b = 1.0;
  double c = 0.0;
  VoltageWindow window;

  double v_pi() const;
  double period() const;  // 2*pi/b
};

double transmission(const SineTransferModel& model, double v);
double transmission_deriv(const SineTransferModel& model, double v);

/// Operating segment of the sinusoidal swing.
///   Rising:    transmission minimum -> maximum positive gradient (quadrature)
///   Falling:   maximum negative gradient (quadrature) -> transmission minimum
///   FullSwing: transmission minimum -> transmission maximum
enum class SlopeSegment { Rising, Falling, FullSwing };

/// Analytic voltage window for the requested segment, picking the landmark
/// pair whose center lies closest to the model's own validity window.
VoltageWindow slope_window(const SineTransferModel& model, SlopeSegment segment);

/// Range-preserving affine map from a digital domain [w_min, w_max] onto a
/// voltage window. encode() does not clip; clipping belongs to the
/// activation layer that owns the [x_min, x_max] range.
struct AffineEncoder {
  double gamma = 1.0;  // volts per digital unit
  double delta = 0.0;  // volts
  double w_min = 0.0;
  double w_max = 1.0;

  double encode(double w) const { return gamma * w + delta; }
};

AffineEncoder make_encoder(double w_min, double w_max, const VoltageWindow& window);

struct TransferFit {
  SineTransferModel model;
  double residual_norm = 0.0;  // sqrt(sum of squared residuals)
  int iterations = 0;
};

/// Least-squares sinusoid fit via damped Gauss-Newton with analytic Jacobian.
/// Without an init guess, the period is located by a trial-frequency scan
/// (discrete Fourier power over candidate b values) before refinement, which
/// avoids period aliasing. The result window is set to the sample span.
TransferFit fit_transfer(std::span<const std::pair<double, double>> samples,
                         std::optional<SineTransferModel> init = std::nullopt);

/// Two-column text ingestion, header `voltage_V,transmission`.
std::vector<std::pair<double, double>> load_transfer_csv(const std::string& path);
void save_transfer_csv(std::span<const std::pair<double, double>> samples,
                       const std::string& path);

}  // namespace eoattn::mzm
