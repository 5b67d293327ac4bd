#include "eoattn/activations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "eoattn/config.hpp"
#include "eoattn/csv.hpp"

namespace eoattn::act {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }
}  // namespace

// ---------------------------------------------------------------------------
// Quantization
// ---------------------------------------------------------------------------

double quantize(double v, const QuantSpec& spec) {
  if (!spec.enabled()) return v;
  const double u = clip(v, spec.lo, spec.hi);
  const double levels = std::ldexp(1.0, spec.bits);  // 2^bits
  const double pos = (u - spec.lo) / (spec.hi - spec.lo) * levels;
  double idx = spec.rounding == QuantRounding::Truncate ? std::floor(pos) : std::round(pos);
  idx = clip(idx, 0.0, levels);
  return spec.lo + idx * (spec.hi - spec.lo) / levels;
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

void apply_noise(std::span<double> s, const NoiseSpec& spec, Rng& rng) {
  if (spec.mode == NoiseMode::None || spec.sigma == 0.0) return;
  switch (spec.mode) {
    case NoiseMode::Additive: {
      double sd = spec.sigma;
      if (spec.reference == NoiseReference::SignalMax) {
        double mx = 0.0;
        for (double v : s) mx = std::max(mx, v);
        sd = spec.sigma * mx;
      }
      if (sd <= 0.0) return;
      for (double& v : s) v += rng.normal(0.0, sd);
      break;
    }
    case NoiseMode::Multiplicative:
      for (double& v : s) v *= rng.normal(1.0, spec.sigma);
      break;
    case NoiseMode::None:
      break;
  }
}

double apply_noise_scalar(double s, double signal_max, const NoiseSpec& spec, Rng& rng) {
  if (spec.mode == NoiseMode::None || spec.sigma == 0.0) return s;
  if (spec.mode == NoiseMode::Multiplicative) return s * rng.normal(1.0, spec.sigma);
  const double sd =
      spec.reference == NoiseReference::SignalMax ? spec.sigma * signal_max : spec.sigma;
  if (sd <= 0.0) return s;
  return s + rng.normal(0.0, sd);
}

// ---------------------------------------------------------------------------
// Slope segments
// ---------------------------------------------------------------------------

double SineSegment::value(double x) const {
  if (x <= x_lo) return sat_lo;
  if (x >= x_hi) return sat_hi;
  const double t = mzm::transmission(model, encoder.encode(x));
  return clip((t - t_min) / t_span, 0.0, 1.0);
}

double SineSegment::deriv(double x) const {
  if (x <= x_lo || x >= x_hi) return 0.0;
  // Normalization is (T - t_min)/t_span with positive span, so the slope
  // orientation rides on the sign of dT/dV.
  const double dt = mzm::transmission_deriv(model, encoder.encode(x));
  return dt * encoder.gamma / t_span;
}

SineSegment make_segment(const mzm::SineTransferModel& model, mzm::SlopeSegment kind,
                         double x_lo, double x_hi) {
  if (!(x_lo < x_hi)) {
    throw Error(ErrorCode::DegenerateRange, "segment needs x_lo < x_hi");
  }
  const mzm::VoltageWindow win = mzm::slope_window(model, kind);
  SineSegment seg;
  seg.model = model;
  seg.encoder = mzm::make_encoder(x_lo, x_hi, win);
  seg.x_lo = x_lo;
  seg.x_hi = x_hi;
  const double t_at_lo = mzm::transmission(model, win.v_min);
  const double t_at_hi = mzm::transmission(model, win.v_max);
  seg.t_min = std::min(t_at_lo, t_at_hi);
  seg.t_span = std::abs(t_at_hi - t_at_lo);
  seg.sat_lo = t_at_lo <= t_at_hi ? 0.0 : 1.0;
  seg.sat_hi = 1.0 - seg.sat_lo;
  return seg;
}

// ---------------------------------------------------------------------------
// Optmax stages
// ---------------------------------------------------------------------------

double ExpStage::value(double x) const {
  return kind == Kind::ExactExp ? std::exp(x) : segment.value(x);
}

double ExpStage::deriv(double x) const {
  return kind == Kind::ExactExp ? std::exp(x) : segment.deriv(x);
}

double NormModel::value(double z) const {
  if (kind == Kind::ExactReciprocal) return 1.0 / z;
  return alpha * (beta + (1.0 - beta) * f_rec.value(z));
}

double NormModel::deriv(double z) const {
  if (kind == Kind::ExactReciprocal) return -1.0 / (z * z);
  return alpha * (1.0 - beta) * f_rec.deriv(z);
}

NormFitResult fit_norm_factor(const std::function<double(double)>& f_rec, double z_min,
                              double z_max, int grid_points) {
  if (!(z_min > 0.0)) {
    throw Error(ErrorCode::DegenerateDomain, "1/z target needs z_min > 0");
  }
  if (!(z_min < z_max) || grid_points < 2) {
    throw Error(ErrorCode::DegenerateDomain, "norm fit needs z_min < z_max and >= 2 grid points");
  }

  // N(z) = p + q*f(z) with p = alpha*beta, q = alpha*(1-beta); both must be
  // nonnegative for beta in [0, 1]. Closed-form 2x2 least squares, then
  // projection onto the feasible cone if a coefficient goes negative.
  double sff = 0, sf = 0, n = grid_points;
  double st = 0, sft = 0;
  std::vector<double> fs(grid_points), ts(grid_points);
  for (int i = 0; i < grid_points; ++i) {
    const double z = z_min + (z_max - z_min) * double(i) / (grid_points - 1);
    const double f = f_rec(z);
    const double t = 1.0 / z;
    fs[i] = f;
    ts[i] = t;
    sff += f * f;
    sf += f;
    st += t;
    sft += f * t;
  }
  // Normal equations: [n sf; sf sff] [p q]^T = [st sft]^T
  const double det = n * sff - sf * sf;
  double p, q;
  if (std::abs(det) < 1e-14 * n * std::max(sff, 1.0)) {
    // constant f_rec: fold everything into p
    p = st / n;
    q = 0.0;
  } else {
    p = (st * sff - sf * sft) / det;
    q = (n * sft - sf * st) / det;
  }
  if (p < 0.0) {
    p = 0.0;
    q = sff > 0 ? std::max(sft / sff, 0.0) : 0.0;
  } else if (q < 0.0) {
    q = 0.0;
    p = st / n;
  }

  NormFitResult out;
  out.alpha = p + q;
  out.beta = out.alpha > 0 ? clip(p / out.alpha, 0.0, 1.0) : 0.0;
  double rss = 0;
  for (int i = 0; i < grid_points; ++i) {
    const double r = p + q * fs[i] - ts[i];
    rss += r * r;
  }
  out.residual = rss;
  return out;
}

NormModel make_norm_model(const mzm::SineTransferModel& model, double z_min, double z_max,
                          int grid_points) {
  NormModel norm;
  norm.kind = NormModel::Kind::Sine;
  norm.f_rec = make_segment(model, mzm::SlopeSegment::Falling, z_min, z_max);
  norm.z_min = z_min;
  norm.z_max = z_max;
  const NormFitResult fit = fit_norm_factor([&](double z) { return norm.f_rec.value(z); },
                                            z_min, z_max, grid_points);
  norm.alpha = fit.alpha;
  norm.beta = fit.beta;
  norm.fit_residual = fit.residual;
  return norm;
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

OptmaxParams ideal_optmax() {
  OptmaxParams p;
  p.x_min = -kInf;
  p.x_max = kInf;
  p.f_exp.kind = ExpStage::Kind::ExactExp;
  p.norm.kind = NormModel::Kind::ExactReciprocal;
  p.norm.z_min = std::numeric_limits<double>::min();
  p.norm.z_max = kInf;
  p.q_in.bits = 0;
  p.q_out.bits = 0;
  p.noise.mode = NoiseMode::None;
  return p;
}

OptmaxParams calibrate_optmax(const mzm::SineTransferModel& model, double x_min, double x_max,
                              double z_min, double z_max, const QuantSpec& q_in,
                              const QuantSpec& q_out, const NoiseSpec& noise) {
  OptmaxParams p;
  p.x_min = x_min;
  p.x_max = x_max;
  p.f_exp.kind = ExpStage::Kind::Sine;
  p.f_exp.segment = make_segment(model, mzm::SlopeSegment::Rising, x_min, x_max);
  p.norm = make_norm_model(model, z_min, z_max);
  p.q_in = q_in;
  p.q_in.lo = x_min;  // DAC range is the clip range
  p.q_in.hi = x_max;
  p.q_out = q_out;
  p.noise = noise;
  return p;
}

namespace {

// Universal normalized full swing as a function of position in [-s, s]; the
// fitted model only changes the voltage axis, not this shape.
double raised_cosine(double u, double s) {
  if (u <= -s) return 0.0;
  if (u >= s) return 1.0;
  return 0.5 * (1.0 - std::cos(std::numbers::pi * (u + s) / (2.0 * s)));
}

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double optmoid_objective(double s, int grid_points, double domain) {
  double acc = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double u = -domain + 2.0 * domain * double(i) / (grid_points - 1);
    const double d = raised_cosine(u, s) - logistic(u);
    acc += d * d;
  }
  return acc / grid_points;
}

}  // namespace

OptmoidParams calibrate_optmoid(const mzm::SineTransferModel& model, double bias,
                                double clip_half_width, const QuantSpec& q_in,
                                const QuantSpec& q_out, const NoiseSpec& noise) {
  double s = clip_half_width;
  if (s <= 0.0) {
    // 1-D least squares over the half width: coarse scan, then golden section.
    const int pts = 2049;
    const double domain = 12.0;
    double best_s = 1.0, best_obj = kInf;
    for (int i = 0; i <= 128; ++i) {
      const double cand = 0.5 + (16.0 - 0.5) * double(i) / 128.0;
      const double obj = optmoid_objective(cand, pts, domain);
      if (obj < best_obj) {
        best_obj = obj;
        best_s = cand;
      }
    }
    double lo = std::max(0.25, best_s - 0.5), hi = best_s + 0.5;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = optmoid_objective(c, pts, domain), fd = optmoid_objective(d, pts, domain);
    for (int it = 0; it < 80; ++it) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - gr * (hi - lo);
        fc = optmoid_objective(c, pts, domain);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + gr * (hi - lo);
        fd = optmoid_objective(d, pts, domain);
      }
    }
    s = 0.5 * (lo + hi);
  }

  OptmoidParams p;
  p.bias = bias;
  p.x_min = -s;
  p.x_max = s;
  p.f_sig = make_segment(model, mzm::SlopeSegment::FullSwing, -s, s);
  p.q_in = q_in;
  p.q_in.lo = -s;
  p.q_in.hi = s;
  p.q_out = q_out;
  p.noise = noise;

  // Residuals recorded on a dense grid that covers the saturated tails; the
  // forward model can never deviate from the logistic by more than this max
  // anywhere inside the recorded domain.
  const int pts = 8193;
  const double domain = std::max(12.0, s + 4.0);
  double max_abs = 0.0, rss = 0.0;
  for (int i = 0; i < pts; ++i) {
    const double u = -domain + 2.0 * domain * double(i) / (pts - 1);
    const double d = p.f_sig.value(u) - logistic(u);
    max_abs = std::max(max_abs, std::abs(d));
    rss += d * d;
  }
  p.calib_residual_max = max_abs;
  p.calib_residual_rms = std::sqrt(rss / pts);
  return p;
}

// ---------------------------------------------------------------------------
// Reference activations
// ---------------------------------------------------------------------------

std::vector<double> softmax_ref(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "softmax of an empty vector");
  const double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> sigmoid_ref(std::span<const double> x, double bias) {
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = logistic(x[i] + bias);
  return out;
}

double default_bias(long n) {
  if (n < 1) throw Error(ErrorCode::EmptyInput, "sequence length must be >= 1");
  return -std::log(double(n));
}

// ---------------------------------------------------------------------------
// Forward models
// ---------------------------------------------------------------------------

std::vector<double> optmax_forward(std::span<const double> x, const OptmaxParams& p, Rng* rng) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "optmax of an empty vector");
  if (p.noise.mode != NoiseMode::None && p.noise.sigma > 0.0 && !rng) {
    throw Error(ErrorCode::MissingRng, "noise enabled but no random source given");
  }
  std::vector<double> s(x.size());
  double z = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double xi = quantize(clip(x[i], p.x_min, p.x_max), p.q_in);
    s[i] = p.f_exp.value(xi);
    z += s[i];
  }
  z = clip(z, p.norm.z_min, p.norm.z_max);
  const double norm = p.norm.value(z);
  for (double& v : s) v *= norm;
  if (rng) apply_noise(s, p.noise, *rng);
  for (double& v : s) v = quantize(v, p.q_out);
  return s;
}

std::vector<double> optmoid_forward(std::span<const double> x, const OptmoidParams& p, Rng* rng) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "optmoid of an empty vector");
  if (p.noise.mode != NoiseMode::None && p.noise.sigma > 0.0 && !rng) {
    throw Error(ErrorCode::MissingRng, "noise enabled but no random source given");
  }
  std::vector<double> s(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double xi = quantize(clip(x[i] + p.bias, p.x_min, p.x_max), p.q_in);
    s[i] = p.f_sig.value(xi);
  }
  if (rng) apply_noise(s, p.noise, *rng);
  for (double& v : s) v = quantize(v, p.q_out);
  return s;
}

// ---------------------------------------------------------------------------
// Gradients (smooth surrogate)
// ---------------------------------------------------------------------------

ActivationVjp softmax_vjp(std::span<const double> x) {
  ActivationVjp out;
  out.value = softmax_ref(x);
  std::vector<double> s = out.value;
  out.vjp = [s](std::span<const double> ds) {
    double dot = 0.0;
    for (size_t i = 0; i < s.size(); ++i) dot += ds[i] * s[i];
    std::vector<double> dx(s.size());
    for (size_t i = 0; i < s.size(); ++i) dx[i] = s[i] * (ds[i] - dot);
    return dx;
  };
  return out;
}

ActivationVjp sigmoid_vjp(std::span<const double> x, double bias) {
  ActivationVjp out;
  out.value = sigmoid_ref(x, bias);
  std::vector<double> s = out.value;
  out.vjp = [s](std::span<const double> ds) {
    std::vector<double> dx(s.size());
    for (size_t i = 0; i < s.size(); ++i) dx[i] = ds[i] * s[i] * (1.0 - s[i]);
    return dx;
  };
  return out;
}

ActivationVjp optmax_vjp(std::span<const double> x, const OptmaxParams& p) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "optmax of an empty vector");
  const size_t n = x.size();
  std::vector<double> g(n), dg(n);
  double z = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double xi = clip(x[i], p.x_min, p.x_max);
    g[i] = p.f_exp.value(xi);
    // straight-through: the clip (and q_in range) gate the gradient
    dg[i] = (x[i] >= p.x_min && x[i] <= p.x_max) ? p.f_exp.deriv(xi) : 0.0;
    z += g[i];
  }
  const bool z_interior = z > p.norm.z_min && z < p.norm.z_max;
  const double zc = clip(z, p.norm.z_min, p.norm.z_max);
  const double norm_v = p.norm.value(zc);
  const double norm_d = z_interior ? p.norm.deriv(zc) : 0.0;

  ActivationVjp out;
  out.value.resize(n);
  std::vector<double> out_mask(n, 1.0);
  for (size_t i = 0; i < n; ++i) {
    double s = norm_v * g[i];
    if (p.q_out.enabled()) {
      out_mask[i] = (s >= p.q_out.lo && s <= p.q_out.hi) ? 1.0 : 0.0;
      s = clip(s, p.q_out.lo, p.q_out.hi);
    }
    out.value[i] = s;
  }
  out.vjp = [g, dg, norm_v, norm_d, out_mask](std::span<const double> ds) {
    const size_t m = g.size();
    double common = 0.0;
    for (size_t i = 0; i < m; ++i) common += ds[i] * out_mask[i] * g[i];
    std::vector<double> dx(m);
    for (size_t j = 0; j < m; ++j) {
      dx[j] = dg[j] * (ds[j] * out_mask[j] * norm_v + common * norm_d);
    }
    return dx;
  };
  return out;
}

ActivationVjp optmoid_vjp(std::span<const double> x, const OptmoidParams& p) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "optmoid of an empty vector");
  const size_t n = x.size();
  ActivationVjp out;
  out.value.resize(n);
  std::vector<double> d(n);
  for (size_t i = 0; i < n; ++i) {
    const double u = x[i] + p.bias;
    const double uc = clip(u, p.x_min, p.x_max);
    double s = p.f_sig.value(uc);
    double gate = (u >= p.x_min && u <= p.x_max) ? p.f_sig.deriv(uc) : 0.0;
    if (p.q_out.enabled()) {
      if (s < p.q_out.lo || s > p.q_out.hi) gate = 0.0;
      s = clip(s, p.q_out.lo, p.q_out.hi);
    }
    out.value[i] = s;
    d[i] = gate;
  }
  out.vjp = [d](std::span<const double> ds) {
    std::vector<double> dx(d.size());
    for (size_t i = 0; i < d.size(); ++i) dx[i] = ds[i] * d[i];
    return dx;
  };
  return out;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

ActivationKind activation_kind_from_string(const std::string& name) {
  if (name == "softmax") return ActivationKind::Softmax;
  if (name == "sigmoid") return ActivationKind::Sigmoid;
  if (name == "optmax") return ActivationKind::Optmax;
  if (name == "optmoid") return ActivationKind::Optmoid;
  throw Error(ErrorCode::ConfigError, "unknown nonlinearity '" + name + "'");
}

std::string to_string(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::Softmax: return "softmax";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Optmax: return "optmax";
    case ActivationKind::Optmoid: return "optmoid";
  }
  return "?";
}

std::vector<double> ActivationSet::forward(std::span<const double> x, Rng* rng) const {
  switch (kind) {
    case ActivationKind::Softmax:
      return softmax_ref(x);
    case ActivationKind::Sigmoid:
      return sigmoid_ref(x, sigmoid_bias);
    case ActivationKind::Optmax:
      return optmax_forward(x, optmax, rng);
    case ActivationKind::Optmoid:
      return optmoid_forward(x, optmoid, rng);
  }
  throw Error(ErrorCode::ConfigError, "bad activation kind");
}

ActivationVjp ActivationSet::grad(std::span<const double> x) const {
  switch (kind) {
    case ActivationKind::Softmax:
      return softmax_vjp(x);
    case ActivationKind::Sigmoid:
      return sigmoid_vjp(x, sigmoid_bias);
    case ActivationKind::Optmax:
      return optmax_vjp(x, optmax);
    case ActivationKind::Optmoid:
      return optmoid_vjp(x, optmoid);
  }
  throw Error(ErrorCode::ConfigError, "bad activation kind");
}

ActivationVjp activation_grad(const ActivationSet& set, std::span<const double> x) {
  return set.grad(x);
}

// ---------------------------------------------------------------------------
// Parameter document
// ---------------------------------------------------------------------------

namespace {

const char* noise_mode_name(NoiseMode m) {
  switch (m) {
    case NoiseMode::None: return "none";
    case NoiseMode::Additive: return "additive";
    case NoiseMode::Multiplicative: return "multiplicative";
  }
  return "?";
}

NoiseMode noise_mode_from(const std::string& s) {
  if (s == "none") return NoiseMode::None;
  if (s == "additive") return NoiseMode::Additive;
  if (s == "multiplicative") return NoiseMode::Multiplicative;
  throw Error(ErrorCode::ParseError, "unknown noise mode '" + s + "'");
}

void write_quant(io::ConfigDoc& doc, const std::string& sec, const std::string& prefix,
                 const QuantSpec& q) {
  doc.set(sec, prefix + "_bits", (long long)q.bits);
  doc.set(sec, prefix + "_lo", q.lo);
  doc.set(sec, prefix + "_hi", q.hi);
  doc.set(sec, prefix + "_rounding",
          q.rounding == QuantRounding::Truncate ? std::string("truncate") : std::string("nearest"));
}

QuantSpec read_quant(const io::ConfigDoc& doc, const std::string& sec, const std::string& prefix) {
  QuantSpec q;
  q.bits = (int)doc.get_int(sec, prefix + "_bits");
  q.lo = doc.get_double(sec, prefix + "_lo");
  q.hi = doc.get_double(sec, prefix + "_hi");
  const std::string r = doc.get_string(sec, prefix + "_rounding");
  if (r == "truncate") {
    q.rounding = QuantRounding::Truncate;
  } else if (r == "nearest") {
    q.rounding = QuantRounding::Nearest;
  } else {
    throw Error(ErrorCode::ParseError, "unknown quantizer rounding '" + r + "'");
  }
  return q;
}

void write_noise(io::ConfigDoc& doc, const std::string& sec, const NoiseSpec& n) {
  doc.set(sec, "noise_mode", std::string(noise_mode_name(n.mode)));
  doc.set(sec, "noise_sigma", n.sigma);
  doc.set(sec, "noise_reference",
          n.reference == NoiseReference::Absolute ? std::string("absolute")
                                                  : std::string("signal-max"));
}

NoiseSpec read_noise(const io::ConfigDoc& doc, const std::string& sec) {
  NoiseSpec n;
  n.mode = noise_mode_from(doc.get_string(sec, "noise_mode"));
  n.sigma = doc.get_double(sec, "noise_sigma");
  const std::string r = doc.get_string(sec, "noise_reference");
  if (r == "absolute") {
    n.reference = NoiseReference::Absolute;
  } else if (r == "signal-max") {
    n.reference = NoiseReference::SignalMax;
  } else {
    throw Error(ErrorCode::ParseError, "unknown noise reference '" + r + "'");
  }
  return n;
}

}  // namespace

std::string serialize_params(const CalibrationDoc& doc) {
  io::ConfigDoc out;
  out.set("transfer", "a", doc.transfer.a);
  out.set("transfer", "b", doc.transfer.b);
  out.set("transfer", "c", doc.transfer.c);
  out.set("transfer", "window_v_min", doc.transfer.window.v_min);
  out.set("transfer", "window_v_max", doc.transfer.window.v_max);
  out.set("transfer", "fit_residual", doc.transfer_residual);

  out.set("optmax", "x_min", doc.optmax.x_min);
  out.set("optmax", "x_max", doc.optmax.x_max);
  out.set("optmax", "exp_kind",
          doc.optmax.f_exp.kind == ExpStage::Kind::Sine ? std::string("sine")
                                                        : std::string("exact-exp"));
  out.set("optmax", "norm_kind",
          doc.optmax.norm.kind == NormModel::Kind::Sine ? std::string("sine")
                                                        : std::string("exact-reciprocal"));
  out.set("optmax", "z_min", doc.optmax.norm.z_min);
  out.set("optmax", "z_max", doc.optmax.norm.z_max);
  out.set("optmax", "alpha", doc.optmax.norm.alpha);
  out.set("optmax", "beta", doc.optmax.norm.beta);
  out.set("optmax", "norm_fit_residual", doc.optmax.norm.fit_residual);
  write_quant(out, "optmax", "q_in", doc.optmax.q_in);
  write_quant(out, "optmax", "q_out", doc.optmax.q_out);
  write_noise(out, "optmax", doc.optmax.noise);

  out.set("optmoid", "bias", doc.optmoid.bias);
  out.set("optmoid", "x_min", doc.optmoid.x_min);
  out.set("optmoid", "x_max", doc.optmoid.x_max);
  out.set("optmoid", "calib_residual_max", doc.optmoid.calib_residual_max);
  out.set("optmoid", "calib_residual_rms", doc.optmoid.calib_residual_rms);
  write_quant(out, "optmoid", "q_in", doc.optmoid.q_in);
  write_quant(out, "optmoid", "q_out", doc.optmoid.q_out);
  write_noise(out, "optmoid", doc.optmoid.noise);

  return out.serialize();
}

CalibrationDoc parse_params(const std::string& text) {
  const io::ConfigDoc in = io::ConfigDoc::parse(text, "<params>");
  CalibrationDoc doc;
  doc.transfer.a = in.get_double("transfer", "a");
  doc.transfer.b = in.get_double("transfer", "b");
  doc.transfer.c = in.get_double("transfer", "c");
  doc.transfer.window.v_min = in.get_double("transfer", "window_v_min");
  doc.transfer.window.v_max = in.get_double("transfer", "window_v_max");
  doc.transfer_residual = in.get_double("transfer", "fit_residual");

  OptmaxParams& om = doc.optmax;
  om.x_min = in.get_double("optmax", "x_min");
  om.x_max = in.get_double("optmax", "x_max");
  const std::string exp_kind = in.get_string("optmax", "exp_kind");
  const std::string norm_kind = in.get_string("optmax", "norm_kind");
  om.norm.z_min = in.get_double("optmax", "z_min");
  om.norm.z_max = in.get_double("optmax", "z_max");
  om.norm.alpha = in.get_double("optmax", "alpha");
  om.norm.beta = in.get_double("optmax", "beta");
  om.norm.fit_residual = in.get_double("optmax", "norm_fit_residual");
  if (exp_kind == "sine") {
    om.f_exp.kind = ExpStage::Kind::Sine;
    om.f_exp.segment = make_segment(doc.transfer, mzm::SlopeSegment::Rising, om.x_min, om.x_max);
  } else {
    om.f_exp.kind = ExpStage::Kind::ExactExp;
  }
  if (norm_kind == "sine") {
    om.norm.kind = NormModel::Kind::Sine;
    om.norm.f_rec =
        make_segment(doc.transfer, mzm::SlopeSegment::Falling, om.norm.z_min, om.norm.z_max);
  } else {
    om.norm.kind = NormModel::Kind::ExactReciprocal;
  }
  om.q_in = read_quant(in, "optmax", "q_in");
  om.q_out = read_quant(in, "optmax", "q_out");
  om.noise = read_noise(in, "optmax");

  OptmoidParams& od = doc.optmoid;
  od.bias = in.get_double("optmoid", "bias");
  od.x_min = in.get_double("optmoid", "x_min");
  od.x_max = in.get_double("optmoid", "x_max");
  od.calib_residual_max = in.get_double("optmoid", "calib_residual_max");
  od.calib_residual_rms = in.get_double("optmoid", "calib_residual_rms");
  od.f_sig = make_segment(doc.transfer, mzm::SlopeSegment::FullSwing, od.x_min, od.x_max);
  od.q_in = read_quant(in, "optmoid", "q_in");
  od.q_out = read_quant(in, "optmoid", "q_out");
  od.noise = read_noise(in, "optmoid");
  return doc;
}

void save_params(const CalibrationDoc& doc, const std::string& path) {
  io::write_text_atomic(path, serialize_params(doc));
}

CalibrationDoc load_params(const std::string& path) {
  return parse_params(io::read_text(path));
}

}  // namespace eoattn::act
