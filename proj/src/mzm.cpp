#include "eoattn/mzm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "eoattn/csv.hpp"

namespace eoattn::mzm {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}  // namespace

double SineTransferModel::v_pi() const { return kPi / b; }
double SineTransferModel::period() const { return kTwoPi / b; }

double transmission(const SineTransferModel& model, double v) {
  return model.a * (1.0 + std::sin(model.b * v + model.c));
}

double transmission_deriv(const SineTransferModel& model, double v) {
  return model.a * model.b * std::cos(model.b * v + model.c);
}

VoltageWindow slope_window(const SineTransferModel& model, SlopeSegment segment) {
  // Landmarks in phase theta = b*V + c, base instance (k = 0):
  //   minimum transmission  -pi/2
  //   max positive gradient  0
  //   max negative gradient  pi
  //   maximum transmission   pi/2
  double theta_lo = 0.0, theta_hi = 0.0;
  switch (segment) {
    case SlopeSegment::Rising:
      theta_lo = -kPi / 2.0;
      theta_hi = 0.0;
      break;
    case SlopeSegment::Falling:
      theta_lo = kPi;
      theta_hi = 1.5 * kPi;
      break;
    case SlopeSegment::FullSwing:
      theta_lo = -kPi / 2.0;
      theta_hi = kPi / 2.0;
      break;
  }

  // Pick the period index whose landmark-pair center is nearest the center
  // of the model's own validity window.
  const double theta_center0 = 0.5 * (theta_lo + theta_hi);
  const double theta_window_center = model.b * model.window.center() + model.c;
  const double k = std::round((theta_window_center - theta_center0) / kTwoPi);

  VoltageWindow out;
  out.v_min = (theta_lo + kTwoPi * k - model.c) / model.b;
  out.v_max = (theta_hi + kTwoPi * k - model.c) / model.b;

  const double period = model.period();
  if (out.v_min < model.window.v_min - period || out.v_max > model.window.v_max + period) {
    throw Error(ErrorCode::WindowOutOfRange,
                "segment landmarks lie more than one period outside the fit window");
  }
  return out;
}

AffineEncoder make_encoder(double w_min, double w_max, const VoltageWindow& window) {
  if (!(w_min < w_max)) {
    throw Error(ErrorCode::DegenerateRange, "encoder needs w_min < w_max");
  }
  AffineEncoder enc;
  enc.gamma = (window.v_max - window.v_min) / (w_max - w_min);
  enc.delta = window.v_min - enc.gamma * w_min;
  enc.w_min = w_min;
  enc.w_max = w_max;
  return enc;
}

namespace {

struct Samples {
  std::vector<double> v;
  std::vector<double> t;
};

double residual_sq(const Samples& s, double a, double b, double c) {
  double acc = 0.0;
  for (size_t i = 0; i < s.v.size(); ++i) {
    const double r = a * (1.0 + std::sin(b * s.v[i] + c)) - s.t[i];
    acc += r * r;
  }
  return acc;
}

// For a trial phase rate, the best amplitude/phase follow from linear least
// squares of t - mean against {sin(b v), cos(b v), 1}.
struct TrialFit {
  double a, c, offset, rss;
};

TrialFit linear_trial(const Samples& s, double b) {
  // Solve min || A*sin(bv) + B*cos(bv) + D - t ||^2 (3x3 normal equations).
  double sss = 0, scc = 0, ssc = 0, ss = 0, sc = 0, n = double(s.v.size());
  double ts = 0, tc = 0, t1 = 0;
  for (size_t i = 0; i < s.v.size(); ++i) {
    const double si = std::sin(b * s.v[i]);
    const double ci = std::cos(b * s.v[i]);
    sss += si * si;
    scc += ci * ci;
    ssc += si * ci;
    ss += si;
    sc += ci;
    ts += s.t[i] * si;
    tc += s.t[i] * ci;
    t1 += s.t[i];
  }
  double m[3][4] = {{sss, ssc, ss, ts}, {ssc, scc, sc, tc}, {ss, sc, n, t1}};
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    if (std::abs(m[col][col]) < 1e-14) return {0, 0, 0, 1e300};
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int cc = col; cc < 4; ++cc) m[r][cc] -= f * m[col][cc];
    }
  }
  const double A = m[0][3] / m[0][0];
  const double B = m[1][3] / m[1][1];
  const double D = m[2][3] / m[2][2];
  TrialFit out;
  out.a = std::hypot(A, B);
  out.c = std::atan2(B, A);
  out.offset = D;
  double rss = 0;
  for (size_t i = 0; i < s.v.size(); ++i) {
    const double f = A * std::sin(b * s.v[i]) + B * std::cos(b * s.v[i]) + D;
    const double r = f - s.t[i];
    rss += r * r;
  }
  out.rss = rss;
  return out;
}

SineTransferModel initial_guess(const Samples& s, double span) {
  // Frequency scan over b; half-period coverage (pre-condition) bounds b from
  // below, the finest resolvable oscillation bounds it from above.
  std::vector<double> sorted = s.v;
  std::sort(sorted.begin(), sorted.end());
  double min_dv = span;
  for (size_t i = 1; i < sorted.size(); ++i) {
    const double dv = sorted[i] - sorted[i - 1];
    if (dv > 0) min_dv = std::min(min_dv, dv);
  }
  const double b_lo = 0.5 * kPi / span;
  const double b_hi = std::max(b_lo * 4.0, 0.5 * kPi / std::max(min_dv, span / 4096.0));

  double best_b = b_lo, best_rss = 1e300;
  const int steps = 600;
  for (int i = 0; i <= steps; ++i) {
    const double b = b_lo + (b_hi - b_lo) * double(i) / steps;
    const TrialFit f = linear_trial(s, b);
    if (f.rss < best_rss) {
      best_rss = f.rss;
      best_b = b;
    }
  }
  const TrialFit best = linear_trial(s, best_b);
  SineTransferModel guess;
  // The offset D approximates a; amplitude R approximates a as well. The
  // model family forces offset == amplitude, so seed with their mean.
  guess.a = std::max(0.5 * (best.a + std::max(best.offset, 0.0)), 1e-6);
  guess.b = best_b;
  guess.c = best.c;
  return guess;
}

void canonicalize(SineTransferModel& m) {
  if (m.a < 0) {
    // -a (1 + sin θ) is outside the family; flip through sin(θ+pi) instead.
    m.a = -m.a;
    m.c += kPi;
  }
  if (m.b < 0) {
    // a(1+sin(-bV+c)) == a(1+sin(bV + pi - c))
    m.b = -m.b;
    m.c = kPi - m.c;
  }
  m.c = std::remainder(m.c, kTwoPi);
}

}  // namespace

TransferFit fit_transfer(std::span<const std::pair<double, double>> samples,
                         std::optional<SineTransferModel> init) {
  if (samples.size() < 3) {
    throw Error(ErrorCode::DegenerateData, "need at least as many samples as parameters");
  }
  Samples s;
  s.v.reserve(samples.size());
  s.t.reserve(samples.size());
  double v_lo = samples[0].first, v_hi = samples[0].first;
  for (const auto& [v, t] : samples) {
    s.v.push_back(v);
    s.t.push_back(t);
    v_lo = std::min(v_lo, v);
    v_hi = std::max(v_hi, v);
  }
  if (!(v_hi > v_lo)) {
    throw Error(ErrorCode::DegenerateData, "all sample voltages are equal");
  }

  SineTransferModel m = init ? *init : initial_guess(s, v_hi - v_lo);

  // Levenberg-Marquardt on (a, b, c).
  double lambda = 1e-3;
  double rss = residual_sq(s, m.a, m.b, m.c);
  const int max_iter = 200;
  const double rel_tol = 1e-10;
  int iter = 0;
  bool converged = false;
  for (; iter < max_iter; ++iter) {
    // J^T J and J^T r with dr/da = 1+sin, dr/db = a v cos, dr/dc = a cos.
    double h[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double g[3] = {0, 0, 0};
    for (size_t i = 0; i < s.v.size(); ++i) {
      const double th = m.b * s.v[i] + m.c;
      const double sin_th = std::sin(th);
      const double cos_th = std::cos(th);
      const double r = m.a * (1.0 + sin_th) - s.t[i];
      const double j[3] = {1.0 + sin_th, m.a * s.v[i] * cos_th, m.a * cos_th};
      for (int p = 0; p < 3; ++p) {
        g[p] += j[p] * r;
        for (int q = 0; q < 3; ++q) h[p][q] += j[p] * j[q];
      }
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 40 && !stepped; ++attempt) {
      double a[3][3];
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) a[p][q] = h[p][q] + (p == q ? lambda * h[p][p] : 0.0);
      // Solve a * delta = -g.
      double rhs[3] = {-g[0], -g[1], -g[2]};
      double mprime[3][4];
      for (int p = 0; p < 3; ++p) {
        for (int q = 0; q < 3; ++q) mprime[p][q] = a[p][q];
        mprime[p][3] = rhs[p];
      }
      bool singular = false;
      for (int col = 0; col < 3 && !singular; ++col) {
        int piv = col;
        for (int r2 = col + 1; r2 < 3; ++r2)
          if (std::abs(mprime[r2][col]) > std::abs(mprime[piv][col])) piv = r2;
        std::swap(mprime[col], mprime[piv]);
        if (std::abs(mprime[col][col]) < 1e-300) {
          singular = true;
          break;
        }
        for (int r2 = 0; r2 < 3; ++r2) {
          if (r2 == col) continue;
          const double f = mprime[r2][col] / mprime[col][col];
          for (int cc = col; cc < 4; ++cc) mprime[r2][cc] -= f * mprime[col][cc];
        }
      }
      if (singular) {
        lambda *= 10.0;
        continue;
      }
      const double da = mprime[0][3] / mprime[0][0];
      const double db = mprime[1][3] / mprime[1][1];
      const double dc = mprime[2][3] / mprime[2][2];
      const double rss_new = residual_sq(s, m.a + da, m.b + db, m.c + dc);
      if (rss_new <= rss) {
        m.a += da;
        m.b += db;
        m.c += dc;
        lambda = std::max(lambda * 0.3, 1e-12);
        const double rel_change = (rss - rss_new) / std::max(rss, 1e-300);
        rss = rss_new;
        stepped = true;
        if (rel_change < rel_tol) {
          converged = true;
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (!stepped) {
      converged = true;  // damping exhausted: at a (local) minimum
    }
    if (converged) break;
  }
  if (!converged) {
    throw Error(ErrorCode::NonConvergence, "iteration cap hit before the residual settled");
  }

  canonicalize(m);
  m.window = {v_lo, v_hi};
  TransferFit out;
  out.model = m;
  out.residual_norm = std::sqrt(rss);
  out.iterations = iter + 1;
  return out;
}

std::vector<std::pair<double, double>> load_transfer_csv(const std::string& path) {
  io::CsvTable table = io::read_csv(path, {"voltage_V", "transmission"});
  std::vector<std::pair<double, double>> out;
  out.reserve(table.rows.size());
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    out.emplace_back(io::parse_double(row[0], path, i + 2),
                     io::parse_double(row[1], path, i + 2));
  }
  return out;
}

void save_transfer_csv(std::span<const std::pair<double, double>> samples,
                       const std::string& path) {
  io::CsvWriter w(path, {"voltage_V", "transmission"});
  for (const auto& [v, t] : samples) w.row({io::fmt(v), io::fmt(t)});
  w.commit();
}

}  // namespace eoattn::mzm
