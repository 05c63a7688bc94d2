#pragma once

// Semiclassical quasiparticle description of temporal-entanglement growth for
// the kick-and-couple circuit without a longitudinal field (h = 0), where the
// dynamics maps onto free Majorana fermions:
//   * kic_dispersion: quasienergy band omega(k) and group velocities from the
//     2x2 single-particle Bloch matrix of one period;
//   * s_curve: the entanglement-rate barrier curve s(xi) over the geometric
//     ratio xi = (environment depth in cells) / (periods);
//   * v_te: the small-xi slope (temporal-entanglement velocity);
//   * predict_entropy: the finite-(L, T) prediction at a general temporal cut.
//
// Unit convention: one spatial cell = 2 sites (one period applies two gate
// layers).  Stored Dispersion::velocity is in sites per period (bounded by 2);
// the reduced-unit integrals below use cell velocities (velocity / 2, bounded
// by 1), which makes the barrier curve vanish at xi = 1/2.  Pair excursions
// from the boundary re-enter after 2*(depth in cells)/v_cell periods, and a
// pair contributes to a temporal cut that separates its two endpoint times.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lcim/core.hpp"

namespace lcim {

struct Dispersion {
  std::vector<double> k_samples;  // uniform midpoint grid over [-pi, pi)
  std::vector<double> omega;      // quasienergy per period, in [0, pi]
  std::vector<double> velocity;   // group velocity, sites per period (|v| <= 2)
  double omega_min = 0.0;
  double omega_max = 0.0;
  bool flat_band = false;  // g or J at a multiple of pi/2: no transport
};

// Entropy contribution per quasiparticle pair as a function of quasienergy.
struct PairWeight {
  std::function<double(double)> w;

  static double max_weight() { return 2.0 * std::log(2.0); }
  static double default_weight() { return 0.93 * std::log(2.0); }

  static PairWeight constant(double value) {
    return PairWeight([value](double) { return value; });
  }

  PairWeight() : PairWeight(constant(default_weight())) {}
  explicit PairWeight(std::function<double(double)> f) : w(std::move(f)) {}

  double operator()(double omega) const {
    if (!w) throw ConfigError("PairWeight: empty weight function");
    const double value = w(omega);
    if (value < -1e-12 || value > max_weight() + 1e-12)
      throw ConfigError("PairWeight: weight must lie in [0, 2 ln 2]");
    return value;
  }
};

namespace detail {

// One-period single-particle Bloch matrix at momentum k (per-site cell) in
// the Majorana flavor basis: kick rotation followed by the coupling rotation
// that mixes a site's second flavor with the next site's first.
inline Mat2 bloch_floquet(double g, double J, double k) {
  Mat2 rk;
  rk << std::cos(2 * g), std::sin(2 * g), -std::sin(2 * g), std::cos(2 * g);
  Mat2 rd;
  const cd phase = std::exp(cd(0, 1) * k);
  rd << std::cos(2 * J), -std::sin(2 * J) * std::conj(phase),
      std::sin(2 * J) * phase, std::cos(2 * J);
  return rk * rd;
}

inline Mat2 bloch_floquet_dk(double g, double J, double k) {
  Mat2 rk;
  rk << std::cos(2 * g), std::sin(2 * g), -std::sin(2 * g), std::cos(2 * g);
  Mat2 rdp;
  const cd phase = std::exp(cd(0, 1) * k);
  rdp << 0.0, cd(0, 1) * std::sin(2 * J) * std::conj(phase),
      cd(0, 1) * std::sin(2 * J) * phase, 0.0;
  return rk * rdp;
}

inline double bloch_omega(double g, double J, double k) {
  const double half_tr = 0.5 * bloch_floquet(g, J, k).trace().real();
  return std::acos(std::clamp(half_tr, -1.0, 1.0));
}

}  // namespace detail

// Quasienergy band of the h = 0 circuit sampled on a uniform midpoint grid
// (which avoids the degenerate eigenphase pairs at k = 0 and k = pi that
// boundary-touching bands would otherwise hit).
inline Dispersion kic_dispersion(double g, double J, std::size_t n_k) {
  if (n_k < 64 || n_k % 2 != 0)
    throw ConfigError("kic_dispersion: n_k must be even and >= 64");
  Dispersion d;
  d.flat_band = std::abs(std::sin(2 * J) * std::sin(2 * g)) < 1e-12;
  const double step = 2.0 * M_PI / static_cast<double>(n_k);
  d.k_samples.reserve(n_k);
  d.omega.reserve(n_k);
  d.velocity.reserve(n_k);
  for (std::size_t m = 0; m < n_k; ++m) {
    const double k = -M_PI + (static_cast<double>(m) + 0.5) * step;
    const Mat2 f = detail::bloch_floquet(g, J, k);
    const double half_tr = std::clamp(0.5 * f.trace().real(), -1.0, 1.0);
    const double omega = std::acos(half_tr);
    d.k_samples.push_back(k);
    d.omega.push_back(omega);
    if (d.flat_band) {
      d.velocity.push_back(0.0);
      continue;
    }
    // Eigenvector of the e^{+i omega} branch, then the eigenvalue derivative
    // d omega / dk = Re[-i e^{-i omega} <u| dF/dk |u>].
    const cd lambda = std::exp(cd(0, 1) * omega);
    Eigen::Vector2cd u;
    const Eigen::Vector2cd cand1(f(0, 1), lambda - f(0, 0));
    const Eigen::Vector2cd cand2(lambda - f(1, 1), f(1, 0));
    if (cand1.squaredNorm() >= cand2.squaredNorm() && cand1.squaredNorm() > 1e-24) {
      u = cand1.normalized();
    } else if (cand2.squaredNorm() > 1e-24) {
      u = cand2.normalized();
    } else {
      u = std::abs(f(0, 0) - lambda) <= std::abs(f(1, 1) - lambda)
              ? Eigen::Vector2cd(1, 0)
              : Eigen::Vector2cd(0, 1);
    }
    const cd dlambda = (u.adjoint() * detail::bloch_floquet_dk(g, J, k) * u)(0, 0);
    const double v_cell = (cd(0, -1) * std::conj(lambda) * dlambda).real();
    d.velocity.push_back(2.0 * v_cell);
  }
  const auto [mn, mx] = std::minmax_element(d.omega.begin(), d.omega.end());
  d.omega_min = *mn;
  d.omega_max = *mx;
  return d;
}

namespace detail {

// Common integral behind s_curve and predict_entropy:
//   (1/2pi) \int_0^pi dk w(omega(k)) * G(v_cell(k))
// with G(v) = max(0, min(t v, T v - two_ell) - max(0, t v - two_ell)), the
// band measure taken in momentum (where the band-edge 1/v divergences cancel)
// and exact piecewise-linear integration of G between grid samples, splitting
// segments at the kink velocities two_ell/T, two_ell/(T-t), two_ell/t.
inline double entropy_integral(const Dispersion& d, const PairWeight& w, double two_ell,
                               double T, double t) {
  if (!(T > 0)) throw std::invalid_argument("entropy integral: T must be positive");
  if (t < -1e-12 || t > T + 1e-12)
    throw std::invalid_argument("entropy integral: cut must lie in [0, T]");
  t = std::clamp(t, 0.0, T);
  if (t <= 0.0 || t >= T || two_ell <= 0.0) return 0.0;
  const std::size_t n = d.k_samples.size();
  if (n < 2 || d.omega.size() != n || d.velocity.size() != n)
    throw std::invalid_argument("entropy integral: malformed dispersion");

  const auto big_g = [&](double v) {
    const double a = std::min(t * v, T * v - two_ell);
    const double b = std::max(0.0, t * v - two_ell);
    return std::max(0.0, a - b);
  };
  const double kinks[3] = {two_ell / T, two_ell / (T - t), two_ell / t};

  const double step = 2.0 * M_PI / static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    const double va = std::abs(d.velocity[i]) / 2.0, vb = std::abs(d.velocity[j]) / 2.0;
    const double oa = d.omega[i], ob = d.omega[j];
    double cuts[5] = {0.0, 1.0, 1.0, 1.0, 1.0};
    std::size_t n_cuts = 2;
    if (std::abs(vb - va) > 1e-15) {
      for (double vk : kinks) {
        const double s = (vk - va) / (vb - va);
        if (s > 1e-12 && s < 1.0 - 1e-12) cuts[n_cuts++] = s;
      }
    }
    std::sort(cuts, cuts + n_cuts);
    for (std::size_t c = 0; c + 1 < n_cuts; ++c) {
      const double s1 = cuts[c], s2 = cuts[c + 1];
      if (s2 - s1 <= 0) continue;
      const double g1 = big_g(va + (vb - va) * s1);
      const double g2 = big_g(va + (vb - va) * s2);
      const double om = oa + (ob - oa) * 0.5 * (s1 + s2);
      acc += w(om) * 0.5 * (g1 + g2) * (s2 - s1) * step;
    }
  }
  return acc / (4.0 * M_PI);
}

}  // namespace detail

// Barrier curve s(xi): entanglement per period across the half-time cut as a
// function of xi = depth_cells / periods.  Vanishes for xi >= 1/2.
inline std::vector<std::pair<double, double>> s_curve(const Dispersion& d,
                                                      const PairWeight& w,
                                                      const std::vector<double>& xi_grid) {
  std::vector<std::pair<double, double>> out;
  out.reserve(xi_grid.size());
  for (double xi : xi_grid) {
    if (xi < 0) throw std::invalid_argument("s_curve: xi must be >= 0");
    out.emplace_back(xi, detail::entropy_integral(d, w, 2.0 * xi, 1.0, 0.5));
  }
  return out;
}

// Temporal-entanglement velocity: the small-xi slope of s_curve.  Integrated
// in momentum, where the band-edge inverse-velocity divergence cancels.
inline double v_te(const Dispersion& d, const PairWeight& w) {
  if (d.flat_band) throw ConfigError("v_te: flat band has no transport");
  if (d.omega.empty()) throw std::invalid_argument("v_te: empty dispersion");
  double acc = 0.0;
  for (double om : d.omega) acc += w(om);
  return acc / static_cast<double>(d.omega.size());
}

// Predicted temporal entanglement of a depth-L (sites) environment evolved
// for T periods, across the temporal cut at t periods.  At t = T/2 this
// equals T * s(L / (2T)) identically.
inline double predict_entropy(const Dispersion& d, const PairWeight& w, double L, double T,
                              double t) {
  if (L < 0) throw std::invalid_argument("predict_entropy: L must be >= 0");
  if (!(T > 0)) throw std::invalid_argument("predict_entropy: T must be positive");
  if (t < 0 || t > T) throw std::invalid_argument("predict_entropy: t must lie in [0, T]");
  return detail::entropy_integral(d, w, L, T, t);
}

}  // namespace lcim
