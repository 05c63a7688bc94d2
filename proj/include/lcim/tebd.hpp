#pragma once

// Finite-chain brickwork evolution baselines on an open chain sized so the
// mid-chain site is causally shielded from the edges:
//   * tebd_quench: Schroedinger-picture wave-function evolution (physical
//     dimension 2) from a pure product state, reporting a mid-chain
//     polarization series;
//   * tebd_autocorr: Heisenberg-picture evolution of the vectorized mid-chain
//     operator (physical dimension 4), reporting the infinite-temperature
//     autocorrelator normalized to 1 at t = 0.
// Both use the exact same period gates as the temporal transfer construction
// (including the literal single-site edge factors of the dense reference), so
// comparisons against the influence-matrix pipeline involve bit-identical
// circuits.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lcim/core.hpp"
#include "lcim/folded.hpp"
#include "lcim/mps.hpp"
#include "lcim/observe.hpp"
#include "lcim/tensor.hpp"

namespace lcim {

// Spatial chains reuse the generic MPS container; site index = chain site.
using SpatialMPS = TemporalMPS;

struct TebdPoint {
  std::size_t t = 0;       // periods elapsed
  double value = 0.0;      // mid-chain expectation / normalized autocorrelator
  double discarded = 0.0;  // cumulative relative squared weight dropped so far
};

namespace detail {

// In-place square-matrix action on the physical leg of a {bl, d, br} tensor.
inline void apply_phys_matrix(DenseTensor& t, const MatX& m) {
  if (t.rank() != 3) throw std::invalid_argument("apply_phys_matrix: tensor must be rank 3");
  const std::size_t bl = t.shape[0], d = t.shape[1], br = t.shape[2];
  if (static_cast<std::size_t>(m.rows()) != d || static_cast<std::size_t>(m.cols()) != d)
    throw std::invalid_argument("apply_phys_matrix: dimension mismatch");
  std::vector<cd> col(d);
  for (std::size_t b = 0; b < bl; ++b)
    for (std::size_t r = 0; r < br; ++r) {
      for (std::size_t q = 0; q < d; ++q) col[q] = t.at(b, q, r);
      for (std::size_t p = 0; p < d; ++p) {
        cd acc(0, 0);
        for (std::size_t q = 0; q < d; ++q)
          acc += m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) * col[q];
        t.at(b, p, r) = acc;
      }
    }
}

// Exact one-site moves of the orthogonality center (state must already be
// canonical with ortho_center set, as after canonicalize()).
inline void shift_center_right(SpatialMPS& m) {
  const std::size_t c = m.ortho_center.value();
  DenseTensor u, sv;
  split_site_lr(m.sites[c], std::nullopt, 0.0, u, sv);
  m.sites[c] = std::move(u);
  m.sites[c + 1] = absorb_left(sv, m.sites[c + 1]);
  m.ortho_center = c + 1;
}

inline void shift_center_left(SpatialMPS& m) {
  const std::size_t c = m.ortho_center.value();
  DenseTensor us, v;
  split_site_rl(m.sites[c], std::nullopt, 0.0, us, v);
  m.sites[c] = std::move(v);
  m.sites[c - 1] = absorb_right(m.sites[c - 1], us);
  m.ortho_center = c - 1;
}

inline void move_center(SpatialMPS& m, std::size_t to) {
  if (!m.ortho_center.has_value()) throw std::invalid_argument("move_center: no center");
  while (m.ortho_center.value() < to) shift_center_right(m);
  while (m.ortho_center.value() > to) shift_center_left(m);
}

// Two-site gate on bond (b, b+1) with truncation to chi at that bond; the
// gate acts on the merged physical pair (site-b leg major).  Returns the
// relative squared weight dropped.  The orthogonality center ends at b + 1.
inline double apply_bond_gate(SpatialMPS& m, std::size_t b, const MatX& gate,
                              std::size_t chi, double tol) {
  if (b + 1 >= m.n_sites()) throw std::invalid_argument("apply_bond_gate: bond out of range");
  move_center(m, b);
  DenseTensor theta = contract_pair(m.sites[b], m.sites[b + 1], {{2, 0}});
  const std::size_t bl = theta.shape[0], d0 = theta.shape[1], d1 = theta.shape[2],
                    br = theta.shape[3];
  DenseTensor merged = theta.reshaped({bl, d0 * d1, br});
  apply_phys_matrix(merged, gate);
  DenseTensor split_view = merged.reshaped({bl, d0, d1 * br});
  DenseTensor u, sv;
  double disc = 0.0;
  split_site_lr(split_view, chi, tol, u, sv, nullptr, &disc);
  m.sites[b] = std::move(u);
  m.sites[b + 1] = sv.reshaped({sv.shape[0], d1, br});
  m.ortho_center = b + 1;
  return disc;
}

// Single-site gates are unitary in both pictures, so they preserve canonical
// structure and can be applied in place without moving the center.
inline void apply_site_gate(SpatialMPS& m, std::size_t i, const MatX& u) {
  apply_phys_matrix(m.sites.at(i), u);
}

// One Schroedinger period on the open chain, matching the dense reference
// gate for gate: field on site 0, odd bonds, field on the last site when L is
// even, then even bonds and a kick on the last site when L is odd.  Returns
// the relative squared weight dropped over the period.
inline double state_period(SpatialMPS& m, const PeriodGates& g, std::size_t chi, double tol) {
  const std::size_t L = m.n_sites();
  double kept = 1.0;
  apply_site_gate(m, 0, g.leftover_field);
  for (std::size_t b = 1; b + 1 < L; b += 2)
    kept *= 1.0 - apply_bond_gate(m, b, g.gate_odd, chi, tol);
  if (L % 2 == 0 && L >= 2) apply_site_gate(m, L - 1, g.leftover_field);
  for (std::size_t b = 0; b + 1 < L; b += 2)
    kept *= 1.0 - apply_bond_gate(m, b, g.gate_even, chi, tol);
  if (L % 2 == 1) apply_site_gate(m, L - 1, g.leftover_kick);
  return 1.0 - kept;
}

// Folded adjoint of a two-site unitary: the superoperator O -> u^dag O u on
// the merged pair of folded legs, as a 16x16 matrix.
inline MatX folded_adjoint_gate(const Mat4& u) {
  const DenseTensor f = fold_gate(Mat4(u.adjoint()));
  MatX out(16, 16);
  Eigen::Map<const RowMat> view(f.data.data(), 16, 16);
  out = view;
  return out;
}

// One Heisenberg period: the adjoint action applies the Schroedinger layers
// in reversed order with each gate replaced by its folded adjoint.
inline double heisenberg_period(SpatialMPS& m, const PeriodGates& g, std::size_t chi,
                                double tol) {
  const std::size_t L = m.n_sites();
  const MatX even_adj = folded_adjoint_gate(g.gate_even);
  const MatX odd_adj = folded_adjoint_gate(g.gate_odd);
  const Mat4 kick_adj = superop_conj(Mat2(g.leftover_kick.adjoint()));
  const Mat4 field_adj = superop_conj(Mat2(g.leftover_field.adjoint()));
  double kept = 1.0;
  if (L % 2 == 1) apply_site_gate(m, L - 1, kick_adj);
  for (std::size_t b = 0; b + 1 < L; b += 2)
    kept *= 1.0 - apply_bond_gate(m, b, even_adj, chi, tol);
  if (L % 2 == 0 && L >= 2) apply_site_gate(m, L - 1, field_adj);
  for (std::size_t b = 1; b + 1 < L; b += 2)
    kept *= 1.0 - apply_bond_gate(m, b, odd_adj, chi, tol);
  apply_site_gate(m, 0, field_adj);
  return 1.0 - kept;
}

// Normalized single-site expectation of a wave-function MPS.
inline double local_expectation(SpatialMPS& m, std::size_t i, const Mat2& op) {
  move_center(m, i);
  const DenseTensor& c = m.sites[i];
  const std::size_t bl = c.shape[0], d = c.shape[1], br = c.shape[2];
  if (d != 2) throw std::invalid_argument("local_expectation: physical dimension must be 2");
  cd num(0, 0);
  double den = 0.0;
  for (std::size_t b = 0; b < bl; ++b)
    for (std::size_t r = 0; r < br; ++r) {
      for (std::size_t p = 0; p < d; ++p) {
        den += std::norm(c.at(b, p, r));
        for (std::size_t q = 0; q < d; ++q)
          num += std::conj(c.at(b, p, r)) *
                 op(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) *
                 c.at(b, q, r);
      }
    }
  if (den <= 0.0) throw std::invalid_argument("local_expectation: zero-norm state");
  return (num / den).real();
}

// Unit-norm pure state underlying a density matrix; rejects mixed input.
inline Eigen::Vector2cd pure_state_of(const Mat2& rho) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(rho);
  if (es.eigenvalues()(1) < 1.0 - 1e-10)
    throw ConfigError("tebd_quench: initial density matrix must be pure");
  return es.eigenvectors().col(1);
}

inline void check_chain_size(std::size_t L, std::size_t T, std::size_t chi,
                             const char* who) {
  if (chi < 1) throw ConfigError(std::string(who) + ": chi must be >= 1");
  if (T < 1) throw ConfigError(std::string(who) + ": need at least one period");
  if (L < 2 * T + 4)
    throw ConfigError(std::string(who) +
                      ": need L >= 2*T + 4 so the mid-chain site stays edge-free");
}

}  // namespace detail

// Wave-function evolution from the pure product initial state of p; returns
// the mid-chain polarization along `axis` after each period (t = 0 included),
// with the cumulative discarded truncation weight.
inline std::vector<TebdPoint> tebd_quench(const CircuitParams& p, std::size_t L,
                                          std::size_t chi, std::size_t T, Axis axis,
                                          double tol = 0.0) {
  p.validate();
  detail::check_chain_size(L, T, chi, "tebd_quench");
  if (p.initial_state != InitialStateKind::product_pure)
    throw ConfigError("tebd_quench: wave-function evolution needs a pure product initial state");
  const Eigen::Vector2cd psi0 = detail::pure_state_of(p.rho0);
  const PeriodGates gates = build_period_gates(p);
  SpatialMPS m;
  for (std::size_t i = 0; i < L; ++i) {
    DenseTensor t({1, 2, 1});
    t.at(0, 0, 0) = psi0(0);
    t.at(0, 1, 0) = psi0(1);
    m.sites.push_back(std::move(t));
  }
  m = canonicalize(m, 0);
  const std::size_t q = mid_site(L);
  const Mat2& op = axis_matrix(axis);
  std::vector<TebdPoint> out;
  double kept_total = 1.0;
  out.push_back({0, detail::local_expectation(m, q, op), 0.0});
  for (std::size_t t = 1; t <= T; ++t) {
    const double d = detail::state_period(m, gates, chi, tol);
    kept_total *= 1.0 - d;
    out.push_back({t, detail::local_expectation(m, q, op), 1.0 - kept_total});
  }
  return out;
}

// Heisenberg evolution of the vectorized mid-chain operator; returns the
// infinite-temperature autocorrelator C(t) = tr[op(t) op] / tr[op op],
// normalized so C(0) = 1, with the cumulative discarded truncation weight.
inline std::vector<TebdPoint> tebd_autocorr(const CircuitParams& p, std::size_t L,
                                            std::size_t chi, std::size_t T, const Mat2& op,
                                            double tol = 0.0) {
  p.validate();
  detail::check_chain_size(L, T, chi, "tebd_autocorr");
  if (op.norm() <= 0.0) throw ConfigError("tebd_autocorr: operator must be nonzero");
  const PeriodGates gates = build_period_gates(p);
  const std::size_t q = mid_site(L);
  std::vector<Vec4> legs(L, vec_id());
  legs[q] = vec_op(op);
  SpatialMPS ref = product_mps(legs);
  SpatialMPS m = canonicalize(ref, 0);
  const auto [l0, p0] = overlap_log(ref, m);
  std::vector<TebdPoint> out;
  out.push_back({0, 1.0, 0.0});
  double kept_total = 1.0;
  for (std::size_t t = 1; t <= T; ++t) {
    const double d = detail::heisenberg_period(m, gates, chi, tol);
    kept_total *= 1.0 - d;
    const auto [lt, pt] = overlap_log(ref, m);
    double c = 0.0;
    if (std::isfinite(lt)) c = (std::exp(lt - l0) * pt * std::conj(p0)).real();
    out.push_back({t, c, 1.0 - kept_total});
  }
  return out;
}

}  // namespace lcim
