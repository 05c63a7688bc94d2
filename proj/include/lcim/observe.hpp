#pragma once

// Local dynamics of one embedded spin: its folded worldline is closed between
// a left and a right influence matrix (IM) with optional operator insertions.
//
// Wire geometry per period: the running folded state (a vectorized 2x2
// operator) enters the left IM's in-slot, re-emerges from its out-slot after
// the odd half-period, enters the right IM's in-slot and re-emerges after the
// even half-period.  Both boundary gates live inside the IMs, so the wire
// itself is a plain delta chain apart from insertions.  Insertion slots
// follow the half-step convention of Insertion: slot 0 acts on the initial
// state, slot 2*tau-1 sits between the two half-periods of period tau, and
// slot 2*tau follows period tau.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lcim/folded.hpp"
#include "lcim/mps.hpp"

namespace lcim {

enum class Axis { X, Y, Z };

inline const Mat2& axis_matrix(Axis a) {
  switch (a) {
    case Axis::X:
      return pauli_x();
    case Axis::Y:
      return pauli_y();
    case Axis::Z:
    default:
      return pauli_z();
  }
}

namespace detail {

// In-place application of a 4x4 superoperator to the folded index of the
// carried tensor {left bond, 4, right bond}.
inline void apply_wire_superop(DenseTensor& c, const Mat4& m) {
  const std::size_t bl = c.shape.at(0), br = c.shape.at(2);
  DenseTensor out({bl, 4, br});
  for (std::size_t i = 0; i < bl; ++i)
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t j = 0; j < br; ++j) {
        cd acc(0, 0);
        for (std::size_t b = 0; b < 4; ++b)
          acc += m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * c.at(i, b, j);
        out.at(i, a, j) = acc;
      }
  c = std::move(out);
}

}  // namespace detail

// Keldysh contraction value of the system worldline between the two IMs.
// rho0_S seeds the wire; the final folded state is closed with the trace
// vector.  With exact IMs and no insertions the result is 1.
inline cd evaluate_sandwich(const TemporalMPS& im_left, const TemporalMPS& im_right,
                            const CircuitParams& p, const Mat2& rho0_S,
                            const std::vector<Insertion>& insertions) {
  p.validate();
  im_left.check_consistent();
  im_right.check_consistent();
  if (im_left.n_sites() != 2 * p.T || im_right.n_sites() != 2 * p.T)
    throw std::invalid_argument("evaluate_sandwich: IMs must have 2T legs");
  for (const auto& ins : insertions)
    if (ins.half_step > 2 * p.T)
      throw std::invalid_argument("evaluate_sandwich: insertion half-step out of range");

  // Carried tensor: {left-IM bond, folded wire index, right-IM bond}.
  DenseTensor c({1, 4, 1});
  const Vec4 r0 = vec_op(rho0_S);
  for (std::size_t a = 0; a < 4; ++a) c.at(0, a, 0) = r0(static_cast<Eigen::Index>(a));

  auto apply_slot = [&](std::size_t slot) {
    for (const auto& ins : insertions)
      if (ins.half_step == slot) detail::apply_wire_superop(c, ins.superop());
  };

  apply_slot(0);
  for (std::size_t tau = 1; tau <= p.T; ++tau) {
    const DenseTensor& l_in = im_left.sites[2 * tau - 2];
    const DenseTensor& l_out = im_left.sites[2 * tau - 1];
    // Feed the wire into the left in-slot, then pick up the left out-slot.
    DenseTensor mid = contract_pair(c, l_in, {{0, 0}, {1, 1}});  // {br, bl'}
    c = contract_pair(mid, l_out, {{1, 0}});                     // {br, 4, bl''}
    c = c.transposed({2, 1, 0});                                 // {bl, 4, br}
    apply_slot(2 * tau - 1);
    const DenseTensor& r_in = im_right.sites[2 * tau - 2];
    const DenseTensor& r_out = im_right.sites[2 * tau - 1];
    mid = contract_pair(c, r_in, {{2, 0}, {1, 1}});  // {bl, br'}
    c = contract_pair(mid, r_out, {{1, 0}});         // {bl, 4, br''}
    apply_slot(2 * tau);
  }

  cd value(0, 0);
  const Vec4& tr = vec_id();
  for (std::size_t a = 0; a < 4; ++a)
    value += tr(static_cast<Eigen::Index>(a)) * c.at(0, a, 0);
  return value * std::exp(cd(im_left.log_norm + im_right.log_norm, 0.0));
}

// <axis(t)> for t = 0..T_max from per-period IM pairs (ims_*[t] holds the
// 2t-leg state; slot 0 of each list is an unused placeholder).  The chain and
// the embedded site share the product initial state recorded in p.
inline std::vector<std::pair<std::size_t, double>> polarization_series(
    const std::vector<TemporalMPS>& ims_left, const std::vector<TemporalMPS>& ims_right,
    const CircuitParams& p, Axis axis) {
  p.validate();
  if (ims_left.size() < 2 || ims_right.size() < 2)
    throw std::invalid_argument("polarization_series: need IMs for at least T = 1");
  const std::size_t t_max = std::min(ims_left.size(), ims_right.size()) - 1;
  const Mat2& op = axis_matrix(axis);

  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(t_max + 1);
  out.emplace_back(0, (op * p.site_rho()).trace().real());
  for (std::size_t t = 1; t <= t_max; ++t) {
    CircuitParams pt = p;
    pt.T = t;
    const Insertion ins{2 * t, op, InsertionSide::forward_branch};
    const cd v = evaluate_sandwich(ims_left[t], ims_right[t], pt, p.site_rho(), {ins});
    out.emplace_back(t, v.real());
  }
  return out;
}

// Infinite-temperature autocorrelator C(t) = Tr[op(t) op] / 2, normalized so
// C(0) = 1 for any Pauli op, via forward insertions at slots 0 and 2t.
inline std::vector<std::pair<std::size_t, double>> autocorrelator_series(
    const std::vector<TemporalMPS>& ims_left, const std::vector<TemporalMPS>& ims_right,
    const CircuitParams& p, const Mat2& op) {
  p.validate();
  if (p.initial_state != InitialStateKind::infinite_temperature)
    throw ConfigError("autocorrelator_series: requires the infinite-temperature state");
  if (ims_left.size() < 2 || ims_right.size() < 2)
    throw std::invalid_argument("autocorrelator_series: need IMs for at least T = 1");
  const std::size_t t_max = std::min(ims_left.size(), ims_right.size()) - 1;

  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(t_max + 1);
  out.emplace_back(0, 0.5 * (op * op).trace().real());
  for (std::size_t t = 1; t <= t_max; ++t) {
    CircuitParams pt = p;
    pt.T = t;
    const std::vector<Insertion> ins = {{0, op, InsertionSide::forward_branch},
                                        {2 * t, op, InsertionSide::forward_branch}};
    const cd v = evaluate_sandwich(ims_left[t], ims_right[t], pt, p.site_rho(), ins);
    out.emplace_back(t, v.real());
  }
  return out;
}

}  // namespace lcim
