#pragma once

// Folded-circuit construction for the kicked Ising chain: brickwork period
// gates, folded (doubled) gate tensors, boundary influence-matrix seeds, and
// the dual transfer matrices that grow an influence matrix by two sites.
//
// Brickwork convention: one period applies the odd-bond layer first (coupling
// with absorbed longitudinal fields), then the even-bond layer (coupling with
// absorbed transverse kicks).  Edge sites of finite open chains that miss a
// bond gate in a layer receive explicit leftover single-site factors.
//
// Influence-matrix leg convention: an IM over T periods has 2T legs.  Period
// tau (1-based) carries an in-leg at position 2*tau-1 and an out-leg at
// position 2*tau; both are system-side channel slots of the boundary gate
// that straddles the system/environment bond (that gate is part of the IM).
// For the environment on the right of the system the straddling gate is the
// even-bond gate; on the left it is the odd-bond gate.

#include <cmath>

#include "lcim/core.hpp"
#include "lcim/mps.hpp"
#include "lcim/tensor.hpp"

namespace lcim {

// ---------------------------------------------------------------------------
// Elementary gates.
// ---------------------------------------------------------------------------

inline Mat2 kick_gate(double g) {
  return std::cos(g) * Mat2::Identity() + cd(0, 1) * std::sin(g) * pauli_x();
}

inline Mat2 field_gate(double h) {
  Mat2 m = Mat2::Zero();
  m(0, 0) = std::exp(cd(0, h));
  m(1, 1) = std::exp(cd(0, -h));
  return m;
}

inline Mat4 coupling_gate(double J) {
  Mat4 m = Mat4::Zero();
  m(0, 0) = std::exp(cd(0, J));
  m(1, 1) = std::exp(cd(0, -J));
  m(2, 2) = std::exp(cd(0, -J));
  m(3, 3) = std::exp(cd(0, J));
  return m;
}

struct PeriodGates {
  Mat4 gate_even;       // (kick ⊗ kick) * coupling, applied on even bonds
  Mat4 gate_odd;        // coupling * (field ⊗ field), applied on odd bonds
  Mat2 leftover_kick;   // single-site kick for an edge missing its even bond
  Mat2 leftover_field;  // single-site field for an edge missing its odd bond
};

inline PeriodGates build_period_gates(const CircuitParams& p) {
  p.validate();
  PeriodGates out;
  out.gate_even = Mat4(kron(kick_gate(p.g), kick_gate(p.g))) * coupling_gate(p.J);
  out.gate_odd = coupling_gate(p.J) * Mat4(kron(field_gate(p.h), field_gate(p.h)));
  out.leftover_kick = kick_gate(p.g);
  out.leftover_field = field_gate(p.h);
  return out;
}

// ---------------------------------------------------------------------------
// Folding.
// ---------------------------------------------------------------------------

// Fold a two-site unitary into a rank-4 tensor over dim-4 folded legs,
// ordered (out_1, out_2, in_1, in_2).  Folded index a = 2*s_fwd + s_bwd.
inline DenseTensor fold_gate(const Mat4& u, bool strict = true) {
  if (strict && (u * u.adjoint() - Mat4::Identity()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("fold_gate: input is not unitary");
  DenseTensor f({4, 4, 4, 4});
  for (std::size_t of1 = 0; of1 < 2; ++of1)
    for (std::size_t ob1 = 0; ob1 < 2; ++ob1)
      for (std::size_t of2 = 0; of2 < 2; ++of2)
        for (std::size_t ob2 = 0; ob2 < 2; ++ob2)
          for (std::size_t if1 = 0; if1 < 2; ++if1)
            for (std::size_t ib1 = 0; ib1 < 2; ++ib1)
              for (std::size_t if2 = 0; if2 < 2; ++if2)
                for (std::size_t ib2 = 0; ib2 < 2; ++ib2)
                  f.at(2 * of1 + ob1, 2 * of2 + ob2, 2 * if1 + ib1, 2 * if2 + ib2) =
                      u(static_cast<Eigen::Index>(2 * of1 + of2),
                        static_cast<Eigen::Index>(2 * if1 + if2)) *
                      std::conj(u(static_cast<Eigen::Index>(2 * ob1 + ob2),
                                  static_cast<Eigen::Index>(2 * ib1 + ib2)));
  return f;
}

// ---------------------------------------------------------------------------
// Leg seeds and boundary IMs.
// ---------------------------------------------------------------------------

// Folded leg vector of the per-site initial state.
inline Vec4 initial_leg_vector(const CircuitParams& p) {
  p.validate();
  return vec_op(p.site_rho());
}

// Empty-environment IM: per period the in/out legs are joined by the
// pass-through wire sum_a |a>|a>; bond 4 inside periods, 1 between periods.
inline TemporalMPS build_obc_im(std::size_t T) {
  if (T < 1) throw ConfigError("build_obc_im: T must be >= 1");
  TemporalMPS m;
  for (std::size_t tau = 0; tau < T; ++tau) {
    DenseTensor in({1, 4, 4});
    DenseTensor out({4, 4, 1});
    for (std::size_t a = 0; a < 4; ++a) {
      in.at(0, a, a) = cd(1, 0);
      out.at(a, a, 0) = cd(1, 0);
    }
    m.sites.push_back(std::move(in));
    m.sites.push_back(std::move(out));
  }
  return m;
}

enum class EnvSide { right, left };

// Perfect-dephaser IM: the environment leg is traced out and refreshed to the
// maximally mixed state after every period, so the state factorizes over
// periods.  Each period carries the straddling gate's channel factor
//   B(a_in, a_out) = sum_{b_out, b_in} F[gate](.., b_out, .., b_in)
//                    * trace(b_out) * (I/2)(b_in)
// with the gate that couples the boundary site to the first environment site
// (the even-bond gate on the right, the odd-bond gate on the left).  Bonds
// are 4 inside a period and 1 across period boundaries.  At the dual-unitary
// couplings |g| = |J| = pi/4 this is the exact environment IM.
inline TemporalMPS build_pd_im(const CircuitParams& p, EnvSide side = EnvSide::right) {
  p.validate();
  const PeriodGates gates = build_period_gates(p);
  const DenseTensor f = fold_gate(side == EnvSide::right ? gates.gate_even : gates.gate_odd);
  const Vec4 tr = vec_id();
  const Vec4 mix = vec_mix();
  DenseTensor pair({4, 4});
  for (std::size_t a_in = 0; a_in < 4; ++a_in)
    for (std::size_t a_out = 0; a_out < 4; ++a_out) {
      cd acc(0, 0);
      for (std::size_t bo = 0; bo < 4; ++bo)
        for (std::size_t bi = 0; bi < 4; ++bi) {
          const cd fe = side == EnvSide::right ? f.at(a_out, bo, a_in, bi)
                                               : f.at(bo, a_out, bi, a_in);
          acc += fe * tr(static_cast<Eigen::Index>(bo)) * mix(static_cast<Eigen::Index>(bi));
        }
      pair.at(a_in, a_out) = acc;
    }
  TemporalMPS m;
  for (std::size_t tau = 0; tau < p.T; ++tau) {
    DenseTensor in({1, 4, 4});
    DenseTensor out({4, 4, 1});
    for (std::size_t a = 0; a < 4; ++a) {
      in.at(0, a, a) = cd(1, 0);
      for (std::size_t o = 0; o < 4; ++o) out.at(a, o, 0) = pair.at(a, o);
    }
    m.sites.push_back(std::move(in));
    m.sites.push_back(std::move(out));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Dual transfer matrices.
// ---------------------------------------------------------------------------

namespace detail {

// Interior site tensors of the dual transfer MPO for the given side.  The
// temporal bond carries the folded states (a, b) of the two environment
// sites being grown, encoded as a*4 + b; the mid-period bond carries (x, o)
// with x the grown site's state and o the out-leg value, encoded x*4 + o.
inline void transfer_period_tensors(const PeriodGates& gates, EnvSide side,
                                    DenseTensor& m_in, DenseTensor& m_out) {
  const DenseTensor fe = fold_gate(gates.gate_even);
  const DenseTensor fo = fold_gate(gates.gate_odd);
  m_in = DenseTensor({16, 4, 4, 16});
  m_out = DenseTensor({16, 4, 4, 16});
  if (side == EnvSide::right) {
    // In-leg position: odd layer on the pair, then the straddling even gate
    // consumes the new in-leg; the old in-leg threads into the comb wire.
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b)
        for (std::size_t iv = 0; iv < 4; ++iv)
          for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t x = 0; x < 4; ++x)
              for (std::size_t o = 0; o < 4; ++o) {
                cd v(0, 0);
                for (std::size_t xt = 0; xt < 4; ++xt)
                  v += fo.at(xt, iv, a, b) * fe.at(o, x, i, xt);
                m_in.at(a * 4 + b, iv, i, x * 4 + o) = v;
              }
    // Out-leg position: emit the out-leg; the old out-leg becomes the state
    // of the nearer grown site.
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t o = 0; o < 4; ++o)
        for (std::size_t ov = 0; ov < 4; ++ov)
          m_out.at(x * 4 + o, ov, o, x * 4 + ov) = cd(1, 0);
  } else {
    // In-leg position: the straddling odd gate consumes the new in-leg and
    // the nearer grown site's state; the old in-leg threads into the wire.
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b)
        for (std::size_t iv = 0; iv < 4; ++iv)
          for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t x = 0; x < 4; ++x)
              for (std::size_t o = 0; o < 4; ++o)
                m_in.at(a * 4 + b, iv, i, x * 4 + o) =
                    (iv == b) ? fo.at(o, x, i, a) : cd(0, 0);
    // Out-leg position: even layer on the pair after the old out-leg has
    // replaced the farther site's state.
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t o = 0; o < 4; ++o)
        for (std::size_t ov = 0; ov < 4; ++ov)
          for (std::size_t oo = 0; oo < 4; ++oo)
            for (std::size_t ap = 0; ap < 4; ++ap)
              for (std::size_t bp = 0; bp < 4; ++bp)
                m_out.at(x * 4 + o, ov, oo, ap * 4 + bp) =
                    (oo == o) ? fe.at(bp, ap, ov, x) : cd(0, 0);
  }
}

}  // namespace detail

// Dual transfer matrix over 2T leg positions with the initial-state closure
// at tau=0 and the trace closure at tau=T contracted in.  Acting on the
// exact IM of an L-site environment yields the exact IM of L+2 sites.
inline TransferMPO build_transfer_mpo(const CircuitParams& p, EnvSide side = EnvSide::right) {
  p.validate();
  const PeriodGates gates = build_period_gates(p);
  DenseTensor m_in, m_out;
  detail::transfer_period_tensors(gates, side, m_in, m_out);

  const Vec4 rho = initial_leg_vector(p);
  DenseTensor first({1, 4, 4, 16});
  for (std::size_t iv = 0; iv < 4; ++iv)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t xo = 0; xo < 16; ++xo) {
        cd v(0, 0);
        for (std::size_t a = 0; a < 4; ++a)
          for (std::size_t b = 0; b < 4; ++b)
            v += rho(static_cast<Eigen::Index>(a)) * rho(static_cast<Eigen::Index>(b)) *
                 m_in.at(a * 4 + b, iv, i, xo);
        first.at(0, iv, i, xo) = v;
      }

  const Vec4 id = vec_id();
  DenseTensor last({16, 4, 4, 1});
  for (std::size_t xo = 0; xo < 16; ++xo)
    for (std::size_t ov = 0; ov < 4; ++ov)
      for (std::size_t oo = 0; oo < 4; ++oo) {
        cd v(0, 0);
        for (std::size_t ap = 0; ap < 4; ++ap)
          for (std::size_t bp = 0; bp < 4; ++bp)
            v += m_out.at(xo, ov, oo, ap * 4 + bp) * id(static_cast<Eigen::Index>(ap)) *
                 id(static_cast<Eigen::Index>(bp));
        last.at(xo, ov, oo, 0) = v;
      }

  TransferMPO mpo;
  for (std::size_t tau = 1; tau <= p.T; ++tau) {
    mpo.sites.push_back(tau == 1 ? first : m_in);
    mpo.sites.push_back(tau == p.T ? last : m_out);
  }
  mpo.check_consistent();
  return mpo;
}

}  // namespace lcim
