#pragma once

// Exact dense references for small instances: influence-matrix vectors by
// brute-force contraction of the folded environment network, dense Schmidt
// entropies, and exact finite-chain Floquet dynamics.  Hard size caps throw
// SizeCapError instead of paging.

#include <cmath>
#include <cstring>

#include "lcim/core.hpp"
#include "lcim/folded.hpp"
#include "lcim/mps.hpp"
#include "lcim/tensor.hpp"

namespace lcim {

// Deep-end termination of the finite environment column.
//   wire: the last layer-gap is closed flush (no leftover single-site
//         factors), which makes the L-site IM exactly the (L/2)-fold
//         transfer-matrix image of the empty-environment IM.
//   literal_edges: leftover single-site kicks/fields are applied at the far
//         edge, matching the open-chain period operator used by
//         exact_dynamics.
// The cut site is attached through a diagonal coupling only, so the two
// terminations produce identical influence tensors whenever L >= 2; they
// differ only when the edge site sits directly next to the open legs (L = 1).
enum class EnvTermination { wire, literal_edges };

enum class ImBoundary { obc };

namespace detail {

// Dense environment superoperator state: n leg-blocks, each a 2^nq x 2^nq
// density-operator block, stored row-major as w[b][r][c].
struct EnvState {
  std::size_t n = 1;
  std::size_t nq = 0;
  std::vector<cd> w;

  std::size_t R() const { return std::size_t(1) << nq; }
};

// w <- (G on qubits q,q+1) applied to the ket (row) index of every block.
inline void rows_two_site(EnvState& e, std::size_t q, const Mat4& gate) {
  const std::size_t R = e.R();
  const std::size_t S = R >> (q + 2);
  const std::size_t P = std::size_t(1) << q;
  std::vector<cd> tmp(4 * R);
  for (std::size_t b = 0; b < e.n; ++b) {
    cd* blk = e.w.data() + b * R * R;
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t s = 0; s < S; ++s) {
        cd* rows[4];
        for (std::size_t m = 0; m < 4; ++m)
          rows[m] = blk + ((p * 4 + m) * S + s) * R;
        for (std::size_t m = 0; m < 4; ++m) {
          cd* t = tmp.data() + m * R;
          const cd g0 = gate(static_cast<Eigen::Index>(m), 0),
                   g1 = gate(static_cast<Eigen::Index>(m), 1),
                   g2 = gate(static_cast<Eigen::Index>(m), 2),
                   g3 = gate(static_cast<Eigen::Index>(m), 3);
          for (std::size_t c = 0; c < R; ++c)
            t[c] = g0 * rows[0][c] + g1 * rows[1][c] + g2 * rows[2][c] + g3 * rows[3][c];
        }
        for (std::size_t m = 0; m < 4; ++m)
          std::memcpy(rows[m], tmp.data() + m * R, R * sizeof(cd));
      }
  }
}

// w <- w (G on qubits q,q+1)^dagger applied to the bra (column) index.
inline void cols_two_site_dag(EnvState& e, std::size_t q, const Mat4& gate) {
  const std::size_t R = e.R();
  const std::size_t S = R >> (q + 2);
  const std::size_t P = std::size_t(1) << q;
  const std::size_t n_rows = e.n * R;
  cd tmp[4];
  for (std::size_t row = 0; row < n_rows; ++row) {
    cd* ptr = e.w.data() + row * R;
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t s = 0; s < S; ++s) {
        cd* cell[4];
        for (std::size_t m = 0; m < 4; ++m)
          cell[m] = ptr + (p * 4 + m) * S + s;
        for (std::size_t m = 0; m < 4; ++m) {
          tmp[m] = cd(0, 0);
          for (std::size_t j = 0; j < 4; ++j)
            tmp[m] += std::conj(gate(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j))) * *cell[j];
        }
        for (std::size_t m = 0; m < 4; ++m) *cell[m] = tmp[m];
      }
  }
}

inline void rows_one_site(EnvState& e, std::size_t q, const Mat2& gate) {
  const std::size_t R = e.R();
  const std::size_t S = R >> (q + 1);
  const std::size_t P = std::size_t(1) << q;
  std::vector<cd> tmp(2 * R);
  for (std::size_t b = 0; b < e.n; ++b) {
    cd* blk = e.w.data() + b * R * R;
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t s = 0; s < S; ++s) {
        cd* r0 = blk + ((p * 2 + 0) * S + s) * R;
        cd* r1 = blk + ((p * 2 + 1) * S + s) * R;
        for (std::size_t c = 0; c < R; ++c) {
          tmp[c] = gate(0, 0) * r0[c] + gate(0, 1) * r1[c];
          tmp[R + c] = gate(1, 0) * r0[c] + gate(1, 1) * r1[c];
        }
        std::memcpy(r0, tmp.data(), R * sizeof(cd));
        std::memcpy(r1, tmp.data() + R, R * sizeof(cd));
      }
  }
}

inline void cols_one_site_dag(EnvState& e, std::size_t q, const Mat2& gate) {
  const std::size_t R = e.R();
  const std::size_t S = R >> (q + 1);
  const std::size_t P = std::size_t(1) << q;
  const std::size_t n_rows = e.n * R;
  for (std::size_t row = 0; row < n_rows; ++row) {
    cd* ptr = e.w.data() + row * R;
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t s = 0; s < S; ++s) {
        cd* c0 = ptr + (p * 2 + 0) * S + s;
        cd* c1 = ptr + (p * 2 + 1) * S + s;
        const cd v0 = std::conj(gate(0, 0)) * *c0 + std::conj(gate(0, 1)) * *c1;
        const cd v1 = std::conj(gate(1, 0)) * *c0 + std::conj(gate(1, 1)) * *c1;
        *c0 = v0;
        *c1 = v1;
      }
  }
}

inline void conj_two_site(EnvState& e, std::size_t q, const Mat4& gate) {
  rows_two_site(e, q, gate);
  cols_two_site_dag(e, q, gate);
}

inline void conj_one_site(EnvState& e, std::size_t q, const Mat2& gate) {
  rows_one_site(e, q, gate);
  cols_one_site_dag(e, q, gate);
}

// Attach a fresh leading qubit whose folded state is recorded in a new leg
// (appended least-significant in the block index).
inline void inject_lead(EnvState& e) {
  const std::size_t R = e.R();
  EnvState out;
  out.n = e.n * 4;
  out.nq = e.nq + 1;
  out.w.assign(out.n * 4 * R * R, cd(0, 0));
  const std::size_t R2 = 2 * R;
  for (std::size_t b = 0; b < e.n; ++b)
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t sb = 0; sb < 2; ++sb) {
        const std::size_t nb = b * 4 + 2 * s + sb;
        for (std::size_t r = 0; r < R; ++r)
          std::memcpy(out.w.data() + (nb * R2 + (s * R + r)) * R2 + sb * R,
                      e.w.data() + (b * R + r) * R, R * sizeof(cd));
      }
  e = std::move(out);
}

// Detach the leading qubit, recording its folded state in a new leg.
inline void detach_lead(EnvState& e) {
  const std::size_t R2 = e.R();
  const std::size_t R = R2 / 2;
  EnvState out;
  out.n = e.n * 4;
  out.nq = e.nq - 1;
  out.w.assign(out.n * R * R, cd(0, 0));
  for (std::size_t b = 0; b < e.n; ++b)
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t sb = 0; sb < 2; ++sb) {
        const std::size_t nb = b * 4 + 2 * s + sb;
        for (std::size_t r = 0; r < R; ++r)
          std::memcpy(out.w.data() + (nb * R + r) * R,
                      e.w.data() + (b * R2 + (s * R + r)) * R2 + sb * R, R * sizeof(cd));
      }
  e = std::move(out);
}

inline std::vector<cd> trace_blocks(const EnvState& e) {
  const std::size_t R = e.R();
  std::vector<cd> out(e.n, cd(0, 0));
  for (std::size_t b = 0; b < e.n; ++b)
    for (std::size_t r = 0; r < R; ++r) out[b] += e.w[(b * R + r) * R + r];
  return out;
}

inline EnvState product_env(const Mat2& rho, std::size_t L) {
  EnvState e;
  e.n = 1;
  e.nq = L;
  MatX acc = MatX::Identity(1, 1);
  for (std::size_t j = 0; j < L; ++j) acc = kron(acc, MatX(rho));
  const std::size_t R = e.R();
  e.w.assign(R * R, cd(0, 0));
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < R; ++c)
      e.w[r * R + c] = acc(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return e;
}

}  // namespace detail

// Dense empty-environment IM vector (2T dim-4 legs).
inline DenseTensor obc_dense(std::size_t T) {
  DenseTensor v(std::vector<std::size_t>(2 * T, 4));
  std::vector<std::size_t> idx(2 * T, 0);
  for (std::size_t f = 0; f < v.size(); ++f) {
    bool wire = true;
    for (std::size_t tau = 0; tau < T; ++tau)
      if (idx[2 * tau] != idx[2 * tau + 1]) wire = false;
    if (wire) v.data[f] = cd(1, 0);
    for (std::size_t i = 2 * T; i-- > 0;) {
      if (++idx[i] < 4) break;
      idx[i] = 0;
    }
  }
  return v;
}

// Exact IM of an L-site environment column on the given side of the system,
// as a dense vector over 2T legs ordered (in, out) per period.
inline DenseTensor exact_im_env(const CircuitParams& p, std::size_t L,
                                EnvSide side = EnvSide::right,
                                EnvTermination term = EnvTermination::wire) {
  p.validate();
  if (p.T > 4) throw SizeCapError("exact_im: T capped at 4");
  if (L > 8) throw SizeCapError("exact_im: L capped at 8");
  if (L == 0) return obc_dense(p.T);
  {
    // Peak is two coexisting copies of the largest block array: 16 bytes per
    // entry, 16^T leg blocks, 4^L entries per block.
    const double blocks = std::pow(16.0, static_cast<double>(p.T));
    const double peak = 2.0 * 16.0 * blocks * std::pow(4.0, static_cast<double>(L));
    if (peak > 1.5 * 1024.0 * 1024.0 * 1024.0)
      throw SizeCapError("exact_im: estimated memory exceeds cap");
  }
  const PeriodGates gates = build_period_gates(p);
  detail::EnvState e = detail::product_env(p.site_rho(), L);
  const bool literal = term == EnvTermination::literal_edges;

  for (std::size_t tau = 0; tau < p.T; ++tau) {
    if (side == EnvSide::right) {
      for (std::size_t q = 0; q + 1 < L; q += 2) detail::conj_two_site(e, q, gates.gate_odd);
      if (literal && L % 2 == 1) detail::conj_one_site(e, L - 1, gates.leftover_field);
      detail::inject_lead(e);
      detail::conj_two_site(e, 0, gates.gate_even);
      detail::detach_lead(e);
      for (std::size_t q = 1; q + 1 < L; q += 2) detail::conj_two_site(e, q, gates.gate_even);
      if (literal && L % 2 == 0) detail::conj_one_site(e, L - 1, gates.leftover_kick);
    } else {
      detail::inject_lead(e);
      detail::conj_two_site(e, 0, gates.gate_odd);
      detail::detach_lead(e);
      for (std::size_t q = 1; q + 1 < L; q += 2) detail::conj_two_site(e, q, gates.gate_odd);
      if (literal && L % 2 == 0) detail::conj_one_site(e, L - 1, gates.leftover_field);
      for (std::size_t q = 0; q + 1 < L; q += 2) detail::conj_two_site(e, q, gates.gate_even);
      if (literal && L % 2 == 1) detail::conj_one_site(e, L - 1, gates.leftover_kick);
    }
  }
  std::vector<cd> vals = detail::trace_blocks(e);
  return DenseTensor(std::vector<std::size_t>(2 * p.T, 4), std::move(vals));
}

// Exact right-environment IM with the wire termination (the transfer-matrix
// iterate of the empty-environment IM).
inline DenseTensor exact_im(const CircuitParams& p, std::size_t L,
                            ImBoundary boundary = ImBoundary::obc) {
  (void)boundary;
  return exact_im_env(p, L, EnvSide::right, EnvTermination::wire);
}

// Schmidt entropy (nats) of a dense leg vector across internal bond `cut`
// (between legs cut and cut+1, matching cut_entropy's convention).
inline double exact_entropy(const DenseTensor& v, std::size_t cut) {
  if (cut + 1 >= v.rank()) throw std::invalid_argument("exact_entropy: cut out of range");
  std::size_t m = 1, n = 1;
  for (std::size_t i = 0; i <= cut; ++i) m *= v.shape[i];
  for (std::size_t i = cut + 1; i < v.rank(); ++i) n *= v.shape[i];
  if (m * n > (std::size_t(1) << 28)) throw SizeCapError("exact_entropy: vector too large");
  Eigen::Map<const RowMat> a(v.data.data(), static_cast<Eigen::Index>(m),
                             static_cast<Eigen::Index>(n));
  MatX u, vv;
  Eigen::VectorXd s;
  svd_matrix(MatX(a), u, s, vv);
  double total = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total += s(i) * s(i);
  if (total <= 0) throw std::invalid_argument("exact_entropy: zero vector");
  double ent = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double pr = s(i) * s(i) / total;
    if (pr > 0) ent -= pr * std::log(pr);
  }
  return ent;
}

// ---------------------------------------------------------------------------
// Exact finite-chain dynamics (dense density-matrix evolution of the full
// open chain, one period = odd layer then even layer with leftover edge
// factors).
// ---------------------------------------------------------------------------

namespace detail {

inline void chain_conj_two(std::vector<cd>& rho, std::size_t L, std::size_t q, const Mat4& g) {
  EnvState e;
  e.n = 1;
  e.nq = L;
  e.w = std::move(rho);
  conj_two_site(e, q, g);
  rho = std::move(e.w);
}

inline void chain_conj_one(std::vector<cd>& rho, std::size_t L, std::size_t q, const Mat2& g) {
  EnvState e;
  e.n = 1;
  e.nq = L;
  e.w = std::move(rho);
  conj_one_site(e, q, g);
  rho = std::move(e.w);
}

// Apply a (possibly non-unitary) single-site operator on the ket side.
inline void chain_rows_one(std::vector<cd>& rho, std::size_t L, std::size_t q, const Mat2& a) {
  EnvState e;
  e.n = 1;
  e.nq = L;
  e.w = std::move(rho);
  rows_one_site(e, q, a);
  rho = std::move(e.w);
}

// Apply rho -> rho * a^dagger on a single site.
inline void chain_cols_one_dag(std::vector<cd>& rho, std::size_t L, std::size_t q, const Mat2& a) {
  EnvState e;
  e.n = 1;
  e.nq = L;
  e.w = std::move(rho);
  cols_one_site_dag(e, q, a);
  rho = std::move(e.w);
}

}  // namespace detail

// One open-chain Floquet period applied in place: odd layer (with leftover
// fields at site 0 and, for even L, the last site), then even layer (with a
// leftover kick at the last site for odd L).
inline void chain_period(std::vector<cd>& rho, std::size_t L, const PeriodGates& gates) {
  detail::chain_conj_one(rho, L, 0, gates.leftover_field);
  for (std::size_t q = 1; q + 1 < L; q += 2) detail::chain_conj_two(rho, L, q, gates.gate_odd);
  if (L % 2 == 0 && L >= 2) detail::chain_conj_one(rho, L, L - 1, gates.leftover_field);
  for (std::size_t q = 0; q + 1 < L; q += 2) detail::chain_conj_two(rho, L, q, gates.gate_even);
  if (L % 2 == 1 && L >= 1) detail::chain_conj_one(rho, L, L - 1, gates.leftover_kick);
}

// Trace of op at site q against rho.
inline cd chain_site_expectation(const std::vector<cd>& rho, std::size_t L, std::size_t q,
                                 const Mat2& op) {
  const std::size_t R = std::size_t(1) << L;
  const std::size_t S = R >> (q + 1);
  const std::size_t P = std::size_t(1) << q;
  cd out(0, 0);
  // Tr[op_q rho] = sum over diagonal blocks mixing the site-q bit.
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) {
          const std::size_t r = (p * 2 + a) * S + s;
          const std::size_t c = (p * 2 + b) * S + s;
          out += op(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * rho[c * R + r];
        }
  return out;
}

// Dense product density matrix from per-site 2x2 states.
inline std::vector<cd> chain_product_rho(const std::vector<Mat2>& rho_sites) {
  MatX acc = MatX::Identity(1, 1);
  for (const auto& r : rho_sites) acc = kron(acc, MatX(r));
  const std::size_t R = static_cast<std::size_t>(acc.rows());
  std::vector<cd> out(R * R);
  for (std::size_t r = 0; r < R; ++r)
    for (std::size_t c = 0; c < R; ++c)
      out[r * R + c] = acc(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

// Closure value of the full open-chain evolution with worldline insertions
// applied at `obs_site`: evolves rho0 for T periods, applying each insertion
// at its half-step slot, and returns the final trace.
inline cd exact_dynamics(const CircuitParams& p, std::size_t L,
                         const std::vector<Mat2>& rho0_sites,
                         const std::vector<Insertion>& insertions,
                         std::optional<std::size_t> obs_site = std::nullopt) {
  p.validate();
  if (L < 1 || L > 12) throw SizeCapError("exact_dynamics: L capped at 12");
  if (rho0_sites.size() != L)
    throw ConfigError("exact_dynamics: need one rho0 per site");
  const std::size_t q = obs_site.value_or(mid_site(L));
  if (q >= L) throw ConfigError("exact_dynamics: obs_site out of range");
  for (const auto& ins : insertions)
    if (ins.half_step > 2 * p.T)
      throw ConfigError("exact_dynamics: insertion half-step out of range");

  const PeriodGates gates = build_period_gates(p);
  std::vector<cd> rho = chain_product_rho(rho0_sites);

  auto apply_insertions_at = [&](std::size_t slot) {
    for (const auto& ins : insertions) {
      if (ins.half_step != slot) continue;
      switch (ins.side) {
        case InsertionSide::forward_branch:
          detail::chain_rows_one(rho, L, q, ins.op);
          break;
        case InsertionSide::backward_branch:
          detail::chain_cols_one_dag(rho, L, q, ins.op);
          break;
        case InsertionSide::both_as_superop:
          detail::chain_rows_one(rho, L, q, ins.op);
          detail::chain_cols_one_dag(rho, L, q, ins.op);
          break;
      }
    }
  };

  apply_insertions_at(0);
  for (std::size_t tau = 1; tau <= p.T; ++tau) {
    // Odd layer.
    detail::chain_conj_one(rho, L, 0, gates.leftover_field);
    for (std::size_t qq = 1; qq + 1 < L; qq += 2)
      detail::chain_conj_two(rho, L, qq, gates.gate_odd);
    if (L % 2 == 0 && L >= 2) detail::chain_conj_one(rho, L, L - 1, gates.leftover_field);
    apply_insertions_at(2 * tau - 1);
    // Even layer.
    for (std::size_t qq = 0; qq + 1 < L; qq += 2)
      detail::chain_conj_two(rho, L, qq, gates.gate_even);
    if (L % 2 == 1 && L >= 1) detail::chain_conj_one(rho, L, L - 1, gates.leftover_kick);
    apply_insertions_at(2 * tau);
  }
  const std::size_t R = std::size_t(1) << L;
  cd tr(0, 0);
  for (std::size_t r = 0; r < R; ++r) tr += rho[r * R + r];
  return tr;
}

// Mid-chain expectation series <op(t)>, t = 0..T, for the product initial
// state of the parameter record.
inline std::vector<cd> exact_polarization_series(const CircuitParams& p, std::size_t L,
                                                 const Mat2& op) {
  p.validate();
  if (L < 1 || L > 12) throw SizeCapError("exact_polarization_series: L capped at 12");
  const std::size_t q = mid_site(L);
  const PeriodGates gates = build_period_gates(p);
  std::vector<cd> rho = chain_product_rho(std::vector<Mat2>(L, p.site_rho()));
  std::vector<cd> out;
  out.reserve(p.T + 1);
  out.push_back(chain_site_expectation(rho, L, q, op));
  for (std::size_t tau = 1; tau <= p.T; ++tau) {
    chain_period(rho, L, gates);
    out.push_back(chain_site_expectation(rho, L, q, op));
  }
  return out;
}

// Infinite-temperature mid-chain autocorrelator C(t) = Tr[op(t) op] / 2^L,
// t = 0..T, normalized so C(0) = 1 for any Pauli op.
inline std::vector<cd> exact_autocorr_series(const CircuitParams& p, std::size_t L,
                                             const Mat2& op) {
  p.validate();
  if (L < 1 || L > 12) throw SizeCapError("exact_autocorr_series: L capped at 12");
  const std::size_t q = mid_site(L);
  const PeriodGates gates = build_period_gates(p);
  const double norm = std::pow(2.0, static_cast<double>(L));
  std::vector<Mat2> init(L, Mat2::Identity());
  std::vector<cd> rho = chain_product_rho(init);  // identity operator
  detail::chain_rows_one(rho, L, q, op);          // op * 1
  for (auto& z : rho) z /= norm;
  std::vector<cd> out;
  out.reserve(p.T + 1);
  out.push_back(chain_site_expectation(rho, L, q, op));
  for (std::size_t tau = 1; tau <= p.T; ++tau) {
    chain_period(rho, L, gates);
    out.push_back(chain_site_expectation(rho, L, q, op));
  }
  return out;
}

}  // namespace lcim
