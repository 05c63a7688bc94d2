#pragma once

// Influence-matrix production engines.
//
// Two routes to the infinite-chain influence matrix (IM) at a fixed period
// count T:
//   * iterate_im: repeatedly applies the two-site transfer operator of
//     build_transfer_mpo to a boundary state (empty environment or the
//     dephasing product), compressing after every step.  The environment
//     column grows two sites per step and converges once it covers the
//     causal cone (L >= 2T).
//   * lcga_build: grows in the period direction instead.  Starting from the
//     exact one-period IM, each step appends a fresh pair of trailing legs
//     (identity-closure and initial-state vectors) and applies the
//     transfer operator of the enlarged period count once.  Every
//     intermediate state is itself a converged IM, so the entanglement
//     barrier met by the column iteration never appears.
//
// Both record an IMTrace: per-step entropy profile over all internal cuts,
// the entropy at the half-time period boundary, the maximal bond dimension,
// and the cumulative discarded weight.  Trace records use the period-boundary
// cut (rather than the raw middle bond) so that values stay comparable when
// the leg count grows: cuts inside a period separate an in/out pair and carry
// the wire's 2 ln 2 component, while period-boundary cuts measure genuine
// memory between past and future.

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lcim/folded.hpp"
#include "lcim/mps.hpp"

namespace lcim {

struct IMStepRecord {
  std::size_t step = 0;          // transfer applications (or period count)
  double mid_cut_entropy = 0.0;  // nats, at the half-time period boundary
  std::vector<double> entropy_profile;
  std::size_t max_bond_dim = 1;
  double discarded_weight = 0.0;  // cumulative up to and including this step
};

struct IMTrace {
  std::vector<IMStepRecord> steps;
};

// Half-time bipartition: with 2T legs the cut after leg T is bond T-1.
inline std::size_t mid_cut_index(std::size_t n_legs) {
  if (n_legs < 2 || n_legs % 2 != 0)
    throw std::invalid_argument("mid_cut_index: leg count must be even and >= 2");
  return n_legs / 2 - 1;
}

// Period-boundary cut closest to the temporal midpoint from below: the bond
// after the first 2*floor(T/2) legs.  Coincides with mid_cut_index for even
// T; a one-period state has no period boundary, so callers must check T >= 2.
inline std::size_t half_time_boundary_cut(std::size_t n_legs) {
  if (n_legs < 4 || n_legs % 2 != 0)
    throw std::invalid_argument("half_time_boundary_cut: leg count must be even and >= 4");
  const std::size_t periods = n_legs / 2;
  return 2 * (periods / 2) - 1;
}

// Entropy at every internal cut; throws on an identically-zero state.
inline std::vector<std::pair<std::size_t, double>> te_profile(const TemporalMPS& im) {
  im.check_consistent();
  const double nrm = overlap_log(im, im).first;
  if (!std::isfinite(nrm)) throw std::invalid_argument("te_profile: zero state");
  std::vector<double> prof = entropy_profile(im);
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(prof.size());
  for (std::size_t b = 0; b < prof.size(); ++b) out.emplace_back(b, prof[b]);
  return out;
}

// Normalized squared overlap; 1 for identical rays, 0 for orthogonal ones.
inline double im_fidelity(const TemporalMPS& a, const TemporalMPS& b) {
  if (a.n_sites() != b.n_sites())
    throw std::invalid_argument("im_fidelity: leg-count mismatch");
  if (!std::isfinite(overlap_log(a, a).first) || !std::isfinite(overlap_log(b, b).first))
    throw std::invalid_argument("im_fidelity: zero state");
  return mps_fidelity(a, b);
}

namespace detail {

inline IMStepRecord make_record(std::size_t step, const TemporalMPS& m, double cum_discarded) {
  IMStepRecord rec;
  rec.step = step;
  rec.entropy_profile = entropy_profile(m);
  rec.mid_cut_entropy = m.n_sites() < 4
                            ? 0.0
                            : rec.entropy_profile[half_time_boundary_cut(m.n_sites())];
  rec.max_bond_dim = m.max_bond_dim();
  rec.discarded_weight = cum_discarded;
  return rec;
}

}  // namespace detail

// Grow the environment column: apply the transfer operator up to n_steps
// times, stopping early once one step no longer changes the ray
// (fidelity > 1 - 1e-12).  Returns the final state and the per-step trace.
inline std::pair<TemporalMPS, IMTrace> iterate_im(const TemporalMPS& boundary,
                                                  const CircuitParams& p,
                                                  std::size_t n_steps, std::size_t chi,
                                                  double tol,
                                                  EnvSide side = EnvSide::right) {
  p.validate();
  boundary.check_consistent();
  if (boundary.n_sites() != 2 * p.T)
    throw std::invalid_argument("iterate_im: boundary leg count does not match 2T");
  constexpr double kConvergedFidelity = 1.0 - 1e-12;

  TransferMPO op = build_transfer_mpo(p, side);
  TemporalMPS cur = boundary;
  IMTrace trace;
  double cum = 0.0;
  for (std::size_t step = 1; step <= n_steps; ++step) {
    TemporalMPS next = apply_mpo(op, cur, chi, tol, &cum);
    trace.steps.push_back(detail::make_record(step, next, cum));
    const double fid = mps_fidelity(next, cur);
    cur = std::move(next);
    if (fid > kConvergedFidelity) break;
  }
  return {std::move(cur), std::move(trace)};
}

// Light-cone growth.  Returns ims indexed by the period count (slot 0 is an
// empty placeholder so that ims[n] holds the n-period IM), plus the trace of
// the grown states.  ims[1] is the exact one-period contraction; step
// n -> n+1 appends an identity-closure leg and an initial-state leg at the
// trailing end and applies the (n+1)-period transfer operator once.
inline std::pair<std::vector<TemporalMPS>, IMTrace> lcga_build(const CircuitParams& p,
                                                               std::size_t T_max,
                                                               std::size_t chi, double tol,
                                                               EnvSide side = EnvSide::right) {
  p.validate();
  if (T_max < 1) throw std::invalid_argument("lcga_build: T_max must be >= 1");
  std::vector<TemporalMPS> ims(T_max + 1);
  IMTrace trace;
  double cum = 0.0;

  CircuitParams p1 = p;
  p1.T = 1;
  ims[1] = apply_mpo(build_transfer_mpo(p1, side), build_obc_im(1), chi, tol, &cum);
  trace.steps.push_back(detail::make_record(1, ims[1], cum));

  for (std::size_t n = 1; n < T_max; ++n) {
    TemporalMPS grown = ims[n];
    auto append_leg = [&grown](const Vec4& v) {
      DenseTensor site({1, 4, 1});
      for (std::size_t q = 0; q < 4; ++q) site.at(0, q, 0) = v(static_cast<Eigen::Index>(q));
      grown.sites.push_back(std::move(site));
    };
    append_leg(vec_id());
    append_leg(initial_leg_vector(p));
    grown.ortho_center.reset();
    CircuitParams pn = p;
    pn.T = n + 1;
    ims[n + 1] = apply_mpo(build_transfer_mpo(pn, side), grown, chi, tol, &cum);
    trace.steps.push_back(detail::make_record(n + 1, ims[n + 1], cum));
  }
  return {std::move(ims), std::move(trace)};
}

// Remove the last t_drop periods by closing their legs: the trailing-period
// input leg is contracted with the maximally-mixed vector (carrying the 1/2)
// and the output leg with the identity vector.  For a converged IM this
// reproduces the shorter-period IM exactly.
inline TemporalMPS project_time(const TemporalMPS& im, std::size_t t_drop,
                                const CircuitParams& p) {
  im.check_consistent();
  if (t_drop < 1) throw std::invalid_argument("project_time: t_drop must be >= 1");
  const std::size_t n = im.n_sites();
  if (n != 2 * (p.T + t_drop))
    throw std::invalid_argument("project_time: leg count must equal 2*(T + t_drop)");
  const std::size_t keep = 2 * p.T;

  DenseTensor w({1});
  w.at(0) = cd(1, 0);
  for (std::size_t k = n; k-- > keep;) {
    const Vec4 v = (k % 2 == 1) ? vec_id() : vec_mix();
    DenseTensor vt({4});
    for (std::size_t q = 0; q < 4; ++q) vt.at(q) = v(static_cast<Eigen::Index>(q));
    DenseTensor sv = contract_pair(im.sites[k], vt, {{1, 0}});  // (chi_l, chi_r)
    w = contract_pair(sv, w, {{1, 0}});                         // (chi_l)
  }

  TemporalMPS out;
  out.log_norm = im.log_norm;
  out.sites.assign(im.sites.begin(), im.sites.begin() + static_cast<std::ptrdiff_t>(keep));
  DenseTensor& last = out.sites.back();
  last = contract_pair(last, w, {{2, 0}});
  last = last.reshaped({last.shape[0], 4, 1});
  return out;
}

}  // namespace lcim
