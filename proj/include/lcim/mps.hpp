#pragma once

// Temporal matrix-product states over dim-4 folded legs: canonical forms,
// truncation sweeps, MPO application (zip-up), overlaps, and cut entropies.
//
// Conventions
//   * site tensors have legs (left bond, physical 4, right bond), row-major;
//   * boundary bonds have dimension 1;
//   * states are held unnormalized; log_norm accumulates explicit rescalings,
//     so the represented vector is exp(log_norm) * contraction(sites);
//   * internal bond b (0-based) sits between sites b and b+1;
//   * singular values are absorbed toward the orthogonality center.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <utility>

#include "lcim/core.hpp"
#include "lcim/tensor.hpp"

namespace lcim {

struct TemporalMPS {
  std::vector<DenseTensor> sites;
  std::optional<std::size_t> ortho_center;
  double log_norm = 0.0;

  std::size_t n_sites() const { return sites.size(); }

  std::size_t bond_dim(std::size_t b) const {  // internal bond b: 0..n-2
    return sites.at(b).shape.at(2);
  }

  std::size_t max_bond_dim() const {
    std::size_t m = 1;
    for (const auto& s : sites) m = std::max(m, s.shape.at(2));
    return m;
  }

  void check_consistent() const {
    if (sites.empty()) throw std::invalid_argument("TemporalMPS: empty");
    if (sites.front().shape.at(0) != 1 || sites.back().shape.at(2) != 1)
      throw std::invalid_argument("TemporalMPS: boundary bonds must have dimension 1");
    for (std::size_t k = 0; k + 1 < sites.size(); ++k)
      if (sites[k].shape.at(2) != sites[k + 1].shape.at(0))
        throw std::invalid_argument("TemporalMPS: adjacent bond mismatch");
    for (const auto& s : sites)
      if (s.rank() != 3) throw std::invalid_argument("TemporalMPS: sites must be rank 3");
  }
};

// Product state from one vector per leg.
inline TemporalMPS product_mps(const std::vector<Vec4>& legs) {
  TemporalMPS m;
  for (const auto& v : legs) {
    DenseTensor t({1, 4, 1});
    for (std::size_t p = 0; p < 4; ++p) t.at(0, p, 0) = v(static_cast<Eigen::Index>(p));
    m.sites.push_back(std::move(t));
  }
  m.ortho_center = std::nullopt;
  return m;
}

// Random MPS with the given internal bond dimensions (for tests).
inline TemporalMPS random_mps(const std::vector<std::size_t>& internal_bonds,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  TemporalMPS m;
  std::vector<std::size_t> bonds;
  bonds.push_back(1);
  bonds.insert(bonds.end(), internal_bonds.begin(), internal_bonds.end());
  bonds.push_back(1);
  for (std::size_t k = 0; k + 1 < bonds.size(); ++k) {
    DenseTensor t({bonds[k], 4, bonds[k + 1]});
    for (auto& z : t.data) z = cd(dist(rng), dist(rng));
    m.sites.push_back(std::move(t));
  }
  return m;
}

// Dense vector of the represented state (including the log_norm scale).
inline DenseTensor mps_to_dense(const TemporalMPS& m, std::size_t entry_cap = (1u << 27)) {
  m.check_consistent();
  std::size_t total = 1;
  for (std::size_t i = 0; i < m.n_sites(); ++i) {
    total *= 4;
    if (total > entry_cap) throw SizeCapError("mps_to_dense: state exceeds entry cap");
  }
  DenseTensor acc = m.sites[0];  // {1, 4, chi}
  acc = acc.reshaped({4, acc.shape[2]});
  for (std::size_t k = 1; k < m.n_sites(); ++k) {
    const auto& s = m.sites[k];
    acc = contract_pair(acc, s, {{1, 0}});  // {prod, 4, chi}
    acc = acc.reshaped({acc.shape[0] * 4, s.shape[2]});
  }
  acc = acc.reshaped(std::vector<std::size_t>(m.n_sites(), 4));
  const cd scale = std::exp(cd(m.log_norm, 0.0));
  for (auto& z : acc.data) z *= scale;
  return acc;
}

// Exact MPS form of a dense vector over n_legs dim-4 legs (no truncation).
inline TemporalMPS mps_from_dense(const DenseTensor& v);

namespace detail {

// SVD a site tensor across (left*phys | right); returns (U-part, SV^dagger).
inline void split_site_lr(const DenseTensor& site, std::optional<std::size_t> max_rank,
                          double tol, DenseTensor& u_part, DenseTensor& sv_part,
                          std::vector<double>* spectrum = nullptr,
                          double* rel_discarded = nullptr) {
  const std::size_t chi_l = site.shape[0], phys = site.shape[1], chi_r = site.shape[2];
  Eigen::Map<const RowMat> a(site.data.data(), static_cast<Eigen::Index>(chi_l * phys),
                             static_cast<Eigen::Index>(chi_r));
  MatX u, v;
  Eigen::VectorXd s;
  svd_matrix(MatX(a), u, s, v);
  const std::size_t full = static_cast<std::size_t>(s.size());
  double total_sq = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total_sq += s(i) * s(i);
  // Modes numerically indistinguishable from zero are always dropped.
  const double cutoff = full > 0 ? std::max(tol, 1e-14) * s(0) : -1.0;
  std::size_t keep = full;
  if (max_rank && *max_rank < keep) keep = *max_rank;
  while (keep > 1 && s(static_cast<Eigen::Index>(keep) - 1) <= cutoff) --keep;
  if (keep == 0) keep = 1;
  double kept_sq = 0;
  for (std::size_t i = 0; i < keep; ++i) {
    kept_sq += s(static_cast<Eigen::Index>(i)) * s(static_cast<Eigen::Index>(i));
  }
  if (spectrum) spectrum->assign(s.data(), s.data() + keep);
  if (rel_discarded)
    *rel_discarded = total_sq > 0 ? std::max(0.0, (total_sq - kept_sq) / total_sq) : 0.0;

  u_part = DenseTensor({chi_l, phys, keep});
  Eigen::Map<RowMat>(u_part.data.data(), static_cast<Eigen::Index>(chi_l * phys),
                     static_cast<Eigen::Index>(keep)) =
      u.leftCols(static_cast<Eigen::Index>(keep));
  sv_part = DenseTensor({keep, chi_r});
  Eigen::Map<RowMat>(sv_part.data.data(), static_cast<Eigen::Index>(keep),
                     static_cast<Eigen::Index>(chi_r)) =
      s.head(static_cast<Eigen::Index>(keep)).asDiagonal() *
      v.leftCols(static_cast<Eigen::Index>(keep)).adjoint();
}

// SVD a site tensor across (left | phys*right); returns (US, V^dagger-part).
inline void split_site_rl(const DenseTensor& site, std::optional<std::size_t> max_rank,
                          double tol, DenseTensor& us_part, DenseTensor& v_part,
                          std::vector<double>* spectrum = nullptr,
                          double* rel_discarded = nullptr) {
  const std::size_t chi_l = site.shape[0], phys = site.shape[1], chi_r = site.shape[2];
  Eigen::Map<const RowMat> a(site.data.data(), static_cast<Eigen::Index>(chi_l),
                             static_cast<Eigen::Index>(phys * chi_r));
  MatX u, v;
  Eigen::VectorXd s;
  svd_matrix(MatX(a), u, s, v);
  const std::size_t full = static_cast<std::size_t>(s.size());
  double total_sq = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total_sq += s(i) * s(i);
  // Modes numerically indistinguishable from zero are always dropped.
  const double cutoff = full > 0 ? std::max(tol, 1e-14) * s(0) : -1.0;
  std::size_t keep = full;
  if (max_rank && *max_rank < keep) keep = *max_rank;
  while (keep > 1 && s(static_cast<Eigen::Index>(keep) - 1) <= cutoff) --keep;
  if (keep == 0) keep = 1;
  double kept_sq = 0;
  for (std::size_t i = 0; i < keep; ++i) {
    kept_sq += s(static_cast<Eigen::Index>(i)) * s(static_cast<Eigen::Index>(i));
  }
  if (spectrum) spectrum->assign(s.data(), s.data() + keep);
  if (rel_discarded)
    *rel_discarded = total_sq > 0 ? std::max(0.0, (total_sq - kept_sq) / total_sq) : 0.0;

  us_part = DenseTensor({chi_l, keep});
  Eigen::Map<RowMat>(us_part.data.data(), static_cast<Eigen::Index>(chi_l),
                     static_cast<Eigen::Index>(keep)) =
      u.leftCols(static_cast<Eigen::Index>(keep)) *
      MatX(s.head(static_cast<Eigen::Index>(keep)).asDiagonal());
  v_part = DenseTensor({keep, phys, chi_r});
  Eigen::Map<RowMat>(v_part.data.data(), static_cast<Eigen::Index>(keep),
                     static_cast<Eigen::Index>(phys * chi_r)) =
      v.leftCols(static_cast<Eigen::Index>(keep)).adjoint();
}

// Contract a {r, chi_l} carrier into the left bond of a site tensor.
inline DenseTensor absorb_left(const DenseTensor& carrier, const DenseTensor& site) {
  return contract_pair(carrier, site, {{1, 0}});
}

// Contract a site tensor with an {chi_r, r} carrier on its right bond.
inline DenseTensor absorb_right(const DenseTensor& site, const DenseTensor& carrier) {
  return contract_pair(site, carrier, {{2, 0}});
}

}  // namespace detail

// Bring the state to mixed-canonical form with the given orthogonality center.
// The represented vector (including log_norm) is unchanged.
inline TemporalMPS canonicalize(const TemporalMPS& m, std::size_t center) {
  m.check_consistent();
  if (center >= m.n_sites()) throw std::invalid_argument("canonicalize: center out of range");
  TemporalMPS out = m;
  for (std::size_t k = 0; k < center; ++k) {
    DenseTensor u, sv;
    detail::split_site_lr(out.sites[k], std::nullopt, 0.0, u, sv);
    out.sites[k] = std::move(u);
    out.sites[k + 1] = detail::absorb_left(sv, out.sites[k + 1]);
  }
  for (std::size_t k = m.n_sites() - 1; k > center; --k) {
    DenseTensor us, v;
    detail::split_site_rl(out.sites[k], std::nullopt, 0.0, us, v);
    out.sites[k] = std::move(v);
    out.sites[k - 1] = detail::absorb_right(out.sites[k - 1], us);
  }
  out.ortho_center = center;
  return out;
}

// Truncate every bond to dimension <= chi, dropping singular values below
// tol * (largest at that bond).  Returns the compressed state (canonical,
// center at site 0) and the total discarded squared Schmidt weight
// 1 - prod_b (1 - w_b), with w_b the normalized weight dropped at bond b.
inline std::pair<TemporalMPS, double> compress(const TemporalMPS& m, std::size_t chi,
                                               double tol) {
  if (chi < 1) throw std::invalid_argument("compress: chi must be >= 1");
  TemporalMPS out = canonicalize(m, m.n_sites() - 1);
  double kept_product = 1.0;
  for (std::size_t k = m.n_sites() - 1; k > 0; --k) {
    DenseTensor us, v;
    double w = 0;
    detail::split_site_rl(out.sites[k], chi, tol, us, v, nullptr, &w);
    out.sites[k] = std::move(v);
    out.sites[k - 1] = detail::absorb_right(out.sites[k - 1], us);
    kept_product *= (1.0 - w);
  }
  out.ortho_center = 0;
  const double nrm = out.sites[0].norm();
  if (nrm > 0) {
    out.sites[0] *= cd(1.0 / nrm, 0);
    out.log_norm += std::log(nrm);
  }
  return {std::move(out), 1.0 - kept_product};
}

// Inner product <a|b> (a conjugated), including both log_norm scales.
// overlap_log returns (log magnitude, unit phase) for overflow-safe use.
inline std::pair<double, cd> overlap_log(const TemporalMPS& a, const TemporalMPS& b) {
  a.check_consistent();
  b.check_consistent();
  if (a.n_sites() != b.n_sites())
    throw std::invalid_argument("overlap: site-count mismatch");
  double log_acc = a.log_norm + b.log_norm;
  DenseTensor env({1, 1});
  env.at(0, 0) = cd(1, 0);
  for (std::size_t k = 0; k < a.n_sites(); ++k) {
    DenseTensor t = contract_pair(env, a.sites[k].conj(), {{0, 0}});  // {bt, 4, at'}
    env = contract_pair(t, b.sites[k], {{0, 0}, {1, 1}});             // {at', bt'}
    const double nn = env.norm();
    if (nn == 0.0) return {-std::numeric_limits<double>::infinity(), cd(0, 0)};
    env *= cd(1.0 / nn, 0);
    log_acc += std::log(nn);
  }
  return {log_acc, env.at(0, 0)};
}

inline cd overlap(const TemporalMPS& a, const TemporalMPS& b) {
  auto [lg, ph] = overlap_log(a, b);
  if (std::isinf(lg) && lg < 0) return cd(0, 0);
  return std::exp(lg) * ph;
}

// Normalized fidelity |<a|b>|^2 / (<a|a><b|b>); log_norm scales cancel.
inline double mps_fidelity(const TemporalMPS& a, const TemporalMPS& b) {
  auto [lab, pab] = overlap_log(a, b);
  auto [laa, paa] = overlap_log(a, a);
  auto [lbb, pbb] = overlap_log(b, b);
  (void)paa;
  (void)pbb;
  if (std::isinf(lab) && lab < 0) return 0.0;
  return std::norm(pab) * std::exp(2 * lab - laa - lbb);
}

// Schmidt spectrum at internal bond `cut` (between sites cut and cut+1).
inline SchmidtSpectrum bond_spectrum(const TemporalMPS& m, std::size_t cut) {
  m.check_consistent();
  if (cut + 1 >= m.n_sites())
    throw std::invalid_argument("bond_spectrum: cut out of range");
  TemporalMPS c = canonicalize(m, cut);
  DenseTensor u, sv;
  SchmidtSpectrum spec;
  detail::split_site_lr(c.sites[cut], std::nullopt, 0.0, u, sv, &spec.values);
  spec.cut = cut;
  double total = 0;
  for (double s : spec.values) total += s * s;
  if (total <= 0) throw std::invalid_argument("bond_spectrum: zero-norm state");
  return spec;
}

// Von Neumann entropy (nats) of the cut between sites cut and cut+1.
inline double cut_entropy(const TemporalMPS& m, std::size_t cut) {
  return bond_spectrum(m, cut).entropy();
}

// Entropies of every internal bond in one canonicalization sweep.
inline std::vector<double> entropy_profile(const TemporalMPS& m) {
  m.check_consistent();
  TemporalMPS c = canonicalize(m, 0);
  std::vector<double> out;
  out.reserve(m.n_sites() - 1);
  for (std::size_t k = 0; k + 1 < m.n_sites(); ++k) {
    std::vector<double> vals;
    DenseTensor u, sv;
    detail::split_site_lr(c.sites[k], std::nullopt, 0.0, u, sv, &vals);
    c.sites[k] = std::move(u);
    c.sites[k + 1] = detail::absorb_left(sv, c.sites[k + 1]);
    SchmidtSpectrum spec;
    spec.values = std::move(vals);
    double total = 0;
    for (double s : spec.values) total += s * s;
    if (total <= 0) throw std::invalid_argument("entropy_profile: zero-norm state");
    out.push_back(spec.entropy());
  }
  return out;
}

inline TemporalMPS mps_from_dense(const DenseTensor& v) {
  for (std::size_t d : v.shape)
    if (d != 4) throw std::invalid_argument("mps_from_dense: legs must have dimension 4");
  const std::size_t n = v.rank();
  if (n < 1) throw std::invalid_argument("mps_from_dense: empty tensor");
  TemporalMPS m;
  DenseTensor rest = v.reshaped({1, v.size()});
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::size_t chi_l = rest.shape[0];
    const std::size_t tail = rest.shape[1] / 4;
    DenseTensor site3 = rest.reshaped({chi_l, 4, tail});
    // Split (chi_l*4 | tail) by SVD; fold the tail legs back afterwards.
    Eigen::Map<const RowMat> a(site3.data.data(), static_cast<Eigen::Index>(chi_l * 4),
                               static_cast<Eigen::Index>(tail));
    MatX u, vv;
    Eigen::VectorXd s;
    svd_matrix(MatX(a), u, s, vv);
    const std::size_t keep = static_cast<std::size_t>(s.size());
    DenseTensor u_part({chi_l, 4, keep});
    Eigen::Map<RowMat>(u_part.data.data(), static_cast<Eigen::Index>(chi_l * 4),
                       static_cast<Eigen::Index>(keep)) = u;
    DenseTensor sv({keep, tail});
    Eigen::Map<RowMat>(sv.data.data(), static_cast<Eigen::Index>(keep),
                       static_cast<Eigen::Index>(tail)) =
        s.asDiagonal() * vv.adjoint();
    m.sites.push_back(std::move(u_part));
    rest = std::move(sv);
  }
  m.sites.push_back(rest.reshaped({rest.shape[0], 4, 1}));
  m.ortho_center = n - 1;
  return m;
}

// ---------------------------------------------------------------------------
// Transfer MPO representation and application.
// ---------------------------------------------------------------------------

// Site tensors have legs (temporal-bond in, physical-in 4, physical-out 4,
// temporal-bond out); boundary temporal bonds have dimension 1.
struct TransferMPO {
  std::vector<DenseTensor> sites;

  std::size_t n_sites() const { return sites.size(); }

  void check_consistent() const {
    if (sites.empty()) throw std::invalid_argument("TransferMPO: empty");
    if (sites.front().shape.at(0) != 1 || sites.back().shape.at(3) != 1)
      throw std::invalid_argument("TransferMPO: boundary bonds must have dimension 1");
    for (std::size_t k = 0; k + 1 < sites.size(); ++k)
      if (sites[k].shape.at(3) != sites[k + 1].shape.at(0))
        throw std::invalid_argument("TransferMPO: adjacent bond mismatch");
    for (const auto& s : sites)
      if (s.rank() != 4 || s.shape.at(1) != 4 || s.shape.at(2) != 4)
        throw std::invalid_argument("TransferMPO: sites must be (b, 4, 4, b')");
  }

  std::size_t max_bond_dim() const {
    std::size_t m = 1;
    for (const auto& s : sites) m = std::max(m, s.shape.at(3));
    return m;
  }
};

// Apply the MPO to the state with zip-up truncation at 2*chi followed by a
// final optimal compression to chi.  Exact (up to roundoff) whenever chi is
// at least (input bond dim) * (MPO bond dim).  If `discarded` is non-null it
// accumulates the total relative squared weight dropped.
inline TemporalMPS apply_mpo(const TransferMPO& o, const TemporalMPS& m, std::size_t chi,
                             double tol, double* discarded = nullptr) {
  o.check_consistent();
  m.check_consistent();
  if (o.n_sites() != m.n_sites())
    throw std::invalid_argument("apply_mpo: site-count mismatch");
  TemporalMPS in = canonicalize(m, 0);
  const std::size_t n = in.n_sites();
  const std::size_t chi_zip = 2 * chi;

  TemporalMPS out;
  out.log_norm = in.log_norm;
  out.sites.resize(n);
  DenseTensor carry({1, 1, 1});  // (new bond, state bond, MPO bond)
  carry.at(0, 0, 0) = cd(1, 0);
  double kept_product = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    DenseTensor t1 = contract_pair(carry, in.sites[k], {{1, 0}});   // (c, w, p_in, beta')
    DenseTensor g = contract_pair(t1, o.sites[k], {{1, 0}, {2, 1}});  // (c, beta', p_out, w')
    g = g.transposed({0, 2, 1, 3});                                  // (c, p_out, beta', w')
    const std::size_t c = g.shape[0], bp = g.shape[2], wp = g.shape[3];
    if (k + 1 == n) {
      out.sites[k] = g.reshaped({c, 4, bp * wp});  // bp*wp == 1
    } else {
      DenseTensor site3 = g.reshaped({c, 4, bp * wp});
      DenseTensor u, sv;
      double w = 0;
      detail::split_site_lr(site3, chi_zip, tol, u, sv, nullptr, &w);
      out.sites[k] = std::move(u);
      carry = sv.reshaped({sv.shape[0], bp, wp});
      kept_product *= (1.0 - w);
    }
  }
  out.ortho_center = n - 1;
  auto [compressed, w2] = compress(out, chi, tol);
  if (discarded) *discarded += 1.0 - kept_product * (1.0 - w2);
  return compressed;
}

}  // namespace lcim
