#pragma once

// Dense complex tensors with row-major storage, pairwise contraction via
// matrix multiplication, and SVD splitting with truncation bookkeeping.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <complex>
#ifndef lapack_complex_double
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#define lapack_complex_float_real(z) ((z).real())
#define lapack_complex_float_imag(z) ((z).imag())
#define lapack_complex_double_real(z) ((z).real())
#define lapack_complex_double_imag(z) ((z).imag())
#endif
#include <lapacke.h>

#include "lcim/core.hpp"

namespace lcim {

using RowMat =
    Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DenseTensor {
  std::vector<std::size_t> shape;
  std::vector<cd> data;  // row-major

  DenseTensor() = default;

  explicit DenseTensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(count(shape), cd(0, 0));
  }

  DenseTensor(std::vector<std::size_t> s, std::vector<cd> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (count(shape) != data.size())
      throw std::invalid_argument("DenseTensor: shape/data size mismatch");
  }

  static std::size_t count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) {
      if (d < 1) throw std::invalid_argument("DenseTensor: dimensions must be >= 1");
      n *= d;
    }
    return n;
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  std::vector<std::size_t> strides() const {
    std::vector<std::size_t> st(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) st[i - 1] = st[i] * shape[i];
    return st;
  }

  template <typename... Is>
  cd& at(Is... is) {
    return data[flat_index({static_cast<std::size_t>(is)...})];
  }
  template <typename... Is>
  const cd& at(Is... is) const {
    return data[flat_index({static_cast<std::size_t>(is)...})];
  }

  std::size_t flat_index(std::initializer_list<std::size_t> idx) const {
    if (idx.size() != shape.size())
      throw std::invalid_argument("DenseTensor: wrong index count");
    std::size_t f = 0, i = 0;
    auto st = strides();
    for (std::size_t v : idx) {
      if (v >= shape[i]) throw std::out_of_range("DenseTensor: index out of range");
      f += v * st[i++];
    }
    return f;
  }

  // Reinterpret with a new shape of equal total size (no data movement).
  DenseTensor reshaped(std::vector<std::size_t> s) const {
    if (count(s) != data.size())
      throw std::invalid_argument("DenseTensor: reshape size mismatch");
    return DenseTensor(std::move(s), data);
  }

  // Permute legs: result leg i is input leg perm[i].
  DenseTensor transposed(const std::vector<std::size_t>& perm) const {
    if (perm.size() != shape.size())
      throw std::invalid_argument("DenseTensor: permutation rank mismatch");
    std::vector<bool> seen(perm.size(), false);
    std::vector<std::size_t> new_shape(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
      if (perm[i] >= perm.size() || seen[perm[i]])
        throw std::invalid_argument("DenseTensor: invalid permutation");
      seen[perm[i]] = true;
      new_shape[i] = shape[perm[i]];
    }
    DenseTensor out(new_shape);
    const auto in_st = strides();
    const auto out_st = out.strides();
    const std::size_t r = shape.size();
    std::vector<std::size_t> idx(r, 0);
    for (std::size_t f = 0; f < out.data.size(); ++f) {
      std::size_t src = 0;
      for (std::size_t i = 0; i < r; ++i) src += idx[i] * in_st[perm[i]];
      out.data[f] = data[src];
      for (std::size_t i = r; i-- > 0;) {
        if (++idx[i] < new_shape[i]) break;
        idx[i] = 0;
      }
    }
    return out;
  }

  DenseTensor conj() const {
    DenseTensor out = *this;
    for (auto& z : out.data) z = std::conj(z);
    return out;
  }

  double norm() const {
    double s = 0;
    for (const auto& z : data) s += std::norm(z);
    return std::sqrt(s);
  }

  DenseTensor& operator*=(cd a) {
    for (auto& z : data) z *= a;
    return *this;
  }
};

// ---------------------------------------------------------------------------
// contract_pair: sum over the given (a-leg, b-leg) index pairs.  Result legs
// are the unpaired legs of a (in order) followed by the unpaired legs of b.
// ---------------------------------------------------------------------------

inline DenseTensor contract_pair(const DenseTensor& a, const DenseTensor& b,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& leg_pairs) {
  std::vector<bool> a_used(a.rank(), false), b_used(b.rank(), false);
  for (const auto& [ia, ib] : leg_pairs) {
    if (ia >= a.rank() || ib >= b.rank())
      throw std::invalid_argument("contract_pair: leg index out of range");
    if (a_used[ia] || b_used[ib])
      throw std::invalid_argument("contract_pair: repeated leg in pairs");
    if (a.shape[ia] != b.shape[ib])
      throw std::invalid_argument("contract_pair: dimension mismatch on a pair");
    a_used[ia] = true;
    b_used[ib] = true;
  }

  std::vector<std::size_t> a_free, b_free, a_con, b_con;
  for (std::size_t i = 0; i < a.rank(); ++i)
    (a_used[i] ? a_con : a_free).push_back(i);
  // contracted legs ordered by their appearance in leg_pairs so a/b agree
  a_con.clear();
  for (const auto& [ia, ib] : leg_pairs) {
    a_con.push_back(ia);
    b_con.push_back(ib);
  }
  for (std::size_t i = 0; i < b.rank(); ++i)
    if (!b_used[i]) b_free.push_back(i);

  std::vector<std::size_t> a_perm = a_free, b_perm = b_con;
  a_perm.insert(a_perm.end(), a_con.begin(), a_con.end());
  b_perm.insert(b_perm.end(), b_free.begin(), b_free.end());

  DenseTensor ap = a.transposed(a_perm);
  DenseTensor bp = b.transposed(b_perm);

  std::size_t m = 1, k = 1, n = 1;
  std::vector<std::size_t> out_shape;
  for (std::size_t i : a_free) {
    m *= a.shape[i];
    out_shape.push_back(a.shape[i]);
  }
  for (std::size_t i : a_con) k *= a.shape[i];
  for (std::size_t i : b_free) {
    n *= b.shape[i];
    out_shape.push_back(b.shape[i]);
  }
  if (out_shape.empty()) out_shape.push_back(1);  // scalar as shape {1}

  Eigen::Map<const RowMat> ma(ap.data.data(), static_cast<Eigen::Index>(m),
                              static_cast<Eigen::Index>(k));
  Eigen::Map<const RowMat> mb(bp.data.data(), static_cast<Eigen::Index>(k),
                              static_cast<Eigen::Index>(n));
  DenseTensor out(out_shape);
  Eigen::Map<RowMat> mo(out.data.data(), static_cast<Eigen::Index>(m),
                        static_cast<Eigen::Index>(n));
  mo.noalias() = ma * mb;
  return out;
}

// ---------------------------------------------------------------------------
// SVD splitting.
// ---------------------------------------------------------------------------

struct SchmidtSpectrum {
  std::vector<double> values;  // retained singular values, nonincreasing
  std::size_t cut = 0;

  // von Neumann entropy (nats) of the normalized squared spectrum.
  double entropy() const {
    double total = 0;
    for (double s : values) total += s * s;
    if (total <= 0) return 0.0;
    double ent = 0;
    for (double s : values) {
      double p = (s * s) / total;
      if (p > 0) ent -= p * std::log(p);
    }
    return ent;
  }
};

struct SvdSplit {
  DenseTensor left;          // isometry; legs = chosen left legs + new bond
  SchmidtSpectrum spectrum;  // retained singular values
  DenseTensor right;         // singular values absorbed here; bond + right legs
  double discarded_weight = 0.0;  // dropped squared weight / total squared weight
};

namespace detail {
// Divide-and-conquer SVD kernels can fail to converge or (in some
// implementations) silently return factors with U S V^H far from A on
// rank-deficient inputs, so every decomposition is verified by its
// reconstruction residual before being accepted.
inline bool svd_factors_valid(const MatX& a, const MatX& u, const Eigen::VectorXd& s,
                              const MatX& v) {
  if (!u.allFinite() || !s.allFinite() || !v.allFinite()) return false;
  const double scale = s.size() > 0 ? s(0) : 0.0;
  const double resid = (u * s.asDiagonal() * v.adjoint() - a).cwiseAbs().maxCoeff();
  return resid <= 1e-10 * std::max(scale, 1e-300) + 1e-13;
}

// LAPACK thin SVD; dc selects zgesdd (divide and conquer) over zgesvd.
inline bool svd_lapack(const MatX& a, MatX& u, Eigen::VectorXd& s, MatX& v, bool dc) {
  const lapack_int m = static_cast<lapack_int>(a.rows());
  const lapack_int n = static_cast<lapack_int>(a.cols());
  const lapack_int k = std::min(m, n);
  MatX work = a;  // LAPACK destroys the input
  u.resize(m, k);
  s.resize(k);
  MatX vt(k, n);
  lapack_int info;
  if (dc) {
    info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', m, n, work.data(), m, s.data(), u.data(),
                          m, vt.data(), k);
  } else {
    std::vector<double> superb(static_cast<std::size_t>(std::max<lapack_int>(1, k)));
    info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'S', 'S', m, n, work.data(), m, s.data(),
                          u.data(), m, vt.data(), k, superb.data());
  }
  if (info != 0) return false;
  v = vt.adjoint();
  return svd_factors_valid(a, u, s, v);
}
}  // namespace detail

// Thin SVD (u: m x k isometry, s: descending, v: n x k isometry with
// a = u * diag(s) * v^H).  Tries the fast divide-and-conquer kernel first and
// falls back to the slower robust one; throws SvdError if both fail.
inline void svd_matrix(const MatX& a, MatX& u, Eigen::VectorXd& s, MatX& v) {
  if (!a.allFinite()) throw SvdError("svd: non-finite input");
  if (a.rows() == 0 || a.cols() == 0) throw SvdError("svd: empty input");
  if (detail::svd_lapack(a, u, s, v, true)) return;
  if (detail::svd_lapack(a, u, s, v, false)) return;
  throw SvdError("svd: failed to produce an accurate decomposition");
}

// Split t into left (isometry) and right (singular values absorbed) factors
// across the partition given by left_legs (kept in the order provided).
// Truncates to max_rank and drops singular values below tol * s_max.
inline SvdSplit svd_split(const DenseTensor& t, const std::vector<std::size_t>& left_legs,
                          std::optional<std::size_t> max_rank = std::nullopt,
                          double tol = 0.0) {
  if (left_legs.empty() || left_legs.size() >= t.rank())
    throw std::invalid_argument("svd_split: left_legs must be a nonempty proper subset");
  std::vector<bool> used(t.rank(), false);
  for (std::size_t i : left_legs) {
    if (i >= t.rank() || used[i])
      throw std::invalid_argument("svd_split: invalid left leg set");
    used[i] = true;
  }
  std::vector<std::size_t> perm = left_legs;
  std::vector<std::size_t> right_legs;
  for (std::size_t i = 0; i < t.rank(); ++i)
    if (!used[i]) right_legs.push_back(i);
  perm.insert(perm.end(), right_legs.begin(), right_legs.end());

  DenseTensor tp = t.transposed(perm);
  std::size_t m = 1, n = 1;
  std::vector<std::size_t> lshape, rshape;
  for (std::size_t i : left_legs) {
    m *= t.shape[i];
    lshape.push_back(t.shape[i]);
  }
  for (std::size_t i : right_legs) {
    n *= t.shape[i];
    rshape.push_back(t.shape[i]);
  }

  Eigen::Map<const RowMat> ma(tp.data.data(), static_cast<Eigen::Index>(m),
                              static_cast<Eigen::Index>(n));
  MatX u, v;
  Eigen::VectorXd s;
  svd_matrix(MatX(ma), u, s, v);

  const std::size_t full = static_cast<std::size_t>(s.size());
  double total_sq = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total_sq += s(i) * s(i);
  // Modes numerically indistinguishable from zero are always dropped.
  const double cutoff = s.size() > 0 ? std::max(tol, 1e-14) * s(0) : -1.0;
  std::size_t keep = full;
  if (max_rank && *max_rank < keep) keep = *max_rank;
  while (keep > 1 && s(static_cast<Eigen::Index>(keep) - 1) <= cutoff) --keep;
  if (keep == 0) keep = 1;

  double kept_sq = 0;
  for (std::size_t i = 0; i < keep; ++i) kept_sq += s(static_cast<Eigen::Index>(i)) * s(static_cast<Eigen::Index>(i));

  SvdSplit out;
  out.spectrum.values.assign(s.data(), s.data() + keep);
  out.spectrum.cut = left_legs.size();
  out.discarded_weight = total_sq > 0 ? std::max(0.0, (total_sq - kept_sq) / total_sq) : 0.0;

  lshape.push_back(keep);
  DenseTensor left(lshape);
  Eigen::Map<RowMat> ml(left.data.data(), static_cast<Eigen::Index>(m),
                        static_cast<Eigen::Index>(keep));
  ml = u.leftCols(static_cast<Eigen::Index>(keep));

  rshape.insert(rshape.begin(), keep);
  DenseTensor right(rshape);
  Eigen::Map<RowMat> mr(right.data.data(), static_cast<Eigen::Index>(keep),
                        static_cast<Eigen::Index>(n));
  mr = s.head(static_cast<Eigen::Index>(keep)).asDiagonal() *
       v.leftCols(static_cast<Eigen::Index>(keep)).adjoint();

  out.left = std::move(left);
  out.right = std::move(right);
  return out;
}

}  // namespace lcim
