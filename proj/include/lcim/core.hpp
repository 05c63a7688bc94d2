#pragma once

// Core scalar types, Pauli/qubit constants, folded-leg constants, parameter
// records, and the error taxonomy shared by the whole library.

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lcim {

inline constexpr const char* library_version = "0.1.0";

using cd = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;
using MatX = Eigen::MatrixXcd;
using VecX = Eigen::VectorXcd;

inline constexpr double pi = std::numbers::pi_v<double>;

// ---------------------------------------------------------------------------
// Error taxonomy.  These map onto the CLI exit codes: bad user input -> 2,
// instance exceeds a hard resource cap -> 3, SVD failed to converge -> 4.
// ---------------------------------------------------------------------------

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct SizeCapError : std::runtime_error {
  explicit SizeCapError(const std::string& m) : std::runtime_error(m) {}
};

struct SvdError : std::runtime_error {
  explicit SvdError(const std::string& m) : std::runtime_error(m) {}
};

// ---------------------------------------------------------------------------
// Qubit constants.
// ---------------------------------------------------------------------------

inline const Mat2& pauli_i() {
  static const Mat2 m = Mat2::Identity();
  return m;
}

inline const Mat2& pauli_x() {
  static const Mat2 m = (Mat2() << 0, 1, 1, 0).finished();
  return m;
}

inline const Mat2& pauli_y() {
  static const Mat2 m = (Mat2() << cd(0, 0), cd(0, -1), cd(0, 1), cd(0, 0)).finished();
  return m;
}

inline const Mat2& pauli_z() {
  static const Mat2 m = (Mat2() << 1, 0, 0, -1).finished();
  return m;
}

// Kronecker product (row-major index convention: row = i1*rows(b)+i2).
inline MatX kron(const MatX& a, const MatX& b) {
  MatX out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// ---------------------------------------------------------------------------
// Folded (doubled) leg basis.  A folded leg carries a forward-branch spin s
// and a backward-branch spin s̄, combined as index a = 2*s + s̄.  This equals
// row-major vectorization of a 2x2 operator: vec(rho)[2*r + c] = rho(r, c).
// ---------------------------------------------------------------------------

inline Vec4 vec_op(const Mat2& rho) {
  Vec4 v;
  v << rho(0, 0), rho(0, 1), rho(1, 0), rho(1, 1);
  return v;
}

inline Mat2 unvec_op(const Vec4& v) {
  Mat2 m;
  m << v(0), v(1), v(2), v(3);
  return m;
}

// Vectorized identity: the pass-through "Bell pair" between the two branches.
inline const Vec4& vec_id() {
  static const Vec4 v = vec_op(Mat2::Identity());
  return v;
}

// Vectorized maximally mixed state (1/2) * identity.
inline const Vec4& vec_mix() {
  static const Vec4 v = 0.5 * vec_id();
  return v;
}

// Superoperator for rho -> u rho u^dagger in the row-major vec convention.
inline Mat4 superop_conj(const Mat2& u) { return kron(u, u.conjugate()); }

// Superoperator factors for operator insertions on a folded leg.
inline Mat4 superop_left_mult(const Mat2& a) { return kron(a, Mat2::Identity()); }   // rho -> a rho
inline Mat4 superop_right_mult_dag(const Mat2& a) { return kron(Mat2::Identity(), a.conjugate()); }  // rho -> rho a^dagger

// ---------------------------------------------------------------------------
// Circuit parameters.
// ---------------------------------------------------------------------------

// ---------------------------------------------------------------------------
// Operator insertions along the system worldline.  Half-step slots: 0 acts on
// the initial state; 2*tau-1 sits between the odd and even layers of period
// tau; 2*tau sits after period tau completes.
// ---------------------------------------------------------------------------

enum class InsertionSide { forward_branch, backward_branch, both_as_superop };

struct Insertion {
  std::size_t half_step = 0;  // 0 .. 2T
  Mat2 op = Mat2::Identity();
  InsertionSide side = InsertionSide::forward_branch;

  // Folded-leg superoperator factor of this insertion.
  Mat4 superop() const {
    switch (side) {
      case InsertionSide::forward_branch:
        return superop_left_mult(op);
      case InsertionSide::backward_branch:
        return superop_right_mult_dag(op);
      case InsertionSide::both_as_superop:
      default:
        return kron(op, op.conjugate());
    }
  }
};

enum class InitialStateKind { infinite_temperature, product_pure };

struct CircuitParams {
  double g = 0.0;  // transverse kick angle (radians)
  double J = 0.0;  // Ising coupling angle (radians)
  double h = 0.0;  // longitudinal field angle (radians)
  std::size_t T = 1;  // number of Floquet periods
  InitialStateKind initial_state = InitialStateKind::infinite_temperature;
  Mat2 rho0 = 0.5 * Mat2::Identity();  // single-site density matrix (product_pure)

  void validate() const {
    if (T < 1) throw ConfigError("CircuitParams: T must be >= 1");
    if (initial_state == InitialStateKind::product_pure) {
      if ((rho0 - rho0.adjoint()).norm() > 1e-10)
        throw ConfigError("CircuitParams: rho0 must be Hermitian");
      if (std::abs(rho0.trace().real() - 1.0) > 1e-10 || std::abs(rho0.trace().imag()) > 1e-12)
        throw ConfigError("CircuitParams: rho0 must have unit trace");
      Eigen::SelfAdjointEigenSolver<Mat2> es(rho0);
      if (es.eigenvalues().minCoeff() < -1e-10)
        throw ConfigError("CircuitParams: rho0 must be positive semidefinite");
    }
  }

  // Single-site initial density matrix used for every environment site.
  Mat2 site_rho() const {
    return initial_state == InitialStateKind::infinite_temperature ? Mat2(0.5 * Mat2::Identity())
                                                                   : rho0;
  }
};

// Site index used for "mid-chain" quantities on an open chain of L sites,
// aligned so that the bond to its right is an even bond (matching the
// infinite-chain layer convention).
inline std::size_t mid_site(std::size_t L) {
  std::size_t s = L / 2;
  if (s % 2 == 1) --s;
  return s;
}

}  // namespace lcim
