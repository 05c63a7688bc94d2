#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "lcim/engine.hpp"
#include "lcim/observe.hpp"
#include "lcim/oracle.hpp"
#include "test_helpers.hpp"

using namespace lcim;

namespace {

constexpr double kG = 0.685, kJ = 0.31, kH = 0.2;

CircuitParams params(double g, double J, double h, std::size_t T,
                     InitialStateKind kind = InitialStateKind::infinite_temperature) {
  CircuitParams p;
  p.g = g;
  p.J = J;
  p.h = h;
  p.T = T;
  p.initial_state = kind;
  return p;
}

Mat2 plus_rho() {
  Mat2 r;
  r << 0.5, 0.5, 0.5, 0.5;
  return r;
}

// Exact IM pair for a finite chain of L_total sites observed at mid_site,
// with the literal edge factors of the dense oracle.
std::pair<TemporalMPS, TemporalMPS> exact_pair(const CircuitParams& p, std::size_t L_total) {
  const std::size_t s = mid_site(L_total);
  TemporalMPS left = mps_from_dense(
      exact_im_env(p, s, EnvSide::left, EnvTermination::literal_edges));
  TemporalMPS right = mps_from_dense(
      exact_im_env(p, L_total - 1 - s, EnvSide::right, EnvTermination::literal_edges));
  return {std::move(left), std::move(right)};
}

cd chain_value(const CircuitParams& p, std::size_t L_total,
               const std::vector<Insertion>& ins) {
  return exact_dynamics(p, L_total, std::vector<Mat2>(L_total, p.site_rho()), ins,
                        mid_site(L_total));
}

}  // namespace

TEST_CASE("evaluate_sandwich: no insertions gives exactly 1") {
  for (InitialStateKind kind :
       {InitialStateKind::infinite_temperature, InitialStateKind::product_pure}) {
    for (std::size_t T : {1u, 2u, 3u}) {
      CircuitParams p = params(kG, kJ, kH, T, kind);
      if (kind == InitialStateKind::product_pure) p.rho0 = plus_rho();
      auto [left, right] = exact_pair(p, 6);
      const cd v = evaluate_sandwich(left, right, p, p.site_rho(), {});
      INFO("kind " << static_cast<int>(kind) << " T=" << T);
      CHECK(std::abs(v - cd(1, 0)) < 1e-12);
    }
  }
}

TEST_CASE("evaluate_sandwich: X insertion at time zero measures the initial state") {
  CircuitParams p = params(kG, kJ, kH, 2, InitialStateKind::product_pure);
  p.rho0 = plus_rho();
  auto [left, right] = exact_pair(p, 6);
  const Insertion ins{0, pauli_x(), InsertionSide::forward_branch};
  const cd v = evaluate_sandwich(left, right, p, plus_rho(), {ins});
  CHECK(std::abs(v - cd(1, 0)) < 1e-12);
}

TEST_CASE("evaluate_sandwich: matches the dense full-chain oracle") {
  // The sandwich of the two finite-environment IMs must reproduce the dense
  // open-chain evolution identically, for every insertion flavor and slot
  // parity and for both chain parities (which exercise both literal edge
  // factors of the environments).
  for (std::size_t L_total : {5u, 6u}) {
    for (InitialStateKind kind :
         {InitialStateKind::infinite_temperature, InitialStateKind::product_pure}) {
      CircuitParams p = params(kG, kJ, kH, 3, kind);
      if (kind == InitialStateKind::product_pure) p.rho0 = plus_rho();
      auto [left, right] = exact_pair(p, L_total);

      const std::vector<std::vector<Insertion>> cases = {
          {{2, pauli_x(), InsertionSide::forward_branch}},
          {{6, pauli_x(), InsertionSide::forward_branch}},
          {{0, pauli_x(), InsertionSide::forward_branch},
           {6, pauli_x(), InsertionSide::forward_branch}},
          {{3, pauli_z(), InsertionSide::backward_branch}},
          {{2, pauli_y(), InsertionSide::both_as_superop}},
          {{1, pauli_z(), InsertionSide::forward_branch},
           {5, pauli_x(), InsertionSide::backward_branch}},
      };
      for (std::size_t k = 0; k < cases.size(); ++k) {
        const cd got = evaluate_sandwich(left, right, p, p.site_rho(), cases[k]);
        const cd want = chain_value(p, L_total, cases[k]);
        INFO("L_total=" << L_total << " kind " << static_cast<int>(kind) << " case " << k);
        CHECK(std::abs(got - want) < 1e-10);
      }
    }
  }
}

TEST_CASE("evaluate_sandwich: argument validation") {
  CircuitParams p = params(kG, kJ, kH, 2);
  auto [left, right] = exact_pair(p, 6);
  CircuitParams p3 = params(kG, kJ, kH, 3);
  auto [left3, right3] = exact_pair(p3, 6);
  CHECK_THROWS_AS(evaluate_sandwich(left3, right, p, p.site_rho(), {}),
                  std::invalid_argument);
  const Insertion late{5, pauli_x(), InsertionSide::forward_branch};
  CHECK_THROWS_AS(evaluate_sandwich(left, right, p, p.site_rho(), {late}),
                  std::invalid_argument);
}

TEST_CASE("polarization_series: trivial circuit keeps the X polarization") {
  CircuitParams p = params(0, 0, 0, 4, InitialStateKind::product_pure);
  p.rho0 = plus_rho();
  auto [ims_r, tr_r] = lcga_build(p, 4, 256, 0.0, EnvSide::right);
  auto [ims_l, tr_l] = lcga_build(p, 4, 256, 0.0, EnvSide::left);
  auto series = polarization_series(ims_l, ims_r, p, Axis::X);
  REQUIRE(series.size() == 5);
  for (const auto& [t, v] : series) {
    INFO("t=" << t);
    CHECK(v == Catch::Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("polarization_series: short times match the dense oracle") {
  CircuitParams p = params(kG, kJ, kH, 3, InitialStateKind::product_pure);
  p.rho0 = plus_rho();
  auto [ims_r, tr_r] = lcga_build(p, 3, 4096, 0.0, EnvSide::right);
  auto [ims_l, tr_l] = lcga_build(p, 3, 4096, 0.0, EnvSide::left);
  auto series = polarization_series(ims_l, ims_r, p, Axis::X);
  auto ref = exact_polarization_series(p, 10, pauli_x());
  REQUIRE(series.size() == 4);
  REQUIRE(ref.size() == 4);
  for (std::size_t t = 0; t <= 3; ++t) {
    INFO("t=" << t);
    CHECK(std::abs(series[t].second - ref[t].real()) < 1e-8);
    CHECK(std::abs(ref[t].imag()) < 1e-10);
  }
  CHECK(series[0].second == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("autocorrelator_series: normalization and conservation laws") {
  // Without kicks the Z operator commutes with every gate, so its
  // autocorrelator stays pinned at 1 even with couplings and fields on.
  CircuitParams p = params(0, kJ, kH, 4);
  auto [ims_r, tr_r] = lcga_build(p, 4, 256, 0.0, EnvSide::right);
  auto [ims_l, tr_l] = lcga_build(p, 4, 256, 0.0, EnvSide::left);
  auto series = autocorrelator_series(ims_l, ims_r, p, pauli_z());
  REQUIRE(series.size() == 5);
  for (const auto& [t, v] : series) {
    INFO("t=" << t);
    CHECK(v == Catch::Approx(1.0).margin(1e-10));
  }
  auto x_series = autocorrelator_series(ims_l, ims_r, p, pauli_x());
  CHECK(x_series[0].second == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("autocorrelator_series: short times match the dense oracle") {
  CircuitParams p = params(kG, kJ, kH, 3);
  auto [ims_r, tr_r] = lcga_build(p, 3, 4096, 0.0, EnvSide::right);
  auto [ims_l, tr_l] = lcga_build(p, 3, 4096, 0.0, EnvSide::left);
  auto series = autocorrelator_series(ims_l, ims_r, p, pauli_x());
  auto ref = exact_autocorr_series(p, 10, pauli_x());
  REQUIRE(series.size() == 4);
  for (std::size_t t = 0; t <= 3; ++t) {
    INFO("t=" << t);
    CHECK(std::abs(series[t].second - ref[t].real()) < 1e-8);
  }
}

TEST_CASE("autocorrelator_series: rejects a pure-product initial state") {
  CircuitParams p = params(kG, kJ, kH, 2, InitialStateKind::product_pure);
  p.rho0 = plus_rho();
  auto [ims_r, tr_r] = lcga_build(p, 2, 256, 0.0, EnvSide::right);
  auto [ims_l, tr_l] = lcga_build(p, 2, 256, 0.0, EnvSide::left);
  CHECK_THROWS_AS(autocorrelator_series(ims_l, ims_r, p, pauli_x()), ConfigError);
}

TEST_CASE("observable consistency: trailing periods of a longer IM are inert") {
  // Evaluating <X(t)> inside the T=4 pair with nothing inserted after slot 2t
  // must agree with the dedicated t-period pair: the converged IM absorbs its
  // own future.  This is the time-projection identity seen through a local
  // observable.
  CircuitParams p = params(kG, kJ, kH, 4, InitialStateKind::product_pure);
  p.rho0 = plus_rho();
  auto [ims_r, tr_r] = lcga_build(p, 4, 4096, 0.0, EnvSide::right);
  auto [ims_l, tr_l] = lcga_build(p, 4, 4096, 0.0, EnvSide::left);
  for (std::size_t t = 1; t <= 3; ++t) {
    CircuitParams pt = p;
    pt.T = t;
    const Insertion ins{2 * t, pauli_x(), InsertionSide::forward_branch};
    const cd direct = evaluate_sandwich(ims_l[t], ims_r[t], pt, p.site_rho(), {ins});
    CircuitParams p4 = p;
    p4.T = 4;
    const cd embedded = evaluate_sandwich(ims_l[4], ims_r[4], p4, p.site_rho(), {ins});
    INFO("t=" << t);
    CHECK(std::abs(direct - embedded) < 1e-10);
    CHECK(std::abs(direct.imag()) < 1e-10);
  }
}

TEST_CASE("lcga_build: left-side states match the dense oracle") {
  CircuitParams p = params(kG, kJ, kH, 1);
  auto [ims, trace] = lcga_build(p, 3, 4096, 0.0, EnvSide::left);
  for (std::size_t n = 1; n <= 3; ++n) {
    CircuitParams pn = p;
    pn.T = n;
    TemporalMPS oracle = mps_from_dense(exact_im_env(pn, 2 * n, EnvSide::left));
    INFO("n=" << n);
    CHECK(im_fidelity(ims[n], oracle) >= 1.0 - 1e-10);
  }
}
