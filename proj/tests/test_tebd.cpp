#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lcim/engine.hpp"
#include "lcim/observe.hpp"
#include "lcim/oracle.hpp"
#include "lcim/tebd.hpp"
#include "test_helpers.hpp"

using namespace lcim;

namespace {

constexpr double kG = 0.685, kJ = 0.31, kH = 0.2;

CircuitParams chaotic_pure_plus(std::size_t T) {
  CircuitParams p;
  p.g = kG;
  p.J = kJ;
  p.h = kH;
  p.T = T;
  p.initial_state = InitialStateKind::product_pure;
  p.rho0 << 0.5, 0.5, 0.5, 0.5;
  return p;
}

SpatialMPS plus_chain(std::size_t L) {
  SpatialMPS m;
  for (std::size_t i = 0; i < L; ++i) {
    DenseTensor t({1, 2, 1});
    t.at(0, 0, 0) = std::sqrt(0.5);
    t.at(0, 1, 0) = std::sqrt(0.5);
    m.sites.push_back(std::move(t));
  }
  return canonicalize(m, 0);
}

}  // namespace

TEST_CASE("tebd_quench: circuits with a conserved axis give a constant series") {
  CircuitParams p;
  p.initial_state = InitialStateKind::product_pure;
  p.rho0 << 0.5, 0.5, 0.5, 0.5;
  auto flat = tebd_quench(p, 10, 16, 3, Axis::X);
  REQUIRE(flat.size() == 4);
  for (const auto& pt : flat) {
    INFO("t=" << pt.t);
    CHECK(pt.value == Catch::Approx(1.0).margin(1e-12));
    CHECK(pt.discarded == Catch::Approx(0.0).margin(1e-12));
  }

  // Without kicks the Z polarization of the all-up state is conserved even
  // with couplings and fields on.
  CircuitParams pz;
  pz.g = 0.0;
  pz.J = kJ;
  pz.h = kH;
  pz.initial_state = InitialStateKind::product_pure;
  pz.rho0 << 1.0, 0.0, 0.0, 0.0;
  auto zs = tebd_quench(pz, 10, 16, 3, Axis::Z);
  for (const auto& pt : zs) {
    INFO("t=" << pt.t);
    CHECK(pt.value == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("tebd_quench: untruncated series matches the dense oracle") {
  CircuitParams p = chaotic_pure_plus(3);
  auto tb = tebd_quench(p, 10, 64, 3, Axis::X);
  auto ref = exact_polarization_series(p, 10, pauli_x());
  REQUIRE(tb.size() == 4);
  REQUIRE(ref.size() == 4);
  for (std::size_t t = 0; t <= 3; ++t) {
    INFO("t=" << t);
    CHECK(std::abs(tb[t].value - ref[t].real()) < 1e-9);
    CHECK(tb[t].discarded == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("tebd_autocorr: normalization and conservation laws") {
  CircuitParams p;
  p.g = 0.0;
  p.J = kJ;
  p.h = kH;
  auto zs = tebd_autocorr(p, 12, 16, 4, pauli_z());
  REQUIRE(zs.size() == 5);
  for (const auto& pt : zs) {
    INFO("t=" << pt.t);
    CHECK(pt.value == Catch::Approx(1.0).margin(1e-12));
  }
  CircuitParams pc = chaotic_pure_plus(2);
  pc.initial_state = InitialStateKind::infinite_temperature;
  auto xs = tebd_autocorr(pc, 10, 64, 2, pauli_x());
  CHECK(xs[0].value == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("tebd_autocorr: untruncated series matches the dense oracle") {
  CircuitParams p;
  p.g = kG;
  p.J = kJ;
  p.h = kH;
  p.T = 3;
  auto tb = tebd_autocorr(p, 10, 256, 3, pauli_x());
  auto ref = exact_autocorr_series(p, 10, pauli_x());
  REQUIRE(tb.size() == 4);
  for (std::size_t t = 0; t <= 3; ++t) {
    INFO("t=" << t);
    CHECK(std::abs(tb[t].value - ref[t].real()) < 1e-9);
  }
}

TEST_CASE("tebd: truncation accounting matches the actual norm loss") {
  CircuitParams p = chaotic_pure_plus(1);
  const PeriodGates gates = build_period_gates(p);

  SpatialMPS exact_m = plus_chain(12);
  double kept = 1.0;
  for (int t = 0; t < 4; ++t) kept *= 1.0 - detail::state_period(exact_m, gates, 4096, 0.0);
  auto [l_exact, ph_exact] = overlap_log(exact_m, exact_m);
  CHECK(std::exp(l_exact) == Catch::Approx(1.0).margin(1e-12));
  CHECK(kept == Catch::Approx(1.0).margin(1e-12));

  SpatialMPS trunc_m = plus_chain(12);
  double kept_t = 1.0;
  for (int t = 0; t < 4; ++t) kept_t *= 1.0 - detail::state_period(trunc_m, gates, 6, 0.0);
  auto [l_trunc, ph_trunc] = overlap_log(trunc_m, trunc_m);
  CHECK(kept_t < 1.0 - 1e-6);  // chi = 6 genuinely truncates here
  CHECK(std::abs(std::exp(l_trunc) - kept_t) < 1e-12);
}

TEST_CASE("tebd: mid-chain series is insensitive to doubling the chain") {
  CircuitParams p = chaotic_pure_plus(3);
  auto a = tebd_quench(p, 10, 256, 3, Axis::X);
  auto b = tebd_quench(p, 20, 256, 3, Axis::X);
  for (std::size_t t = 0; t <= 3; ++t) {
    INFO("t=" << t);
    CHECK(std::abs(a[t].value - b[t].value) < 1e-10);
  }
  CircuitParams pa = chaotic_pure_plus(3);
  pa.initial_state = InitialStateKind::infinite_temperature;
  auto c = tebd_autocorr(pa, 10, 256, 3, pauli_x());
  auto d = tebd_autocorr(pa, 20, 256, 3, pauli_x());
  for (std::size_t t = 0; t <= 3; ++t) {
    INFO("t=" << t);
    CHECK(std::abs(c[t].value - d[t].value) < 1e-10);
  }
}

TEST_CASE("tebd_quench: chi scan agrees with the influence-matrix series until "
          "truncation kicks in, then drifts") {
  const std::size_t T = 8, L = 2 * T + 4;
  CircuitParams p = chaotic_pure_plus(T);
  auto [ims_r, tr_r] = lcga_build(p, T, 256, 0.0, EnvSide::right);
  auto [ims_l, tr_l] = lcga_build(p, T, 256, 0.0, EnvSide::left);
  REQUIRE(tr_r.steps.back().discarded_weight == Catch::Approx(0.0).margin(1e-14));
  auto ref = polarization_series(ims_l, ims_r, p, Axis::X);

  for (std::size_t chi : {32u, 64u, 128u}) {
    auto tb = tebd_quench(p, L, chi, T, Axis::X);
    REQUIRE(tb.size() == T + 1);
    for (std::size_t t = 0; t <= T; ++t) {
      if (tb[t].discarded < 1e-8) {
        INFO("chi=" << chi << " t=" << t);
        CHECK(std::abs(tb[t].value - ref[t].second) < 1e-8);
      }
    }
    if (chi == 32) {
      // The smallest chi visibly drifts once its discarded weight passes 1e-8.
      CHECK(tb[T].discarded > 1e-7);
      CHECK(std::abs(tb[T].value - ref[T].second) > 1e-8);
    }
    if (chi == 128) {
      CHECK(tb[T].discarded < 1e-10);
      CHECK(std::abs(tb[T].value - ref[T].second) < 1e-12);
    }
  }
}

TEST_CASE("tebd: argument validation") {
  CircuitParams p = chaotic_pure_plus(3);
  CHECK_THROWS_AS(tebd_quench(p, 9, 64, 3, Axis::X), ConfigError);  // L < 2T + 4
  CHECK_THROWS_AS(tebd_quench(p, 10, 0, 3, Axis::X), ConfigError);

  CircuitParams inf_t = chaotic_pure_plus(3);
  inf_t.initial_state = InitialStateKind::infinite_temperature;
  CHECK_THROWS_AS(tebd_quench(inf_t, 10, 64, 3, Axis::X), ConfigError);

  CircuitParams mixed = chaotic_pure_plus(3);
  mixed.rho0 << 0.5, 0.0, 0.0, 0.5;
  CHECK_THROWS_AS(tebd_quench(mixed, 10, 64, 3, Axis::X), ConfigError);

  CHECK_THROWS_AS(tebd_autocorr(inf_t, 9, 64, 3, pauli_x()), ConfigError);
  CHECK_THROWS_AS(tebd_autocorr(inf_t, 10, 64, 3, Mat2::Zero()), ConfigError);
}
