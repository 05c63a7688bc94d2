#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lcim/folded.hpp"
#include "lcim/mps.hpp"
#include "lcim/oracle.hpp"
#include "test_helpers.hpp"

using namespace lcim;
using testutil::max_abs_diff;

namespace {

const double ln2 = std::log(2.0);

CircuitParams params(double g, double J, double h, std::size_t T) {
  CircuitParams p;
  p.g = g;
  p.J = J;
  p.h = h;
  p.T = T;
  return p;
}

}  // namespace

TEST_CASE("exact_im: empty environment gives the wire product") {
  for (std::size_t T : {1u, 2u, 3u}) {
    DenseTensor v = exact_im(params(0.7, 0.3, 0.1, T), 0);
    DenseTensor want = mps_to_dense(build_obc_im(T));
    CHECK(max_abs_diff(v, want) < 1e-14);
  }
}

TEST_CASE("exact_im: identity circuit gives the wire product at any depth") {
  for (std::size_t L : {2u, 4u}) {
    DenseTensor v = exact_im(params(0, 0, 0, 2), L);
    DenseTensor want = mps_to_dense(build_obc_im(2));
    CHECK(max_abs_diff(v, want) < 1e-13);
  }
}

TEST_CASE("exact_im: two-site environment equals the transfer image of the wire state") {
  const CircuitParams p = params(0.685, 0.31, 0.2, 2);
  DenseTensor v = exact_im(p, 2);
  TemporalMPS grown = apply_mpo(build_transfer_mpo(p), build_obc_im(p.T), 256, 0.0);
  CHECK(max_abs_diff(v, mps_to_dense(grown)) < 1e-12);
}

TEST_CASE("exact_im: deep environments saturate at the light cone") {
  const CircuitParams p = params(0.5, 0.4, 0.15, 1);
  DenseTensor v2 = exact_im(p, 2);
  DenseTensor v4 = exact_im(p, 4);
  DenseTensor v6 = exact_im(p, 6);
  CHECK(max_abs_diff(v2, v4) < 1e-13);
  CHECK(max_abs_diff(v4, v6) < 1e-13);
}

TEST_CASE("exact_im: deep-end termination only matters for a single-site column") {
  // The cut edge site talks to the rest of the chain through a diagonal
  // coupling alone, so its leftover single-site factors drop out of the traced
  // influence tensor whenever at least one internal site separates it from the
  // open legs.  Verified here for both sides and two parameter sets.
  for (double h : {0.2, 0.9}) {
    for (std::size_t T : {2u, 3u}) {
      const CircuitParams p = params(0.685, 0.31, h, T);
      for (std::size_t L : {2u, 3u, 4u}) {
        for (EnvSide side : {EnvSide::right, EnvSide::left}) {
          DenseTensor wire = exact_im_env(p, L, side, EnvTermination::wire);
          DenseTensor lit = exact_im_env(p, L, side, EnvTermination::literal_edges);
          INFO("h=" << h << " T=" << T << " L=" << L
                    << " side=" << (side == EnvSide::right ? "right" : "left"));
          CHECK(max_abs_diff(wire, lit) < 1e-13);
        }
      }
      // With the edge site directly next to the system the factors are live.
      DenseTensor wire1 = exact_im_env(p, 1, EnvSide::left, EnvTermination::wire);
      DenseTensor lit1 = exact_im_env(p, 1, EnvSide::left, EnvTermination::literal_edges);
      CHECK(max_abs_diff(wire1, lit1) > 1e-2);
    }
  }
  const CircuitParams p31 = params(0.685, 0.31, 0.9, 3);
  DenseTensor wire1 = exact_im_env(p31, 1, EnvSide::right, EnvTermination::wire);
  DenseTensor lit1 = exact_im_env(p31, 1, EnvSide::right, EnvTermination::literal_edges);
  CHECK(max_abs_diff(wire1, lit1) > 1e-2);
}

TEST_CASE("exact_im: trace closure on every leg pair gives exactly one") {
  // Closing in-legs with the mixed state and out-legs with the identity
  // expresses trace preservation of the environment channel.
  const CircuitParams p = params(0.685, 0.31, 0.2, 2);
  for (std::size_t L : {0u, 2u, 4u}) {
    DenseTensor v = exact_im(p, L);
    cd acc(0, 0);
    std::vector<std::size_t> idx(2 * p.T, 0);
    for (std::size_t f = 0; f < v.size(); ++f) {
      cd wgt(1, 0);
      for (std::size_t tau = 0; tau < p.T; ++tau) {
        wgt *= vec_mix()(static_cast<Eigen::Index>(idx[2 * tau]));
        wgt *= vec_id()(static_cast<Eigen::Index>(idx[2 * tau + 1]));
      }
      acc += wgt * v.data[f];
      for (std::size_t i = 2 * p.T; i-- > 0;) {
        if (++idx[i] < 4) break;
        idx[i] = 0;
      }
    }
    INFO("L=" << L);
    CHECK(std::abs(acc - cd(1, 0)) < 1e-12);
  }
}

TEST_CASE("exact_im enforces its size caps") {
  CHECK_THROWS_AS(exact_im(params(0.1, 0.2, 0.3, 5), 2), SizeCapError);
  CHECK_THROWS_AS(exact_im(params(0.1, 0.2, 0.3, 2), 10), SizeCapError);
  CHECK_THROWS_AS(exact_im(params(0.1, 0.2, 0.3, 4), 6), SizeCapError);
}

TEST_CASE("exact_entropy: product vector has zero entropy") {
  DenseTensor v({4, 4});
  v.at(1, 2) = cd(0.3, -0.4);
  CHECK(exact_entropy(v, 0) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("exact_entropy: wire product inside a period gives 2 ln 2") {
  DenseTensor v = exact_im(params(0, 0, 0, 2), 0);
  CHECK(exact_entropy(v, 0) == Catch::Approx(2 * ln2).margin(1e-12));
  CHECK(exact_entropy(v, 1) == Catch::Approx(0.0).margin(1e-12));
  CHECK(exact_entropy(v, 2) == Catch::Approx(2 * ln2).margin(1e-12));
}

TEST_CASE("exact_entropy agrees with cut_entropy on the MPS form") {
  const CircuitParams p = params(0.685, 0.31, 0.2, 3);
  DenseTensor v = exact_im(p, 4);
  TemporalMPS m = mps_from_dense(v);
  CHECK(mps_fidelity(m, m) > 0);  // nonzero state
  for (std::size_t cut = 0; cut + 1 < 2 * p.T; ++cut) {
    INFO("cut=" << cut);
    CHECK(exact_entropy(v, cut) == Catch::Approx(cut_entropy(m, cut)).margin(1e-10));
  }
}

TEST_CASE("exact_entropy rejects the zero vector") {
  DenseTensor v({4, 4});
  CHECK_THROWS_AS(exact_entropy(v, 0), std::invalid_argument);
}

TEST_CASE("exact_dynamics: X expectation on the X-polarized product at t=0") {
  CircuitParams p = params(0.685, 0.31, 0.2, 1);
  p.initial_state = InitialStateKind::product_pure;
  p.rho0 << 0.5, 0.5, 0.5, 0.5;
  std::vector<Insertion> ins(1);
  ins[0].half_step = 0;
  ins[0].op = pauli_x();
  ins[0].side = InsertionSide::forward_branch;
  const cd val = exact_dynamics(p, 6, std::vector<Mat2>(6, p.rho0), ins);
  CHECK(std::abs(val - cd(1, 0)) < 1e-12);
}

TEST_CASE("exact_dynamics: trace is preserved every period") {
  CircuitParams p = params(0.685, 0.31, 0.2, 4);
  p.initial_state = InitialStateKind::product_pure;
  p.rho0 << 0.5, 0.5, 0.5, 0.5;
  auto series = exact_polarization_series(p, 6, Mat2::Identity());
  REQUIRE(series.size() == 5);
  for (const cd& v : series) CHECK(std::abs(v - cd(1, 0)) < 1e-12);
}

TEST_CASE("exact_dynamics: series via insertions matches the one-pass series") {
  CircuitParams p = params(0.685, 0.31, 0.2, 3);
  p.initial_state = InitialStateKind::product_pure;
  p.rho0 << 0.5, 0.5, 0.5, 0.5;
  auto series = exact_polarization_series(p, 6, pauli_x());
  for (std::size_t t = 0; t <= p.T; ++t) {
    std::vector<Insertion> ins(1);
    ins[0].half_step = 2 * t;
    ins[0].op = pauli_x();
    ins[0].side = InsertionSide::forward_branch;
    const cd val = exact_dynamics(p, 6, std::vector<Mat2>(6, p.rho0), ins);
    INFO("t=" << t);
    CHECK(std::abs(val - series[t]) < 1e-12);
  }
}

TEST_CASE("exact_dynamics: autocorrelator starts at one and stays bounded") {
  CircuitParams p = params(pi / 4, pi / 4, 0.0, 4);
  auto c = exact_autocorr_series(p, 8, pauli_z());
  REQUIRE(c.size() == 5);
  CHECK(std::abs(c[0] - cd(1, 0)) < 1e-12);
  for (const cd& v : c) CHECK(std::abs(v) <= 1.0 + 1e-10);
}

TEST_CASE("exact_dynamics enforces the chain-size cap") {
  CircuitParams p = params(0.1, 0.2, 0.3, 1);
  CHECK_THROWS_AS(exact_dynamics(p, 13, std::vector<Mat2>(13, Mat2::Identity()), {}),
                  SizeCapError);
}
