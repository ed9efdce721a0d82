#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "hsclean/propagation.hpp"
#include "oracle.hpp"

using namespace hsclean;

TEST_CASE("one dense step on a 2 x 2 case") {
  const oracle::DenseMatrix t{2, 2, {0.6, 0.3, 0.4, 0.7}};
  const oracle::DenseMatrix y{2, 2, {1, 0, 0, 0}};
  const auto f = oracle::dense_fixed_point(t, y, 0.9, 1);
  // F1 = 0.9 T Y + 0.1 Y
  CHECK(f(0, 0) == doctest::Approx(0.9 * 0.6 + 0.1));
  CHECK(f(1, 0) == doctest::Approx(0.9 * 0.4));
  CHECK(f(0, 1) == 0.0);
  CHECK(f(1, 1) == 0.0);
}

TEST_CASE("alpha = 0 keeps Y") {
  const oracle::DenseMatrix t{2, 2, {0.5, 0.5, 0.5, 0.5}};
  const oracle::DenseMatrix y{2, 1, {1, 0}};
  for (std::size_t iters : {1u, 5u, 50u}) CHECK(oracle::dense_fixed_point(t, y, 0.0, iters).values == y.values);
}

TEST_CASE("dense iteration converges to the closed form") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = test::random_block_graph(30, rng);
    const auto y = test::random_seeds(30, 4, rng);
    const auto f = propagate_closed(g.t, y, 0.9);
    const auto ref = oracle::dense_fixed_point(g.dense, test::to_dense(y), 0.9, 10000);
    double diff = 0.0;
    for (std::size_t i = 0; i < 30; ++i)
      for (std::size_t j = 0; j < 4; ++j) diff = std::max(diff, std::abs(f(i, static_cast<int>(j)) - ref(i, j)));
    CHECK(diff <= 1e-8);
  }
}

TEST_CASE("dense iteration shape checks") {
  const oracle::DenseMatrix t{2, 3, std::vector<double>(6, 0.0)};
  const oracle::DenseMatrix y{2, 1, {1, 0}};
  CHECK_THROWS(oracle::dense_fixed_point(t, y, 0.5, 1));
  const oracle::DenseMatrix sq{2, 2, std::vector<double>(4, 0.5)};
  CHECK_THROWS(oracle::dense_fixed_point(sq, oracle::DenseMatrix{3, 1, {1, 0, 0}}, 0.5, 1));
}

TEST_CASE("brute affinity structure") {
  SpectraMatrix x(3, 2);
  x << 0, 0, 1, 0, 0, 1;
  const SuperpixelMap map{1, 3, {0, 0, 1}, 2};
  const auto w = oracle::brute_affinity(x, {0, 1, 2}, map);
  for (std::size_t i = 0; i < 3; ++i) CHECK(w(i, i) == 1.0);
  CHECK(w(0, 2) == 0.0);
  CHECK(w(1, 2) == 0.0);
  CHECK(w(0, 1) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("Monte Carlo flip statistics") {
  SUBCASE("rho = 0 never flips") {
    const auto s = oracle::mc_flip_stats(5, 0.0, 1000, 1);
    CHECK(s.rho_hat == 0.0);
    for (double f : s.target_frequency) CHECK(f == 0.0);
  }
  SUBCASE("rho = 0.5 over 16 classes") {
    const auto s = oracle::mc_flip_stats(16, 0.5, 100000, 2);
    REQUIRE(s.target_frequency.size() == 15);
    for (double f : s.target_frequency) CHECK(std::abs(f - 0.5 / 15) <= 0.003);
    const double total = std::accumulate(s.target_frequency.begin(), s.target_frequency.end(), 0.0);
    CHECK(total == doctest::Approx(s.rho_hat).epsilon(1e-12));
  }
}
