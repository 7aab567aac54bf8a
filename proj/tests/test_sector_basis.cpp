#include <algorithm>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "su2td/errors.hpp"
#include "su2td/sector_basis.hpp"

using namespace su2td;

TEST_CASE("binomial basics") {
  CHECK(binomial(0, 0) == 1);
  CHECK(binomial(4, 2) == 6);
  CHECK(binomial(14, 7) == 3432);
  CHECK(binomial(24, 12) == 2704156);
  CHECK(binomial(4, 5) == 0);
  CHECK(binomial(4, -1) == 0);
}

TEST_CASE("multiplet counts follow the Clebsch-Gordan series") {
  // N=2: one singlet, one triplet. N=4: S=0 twice, S=1 three times, S=2 once.
  CHECK(multiplet_count(2, 0) == 1);
  CHECK(multiplet_count(2, 2) == 1);
  CHECK(multiplet_count(4, 0) == 2);
  CHECK(multiplet_count(4, 2) == 3);
  CHECK(multiplet_count(4, 4) == 1);
  CHECK(multiplet_count(4, 1) == 0);   // wrong parity
  CHECK(multiplet_count(4, 6) == 0);   // out of range
  CHECK(multiplet_count(3, 1) == 2);
  CHECK(multiplet_count(3, 3) == 1);

  // Sum over S of (2S+1) * mult(S) must exhaust the 2^N dimensional space.
  for (int n = 1; n <= 12; ++n) {
    std::uint64_t total = 0;
    for (int two_s = n % 2; two_s <= n; two_s += 2)
      total += (static_cast<std::uint64_t>(two_s) + 1) * multiplet_count(n, two_s);
    CHECK(total == (std::uint64_t{1} << n));
  }
}

TEST_CASE("reflect reverses the low n bits") {
  CHECK(reflect(0b0011, 4) == 0b1100);
  CHECK(reflect(0b0110, 4) == 0b0110);  // palindrome
  CHECK(reflect(0b1, 3) == 0b100);
  CHECK(reflect(0, 5) == 0);

  // Involution over a whole sector.
  const SectorBasis b = enumerate_sector(6, 0);
  for (SpinConfig c : b.configs()) {
    const SpinConfig r = reflect(c, 6);
    CHECK(b.contains(r));
    CHECK(reflect(r, 6) == c);
  }
}

TEST_CASE("enumerate_sector config lists") {
  SUBCASE("two sites, zero magnetization") {
    const SectorBasis b = enumerate_sector(2, 0);
    REQUIRE(b.size() == 2);
    CHECK(b.config(0) == 0b01);
    CHECK(b.config(1) == 0b10);
  }
  SUBCASE("fully polarized sector is a single config") {
    const SectorBasis b = enumerate_sector(4, 4);
    REQUIRE(b.size() == 1);
    CHECK(b.config(0) == 0b1111);
  }
  SUBCASE("half-filling dimension at fourteen sites") {
    CHECK(enumerate_sector(14, 0).size() == 3432);
  }
  SUBCASE("configs are strictly increasing and index_of round-trips") {
    const SectorBasis b = enumerate_sector(8, 2);
    CHECK(b.size() == binomial(8, 5));
    CHECK(std::is_sorted(b.configs().begin(), b.configs().end()));
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.index_of(b.config(i)) == i);
    CHECK_FALSE(b.contains(0b11111111));
    CHECK_THROWS_AS((void)b.index_of(0b11111111), argument_error);
  }
}

TEST_CASE("enumerate_sector argument validation") {
  CHECK_THROWS_AS(enumerate_sector(0, 0), argument_error);
  CHECK_THROWS_AS(enumerate_sector(25, 1), argument_error);
  CHECK_THROWS_AS(enumerate_sector(4, 1), argument_error);   // parity mismatch
  CHECK_THROWS_AS(enumerate_sector(4, 6), argument_error);   // |two_m| > n
  CHECK_THROWS_AS(enumerate_sector(3, -5), argument_error);
}

TEST_CASE("parity basis block dimensions") {
  SUBCASE("two sites") {
    const ParityBasis pb = build_parity_basis(enumerate_sector(2, 0));
    CHECK(pb.dim(Parity::even) == 1);
    CHECK(pb.dim(Parity::odd) == 1);
  }
  SUBCASE("four sites, zero magnetization") {
    const ParityBasis pb = build_parity_basis(enumerate_sector(4, 0));
    CHECK(pb.dim(Parity::even) == 4);
    CHECK(pb.dim(Parity::odd) == 2);
  }
  SUBCASE("four sites, fully polarized") {
    const ParityBasis pb = build_parity_basis(enumerate_sector(4, 4));
    CHECK(pb.dim(Parity::even) == 1);
    CHECK(pb.dim(Parity::odd) == 0);
  }
  SUBCASE("blocks partition the sector") {
    for (int n : {3, 5, 6, 8}) {
      for (int two_m = -n; two_m <= n; two_m += 2) {
        const SectorBasis b = enumerate_sector(n, two_m);
        const ParityBasis pb = build_parity_basis(b);
        CHECK(pb.dim(Parity::even) + pb.dim(Parity::odd) == b.size());
      }
    }
  }
}

TEST_CASE("parity columns are orthonormal and reflection eigenvectors") {
  const SectorBasis b = enumerate_sector(6, 0);
  const ParityBasis pb = build_parity_basis(b);
  const Eigen::MatrixXd u = pb.dense_transform();
  REQUIRE(u.rows() == static_cast<Eigen::Index>(b.size()));
  REQUIRE(u.cols() == static_cast<Eigen::Index>(b.size()));

  const Eigen::MatrixXd gram = u.transpose() * u;
  CHECK((gram - Eigen::MatrixXd::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff() <=
        1e-14);

  // Site reversal as a permutation on the sector.
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(u.rows(), u.rows());
  for (std::size_t i = 0; i < b.size(); ++i)
    r(static_cast<Eigen::Index>(b.index_of(reflect(b.config(i), 6))),
      static_cast<Eigen::Index>(i)) = 1.0;

  const auto n_even = static_cast<Eigen::Index>(pb.dim(Parity::even));
  const Eigen::MatrixXd ru = r * u;
  CHECK((ru.leftCols(n_even) - u.leftCols(n_even)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((ru.rightCols(u.cols() - n_even) + u.rightCols(u.cols() - n_even))
            .cwiseAbs()
            .maxCoeff() <= 1e-14);
}

TEST_CASE("parity column structure: palindromes and two-element orbits") {
  const SectorBasis b = enumerate_sector(4, 0);
  const ParityBasis pb = build_parity_basis(b);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

  for (const auto& col : pb.columns(Parity::even)) {
    const SpinConfig rep = b.config(col.rep);
    if (col.rep == col.mirror) {
      CHECK(reflect(rep, 4) == rep);
      CHECK(col.rep_coeff == doctest::Approx(1.0));
    } else {
      CHECK(reflect(rep, 4) == b.config(col.mirror));
      CHECK(rep < b.config(col.mirror));  // representative is the smaller config
      CHECK(col.rep_coeff == doctest::Approx(inv_sqrt2));
      CHECK(col.mirror_coeff == doctest::Approx(inv_sqrt2));
    }
  }
  for (const auto& col : pb.columns(Parity::odd)) {
    CHECK(col.rep != col.mirror);  // palindromes have no odd column
    CHECK(col.rep_coeff == doctest::Approx(inv_sqrt2));
    CHECK(col.mirror_coeff == doctest::Approx(-inv_sqrt2));
  }
}

TEST_CASE("lift embeds a parity-block vector into the sector") {
  const SectorBasis b = enumerate_sector(4, 0);
  const ParityBasis pb = build_parity_basis(b);
  const Eigen::MatrixXd u = pb.dense_transform();

  Eigen::VectorXd block = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(pb.dim(Parity::odd)));
  block[0] = 0.6;
  block[1] = -0.8;
  const Eigen::VectorXd lifted = pb.lift(Parity::odd, block);
  const Eigen::VectorXd expected =
      u.rightCols(static_cast<Eigen::Index>(pb.dim(Parity::odd))) * block;
  CHECK((lifted - expected).cwiseAbs().maxCoeff() <= 1e-15);
}
