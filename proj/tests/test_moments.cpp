#include <doctest.h>

#include <cmath>

#include "kernelrn/moments.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace kernelrn;

namespace {

bool within(double measured, double expected, double se, double k) { return std::abs(measured - expected) <= k * se; }

MomentSequence sequence_of(std::vector<double> values, std::vector<double> se, std::vector<double> step_se) {
  MomentSequence s;
  s.values = std::move(values);
  s.se = std::move(se);
  s.step_se = std::move(step_se);
  s.samples = 100;
  return s;
}

}  // namespace

TEST_CASE("Wick oracle reproduces known closed forms") {
  // single entry: E|a|^{2m} = m! v^m
  const auto one = oracle::flat_profile(1, 0.7);
  CHECK(oracle::c_moment(3, one) == doctest::Approx(6 * 0.7 * 0.7 * 0.7).epsilon(1e-14));
  CHECK(oracle::d_moment(2, one) == doctest::Approx(2 * 0.7 * 0.7).epsilon(1e-14));
  // square Ginibre with variance 1/N: d_2 = 2 and d_3 = 5 + 1/N^2 at every N
  for (int n = 1; n <= 3; ++n) {
    const auto v = oracle::flat_profile(n, 1.0 / n);
    CHECK(oracle::d_moment(2, v) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(oracle::d_moment(3, v) == doctest::Approx(5.0 + 1.0 / (n * n)).epsilon(1e-13));
    CHECK(oracle::c_moment(1, v) == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("frozen oracle values for small matrices") {
  // computed once with the pairing oracle
  const auto v2 = oracle::flat_profile(2, 0.5);
  CHECK(oracle::c_moment(2, v2) == doctest::Approx(1.25).epsilon(1e-13));
  CHECK(oracle::c_moment(3, v2) == doctest::Approx(2.25).epsilon(1e-13));
  const auto v4 = oracle::flat_profile(4, 0.25);
  CHECK(oracle::c_moment(2, v4) == doctest::Approx(1.0625).epsilon(1e-13));
  CHECK(oracle::c_moment(3, v4) == doctest::Approx(1.3125).epsilon(1e-13));
  const auto b = oracle::block_profile({1, 2}, {{0.8, 0.8}, {0.8, 1.6}});
  const auto b1 = oracle::block_c_moment(1, b, {1, 2});
  const auto bm2 = oracle::block_c_moment(2, b, {1, 2});
  CHECK(b1[0] == doctest::Approx(0.8).epsilon(1e-13));
  CHECK(b1[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
  CHECK(bm2[0] == doctest::Approx(0.99555555555555564).epsilon(1e-12));
  CHECK(bm2[1] == doctest::Approx(1.92).epsilon(1e-12));
}

TEST_CASE("Monte Carlo moments match the oracle at small N") {
  const std::size_t samples = 20000;
  SUBCASE("Ginibre N = 2") {
    MomentRequest req;
    req.max_order = 3;
    req.d = true;
    const auto run = run_moment_pass(Ginibre{2, 1.0}, req, samples, 101);
    const auto v = oracle::flat_profile(2, 0.5);
    for (int m = 1; m <= 3; ++m) {
      CHECK(within(run.c->values[static_cast<std::size_t>(m)], oracle::c_moment(m, v), run.c->se[static_cast<std::size_t>(m)], 4.0));
      CHECK(within(run.d->values[static_cast<std::size_t>(m)], oracle::d_moment(m, v), run.d->se[static_cast<std::size_t>(m)], 4.0));
    }
  }
  SUBCASE("block profile with sizes [1, 2]") {
    const BlockGinibre spec{{1, 2}, {{0.8, 0.8}, {0.8, 1.6}}};
    const auto blocks = block_c_sequence(spec, {1, 2}, 2, samples, 102);
    const auto v = oracle::block_profile({1, 2}, spec.tau);
    for (int m = 1; m <= 2; ++m) {
      const auto want = oracle::block_c_moment(m, v, {1, 2});
      for (std::size_t r = 0; r < 2; ++r)
        CHECK(within(blocks[r].values[static_cast<std::size_t>(m)], want[r], blocks[r].se[static_cast<std::size_t>(m)], 4.0));
    }
    const auto c = c_sequence(spec, 2, samples, 102);
    CHECK(within(c.values[2], oracle::c_moment(2, v), c.se[2], 4.0));
  }
}

TEST_CASE("c_sequence basics") {
  const auto haar = c_sequence(HaarUnitary{10}, 4, 5, 1);
  for (std::size_t m = 0; m <= 4; ++m) {
    CHECK(haar.values[m] == 1.0);
    CHECK(haar.se[m] == 0.0);
  }
  const auto g = c_sequence(Ginibre{200, 0.5}, 2, 50, 3);
  CHECK(g.values[0] == 1.0);
  CHECK(within(g.values[1], 0.5, g.se[1], 3.0));
  CHECK(g.kind == MomentKind::c);
  CHECK(g.samples == 50);
  CHECK(g.ensemble == "ginibre");

  CHECK_THROWS_AS(c_sequence(Ginibre{4, 1.0}, 2, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(c_sequence(GinibreTuple{2, 4, 1.0}, 2, 10, 0), std::invalid_argument);
}

TEST_CASE("d_sequence basics") {
  const auto c = c_sequence(Ginibre{30, 0.7}, 3, 20, 9);
  const auto d = d_sequence(Ginibre{30, 0.7}, 3, 20, 9);
  CHECK(d.values[1] == c.values[1]);
  CHECK(d.values[0] == 1.0);
  CHECK(d.kind == MomentKind::d);
  const auto h = d_sequence(HaarUnitary{8}, 3, 4, 2);
  for (double x : h.values) CHECK(x == 1.0);
}

TEST_CASE("d_1 equals c_1 sample by sample") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    MomentRequest req;
    req.max_order = 1;
    req.d = true;
    const auto run = run_moment_pass(Ginibre{7, 1.3}, req, 3, seed);
    CHECK(run.c->values[1] == run.d->values[1]);
    CHECK(run.c_minus_d[1] == 0.0);
  }
}

TEST_CASE("moment estimates do not depend on the worker count") {
  MomentRequest req;
  req.max_order = 3;
  req.d = true;
  req.block_sizes = {10, 20};
  const auto a = run_moment_pass(Ginibre{30, 0.9}, req, 64, 5, {1});
  const auto b = run_moment_pass(Ginibre{30, 0.9}, req, 64, 5, {4});
  CHECK(a.c->values == b.c->values);
  CHECK(a.c->se == b.c->se);
  CHECK(a.d->values == b.d->values);
  CHECK(a.blocks[1].values == b.blocks[1].values);
  CHECK(a.c_minus_d_se == b.c_minus_d_se);
}

TEST_CASE("block_c_sequence") {
  SUBCASE("i.i.d. Ginibre blocks agree") {
    const auto blocks = block_c_sequence(Ginibre{60, 0.8}, {20, 40}, 3, 200, 4);
    REQUIRE(blocks.size() == 2);
    for (std::size_t m = 0; m <= 3; ++m) {
      const double se = std::hypot(blocks[0].se[m], blocks[1].se[m]);
      CHECK(std::abs(blocks[0].values[m] - blocks[1].values[m]) <= 3.0 * se + 1e-15);
    }
    CHECK(blocks[1].block == 2);
    CHECK(blocks[1].kind == MomentKind::c_block);
  }
  SUBCASE("heterogeneous first moments") {
    const BlockGinibre spec{{50, 50}, {{0.8, 0.8}, {0.8, 1.6}}};
    const auto blocks = block_c_sequence(spec, {50, 50}, 1, 400, 6);
    CHECK(within(blocks[0].values[1], 0.8, blocks[0].se[1], 3.0));
    CHECK(within(blocks[1].values[1], 1.2, blocks[1].se[1], 3.0));
  }
  SUBCASE("Haar with any split") {
    for (const auto& b : block_c_sequence(HaarUnitary{9}, {2, 3, 4}, 3, 5, 1))
      for (double x : b.values) CHECK(x == 1.0);
  }
  CHECK_THROWS_AS(block_c_sequence(Ginibre{10, 1.0}, {4, 4}, 1, 10, 0), std::invalid_argument);
}

TEST_CASE("ratio_test examples") {
  SUBCASE("Haar passes with equality") {
    const auto v = ratio_test(c_sequence(HaarUnitary{12}, 5, 3, 2));
    CHECK(v.overall == TestOutcome::pass);
    for (double r : v.ratio) CHECK(r == 1.0);
    CHECK_FALSE(v.first_failing.has_value());
  }
  SUBCASE("deterministic I/2 has ratios 1/4") {
    const auto v = ratio_test(c_sequence(Deterministic{{0.5 * ComplexMatrix::Identity(3, 3)}}, 4, 2, 0));
    for (double r : v.ratio) CHECK(r == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(v.overall == TestOutcome::pass);
  }
  SUBCASE("Ginibre above threshold fails at the base") {
    const auto v = ratio_test(c_sequence(Ginibre{200, 1.1}, 3, 400, 11));
    CHECK(v.overall == TestOutcome::fail);
    REQUIRE(v.first_failing.has_value());
    CHECK(*v.first_failing == 0);
    CHECK(v.ratio[0] == doctest::Approx(1.1).epsilon(0.02));
  }
  SUBCASE("Ginibre below threshold passes") {
    const auto v = ratio_test(c_sequence(Ginibre{200, 0.9}, 3, 400, 12));
    CHECK(v.overall == TestOutcome::pass);
  }
}

TEST_CASE("ratio_test flag logic") {
  // rising by more than z * step_se fails; within it passes
  const auto fail = ratio_test(sequence_of({1.0, 1.0, 1.5}, {0, 0.01, 0.01}, {0.01, 0.1}));
  CHECK(fail.flags[0] == TestOutcome::pass);
  CHECK(fail.flags[1] == TestOutcome::fail);
  CHECK(fail.overall == TestOutcome::fail);
  CHECK(*fail.first_failing == 1);
  CHECK(fail.margin[1] == doctest::Approx(-0.5));
  const auto near = ratio_test(sequence_of({1.0, 1.0, 1.25}, {0, 0.01, 0.01}, {0.01, 0.1}));
  CHECK(near.flags[1] == TestOutcome::pass);
  // values indistinguishable from zero give inconclusive flags
  const auto weak = ratio_test(sequence_of({1.0, 0.01, 0.02}, {0, 0.01, 0.01}, {0.01, 0.01}));
  CHECK(weak.flags[1] == TestOutcome::inconclusive);
  CHECK(weak.overall == TestOutcome::inconclusive);
  const auto mixed = ratio_test(sequence_of({1.0, 2.0, 0.01, 0.02}, {0, 0.01, 0.01, 0.01}, {0.01, 0.01, 0.01}));
  CHECK(mixed.overall == TestOutcome::fail);
}

TEST_CASE("property: ratio_test on Haar never fails") {
  testing_support::Gen g(17);
  for (int t = 0; t < 20; ++t) {
    const auto n = g.index(1, 12);
    const auto s = g.index(2, 6);
    const auto v = ratio_test(c_sequence(HaarUnitary{n}, g.index(1, 6), s, g.index(0, 1000)), g.uniform(0.5, 4.0));
    CHECK(v.overall == TestOutcome::pass);
  }
}

TEST_CASE("property: moment values stay nonnegative and start at one") {
  testing_support::Gen g(18);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = g.index(1, 10);
    const double tau = g.uniform(0.1, 2.0);
    const auto c = c_sequence(Ginibre{n, tau}, 3, 10, g.index(0, 1000));
    CHECK(c.values[0] == 1.0);
    for (std::size_t m = 0; m <= 3; ++m) CHECK(c.values[m] >= -4.0 * c.se[m]);
  }
}

TEST_CASE("reference sequences: examples") {
  CHECK(catalan(0) == 1);
  CHECK(catalan(2) == 2);
  CHECK(catalan(3) == 5);
  CHECK(catalan(4) == 14);
  CHECK(catalan(36) == 11959798385860453492ULL);
  CHECK_THROWS_AS(catalan(kCatalanCap + 1), ReferenceOverflowError);
  CHECK(binomial(6, 2) == 15);
  CHECK(binomial(5, 7) == 0);
  CHECK_THROWS_AS(binomial(200, 100), ReferenceOverflowError);

  for (unsigned m = 0; m <= 8; ++m) CHECK(fuss_catalan_moment(m, 1) == Rational{1, 1});
  CHECK(fuss_catalan_moment(2, 2).value() == 3.0);
  CHECK_THROWS_AS(fuss_catalan_moment(1, 0), std::invalid_argument);

  CHECK(mp_moment(1, 1.0, 1.0) == 1.0);
  CHECK(mp_moment(2, 1.0, 0.3) == doctest::Approx(2 * 0.09).epsilon(1e-15));
  CHECK_THROWS_AS(mp_moment(0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("property: reference cross-identities up to order 8") {
  const auto pas = oracle::pascal(73);
  const auto conv = oracle::catalan_by_convolution(9);
  for (unsigned k = 0; k <= 8; ++k) {
    // Catalan against Pascal's triangle and the convolution recurrence
    CHECK(static_cast<unsigned __int128>(catalan(k)) * (k + 1) == pas[2 * k][k]);
    CHECK(static_cast<unsigned __int128>(catalan(k)) == conv[k]);
  }
  for (unsigned p = 1; p <= 8; ++p) {
    const auto f = fuss_catalan_moment(1, p);
    CHECK(f.den == 1);
    CHECK(f.num == catalan(p));
    for (unsigned m = 0; m <= 8; ++m) {
      // M^{(m)}_p (mp + 1) = binom((m+1)p, p) from Pascal's triangle
      const auto r = fuss_catalan_moment(m, p);
      CHECK(static_cast<unsigned __int128>(r.num) * (m * p + 1) == static_cast<unsigned __int128>(r.den) * pas[(m + 1) * p][p]);
    }
  }
  for (unsigned k = 1; k <= 8; ++k) {
    CHECK(mp_moment(k, 1.0, 1.0) == static_cast<double>(catalan(k)));
    // Narayana sum at y = 1 from Pascal rows
    double y2 = 0.0;
    for (unsigned r = 0; r < k; ++r)
      y2 += static_cast<double>(pas[k][r]) * static_cast<double>(pas[k - 1][r]) * std::pow(2.0, r) / (r + 1);
    CHECK(mp_moment(k, 2.0, 1.0) == doctest::Approx(y2).epsilon(1e-14));
    CHECK(mp_moment(k, 1.0, 0.5) == doctest::Approx(std::pow(0.5, k) * static_cast<double>(catalan(k))).epsilon(1e-14));
  }
}

TEST_CASE("asymptotic and difference reports") {
  MomentRequest req;
  req.max_order = 3;
  req.d = true;
  const auto run = run_moment_pass(Ginibre{60, 1.0}, req, 40, 8);
  const auto rc = asymptotic_report(*run.c, 1.0);
  const auto rd = asymptotic_report(*run.d, 1.0);
  REQUIRE(rd.size() == 4);
  CHECK(rd[3].limit == 5.0);
  CHECK(rc[2].limit == 1.0);
  CHECK(rd[2].deviation_over_se == doctest::Approx((rd[2].measured - 2.0) / rd[2].se));
  const auto diff = difference_report(run, 1.0);
  CHECK(diff[2].limit == -1.0);
  CHECK(diff[2].measured == doctest::Approx(run.c->values[2] - run.d->values[2]));

  const auto c = c_sequence(Ginibre{200, 0.5}, 4, 400, 21);
  for (const auto& row : asymptotic_report(c, 0.5))
    CHECK(std::abs(row.measured - row.limit) <= std::max(4.0 * row.se, 0.05 * row.limit));

  MomentSequence blk;
  blk.kind = MomentKind::c_block;
  blk.values = {1.0};
  blk.se = {0.0};
  CHECK_THROWS_AS(asymptotic_report(blk, 1.0), std::invalid_argument);
}
