#include <doctest.h>

#include <numeric>

#include "kernelrn/kernel.hpp"
#include "support.hpp"

using namespace kernelrn;
using testing_support::Gen;

namespace {

std::vector<std::string> names(const std::vector<Word>& ws) {
  std::vector<std::string> out;
  for (const auto& w : ws) out.push_back(w.to_string());
  return out;
}

ComplexMatrix scaled_identity(Eigen::Index n, Complex c) { return c * ComplexMatrix::Identity(n, n); }

}  // namespace

TEST_CASE("words: ordering, counts and printing") {
  CHECK(names(enumerate_words(1, 3)) == std::vector<std::string>{"∅", "1", "11", "111"});
  CHECK(names(enumerate_words(2, 1)) == std::vector<std::string>{"∅", "1", "2"});
  CHECK(enumerate_words(2, 3).size() == 15);
  CHECK(word_count(3, 2) == 13);
  CHECK(word_count(2, 200) == std::numeric_limits<std::size_t>::max());
  CHECK_THROWS_AS(enumerate_words(2, 20), WordCapError);
  CHECK(enumerate_words(2, 12, 1u << 13).size() == (1u << 13) - 1);

  const auto ws = enumerate_words(3, 3);
  for (std::size_t i = 0; i < ws.size(); ++i) CHECK(word_index(ws[i], 3) == i);
  for (std::size_t i = 1; i < ws.size(); ++i) CHECK(ws[i - 1] < ws[i]);

  CHECK(Word({1, 12, 3}).to_string() == "1.12.3");
  CHECK_THROWS_AS(word_index(Word({3}), 2), std::out_of_range);
}

TEST_CASE("property: reversal is an involution and concatenation is associative") {
  Gen g(5);
  auto random_word = [&] {
    std::vector<std::uint32_t> l(g.index(0, 5));
    for (auto& x : l) x = static_cast<std::uint32_t>(g.index(1, 3));
    return Word(l);
  };
  for (int t = 0; t < 200; ++t) {
    const Word a = random_word(), b = random_word(), c = random_word();
    CHECK(a.reversed().reversed() == a);
    CHECK((a + b) + c == a + (b + c));
    CHECK((a + b).size() == a.size() + b.size());
    CHECK((a + b).reversed() == b.reversed() + a.reversed());
  }
}

TEST_CASE("conditional expectation variants") {
  ComplexMatrix x(2, 2);
  x << 1, 2, 3, 4;
  ComplexMatrix diag14 = ComplexMatrix::Zero(2, 2);
  diag14(0, 0) = 1;
  diag14(1, 1) = 4;
  CHECK(conditional_expectation(x, SubalgebraSpec::diagonal()) == diag14);
  CHECK(conditional_expectation(x, SubalgebraSpec::full()) == x);
  CHECK(conditional_expectation(x, SubalgebraSpec::scalar()) == scaled_identity(2, 2.5));
  CHECK(conditional_expectation(x, SubalgebraSpec::blocks({1, 1})) == diag14);
  CHECK(conditional_expectation(x, SubalgebraSpec::blocks({2})) == x);

  for (const auto& b : {SubalgebraSpec::full(), SubalgebraSpec::diagonal(), SubalgebraSpec::scalar(),
                        SubalgebraSpec::blocks({2, 3})}) {
    CHECK(conditional_expectation(ComplexMatrix::Identity(5, 5), b) == ComplexMatrix::Identity(5, 5));
  }
  CHECK_THROWS_AS(conditional_expectation(x, SubalgebraSpec::blocks({1, 2})), DimensionError);
  CHECK_THROWS_AS(conditional_expectation(ComplexMatrix::Zero(2, 3), SubalgebraSpec::full()), DimensionError);
}

TEST_CASE("blocks {1,1} bimodularity on random 2x2 input") {
  Gen g(6);
  const auto b = SubalgebraSpec::blocks({1, 1});
  for (int t = 0; t < 50; ++t) {
    const ComplexMatrix x = g.matrix(2, 2);
    const ComplexMatrix y = g.matrix(2, 1).col(0).asDiagonal();
    const ComplexMatrix y2 = g.matrix(2, 1).col(0).asDiagonal();
    CHECK((conditional_expectation(y * x * y2, b) - y * conditional_expectation(x, b) * y2).norm() <= 1e-14);
  }
}

TEST_CASE("subalgebra membership and partitions") {
  ComplexMatrix d = ComplexMatrix::Identity(4, 4);
  d(2, 2) = 3;
  CHECK(SubalgebraSpec::diagonal().contains(d, 1e-12));
  CHECK_FALSE(SubalgebraSpec::scalar().contains(d, 1e-12));
  CHECK(SubalgebraSpec::blocks({2, 2}).contains(d, 1e-12));
  d(0, 3) = 1;
  CHECK_FALSE(SubalgebraSpec::blocks({2, 2}).contains(d, 1e-12));
  CHECK(SubalgebraSpec::full().contains(d, 1e-12));
  const auto parts = SubalgebraSpec::blocks({1, 3}).partition(4);
  REQUIRE(parts.size() == 2);
  CHECK(parts[1] == std::pair<std::size_t, std::size_t>{1, 3});
  CHECK(SubalgebraSpec::diagonal().partition(3).size() == 3);
  CHECK_THROWS_AS(SubalgebraSpec::blocks({}), std::invalid_argument);
}

TEST_CASE("enforcement names round trip") {
  for (auto e : {Enforcement::none, Enforcement::phase, Enforcement::biunitary, Enforcement::block}) {
    CHECK(parse_enforcement(to_string(e)) == e);
  }
  CHECK_THROWS_AS(parse_enforcement("bi-unitary"), std::invalid_argument);
}

TEST_CASE("estimate_kernel on deterministic identity gives identity blocks with zero error") {
  const auto k = estimate_kernel(Deterministic{{ComplexMatrix::Identity(3, 3)}}, 3, 4, 1);
  for (std::size_t i = 0; i < k.words().size(); ++i)
    for (std::size_t j = 0; j < k.words().size(); ++j) {
      CHECK(k.block(i, j) == ComplexMatrix::Identity(3, 3));
      CHECK(k.se(i, j) == 0.0);
    }
}

TEST_CASE("estimate_kernel matches a direct per-sample computation") {
  const GinibreTuple spec{2, 3, 0.7};
  const std::size_t samples = 5;
  const auto k = estimate_kernel(spec, 2, samples, 17, {2, kDefaultWordCap});
  const Word a({1, 2}), b({2});
  ComplexMatrix want = ComplexMatrix::Zero(3, 3);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto t = sample(spec, {17, s});
    want += (t[0] * t[1]) * t[1].adjoint();
  }
  want /= static_cast<double>(samples);
  CHECK((k.block(a, b) - want).norm() <= 1e-13);
  CHECK(k.block(b, a) == k.block(a, b).adjoint());
  CHECK(k.generators() == 2);
  CHECK(k.words().size() == 7);
}

TEST_CASE("estimate_kernel is identical for every worker count") {
  const Ginibre spec{6, 0.5};
  const auto one = estimate_kernel(spec, 3, 150, 9, {1, kDefaultWordCap});
  const auto four = estimate_kernel(spec, 3, 150, 9, {4, kDefaultWordCap});
  for (std::size_t i = 0; i < one.words().size(); ++i)
    for (std::size_t j = 0; j < one.words().size(); ++j) {
      CHECK(one.block(i, j) == four.block(i, j));
      CHECK(one.se(i, j) == four.se(i, j));
    }
}

TEST_CASE("Haar diagonal kernel blocks are the identity sample by sample") {
  for (std::size_t s : {1u, 2u, 7u}) {
    const auto k = estimate_kernel(HaarUnitary{8}, 3, s, 4);
    for (std::size_t m = 0; m <= 3; ++m) {
      CHECK((k.block(m, m) - ComplexMatrix::Identity(8, 8)).norm() <= 1e-12);
    }
  }
}

TEST_CASE("Ginibre off-level kernel block vanishes within noise") {
  const auto k = estimate_kernel(Ginibre{100, 0.5}, 2, 500, 31);
  CHECK(k.block(1, 2).norm() <= 4.0 * k.se(1, 2));
  CHECK(k.se(1, 2) > 0.0);
}

TEST_CASE("standard errors: infinite for a single sample") {
  const auto k = estimate_kernel(Ginibre{3, 1.0}, 1, 1, 3);
  CHECK(std::isinf(k.se(0, 1)));
}

TEST_CASE("non-finite products carry the sample index") {
  ComplexMatrix big = ComplexMatrix::Identity(2, 2) * 1e200;
  try {
    estimate_kernel(Deterministic{{big}}, 2, 3, 0);
    FAIL("expected SamplingError");
  } catch (const SamplingError& e) {
    CHECK(e.sample_index() == 0);
  }
}

TEST_CASE("kernel Gram matrix over the full word list is Hermitian") {
  const auto k = estimate_kernel(GinibreTuple{2, 3, 1.0}, 2, 20, 5);
  const auto g = assemble_gram(k, 2, SubalgebraSpec::full(), Enforcement::none, 1e-9);
  CHECK(hermitian_defect(g.matrix) == 0.0);
}

TEST_CASE("shifted kernel reindexes and sums over generators") {
  const auto k1 = estimate_kernel(Ginibre{4, 1.0}, 3, 10, 2);
  const auto sh = shifted_kernel(k1, SubalgebraSpec::full(), 2);
  for (std::size_t m = 0; m <= 2; ++m)
    for (std::size_t n = 0; n <= 2; ++n) CHECK((sh.at(m, n) - k1.block(m + 1, n + 1)).norm() <= 1e-14);

  const auto sd = shifted_kernel(k1, SubalgebraSpec::diagonal());
  CHECK(sd.size() == 3);
  CHECK((sd.at(1, 2) - conditional_expectation(k1.block(2, 3), SubalgebraSpec::diagonal())).norm() <= 1e-14);

  const auto k2 = estimate_kernel(Deterministic{{ComplexMatrix::Identity(3, 3), ComplexMatrix::Identity(3, 3)}}, 1, 2, 0);
  const auto s2 = shifted_kernel(k2, SubalgebraSpec::full(), 0);
  CHECK(s2.at(0, 0) == scaled_identity(3, 2.0));

  CHECK_THROWS_AS(shifted_kernel(k1, SubalgebraSpec::full(), 3), std::out_of_range);
}

TEST_CASE("Haar shifted kernel equals the kernel") {
  const auto k = estimate_kernel(HaarUnitary{6}, 3, 20, 8);
  const auto g = assemble_gram(k, 2, SubalgebraSpec::full(), Enforcement::none, 1e-9);
  const auto gs = assemble_gram(shifted_kernel(k, SubalgebraSpec::full(), 2), SubalgebraSpec::full(),
                                Enforcement::none, 1e-9);
  CHECK((g.matrix - gs.matrix).norm() <= 1e-12 * (1.0 + g.matrix.norm()));
}

TEST_CASE("assemble_gram enforcement") {
  SUBCASE("Haar biunitary gives the identity") {
    const auto k = estimate_kernel(HaarUnitary{5}, 2, 10, 1);
    const auto g = assemble_gram(k, 2, SubalgebraSpec::full(), Enforcement::biunitary, 1e-9);
    CHECK(g.matrix.rows() == 15);
    CHECK((g.matrix - ComplexMatrix::Identity(15, 15)).norm() <= 1e-12);
  }
  SUBCASE("phase zeroes off-level blocks") {
    const auto k = estimate_kernel(Ginibre{4, 0.5}, 2, 50, 1);
    const auto g = assemble_gram(k, 2, SubalgebraSpec::full(), Enforcement::phase, 1e-9);
    CHECK(g.matrix.block(0, 4, 4, 4).norm() == 0.0);
    CHECK(g.matrix.block(4, 8, 4, 4).norm() == 0.0);
    CHECK((g.matrix.block(4, 4, 4, 4) - k.block(1, 1)).norm() <= 1e-14);
  }
  SUBCASE("block replaces diagonal blocks by block scalars") {
    const auto k = estimate_kernel(BlockGinibre{{2, 3}, {{0.5, 0.5}, {0.5, 1.0}}}, 1, 40, 3);
    const auto b = SubalgebraSpec::blocks({2, 3});
    const auto g = assemble_gram(k, 1, b, Enforcement::block, 1e-9);
    const ComplexMatrix k11 = k.block(1, 1);
    const ComplexMatrix lvl = g.matrix.block(5, 5, 5, 5);
    CHECK(std::abs(lvl(0, 0) - k11.block(0, 0, 2, 2).trace() / 2.0) <= 1e-13);
    CHECK(std::abs(lvl(4, 4) - k11.block(2, 2, 3, 3).trace() / 3.0) <= 1e-13);
    CHECK(std::abs(lvl(0, 1)) == 0.0);
    CHECK(std::abs(lvl(0, 3)) == 0.0);
    CHECK_THROWS_AS(assemble_gram(k, 1, SubalgebraSpec::full(), Enforcement::block, 1e-9), std::invalid_argument);
  }
  SUBCASE("enforcement needs a phase-invariant ensemble") {
    const auto k = estimate_kernel(Deterministic{{ComplexMatrix::Identity(2, 2)}}, 1, 2, 0);
    CHECK_THROWS_AS(assemble_gram(k, 1, SubalgebraSpec::full(), Enforcement::phase, 1e-9), std::invalid_argument);
  }
  SUBCASE("deterministic zero keeps only the empty-word level") {
    const auto k = estimate_kernel(Deterministic{{ComplexMatrix::Zero(3, 3)}}, 1, 2, 0);
    const auto g = assemble_gram(k, 1, SubalgebraSpec::full(), Enforcement::none, 1e-9);
    ComplexMatrix want = ComplexMatrix::Zero(6, 6);
    want.topLeftCorner(3, 3).setIdentity();
    CHECK(g.matrix == want);
  }
}

TEST_CASE("assemble_gram with full and none reproduces the raw blocks") {
  const auto k = estimate_kernel(GinibreTuple{2, 3, 0.8}, 2, 30, 12);
  const auto g = assemble_gram(k, 2, SubalgebraSpec::full(), Enforcement::none, 1e-9);
  const auto& ws = k.words();
  for (std::size_t i = 0; i < ws.size(); ++i)
    for (std::size_t j = 0; j < ws.size(); ++j) {
      const ComplexMatrix got = g.matrix.block(static_cast<Eigen::Index>(3 * i), static_cast<Eigen::Index>(3 * j), 3, 3);
      CHECK((got - k.block(i, j)).norm() <= 1e-14 * (1.0 + k.block(i, j).norm()));
    }
}

TEST_CASE("assemble_gram rejects indefinite sections") {
  KernelSection s;
  s.words = {Word(), Word({1})};
  s.dim = 1;
  ComplexMatrix one = ComplexMatrix::Identity(1, 1);
  s.blocks = {one, 2.0 * one, 2.0 * one, one};
  s.se = {0, 0, 0, 0};
  s.trace_se = {0, 0, 0, 0};
  CHECK_THROWS_AS(assemble_gram(s, SubalgebraSpec::full(), Enforcement::none, 1e-9), NotPsdError);
}

TEST_CASE("property: conditional expectations are positive, idempotent, unital and bimodular") {
  Gen g(1234);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = g.index(1, 8);
    const auto sizes = g.partition(n);
    const SubalgebraSpec variants[] = {SubalgebraSpec::full(), SubalgebraSpec::diagonal(), SubalgebraSpec::scalar(),
                                       SubalgebraSpec::blocks(sizes)};
    const ComplexMatrix x = g.psd(n, g.index(1, n));
    const ComplexMatrix y = g.matrix(n, n);
    const double scale = 1.0 + x.norm();
    for (const auto& b : variants) {
      const ComplexMatrix e = conditional_expectation(x, b);
      CHECK(psd_verdict(e, 1e-12 * scale).is_psd);
      CHECK((conditional_expectation(e, b) - e).norm() <= 1e-14 * scale);
      CHECK(conditional_expectation(ComplexMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), b) ==
            ComplexMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
      // elements of B pulled out on both sides
      const ComplexMatrix b1 = conditional_expectation(g.matrix(n, n), b);
      const ComplexMatrix b2 = conditional_expectation(g.matrix(n, n), b);
      CHECK((conditional_expectation(b1 * y * b2, b) - b1 * conditional_expectation(y, b) * b2).norm() <=
            1e-12 * (1.0 + b1.norm() * y.norm() * b2.norm()));
      if (b.kind() != SubalgebraSpec::Kind::full) {
        CHECK(std::abs(conditional_expectation(y, b).trace() - y.trace()) <= 1e-12 * (1.0 + y.norm()));
      }
      const Complex c = g.cnormal();
      const ComplexMatrix ci = c * ComplexMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      CHECK((conditional_expectation(ci, b) - ci).norm() <= 1e-15 * (1.0 + std::abs(c)));
    }
  }
}
