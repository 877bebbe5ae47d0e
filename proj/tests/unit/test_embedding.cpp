#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tnad/embedding.hpp"
#include "tnad/mpo.hpp"

using namespace tnad;

namespace {

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

TEST_CASE("phi_trig basis points") {
  auto a = phi_trig(0.0, 1);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(std::abs(a[1]) < 1e-15);
  auto b = phi_trig(1.0, 1);
  CHECK(std::abs(b[0]) < 1e-15);
  CHECK(b[1] == doctest::Approx(1.0));
  CHECK(std::abs(a[0] * b[0] + a[1] * b[1]) < 1e-15);
}

TEST_CASE("phi_trig k=2 at zero") {
  auto v = phi_trig(0.0, 2);
  REQUIRE(v.size() == 4);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(v[0] == doctest::Approx(r));
  CHECK(v[1] == 0.0);
  CHECK(v[2] == doctest::Approx(r));
  CHECK(v[3] == 0.0);
}

TEST_CASE("phi_trig component layout") {
  const double x = 0.37;
  auto v = phi_trig(x, 3);
  const double pi = std::acos(-1.0);
  for (std::size_t j = 1; j <= 3; ++j) {
    CHECK(v[2 * (j - 1)] == doctest::Approx(std::cos(pi * x / std::pow(2.0, j)) / std::sqrt(3.0)));
    CHECK(v[2 * (j - 1) + 1] == doctest::Approx(std::sin(pi * x / std::pow(2.0, j)) / std::sqrt(3.0)));
  }
}

TEST_CASE("phi_four basis points") {
  auto a = phi_four(0.0, 2);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(std::abs(a[1]) < 1e-12);
  auto b = phi_four(1.0, 2);
  CHECK(std::abs(b[0]) < 1e-12);
  CHECK(b[1] == doctest::Approx(1.0));
  for (std::size_t i = 0; i < 4; ++i) {
    auto v = phi_four(static_cast<double>(i) / 3.0, 4);
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(v[j] - (i == j ? 1.0 : 0.0)) < 1e-12);
  }
}

TEST_CASE("phi_four matches the direct sum oracle") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-3, 3);
  for (std::size_t p : {2, 3, 5, 16}) {
    const double x = u(gen);
    auto v = phi_four(x, p);
    auto ref = oracle::phi_four(x, p);
    for (std::size_t j = 0; j < p; ++j) CHECK(v[j] == doctest::Approx(ref[j]).epsilon(1e-12));
  }
}

TEST_CASE("embeddings have unit norm and the stated periods") {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int t = 0; t < 200; ++t) {
    const double x = u(gen);
    for (std::size_t k : {1, 2, 3, 8}) {
      CHECK(std::abs(norm2(phi_trig(x, k)) - 1.0) < 1e-12);
      auto a = phi_trig(x, k), b = phi_trig(x + std::pow(2.0, static_cast<double>(k + 1)), k);
      for (std::size_t j = 0; j < a.size(); ++j) CHECK(std::abs(a[j] - b[j]) < 1e-12);
    }
    for (std::size_t p : {2, 3, 4, 7, 16}) {
      CHECK(std::abs(norm2(phi_four(x, p)) - 1.0) < 1e-12);
      const double period = static_cast<double>(p) / static_cast<double>(p - 1);
      auto a = phi_four(x, p), b = phi_four(x + period, p);
      for (std::size_t j = 0; j < p; ++j) CHECK(std::abs(a[j] - b[j]) < 1e-12);
    }
  }
}

TEST_CASE("embedding spec validation") {
  CHECK_NOTHROW((EmbeddingSpec{EmbeddingKind::trigonometric, 4}.validate()));
  CHECK_THROWS_AS((EmbeddingSpec{EmbeddingKind::trigonometric, 3}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((EmbeddingSpec{EmbeddingKind::trigonometric, 0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((EmbeddingSpec{EmbeddingKind::fourier, 3}.validate()));
  CHECK_THROWS_AS((EmbeddingSpec{EmbeddingKind::fourier, 1}.validate()), std::invalid_argument);
  CHECK(parse_embedding_kind("trig") == EmbeddingKind::trigonometric);
  CHECK(parse_embedding_kind("fourier") == EmbeddingKind::fourier);
  CHECK(to_string(EmbeddingKind::fourier) == "fourier");
  CHECK_THROWS_AS(parse_embedding_kind("gauss"), std::invalid_argument);
}

TEST_CASE("embed_sample binary pair and its Kronecker product") {
  std::vector<double> x{0.0, 1.0};
  auto st = embed_sample(x, {EmbeddingKind::trigonometric, 2});
  REQUIRE(st.sites() == 2);
  auto dense = materialize_state(st);
  auto ref = oracle::product_state(oracle::factors_of(st));
  REQUIRE(dense.size() == 4);
  const double expect[4] = {0, 1, 0, 0};
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(dense[i] - expect[i]) < 1e-15);
    CHECK(dense[i] == ref[i]);
  }
}

TEST_CASE("embed_sample factors are unit vectors and deterministic") {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(-4, 4);
  for (auto spec : {EmbeddingSpec{EmbeddingKind::trigonometric, 6}, EmbeddingSpec{EmbeddingKind::fourier, 5}}) {
    std::vector<double> x(9);
    for (auto& v : x) v = u(gen);
    auto a = embed_sample(x, spec), b = embed_sample(x, spec);
    for (std::size_t i = 0; i < a.sites(); ++i) {
      CHECK(a.factors[i] == b.factors[i]);
      double n = 0.0;
      for (double v : a.factors[i].data()) n += v * v;
      CHECK(std::abs(n - 1.0) < 1e-12);
    }
  }
  CHECK_THROWS_AS(embed_sample(std::vector<double>{}, {}), std::invalid_argument);
}

TEST_CASE("inner products factorize over sites") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-2, 2);
  for (std::size_t n = 1; n <= 8; ++n) {
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = u(gen);
    for (auto& v : y) v = u(gen);
    EmbeddingSpec spec{EmbeddingKind::trigonometric, 2};
    auto fx = oracle::factors_of(embed_sample(x, spec)), fy = oracle::factors_of(embed_sample(y, spec));
    auto dx = oracle::product_state(fx), dy = oracle::product_state(fy);
    double dense = 0.0;
    for (std::size_t i = 0; i < dx.size(); ++i) dense += dx[i] * dy[i];
    double factored = 1.0;
    for (std::size_t i = 0; i < n; ++i) factored *= fx[i][0] * fy[i][0] + fx[i][1] * fy[i][1];
    CHECK(oracle::rel_err(dense, factored) < 1e-10);
  }
}

TEST_CASE("distinct binary inputs embed orthogonally") {
  const std::size_t n = 4;
  EmbeddingSpec spec{EmbeddingKind::trigonometric, 2};
  std::vector<std::vector<double>> states;
  for (std::size_t m = 0; m < (1u << n); ++m) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>((m >> i) & 1u);
    auto d = materialize_state(embed_sample(x, spec));
    states.emplace_back(d.data().begin(), d.data().end());
  }
  for (std::size_t a = 0; a < states.size(); ++a)
    for (std::size_t b = a + 1; b < states.size(); ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < states[a].size(); ++i) dot += states[a][i] * states[b][i];
      CHECK(std::abs(dot) < 1e-15);
    }
}
