#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lpsr/losses.hpp"
#include "testutil.hpp"

using namespace lpsr;

namespace {

// Independent sliding-window oracle: replicate-edge max pooling by direct
// scan, then the loss formulas summed with plain loops.
std::vector<double> pool_oracle(const std::vector<double>& x, int k, int s) {
  const int n = static_cast<int>(x.size());
  const int pad_l = (k - 1) / 2;
  std::vector<double> out;
  for (int i = 0; i * s <= n - 1; ++i) {
    const int start = i * s - pad_l;
    double mx = -1e300;
    for (int kk = 0; kk < k; ++kk) {
      const int j = std::clamp(start + kk, 0, n - 1);
      mx = std::max(mx, x[static_cast<std::size_t>(j)]);
    }
    out.push_back(mx);
  }
  return out;
}

double outline_oracle(const std::vector<double>& g, const std::vector<double>& t, int k, int s) {
  auto neg = [](std::vector<double> v) {
    for (auto& x : v) x = -x;
    return v;
  };
  const auto up_g = pool_oracle(g, k, s), up_t = pool_oracle(t, k, s);
  const auto lo_g = pool_oracle(neg(g), k, s), lo_t = pool_oracle(neg(t), k, s);
  double a = 0.0, b = 0.0;
  for (std::size_t i = 0; i < up_g.size(); ++i) a += (up_g[i] - up_t[i]) * (up_g[i] - up_t[i]);
  for (std::size_t i = 0; i < lo_g.size(); ++i) b += (lo_g[i] - lo_t[i]) * (lo_g[i] - lo_t[i]);
  return a / static_cast<double>(g.size()) + b / static_cast<double>(g.size());
}

double switching_oracle(const std::vector<double>& g, const std::vector<double>& t, int k, int s) {
  auto absdiff = [](const std::vector<double>& v) {
    std::vector<double> d(v.size() - 1);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) d[i] = std::fabs(v[i + 1] - v[i]);
    return d;
  };
  const auto pg = pool_oracle(absdiff(g), k, s);
  const auto pt = pool_oracle(absdiff(t), k, s);
  double acc = 0.0;
  for (std::size_t i = 0; i < pg.size(); ++i) acc += (pg[i] - pt[i]) * (pg[i] - pt[i]);
  return acc / static_cast<double>(g.size());  // 1/N as printed, not 1/(N-1)
}

}  // namespace

TEST_CASE("content loss matches its definition") {
  REQUIRE(content_loss({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == 0.0);
  REQUIRE(content_loss({2.0, 3.0, 4.0}, {1.0, 2.0, 3.0}) == Catch::Approx(1.0));
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = test::randn_vec(rng, 33);
    const auto b = test::randn_vec(rng, 33);
    double direct = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) direct += (a[i] - b[i]) * (a[i] - b[i]);
    direct /= static_cast<double>(a.size());
    REQUIRE(content_loss(a, b) == Catch::Approx(direct).margin(1e-12));
  }
  REQUIRE_THROWS_AS(content_loss({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("discriminator loss hits the symmetric point and its limits") {
  REQUIRE(discriminator_loss(0.5, 0.5) == Catch::Approx(2.0 * std::log(2.0)));
  REQUIRE(discriminator_loss(1.0 - 1e-12, 1e-12) == Catch::Approx(0.0).margin(1e-9));
  // decreasing in score_real with the fake score fixed
  double prev = discriminator_loss(0.1, 0.3);
  for (double s : {0.3, 0.5, 0.7, 0.9}) {
    const double cur = discriminator_loss(s, 0.3);
    REQUIRE(cur < prev);
    prev = cur;
  }
}

TEST_CASE("adversarial loss is the non-saturating form") {
  REQUIRE(adversarial_loss(0.5) == Catch::Approx(std::log(2.0)));
  REQUIRE(adversarial_loss(1.0 - 1e-12) == Catch::Approx(0.0).margin(1e-9));
  double prev = adversarial_loss(0.05);
  for (double s : {0.2, 0.4, 0.6, 0.8, 0.99}) {
    const double cur = adversarial_loss(s);
    REQUIRE(cur < prev);
    prev = cur;
  }
  // the saturating variant is kept for loss-curve inspection
  REQUIRE(adversarial_loss_saturating(0.5) == Catch::Approx(std::log(0.5)));
}

TEST_CASE("feature-matching loss sums squared distances across layers") {
  const std::vector<std::vector<double>> same{{1.0, 2.0}, {3.0, 4.0, 5.0}};
  REQUIRE(feature_matching_loss(same, same) == 0.0);

  const std::vector<std::vector<double>> real{{0.0, 0.0, 0.0, 0.0, 0.0}};
  const std::vector<std::vector<double>> fake{{1.0, 1.0, 1.0, 1.0, 1.0}};
  REQUIRE(feature_matching_loss(fake, real) == Catch::Approx(5.0));

  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::vector<double>> a, b;
    double direct = 0.0;
    for (int layer = 0; layer < 3; ++layer) {
      a.push_back(test::randn_vec(rng, 7));
      b.push_back(test::randn_vec(rng, 7));
      for (std::size_t i = 0; i < 7; ++i) {
        direct += (a.back()[i] - b.back()[i]) * (a.back()[i] - b.back()[i]);
      }
    }
    REQUIRE(feature_matching_loss(a, b) == Catch::Approx(direct).margin(1e-12));
  }
}

TEST_CASE("generator loss is the weighted sum of its components") {
  REQUIRE(generator_loss(1.0, 2.0, 3.0, LossWeights{0.05, 0.5}) == Catch::Approx(2.6));
  // zero weights reduce bit-exactly to the content loss (the CNN baseline switch)
  const double c = 0.7231896;
  REQUIRE(generator_loss(c, 123.0, 456.0, LossWeights{0.0, 0.0}) == c);
  // linear in each component
  const LossWeights w{0.05, 0.5};
  REQUIRE(generator_loss(2.0, 1.0, 1.0, w) - generator_loss(1.0, 1.0, 1.0, w) == Catch::Approx(1.0));
  REQUIRE(generator_loss(1.0, 2.0, 1.0, w) - generator_loss(1.0, 1.0, 1.0, w) == Catch::Approx(0.05));
  REQUIRE(generator_loss(1.0, 1.0, 2.0, w) - generator_loss(1.0, 1.0, 1.0, w) == Catch::Approx(0.5));
  REQUIRE_THROWS_AS(generator_loss(1.0, 1.0, 1.0, LossWeights{-0.1, 0.5}), std::invalid_argument);
}

TEST_CASE("outline loss on identical and shifted profiles") {
  Rng rng(9);
  const auto x = test::randn_vec(rng, 24);
  REQUIRE(outline_loss(x, x) == 0.0);

  // constant shift moves both envelopes by c
  const double c = 0.37;
  std::vector<double> shifted = x;
  for (auto& v : shifted) v += c;
  REQUIRE(outline_loss(shifted, x) == Catch::Approx(2.0 * c * c).margin(1e-12));

  for (int trial = 0; trial < 10; ++trial) {
    const auto g = test::randn_vec(rng, 19);
    const auto t = test::randn_vec(rng, 19);
    REQUIRE(outline_loss(g, t) == Catch::Approx(outline_oracle(g, t, 3, 1)).margin(1e-12));
  }
}

TEST_CASE("switching loss ignores level offsets and matches its oracle") {
  REQUIRE(switching_loss(std::vector<double>(10, 3.0), std::vector<double>(10, 7.0)) == 0.0);

  Rng rng(10);
  // dyadic values keep the shifted differences exact
  std::vector<double> x(24);
  for (auto& v : x) v = static_cast<double>(rng.index(64)) / 8.0;
  std::vector<double> shifted = x;
  for (auto& v : shifted) v += 1.5;
  REQUIRE(switching_loss(shifted, x) == 0.0);
  // shifting both keeps the loss unchanged too
  std::vector<double> y(24);
  for (auto& v : y) v = static_cast<double>(rng.index(64)) / 8.0;
  std::vector<double> ys = y;
  for (auto& v : ys) v += 1.5;
  REQUIRE(switching_loss(shifted, ys) == switching_loss(x, y));

  for (int trial = 0; trial < 10; ++trial) {
    const auto g = test::randn_vec(rng, 21);
    const auto t = test::randn_vec(rng, 21);
    REQUIRE(switching_loss(g, t) == Catch::Approx(switching_oracle(g, t, 3, 1)).margin(1e-12));
  }
}

TEST_CASE("polishing loss is outline plus switching") {
  Rng rng(12);
  const auto g = test::randn_vec(rng, 30);
  const auto t = test::randn_vec(rng, 30);
  REQUIRE(polishing_loss(g, g) == 0.0);
  REQUIRE(polishing_loss(g, t) ==
          Catch::Approx(outline_loss(g, t) + switching_loss(g, t)).margin(1e-12));
  REQUIRE(polishing_loss(g, t) >= std::max(outline_loss(g, t), switching_loss(g, t)));
  // constant-offset pair: the switching term vanishes
  std::vector<double> shifted = t;
  for (auto& v : shifted) v += 0.2;
  REQUIRE(polishing_loss(shifted, t) == Catch::Approx(outline_loss(shifted, t)).margin(1e-12));
}

TEST_CASE("losses are nonnegative and vanish at gen == true") {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = test::randn_vec(rng, 17);
    const auto t = test::randn_vec(rng, 17);
    REQUIRE(content_loss(g, t) >= 0.0);
    REQUIRE(outline_loss(g, t) >= 0.0);
    REQUIRE(switching_loss(g, t) >= 0.0);
    REQUIRE(polishing_loss(g, t) >= 0.0);
    REQUIRE(content_loss(g, g) == 0.0);
    REQUIRE(polishing_loss(g, g) == 0.0);
  }
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(31);

  SECTION("content loss w.r.t. the generated profile") {
    const auto t0 = test::randn_vec(rng, 16);
    auto build = [&](Tape& t, const std::vector<double>& g) {
      Var vg = t.leaf(Shape{1, 1, 16}, g, true);
      return std::pair{vg, content_loss(t, vg, t.leaf(Shape{1, 1, 16}, t0, false))};
    };
    for (int trial = 0; trial < 10; ++trial) {
      REQUIRE(test::gradcheck(build, test::randn_vec(rng, 16)) < 1e-4);
    }
  }

  SECTION("discriminator and adversarial losses w.r.t. scores") {
    auto build_d = [&](Tape& t, const std::vector<double>& s) {
      Var vs = t.leaf(Shape{2, 1, 1}, s, true);
      Var fixed = t.leaf(Shape{2, 1, 1}, {0.4, 0.6}, false);
      return std::pair{vs, discriminator_loss(t, vs, fixed)};
    };
    auto build_a = [&](Tape& t, const std::vector<double>& s) {
      Var vs = t.leaf(Shape{2, 1, 1}, s, true);
      return std::pair{vs, adversarial_loss(t, vs)};
    };
    for (int trial = 0; trial < 10; ++trial) {
      const std::vector<double> s{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
      REQUIRE(test::gradcheck(build_d, s) < 1e-4);
      REQUIRE(test::gradcheck(build_a, s) < 1e-4);
    }
  }

  SECTION("feature-matching loss w.r.t. fake features") {
    const auto real0 = test::randn_vec(rng, 10);
    const auto real1 = test::randn_vec(rng, 6);
    // probe the first layer's feature leaf
    auto build_first = [&](Tape& t, const std::vector<double>& f) {
      Var f0 = t.leaf(Shape{1, 2, 5}, f, true);
      Var f1 = t.leaf(Shape{1, 1, 6}, real1, false);
      const std::vector<Var> fake{f0, f1};
      const std::vector<Var> real{t.leaf(Shape{1, 2, 5}, real0, false),
                                  t.leaf(Shape{1, 1, 6}, real1, false)};
      return std::pair{f0, feature_matching_loss(t, fake, real)};
    };
    for (int trial = 0; trial < 10; ++trial) {
      REQUIRE(test::gradcheck(build_first, test::randn_vec(rng, 10)) < 1e-4);
    }
  }

  SECTION("outline and switching losses at tie-free points") {
    const auto t0 = test::separated_signal(rng, 14);
    auto build_out = [&](Tape& t, const std::vector<double>& g) {
      Var vg = t.leaf(Shape{1, 1, 14}, g, true);
      return std::pair{vg, outline_loss(t, vg, t.leaf(Shape{1, 1, 14}, t0, false), 3, 1)};
    };
    auto build_swit = [&](Tape& t, const std::vector<double>& g) {
      Var vg = t.leaf(Shape{1, 1, 14}, g, true);
      return std::pair{vg, switching_loss(t, vg, t.leaf(Shape{1, 1, 14}, t0, false), 3, 1)};
    };
    for (int trial = 0; trial < 10; ++trial) {
      REQUIRE(test::gradcheck(build_out, test::separated_signal(rng, 14)) < 1e-4);
      REQUIRE(test::gradcheck(build_swit, test::separated_signal(rng, 14)) < 1e-4);
    }
  }
}
