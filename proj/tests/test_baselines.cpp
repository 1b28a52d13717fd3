#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "lpsr/baselines.hpp"
#include "testutil.hpp"

using namespace lpsr;

TEST_CASE("lerp of a constant profile is constant") {
  for (int alpha : {2, 3, 6}) {
    const auto hr = lerp_upsample(std::vector<double>(8, 1.7), alpha);
    REQUIRE(hr.size() == 8 * static_cast<std::size_t>(alpha));
    for (double v : hr) REQUIRE(v == 1.7);
  }
}

TEST_CASE("lerp anchors LR values at block centers with flat ends") {
  const auto hr = lerp_upsample(std::vector<double>{0.0, 6.0}, 2);
  REQUIRE(hr == std::vector<double>{0.0, 1.5, 4.5, 6.0});
}

TEST_CASE("lerp passes through LR values at integer block centers") {
  // odd alpha puts each block center on a sample
  Rng rng(3);
  const auto lr = test::rand_vec(rng, 10, 0.0, 5.0);
  const auto hr = lerp_upsample(lr, 3);
  for (std::size_t m = 0; m < lr.size(); ++m) {
    REQUIRE(hr[m * 3 + 1] == Catch::Approx(lr[m]).margin(1e-12));
  }
}

TEST_CASE("lerp never overshoots the LR envelope, so peaks are not restored") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto lr = test::rand_vec(rng, 16, 0.0, 6.0);
    const auto hr = lerp_upsample(lr, 6);
    const double lo = *std::min_element(lr.begin(), lr.end());
    const double hi = *std::max_element(lr.begin(), lr.end());
    for (double v : hr) {
      REQUIRE(v >= lo - 1e-12);
      REQUIRE(v <= hi + 1e-12);
    }
    REQUIRE(*std::max_element(hr.begin(), hr.end()) <= hi + 1e-12);
  }
}

TEST_CASE("downsampling a lerped profile recovers the LR values where consistent") {
  Rng noiseless(0);

  SECTION("constants round-trip exactly for any alpha") {
    for (int alpha : {2, 3, 6}) {
      const std::vector<double> lr(12, 2.25);
      LoadProfile up;
      up.values_kw = lerp_upsample(lr, alpha);
      up.period_min = 5;
      LoadProfile padded = up;
      padded.period_min = 1440 / static_cast<int>(up.values_kw.size());
      const auto back = downsample(up, alpha, 0.0, noiseless).values_kw;
      REQUIRE(back == lr);
    }
  }

  SECTION("ramps round-trip exactly on interior blocks; flat ends bend the edges") {
    const int alpha = 4;
    std::vector<double> lr(10);
    for (std::size_t i = 0; i < lr.size(); ++i) lr[i] = 0.5 * static_cast<double>(i) + 1.0;
    LoadProfile up;
    up.values_kw = lerp_upsample(lr, alpha);
    up.period_min = 5;
    const auto back = downsample(up, alpha, 0.0, noiseless).values_kw;
    for (std::size_t m = 1; m + 1 < lr.size(); ++m) {
      REQUIRE(back[m] == Catch::Approx(lr[m]).margin(1e-12));
    }
    // the flat half-blocks at either end pull the first and last means inward
    REQUIRE(back.front() > lr.front());
    REQUIRE(back.back() < lr.back());
  }
}

TEST_CASE("lerp validates its inputs") {
  REQUIRE_THROWS_AS(lerp_upsample(std::vector<double>{1.0, 2.0}, 1), std::invalid_argument);
  REQUIRE_THROWS_AS(lerp_upsample(std::vector<double>{}, 2), std::invalid_argument);
}

TEST_CASE("cnn baseline reuses the generator architecture with zeroed weights") {
  GeneratorConfig g;
  g.in_channels = 6;
  g.features = 16;
  const auto setup = cnn_baseline_config(g);
  REQUIRE(setup.weights.lambda_adv == 0.0);
  REQUIRE(setup.weights.lambda_feat == 0.0);
  REQUIRE(setup.architecture.fingerprint() == g.fingerprint());
  // zero weights make the combined objective bit-identical to the content loss
  const double content = 0.123456789;
  REQUIRE(generator_loss(content, 9.9, 8.8, setup.weights) == content);
}
