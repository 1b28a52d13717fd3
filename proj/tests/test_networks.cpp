#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "lpsr/networks.hpp"
#include "testutil.hpp"

using namespace lpsr;
namespace fs = std::filesystem;

namespace {
GeneratorConfig small_gen(int alpha, int in_ch = 1) {
  GeneratorConfig g;
  g.in_channels = in_ch;
  g.features = 8;
  g.residual_blocks = 1;
  g.kernel_head = 9;
  g.kernel_inner = 3;
  const auto [s1, s2] = transpose_strides_for_alpha(alpha);
  g.stride1 = s1;
  g.stride2 = s2;
  return g;
}
}  // namespace

TEST_CASE("transpose strides per scale-up factor") {
  REQUIRE(transpose_strides_for_alpha(3) == std::pair{3, 1});
  REQUIRE(transpose_strides_for_alpha(6) == std::pair{2, 3});
  REQUIRE(transpose_strides_for_alpha(12) == std::pair{3, 4});
  REQUIRE(transpose_strides_for_alpha(4) == std::pair{4, 1});
  REQUIRE(transpose_strides_for_alpha(9) == std::pair{3, 3});
  REQUIRE_THROWS_AS(transpose_strides_for_alpha(5), std::invalid_argument);
  REQUIRE_THROWS_AS(transpose_strides_for_alpha(7), std::invalid_argument);
}

TEST_CASE("generator upsamples by exactly alpha for the supported factors") {
  Rng data_rng(5);
  for (int alpha : {3, 6, 12}) {
    const GeneratorConfig cfg = small_gen(alpha);
    Rng rng(1);
    NetworkParams params = init_generator(cfg, rng);
    const std::int64_t M = 288 / alpha;
    const Tensor lr(Shape{2, 1, M}, test::randn_vec(data_rng, static_cast<std::size_t>(2 * M)));
    const Tensor out = generate(cfg, params, lr);
    REQUIRE(out.shape.length == alpha * M);
    REQUIRE(out.shape.batch == 2);
    REQUIRE(out.shape.channel == 1);
    REQUIRE(all_finite(out.values));
  }
}

TEST_CASE("generator forward is deterministic in eval mode") {
  const GeneratorConfig cfg = small_gen(6);
  Rng rng(2);
  NetworkParams params = init_generator(cfg, rng);
  Rng data_rng(3);
  const Tensor lr(Shape{1, 1, 48}, test::randn_vec(data_rng, 48));
  const Tensor a = generate(cfg, params, lr);
  const Tensor b = generate(cfg, params, lr);
  REQUIRE(a.values == b.values);
}

TEST_CASE("generator rejects weather that does not align with the load") {
  const GeneratorConfig cfg = small_gen(6, 3);
  Rng rng(2);
  NetworkParams params = init_generator(cfg, rng);
  Rng data_rng(3);
  const Tensor lr(Shape{1, 1, 48}, test::randn_vec(data_rng, 48));
  const Tensor wx_bad(Shape{1, 2, 24}, test::randn_vec(data_rng, 48));
  REQUIRE_THROWS_AS(generate(cfg, params, lr, wx_bad), std::invalid_argument);
  const Tensor wx_good(Shape{1, 2, 48}, test::randn_vec(data_rng, 96));
  REQUIRE(generate(cfg, params, lr, wx_good).shape.length == 288);
}

TEST_CASE("generator channel count must match the config") {
  const GeneratorConfig cfg = small_gen(6, 4);
  Rng rng(2);
  NetworkParams params = init_generator(cfg, rng);
  Rng data_rng(3);
  const Tensor lr(Shape{1, 1, 48}, test::randn_vec(data_rng, 48));
  const Tensor wx(Shape{1, 2, 48}, test::randn_vec(data_rng, 96));  // 1 + 2 != 4
  REQUIRE_THROWS_AS(generate(cfg, params, lr, wx), std::invalid_argument);
}

TEST_CASE("discriminator emits a strict probability and four feature maps") {
  DiscriminatorConfig cfg;
  cfg.input_length = 288;
  Rng rng(4);
  NetworkParams params = init_discriminator(cfg, rng);
  Rng data_rng(5);

  Tape t;
  MountedParams m(t, params, false);
  Var hr = t.leaf(Shape{2, 1, 288}, test::randn_vec(data_rng, 576), false);
  const auto out = discriminator_forward(t, cfg, m, hr, Mode::eval);
  REQUIRE(out.features.size() == 4);
  for (const auto& f : out.features) REQUIRE(all_finite(t.values(f)));

  for (int trial = 0; trial < 1000; ++trial) {
    Tape te;
    MountedParams me(te, params, false);
    Var x = te.leaf(Shape{1, 1, 288}, test::randn_vec(data_rng, 288, 2.0), false);
    const double score = te.values(discriminator_forward(te, cfg, me, x, Mode::eval).score)[0];
    REQUIRE(score > 0.0);
    REQUIRE(score < 1.0);
  }
}

TEST_CASE("discriminator is deterministic and rejects wrong lengths") {
  DiscriminatorConfig cfg;
  Rng rng(4);
  NetworkParams params = init_discriminator(cfg, rng);
  Rng data_rng(6);
  const auto x = test::randn_vec(data_rng, 288);

  auto run = [&] {
    Tape t;
    MountedParams m(t, params, false);
    const auto out = discriminator_forward(t, cfg, m, t.leaf(Shape{1, 1, 288}, x, false), Mode::eval);
    return t.values(out.score)[0];
  };
  REQUIRE(run() == run());

  Tape t;
  MountedParams m(t, params, false);
  Var bad = t.leaf(Shape{1, 1, 100}, test::randn_vec(data_rng, 100), false);
  REQUIRE_THROWS_AS(discriminator_forward(t, cfg, m, bad, Mode::eval), std::invalid_argument);
}

TEST_CASE("discriminator config enforces the increasing four-layer shape") {
  DiscriminatorConfig cfg;
  cfg.features = {8, 8, 16, 32};
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.features = {4, 8, 16, 32};
  REQUIRE_NOTHROW(cfg.validate());
}

TEST_CASE("an untrained polisher is the identity") {
  PolisherConfig cfg;
  cfg.features = 8;
  cfg.residual_blocks = 1;
  Rng rng(9);
  NetworkParams params = init_polisher(cfg, rng);
  Rng data_rng(10);
  const Tensor hr(Shape{2, 1, 96}, test::randn_vec(data_rng, 192));
  const Tensor out = polish(cfg, params, hr);
  REQUIRE(out.values == hr.values);
}

TEST_CASE("polisher preserves length across the alpha family") {
  PolisherConfig cfg;
  cfg.features = 8;
  cfg.residual_blocks = 1;
  Rng rng(9);
  NetworkParams params = init_polisher(cfg, rng);
  Rng data_rng(11);
  for (int alpha : {3, 6, 12}) {
    const std::int64_t n = 288;
    (void)alpha;
    const Tensor hr(Shape{1, 1, n}, test::randn_vec(data_rng, static_cast<std::size_t>(n)));
    REQUIRE(polish(cfg, params, hr).shape.length == n);
  }
}

TEST_CASE("initialization is seed-deterministic with finite values") {
  const GeneratorConfig cfg = small_gen(6);
  Rng r1(77), r2(77), r3(78);
  const NetworkParams a = init_generator(cfg, r1);
  const NetworkParams b = init_generator(cfg, r2);
  const NetworkParams c = init_generator(cfg, r3);
  REQUIRE(a.bit_equal(b));
  REQUIRE_FALSE(a.bit_equal(c));
  for (const auto& e : a.entries()) REQUIRE(all_finite(e.tensor.values));
}

TEST_CASE("generator parameter count matches the closed form") {
  // in=1, n=8, one residual block, k_head=9, k_inner=3, strides (2,3):
  //   head conv 72+8, bn 16; block: (192+8+16)*2; up1 128+8+16; up2 192+8+16;
  //   out conv 72+1  => 969 trainable scalars.
  const GeneratorConfig cfg = small_gen(6);
  Rng rng(1);
  const NetworkParams p = init_generator(cfg, rng);
  REQUIRE(p.trainable_scalar_count() == 969);
}

TEST_CASE("weather conditioning only widens the first conv layer") {
  Rng r1(5), r2(5);
  const GeneratorConfig without = small_gen(6, 1);
  const GeneratorConfig with = small_gen(6, 6);
  const NetworkParams pw = init_generator(with, r1);
  const NetworkParams po = init_generator(without, r2);
  const std::int64_t expected_diff = 8 * 9 * 5;  // n * k_head * extra channels
  REQUIRE(pw.trainable_scalar_count() - po.trainable_scalar_count() == expected_diff);
  REQUIRE(pw.at("head.conv.w").size() - po.at("head.conv.w").size() == expected_diff);
  // every other entry keeps its size
  for (const auto& e : pw.entries()) {
    if (e.name == "head.conv.w") continue;
    REQUIRE(e.tensor.size() == po.at(e.name).size());
  }
}

TEST_CASE("checkpoints round-trip bit-exactly and reject fingerprint mismatches") {
  const auto dir = fs::temp_directory_path() / "lpsr_ckpt_test";
  fs::create_directories(dir);
  const auto path = (dir / "g.ckpt").string();

  const GeneratorConfig cfg = small_gen(6);
  Rng rng(123);
  NetworkParams params = init_generator(cfg, rng);
  save_checkpoint(path, params, 6, 17);

  const Checkpoint loaded = load_checkpoint(path, cfg.fingerprint());
  REQUIRE(loaded.alpha == 6);
  REQUIRE(loaded.epoch == 17);
  REQUIRE(loaded.params.bit_equal(params));

  GeneratorConfig other = cfg;
  other.features = 16;
  REQUIRE_THROWS_AS(load_checkpoint(path, other.fingerprint()), std::runtime_error);
  fs::remove_all(dir);
}

TEST_CASE("every config layer owns exactly one parameter entry set") {
  const GeneratorConfig cfg = small_gen(6);
  Rng rng(1);
  const NetworkParams p = init_generator(cfg, rng);
  // head(conv 2 + bn 4) + 1 block (2 conv*2 + 2 bn*4) + 2 up stages (2+4) + out conv 2
  const std::size_t expected_entries = 6 + 12 + 6 + 6 + 2;
  REQUIRE(p.entries().size() == expected_entries);
  REQUIRE_THROWS_AS(p.at("nonexistent.layer"), std::invalid_argument);
}
