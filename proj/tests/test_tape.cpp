#include <catch2/catch_amalgamated.hpp>

#include <cstring>

#include "lpsr/layers.hpp"
#include "lpsr/tape.hpp"
#include "testutil.hpp"

using namespace lpsr;

TEST_CASE("backward of a plain sum gives all-ones gradient") {
  Tape t;
  Var x = t.leaf(Shape{1, 1, 4}, {1.0, -2.0, 3.0, 0.5}, true);
  t.backward(sum_all(t, x));
  REQUIRE(t.gradient(x) == std::vector<double>{1.0, 1.0, 1.0, 1.0});
}

TEST_CASE("backward of sum of squares applies the power rule") {
  Tape t;
  Var x = t.leaf(Shape{1, 1, 2}, {1.0, 2.0}, true);
  t.backward(sum_all(t, square(t, x)));
  REQUIRE(t.gradient(x) == std::vector<double>{2.0, 4.0});
}

TEST_CASE("gradients accumulate at fan-out instead of overwriting") {
  Tape t;
  Var x = t.leaf(Shape{1, 1, 3}, {1.0, 2.0, 3.0}, true);
  Var y = add(t, x, x);
  t.backward(sum_all(t, y));
  REQUIRE(t.gradient(x) == std::vector<double>{2.0, 2.0, 2.0});
}

TEST_CASE("backward rejects a non-scalar loss") {
  Tape t;
  Var x = t.leaf(Shape{1, 1, 3}, {1.0, 2.0, 3.0}, true);
  REQUIRE_THROWS_AS(t.backward(x), std::invalid_argument);
}

TEST_CASE("backward is bit-deterministic across identical runs") {
  auto run = [] {
    Rng rng(99);
    Tape t;
    Var x = t.leaf(Shape{2, 1, 8}, test::randn_vec(rng, 16), true);
    Var y = mul(t, sigmoid(t, x), affine(t, x, 0.7, -0.1));
    t.backward(mean_all(t, square(t, y)));
    return t.gradient(x);
  };
  const auto g1 = run();
  const auto g2 = run();
  REQUIRE(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("elementwise ops compute expected values") {
  Tape t;
  Var a = t.leaf(Shape{1, 1, 3}, {1.0, -2.0, 3.0}, false);
  Var b = t.leaf(Shape{1, 1, 3}, {0.5, 4.0, -1.0}, false);
  REQUIRE(t.values(add(t, a, b)) == std::vector<double>{1.5, 2.0, 2.0});
  REQUIRE(t.values(sub(t, a, b)) == std::vector<double>{0.5, -6.0, 4.0});
  REQUIRE(t.values(mul(t, a, b)) == std::vector<double>{0.5, -8.0, -3.0});
  REQUIRE(t.values(affine(t, a, 2.0, 1.0)) == std::vector<double>{3.0, -3.0, 7.0});
  REQUIRE(t.values(abs_value(t, a)) == std::vector<double>{1.0, 2.0, 3.0});
  REQUIRE(t.scalar(sum_all(t, a)) == 2.0);
  REQUIRE(t.scalar(mean_all(t, b)) == Catch::Approx(3.5 / 3.0));
}

TEST_CASE("log_guarded floors its argument") {
  Tape t;
  Var x = t.leaf(Shape{1, 1, 2}, {0.5, 0.0}, true);
  Var y = log_guarded(t, x);
  REQUIRE(t.values(y)[0] == Catch::Approx(std::log(0.5)));
  REQUIRE(t.values(y)[1] == Catch::Approx(std::log(1e-12)));
  t.backward(sum_all(t, y));
  REQUIRE(t.gradient(x)[0] == Catch::Approx(2.0));
  REQUIRE(t.gradient(x)[1] == 0.0);  // gradient suppressed at the guard
}

TEST_CASE("first_diff and concat_channels shapes and adjoints") {
  Tape t;
  Var x = t.leaf(Shape{1, 1, 4}, {1.0, 4.0, 2.0, 2.0}, true);
  Var d = first_diff(t, x);
  REQUIRE(t.shape(d) == Shape{1, 1, 3});
  REQUIRE(t.values(d) == std::vector<double>{3.0, -2.0, 0.0});

  Var a = t.leaf(Shape{1, 1, 2}, {1.0, 2.0}, false);
  Var b = t.leaf(Shape{1, 2, 2}, {3.0, 4.0, 5.0, 6.0}, false);
  Var c = concat_channels(t, a, b);
  REQUIRE(t.shape(c) == Shape{1, 3, 2});
  REQUIRE(t.values(c) == std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0, 6.0});

  Var tiny = t.leaf(Shape{1, 1, 1}, {1.0}, false);
  REQUIRE_THROWS_AS(first_diff(t, tiny), std::invalid_argument);
}

TEST_CASE("gradcheck passes for elementwise compositions") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x0 = test::randn_vec(rng, 12);
    const double err = test::gradcheck(
        [](Tape& t, const std::vector<double>& x) {
          Var v = t.leaf(Shape{1, 2, 6}, x, true);
          Var y = mul(t, sigmoid(t, v), affine(t, v, 0.3, 0.2));
          return std::pair{v, mean_all(t, square(t, y))};
        },
        x0);
    REQUIRE(err < 1e-6);
  }
}

TEST_CASE("check_finite catches non-finite forward values") {
  Tape t;
  t.check_finite = true;
  Var x = t.leaf(Shape{1, 1, 2}, {1.0, std::numeric_limits<double>::quiet_NaN()}, false);
  REQUIRE_THROWS_AS(affine(t, x, 1.0, 0.0), std::runtime_error);
}
