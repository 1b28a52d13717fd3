#pragma once

// Batched 1-D signal tensor: shape (batch, channel, length), fp64 storage,
// row-major over (batch, channel, length).

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpsr {

struct Shape {
  std::int64_t batch = 1;
  std::int64_t channel = 1;
  std::int64_t length = 1;

  std::int64_t size() const { return batch * channel * length; }
  bool operator==(const Shape&) const = default;

  std::string str() const {
    return "(" + std::to_string(batch) + "," + std::to_string(channel) + "," +
           std::to_string(length) + ")";
  }
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

class Tensor {
 public:
  Shape shape;
  std::vector<double> values;
  std::optional<std::vector<double>> grad;
  bool requires_grad = false;

  Tensor() : values(1, 0.0) {}

  Tensor(Shape s, std::vector<double> v) : shape(s), values(std::move(v)) {
    if (static_cast<std::int64_t>(values.size()) != shape.size()) {
      throw std::invalid_argument("tensor: storage size " + std::to_string(values.size()) +
                                  " does not match shape " + shape.str());
    }
  }

  static Tensor zeros(Shape s) { return Tensor(s, std::vector<double>(static_cast<std::size_t>(s.size()), 0.0)); }

  static Tensor full(Shape s, double value) {
    return Tensor(s, std::vector<double>(static_cast<std::size_t>(s.size()), value));
  }

  /// A single-batch, single-channel signal.
  static Tensor signal(std::vector<double> v) {
    const auto n = static_cast<std::int64_t>(v.size());
    return Tensor(Shape{1, 1, n}, std::move(v));
  }

  double& at(std::int64_t b, std::int64_t c, std::int64_t i) {
    return values[static_cast<std::size_t>((b * shape.channel + c) * shape.length + i)];
  }
  double at(std::int64_t b, std::int64_t c, std::int64_t i) const {
    return values[static_cast<std::size_t>((b * shape.channel + c) * shape.length + i)];
  }

  std::int64_t size() const { return shape.size(); }
};

}  // namespace lpsr
