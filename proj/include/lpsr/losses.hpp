#pragma once

// Training objectives: content, adversarial (saturating and non-saturating),
// discriminator, feature-matching, outline, switching, polishing. All are
// built from tape ops, so gradients come for free; the scalar overloads wrap
// a throwaway tape for direct evaluation.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lpsr/layers.hpp"
#include "lpsr/tape.hpp"

namespace lpsr {

struct LossWeights {
  double lambda_adv = 0.05;
  double lambda_feat = 0.5;

  void validate() const {
    if (lambda_adv < 0.0 || lambda_feat < 0.0) {
      throw std::invalid_argument("loss weights must be nonnegative");
    }
  }
};

namespace detail {
inline void require_equal_lengths(const Tape& t, Var a, Var b, const char* op) {
  const Shape sa = t.shape(a), sb = t.shape(b);
  if (!(sa == sb)) {
    throw std::invalid_argument(std::string(op) + ": profile shapes differ, " + sa.str() + " vs " + sb.str());
  }
}
}  // namespace detail

/// Mean squared point-to-point distance, (1/N) * ||gen - true||^2 per
/// profile, averaged over the batch.
inline Var content_loss(Tape& t, Var gen, Var target) {
  detail::require_equal_lengths(t, gen, target, "content_loss");
  const Shape s = t.shape(gen);
  const double norm = 1.0 / static_cast<double>(s.batch * s.channel * s.length);
  return scale(t, sum_all(t, square(t, sub(t, gen, target))), norm);
}

/// -[log D(real) + log(1 - D(fake))], batch means inside each term.
inline Var discriminator_loss(Tape& t, Var score_real, Var score_fake) {
  Var lr = mean_all(t, log_guarded(t, score_real));
  Var lf = mean_all(t, log_guarded(t, affine(t, score_fake, -1.0, 1.0)));
  return neg(t, add(t, lr, lf));
}

/// Non-saturating generator objective, -log D(fake).
inline Var adversarial_loss(Tape& t, Var score_fake) {
  return neg(t, mean_all(t, log_guarded(t, score_fake)));
}

/// The original saturating form, log(1 - D(fake)). Kept for loss-curve
/// inspection; training uses the non-saturating form.
inline Var adversarial_loss_saturating(Tape& t, Var score_fake) {
  return mean_all(t, log_guarded(t, affine(t, score_fake, -1.0, 1.0)));
}

/// Sum over layers of the squared Euclidean distance between feature maps,
/// averaged over the batch. No per-layer normalization.
inline Var feature_matching_loss(Tape& t, std::span<const Var> fake_features,
                                 std::span<const Var> real_features) {
  if (fake_features.size() != real_features.size() || fake_features.empty()) {
    throw std::invalid_argument("feature_matching_loss: feature lists must be nonempty and equal length");
  }
  const double inv_batch = 1.0 / static_cast<double>(t.shape(fake_features[0]).batch);
  Var total{-1};
  for (std::size_t j = 0; j < fake_features.size(); ++j) {
    detail::require_equal_lengths(t, fake_features[j], real_features[j], "feature_matching_loss");
    Var term = sum_all(t, square(t, sub(t, fake_features[j], real_features[j])));
    total = total.valid() ? add(t, total, term) : term;
  }
  return scale(t, total, inv_batch);
}

/// L_G = L_cont + lambda1 * L_adv + lambda2 * L_feat.
inline Var generator_loss(Tape& t, Var content, Var adversarial, Var feature, const LossWeights& w) {
  w.validate();
  Var out = add(t, content, scale(t, adversarial, w.lambda_adv));
  return add(t, out, scale(t, feature, w.lambda_feat));
}

/// Envelope-matching loss: squared distance between max-pooled signals plus
/// the same on the negated signals, each normalized by 1/N.
inline Var outline_loss(Tape& t, Var gen, Var target, std::int64_t k_max = 3, std::int64_t s_max = 1) {
  detail::require_equal_lengths(t, gen, target, "outline_loss");
  const Shape s = t.shape(gen);
  const double norm = 1.0 / static_cast<double>(s.batch * s.channel * s.length);
  Var upper = sum_all(t, square(t, sub(t, max_pool1d(t, gen, k_max, s_max),
                                       max_pool1d(t, target, k_max, s_max))));
  Var lower = sum_all(t, square(t, sub(t, max_pool1d(t, neg(t, gen), k_max, s_max),
                                       max_pool1d(t, neg(t, target), k_max, s_max))));
  return add(t, scale(t, upper, norm), scale(t, lower, norm));
}

/// Load-change-rate loss: max-pooled absolute first difference, squared
/// distance normalized by 1/N (N the original length, as printed).
inline Var switching_loss(Tape& t, Var gen, Var target, std::int64_t k_max = 3, std::int64_t s_max = 1) {
  detail::require_equal_lengths(t, gen, target, "switching_loss");
  const Shape s = t.shape(gen);
  const double norm = 1.0 / static_cast<double>(s.batch * s.channel * s.length);
  Var dg = max_pool1d(t, abs_value(t, first_diff(t, gen)), k_max, s_max);
  Var dt = max_pool1d(t, abs_value(t, first_diff(t, target)), k_max, s_max);
  return scale(t, sum_all(t, square(t, sub(t, dg, dt))), norm);
}

/// L_pol = L_out + L_swit.
inline Var polishing_loss(Tape& t, Var gen, Var target, std::int64_t k_max = 3, std::int64_t s_max = 1) {
  return add(t, outline_loss(t, gen, target, k_max, s_max),
             switching_loss(t, gen, target, k_max, s_max));
}

// ---------------------------------------------------------------------------
// Scalar conveniences over plain signals (single profile, no grad).

namespace detail {
inline double eval_pair_loss(const std::vector<double>& gen, const std::vector<double>& target,
                             Var (*fn)(Tape&, Var, Var, std::int64_t, std::int64_t), std::int64_t k,
                             std::int64_t s) {
  Tape t;
  Var g = t.leaf(Tensor::signal(gen));
  Var tr = t.leaf(Tensor::signal(target));
  return t.scalar(fn(t, g, tr, k, s));
}
}  // namespace detail

inline double content_loss(const std::vector<double>& gen, const std::vector<double>& target) {
  Tape t;
  return t.scalar(content_loss(t, t.leaf(Tensor::signal(gen)), t.leaf(Tensor::signal(target))));
}

inline double discriminator_loss(double score_real, double score_fake) {
  Tape t;
  return t.scalar(discriminator_loss(t, t.leaf(Tensor::signal({score_real})),
                                     t.leaf(Tensor::signal({score_fake}))));
}

inline double adversarial_loss(double score_fake) {
  Tape t;
  return t.scalar(adversarial_loss(t, t.leaf(Tensor::signal({score_fake}))));
}

inline double adversarial_loss_saturating(double score_fake) {
  Tape t;
  return t.scalar(adversarial_loss_saturating(t, t.leaf(Tensor::signal({score_fake}))));
}

inline double feature_matching_loss(const std::vector<std::vector<double>>& fake,
                                    const std::vector<std::vector<double>>& real) {
  Tape t;
  std::vector<Var> vf, vr;
  for (const auto& f : fake) vf.push_back(t.leaf(Tensor::signal(f)));
  for (const auto& r : real) vr.push_back(t.leaf(Tensor::signal(r)));
  return t.scalar(feature_matching_loss(t, vf, vr));
}

inline double generator_loss(double content, double adversarial, double feature, const LossWeights& w) {
  w.validate();
  return content + w.lambda_adv * adversarial + w.lambda_feat * feature;
}

inline double outline_loss(const std::vector<double>& gen, const std::vector<double>& target,
                           std::int64_t k_max = 3, std::int64_t s_max = 1) {
  return detail::eval_pair_loss(gen, target, &outline_loss, k_max, s_max);
}

inline double switching_loss(const std::vector<double>& gen, const std::vector<double>& target,
                             std::int64_t k_max = 3, std::int64_t s_max = 1) {
  return detail::eval_pair_loss(gen, target, &switching_loss, k_max, s_max);
}

inline double polishing_loss(const std::vector<double>& gen, const std::vector<double>& target,
                             std::int64_t k_max = 3, std::int64_t s_max = 1) {
  return detail::eval_pair_loss(gen, target, &polishing_loss, k_max, s_max);
}

}  // namespace lpsr
