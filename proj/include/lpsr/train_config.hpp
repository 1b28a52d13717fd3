#pragma once

// Run configuration. Plain defaults mirror the published hyperparameter
// table (learning rate 1e-4, lambda1 0.05, lambda2 0.5, batch 32, k_max 3,
// s_max 1, 300+300 epochs); desk_defaults() swaps in the 30+30 desk-scale
// epochs for CPU-sized experiments on the 2000-day synthetic corpus.

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lpsr {

struct RunConfig {
  // dataset
  int alpha = 6;
  double noise_var = 0.01;
  int synth_days = 100;
  int synth_households = 20;
  std::string hr_csv;
  std::string weather_csv;
  std::string lr_csv;
  double f_train = 0.70;
  double f_val = 0.15;
  double f_test = 0.15;
  bool weather = true;

  // architecture
  int gen_features = 64;
  int gen_blocks = 4;
  int pol_features = 32;
  int pol_blocks = 2;
  int kernel_head = 9;
  int kernel_inner = 3;
  int disc_kernel = 3;
  int disc_stride = 2;
  double leaky_slope = 0.2;

  // optimization
  int epochs_gan = 300;
  int epochs_polish = 300;
  int batch_size = 32;
  double lr = 1e-4;
  double beta1 = 0.99;
  double beta2 = 0.999;
  double lambda_adv = 0.05;   // lambda1
  double lambda_feat = 0.5;   // lambda2
  int k_max = 3;
  int s_max = 1;
  bool shuffle = true;
  int disc_steps = 1;
  int gen_steps = 1;
  int checkpoint_interval = 10;
  std::uint64_t seed = 1;
  std::string out_dir;

  // evaluation
  double rdp_eps_frac = 0.05;  // CPE tolerance as a fraction of the reference range
  int spectral_bins = 24;
  int eval_workers = 0;        // 0 = hardware concurrency

  static RunConfig desk_defaults() {
    RunConfig c;
    c.epochs_gan = 30;
    c.epochs_polish = 30;
    return c;  // 100 days x 20 households = 2000 household-days
  }

  void validate() const {
    if (alpha < 2) throw std::invalid_argument("config: alpha must be >= 2");
    if (noise_var < 0.0) throw std::invalid_argument("config: noise_var must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (epochs_gan < 0 || epochs_polish < 0) {
      throw std::invalid_argument("config: epoch counts must be >= 0");
    }
    if (lr <= 0.0) throw std::invalid_argument("config: learning rate must be positive");
    if (lambda_adv < 0.0 || lambda_feat < 0.0) {
      throw std::invalid_argument("config: loss weights must be nonnegative");
    }
    if (k_max < 1 || s_max < 1) throw std::invalid_argument("config: k_max and s_max must be >= 1");
    if (disc_steps < 1 || gen_steps < 1) {
      throw std::invalid_argument("config: update ratio counts must be >= 1");
    }
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
      throw std::invalid_argument("config: leaky_slope must be in (0,1)");
    }
    if (rdp_eps_frac < 0.0) throw std::invalid_argument("config: rdp_eps_frac must be >= 0");
    if (spectral_bins < 1) throw std::invalid_argument("config: spectral_bins must be >= 1");
  }
};

}  // namespace lpsr
