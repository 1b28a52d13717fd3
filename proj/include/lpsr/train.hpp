#pragma once

// Two-stage training orchestration: adversarial stage, polishing stage,
// evaluation against the LERP and CNN baselines, the alpha sweep, and the
// weather ablation. Training is single-threaded and bit-reproducible for a
// fixed (config, seed, dataset); evaluation fans out per profile with
// order-independent aggregation into preallocated slots.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lpsr/baselines.hpp"
#include "lpsr/csv.hpp"
#include "lpsr/data.hpp"
#include "lpsr/losses.hpp"
#include "lpsr/metrics.hpp"
#include "lpsr/networks.hpp"
#include "lpsr/train_config.hpp"

namespace lpsr {

inline double value_range(const std::vector<double>& v) {
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  return *mx - *mn;
}

// ---------------------------------------------------------------------------
// Training log: one value per (epoch, quantity), serialized long-format.

struct TrainLog {
  std::vector<std::string> quantities;
  std::vector<std::vector<double>> rows;  // rows[epoch][quantity index]

  void append(const std::vector<double>& row) {
    if (row.size() != quantities.size()) {
      throw std::invalid_argument("train log: row width does not match quantity list");
    }
    for (double v : row) {
      if (!std::isfinite(v)) throw std::runtime_error("train log: non-finite value logged");
    }
    rows.push_back(row);
  }

  double value(std::size_t epoch, const std::string& quantity) const {
    for (std::size_t i = 0; i < quantities.size(); ++i) {
      if (quantities[i] == quantity) return rows.at(epoch)[i];
    }
    throw std::invalid_argument("train log: unknown quantity '" + quantity + "'");
  }

  bool operator==(const TrainLog&) const = default;

  void write_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("train log: cannot open " + path);
    f << "epoch,quantity,value\n";
    for (std::size_t e = 0; e < rows.size(); ++e) {
      for (std::size_t q = 0; q < quantities.size(); ++q) {
        f << e + 1 << "," << quantities[q] << "," << detail::format_double(rows[e][q]) << "\n";
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Dataset assembly.

struct TrainingData {
  Corpus corpus;                 // HR profiles and their 5-min weather tracks
  std::vector<LoadProfile> lr;   // paired noisy LR profiles
  DatasetSplit split;
  Normalizer norm;
  bool weather_on = false;
  int alpha = 6;
  int hr_len = 0;
  int lr_len = 0;
  int weather_channels = 0;

  const LoadProfile& hr(int i) const { return corpus.hr[static_cast<std::size_t>(i)]; }
  const WeatherTrack& weather(int i) const { return corpus.weather_for(hr(i)); }
};

inline TrainingData prepare_training_data(const RunConfig& cfg) {
  cfg.validate();
  TrainingData d;
  d.alpha = cfg.alpha;
  if (cfg.hr_csv.empty()) {
    CorpusSpec cs;
    cs.days = cfg.synth_days;
    cs.households = cfg.synth_households;
    cs.seed = cfg.seed;
    d.corpus = build_synthetic_corpus(cs);
  } else {
    auto loaded = load_profiles_csv(cfg.hr_csv, 5);
    d.corpus.hr = std::move(loaded.profiles);
    int max_day = 0;
    for (const auto& p : d.corpus.hr) max_day = std::max(max_day, p.day);
    d.corpus.days = max_day + 1;
    d.corpus.households = static_cast<int>(d.corpus.hr.size()) / std::max(1, d.corpus.days);
    if (!cfg.weather_csv.empty()) {
      auto tracks = load_weather_csv(cfg.weather_csv);
      d.corpus.weather.assign(static_cast<std::size_t>(max_day) + 1, WeatherTrack{});
      for (auto& t : tracks) {
        WeatherTrack w5 = t.period_min == 5 ? std::move(t) : interpolate_weather(t, 5);
        const int day = w5.day;
        if (day < 0 || day > max_day) continue;
        d.corpus.weather[static_cast<std::size_t>(day)] =
            crop_weather(std::move(w5), static_cast<std::size_t>(kMinutesPerDay / 5));
      }
      for (const auto& p : d.corpus.hr) {
        if (d.corpus.weather[static_cast<std::size_t>(p.day)].channels.empty()) {
          throw std::runtime_error("prepare_training_data: no weather track for day " +
                                   std::to_string(p.day));
        }
      }
    }
  }
  for (const auto& p : d.corpus.hr) validate_daily(p);
  d.hr_len = static_cast<int>(d.corpus.hr.front().size());
  if (d.hr_len % cfg.alpha != 0) {
    throw std::invalid_argument("prepare_training_data: alpha does not divide the HR length");
  }
  d.lr_len = d.hr_len / cfg.alpha;

  if (cfg.lr_csv.empty()) {
    d.lr = make_lr_set(d.corpus.hr, cfg.alpha, cfg.noise_var, cfg.seed);
  } else {
    auto loaded = load_profiles_csv(cfg.lr_csv);
    d.lr = std::move(loaded.profiles);
    if (d.lr.size() != d.corpus.hr.size()) {
      throw std::runtime_error("prepare_training_data: LR and HR profile counts differ");
    }
  }
  for (const auto& p : d.lr) {
    if (static_cast<int>(p.size()) != d.lr_len) {
      throw std::runtime_error("prepare_training_data: LR profile length does not match HR/alpha");
    }
  }

  d.weather_on = cfg.weather && !d.corpus.weather.empty();
  d.weather_channels = d.weather_on ? static_cast<int>(d.corpus.weather.front().channel_count()) : 0;

  d.split = split_dataset(d.corpus.hr.size(), cfg.f_train, cfg.f_val, cfg.f_test, cfg.seed);
  d.norm.fit_load(d.corpus.hr, d.split.train);
  if (d.weather_on) {
    std::vector<const WeatherTrack*> tracks;
    tracks.reserve(d.split.train.size());
    for (int i : d.split.train) tracks.push_back(&d.weather(i));
    d.norm.fit_weather(tracks);
  }
  return d;
}

inline GeneratorConfig generator_config(const RunConfig& cfg, const TrainingData& d) {
  GeneratorConfig g;
  g.in_channels = 1 + (d.weather_on ? d.weather_channels : 0);
  g.features = cfg.gen_features;
  g.residual_blocks = cfg.gen_blocks;
  g.kernel_head = cfg.kernel_head;
  g.kernel_inner = cfg.kernel_inner;
  const auto [s1, s2] = transpose_strides_for_alpha(cfg.alpha);
  g.stride1 = s1;
  g.stride2 = s2;
  g.validate();
  return g;
}

inline DiscriminatorConfig discriminator_config(const RunConfig& cfg, const TrainingData& d) {
  DiscriminatorConfig dc;
  dc.input_length = d.hr_len;
  dc.kernel = cfg.disc_kernel;
  dc.stride = cfg.disc_stride;
  dc.leaky_slope = cfg.leaky_slope;
  dc.validate();
  return dc;
}

inline PolisherConfig polisher_config(const RunConfig& cfg) {
  PolisherConfig p;
  p.features = cfg.pol_features;
  p.residual_blocks = cfg.pol_blocks;
  p.kernel_head = cfg.kernel_head;
  p.kernel_inner = cfg.kernel_inner;
  p.validate();
  return p;
}

struct Batch {
  Tensor lr_load;                 // (B, 1, M), normalized
  std::optional<Tensor> weather;  // (B, W, M), block-meaned to the LR grid, normalized
  Tensor hr;                      // (B, 1, N), normalized
};

inline Batch make_batch(const TrainingData& d, const std::vector<int>& order, std::size_t begin,
                        std::size_t count) {
  const auto B = static_cast<std::int64_t>(count);
  const std::int64_t M = d.lr_len, N = d.hr_len;
  Batch b;
  b.lr_load = Tensor::zeros(Shape{B, 1, M});
  b.hr = Tensor::zeros(Shape{B, 1, N});
  if (d.weather_on) b.weather = Tensor::zeros(Shape{B, d.weather_channels, M});
  for (std::size_t j = 0; j < count; ++j) {
    const int idx = order[begin + j];
    const auto lrv = d.norm.normalize_load(d.lr[static_cast<std::size_t>(idx)].values_kw);
    const auto hrv = d.norm.normalize_load(d.hr(idx).values_kw);
    std::copy(lrv.begin(), lrv.end(),
              b.lr_load.values.begin() + static_cast<std::ptrdiff_t>(j * static_cast<std::size_t>(M)));
    std::copy(hrv.begin(), hrv.end(),
              b.hr.values.begin() + static_cast<std::ptrdiff_t>(j * static_cast<std::size_t>(N)));
    if (d.weather_on) {
      const auto& track = d.weather(idx);
      for (int c = 0; c < d.weather_channels; ++c) {
        const auto ch = d.norm.normalize_weather(
            static_cast<std::size_t>(c),
            block_mean(track.channels[static_cast<std::size_t>(c)], d.alpha));
        std::copy(ch.begin(), ch.end(),
                  b.weather->values.begin() +
                      static_cast<std::ptrdiff_t>(
                          (j * static_cast<std::size_t>(d.weather_channels) +
                           static_cast<std::size_t>(c)) *
                          static_cast<std::size_t>(M)));
      }
    }
  }
  return b;
}

namespace detail {
inline void require_finite_loss(double v, const char* stage, int epoch, std::size_t batch) {
  if (!std::isfinite(v)) {
    throw std::runtime_error(std::string(stage) + ": non-finite loss at epoch " +
                             std::to_string(epoch + 1) + ", batch " + std::to_string(batch) +
                             "; last checkpoint retained");
  }
}

inline void maybe_checkpoint(const std::string& out_dir, const std::string& name,
                             const NetworkParams& params, int alpha, int epoch, int interval,
                             int total_epochs) {
  if (out_dir.empty()) return;
  const bool at_interval = interval > 0 && (epoch + 1) % interval == 0;
  if (!at_interval && epoch + 1 != total_epochs) return;
  std::filesystem::create_directories(out_dir);
  save_checkpoint(out_dir + "/" + name + "_epoch" + std::to_string(epoch + 1) + ".ckpt", params,
                  alpha, epoch + 1);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Stage 1: adversarial training (or the MSE-only CNN control).

enum class Stage1Mode { gan, cnn };

struct Stage1Result {
  GeneratorConfig gen_cfg;
  DiscriminatorConfig disc_cfg;
  NetworkParams generator;
  NetworkParams discriminator;  // empty in cnn mode
  TrainLog log;
};

inline Stage1Result train_stage1(const RunConfig& cfg, const TrainingData& data, Stage1Mode mode) {
  cfg.validate();
  Stage1Result res;
  res.gen_cfg = generator_config(cfg, data);
  res.disc_cfg = discriminator_config(cfg, data);

  Rng init_g(derive_seed(cfg.seed, {kStreamInitGenerator}));
  res.generator = init_generator(res.gen_cfg, init_g);
  const bool gan = mode == Stage1Mode::gan;
  if (gan) {
    Rng init_d(derive_seed(cfg.seed, {kStreamInitDiscriminator}));
    res.discriminator = init_discriminator(res.disc_cfg, init_d);
  }
  // With both loss weights at zero the generator objective degenerates to the
  // content loss; the generator-side graph is then built exactly as in cnn
  // mode so the two runs stay bit-identical.
  const bool adversarial_terms = gan && (cfg.lambda_adv > 0.0 || cfg.lambda_feat > 0.0);
  const LossWeights weights{cfg.lambda_adv, cfg.lambda_feat};

  Adam adam_g(AdamConfig{cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
  Adam adam_d(AdamConfig{cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
  Rng shuffle_rng(derive_seed(cfg.seed, {kStreamShuffle, 1}));

  if (gan) {
    res.log.quantities = {"l_d", "l_g", "l_cont", "l_adv", "l_feat", "score_real", "score_fake"};
  } else {
    res.log.quantities = {"l_g", "l_cont"};
  }

  std::vector<int> order = data.split.train;
  if (order.empty()) throw std::invalid_argument("train_stage1: empty training split");
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const char* stage_name = gan ? "stage 1" : "cnn baseline";

  for (int epoch = 0; epoch < cfg.epochs_gan; ++epoch) {
    if (cfg.shuffle) shuffle_rng.shuffle(order);
    double sum_ld = 0, sum_lg = 0, sum_cont = 0, sum_adv = 0, sum_feat = 0;
    double sum_sr = 0, sum_sf = 0;
    std::size_t n_batches = 0;

    for (std::size_t begin = 0; begin < order.size(); begin += bs) {
      const std::size_t count = std::min(bs, order.size() - begin);
      Batch batch = make_batch(data, order, begin, count);

      Tape tg;
      MountedParams mg(tg, res.generator, true);
      Var lr_in = tg.leaf(batch.lr_load.shape, batch.lr_load.values, false);
      std::optional<Var> wx_in;
      if (batch.weather) wx_in = tg.leaf(batch.weather->shape, batch.weather->values, false);
      Var fake = generator_forward(tg, res.gen_cfg, mg, lr_in, wx_in, Mode::train);
      Var target = tg.leaf(batch.hr.shape, batch.hr.values, false);

      if (gan) {
        for (int ds = 0; ds < cfg.disc_steps; ++ds) {
          Tape td;
          MountedParams md(td, res.discriminator, true);
          Var real_d = td.leaf(batch.hr.shape, batch.hr.values, false);
          Var fake_d = td.leaf(tg.shape(fake), tg.values(fake), false);
          auto real_out = discriminator_forward(td, res.disc_cfg, md, real_d, Mode::train);
          auto fake_out = discriminator_forward(td, res.disc_cfg, md, fake_d, Mode::train);
          Var ld = discriminator_loss(td, real_out.score, fake_out.score);
          const double ld_val = td.scalar(ld);
          detail::require_finite_loss(ld_val, stage_name, epoch, n_batches);
          td.backward(ld);
          adam_d.step(md.adam_items(td));
          sum_ld += ld_val;
          double sr = 0, sf = 0;
          for (double v : td.values(real_out.score)) sr += v;
          for (double v : td.values(fake_out.score)) sf += v;
          sum_sr += sr / static_cast<double>(count);
          sum_sf += sf / static_cast<double>(count);
        }
      }

      for (int gs = 0; gs < cfg.gen_steps; ++gs) {
        // Extra generator steps (ratio > 1) rebuild the graph on a fresh tape.
        std::optional<Tape> t2;
        std::optional<MountedParams> m2;
        Tape* t = &tg;
        MountedParams* m = &mg;
        Var fake_g = fake, target_g = target;
        if (gs > 0) {
          t2.emplace();
          m2.emplace(*t2, res.generator, true);
          Var lr2 = t2->leaf(batch.lr_load.shape, batch.lr_load.values, false);
          std::optional<Var> wx2;
          if (batch.weather) wx2 = t2->leaf(batch.weather->shape, batch.weather->values, false);
          fake_g = generator_forward(*t2, res.gen_cfg, *m2, lr2, wx2, Mode::train);
          target_g = t2->leaf(batch.hr.shape, batch.hr.values, false);
          t = &*t2;
          m = &*m2;
        }
        Var cont = content_loss(*t, fake_g, target_g);
        Var total = cont;
        double adv_val = 0.0, feat_val = 0.0;
        if (adversarial_terms) {
          MountedParams md_frozen(*t, res.discriminator, false);
          auto fake_sc = discriminator_forward(*t, res.disc_cfg, md_frozen, fake_g, Mode::train);
          auto real_sc = discriminator_forward(*t, res.disc_cfg, md_frozen, target_g, Mode::train);
          Var adv = adversarial_loss(*t, fake_sc.score);
          Var feat = feature_matching_loss(*t, fake_sc.features, real_sc.features);
          total = generator_loss(*t, cont, adv, feat, weights);
          adv_val = t->scalar(adv);
          feat_val = t->scalar(feat);
        }
        const double lg_val = t->scalar(total);
        detail::require_finite_loss(lg_val, stage_name, epoch, n_batches);
        t->backward(total);
        adam_g.step(m->adam_items(*t));
        if (gs == 0) {
          sum_lg += lg_val;
          sum_cont += t->scalar(cont);
          sum_adv += adv_val;
          sum_feat += feat_val;
        }
      }
      ++n_batches;
    }

    const double nb = static_cast<double>(std::max<std::size_t>(1, n_batches));
    const double nd = static_cast<double>(std::max(1, cfg.disc_steps)) * nb;
    if (gan) {
      res.log.append({sum_ld / nd, sum_lg / nb, sum_cont / nb, sum_adv / nb, sum_feat / nb,
                      sum_sr / nd, sum_sf / nd});
    } else {
      res.log.append({sum_lg / nb, sum_cont / nb});
    }
    detail::maybe_checkpoint(cfg.out_dir, gan ? "generator" : "cnn", res.generator, cfg.alpha,
                             epoch, cfg.checkpoint_interval, cfg.epochs_gan);
    if (gan) {
      detail::maybe_checkpoint(cfg.out_dir, "discriminator", res.discriminator, cfg.alpha, epoch,
                               cfg.checkpoint_interval, cfg.epochs_gan);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Stage 2: the polishing network, trained on frozen-generator outputs.

struct Stage2Result {
  PolisherConfig pol_cfg;
  NetworkParams polisher;
  TrainLog log;
};

inline Stage2Result train_stage2(const RunConfig& cfg, const TrainingData& data,
                                 const GeneratorConfig& gen_cfg, NetworkParams& generator) {
  cfg.validate();
  require_fingerprint(generator, gen_cfg.fingerprint(), "train_stage2 generator");
  const NetworkParams generator_before = generator;

  Stage2Result res;
  res.pol_cfg = polisher_config(cfg);
  Rng init_p(derive_seed(cfg.seed, {kStreamInitPolisher}));
  res.polisher = init_polisher(res.pol_cfg, init_p);
  res.log.quantities = {"l_pol", "l_out", "l_swit"};

  if (data.split.train.empty()) throw std::invalid_argument("train_stage2: empty training split");
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);
  const std::int64_t N = data.hr_len;

  // Generator outputs for the training split, computed once in eval mode.
  std::vector<std::vector<double>> gen_out(data.split.train.size());
  for (std::size_t begin = 0; begin < data.split.train.size(); begin += bs) {
    const std::size_t count = std::min(bs, data.split.train.size() - begin);
    Batch batch = make_batch(data, data.split.train, begin, count);
    Tape te;
    MountedParams me(te, generator, false);
    Var lr_in = te.leaf(batch.lr_load.shape, batch.lr_load.values, false);
    std::optional<Var> wx_in;
    if (batch.weather) wx_in = te.leaf(batch.weather->shape, batch.weather->values, false);
    Var fake = generator_forward(te, gen_cfg, me, lr_in, wx_in, Mode::eval);
    const auto& v = te.values(fake);
    const std::size_t n = static_cast<std::size_t>(N);
    for (std::size_t j = 0; j < count; ++j) {
      gen_out[begin + j].assign(v.begin() + static_cast<std::ptrdiff_t>(j * n),
                                v.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
    }
  }

  Adam adam_p(AdamConfig{cfg.lr, cfg.beta1, cfg.beta2, 1e-8});
  Rng shuffle_rng(derive_seed(cfg.seed, {kStreamShuffle, 2}));
  std::vector<std::size_t> order(data.split.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs_polish; ++epoch) {
    if (cfg.shuffle) shuffle_rng.shuffle(order);
    double sum_pol = 0, sum_out = 0, sum_swit = 0;
    std::size_t n_batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += bs) {
      const std::size_t count = std::min(bs, order.size() - begin);
      Tensor input = Tensor::zeros(Shape{static_cast<std::int64_t>(count), 1, N});
      Tensor target = Tensor::zeros(Shape{static_cast<std::int64_t>(count), 1, N});
      for (std::size_t j = 0; j < count; ++j) {
        const std::size_t tr = order[begin + j];
        const auto& gv = gen_out[tr];
        std::copy(gv.begin(), gv.end(),
                  input.values.begin() + static_cast<std::ptrdiff_t>(j * static_cast<std::size_t>(N)));
        const auto hv =
            data.norm.normalize_load(data.hr(data.split.train[tr]).values_kw);
        std::copy(hv.begin(), hv.end(),
                  target.values.begin() + static_cast<std::ptrdiff_t>(j * static_cast<std::size_t>(N)));
      }
      Tape t;
      MountedParams m(t, res.polisher, true);
      Var in = t.leaf(input.shape, input.values, false);
      Var tgt = t.leaf(target.shape, target.values, false);
      Var polished = polisher_forward(t, res.pol_cfg, m, in, Mode::train);
      Var l_out = outline_loss(t, polished, tgt, cfg.k_max, cfg.s_max);
      Var l_swit = switching_loss(t, polished, tgt, cfg.k_max, cfg.s_max);
      Var l_pol = add(t, l_out, l_swit);
      const double pol_val = t.scalar(l_pol);
      detail::require_finite_loss(pol_val, "stage 2", epoch, n_batches);
      t.backward(l_pol);
      adam_p.step(m.adam_items(t));
      sum_pol += pol_val;
      sum_out += t.scalar(l_out);
      sum_swit += t.scalar(l_swit);
      ++n_batches;
    }
    const double nb = static_cast<double>(std::max<std::size_t>(1, n_batches));
    res.log.append({sum_pol / nb, sum_out / nb, sum_swit / nb});
    detail::maybe_checkpoint(cfg.out_dir, "polisher", res.polisher, cfg.alpha, epoch,
                             cfg.checkpoint_interval, cfg.epochs_polish);
  }

  if (!generator.bit_equal(generator_before)) {
    throw std::logic_error("train_stage2: generator parameters changed during polishing");
  }
  return res;
}

// ---------------------------------------------------------------------------
// Evaluation.

struct EvalMethods {
  const GeneratorConfig* cnn_cfg = nullptr;
  NetworkParams* cnn = nullptr;
  const GeneratorConfig* gan_cfg = nullptr;
  NetworkParams* gan = nullptr;
  const PolisherConfig* pol_cfg = nullptr;
  NetworkParams* polisher = nullptr;
};

namespace detail {

inline std::vector<double> clamp_nonneg(std::vector<double> v) {
  for (double& x : v) {
    if (x < 0.0) x = 0.0;
  }
  return v;
}

/// Single-profile generator inference on the kW scale (eval mode, B=1).
inline std::vector<double> infer_hr_kw(const TrainingData& data, const GeneratorConfig& gcfg,
                                       NetworkParams& params, int idx,
                                       const PolisherConfig* pol_cfg, NetworkParams* polisher) {
  const std::vector<int> one{idx};
  Batch b = make_batch(data, one, 0, 1);
  Tape t;
  MountedParams m(t, params, false);
  Var lr_in = t.leaf(b.lr_load.shape, b.lr_load.values, false);
  std::optional<Var> wx_in;
  if (b.weather) wx_in = t.leaf(b.weather->shape, b.weather->values, false);
  Var out = generator_forward(t, gcfg, m, lr_in, wx_in, Mode::eval);
  if (pol_cfg && polisher) {
    MountedParams mp(t, *polisher, false);
    out = polisher_forward(t, *pol_cfg, mp, out, Mode::eval);
  }
  return clamp_nonneg(data.norm.denormalize_load(t.values(out)));
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> threads;
  const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  for (std::size_t t = 0; t < w; ++t) {
    threads.emplace_back([t, w, n, &fn] {
      for (std::size_t i = t; i < n; i += w) fn(i);
    });
  }
  for (auto& th : threads) th.join();
}

}  // namespace detail

/// Runs every configured method on the identical LR test inputs and builds
/// the metric report (per-profile MSE/PLE/FCE/CPE, spectral-Wasserstein
/// aggregate, gains versus LERP).
inline MetricReport evaluate(const RunConfig& cfg, const TrainingData& data,
                             const EvalMethods& methods) {
  cfg.validate();
  const auto& test = data.split.test;
  if (test.empty()) throw std::invalid_argument("evaluate: empty test split");
  if ((methods.cnn && !methods.cnn_cfg) || (methods.gan && !methods.gan_cfg) ||
      (methods.polisher && !methods.pol_cfg)) {
    throw std::invalid_argument("evaluate: method parameters provided without their config");
  }
  if (methods.polisher && !methods.gan) {
    throw std::invalid_argument("evaluate: polished outputs require the generator");
  }

  std::vector<std::string> method_names{"LERP"};
  if (methods.cnn) method_names.push_back("CNN");
  if (methods.gan) method_names.push_back("GAN-unpolished");
  if (methods.gan && methods.polisher) method_names.push_back("GAN-polished");

  const std::size_t n = test.size();
  std::map<std::string, std::vector<std::vector<double>>> outputs;
  for (const auto& name : method_names) outputs[name].resize(n);
  std::vector<std::vector<double>> gt(n);
  std::vector<std::string> ids(n);

  int workers = cfg.eval_workers;
  if (workers <= 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  detail::parallel_for(n, workers, [&](std::size_t i) {
    const int idx = test[i];
    const auto& hr = data.hr(idx);
    gt[i] = hr.values_kw;
    ids[i] = hr.household_id + "-d" + std::to_string(hr.day);
    outputs.at("LERP")[i] =
        lerp_upsample(data.lr[static_cast<std::size_t>(idx)], data.alpha).values_kw;
    if (methods.cnn) {
      outputs.at("CNN")[i] =
          detail::infer_hr_kw(data, *methods.cnn_cfg, *methods.cnn, idx, nullptr, nullptr);
    }
    if (methods.gan) {
      outputs.at("GAN-unpolished")[i] =
          detail::infer_hr_kw(data, *methods.gan_cfg, *methods.gan, idx, nullptr, nullptr);
      if (methods.polisher) {
        outputs.at("GAN-polished")[i] = detail::infer_hr_kw(data, *methods.gan_cfg, *methods.gan,
                                                            idx, methods.pol_cfg, methods.polisher);
      }
    }
  });

  std::map<std::string, std::map<std::string, std::vector<double>>> per_profile;
  for (const auto& name : method_names) {
    auto& cells = per_profile[name];
    cells["MSE"].resize(n);
    cells["PLE"].resize(n);
    cells["FCE"].resize(n);
    cells["CPE"].resize(n);
    detail::parallel_for(n, workers, [&](std::size_t i) {
      const auto& out = outputs.at(name)[i];
      cells.at("MSE")[i] = mse(out, gt[i]);
      cells.at("PLE")[i] = ple(out, gt[i]);
      cells.at("FCE")[i] = fce(out, gt[i]);
      cells.at("CPE")[i] = cpe(out, gt[i], cfg.rdp_eps_frac * value_range(gt[i]));
    });
  }

  std::map<std::string, std::map<std::string, double>> aggregates;
  for (const auto& name : method_names) {
    const auto axes = spectral_wasserstein(outputs.at(name), gt, cfg.spectral_bins);
    double s = 0.0;
    for (double v : axes) s += v;
    aggregates[name]["WD"] = s / static_cast<double>(axes.size());
  }

  return build_report(method_names, per_profile, ids, aggregates, "LERP");
}

// ---------------------------------------------------------------------------
// Full pipeline helpers.

struct PipelineResult {
  Stage1Result gan;
  Stage1Result cnn;
  Stage2Result polish;
  MetricReport report;
};

/// Trains GAN + CNN control + polisher on one dataset and evaluates all four
/// methods on the shared test split.
inline PipelineResult run_pipeline(const RunConfig& cfg, const TrainingData& data) {
  PipelineResult r;
  r.gan = train_stage1(cfg, data, Stage1Mode::gan);
  r.cnn = train_stage1(cfg, data, Stage1Mode::cnn);
  r.polish = train_stage2(cfg, data, r.gan.gen_cfg, r.gan.generator);
  EvalMethods m;
  m.cnn_cfg = &r.cnn.gen_cfg;
  m.cnn = &r.cnn.generator;
  m.gan_cfg = &r.gan.gen_cfg;
  m.gan = &r.gan.generator;
  m.pol_cfg = &r.polish.pol_cfg;
  m.polisher = &r.polish.polisher;
  r.report = evaluate(cfg, data, m);
  return r;
}

/// One report per scale-up factor; transpose strides are re-derived per alpha.
inline std::map<int, MetricReport> sweep_alpha(const RunConfig& base, const std::vector<int>& alphas) {
  std::map<int, MetricReport> out;
  for (int a : alphas) {
    (void)transpose_strides_for_alpha(a);  // reject unsupported factors up front
    RunConfig cfg = base;
    cfg.alpha = a;
    if (!cfg.out_dir.empty()) cfg.out_dir = base.out_dir + "/alpha" + std::to_string(a);
    TrainingData data = prepare_training_data(cfg);
    out[a] = run_pipeline(cfg, data).report;
  }
  return out;
}

struct WeatherAblation {
  MetricReport with_weather;
  MetricReport without_weather;
  std::int64_t param_count_with = 0;
  std::int64_t param_count_without = 0;
};

/// Same seed and corpus, weather conditioning toggled.
inline WeatherAblation ablate_weather(const RunConfig& base) {
  WeatherAblation ab;
  for (bool on : {true, false}) {
    RunConfig cfg = base;
    cfg.weather = on;
    if (!cfg.out_dir.empty()) cfg.out_dir = base.out_dir + (on ? "/weather_on" : "/weather_off");
    TrainingData data = prepare_training_data(cfg);
    PipelineResult r = run_pipeline(cfg, data);
    if (on) {
      ab.with_weather = r.report;
      ab.param_count_with = r.gan.generator.trainable_scalar_count();
    } else {
      ab.without_weather = r.report;
      ab.param_count_without = r.gan.generator.trainable_scalar_count();
    }
  }
  return ab;
}

}  // namespace lpsr
