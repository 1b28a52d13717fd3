// Command-line harness for the load-profile super-resolution pipeline:
// synthetic corpus generation, downsampling, two-stage training, metric
// evaluation, the scale-factor sweep, and the weather ablation.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "lpsr/csv.hpp"
#include "lpsr/train.hpp"

namespace {

using namespace lpsr;

/// Binds every RunConfig key as a subcommand option, so flags mirror config
/// keys and `--config file` accepts the same names as flat key=value lines.
void bind_run_config(CLI::App* app, RunConfig& cfg) {
  app->set_config("--config", "", "Flat key=value config file");
  app->add_option("--alpha", cfg.alpha, "Scale-up factor");
  app->add_option("--noise_var", cfg.noise_var, "Downsampling noise variance");
  app->add_option("--synth_days", cfg.synth_days, "Synthetic corpus: days");
  app->add_option("--synth_households", cfg.synth_households, "Synthetic corpus: households");
  app->add_option("--hr_csv", cfg.hr_csv, "HR profiles CSV (synthetic corpus when empty)");
  app->add_option("--weather_csv", cfg.weather_csv, "Weather CSV");
  app->add_option("--lr_csv", cfg.lr_csv, "LR profiles CSV (derived from HR when empty)");
  app->add_option("--f_train", cfg.f_train, "Training fraction");
  app->add_option("--f_val", cfg.f_val, "Validation fraction");
  app->add_option("--f_test", cfg.f_test, "Test fraction");
  app->add_flag("--weather,!--no-weather", cfg.weather, "Weather conditioning on/off");
  app->add_option("--gen_features", cfg.gen_features, "Generator feature maps");
  app->add_option("--gen_blocks", cfg.gen_blocks, "Generator residual blocks");
  app->add_option("--pol_features", cfg.pol_features, "Polisher feature maps");
  app->add_option("--pol_blocks", cfg.pol_blocks, "Polisher residual blocks");
  app->add_option("--kernel_head", cfg.kernel_head, "First/last conv kernel");
  app->add_option("--kernel_inner", cfg.kernel_inner, "Residual conv kernel");
  app->add_option("--disc_kernel", cfg.disc_kernel, "Discriminator kernel");
  app->add_option("--disc_stride", cfg.disc_stride, "Discriminator stride");
  app->add_option("--leaky_slope", cfg.leaky_slope, "LeakyReLU slope");
  app->add_option("--epochs_gan", cfg.epochs_gan, "Stage-1 epochs");
  app->add_option("--epochs_polish", cfg.epochs_polish, "Stage-2 epochs");
  app->add_option("--batch_size", cfg.batch_size, "Batch size");
  app->add_option("--lr", cfg.lr, "Learning rate");
  app->add_option("--beta1", cfg.beta1, "Adam beta1");
  app->add_option("--beta2", cfg.beta2, "Adam beta2");
  app->add_option("--lambda_adv", cfg.lambda_adv, "Adversarial loss weight (lambda1)");
  app->add_option("--lambda_feat", cfg.lambda_feat, "Feature-matching loss weight (lambda2)");
  app->add_option("--k_max", cfg.k_max, "Max-pooling kernel for outline/switching losses");
  app->add_option("--s_max", cfg.s_max, "Max-pooling stride for outline/switching losses");
  app->add_flag("--shuffle,!--no-shuffle", cfg.shuffle, "Shuffle batches per epoch");
  app->add_option("--disc_steps", cfg.disc_steps, "Discriminator updates per batch");
  app->add_option("--gen_steps", cfg.gen_steps, "Generator updates per batch");
  app->add_option("--checkpoint_interval", cfg.checkpoint_interval, "Epochs between checkpoints");
  app->add_option("--seed", cfg.seed, "Master seed");
  app->add_option("--out", cfg.out_dir, "Output directory");
  app->add_option("--rdp_eps_frac", cfg.rdp_eps_frac, "CPE tolerance as fraction of GT range");
  app->add_option("--spectral_bins", cfg.spectral_bins, "Spectral bins for Wasserstein distance");
  app->add_option("--eval_workers", cfg.eval_workers, "Evaluation worker threads (0 = auto)");
}

void write_reports(const std::string& dir, const std::string& stem, const MetricReport& r) {
  std::filesystem::create_directories(dir);
  write_report_csv(dir + "/" + stem + ".csv", r);
  write_report_json(dir + "/" + stem + ".json", r);
  write_report_profiles_csv(dir + "/" + stem + "_profiles.csv", r);
}

int cmd_synth(const RunConfig& cfg, const std::string& hr_out, const std::string& wx_out) {
  CorpusSpec cs;
  cs.days = cfg.synth_days;
  cs.households = cfg.synth_households;
  cs.seed = cfg.seed;
  Corpus c = build_synthetic_corpus(cs);
  save_profiles_csv(hr_out, c.hr);
  if (!wx_out.empty()) save_weather_csv(wx_out, c.weather);
  std::cout << "wrote " << c.hr.size() << " household-days to " << hr_out;
  if (!wx_out.empty()) std::cout << " and " << c.weather.size() << " weather days to " << wx_out;
  std::cout << "\n";
  return 0;
}

int cmd_downsample(const std::string& in, const std::string& out, int alpha, double noise_var,
                   std::uint64_t seed) {
  auto loaded = load_profiles_csv(in);
  std::vector<LoadProfile> lr = make_lr_set(loaded.profiles, alpha, noise_var, seed);
  save_profiles_csv(out, lr);
  std::cout << "wrote " << lr.size() << " LR profiles to " << out << "\n";
  return 0;
}

int cmd_train(RunConfig cfg, const std::string& mode) {
  if (cfg.out_dir.empty()) throw std::runtime_error("train: --out is required");
  TrainingData data = prepare_training_data(cfg);
  const Stage1Mode m = mode == "cnn" ? Stage1Mode::cnn : Stage1Mode::gan;
  Stage1Result r = train_stage1(cfg, data, m);
  std::filesystem::create_directories(cfg.out_dir);
  r.log.write_csv(cfg.out_dir + "/stage1_log.csv");
  const std::string gen_name = m == Stage1Mode::cnn ? "cnn.ckpt" : "generator.ckpt";
  save_checkpoint(cfg.out_dir + "/" + gen_name, r.generator, cfg.alpha, cfg.epochs_gan);
  if (m == Stage1Mode::gan) {
    save_checkpoint(cfg.out_dir + "/discriminator.ckpt", r.discriminator, cfg.alpha,
                    cfg.epochs_gan);
  }
  std::cout << "stage 1 (" << mode << ") done: " << cfg.out_dir << "/" << gen_name << "\n";
  return 0;
}

int cmd_polish(RunConfig cfg, const std::string& generator_ckpt) {
  if (cfg.out_dir.empty()) throw std::runtime_error("polish: --out is required");
  TrainingData data = prepare_training_data(cfg);
  const GeneratorConfig gcfg = generator_config(cfg, data);
  Checkpoint ck = load_checkpoint(generator_ckpt, gcfg.fingerprint());
  if (ck.alpha != cfg.alpha) {
    throw std::runtime_error("polish: checkpoint alpha " + std::to_string(ck.alpha) +
                             " does not match configured alpha " + std::to_string(cfg.alpha));
  }
  Stage2Result r = train_stage2(cfg, data, gcfg, ck.params);
  std::filesystem::create_directories(cfg.out_dir);
  r.log.write_csv(cfg.out_dir + "/stage2_log.csv");
  save_checkpoint(cfg.out_dir + "/polisher.ckpt", r.polisher, cfg.alpha, cfg.epochs_polish);
  std::cout << "stage 2 done: " << cfg.out_dir << "/polisher.ckpt\n";
  return 0;
}

int cmd_eval(RunConfig cfg, const std::string& gan_ckpt, const std::string& cnn_ckpt,
             const std::string& pol_ckpt) {
  if (cfg.out_dir.empty()) throw std::runtime_error("eval: --out is required");
  TrainingData data = prepare_training_data(cfg);
  const GeneratorConfig gcfg = generator_config(cfg, data);
  const PolisherConfig pcfg = polisher_config(cfg);

  EvalMethods methods;
  Checkpoint gan, cnn, pol;
  if (!gan_ckpt.empty()) {
    gan = load_checkpoint(gan_ckpt, gcfg.fingerprint());
    methods.gan_cfg = &gcfg;
    methods.gan = &gan.params;
  }
  if (!cnn_ckpt.empty()) {
    cnn = load_checkpoint(cnn_ckpt, gcfg.fingerprint());
    methods.cnn_cfg = &gcfg;
    methods.cnn = &cnn.params;
  }
  if (!pol_ckpt.empty()) {
    pol = load_checkpoint(pol_ckpt, pcfg.fingerprint());
    methods.pol_cfg = &pcfg;
    methods.polisher = &pol.params;
  }
  MetricReport r = evaluate(cfg, data, methods);
  write_reports(cfg.out_dir, "report", r);
  std::cout << "report written to " << cfg.out_dir << "/report.csv\n";
  for (const auto& method : r.methods) {
    for (const auto& metric : r.metrics) {
      std::cout << "  " << method << " " << metric << " mean " << r.mean.at(method).at(metric)
                << " gain " << r.gain_percent.at(method).at(metric) << "%\n";
    }
  }
  return 0;
}

int cmd_sweep_alpha(RunConfig cfg, std::vector<int> alphas) {
  if (cfg.out_dir.empty()) throw std::runtime_error("sweep-alpha: --out is required");
  auto reports = sweep_alpha(cfg, alphas);
  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream merged(cfg.out_dir + "/sweep_alpha.csv");
  merged << "alpha,method,metric,mean,gain_vs_lerp\n";
  for (const auto& [a, r] : reports) {
    write_reports(cfg.out_dir, "report_alpha" + std::to_string(a), r);
    for (const auto& method : r.methods) {
      for (const auto& metric : r.metrics) {
        merged << a << "," << method << "," << metric << "," << r.mean.at(method).at(metric) << ","
               << r.gain_percent.at(method).at(metric) << "\n";
      }
    }
  }
  std::cout << "sweep written to " << cfg.out_dir << "/sweep_alpha.csv\n";
  return 0;
}

int cmd_ablate_weather(RunConfig cfg) {
  if (cfg.out_dir.empty()) throw std::runtime_error("ablate-weather: --out is required");
  WeatherAblation ab = ablate_weather(cfg);
  write_reports(cfg.out_dir, "report_weather_on", ab.with_weather);
  write_reports(cfg.out_dir, "report_weather_off", ab.without_weather);
  std::ofstream merged(cfg.out_dir + "/ablate_weather.csv");
  merged << "weather,method,metric,mean,gain_vs_lerp\n";
  for (const auto* pr : {&ab.with_weather, &ab.without_weather}) {
    const bool on = pr == &ab.with_weather;
    for (const auto& method : pr->methods) {
      for (const auto& metric : pr->metrics) {
        merged << (on ? "with" : "without") << "," << method << "," << metric << ","
               << pr->mean.at(method).at(metric) << "," << pr->gain_percent.at(method).at(metric)
               << "\n";
      }
    }
  }
  std::cout << "generator parameters: with weather " << ab.param_count_with << ", without "
            << ab.param_count_without << "\n";
  std::cout << "ablation written to " << cfg.out_dir << "/ablate_weather.csv\n";
  return 0;
}

int cmd_export_report(const std::string& report_json, const std::string& out_dir) {
  MetricReport r = load_report_json(report_json);
  write_reports(out_dir, "report", r);
  std::cout << "re-exported " << report_json << " to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Load-profile super-resolution: two-stage GAN pipeline"};
  app.require_subcommand(1);

  RunConfig cfg = RunConfig::desk_defaults();

  auto* synth = app.add_subcommand("synth", "Generate the synthetic HR corpus as CSV");
  std::string synth_hr = "hr.csv", synth_wx = "weather.csv";
  synth->add_option("--out-hr", synth_hr, "Output HR profiles CSV");
  synth->add_option("--out-weather", synth_wx, "Output weather CSV (empty to skip)");
  synth->add_option("--synth_days", cfg.synth_days, "Synthetic corpus: days");
  synth->add_option("--synth_households", cfg.synth_households, "Synthetic corpus: households");
  synth->add_option("--seed", cfg.seed, "Master seed");

  auto* down = app.add_subcommand("downsample", "Block-average an HR CSV into an LR CSV");
  std::string down_in, down_out = "lr.csv";
  down->add_option("--in", down_in, "Input HR profiles CSV")->required();
  down->add_option("--out", down_out, "Output LR profiles CSV");
  down->add_option("--alpha", cfg.alpha, "Scale-up factor");
  down->add_option("--noise_var", cfg.noise_var, "Downsampling noise variance");
  down->add_option("--seed", cfg.seed, "Master seed");

  auto* train = app.add_subcommand("train", "Stage-1 adversarial training (or the CNN control)");
  std::string train_mode = "gan";
  train->add_option("--mode", train_mode, "gan or cnn")
      ->check(CLI::IsMember({"gan", "cnn"}));
  bind_run_config(train, cfg);

  auto* polish = app.add_subcommand("polish", "Stage-2 polishing against a frozen generator");
  std::string pol_gen;
  polish->add_option("--generator", pol_gen, "Stage-1 generator checkpoint")->required();
  bind_run_config(polish, cfg);

  auto* eval = app.add_subcommand("eval", "Evaluate methods on the test split");
  std::string eval_gan, eval_cnn, eval_pol;
  eval->add_option("--generator", eval_gan, "GAN generator checkpoint");
  eval->add_option("--cnn", eval_cnn, "CNN baseline checkpoint");
  eval->add_option("--polisher", eval_pol, "Polisher checkpoint");
  bind_run_config(eval, cfg);

  auto* sweep = app.add_subcommand("sweep-alpha", "Full pipeline per scale-up factor");
  std::vector<int> alphas{3, 6, 12};
  sweep->add_option("--alphas", alphas, "Scale-up factors to sweep");
  bind_run_config(sweep, cfg);

  auto* ablate = app.add_subcommand("ablate-weather", "Paired runs with weather on/off");
  bind_run_config(ablate, cfg);

  auto* exp = app.add_subcommand("export-report", "Re-emit CSV tables from a report JSON");
  std::string exp_json, exp_out = ".";
  exp->add_option("--report", exp_json, "Input report JSON")->required();
  exp->add_option("--out", exp_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(cfg, synth_hr, synth_wx);
    if (down->parsed()) return cmd_downsample(down_in, down_out, cfg.alpha, cfg.noise_var, cfg.seed);
    if (train->parsed()) return cmd_train(cfg, train_mode);
    if (polish->parsed()) return cmd_polish(cfg, pol_gen);
    if (eval->parsed()) return cmd_eval(cfg, eval_gan, eval_cnn, eval_pol);
    if (sweep->parsed()) return cmd_sweep_alpha(cfg, alphas);
    if (ablate->parsed()) return cmd_ablate_weather(cfg);
    if (exp->parsed()) return cmd_export_report(exp_json, exp_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
