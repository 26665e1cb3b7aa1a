// Command-line driver: dataset generation, training, prediction and evaluation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hdrrecon/camera.hpp"
#include "hdrrecon/codec.hpp"
#include "hdrrecon/config.hpp"
#include "hdrrecon/eval.hpp"
#include "hdrrecon/network.hpp"
#include "hdrrecon/reconstruct.hpp"
#include "hdrrecon/synthetic.hpp"
#include "hdrrecon/train.hpp"
#include "hdrrecon/weights.hpp"

namespace fs = std::filesystem;
using namespace hdrrecon;

namespace {

// Flags shared by several subcommands. Unset optionals leave the config file
// (or the built-in default) in charge.
struct Common {
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config_path;
  std::optional<std::string> loss;
  std::optional<double> lambda, tau, gamma, lr;
  std::optional<int> steps, batch, levels;
};

KeyValues load_config(const Common& c) {
  return c.config_path.empty() ? KeyValues{} : KeyValues::load(c.config_path);
}

std::uint64_t resolve_seed(const Common& c, const KeyValues& kv) {
  return c.seed_set ? c.seed : static_cast<std::uint64_t>(kv.get_int_or("seed", 0));
}

LossConfig resolve_loss(const Common& c, const KeyValues& kv) {
  LossConfig cfg = LossConfig::from_key_values(kv);
  if (c.loss) cfg.mode = loss_mode_named(*c.loss);
  if (c.lambda) cfg.lambda = *c.lambda;
  if (c.tau) cfg.tau = *c.tau;
  cfg.validate();
  return cfg;
}

NetworkConfig resolve_network(const Common& c, const KeyValues& kv) {
  NetworkConfig cfg = NetworkConfig::from_key_values(kv);
  if (c.levels && *c.levels != cfg.levels) {
    // Keep the preset's widths for the retained levels; new levels repeat the deepest width.
    cfg.levels = *c.levels;
    if (cfg.levels < 1) throw ConfigError("--levels must be >= 1");
    cfg.channels.resize(static_cast<std::size_t>(cfg.levels), cfg.channels.back());
  }
  cfg.validate();
  return cfg;
}

double resolve_gamma(const Common& c, const KeyValues& kv) {
  const double g = c.gamma ? *c.gamma : kv.get_double_or("gamma", 2.0);
  if (!(g > 0.0)) throw ConfigError("gamma must be positive");
  return g;
}

void add_seed(CLI::App* app, Common& c) {
  app->add_option_function<std::uint64_t>(
         "--seed", [&c](const std::uint64_t& s) { c.seed = s, c.seed_set = true; }, "Random seed")
      ->type_name("UINT");
}
void add_config(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "key = value configuration file")->check(CLI::ExistingFile);
}
void add_loss_flags(CLI::App* app, Common& c) {
  app->add_option("--loss", c.loss, "Loss: direct or ir")->check(CLI::IsMember({"direct", "ir"}));
  app->add_option("--lambda", c.lambda, "Illuminance weight of the I/R loss");
  app->add_option("--tau", c.tau, "Blend threshold");
}

void print_block(const std::string& title, const std::string& text) {
  std::cout << "[" << title << "]\n" << text;
  if (!text.empty() && text.back() != '\n') std::cout << "\n";
}

std::vector<ImageHDR> load_scenes(const std::string& dir, int synthetic, int size, std::uint64_t seed) {
  std::vector<ImageHDR> scenes;
  if (!dir.empty()) {
    for (const auto& p : list_files(dir, {".hdr", ".pfm", ".rgbe", ".pic"})) scenes.push_back(read_hdr(p));
  }
  for (int i = 0; i < synthetic; ++i) scenes.push_back(synthetic_scene(size, size, derive_seed(seed, {0x5c, std::uint64_t(i)})));
  return scenes;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  f << text;
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
}

std::string stem_for(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

// ---- subcommands ----------------------------------------------------------

struct AugmentArgs {
  std::string input, output;
  int synthetic = 0;
  int scene_size = 512;
  std::optional<double> per_megapixel;
  std::optional<int> target;
};

int run_augment(const Common& c, const AugmentArgs& a) {
  const KeyValues kv = load_config(c);
  AugmentConfig cfg;
  cfg.per_megapixel = a.per_megapixel ? *a.per_megapixel : kv.get_double_or("per_megapixel", cfg.per_megapixel);
  cfg.target_size = a.target ? *a.target : static_cast<int>(kv.get_int_or("target_size", cfg.target_size));
  cfg.seed = resolve_seed(c, kv);
  cfg.validate();
  print_block("augment", "seed = " + std::to_string(cfg.seed) + "\nper_megapixel = " + format_double(cfg.per_megapixel) +
                             "\ntarget_size = " + std::to_string(cfg.target_size) + "\ninput = " + a.input +
                             "\nsynthetic = " + std::to_string(a.synthetic) + "\noutput = " + a.output);

  const auto scenes = load_scenes(a.input, a.synthetic, a.scene_size, cfg.seed);
  if (scenes.empty()) throw std::runtime_error("no HDR scenes to augment");
  fs::create_directories(a.output);
  std::size_t written = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    Rng crop_rng(derive_seed(cfg.seed, {s}));
    const auto crops = sample_crops(scenes[s].width(), scenes[s].height(), cfg, crop_rng);
    const auto pairs = augment_scene(scenes[s], cfg, s);
    for (std::size_t k = 0; k < pairs.size(); ++k) save_pair(pairs[k], a.output, stem_for(written++), &crops[k]);
  }
  std::cout << "wrote " << written << " pairs from " << scenes.size() << " scenes\n";
  return 0;
}

struct SimulateArgs {
  std::string input, output;
  double xi = kDefaultSaturationThreshold;
  double scale = 1.0;
};

int run_simulate(const Common& c, const SimulateArgs& a) {
  const KeyValues kv = load_config(c);
  const std::uint64_t seed = resolve_seed(c, kv);
  print_block("simulate-hdr", "seed = " + std::to_string(seed) + "\nxi = " + format_double(a.xi) +
                                  "\nscale = " + format_double(a.scale) + "\ninput = " + a.input +
                                  "\noutput = " + a.output);
  const auto files = list_files(a.input, {".png"});
  if (files.empty()) throw std::runtime_error("no PNG images in '" + a.input + "'");
  fs::create_directories(a.output);
  AugmentConfig cam_cfg;
  std::size_t kept = 0, rejected = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const ImageLDR img = read_ldr(files[i]);
    if (!filter_unsaturated(img, a.xi)) {
      ++rejected;
      continue;
    }
    Rng rng(derive_seed(seed, {i}));
    const CameraParams cam = sample_camera(cam_cfg, rng);
    write_hdr(simulate_hdr(img, a.scale, cam.n, cam.sigma), fs::path(a.output) / (files[i].stem().string() + ".pfm"));
    write_text(fs::path(a.output) / (files[i].stem().string() + ".meta"), format_camera_meta(cam));
    ++kept;
  }
  std::cout << "kept " << kept << ", rejected " << rejected << " saturated images\n";
  return 0;
}

struct TrainArgs {
  std::string data, weights, init_weights, trace = "loss_trace.txt";
  bool no_skip = false;
  int log_every = 50;
};

int run_train(const Common& c, const TrainArgs& a) {
  const KeyValues kv = load_config(c);
  TrainConfig tc = TrainConfig::from_key_values(kv);
  tc.loss = resolve_loss(c, kv);
  tc.seed = resolve_seed(c, kv);
  if (c.steps) tc.steps = *c.steps;
  if (c.batch) tc.batch = *c.batch;
  if (c.lr) tc.adam.learning_rate = *c.lr;
  tc.validate();
  NetworkConfig nc = resolve_network(c, kv);
  if (a.no_skip) nc.skip_connections = false;

  print_block("network", nc.to_text());
  print_block("train", tc.to_text() + "data = " + a.data + "\nweights = " + a.weights + "\ntrace = " + a.trace);

  const auto pairs = load_pairs(a.data);
  if (pairs.empty()) throw std::runtime_error("no training pairs in '" + a.data + "'");
  Network<float> net = a.init_weights.empty() ? Network<float>(nc, tc.seed) : load_weights(a.init_weights, nc);
  const auto trace = train(net, pairs, tc, [&](int step, double loss) {
    if (a.log_every > 0 && (step % a.log_every == 0 || step == tc.steps))
      std::cout << "step " << step << " loss " << format_double(loss) << "\n";
  });

  std::string lines;
  for (double v : trace) lines += format_double(v) + "\n";
  write_text(a.trace, lines);
  if (!a.weights.empty()) save_weights(net, a.weights);
  std::cout << "trained " << trace.size() << " steps on " << pairs.size() << " pairs\n";
  return 0;
}

struct PredictArgs {
  std::string weights, input, output, residual_output, log_output;
};

int run_predict(const Common& c, const PredictArgs& a) {
  const KeyValues kv = load_config(c);
  ReconstructionConfig rc;
  rc.tau = c.tau ? *c.tau : kv.get_double_or("tau", rc.tau);
  rc.gamma = resolve_gamma(c, kv);
  rc.validate();
  const Network<float> net = load_weights(a.weights);
  print_block("network", net.config().to_text());
  print_block("predict", "tau = " + format_double(rc.tau) + "\ngamma = " + format_double(rc.gamma) +
                             "\nweights = " + a.weights + "\ninput = " + a.input + "\noutput = " + a.output);

  const ImageLDR img = read_ldr(a.input);
  const ImageHDR out = predict(net, img, rc);
  write_hdr(out, a.output);
  if (!a.residual_output.empty()) write_hdr(residual(out), a.residual_output);
  std::cout << "wrote " << a.output << " (" << out.width() << "x" << out.height() << ")\n";
  return 0;
}

struct EvalArgs {
  std::string data, report, tsv;
  std::vector<std::string> weights;
  bool include_ground_truth = false;
};

std::vector<Network<float>> load_models(const std::vector<std::string>& paths) {
  std::vector<Network<float>> nets;
  nets.reserve(paths.size());
  for (const auto& p : paths) nets.push_back(load_weights(p));
  return nets;
}

EvalConfig resolve_eval(const Common& c, const KeyValues& kv) {
  EvalConfig ec;
  ec.loss = resolve_loss(c, kv);
  ec.gamma = resolve_gamma(c, kv);
  ec.validate();
  return ec;
}

int run_eval(const Common& c, const EvalArgs& a) {
  const KeyValues kv = load_config(c);
  const EvalConfig ec = resolve_eval(c, kv);
  print_block("eval", ec.loss.to_text() + "gamma = " + format_double(ec.gamma) + "\ndata = " + a.data);

  const auto pairs = load_pairs(a.data);
  if (pairs.empty()) throw std::runtime_error("no test pairs in '" + a.data + "'");
  const auto nets = load_models(a.weights);
  std::vector<Method> methods = {Method::reference()};
  for (std::size_t i = 0; i < nets.size(); ++i) methods.push_back(Method::model(fs::path(a.weights[i]).stem().string(), nets[i]));
  if (a.include_ground_truth) methods.push_back(Method::ground_truth());

  const auto report = mse_table(methods, pairs, ec);
  std::cout << report.to_text() << report.to_records();
  if (!a.report.empty()) write_text(a.report, report.to_text());
  if (!a.tsv.empty()) write_text(a.tsv, report.to_tsv());
  return 0;
}

struct SweepArgs {
  std::string weights, scenes, tsv;
  int synthetic = 0;
  int size = 256;
  std::string fractions = "0.04,0.06,0.08,0.1";
};

int run_sweep(const Common& c, const SweepArgs& a) {
  const KeyValues kv = load_config(c);
  const EvalConfig ec = resolve_eval(c, kv);
  const std::uint64_t seed = resolve_seed(c, kv);
  const auto fractions = parse_double_list(a.fractions, "--fractions");
  print_block("sweep", ec.loss.to_text() + "gamma = " + format_double(ec.gamma) + "\nseed = " + std::to_string(seed) +
                           "\nfractions = " + a.fractions + "\nweights = " + (a.weights.empty() ? "(reference)" : a.weights));

  const auto scenes = load_scenes(a.scenes, a.synthetic, a.size, seed);
  if (scenes.empty()) throw std::runtime_error("no scenes to sweep");
  std::optional<Network<float>> net;
  if (!a.weights.empty()) net.emplace(load_weights(a.weights));
  const Method method = net ? Method::model(fs::path(a.weights).stem().string(), *net) : Method::reference();
  const auto report = exposure_sweep(method, scenes, fractions, ec);
  std::cout << report.to_text() << report.to_records();
  if (!a.tsv.empty()) write_text(a.tsv, report.to_tsv());
  return 0;
}

struct StatsArgs {
  std::string data, kind = "ldr";
};

int run_stats(const StatsArgs& a) {
  print_block("stats", "kind = " + a.kind + "\ndata = " + a.data);
  if (!fs::is_directory(a.data)) throw std::runtime_error("'" + a.data + "' is not a directory");
  const auto st = dataset_stats(a.data, a.kind == "hdr" ? DatasetKind::hdr : DatasetKind::ldr);
  if (st.image_count == 0) throw std::runtime_error("no readable images in '" + a.data + "'");
  if (st.skipped) std::cerr << "warning: skipped " << st.skipped << " unreadable files\n";
  std::cout << st.to_text() << st.to_records();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-exposure HDR reconstruction"};
  app.require_subcommand(1);
  Common common;
  int status = 0;

  AugmentArgs aug;
  auto* augment = app.add_subcommand("augment", "Generate (LDR, HDR) training pairs from HDR scenes");
  add_seed(augment, common);
  add_config(augment, common);
  augment->add_option("--input", aug.input, "Directory of .hdr/.pfm scenes")->check(CLI::ExistingDirectory);
  augment->add_option("--synthetic", aug.synthetic, "Number of procedural scenes to add");
  augment->add_option("--scene-size", aug.scene_size, "Side of procedural scenes");
  augment->add_option("--per-megapixel", aug.per_megapixel, "Crops per megapixel");
  augment->add_option("--target", aug.target, "Output side in pixels");
  augment->add_option("--output", aug.output, "Output directory")->required();
  augment->callback([&] { status = run_augment(common, aug); });

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate-hdr", "Turn unsaturated LDR images into simulated HDR scenes");
  add_seed(simulate, common);
  add_config(simulate, common);
  simulate->add_option("--input", sim.input, "Directory of PNG images")->required()->check(CLI::ExistingDirectory);
  simulate->add_option("--output", sim.output, "Output directory")->required();
  simulate->add_option("--xi", sim.xi, "Maximum fraction of saturated pixels");
  simulate->add_option("--scale", sim.scale, "Exposure scale s");
  simulate->callback([&] { status = run_simulate(common, sim); });

  TrainArgs tr;
  auto* trainer = app.add_subcommand("train", "Train a network on a pair directory");
  add_seed(trainer, common);
  add_config(trainer, common);
  add_loss_flags(trainer, common);
  trainer->add_option("--data", tr.data, "Pair directory")->required()->check(CLI::ExistingDirectory);
  trainer->add_option("--steps", common.steps, "Training steps");
  trainer->add_option("--batch", common.batch, "Mini-batch size");
  trainer->add_option("--lr", common.lr, "ADAM learning rate");
  trainer->add_option("--levels", common.levels, "Autoencoder levels");
  trainer->add_flag("--no-skip", tr.no_skip, "Remove the skip connections");
  trainer->add_option("--weights", tr.weights, "Output weight file");
  trainer->add_option("--init-weights", tr.init_weights, "Start from these weights")->check(CLI::ExistingFile);
  trainer->add_option("--trace", tr.trace, "Loss trace output, one value per step");
  trainer->add_option("--log-every", tr.log_every, "Print the loss every N steps (0 = never)");
  trainer->callback([&] { status = run_train(common, tr); });

  PredictArgs pr;
  auto* predictor = app.add_subcommand("predict", "Reconstruct an HDR image from one LDR exposure");
  add_config(predictor, common);
  predictor->add_option("--weights", pr.weights, "Weight file")->required()->check(CLI::ExistingFile);
  predictor->add_option("--input", pr.input, "LDR PNG")->required()->check(CLI::ExistingFile);
  predictor->add_option("--output", pr.output, "HDR output (.hdr or .pfm)")->required();
  predictor->add_option("--residual", pr.residual_output, "Also write max(0, H - 1)");
  predictor->add_option("--tau", common.tau, "Blend threshold");
  predictor->add_option("--gamma", common.gamma, "Display gamma of the input");
  predictor->callback([&] { status = run_predict(common, pr); });

  EvalArgs ev;
  auto* evaluator = app.add_subcommand("eval", "MSE table over a test pair directory");
  add_config(evaluator, common);
  add_loss_flags(evaluator, common);
  evaluator->add_option("--data", ev.data, "Test pair directory")->required();
  evaluator->add_option("--weights", ev.weights, "Weight files to compare with the reference");
  evaluator->add_option("--gamma", common.gamma, "Display gamma of the input");
  evaluator->add_flag("--ground-truth", ev.include_ground_truth, "Add the ground-truth row");
  evaluator->add_option("--report", ev.report, "Text report output");
  evaluator->add_option("--tsv", ev.tsv, "TSV output");
  evaluator->callback([&] { status = run_eval(common, ev); });

  SweepArgs sw;
  auto* sweeper = app.add_subcommand("sweep", "Errors over a range of clipped fractions");
  add_seed(sweeper, common);
  add_config(sweeper, common);
  add_loss_flags(sweeper, common);
  sweeper->add_option("--weights", sw.weights, "Weight file (default: reference method)")->check(CLI::ExistingFile);
  sweeper->add_option("--scenes", sw.scenes, "Directory of HDR scenes")->check(CLI::ExistingDirectory);
  sweeper->add_option("--synthetic", sw.synthetic, "Number of procedural scenes to add");
  sweeper->add_option("--size", sw.size, "Side of procedural scenes");
  sweeper->add_option("--fractions", sw.fractions, "Comma-separated clipped fractions, increasing");
  sweeper->add_option("--gamma", common.gamma, "Display gamma of the input");
  sweeper->add_option("--tsv", sw.tsv, "TSV output");
  sweeper->callback([&] { status = run_sweep(common, sw); });

  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "Histogram statistics of an image directory");
  stats->add_option("--data", st.data, "Image directory")->required();
  stats->add_option("--kind", st.kind, "ldr or hdr")->check(CLI::IsMember({"ldr", "hdr"}));
  stats->callback([&] { status = run_stats(st); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
