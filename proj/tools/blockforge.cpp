#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "blockforge/core/error.hpp"
#include "blockforge/core/rng.hpp"
#include "blockforge/diffusion/checkpoint.hpp"
#include "blockforge/diffusion/sample.hpp"
#include "blockforge/diffusion/train.hpp"
#include "blockforge/eval/metrics.hpp"
#include "blockforge/eval/raster.hpp"
#include "blockforge/layout/jsonl.hpp"
#include "blockforge/rules/oracle.hpp"
#include "blockforge/service/pipeline.hpp"
#include "blockforge/service/server.hpp"
#include "blockforge/synth/synth.hpp"

using namespace blockforge;

namespace {

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string &path, const std::string &bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << bytes;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

int default_port() {
  if (const char *env = std::getenv("BLOCKFORGE_PORT")) {
    try {
      return std::stoi(env);
    } catch (const std::exception &) {
      throw Error(ErrorCode::InvalidArgument, std::string("BLOCKFORGE_PORT is not a port number: ") + env);
    }
  }
  return 8080;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"BlockForge: text-to-building layout generation and procedural construction"};
  app.require_subcommand(1);

  // synth
  SynthConfig synth_cfg;
  std::string synth_out;
  auto *synth = app.add_subcommand("synth", "Generate a synthetic layout dataset (JSONL)");
  synth->add_option("--n", synth_cfg.count, "Number of buildings")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_cfg.seed, "Random seed");
  synth->add_option("--max-boxes", synth_cfg.max_boxes, "Box budget per building")->check(CLI::PositiveNumber);
  synth->add_option("-o,--out", synth_out, "Output JSONL path")->required();

  // train
  std::string train_data, train_config, train_out, train_log;
  bool no_padreal = false, no_spatial = false, no_iou = false;
  long long train_max_steps = -1;
  long long train_seed = -1;
  auto *train_cmd = app.add_subcommand("train", "Train the layout denoiser");
  train_cmd->add_option("--data", train_data, "Training JSONL")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--config", train_config, "Config file (JSON or key = value lines)")->check(CLI::ExistingFile);
  train_cmd->add_option("-o,--out", train_out, "Checkpoint path")->required();
  train_cmd->add_flag("--no-padreal", no_padreal, "Pad with zero boxes instead of copies of real boxes");
  train_cmd->add_flag("--no-spatial-encoding", no_spatial, "Disable the spatial encoding of box centers");
  train_cmd->add_flag("--no-iou-loss", no_iou, "Disable the IoU overlap penalty");
  train_cmd->add_option("--max-steps", train_max_steps, "Override max_steps")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seed", train_seed, "Override seed")->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--log", train_log, "Write per-epoch JSON lines here");

  // sample
  std::string sample_model, sample_prompt, sample_out;
  int sample_n = 1, sample_steps = 0;
  std::uint64_t sample_seed = 0;
  auto *sample_cmd = app.add_subcommand("sample", "Sample layouts from a trained checkpoint");
  sample_cmd->add_option("--model", sample_model, "Checkpoint path")->required()->check(CLI::ExistingFile);
  sample_cmd->add_option("--prompt", sample_prompt, "Text prompt")->required();
  sample_cmd->add_option("--n", sample_n, "Number of layouts")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--seed", sample_seed, "Random seed");
  sample_cmd->add_option("--steps", sample_steps, "Respaced sampling steps (0 = full schedule)")
      ->check(CLI::NonNegativeNumber);
  sample_cmd->add_option("-o,--out", sample_out, "Output JSONL path")->required();

  // expand
  std::string expand_layout_path, expand_prompt, expand_oracle, expand_out;
  std::size_t expand_index = 0;
  double expand_scale = kDefaultWorldScale;
  auto *expand_cmd = app.add_subcommand("expand", "Expand a box layout into a rule layout");
  expand_cmd->add_option("--layout", expand_layout_path, "Layout JSONL")->required()->check(CLI::ExistingFile);
  expand_cmd->add_option("--index", expand_index, "Record to expand (0-based)");
  expand_cmd->add_option("--prompt", expand_prompt, "Prompt for style resolution (default: the layout's prompt)");
  expand_cmd->add_option("--oracle-url", expand_oracle, "Style oracle base URL (default: BLOCKFORGE_STYLE_ORACLE_URL)");
  expand_cmd->add_option("--world-scale", expand_scale, "Meters per normalized unit")->check(CLI::PositiveNumber);
  expand_cmd->add_option("-o,--out", expand_out, "Output rule JSON path")->required();

  // build
  std::string build_rule, build_obj, build_manifest;
  double build_align = -1.0;
  auto *build_cmd = app.add_subcommand("build", "Construct the building mesh from a rule layout");
  build_cmd->add_option("--rule", build_rule, "Rule layout JSON")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("-o,--obj", build_obj, "Output OBJ path")->required();
  build_cmd->add_option("--manifest", build_manifest, "Output manifest JSON path");
  build_cmd->add_option("--align", build_align, "Align siblings with this tolerance fraction of building height")
      ->check(CLI::NonNegativeNumber);

  // eval
  std::string eval_gen, eval_ref, eval_out, eval_png;
  std::uint64_t eval_seed = 0;
  auto *eval_cmd = app.add_subcommand("eval", "Surrogate metrics of generated vs reference layouts");
  eval_cmd->add_option("--gen", eval_gen, "Generated layouts JSONL")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--ref", eval_ref, "Reference layouts JSONL")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--seed", eval_seed, "Subsampling seed");
  eval_cmd->add_option("-o,--out", eval_out, "Report JSON path")->required();
  eval_cmd->add_option("--png-dir", eval_png, "Also dump the generated layouts' rasters as PNG here");

  // serve
  std::string serve_model, serve_ui, serve_host = "0.0.0.0";
  bool serve_no_model = false;
  int serve_port = -1, serve_steps = 100;
  auto *serve_cmd = app.add_subcommand("serve", "Run the HTTP API and editor host");
  serve_cmd->add_option("--port", serve_port, "Port (default: BLOCKFORGE_PORT or 8080)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--host", serve_host, "Bind address");
  auto *model_opt = serve_cmd->add_option("--model", serve_model, "Checkpoint path")->check(CLI::ExistingFile);
  serve_cmd->add_flag("--no-model", serve_no_model, "PCG-only mode without sampling")->excludes(model_opt);
  serve_cmd->add_option("--ui-dir", serve_ui, "Directory with the editor bundle served at /");
  serve_cmd->add_option("--steps", serve_steps, "Respaced sampling steps")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      write_synth_dataset(synth_cfg, synth_out);
    } else if (*train_cmd) {
      TrainConfig cfg = train_config.empty() ? TrainConfig{} : TrainConfig::parse(read_file(train_config));
      if (no_padreal) cfg.padreal = false;
      if (no_spatial) cfg.spatial_encoding = false;
      if (no_iou) cfg.iou_loss = false;
      if (train_max_steps >= 0) cfg.max_steps = train_max_steps;
      if (train_seed >= 0) cfg.seed = static_cast<std::uint64_t>(train_seed);
      const auto data = load_jsonl(train_data);
      std::ofstream log;
      if (!train_log.empty()) {
        log.open(train_log);
        if (!log) throw Error(ErrorCode::IoError, "cannot write " + train_log);
      }
      auto result = train(data, cfg, [&](const EpochLog &e) {
        const std::string line = epoch_log_line(e);
        std::cerr << line << "\n";
        if (log) log << line << "\n";
      });
      save_checkpoint(train_out, result.model, cfg);
    } else if (*sample_cmd) {
      auto ck = load_checkpoint(sample_model);
      const auto sched = make_linear_schedule(ck.config.diffusion_steps, ck.config.beta_start, ck.config.beta_end);
      Rng rng(sample_seed);
      const auto layouts = sample(ck.model, sched, sample_prompt, sample_n, rng, sample_steps);
      save_jsonl(layouts, sample_out);
    } else if (*expand_cmd) {
      const auto layouts = load_jsonl(expand_layout_path);
      if (expand_index >= layouts.size()) {
        throw Error(ErrorCode::InvalidArgument, "--index " + std::to_string(expand_index) + " but the file has " +
                                                    std::to_string(layouts.size()) + " records");
      }
      auto oracle = make_style_oracle(expand_oracle);
      auto ex = expand_layout(layouts[expand_index], expand_prompt, *oracle, expand_scale);
      for (const auto &w : ex.warnings) std::cerr << "warning: " << w << "\n";
      auto v = validate_rule_layout(serialize_rule_layout(ex.rules));
      if (!v.ok()) {
        for (const auto &e : v.errors) std::cerr << "error: " << e << "\n";
        throw Error(ErrorCode::InvalidArgument, "expanded rule layout failed validation");
      }
      write_file(expand_out, serialize_rule_layout(ex.rules) + "\n");
    } else if (*build_cmd) {
      auto v = validate_rule_layout(read_file(build_rule));
      if (!v.ok()) {
        for (const auto &e : v.errors) std::cerr << "error: " << build_rule << ": " << e << "\n";
        return 2;
      }
      std::optional<double> align;
      if (build_align >= 0.0) align = build_align;
      auto b = build_rules(*v.rules, align);
      for (const auto &w : b.warnings) std::cerr << "warning: " << w << "\n";
      write_file(build_obj, b.obj);
      if (!build_manifest.empty()) write_file(build_manifest, b.manifest.dump() + "\n");
    } else if (*eval_cmd) {
      const auto gen = load_jsonl(eval_gen);
      const auto ref = load_jsonl(eval_ref);
      const auto report = eval_report(gen, ref, eval_seed);
      write_file(eval_out, report.to_json().dump() + "\n");
      if (!eval_png.empty()) {
        std::filesystem::create_directories(eval_png);
        for (std::size_t i = 0; i < gen.size(); ++i) {
          const std::string name = gen[i].id.empty() ? "layout_" + std::to_string(i) : gen[i].id;
          write_png(rasterize_layout(gen[i]), std::filesystem::path(eval_png) / (name + ".png"));
        }
      }
    } else if (*serve_cmd) {
      if (serve_model.empty() && !serve_no_model) {
        throw Error(ErrorCode::InvalidArgument, "serve needs --model or --no-model");
      }
      ServiceOptions opts;
      if (!serve_model.empty()) opts.model_path = serve_model;
      opts.ui_dir = serve_ui;
      opts.sampling_steps = serve_steps;
      BlockForgeService service(opts);
      const int port = service.bind(serve_host, serve_port >= 0 ? serve_port : default_port());
      std::cerr << "listening on " << serve_host << ":" << port << "\n";
      if (!service.listen_after_bind()) throw Error(ErrorCode::IoError, "server stopped unexpectedly");
    }
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
