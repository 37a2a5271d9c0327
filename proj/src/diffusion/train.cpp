#include "blockforge/diffusion/train.hpp"

#include <numeric>
#include <sstream>

#include "blockforge/core/error.hpp"
#include "blockforge/core/json_text.hpp"
#include "blockforge/diffusion/schedule.hpp"
#include "blockforge/diffusion/text.hpp"
#include "blockforge/layout/ops.hpp"
#include "blockforge/layout/tensor.hpp"
#include "blockforge/nn/adam.hpp"

namespace blockforge {

DenoiserConfig TrainConfig::denoiser() const {
  DenoiserConfig c;
  c.max_boxes = max_boxes;
  c.d_model = d_model;
  c.layers = layers;
  c.heads = heads;
  c.ffn_multiplier = ffn_multiplier;
  c.spatial_encoding = spatial_encoding;
  return c;
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["learning_rate"] = learning_rate;
  j["d_model"] = d_model;
  j["layers"] = layers;
  j["heads"] = heads;
  j["ffn_multiplier"] = ffn_multiplier;
  j["max_boxes"] = max_boxes;
  j["diffusion_steps"] = diffusion_steps;
  j["beta_start"] = beta_start;
  j["beta_end"] = beta_end;
  j["padreal"] = padreal;
  j["spatial_encoding"] = spatial_encoding;
  j["iou_loss"] = iou_loss;
  j["grad_clip"] = grad_clip;
  j["max_steps"] = max_steps;
  j["seed"] = seed;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json &doc) {
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "train config must be an object");
  TrainConfig c;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string &k = it.key();
    const auto &v = it.value();
    try {
      if (k == "epochs") c.epochs = v.get<int>();
      else if (k == "batch_size") c.batch_size = v.get<int>();
      else if (k == "learning_rate") c.learning_rate = v.get<double>();
      else if (k == "d_model") c.d_model = v.get<int>();
      else if (k == "layers") c.layers = v.get<int>();
      else if (k == "heads") c.heads = v.get<int>();
      else if (k == "ffn_multiplier") c.ffn_multiplier = v.get<int>();
      else if (k == "max_boxes") c.max_boxes = v.get<int>();
      else if (k == "diffusion_steps") c.diffusion_steps = v.get<int>();
      else if (k == "beta_start") c.beta_start = v.get<double>();
      else if (k == "beta_end") c.beta_end = v.get<double>();
      else if (k == "padreal") c.padreal = v.get<bool>();
      else if (k == "spatial_encoding") c.spatial_encoding = v.get<bool>();
      else if (k == "iou_loss") c.iou_loss = v.get<bool>();
      else if (k == "grad_clip") c.grad_clip = v.get<double>();
      else if (k == "max_steps") c.max_steps = v.get<long long>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else throw Error(ErrorCode::ParseError, "unknown train config key \"" + k + "\"");
    } catch (const nlohmann::json::exception &) {
      throw Error(ErrorCode::ParseError, "train config key \"" + k + "\" has the wrong type");
    }
  }
  return c;
}

TrainConfig TrainConfig::parse(const std::string &text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error &e) {
      throw Error(ErrorCode::ParseError, std::string("train config: ") + e.what());
    }
  }
  nlohmann::json doc = nlohmann::json::object();
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, "train config line " + std::to_string(line_number) +
                                             ": expected key = value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      doc[key] = nlohmann::json::parse(value);
    } catch (const nlohmann::json::parse_error &) {
      throw Error(ErrorCode::ParseError, "train config line " + std::to_string(line_number) +
                                             ": bad value for " + key);
    }
  }
  return from_json(doc);
}

std::string epoch_log_line(const EpochLog &log) {
  nlohmann::ordered_json j;
  j["epoch"] = log.epoch;
  j["noise_term"] = log.noise_term;
  j["iou_term"] = log.iou_term;
  j["total"] = log.total;
  return canonical_dump(j);
}

Matrix make_batch(const std::vector<BoxLayout> &layouts, const TrainConfig &config, Rng &rng) {
  Matrix batch(static_cast<Eigen::Index>(layouts.size()) * config.max_boxes, kLayoutDims);
  for (std::size_t i = 0; i < layouts.size(); ++i) {
    const auto op = augment_op_from_index(static_cast<int>(rng.below(kAugmentOpCount)));
    const BoxLayout padded = pad_layout(augment(layouts[i], op), config.max_boxes, rng,
                                        config.padreal ? PadMode::PadReal : PadMode::Zeros);
    batch.middleRows(static_cast<Eigen::Index>(i) * config.max_boxes, config.max_boxes) =
        encode(padded).values;
  }
  return batch;
}

TrainResult train(const std::vector<BoxLayout> &dataset, const TrainConfig &config,
                  const std::function<void(const EpochLog &)> &on_epoch) {
  if (dataset.empty()) throw Error(ErrorCode::EmptyDataset, "training needs at least one layout");
  if (config.batch_size <= 0 || config.epochs < 0) {
    throw Error(ErrorCode::InvalidArgument, "batch_size must be positive and epochs non-negative");
  }
  const NoiseSchedule sched =
      make_linear_schedule(config.diffusion_steps, config.beta_start, config.beta_end);
  Rng root(config.seed);
  TrainResult result{DenoiserModel(config.denoiser(), root.split(0).next_u64()), {}, {}};
  Rng rng = root.split(1);

  nn::AdamOptions opt;
  opt.learning_rate = config.learning_rate;
  opt.max_grad_norm = config.grad_clip;
  nn::Adam adam(opt);

  std::vector<std::vector<int>> tokens_by_index;
  tokens_by_index.reserve(dataset.size());
  for (const auto &l : dataset) tokens_by_index.push_back(prompt_tokens(l.prompt));

  std::vector<std::size_t> order(dataset.size());
  long long steps = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    EpochLog log;
    log.epoch = epoch;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      if (config.max_steps > 0 && steps >= config.max_steps) break;
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      std::vector<BoxLayout> members;
      std::vector<std::vector<int>> tokens;
      for (std::size_t i = start; i < end; ++i) {
        members.push_back(dataset[order[i]]);
        tokens.push_back(tokens_by_index[order[i]]);
      }
      const Matrix x0 = make_batch(members, config, rng);
      nn::Gradients grads;
      const LossTerms terms = diffusion_loss(result.model, x0, tokens, rng, sched, config.iou_loss, &grads);
      adam.step(result.model.parameters(), grads);
      ++steps;
      ++batches;
      result.step_losses.push_back(terms);
      log.noise_term += terms.noise_term;
      log.iou_term += terms.iou_term;
      log.total += terms.total;
    }
    if (batches == 0) break;
    log.noise_term /= batches;
    log.iou_term /= batches;
    log.total /= batches;
    log.steps = steps;
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

} // namespace blockforge
