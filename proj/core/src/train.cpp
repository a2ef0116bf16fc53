#include "mvbridge/train.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mvbridge/bridge.hpp"
#include "mvbridge/codec.hpp"
#include "mvbridge/rng.hpp"

#include "json.hpp"

namespace mvbridge {

namespace fs = std::filesystem;

TrainBatch sample_batch(const std::vector<ViewSet>& dataset, const TrainConfig& config, std::int64_t step) {
  if (dataset.empty()) throw std::invalid_argument("sample_batch: empty dataset");
  const std::uint64_t step_seed = mix_seed(config.seed, static_cast<std::uint64_t>(step));
  Rng rng(mix_seed(step_seed, 0xba7c4));

  const ViewSet& vs = dataset[rng.next_below(dataset.size())];
  const int patch = config.model.patch;

  TrainBatch batch;
  // Pairs of degraded views, per the training protocol; degenerate sets
  // with a single view fall back to N=1.
  std::size_t first = rng.next_below(vs.views.size());
  std::size_t second = first;
  if (vs.views.size() >= 2) {
    second = rng.next_below(vs.views.size() - 1);
    if (second >= first) second += 1;
  }
  for (std::size_t v : {first, second}) {
    if (!batch.z_d.empty() && v == first) continue;  // N=1 fallback
    batch.z_d.push_back(encode_image(vs.views[v].distorted, patch));
    batch.z_gt.push_back(encode_image(vs.views[v].clean, patch));
  }
  if (config.use_reference && !vs.references.empty()) {
    const std::size_t r = rng.next_below(vs.references.size());
    batch.refs.push_back(encode_image(vs.references[r].clean, patch));
  }
  batch.t = rng.uniform();
  batch.noise_seed = mix_seed(step_seed, 0xe95);
  return batch;
}

Tape::Id training_loss(Tape& tape, const ModelParams& params, const std::vector<Tape::Id>& param_ids,
                       const TrainBatch& batch, const FeatureExtractor& extractor, const TrainConfig& config,
                       StepLosses* components) {
  const BridgeSample bridge = sample_bridge(batch.z_d, batch.z_gt, batch.t, config.sigma, batch.noise_seed);

  std::vector<Tape::Id> z_t_ids, z_d_ids, z_gt_ids, ref_ids;
  for (const Tensor& z : bridge.z_t) z_t_ids.push_back(tape.constant(z));
  for (const Tensor& z : batch.z_d) z_d_ids.push_back(tape.constant(z));
  for (const Tensor& z : batch.z_gt) z_gt_ids.push_back(tape.constant(z));
  for (const Tensor& z : batch.refs) ref_ids.push_back(tape.constant(z));

  const auto velocities = velocity_forward(tape, params, param_ids, z_t_ids, z_d_ids, ref_ids, batch.t);
  const Tape::Id flow = flow_loss(tape, velocities, z_d_ids, z_gt_ids);

  std::vector<Tape::Id> pred_images, target_images;
  for (std::size_t v = 0; v < velocities.size(); ++v) {
    const Tape::Id z_hat = predict_clean(tape, z_t_ids[v], velocities[v], batch.t);
    pred_images.push_back(tape_decode(tape, z_hat, config.model.patch));
    target_images.push_back(tape_decode(tape, z_gt_ids[v], config.model.patch));
  }

  const Tape::Id pixel = pixel_l1(tape, pred_images, target_images);
  const Tape::Id lpips = perceptual_loss(tape, extractor, pred_images, target_images);
  const Tape::Id gram = gram_loss(tape, extractor, pred_images, target_images);

  const Tape::Id total = tape.add(tape.add(flow, pixel),
                                  tape.add(tape.scale(lpips, config.lambda_lpips), tape.scale(gram, config.lambda_gram)));
  if (components) {
    components->flow = tape.value(flow)[0];
    components->pixel = tape.value(pixel)[0];
    components->lpips = tape.value(lpips)[0];
    components->gram = tape.value(gram)[0];
    components->total = tape.value(total)[0];
  }
  return total;
}

void save_checkpoint(const std::string& dir, const Checkpoint& checkpoint) {
  fs::create_directories(dir);
  save_params(dir, checkpoint.params);

  nlohmann::json meta;
  meta["step"] = checkpoint.step;
  meta["adam"] = {{"learning_rate", checkpoint.adam.config.learning_rate},
                  {"beta1", checkpoint.adam.config.beta1},
                  {"beta2", checkpoint.adam.config.beta2},
                  {"epsilon", checkpoint.adam.config.epsilon}};
  std::ofstream os(fs::path(dir) / "optimizer.json");
  os << meta.dump(2) << "\n";

  std::ofstream ms(fs::path(dir) / "moments.bin", std::ios::binary);
  if (!ms) throw std::runtime_error("cannot write moments.bin in " + dir);
  for (const Tensor& t : checkpoint.adam.m) write_tensor(ms, t);
  for (const Tensor& t : checkpoint.adam.v) write_tensor(ms, t);
}

Checkpoint load_checkpoint(const std::string& dir) {
  Checkpoint checkpoint;
  checkpoint.params = load_params(dir);

  std::ifstream is(fs::path(dir) / "optimizer.json");
  if (!is) throw std::runtime_error("cannot open optimizer.json in " + dir);
  nlohmann::json meta = nlohmann::json::parse(is);
  checkpoint.step = meta.at("step").get<std::int64_t>();
  AdamConfig ac;
  ac.learning_rate = meta.at("adam").at("learning_rate").get<double>();
  ac.beta1 = meta.at("adam").at("beta1").get<double>();
  ac.beta2 = meta.at("adam").at("beta2").get<double>();
  ac.epsilon = meta.at("adam").at("epsilon").get<double>();

  checkpoint.adam = AdamState::init(checkpoint.params.tensors, ac);
  checkpoint.adam.step = checkpoint.step;
  std::ifstream ms(fs::path(dir) / "moments.bin", std::ios::binary);
  if (!ms) throw std::runtime_error("cannot open moments.bin in " + dir);
  for (Tensor& t : checkpoint.adam.m) t = read_tensor(ms);
  for (Tensor& t : checkpoint.adam.v) t = read_tensor(ms);
  return checkpoint;
}

TrainResult train(const TrainConfig& config, const std::vector<ViewSet>& dataset,
                  std::optional<Checkpoint> resume_from, const std::string& checkpoint_dir,
                  const StepCallback& callback) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  config.model.validate();

#if defined(__GLIBC__)
  // The tape allocates and frees the same multi-MB activation buffers every
  // step; keep them in the arena instead of bouncing through mmap/munmap.
  mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
#endif

  TrainResult result;
  std::int64_t start_step = 0;
  if (resume_from) {
    result.params = std::move(resume_from->params);
    result.adam = std::move(resume_from->adam);
    start_step = resume_from->step;
  } else {
    result.params = ModelParams::init(config.model, config.seed);
    result.adam = AdamState::init(result.params.tensors, config.adam);
  }

  const FeatureExtractor extractor(config.extractor_seed);

  std::vector<Tape::Id> param_ids;
  for (std::int64_t step = start_step; step < config.steps; ++step) {
    const TrainBatch batch = sample_batch(dataset, config, step);

    Tape tape;
    param_ids.clear();
    for (const Tensor& p : result.params.tensors) param_ids.push_back(tape.leaf(p, true));

    StepLosses losses;
    losses.step = step;
    const Tape::Id total = training_loss(tape, result.params, param_ids, batch, extractor, config, &losses);
    if (!std::isfinite(losses.total)) {
      std::ostringstream os;
      os << "train: non-finite loss at step " << step << " (flow=" << losses.flow << " pixel=" << losses.pixel
         << " lpips=" << losses.lpips << " gram=" << losses.gram << ")";
      throw std::runtime_error(os.str());
    }

    const auto grads = tape.backward(total, param_ids);
    adam_step(result.params.tensors, grads, result.adam);
    result.log.push_back(losses);

    const bool last = step + 1 == config.steps;
    if (!checkpoint_dir.empty() && (last || (config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0)))
      save_checkpoint(checkpoint_dir, {result.params, result.adam, step + 1});

    if (callback && !callback(losses, result.params)) {
      if (!checkpoint_dir.empty()) save_checkpoint(checkpoint_dir, {result.params, result.adam, step + 1});
      break;
    }
  }

  if (start_step >= config.steps && !checkpoint_dir.empty())
    save_checkpoint(checkpoint_dir, {result.params, result.adam, start_step});
  return result;
}

}  // namespace mvbridge
