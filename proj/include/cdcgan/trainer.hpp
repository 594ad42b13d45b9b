#ifndef CDCGAN_TRAINER_HPP
#define CDCGAN_TRAINER_HPP

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdcgan/adam.hpp"
#include "cdcgan/checkpoint.hpp"
#include "cdcgan/dataset.hpp"
#include "cdcgan/losses.hpp"
#include "cdcgan/network.hpp"

namespace cdcgan {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A loss term became NaN or infinite; names the term.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::string term, double value)
      : std::runtime_error("training diverged: " + term + " = " + std::to_string(value)),
        term_(std::move(term)) {}
  [[nodiscard]] const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

struct TrainConfig {
  std::size_t scale = 4;
  double alpha = 0.002;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::size_t patch_size = 32;
  std::size_t patches_per_epoch = 100000;
  std::uint64_t seed = 0;
  std::string checkpoint_dir = "checkpoints";
  std::string log_path = "train_log.csv";
  bool adversarial_enabled = true;

  [[nodiscard]] AdamConfig adam() const { return {lr, beta1, beta2, 1e-8}; }

  void validate() const {
    if (scale != 2 && scale != 4) throw ConfigError("scale must be 2 or 4");
    if (!(alpha >= 0) || !std::isfinite(alpha)) throw ConfigError("alpha must be >= 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    // Two stride-2 layers then a 5x5 valid layer in the discriminator.
    if (patch_size < 17) throw ConfigError("patch_size must be >= 17");
    if (patches_per_epoch < batch_size) {
      throw ConfigError("patches_per_epoch must be >= batch_size");
    }
    try {
      adam().validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"scale", c.scale},
                     {"alpha", c.alpha},
                     {"lr", c.lr},
                     {"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"patch_size", c.patch_size},
                     {"patches_per_epoch", c.patches_per_epoch},
                     {"seed", c.seed},
                     {"checkpoint_dir", c.checkpoint_dir},
                     {"log_path", c.log_path},
                     {"adversarial_enabled", c.adversarial_enabled}};
}

/// Missing keys keep their defaults; unknown keys and wrong types are rejected.
inline TrainConfig parse_train_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  TrainConfig c;
  const nlohmann::json defaults = c;
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("unknown config field \"" + key + "\"");
  }
  auto read = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    using T = std::decay_t<decltype(field)>;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || v.template get<long long>() < 0) throw ConfigError("");
      } else {
        if (!v.is_number()) throw ConfigError("");
      }
      field = v.template get<T>();
    } catch (const std::exception&) {
      throw ConfigError(std::string("config field \"") + key + "\" has the wrong type or value");
    }
  };
  read("scale", c.scale);
  read("alpha", c.alpha);
  read("lr", c.lr);
  read("beta1", c.beta1);
  read("beta2", c.beta2);
  read("epochs", c.epochs);
  read("batch_size", c.batch_size);
  read("patch_size", c.patch_size);
  read("patches_per_epoch", c.patches_per_epoch);
  read("seed", c.seed);
  read("checkpoint_dir", c.checkpoint_dir);
  read("log_path", c.log_path);
  read("adversarial_enabled", c.adversarial_enabled);
  c.validate();
  return c;
}

inline TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open config");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_train_config(j);
}

struct TrainLogRecord {
  std::uint64_t step = 0;
  std::uint64_t epoch = 0;
  LossBreakdown losses;
  double d_real = 0.5;  ///< mean D(real) before the discriminator update
  double d_fake = 0.5;  ///< mean D(fake) before the discriminator update
  double seconds = 0.0;
};

inline constexpr const char* kLogHeader =
    "step,epoch,data,tv,gd,adv_g,adv_d,total_g,d_real,d_fake,seconds";

inline std::string to_csv_row(const TrainLogRecord& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%llu,%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.6f",
                static_cast<unsigned long long>(r.step), static_cast<unsigned long long>(r.epoch),
                r.losses.data, r.losses.tv, r.losses.gd, r.losses.adv_g, r.losses.adv_d,
                r.losses.total_g, r.d_real, r.d_fake, r.seconds);
  return buf;
}

namespace detail {
inline void require_finite(const char* term, double v) {
  if (!std::isfinite(v)) throw TrainingDiverged(term, v);
}
inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}
inline void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}
}  // namespace detail

/// One alternating update: the discriminator first (on real and fake colour
/// reconstructions), then the generator on the weighted objective with the
/// freshly updated discriminator held fixed. With adversarial training off
/// the discriminator is only evaluated for logging.
inline TrainLogRecord train_step(Generator& gen, Discriminator& disc, AdamState& adam_g,
                                 AdamState& adam_d, const PatchBatch& batch,
                                 const TrainConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const std::uint64_t g_before = adam_g.step, d_before = adam_d.step;
  TrainLogRecord rec;

  GeneratorTape gtape;
  const GeneratorOutput out = generator_forward(gen, batch.c_up, batch.d_up, &gtape);
  const Tensor real = concat_channels({&batch.c_g, &batch.cb, &batch.cr});
  const Tensor fake = concat_channels({&out.x, &batch.cb, &batch.cr});

  DiscriminatorTape real_tape, fake_tape;
  const Tensor real_map = discriminator_forward(disc, real, &real_tape);
  const Tensor fake_map = discriminator_forward(disc, fake, &fake_tape);
  const std::vector<double> p_real = map_means(real_map);
  const std::vector<double> p_fake = map_means(fake_map);
  rec.d_real = detail::mean(p_real);
  rec.d_fake = detail::mean(p_fake);

  Tensor grad_x(out.x.shape());
  if (config.adversarial_enabled) {
    const AdversarialLoss adv = adversarial_losses(p_real, p_fake);
    rec.losses.adv_d = adv.adv_d;
    detail::require_finite("adv_d", adv.adv_d);
    auto d_grads =
        discriminator_backward(disc, real_tape,
                               map_means_backward(real_map.shape(), adv.d_adv_d_d_real), false)
            .params;
    const auto fake_grads =
        discriminator_backward(disc, fake_tape,
                               map_means_backward(fake_map.shape(), adv.d_adv_d_d_fake), false)
            .params;
    for (std::size_t l = 0; l < d_grads.size(); ++l) {
      detail::add_into(d_grads[l].kernel, fake_grads[l].kernel);
      for (std::size_t i = 0; i < d_grads[l].bias.size(); ++i) d_grads[l].bias[i] += fake_grads[l].bias[i];
    }
    adam_step(adam_d, disc, d_grads);
    if (adam_d.step != d_before + 1 || adam_g.step != g_before) {
      throw std::logic_error("train_step: discriminator update out of order");
    }

    DiscriminatorTape frozen_tape;
    const Tensor frozen_map = discriminator_forward(disc, fake, &frozen_tape);
    const std::vector<double> p_fake_after = map_means(frozen_map);
    const AdversarialLoss adv_g = adversarial_losses(p_real, p_fake_after);
    rec.losses.adv_g = adv_g.adv_g;
    detail::require_finite("adv_g", adv_g.adv_g);
    std::vector<double> scaled(adv_g.d_adv_g_d_fake);
    for (double& g : scaled) g *= config.alpha;
    const Tensor d_image =
        discriminator_backward(disc, frozen_tape, map_means_backward(frozen_map.shape(), scaled))
            .input;
    grad_x = slice_channels(d_image, 0, 1);
  }

  const PairLoss data = data_loss(out.x, out.y, batch.c_g, batch.d_g);
  const PairLoss tv = tv_loss(out.x, out.y);
  const PairLoss gd = gd_loss(out.x, out.y, batch.c_g, batch.d_g);
  rec.losses.data = data.value;
  rec.losses.tv = tv.value;
  rec.losses.gd = gd.value;
  detail::require_finite("data", data.value);
  detail::require_finite("tv", tv.value);
  detail::require_finite("gd", gd.value);
  const double alpha = config.adversarial_enabled ? config.alpha : 0.0;
  rec.losses.total_g = total_generator_objective(alpha, rec.losses);
  detail::require_finite("total_g", rec.losses.total_g);

  Tensor grad_y(out.y.shape());
  for (const PairLoss* term : {&data, &tv, &gd}) {
    detail::add_into(grad_x, term->grad_x);
    detail::add_into(grad_y, term->grad_y);
  }
  const auto g_grads = generator_backward(gen, gtape, grad_x, grad_y);
  adam_step(adam_g, gen, g_grads);
  if (adam_g.step != g_before + 1) throw std::logic_error("train_step: generator update out of order");

  rec.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

/// Owns the networks, optimizers and the seeded patch pool of one run.
///
/// The pool is drawn once from the seed; every epoch visits it in an order
/// shuffled by (seed, epoch), so a run resumed from any checkpoint replays the
/// same batches as an uninterrupted one.
class Trainer {
 public:
  Trainer(TrainConfig config, std::vector<SamplePlanes> samples)
      : config_(std::move(config)), samples_(std::move(samples)) {
    config_.validate();
    gen_ = build_generator(config_.seed);
    disc_ = build_discriminator(config_.seed + 1);
    adam_g_ = adam_init(gen_, config_.adam());
    adam_d_ = adam_init(disc_, config_.adam());
    pool_ = sample_patches(samples_, config_.patches_per_epoch, config_.patch_size, config_.seed);
  }

  Trainer(TrainConfig config, std::vector<SamplePlanes> samples, const Checkpoint& ck)
      : Trainer(std::move(config), std::move(samples)) {
    if (ck.scale != config_.scale) {
      throw ConfigError("checkpoint was trained at scale " + std::to_string(ck.scale) +
                        ", config asks for " + std::to_string(config_.scale));
    }
    gen_ = ck.gen;
    disc_ = ck.disc;
    if (ck.adam_g) adam_g_ = *ck.adam_g;
    if (ck.adam_d) adam_d_ = *ck.adam_d;
    progress_ = ck.progress;
  }

  [[nodiscard]] std::size_t steps_per_epoch() const { return pool_.size() / config_.batch_size; }
  [[nodiscard]] bool finished() const { return progress_.epoch >= config_.epochs; }

  PatchBatch next_batch() const {
    const auto order = epoch_order(progress_.epoch);
    const std::size_t first = progress_.step_in_epoch * config_.batch_size;
    std::vector<PatchLocation> locs;
    for (std::size_t i = 0; i < config_.batch_size; ++i) locs.push_back(pool_[order[first + i]]);
    return extract_batch(samples_, locs, config_.patch_size);
  }

  /// Runs one alternating update and advances the epoch/step counters.
  TrainLogRecord step() {
    if (finished()) throw std::logic_error("Trainer::step: all epochs completed");
    TrainLogRecord rec = train_step(gen_, disc_, adam_g_, adam_d_, next_batch(), config_);
    rec.step = progress_.global_step;
    rec.epoch = progress_.epoch;
    ++progress_.global_step;
    if (++progress_.step_in_epoch == steps_per_epoch()) {
      progress_.step_in_epoch = 0;
      ++progress_.epoch;
    }
    return rec;
  }

  [[nodiscard]] Checkpoint checkpoint() const {
    return {gen_, disc_, config_.scale, progress_, adam_g_, adam_d_};
  }

  [[nodiscard]] const Generator& generator() const { return gen_; }
  [[nodiscard]] const Discriminator& discriminator() const { return disc_; }
  [[nodiscard]] Generator& generator() { return gen_; }
  [[nodiscard]] const AdamState& adam_g() const { return adam_g_; }
  [[nodiscard]] const AdamState& adam_d() const { return adam_d_; }
  [[nodiscard]] const TrainProgress& progress() const { return progress_; }
  [[nodiscard]] const TrainConfig& config() const { return config_; }
  [[nodiscard]] const std::vector<PatchLocation>& pool() const { return pool_; }

 private:
  [[nodiscard]] std::vector<std::size_t> epoch_order(std::uint64_t epoch) const {
    std::vector<std::size_t> order(pool_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(config_.seed * 0x9e3779b97f4a7c15ULL + epoch + 1);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  }

  TrainConfig config_;
  std::vector<SamplePlanes> samples_;
  Generator gen_;
  Discriminator disc_;
  AdamState adam_g_;
  AdamState adam_d_;
  std::vector<PatchLocation> pool_;
  TrainProgress progress_;
};

inline std::filesystem::path epoch_checkpoint_path(const TrainConfig& c, std::uint64_t epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%04llu.ckpt", static_cast<unsigned long long>(epoch));
  return std::filesystem::path(c.checkpoint_dir) / name;
}

struct TrainResult {
  std::filesystem::path last_checkpoint;
  std::size_t steps = 0;
};

/// Full run: loads the manifest, trains the configured epoch budget, appends
/// every record to the CSV log and writes a checkpoint after each epoch.
/// Pass a checkpoint to resume; its progress counters pick up where it stopped.
inline TrainResult train(const TrainConfig& config, const Manifest& manifest,
                         const std::optional<Checkpoint>& resume = std::nullopt,
                         const std::function<void(const TrainLogRecord&)>& on_step = {}) {
  config.validate();
  if (manifest.entries.empty()) throw ConfigError("manifest lists no image pairs");
  std::vector<SamplePlanes> planes;
  for (const Sample& s : load_manifest_samples(manifest, config.scale)) planes.push_back(to_planes(s));

  Trainer trainer = resume ? Trainer(config, std::move(planes), *resume)
                           : Trainer(config, std::move(planes));

  const std::filesystem::path log_path(config.log_path);
  if (log_path.has_parent_path()) std::filesystem::create_directories(log_path.parent_path());
  const bool fresh = !std::filesystem::exists(log_path) || std::filesystem::file_size(log_path) == 0;
  std::ofstream log(log_path, std::ios::app);
  if (!log) throw IoError(log_path, "cannot open log for appending");
  if (fresh) log << kLogHeader << '\n';

  TrainResult result;
  while (!trainer.finished()) {
    const std::uint64_t epoch = trainer.progress().epoch;
    const TrainLogRecord rec = trainer.step();
    log << to_csv_row(rec) << '\n';
    if (!log) throw IoError(log_path, "write failed");
    if (on_step) on_step(rec);
    ++result.steps;
    if (trainer.progress().epoch != epoch) {
      log.flush();
      result.last_checkpoint = epoch_checkpoint_path(config, trainer.progress().epoch);
      save_checkpoint(result.last_checkpoint, trainer.checkpoint());
    }
  }
  return result;
}

}  // namespace cdcgan

#endif  // CDCGAN_TRAINER_HPP
