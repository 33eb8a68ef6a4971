#include "radsynth/diffusion/trainer.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "../common/jsonl.hpp"
#include "radsynth/diffusion/data.hpp"
#include "radsynth/neuralcore/adam.hpp"
#include "radsynth/neuralcore/checkpoint.hpp"
#include "radsynth/neuralcore/gradcheck.hpp"

namespace radsynth::diffusion {

void TrainConfig::validate() const {
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
    if (max_steps == 0) throw std::invalid_argument("TrainConfig: max_steps must be >= 1");
    if (checkpoint_interval == 0 || checkpoint_interval > max_steps) {
        throw std::invalid_argument("TrainConfig: need 1 <= checkpoint_interval <= max_steps");
    }
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
        throw std::invalid_argument("TrainConfig: val_fraction must lie in [0, 1)");
    }
}

NoisedBatch draw_noised_batch(const nn::Tensor4& x0, const NoiseSchedule& sched, Rng& rng) {
    NoisedBatch b;
    b.eps = nn::Tensor4(x0.shape());
    b.t.resize(x0.shape().n);
    for (std::size_t n = 0; n < x0.shape().n; ++n) {
        b.t[n] = static_cast<int>(rng.integer(1, sched.steps()));
        for (auto& v : b.eps.item(n)) v = rng.normal();
    }
    b.x_t = q_sample(x0, b.t, b.eps, sched);
    return b;
}

LossStep loss_step(const nn::DenoiserModel& model, const nn::Tensor4& batch, const NoiseSchedule& sched, Rng& rng) {
    if (batch.shape().n == 0) throw std::invalid_argument("loss_step: empty batch");
    const NoisedBatch nb = draw_noised_batch(batch, sched, rng);
    nn::ForwardCache cache;
    const nn::Tensor4 eps_hat = nn::denoiser_forward(model, nb.x_t, nb.t, cache);
    LossStep out;
    out.loss = nn::mse_loss(eps_hat, nb.eps);
    out.grads = nn::denoiser_backward(model, cache, nb.t, nn::mse_loss_grad(eps_hat, nb.eps));
    return out;
}

double evaluation_loss(const nn::DenoiserModel& model, std::span<const imaging::GrayImage> images,
                       const NoiseSchedule& sched, std::uint64_t noise_seed, std::size_t batch_size) {
    if (images.empty()) throw std::invalid_argument("evaluation_loss: no images");
    Rng rng(noise_seed);
    double weighted = 0.0;
    for (std::size_t start = 0; start < images.size(); start += batch_size) {
        const std::size_t count = std::min(batch_size, images.size() - start);
        const nn::Tensor4 x0 = images_to_tensor(images.subspan(start, count));
        const NoisedBatch nb = draw_noised_batch(x0, sched, rng);
        weighted += nn::mse_loss(nn::denoiser_forward(model, nb.x_t, nb.t), nb.eps) * static_cast<double>(count);
    }
    return weighted / static_cast<double>(images.size());
}

std::filesystem::path checkpoint_file_name(std::uint64_t checkpoint_index) {
    char name[32];
    std::snprintf(name, sizeof name, "ckpt_%04llu.bin", static_cast<unsigned long long>(checkpoint_index));
    return name;
}

TrainResult train(std::span<const imaging::GrayImage> train_images, std::span<const imaging::GrayImage> val_images,
                  const TrainConfig& config, const NoiseSchedule& sched, const std::filesystem::path& checkpoint_dir,
                  const TrainProgress& progress) {
    config.validate();
    if (train_images.size() < config.batch_size) {
        throw std::invalid_argument("train: training set smaller than one batch");
    }
    std::filesystem::create_directories(checkpoint_dir);

    nn::DenoiserArch arch = config.arch;
    arch.timesteps = static_cast<std::uint32_t>(sched.steps());
    nn::DenoiserModel model = nn::DenoiserModel::create(arch, {.seed = config.seed, .zero_output = true});
    nn::OptimizerState opt = nn::OptimizerState::for_params(model.params(), nn::AdamHyper{.lr = config.lr});

    // Images are converted once; batches are gathered by index.
    std::vector<const imaging::GrayImage*> refs;
    for (const auto& img : train_images) refs.push_back(&img);

    Rng order_rng = Rng::derive(config.seed, 1);
    Rng noise_rng = Rng::derive(config.seed, 2);
    std::vector<std::size_t> order(train_images.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();  // forces a shuffle on the first step

    std::ofstream log(checkpoint_dir / "checkpoints.jsonl", std::ios::trunc);
    std::ofstream loss_csv(checkpoint_dir / "train_loss.csv", std::ios::trunc);
    if (!log || !loss_csv) throw std::runtime_error("train: cannot open logs in " + checkpoint_dir.string());
    loss_csv << "step,loss\n";

    TrainResult result;
    double interval_sum = 0.0;
    std::vector<const imaging::GrayImage*> batch_refs(config.batch_size);
    for (std::uint64_t step = 1; step <= config.max_steps; ++step) {
        if (cursor + config.batch_size > order.size()) {
            shuffle_in_place(order, order_rng);
            cursor = 0;
        }
        for (std::size_t b = 0; b < config.batch_size; ++b) batch_refs[b] = refs[order[cursor + b]];
        cursor += config.batch_size;

        const nn::Tensor4 x0 = images_to_tensor(std::span<const imaging::GrayImage* const>(batch_refs));
        LossStep ls = loss_step(model, x0, sched, noise_rng);
        nn::adam_step(model, ls.grads, opt);
        result.step_losses.push_back(ls.loss);
        interval_sum += ls.loss;
        char line[64];
        std::snprintf(line, sizeof line, "%llu,%.17g\n", static_cast<unsigned long long>(step), ls.loss);
        loss_csv << line;

        if (step % config.checkpoint_interval == 0) {
            CheckpointRecord rec;
            rec.checkpoint_index = step / config.checkpoint_interval;
            rec.step = step;
            rec.train_loss = interval_sum / static_cast<double>(config.checkpoint_interval);
            interval_sum = 0.0;
            if (!val_images.empty()) {
                rec.val_loss = evaluation_loss(model, val_images, sched, config.eval_seed, config.batch_size);
            }
            rec.file = checkpoint_dir / checkpoint_file_name(rec.checkpoint_index);
            nn::save_checkpoint(rec.file, model, opt);

            jsonl::json j;
            j["checkpoint_index"] = rec.checkpoint_index;
            j["step"] = rec.step;
            j["train_loss"] = rec.train_loss;
            j["val_loss"] = rec.val_loss ? jsonl::json(*rec.val_loss) : jsonl::json(nullptr);
            log << j.dump() << '\n';
            log.flush();
            if (!log) throw std::runtime_error("train: checkpoint log write failed");
            if (progress) progress(rec);
            result.records.push_back(std::move(rec));
        }
    }
    loss_csv.flush();
    if (!loss_csv) throw std::runtime_error("train: loss log write failed");
    return result;
}

std::vector<CheckpointRecord> read_checkpoint_log(const std::filesystem::path& checkpoint_dir) {
    std::vector<CheckpointRecord> out;
    for (const auto& j : jsonl::read(checkpoint_dir / "checkpoints.jsonl")) {
        CheckpointRecord rec;
        rec.checkpoint_index = j.at("checkpoint_index").get<std::uint64_t>();
        rec.step = j.at("step").get<std::uint64_t>();
        rec.train_loss = j.at("train_loss").get<double>();
        if (!j.at("val_loss").is_null()) rec.val_loss = j["val_loss"].get<double>();
        rec.file = checkpoint_dir / checkpoint_file_name(rec.checkpoint_index);
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace radsynth::diffusion
