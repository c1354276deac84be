// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/decoder.hpp>
#include <chatbci/preprocess.hpp>

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace chatbci {

struct AugmentSpec {
    double noise_p = 0.5;
    /// Noise SD as a fraction of the per-channel training-set SD.
    double noise_sigma_scale = 0.1;
    double shift_p = 0.5;
    double max_shift_s = 0.25;
    double channel_dropout_p = 0.05;

    static AugmentSpec none() { return {0.0, 0.1, 0.0, 0.25, 0.0}; }
    bool enabled() const { return noise_p > 0 || shift_p > 0 || channel_dropout_p > 0; }
    void check() const;
    nlohmann::json to_json() const;
    static AugmentSpec from_json(const nlohmann::json& j);
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 64;
    std::size_t max_epochs = 200;
    std::size_t early_stop_patience = 30;
    double val_fraction = 0.2;
    AugmentSpec augmentation;
    std::uint64_t seed = 0;

    void check() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

enum class RunStatus { running, finished, failed, stopped };
std::string to_string(RunStatus status);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0, train_acc = 0;
    double val_loss = 0, val_acc = 0;

    nlohmann::json to_json() const;
    static EpochRecord from_json(const nlohmann::json& j);
};

struct TrainRun {
    std::string run_id;
    std::string subject_id;
    RunStatus status = RunStatus::running;
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_acc = -1.0;
    std::optional<double> eval_accuracy;
    /// [true class][predicted class] on the eval session.
    std::vector<std::vector<std::size_t>> confusion;
    std::optional<std::size_t> failed_epoch;
    std::string error;
    std::size_t train_batches = 0;
    std::uint64_t eval_fingerprint_before = 0;
    std::uint64_t eval_fingerprint_after = 0;

    nlohmann::json to_json() const;
};

/// Stratified split: per class, round-half-even(fraction · count) trials
/// go to validation. Deterministic in `seed`.
std::pair<EpochSet, EpochSet> split(const EpochSet& train_session, double val_fraction, std::uint64_t seed);

/// Same as split() but returns the index partition (train, val).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const EpochSet& train_session,
                                                                            double val_fraction, std::uint64_t seed);

/// Rotates every channel of one trial by `shift` samples (positive moves
/// samples later, wrapping around).
template <typename S>
void circular_shift(std::span<S> trial, std::size_t n_channels, std::size_t n_samples, std::ptrdiff_t shift);

/// In-place augmentation of a trials × channels × samples batch. Each
/// transform is drawn independently per trial; labels are untouched.
template <typename S>
void augment(std::span<S> batch, std::size_t n_trials, std::size_t n_channels, std::size_t n_samples,
             const AugmentSpec& spec, std::span<const double> channel_sd, double sampling_rate_hz, Rng& rng);

/// Adaptive-moment optimizer (no weight decay).
class Adam
{
public:
    explicit Adam(std::size_t n, double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0)
    {}

    template <typename S>
    void step(std::span<S> params, std::span<const S> grads);

    std::size_t steps() const { return t_; }

private:
    double lr_, b1_, b2_, eps_;
    std::vector<double> m_, v_;
    std::size_t t_ = 0;
};

struct FitHooks {
    /// Called with the training-set indices of every minibatch drawn.
    std::function<void(std::span<const std::size_t>)> on_batch;
    /// Called after each epoch's record is final.
    std::function<void(const EpochRecord&)> on_epoch;
    /// Called whenever the best-validation model changes.
    std::function<void(const DecoderModel<float>&, const EpochRecord&)> on_best;
    const std::atomic<bool>* stop = nullptr;
};

struct FitResult {
    TrainRun run;
    std::optional<DecoderModel<float>> best_model;
};

/// Trains on `train`, selects by `val` accuracy with early stopping, then
/// evaluates the best model once on `eval` (when given).
FitResult fit(const EpochSet& train, const EpochSet& val, const EpochSet* eval, const DecoderConfig& decoder_cfg,
              const TrainConfig& train_cfg, const FitHooks& hooks = {});

/// Loss and accuracy of a model in eval mode.
std::pair<double, double> evaluate(DecoderModel<float>& model, const EpochSet& set, std::size_t batch_size = 64,
                                   std::vector<std::vector<std::size_t>>* confusion = nullptr);

struct TrainRequest {
    std::string subject_id;
    std::filesystem::path data_root;
    std::filesystem::path run_dir;
    std::string run_id;
    DecoderConfig decoder;
    TrainConfig train;
    PreprocessConfig preprocess{true, {FilterSpec::lowpass(40.0)}, {0.0, 4.0}, std::nullopt};
};

/// Loads both sessions of a subject, preprocesses, fits and writes the run
/// directory (config.json, metrics.jsonl, best.ckpt, confusion.json).
/// Decoder channel and sample counts are taken from the data.
TrainRun train(const TrainRequest& request, const FitHooks& hooks = {});

/// Reads metrics.jsonl of a run directory.
std::vector<EpochRecord> read_metrics(const std::filesystem::path& run_dir);

} // namespace chatbci
