// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/error.hpp>
#include <chatbci/training.hpp>
#include <chatbci/util.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace chatbci {

using nlohmann::json;

void AugmentSpec::check() const
{
    for (const double p : {noise_p, shift_p, channel_dropout_p})
        if (!(p >= 0.0 && p <= 1.0))
            throw ConfigError("augmentation probabilities must lie in [0, 1]");
    if (noise_sigma_scale < 0 || max_shift_s < 0)
        throw ConfigError("augmentation magnitudes must be non-negative");
}

json AugmentSpec::to_json() const
{
    return {{"gaussian_noise", {{"p", noise_p}, {"sigma_scale", noise_sigma_scale}}},
            {"circular_time_shift", {{"p", shift_p}, {"max_shift_s", max_shift_s}}},
            {"channel_dropout", {{"p_per_channel", channel_dropout_p}}}};
}

AugmentSpec AugmentSpec::from_json(const json& j)
{
    AugmentSpec a;
    if (j.contains("gaussian_noise")) {
        a.noise_p = j["gaussian_noise"].value("p", a.noise_p);
        a.noise_sigma_scale = j["gaussian_noise"].value("sigma_scale", a.noise_sigma_scale);
    }
    if (j.contains("circular_time_shift")) {
        a.shift_p = j["circular_time_shift"].value("p", a.shift_p);
        a.max_shift_s = j["circular_time_shift"].value("max_shift_s", a.max_shift_s);
    }
    if (j.contains("channel_dropout"))
        a.channel_dropout_p = j["channel_dropout"].value("p_per_channel", a.channel_dropout_p);
    a.check();
    return a;
}

void TrainConfig::check() const
{
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw ConfigError("val_fraction must lie in (0, 1)");
    if (early_stop_patience > max_epochs)
        throw ConfigError("early_stop_patience must not exceed max_epochs");
    if (batch_size == 0 || max_epochs == 0)
        throw ConfigError("batch_size and max_epochs must be positive");
    if (!(learning_rate > 0))
        throw ConfigError("learning_rate must be positive");
    augmentation.check();
}

json TrainConfig::to_json() const
{
    return {{"learning_rate", learning_rate},
            {"batch_size", batch_size},
            {"max_epochs", max_epochs},
            {"early_stop_patience", early_stop_patience},
            {"val_fraction", val_fraction},
            {"augmentation", augmentation.to_json()},
            {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j)
{
    TrainConfig c;
    try {
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.early_stop_patience = j.value("early_stop_patience", std::min(c.early_stop_patience, c.max_epochs));
        c.val_fraction = j.value("val_fraction", c.val_fraction);
        if (j.contains("augmentation"))
            c.augmentation = j["augmentation"].is_null() ? AugmentSpec::none()
                                                         : AugmentSpec::from_json(j["augmentation"]);
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    c.check();
    return c;
}

std::string to_string(RunStatus status)
{
    switch (status) {
    case RunStatus::running: return "running";
    case RunStatus::finished: return "finished";
    case RunStatus::failed: return "failed";
    case RunStatus::stopped: return "stopped";
    }
    return "?";
}

json EpochRecord::to_json() const
{
    return {{"epoch", epoch}, {"train_loss", train_loss}, {"train_acc", train_acc}, {"val_loss", val_loss},
            {"val_acc", val_acc}};
}

EpochRecord EpochRecord::from_json(const json& j)
{
    EpochRecord r;
    r.epoch = j.at("epoch").get<std::size_t>();
    auto num = [&](const char* key) { return j.at(key).is_null() ? std::nan("") : j.at(key).get<double>(); };
    r.train_loss = num("train_loss");
    r.train_acc = num("train_acc");
    r.val_loss = num("val_loss");
    r.val_acc = num("val_acc");
    return r;
}

json TrainRun::to_json() const
{
    json j;
    j["run_id"] = run_id;
    j["subject_id"] = subject_id;
    j["status"] = to_string(status);
    j["metrics"] = json::array();
    for (const auto& e : epochs)
        j["metrics"].push_back(e.to_json());
    j["epochs_completed"] = epochs.size();
    j["best_epoch"] = best_epoch;
    j["best_val_acc"] = best_val_acc < 0 ? json(nullptr) : json(best_val_acc);
    j["eval_accuracy"] = eval_accuracy ? json(*eval_accuracy) : json(nullptr);
    j["confusion"] = confusion;
    j["failed_epoch"] = failed_epoch ? json(*failed_epoch) : json(nullptr);
    if (!error.empty())
        j["error"] = error;
    return j;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const EpochSet& ep, double fraction,
                                                                            std::uint64_t seed)
{
    if (!(fraction > 0.0 && fraction < 1.0))
        throw SplitError("val_fraction must lie in (0, 1)");
    Rng rng(seed);
    std::vector<std::size_t> train, val;
    for (std::size_t k = 0; k < ep.n_classes(); ++k) {
        auto members = ep.trials_of_class(static_cast<int>(k));
        if (members.size() < 2)
            throw SplitError("class '" + ep.class_names[k] + "' has " + std::to_string(members.size()) +
                             " trial(s); at least 2 are needed to split");
        rng.shuffle(members.begin(), members.end());
        const auto n_val = static_cast<std::size_t>(round_half_even(fraction * static_cast<double>(members.size())));
        val.insert(val.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
        train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(val.begin(), val.end());
    return {train, val};
}

std::pair<EpochSet, EpochSet> split(const EpochSet& ep, double fraction, std::uint64_t seed)
{
    const auto [train, val] = split_indices(ep, fraction, seed);
    return {ep.subset(train), ep.subset(val)};
}

template <typename S>
void circular_shift(std::span<S> trial, std::size_t n_channels, std::size_t n_samples, std::ptrdiff_t shift)
{
    const auto n = static_cast<std::ptrdiff_t>(n_samples);
    if (n == 0)
        return;
    const auto k = ((shift % n) + n) % n;
    for (std::size_t c = 0; c < n_channels; ++c) {
        auto first = trial.begin() + static_cast<std::ptrdiff_t>(c * n_samples);
        std::rotate(first, first + (n - k) % n, first + n);
    }
}

template <typename S>
void augment(std::span<S> batch, std::size_t n_trials, std::size_t n_channels, std::size_t n_samples,
             const AugmentSpec& spec, std::span<const double> channel_sd, double fs, Rng& rng)
{
    const auto trial_size = n_channels * n_samples;
    const auto max_shift = static_cast<std::int64_t>(std::llround(spec.max_shift_s * fs));
    for (std::size_t i = 0; i < n_trials; ++i) {
        auto trial = batch.subspan(i * trial_size, trial_size);
        if (spec.noise_p > 0 && rng.bernoulli(spec.noise_p))
            for (std::size_t c = 0; c < n_channels; ++c) {
                const double sigma = spec.noise_sigma_scale * (c < channel_sd.size() ? channel_sd[c] : 1.0);
                for (std::size_t k = 0; k < n_samples; ++k)
                    trial[c * n_samples + k] += static_cast<S>(sigma * rng.normal());
            }
        if (spec.shift_p > 0 && rng.bernoulli(spec.shift_p) && max_shift > 0)
            circular_shift(trial, n_channels, n_samples, static_cast<std::ptrdiff_t>(rng.uniform_int(-max_shift, max_shift)));
        if (spec.channel_dropout_p > 0)
            for (std::size_t c = 0; c < n_channels; ++c)
                if (rng.bernoulli(spec.channel_dropout_p))
                    std::fill_n(trial.begin() + static_cast<std::ptrdiff_t>(c * n_samples), n_samples, S(0));
    }
}

template void circular_shift<float>(std::span<float>, std::size_t, std::size_t, std::ptrdiff_t);
template void circular_shift<double>(std::span<double>, std::size_t, std::size_t, std::ptrdiff_t);
template void augment<float>(std::span<float>, std::size_t, std::size_t, std::size_t, const AugmentSpec&,
                             std::span<const double>, double, Rng&);
template void augment<double>(std::span<double>, std::size_t, std::size_t, std::size_t, const AugmentSpec&,
                              std::span<const double>, double, Rng&);

template <typename S>
void Adam::step(std::span<S> params, std::span<const S> grads)
{
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m_[i] = b1_ * m_[i] + (1 - b1_) * g;
        v_[i] = b2_ * v_[i] + (1 - b2_) * g * g;
        params[i] -= static_cast<S>(lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_));
    }
}

template void Adam::step<float>(std::span<float>, std::span<const float>);
template void Adam::step<double>(std::span<double>, std::span<const double>);

namespace {

void gather(const EpochSet& set, std::span<const std::size_t> idx, std::vector<float>& x, std::vector<int>& y)
{
    const auto ts = set.trial_size();
    x.resize(idx.size() * ts);
    y.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto src = set.trial(idx[i]);
        std::transform(src.begin(), src.end(), x.begin() + static_cast<std::ptrdiff_t>(i * ts),
                       [](double v) { return static_cast<float>(v); });
        y[i] = set.labels[idx[i]];
    }
}

std::vector<double> channel_sd(const EpochSet& set)
{
    std::vector<double> sd(set.n_channels(), 0.0);
    for (std::size_t c = 0; c < set.n_channels(); ++c) {
        double n = 0, mean = 0, m2 = 0;
        for (std::size_t t = 0; t < set.n_trials(); ++t)
            for (const double x : set.series(t, c)) {
                n += 1;
                const double d = x - mean;
                mean += d / n;
                m2 += d * (x - mean);
            }
        sd[c] = n > 1 ? std::sqrt(m2 / n) : 0.0;
    }
    return sd;
}

} // namespace

std::pair<double, double> evaluate(DecoderModel<float>& model, const EpochSet& set, std::size_t batch_size,
                                   std::vector<std::vector<std::size_t>>* confusion)
{
    const auto n_cls = model.config().n_classes;
    if (confusion)
        confusion->assign(n_cls, std::vector<std::size_t>(n_cls, 0));
    if (set.n_trials() == 0)
        return {std::nan(""), std::nan("")};
    std::vector<float> x;
    std::vector<int> y;
    double loss = 0.0;
    std::size_t correct = 0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < set.n_trials(); start += batch_size) {
        const auto end = std::min(set.n_trials(), start + batch_size);
        idx.resize(end - start);
        std::iota(idx.begin(), idx.end(), start);
        gather(set, idx, x, y);
        const auto logits = model.forward(x, idx.size(), false);
        const auto [l, c] = softmax_cross_entropy<float>(logits, y, n_cls);
        loss += l * static_cast<double>(idx.size());
        correct += c;
        if (confusion)
            for (std::size_t i = 0; i < idx.size(); ++i) {
                const auto row = std::span<const float>(logits).subspan(i * n_cls, n_cls);
                const auto pred = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
                ++(*confusion)[static_cast<std::size_t>(y[i])][pred];
            }
    }
    const double n = static_cast<double>(set.n_trials());
    return {loss / n, static_cast<double>(correct) / n};
}

FitResult fit(const EpochSet& train, const EpochSet& val, const EpochSet* eval, const DecoderConfig& decoder_cfg,
              const TrainConfig& cfg, const FitHooks& hooks)
{
    cfg.check();
    train.check();
    val.check();
    if (train.n_channels() != decoder_cfg.n_channels || train.n_samples != decoder_cfg.n_samples)
        throw ShapeError("training data is " + std::to_string(train.n_channels()) + " x " +
                         std::to_string(train.n_samples) + " but the decoder expects " +
                         std::to_string(decoder_cfg.n_channels) + " x " + std::to_string(decoder_cfg.n_samples));
    if (train.n_trials() == 0)
        throw ShapeError("no training trials");

    FitResult result;
    auto& run = result.run;
    if (eval)
        run.eval_fingerprint_before = eval->fingerprint();

    auto model = DecoderModel<float>::build(decoder_cfg, cfg.seed);
    Adam adam(model.parameter_count(), cfg.learning_rate);
    Rng shuffle_rng(cfg.seed ^ 0x5eed5eedULL);
    Rng augment_rng(cfg.seed ^ 0xa06a06ULL);
    Rng dropout_rng(cfg.seed ^ 0xd50d50ULL);
    const auto sd = channel_sd(train);
    const bool augmenting = cfg.augmentation.enabled();

    std::vector<std::size_t> order(train.n_trials());
    std::iota(order.begin(), order.end(), 0);
    std::vector<float> x;
    std::vector<int> y;
    std::vector<float> dlogits;
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        if (hooks.stop && hooks.stop->load()) {
            run.status = RunStatus::stopped;
            break;
        }
        shuffle_rng.shuffle(order.begin(), order.end());
        bool diverged = false;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const auto end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            if (hooks.on_batch)
                hooks.on_batch(idx);
            ++run.train_batches;
            gather(train, idx, x, y);
            if (augmenting)
                augment<float>(x, idx.size(), train.n_channels(), train.n_samples, cfg.augmentation, sd,
                               train.sampling_rate_hz, augment_rng);
            model.zero_grad();
            const auto logits = model.forward(x, idx.size(), true, &dropout_rng);
            const auto [loss, correct] = softmax_cross_entropy<float>(logits, y, decoder_cfg.n_classes, &dlogits);
            (void)correct;
            if (!std::isfinite(loss)) {
                diverged = true;
                break;
            }
            model.backward(dlogits);
            adam.step<float>(model.parameters(), model.gradients());
        }

        EpochRecord rec;
        rec.epoch = epoch;
        std::tie(rec.train_loss, rec.train_acc) = evaluate(model, train, cfg.batch_size);
        std::tie(rec.val_loss, rec.val_acc) = evaluate(model, val, cfg.batch_size);
        if (diverged || !std::isfinite(rec.train_loss)) {
            run.status = RunStatus::failed;
            run.failed_epoch = epoch;
            run.error = "loss diverged (non-finite) in epoch " + std::to_string(epoch);
            run.epochs.push_back(rec);
            if (hooks.on_epoch)
                hooks.on_epoch(rec);
            break;
        }
        run.epochs.push_back(rec);
        if (hooks.on_epoch)
            hooks.on_epoch(rec);
        const double score = std::isnan(rec.val_acc) ? rec.train_acc : rec.val_acc;
        if (score > run.best_val_acc) {
            run.best_val_acc = score;
            run.best_epoch = epoch;
            result.best_model = model;
            since_best = 0;
            if (hooks.on_best)
                hooks.on_best(model, rec);
        } else if (++since_best >= cfg.early_stop_patience) {
            break;
        }
    }

    if (run.status == RunStatus::running) {
        run.status = RunStatus::finished;
        if (eval && result.best_model) {
            std::vector<std::vector<std::size_t>> confusion;
            run.eval_accuracy = evaluate(*result.best_model, *eval, cfg.batch_size, &confusion).second;
            run.confusion = std::move(confusion);
        }
    }
    if (eval)
        run.eval_fingerprint_after = eval->fingerprint();
    return result;
}

TrainRun train(const TrainRequest& req, const FitHooks& hooks)
{
    namespace fs = std::filesystem;
    const auto subject = normalize_subject_id(req.subject_id);
    const auto train_rec = load_recording(req.data_root / recording_dir_name(subject, Session::train));
    const auto eval_rec = load_recording(req.data_root / recording_dir_name(subject, Session::eval));

    auto select = [&](const EpochSet& ep) {
        return req.decoder.include_eog ? ep : ep.pick_kind(ChannelKind::EEG);
    };
    const auto train_session = select(preprocess(train_rec, req.preprocess));
    const auto eval_session = select(preprocess(eval_rec, req.preprocess));

    auto decoder = req.decoder;
    decoder.n_channels = train_session.n_channels();
    decoder.n_samples = train_session.n_samples;
    decoder.n_classes = train_session.n_classes();
    decoder.check();
    req.train.check();

    std::error_code ec;
    fs::create_directories(req.run_dir, ec);
    if (ec)
        throw IOError("cannot create run directory " + req.run_dir.string());

    json config;
    config["run_id"] = req.run_id;
    config["subject_id"] = subject;
    config["decoder"] = decoder.to_json();
    config["train"] = req.train.to_json();
    config["preprocess"] = req.preprocess.to_json();
    config["n_train_session_trials"] = train_session.n_trials();
    config["n_eval_session_trials"] = eval_session.n_trials();
    write_file(req.run_dir / "config.json", config.dump(2) + "\n");
    write_file(req.run_dir / "metrics.jsonl", "");

    const auto [train_set, val_set] = split(train_session, req.train.val_fraction, req.train.seed);

    FitHooks local = hooks;
    local.on_epoch = [&](const EpochRecord& rec) {
        append_line(req.run_dir / "metrics.jsonl", rec.to_json().dump());
        if (hooks.on_epoch)
            hooks.on_epoch(rec);
    };
    local.on_best = [&](const DecoderModel<float>& model, const EpochRecord& rec) {
        save_checkpoint(model, req.run_dir / "best.ckpt", {{"epoch", rec.epoch}, {"val_acc", rec.val_acc}});
        if (hooks.on_best)
            hooks.on_best(model, rec);
    };

    auto result = fit(train_set, val_set, &eval_session, decoder, req.train, local);
    auto& run = result.run;
    run.run_id = req.run_id;
    run.subject_id = subject;

    json confusion;
    confusion["class_names"] = eval_session.class_names;
    confusion["matrix"] = run.confusion;
    confusion["eval_accuracy"] = run.eval_accuracy ? json(*run.eval_accuracy) : json(nullptr);
    confusion["best_epoch"] = run.best_epoch;
    confusion["status"] = to_string(run.status);
    write_file(req.run_dir / "confusion.json", confusion.dump(2) + "\n");
    return run;
}

std::vector<EpochRecord> read_metrics(const std::filesystem::path& run_dir)
{
    std::vector<EpochRecord> out;
    const auto text = read_file(run_dir / "metrics.jsonl");
    for (const auto& line : split(text, '\n'))
        if (!trim(line).empty())
            out.push_back(EpochRecord::from_json(json::parse(line)));
    return out;
}

} // namespace chatbci
