// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/error.hpp>
#include <chatbci/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace chatbci {

enum class ConvOrder { temporal_first, spatial_first };

/// Architecture of the compact convolutional decoder:
/// temporal conv → spatial conv → batch norm → swish → average pool →
/// dropout → affine classifier.
struct DecoderConfig {
    std::size_t n_channels = 22;
    std::size_t n_samples = 1000;
    std::size_t n_classes = 4;
    std::size_t temporal_filters = 8;
    std::size_t temporal_kernel = 25;
    std::size_t spatial_filters = 16;
    std::size_t pool_length = 75;
    std::size_t pool_stride = 15;
    double dropout_p = 0.5;
    bool include_eog = false;
    ConvOrder conv_order = ConvOrder::temporal_first;
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;

    /// Throws ConfigError.
    void check() const;
    std::size_t conv_length() const { return n_samples - temporal_kernel + 1; }
    /// floor((T - K + 1 - L) / S) + 1
    std::size_t pooled_length() const { return (conv_length() - pool_length) / pool_stride + 1; }
    std::size_t feature_count() const { return spatial_filters * pooled_length(); }
    /// Trainable parameter count from the closed-form expression.
    std::size_t analytic_parameter_count() const;

    nlohmann::json to_json() const;
    static DecoderConfig from_json(const nlohmann::json& j);
};

struct ParamInfo {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    std::size_t count = 0;
};

/// x · sigmoid(x)
template <typename S>
inline S swish(S x)
{
    return x / (S(1) + std::exp(-x));
}

template <typename S>
inline S swish_derivative(S x)
{
    const S sig = S(1) / (S(1) + std::exp(-x));
    return sig + x * sig * (S(1) - sig);
}

/// Mean softmax cross-entropy over a batch. Fills `dlogits` with the
/// gradient of the mean loss and returns (loss, number correct).
template <typename S>
std::pair<double, std::size_t> softmax_cross_entropy(std::span<const S> logits, std::span<const int> labels,
                                                     std::size_t n_classes, std::vector<S>* dlogits = nullptr)
{
    const auto n = labels.size();
    if (logits.size() != n * n_classes)
        throw ShapeError("logits size does not match labels x classes");
    double loss = 0.0;
    std::size_t correct = 0;
    if (dlogits)
        dlogits->assign(logits.size(), S(0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = logits.subspan(i * n_classes, n_classes);
        const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        const double mx = static_cast<double>(row[best]);
        double z = 0.0;
        for (const S v : row)
            z += std::exp(static_cast<double>(v) - mx);
        const auto label = static_cast<std::size_t>(labels[i]);
        loss += std::log(z) - (static_cast<double>(row[label]) - mx);
        correct += best == label;
        if (dlogits)
            for (std::size_t k = 0; k < n_classes; ++k) {
                const double p = std::exp(static_cast<double>(row[k]) - mx) / z;
                (*dlogits)[i * n_classes + k] = static_cast<S>((p - (k == label ? 1.0 : 0.0)) / static_cast<double>(n));
            }
    }
    return {n ? loss / static_cast<double>(n) : 0.0, correct};
}

template <typename S>
class DecoderModel
{
public:
    static DecoderModel build(const DecoderConfig& config, std::uint64_t seed)
    {
        config.check();
        DecoderModel m(config);
        Rng rng(seed);
        auto init = [&](const std::string& name, double fan_in) {
            const double bound = 1.0 / std::sqrt(fan_in);
            for (auto& v : m.param(name))
                v = static_cast<S>(rng.uniform(-bound, bound));
        };
        const auto& c = config;
        if (c.conv_order == ConvOrder::temporal_first) {
            init("temporal.weight", double(c.temporal_kernel));
            init("temporal.bias", double(c.temporal_kernel));
            init("spatial.weight", double(c.temporal_filters * c.n_channels));
            init("spatial.bias", double(c.temporal_filters * c.n_channels));
        } else {
            init("spatial.weight", double(c.n_channels));
            init("spatial.bias", double(c.n_channels));
            init("temporal.weight", double(c.temporal_filters * c.temporal_kernel));
            init("temporal.bias", double(c.temporal_filters * c.temporal_kernel));
        }
        std::fill_n(m.param("bn.weight").begin(), c.spatial_filters, S(1));
        init("classifier.weight", double(c.feature_count()));
        init("classifier.bias", double(c.feature_count()));
        std::fill(m.running_var_.begin(), m.running_var_.end(), S(1));
        return m;
    }

    const DecoderConfig& config() const { return config_; }
    const std::vector<ParamInfo>& layout() const { return layout_; }
    std::size_t parameter_count() const { return params_.size(); }

    std::span<S> parameters() { return params_; }
    std::span<const S> parameters() const { return params_; }
    std::span<S> gradients() { return grads_; }
    std::span<const S> gradients() const { return grads_; }
    std::span<S> running_mean() { return running_mean_; }
    std::span<S> running_var() { return running_var_; }
    std::span<const S> running_mean() const { return running_mean_; }
    std::span<const S> running_var() const { return running_var_; }

    std::span<S> param(const std::string& name) { return slice(params_, name); }
    std::span<const S> param(const std::string& name) const { return slice(params_, name); }
    std::span<S> grad(const std::string& name) { return slice(grads_, name); }

    void zero_grad() { std::fill(grads_.begin(), grads_.end(), S(0)); }

    /// Logits for a trials × channels × samples batch. Train mode uses batch
    /// statistics, updates the running statistics and applies dropout drawn
    /// from `rng`; it also keeps the activations needed by backward().
    std::vector<S> forward(std::span<const S> batch, std::size_t n_trials, bool train_mode, Rng* rng = nullptr)
    {
        const auto& c = config_;
        const auto trial_size = c.n_channels * c.n_samples;
        if (batch.size() != n_trials * trial_size || n_trials == 0)
            throw ShapeError("batch holds " + std::to_string(batch.size()) + " values, expected " +
                             std::to_string(n_trials) + " x " + std::to_string(c.n_channels) + " x " +
                             std::to_string(c.n_samples));
        if (train_mode && c.dropout_p > 0 && !rng)
            throw ConfigError("train-mode forward with dropout needs a random generator");

        const auto f2 = c.spatial_filters;
        const auto t1 = c.conv_length();
        const auto n_pool = c.pooled_length();
        const auto n_feat = c.feature_count();
        cache_.n = n_trials;
        cache_.train = train_mode;
        cache_.input.assign(batch.begin(), batch.end());
        cache_.stage1.assign(n_trials * stage1_size(), S(0));
        cache_.conv.assign(n_trials * f2 * t1, S(0));

        for (std::size_t i = 0; i < n_trials; ++i)
            conv_forward(batch.subspan(i * trial_size, trial_size), i);

        // Batch norm over (trials, time) per feature map.
        cache_.mean.assign(f2, 0.0);
        cache_.inv_std.assign(f2, 0.0);
        const auto gamma = param("bn.weight");
        const auto beta = param("bn.bias");
        const double count = static_cast<double>(n_trials * t1);
        for (std::size_t f = 0; f < f2; ++f) {
            double mean, var;
            if (train_mode) {
                double sum = 0.0;
                for (std::size_t i = 0; i < n_trials; ++i)
                    for (std::size_t t = 0; t < t1; ++t)
                        sum += cache_.conv[(i * f2 + f) * t1 + t];
                mean = sum / count;
                double ss = 0.0;
                for (std::size_t i = 0; i < n_trials; ++i)
                    for (std::size_t t = 0; t < t1; ++t) {
                        const double d = cache_.conv[(i * f2 + f) * t1 + t] - mean;
                        ss += d * d;
                    }
                var = ss / count;
                const double unbiased = count > 1 ? ss / (count - 1) : var;
                running_mean_[f] = static_cast<S>((1 - c.bn_momentum) * running_mean_[f] + c.bn_momentum * mean);
                running_var_[f] = static_cast<S>((1 - c.bn_momentum) * running_var_[f] + c.bn_momentum * unbiased);
            } else {
                mean = running_mean_[f];
                var = running_var_[f];
            }
            cache_.mean[f] = mean;
            cache_.inv_std[f] = 1.0 / std::sqrt(var + c.bn_eps);
        }

        cache_.bn.assign(cache_.conv.size(), S(0));
        cache_.features.assign(n_trials * n_feat, S(0));
        cache_.mask.assign(train_mode ? n_trials * n_feat : 0, S(1));
        const S inv_pool = S(1) / static_cast<S>(c.pool_length);
        std::vector<S> act(t1);
        for (std::size_t i = 0; i < n_trials; ++i)
            for (std::size_t f = 0; f < f2; ++f) {
                const auto base = (i * f2 + f) * t1;
                const auto m = static_cast<S>(cache_.mean[f]);
                const auto is = static_cast<S>(cache_.inv_std[f]);
                for (std::size_t t = 0; t < t1; ++t) {
                    const S y = gamma[f] * (cache_.conv[base + t] - m) * is + beta[f];
                    cache_.bn[base + t] = y;
                    act[t] = swish(y);
                }
                for (std::size_t j = 0; j < n_pool; ++j) {
                    S acc = 0;
                    for (std::size_t k = 0; k < c.pool_length; ++k)
                        acc += act[j * c.pool_stride + k];
                    cache_.features[i * n_feat + f * n_pool + j] = acc * inv_pool;
                }
            }

        if (train_mode && c.dropout_p > 0 && rng) {
            const S keep_scale = static_cast<S>(1.0 / (1.0 - c.dropout_p));
            for (std::size_t k = 0; k < cache_.mask.size(); ++k) {
                cache_.mask[k] = rng->bernoulli(c.dropout_p) ? S(0) : keep_scale;
                cache_.features[k] *= cache_.mask[k];
            }
        }

        const auto w = param("classifier.weight");
        const auto b = param("classifier.bias");
        std::vector<S> logits(n_trials * c.n_classes);
        for (std::size_t i = 0; i < n_trials; ++i) {
            const S* h = cache_.features.data() + i * n_feat;
            for (std::size_t k = 0; k < c.n_classes; ++k) {
                S acc = b[k];
                const S* wk = w.data() + k * n_feat;
                for (std::size_t m = 0; m < n_feat; ++m)
                    acc += wk[m] * h[m];
                logits[i * c.n_classes + k] = acc;
            }
        }
        return logits;
    }

    /// Accumulates d(loss)/d(params) given d(loss)/d(logits) for the batch
    /// of the most recent forward().
    void backward(std::span<const S> dlogits)
    {
        const auto& c = config_;
        const auto n = cache_.n;
        if (dlogits.size() != n * c.n_classes)
            throw ShapeError("dlogits does not match the last forward batch");
        const auto f2 = c.spatial_filters;
        const auto t1 = c.conv_length();
        const auto n_pool = c.pooled_length();
        const auto n_feat = c.feature_count();

        const auto w = param("classifier.weight");
        auto dw = grad("classifier.weight");
        auto db = grad("classifier.bias");
        std::vector<S> dfeat(n * n_feat, S(0));
        for (std::size_t i = 0; i < n; ++i) {
            const S* h = cache_.features.data() + i * n_feat;
            S* dh = dfeat.data() + i * n_feat;
            for (std::size_t k = 0; k < c.n_classes; ++k) {
                const S g = dlogits[i * c.n_classes + k];
                db[k] += g;
                S* dwk = dw.data() + k * n_feat;
                const S* wk = w.data() + k * n_feat;
                for (std::size_t m = 0; m < n_feat; ++m) {
                    dwk[m] += g * h[m];
                    dh[m] += g * wk[m];
                }
            }
        }
        if (!cache_.mask.empty())
            for (std::size_t k = 0; k < dfeat.size(); ++k)
                dfeat[k] *= cache_.mask[k];

        // Pool and swish back to the batch-norm output.
        const S inv_pool = S(1) / static_cast<S>(c.pool_length);
        std::vector<S> dy(cache_.bn.size(), S(0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t f = 0; f < f2; ++f) {
                const auto base = (i * f2 + f) * t1;
                for (std::size_t j = 0; j < n_pool; ++j) {
                    const S g = dfeat[i * n_feat + f * n_pool + j] * inv_pool;
                    for (std::size_t k = 0; k < c.pool_length; ++k)
                        dy[base + j * c.pool_stride + k] += g;
                }
                for (std::size_t t = 0; t < t1; ++t)
                    dy[base + t] *= swish_derivative(cache_.bn[base + t]);
            }

        const auto gamma = param("bn.weight");
        auto dgamma = grad("bn.weight");
        auto dbeta = grad("bn.bias");
        std::vector<S> dz(dy.size(), S(0));
        const double count = static_cast<double>(n * t1);
        for (std::size_t f = 0; f < f2; ++f) {
            double sum_dy = 0.0, sum_dy_xhat = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t t = 0; t < t1; ++t) {
                    const auto idx = (i * f2 + f) * t1 + t;
                    const double xhat = (cache_.conv[idx] - cache_.mean[f]) * cache_.inv_std[f];
                    sum_dy += dy[idx];
                    sum_dy_xhat += dy[idx] * xhat;
                }
            dgamma[f] += static_cast<S>(sum_dy_xhat);
            dbeta[f] += static_cast<S>(sum_dy);
            const double g = gamma[f];
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t t = 0; t < t1; ++t) {
                    const auto idx = (i * f2 + f) * t1 + t;
                    if (cache_.train) {
                        const double xhat = (cache_.conv[idx] - cache_.mean[f]) * cache_.inv_std[f];
                        dz[idx] = static_cast<S>(g * cache_.inv_std[f] *
                                                 (dy[idx] - sum_dy / count - xhat * sum_dy_xhat / count));
                    } else {
                        dz[idx] = static_cast<S>(g * cache_.inv_std[f] * dy[idx]);
                    }
                }
        }

        const auto trial_size = c.n_channels * c.n_samples;
        for (std::size_t i = 0; i < n; ++i)
            conv_backward(std::span<const S>(cache_.input).subspan(i * trial_size, trial_size), i,
                          std::span<const S>(dz).subspan(i * f2 * t1, f2 * t1));
    }

    /// Predicted class per trial (eval mode).
    std::vector<int> predict(std::span<const S> batch, std::size_t n_trials)
    {
        const auto logits = forward(batch, n_trials, false);
        std::vector<int> out(n_trials);
        for (std::size_t i = 0; i < n_trials; ++i) {
            const auto row = std::span<const S>(logits).subspan(i * config_.n_classes, config_.n_classes);
            out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        }
        return out;
    }

    /// Copies parameters and running statistics from a model of any scalar
    /// type with the same configuration.
    template <typename T>
    void load_state(const DecoderModel<T>& other)
    {
        std::transform(other.parameters().begin(), other.parameters().end(), params_.begin(),
                       [](T v) { return static_cast<S>(v); });
        std::transform(other.running_mean().begin(), other.running_mean().end(), running_mean_.begin(),
                       [](T v) { return static_cast<S>(v); });
        std::transform(other.running_var().begin(), other.running_var().end(), running_var_.begin(),
                       [](T v) { return static_cast<S>(v); });
    }

private:
    explicit DecoderModel(const DecoderConfig& config) : config_(config)
    {
        const auto& c = config;
        auto add = [&](const std::string& name, std::vector<std::size_t> shape) {
            std::size_t count = 1;
            for (const auto d : shape)
                count *= d;
            layout_.push_back({name, std::move(shape), total_, count});
            total_ += count;
        };
        if (c.conv_order == ConvOrder::temporal_first) {
            add("temporal.weight", {c.temporal_filters, c.temporal_kernel});
            add("temporal.bias", {c.temporal_filters});
            add("spatial.weight", {c.spatial_filters, c.temporal_filters, c.n_channels});
            add("spatial.bias", {c.spatial_filters});
        } else {
            add("spatial.weight", {c.temporal_filters, c.n_channels});
            add("spatial.bias", {c.temporal_filters});
            add("temporal.weight", {c.spatial_filters, c.temporal_filters, c.temporal_kernel});
            add("temporal.bias", {c.spatial_filters});
        }
        add("bn.weight", {c.spatial_filters});
        add("bn.bias", {c.spatial_filters});
        add("classifier.weight", {c.n_classes, c.feature_count()});
        add("classifier.bias", {c.n_classes});
        params_.assign(total_, S(0));
        grads_.assign(total_, S(0));
        running_mean_.assign(c.spatial_filters, S(0));
        running_var_.assign(c.spatial_filters, S(1));
    }

    template <typename V>
    auto slice(V& values, const std::string& name) const
    {
        for (const auto& p : layout_)
            if (p.name == name)
                return std::span(values.data() + p.offset, p.count);
        throw ConfigError("no parameter named " + name);
    }

    /// Size of the intermediate map between the two convolutions.
    std::size_t stage1_size() const
    {
        const auto& c = config_;
        return c.conv_order == ConvOrder::temporal_first ? c.temporal_filters * c.n_channels * c.conv_length()
                                                         : c.temporal_filters * c.n_samples;
    }

    void conv_forward(std::span<const S> x, std::size_t trial)
    {
        const auto& c = config_;
        const auto f1 = c.temporal_filters, f2 = c.spatial_filters, ch = c.n_channels;
        const auto kk = c.temporal_kernel, t0 = c.n_samples, t1 = c.conv_length();
        S* a = cache_.stage1.data() + trial * stage1_size();
        S* z = cache_.conv.data() + trial * f2 * t1;
        const auto tw = param("temporal.weight");
        const auto tb = param("temporal.bias");
        const auto sw = param("spatial.weight");
        const auto sb = param("spatial.bias");
        if (c.conv_order == ConvOrder::temporal_first) {
            // a[f1][c][t] = Σ_k tw[f1,k] x[c][t+k] + tb[f1]
            for (std::size_t f = 0; f < f1; ++f)
                for (std::size_t cc = 0; cc < ch; ++cc) {
                    S* out = a + (f * ch + cc) * t1;
                    std::fill_n(out, t1, tb[f]);
                    const S* in = x.data() + cc * t0;
                    for (std::size_t k = 0; k < kk; ++k) {
                        const S wk = tw[f * kk + k];
                        for (std::size_t t = 0; t < t1; ++t)
                            out[t] += wk * in[t + k];
                    }
                }
            // z[f2][t] = Σ_{f1,c} sw[f2,f1,c] a[f1][c][t] + sb[f2]
            for (std::size_t g = 0; g < f2; ++g) {
                S* out = z + g * t1;
                std::fill_n(out, t1, sb[g]);
                for (std::size_t m = 0; m < f1 * ch; ++m) {
                    const S wm = sw[g * f1 * ch + m];
                    const S* in = a + m * t1;
                    for (std::size_t t = 0; t < t1; ++t)
                        out[t] += wm * in[t];
                }
            }
        } else {
            // a[f1][t] = Σ_c sw[f1,c] x[c][t] + sb[f1]
            for (std::size_t f = 0; f < f1; ++f) {
                S* out = a + f * t0;
                std::fill_n(out, t0, sb[f]);
                for (std::size_t cc = 0; cc < ch; ++cc) {
                    const S wc = sw[f * ch + cc];
                    const S* in = x.data() + cc * t0;
                    for (std::size_t t = 0; t < t0; ++t)
                        out[t] += wc * in[t];
                }
            }
            // z[f2][t] = Σ_{f1,k} tw[f2,f1,k] a[f1][t+k] + tb[f2]
            for (std::size_t g = 0; g < f2; ++g) {
                S* out = z + g * t1;
                std::fill_n(out, t1, tb[g]);
                for (std::size_t f = 0; f < f1; ++f)
                    for (std::size_t k = 0; k < kk; ++k) {
                        const S wk = tw[(g * f1 + f) * kk + k];
                        const S* in = a + f * t0 + k;
                        for (std::size_t t = 0; t < t1; ++t)
                            out[t] += wk * in[t];
                    }
            }
        }
    }

    void conv_backward(std::span<const S> x, std::size_t trial, std::span<const S> dz)
    {
        const auto& c = config_;
        const auto f1 = c.temporal_filters, f2 = c.spatial_filters, ch = c.n_channels;
        const auto kk = c.temporal_kernel, t0 = c.n_samples, t1 = c.conv_length();
        const S* a = cache_.stage1.data() + trial * stage1_size();
        const auto sw = param("spatial.weight");
        const auto tw = param("temporal.weight");
        auto dsw = grad("spatial.weight");
        auto dsb = grad("spatial.bias");
        auto dtw = grad("temporal.weight");
        auto dtb = grad("temporal.bias");
        if (c.conv_order == ConvOrder::temporal_first) {
            std::vector<S> da(f1 * ch * t1, S(0));
            for (std::size_t g = 0; g < f2; ++g) {
                const S* dzg = dz.data() + g * t1;
                S bias_acc = 0;
                for (std::size_t t = 0; t < t1; ++t)
                    bias_acc += dzg[t];
                dsb[g] += bias_acc;
                for (std::size_t m = 0; m < f1 * ch; ++m) {
                    const S* am = a + m * t1;
                    S* dam = da.data() + m * t1;
                    const S wm = sw[g * f1 * ch + m];
                    S acc = 0;
                    for (std::size_t t = 0; t < t1; ++t) {
                        acc += dzg[t] * am[t];
                        dam[t] += wm * dzg[t];
                    }
                    dsw[g * f1 * ch + m] += acc;
                }
            }
            for (std::size_t f = 0; f < f1; ++f)
                for (std::size_t cc = 0; cc < ch; ++cc) {
                    const S* daf = da.data() + (f * ch + cc) * t1;
                    const S* in = x.data() + cc * t0;
                    S bias_acc = 0;
                    for (std::size_t t = 0; t < t1; ++t)
                        bias_acc += daf[t];
                    dtb[f] += bias_acc;
                    for (std::size_t k = 0; k < kk; ++k) {
                        S acc = 0;
                        for (std::size_t t = 0; t < t1; ++t)
                            acc += daf[t] * in[t + k];
                        dtw[f * kk + k] += acc;
                    }
                }
        } else {
            std::vector<S> da(f1 * t0, S(0));
            for (std::size_t g = 0; g < f2; ++g) {
                const S* dzg = dz.data() + g * t1;
                S bias_acc = 0;
                for (std::size_t t = 0; t < t1; ++t)
                    bias_acc += dzg[t];
                dtb[g] += bias_acc;
                for (std::size_t f = 0; f < f1; ++f)
                    for (std::size_t k = 0; k < kk; ++k) {
                        const S* in = a + f * t0 + k;
                        S* dain = da.data() + f * t0 + k;
                        const S wk = tw[(g * f1 + f) * kk + k];
                        S acc = 0;
                        for (std::size_t t = 0; t < t1; ++t) {
                            acc += dzg[t] * in[t];
                            dain[t] += wk * dzg[t];
                        }
                        dtw[(g * f1 + f) * kk + k] += acc;
                    }
            }
            for (std::size_t f = 0; f < f1; ++f) {
                const S* daf = da.data() + f * t0;
                S bias_acc = 0;
                for (std::size_t t = 0; t < t0; ++t)
                    bias_acc += daf[t];
                dsb[f] += bias_acc;
                for (std::size_t cc = 0; cc < ch; ++cc) {
                    const S* in = x.data() + cc * t0;
                    S acc = 0;
                    for (std::size_t t = 0; t < t0; ++t)
                        acc += daf[t] * in[t];
                    dsw[f * ch + cc] += acc;
                }
            }
        }
    }

    struct Cache {
        std::size_t n = 0;
        bool train = false;
        std::vector<S> input, stage1, conv, bn, features, mask;
        std::vector<double> mean, inv_std;
    };

    DecoderConfig config_;
    std::vector<ParamInfo> layout_;
    std::size_t total_ = 0;
    std::vector<S> params_, grads_;
    std::vector<S> running_mean_, running_var_;
    Cache cache_;
};

struct GradientCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t checked = 0;
    bool all_finite = true;
};

/// Compares analytic gradients of the mean cross-entropy against central
/// differences (step h) in double precision, dropout disabled, train-mode
/// batch norm. Relative error is |a - n| / max(|a|, |n|, 1e-6).
GradientCheckResult gradient_check(DecoderConfig config, std::uint64_t seed, double h = 1e-5,
                                   std::size_t batch = 4, bool zero_input = false);

/// Small architecture used by gradient checks and smoke runs.
DecoderConfig tiny_decoder_config(std::size_t n_channels = 2, std::size_t n_samples = 40);

/// Single-file checkpoint: one JSON header line (config plus array table),
/// then the arrays as raw little-endian float32 in table order.
void save_checkpoint(const DecoderModel<float>& model, const std::filesystem::path& path,
                     const nlohmann::json& extra = nlohmann::json::object());
DecoderModel<float> load_checkpoint(const std::filesystem::path& path, nlohmann::json* extra = nullptr);

} // namespace chatbci
