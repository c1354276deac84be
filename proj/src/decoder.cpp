// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/decoder.hpp>
#include <chatbci/util.hpp>

#include <bit>
#include <fstream>

namespace chatbci {

using nlohmann::json;

void DecoderConfig::check() const
{
    if (n_channels == 0 || n_samples == 0 || n_classes < 2 || temporal_filters == 0 || temporal_kernel == 0 ||
        spatial_filters == 0 || pool_length == 0 || pool_stride == 0)
        throw ConfigError("decoder sizes must be positive (and at least 2 classes)");
    if (n_samples <= temporal_kernel + pool_length)
        throw ConfigError("n_samples " + std::to_string(n_samples) + " must exceed temporal_kernel + pool_length (" +
                          std::to_string(temporal_kernel + pool_length) + ")");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0))
        throw ConfigError("dropout_p must lie in [0, 1)");
}

std::size_t DecoderConfig::analytic_parameter_count() const
{
    const auto f1 = temporal_filters, f2 = spatial_filters, k = temporal_kernel, c = n_channels;
    const std::size_t convs = conv_order == ConvOrder::temporal_first ? (f1 * k + f1) + (f2 * f1 * c + f2)
                                                                      : (f1 * c + f1) + (f2 * f1 * k + f2);
    return convs + 2 * f2 + feature_count() * n_classes + n_classes;
}

json DecoderConfig::to_json() const
{
    return {{"n_channels", n_channels},
            {"n_samples", n_samples},
            {"n_classes", n_classes},
            {"temporal_filters", temporal_filters},
            {"temporal_kernel", temporal_kernel},
            {"spatial_filters", spatial_filters},
            {"pool_length", pool_length},
            {"pool_stride", pool_stride},
            {"dropout_p", dropout_p},
            {"include_eog", include_eog},
            {"conv_order", conv_order == ConvOrder::temporal_first ? "temporal_first" : "spatial_first"},
            {"bn_momentum", bn_momentum},
            {"bn_eps", bn_eps}};
}

DecoderConfig DecoderConfig::from_json(const json& j)
{
    DecoderConfig c;
    try {
        c.n_channels = j.value("n_channels", c.n_channels);
        c.n_samples = j.value("n_samples", c.n_samples);
        c.n_classes = j.value("n_classes", c.n_classes);
        c.temporal_filters = j.value("temporal_filters", c.temporal_filters);
        c.temporal_kernel = j.value("temporal_kernel", c.temporal_kernel);
        c.spatial_filters = j.value("spatial_filters", c.spatial_filters);
        c.pool_length = j.value("pool_length", c.pool_length);
        c.pool_stride = j.value("pool_stride", c.pool_stride);
        c.dropout_p = j.value("dropout_p", c.dropout_p);
        c.include_eog = j.value("include_eog", c.include_eog);
        const auto order = j.value("conv_order", std::string("temporal_first"));
        if (order == "temporal_first")
            c.conv_order = ConvOrder::temporal_first;
        else if (order == "spatial_first")
            c.conv_order = ConvOrder::spatial_first;
        else
            throw ConfigError("unknown conv_order '" + order + "'");
        c.bn_momentum = j.value("bn_momentum", c.bn_momentum);
        c.bn_eps = j.value("bn_eps", c.bn_eps);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("decoder config: ") + e.what());
    }
    return c;
}

DecoderConfig tiny_decoder_config(std::size_t n_channels, std::size_t n_samples)
{
    DecoderConfig c;
    c.n_channels = n_channels;
    c.n_samples = n_samples;
    c.temporal_filters = 2;
    c.temporal_kernel = 5;
    c.spatial_filters = 3;
    c.pool_length = 8;
    c.pool_stride = 4;
    c.dropout_p = 0.0;
    return c;
}

GradientCheckResult gradient_check(DecoderConfig config, std::uint64_t seed, double h, std::size_t batch,
                                   bool zero_input)
{
    config.dropout_p = 0.0;
    auto model = DecoderModel<double>::build(config, seed);
    Rng rng(seed + 1);
    std::vector<double> x(batch * config.n_channels * config.n_samples, 0.0);
    if (!zero_input)
        for (auto& v : x)
            v = rng.normal();
    std::vector<int> labels(batch);
    for (std::size_t i = 0; i < batch; ++i)
        labels[i] = static_cast<int>(i % config.n_classes);

    // Running statistics do not enter the train-mode loss; snapshot them so
    // every evaluation starts from the same state anyway.
    const std::vector<double> rm(model.running_mean().begin(), model.running_mean().end());
    const std::vector<double> rv(model.running_var().begin(), model.running_var().end());
    auto loss_at = [&]() {
        std::copy(rm.begin(), rm.end(), model.running_mean().begin());
        std::copy(rv.begin(), rv.end(), model.running_var().begin());
        const auto logits = model.forward(x, batch, true);
        return softmax_cross_entropy<double>(logits, labels, config.n_classes).first;
    };

    model.zero_grad();
    std::vector<double> dlogits;
    const auto logits = model.forward(x, batch, true);
    softmax_cross_entropy<double>(logits, labels, config.n_classes, &dlogits);
    model.backward(dlogits);
    const std::vector<double> analytic(model.gradients().begin(), model.gradients().end());

    GradientCheckResult result;
    auto params = model.parameters();
    for (const auto& info : model.layout()) {
        for (std::size_t i = info.offset; i < info.offset + info.count; ++i) {
            const double saved = params[i];
            params[i] = saved + h;
            const double up = loss_at();
            params[i] = saved - h;
            const double down = loss_at();
            params[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[i];
            if (!std::isfinite(a) || !std::isfinite(numeric))
                result.all_finite = false;
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
            const double rel = std::abs(a - numeric) / denom;
            if (rel > result.max_relative_error || !std::isfinite(rel)) {
                result.max_relative_error = rel;
                result.worst_parameter = info.name + "[" + std::to_string(i - info.offset) + "]";
            }
            ++result.checked;
        }
    }
    return result;
}

namespace {

constexpr const char* kCheckpointFormat = "chatbci-checkpoint";

void append_floats(std::string& out, std::span<const float> values)
{
    for (float v : values) {
        auto bits = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) {
            out.push_back(static_cast<char>(bits & 0xff));
            bits >>= 8;
        }
    }
}

} // namespace

void save_checkpoint(const DecoderModel<float>& model, const std::filesystem::path& path, const json& extra)
{
    json header;
    header["format"] = kCheckpointFormat;
    header["version"] = 1;
    header["config"] = model.config().to_json();
    header["extra"] = extra;
    header["arrays"] = json::array();
    std::size_t offset = 0;
    std::string payload;
    for (const auto& p : model.layout()) {
        header["arrays"].push_back({{"name", p.name}, {"shape", p.shape}, {"offset", offset}, {"count", p.count}});
        append_floats(payload, model.parameters().subspan(p.offset, p.count));
        offset += p.count;
    }
    const auto f2 = model.config().spatial_filters;
    header["arrays"].push_back({{"name", "bn.running_mean"}, {"shape", {f2}}, {"offset", offset}, {"count", f2}});
    append_floats(payload, model.running_mean());
    offset += f2;
    header["arrays"].push_back({{"name", "bn.running_var"}, {"shape", {f2}}, {"offset", offset}, {"count", f2}});
    append_floats(payload, model.running_var());
    write_file_atomic(path, header.dump() + "\n" + payload);
}

DecoderModel<float> load_checkpoint(const std::filesystem::path& path, json* extra)
{
    const auto bytes = read_file(path);
    const auto newline = bytes.find('\n');
    if (newline == std::string::npos)
        throw FormatError("checkpoint has no header line: " + path.string());
    json header;
    try {
        header = json::parse(bytes.substr(0, newline));
    } catch (const json::exception& e) {
        throw FormatError("checkpoint header: " + std::string(e.what()));
    }
    if (header.value("format", "") != kCheckpointFormat)
        throw FormatError("not a chatbci checkpoint: " + path.string());
    auto model = DecoderModel<float>::build(DecoderConfig::from_json(header.at("config")), 0);
    const char* payload = bytes.data() + newline + 1;
    const auto payload_size = bytes.size() - newline - 1;
    auto read_array = [&](const json& entry, std::span<float> dst) {
        const auto off = entry.at("offset").get<std::size_t>();
        const auto count = entry.at("count").get<std::size_t>();
        if (count != dst.size() || (off + count) * 4 > payload_size)
            throw IntegrityError("checkpoint array '" + entry.at("name").get<std::string>() + "' has wrong size");
        for (std::size_t i = 0; i < count; ++i) {
            std::uint32_t bits = 0;
            for (int b = 3; b >= 0; --b)
                bits = (bits << 8) | static_cast<unsigned char>(payload[(off + i) * 4 + static_cast<std::size_t>(b)]);
            dst[i] = std::bit_cast<float>(bits);
        }
    };
    for (const auto& entry : header.at("arrays")) {
        const auto name = entry.at("name").get<std::string>();
        if (name == "bn.running_mean")
            read_array(entry, model.running_mean());
        else if (name == "bn.running_var")
            read_array(entry, model.running_var());
        else
            read_array(entry, model.param(name));
    }
    if (extra)
        *extra = header.value("extra", json::object());
    return model;
}

} // namespace chatbci
