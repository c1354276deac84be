// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/error.hpp>
#include <chatbci/figures.hpp>
#include <chatbci/util.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace chatbci {

using nlohmann::json;

namespace {

constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kGrey{120, 120, 120};
constexpr Rgb kLight{225, 225, 225};
constexpr Rgb kFixation{200, 200, 200};
constexpr Rgb kTrain{31, 119, 180};
constexpr Rgb kVal{214, 39, 40};

constexpr int kMarginLeft = 56;
constexpr int kMarginRight = 12;
constexpr int kMarginTop = 20;
constexpr int kMarginBottom = 26;
constexpr int kHeader = 34;

json rgb_json(Rgb c)
{
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

std::string tick_label(double v)
{
    char buf[32];
    if (std::abs(v) >= 1000 || v == std::round(v))
        std::snprintf(buf, sizeof buf, "%.0f", v);
    else if (std::abs(v) >= 1)
        std::snprintf(buf, sizeof buf, "%.1f", v);
    else
        std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::pair<double, double> padded_range(double lo, double hi)
{
    if (!std::isfinite(lo) || !std::isfinite(hi))
        return {0.0, 1.0};
    if (hi - lo < 1e-12) {
        const double pad = std::max(std::abs(lo) * 0.1, 1e-3);
        return {lo - pad, hi + pad};
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

// Plot area of one panel in pixel coordinates with data → pixel mapping.
struct Axes {
    int x0, y0, x1, y1;
    double xmin, xmax, ymin, ymax;

    double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); }
    double py(double y) const { return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0); }

    void frame(Canvas& c, const std::string& title, const std::string& xlabel, const std::string& ylabel) const
    {
        for (const double t : nice_ticks(ymin, ymax, 4)) {
            const int y = static_cast<int>(std::lround(py(t)));
            c.line(x0, y, x1, y, kLight);
            const auto label = tick_label(t);
            c.text(x0 - 4 - Canvas::text_width(label), y - 3, label, kBlack);
        }
        for (const double t : nice_ticks(xmin, xmax, 6)) {
            const int x = static_cast<int>(std::lround(px(t)));
            c.line(x, y1, x, y1 + 3, kBlack);
            const auto label = tick_label(t);
            c.text(x - Canvas::text_width(label) / 2, y1 + 6, label, kBlack);
        }
        c.rect(x0, y0, x1, y1, kBlack);
        c.text(x0, y0 - 11, title, kBlack);
        if (!xlabel.empty())
            c.text(x1 - Canvas::text_width(xlabel), y1 + 16, xlabel, kGrey);
        if (!ylabel.empty())
            c.text(x0 + 4 + Canvas::text_width(title) + 12, y0 - 11, ylabel, kGrey);
    }

    void polyline(Canvas& c, const std::vector<double>& xs, const std::vector<double>& ys, Rgb color) const
    {
        for (std::size_t i = 1; i < xs.size(); ++i) {
            if (xs[i] < xmin || xs[i - 1] > xmax)
                continue;
            if (!std::isfinite(ys[i - 1]) || !std::isfinite(ys[i]))
                continue;
            c.line(px(xs[i - 1]), py(ys[i - 1]), px(xs[i]), py(ys[i]), color);
        }
    }
};

std::string content_id(const std::string& prefix, const json& sidecar)
{
    return prefix + "-" + to_hex(fnv1a(sidecar.dump())).substr(0, 12);
}

} // namespace

Rgb class_color(const std::string& name, std::size_t index)
{
    static const std::map<std::string, Rgb> fixed{{"left_hand", {31, 119, 180}},
                                                  {"right_hand", {214, 39, 40}},
                                                  {"feet", {44, 160, 44}},
                                                  {"tongue", {148, 103, 189}}};
    static const Rgb palette[] = {{255, 127, 14}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127},
                                  {188, 189, 34}, {23, 190, 207}};
    if (const auto it = fixed.find(name); it != fixed.end())
        return it->second;
    return palette[index % std::size(palette)];
}

ErpFigureSpec ErpFigureSpec::zoom()
{
    ErpFigureSpec s;
    s.x_range_ms = std::pair{1500.0, 3500.0};
    s.title = "ERP (zoom)";
    return s;
}

json ErpFigureSpec::to_json() const
{
    json j{{"channels", channels},
           {"fixation_ms", {fixation_ms.first, fixation_ms.second}},
           {"cue_ms", {cue_ms.first, cue_ms.second}},
           {"title", title},
           {"columns", columns},
           {"panel_width", panel_width},
           {"panel_height", panel_height}};
    j["x_range_ms"] = x_range_ms ? json{x_range_ms->first, x_range_ms->second} : json(nullptr);
    return j;
}

ErpFigureSpec ErpFigureSpec::from_json(const json& j)
{
    ErpFigureSpec s;
    try {
        s.channels = j.value("channels", s.channels);
        if (j.contains("fixation_ms"))
            s.fixation_ms = {j["fixation_ms"].at(0).get<double>(), j["fixation_ms"].at(1).get<double>()};
        if (j.contains("cue_ms"))
            s.cue_ms = {j["cue_ms"].at(0).get<double>(), j["cue_ms"].at(1).get<double>()};
        if (j.contains("x_range_ms") && !j["x_range_ms"].is_null())
            s.x_range_ms = std::pair{j["x_range_ms"].at(0).get<double>(), j["x_range_ms"].at(1).get<double>()};
        s.title = j.value("title", s.title);
        s.columns = j.value("columns", s.columns);
        s.panel_width = j.value("panel_width", s.panel_width);
        s.panel_height = j.value("panel_height", s.panel_height);
    } catch (const json::exception& e) {
        throw SpecError(std::string("ERP figure spec: ") + e.what());
    }
    return s;
}

json CurvesFigureSpec::to_json() const
{
    return {{"title", title}, {"columns", columns}, {"panel_width", panel_width}, {"panel_height", panel_height}};
}

CurvesFigureSpec CurvesFigureSpec::from_json(const json& j)
{
    CurvesFigureSpec s;
    s.title = j.value("title", s.title);
    s.columns = j.value("columns", s.columns);
    s.panel_width = j.value("panel_width", s.panel_width);
    s.panel_height = j.value("panel_height", s.panel_height);
    return s;
}

Figure erp_figure(const ErpResult& erp, const ErpFigureSpec& spec)
{
    if (spec.channels.empty())
        throw SpecError("ERP figure needs at least one channel");
    if (spec.columns < 1 || spec.panel_width < 120 || spec.panel_height < 60)
        throw SpecError("ERP figure layout too small");
    if (erp.time_ms.empty())
        throw SpecError("ERP result has no samples");
    std::vector<std::size_t> idx;
    for (const auto& ch : spec.channels)
        idx.push_back(erp.channel_index(ch));  // SpecError on unknown channel

    const double t0 = spec.x_range_ms ? spec.x_range_ms->first : erp.time_ms.front();
    const double t1 = spec.x_range_ms ? spec.x_range_ms->second : erp.time_ms.back();
    if (!(t1 > t0))
        throw SpecError("empty x range");

    json sidecar;
    sidecar["kind"] = "erp";
    sidecar["spec"] = spec.to_json();
    sidecar["time_ms"] = erp.time_ms;
    sidecar["class_order"] = erp.class_names;
    sidecar["trial_counts"] = erp.trial_counts;
    sidecar["class_colors"] = json::object();
    for (std::size_t k = 0; k < erp.class_names.size(); ++k)
        sidecar["class_colors"][erp.class_names[k]] = rgb_json(class_color(erp.class_names[k], k));
    sidecar["overlays"] = {{{"kind", "fixation"}, {"style", "grey_fill"}, {"ms", {spec.fixation_ms.first, spec.fixation_ms.second}}},
                           {{"kind", "cue"}, {"style", "black_outline"}, {"ms", {spec.cue_ms.first, spec.cue_ms.second}}}};
    sidecar["x_range_ms"] = {t0, t1};
    sidecar["units"] = {{"x", "ms"}, {"y", "uV"}};
    sidecar["panels"] = json::array();

    const int n = static_cast<int>(spec.channels.size());
    const int rows = (n + spec.columns - 1) / spec.columns;
    const int cell_w = kMarginLeft + spec.panel_width + kMarginRight;
    const int cell_h = kMarginTop + spec.panel_height + kMarginBottom;
    Canvas canvas(spec.columns * cell_w, kHeader + rows * cell_h);
    canvas.text(8, 6, spec.title, kBlack, 2);
    int lx = 8 + Canvas::text_width(spec.title, 2) + 24;
    for (std::size_t k = 0; k < erp.class_names.size(); ++k) {
        const auto color = class_color(erp.class_names[k], k);
        canvas.fill_rect(lx, 10, lx + 14, 13, color);
        canvas.text(lx + 18, 8, erp.class_names[k], kBlack);
        lx += 18 + Canvas::text_width(erp.class_names[k]) + 16;
    }

    for (int p = 0; p < n; ++p) {
        const auto ch = idx[static_cast<std::size_t>(p)];
        double lo = INFINITY, hi = -INFINITY;
        for (std::size_t k = 0; k < erp.class_names.size(); ++k) {
            const auto& w = erp.waveform[k][ch];
            for (std::size_t i = 0; i < w.size(); ++i)
                if (erp.time_ms[i] >= t0 && erp.time_ms[i] <= t1) {
                    lo = std::min(lo, w[i]);
                    hi = std::max(hi, w[i]);
                }
        }
        const auto [ymin, ymax] = padded_range(lo, hi);
        const int col = p % spec.columns, row = p / spec.columns;
        const int ox = col * cell_w + kMarginLeft, oy = kHeader + row * cell_h + kMarginTop;
        const Axes ax{ox, oy, ox + spec.panel_width, oy + spec.panel_height, t0, t1, ymin, ymax};

        auto box = [&](std::pair<double, double> ms) {
            return std::pair{static_cast<int>(std::lround(ax.px(std::max(ms.first, t0)))),
                             static_cast<int>(std::lround(ax.px(std::min(ms.second, t1))))};
        };
        if (spec.fixation_ms.second > t0 && spec.fixation_ms.first < t1) {
            const auto [a, b] = box(spec.fixation_ms);
            canvas.fill_rect(a, ax.y0, b, ax.y1, kFixation, 0.6);
        }
        ax.frame(canvas, spec.channels[static_cast<std::size_t>(p)], p == n - 1 ? "ms" : "", "uV");
        if (ymin < 0 && ymax > 0)
            canvas.line(ax.x0, ax.py(0), ax.x1, ax.py(0), kGrey);
        if (spec.cue_ms.second > t0 && spec.cue_ms.first < t1) {
            const auto [a, b] = box(spec.cue_ms);
            canvas.rect(a, ax.y0 + 1, b, ax.y1 - 1, kBlack, 2);
        }

        json panel{{"channel", spec.channels[static_cast<std::size_t>(p)]},
                   {"channel_kind", to_string(erp.channel_kinds[ch])},
                   {"y_range", {ymin, ymax}},
                   {"traces", json::array()}};
        for (std::size_t k = 0; k < erp.class_names.size(); ++k) {
            const auto color = class_color(erp.class_names[k], k);
            ax.polyline(canvas, erp.time_ms, erp.waveform[k][ch], color);
            panel["traces"].push_back(
                {{"class", erp.class_names[k]}, {"color", rgb_json(color)}, {"values", erp.waveform[k][ch]}});
        }
        sidecar["panels"].push_back(std::move(panel));
    }

    Figure fig;
    fig.figure_id = content_id("erp", sidecar);
    sidecar["figure_id"] = fig.figure_id;
    fig.sidecar = std::move(sidecar);
    fig.png = canvas.encode_png();
    return fig;
}

Figure curves_figure(const std::vector<TrainRun>& runs, const CurvesFigureSpec& spec)
{
    if (runs.empty())
        throw SpecError("curves figure needs at least one run");
    if (spec.columns < 1 || spec.panel_width < 120 || spec.panel_height < 60)
        throw SpecError("curves figure layout too small");
    for (const auto& r : runs)
        if (r.epochs.empty())
            throw SpecError("run '" + r.run_id + "' has no metrics");

    json sidecar;
    sidecar["kind"] = "curves";
    sidecar["spec"] = spec.to_json();
    sidecar["series_colors"] = {{"train", rgb_json(kTrain)}, {"val", rgb_json(kVal)}};
    sidecar["panels"] = json::array();

    const int n = static_cast<int>(runs.size());
    const int cols = std::min(spec.columns, n);
    const int rows = (n + cols - 1) / cols;
    const int sub_h = spec.panel_height;
    const int cell_w = kMarginLeft + spec.panel_width + kMarginRight;
    const int cell_h = 2 * (kMarginTop + sub_h + kMarginBottom);
    Canvas canvas(cols * cell_w, kHeader + rows * cell_h);
    canvas.text(8, 6, spec.title, kBlack, 2);
    int lx = 8 + Canvas::text_width(spec.title, 2) + 24;
    for (const auto& [name, color] : {std::pair{"train", kTrain}, std::pair{"val", kVal}}) {
        canvas.fill_rect(lx, 10, lx + 14, 13, color);
        canvas.text(lx + 18, 8, name, kBlack);
        lx += 18 + Canvas::text_width(name) + 16;
    }

    for (int p = 0; p < n; ++p) {
        const auto& run = runs[static_cast<std::size_t>(p)];
        std::vector<double> ep, tr_acc, va_acc, tr_loss, va_loss;
        json metrics = json::array();
        for (const auto& e : run.epochs) {
            ep.push_back(static_cast<double>(e.epoch));
            tr_acc.push_back(e.train_acc);
            va_acc.push_back(e.val_acc);
            tr_loss.push_back(e.train_loss);
            va_loss.push_back(e.val_loss);
            metrics.push_back(e.to_json());
        }
        auto range = [](const std::vector<double>& a, const std::vector<double>& b) {
            double lo = INFINITY, hi = -INFINITY;
            for (const auto* v : {&a, &b})
                for (const double x : *v)
                    if (std::isfinite(x)) {
                        lo = std::min(lo, x);
                        hi = std::max(hi, x);
                    }
            return padded_range(lo, hi);
        };
        const auto acc_range = range(tr_acc, va_acc);
        const auto loss_range = range(tr_loss, va_loss);
        const double xmax = std::max(ep.back(), ep.front() + 1.0);

        const int col = p % cols, row = p / cols;
        const int ox = col * cell_w + kMarginLeft;
        const int oy = kHeader + row * cell_h + kMarginTop;
        const Axes acc{ox, oy, ox + spec.panel_width, oy + sub_h, ep.front(), xmax, acc_range.first, acc_range.second};
        const int oy2 = oy + sub_h + kMarginBottom + kMarginTop;
        const Axes loss{ox, oy2, ox + spec.panel_width, oy2 + sub_h, ep.front(), xmax, loss_range.first,
                        loss_range.second};
        const auto label = run.subject_id.empty() ? run.run_id : run.subject_id + " " + run.run_id;
        acc.frame(canvas, label + " accuracy", "", "");
        loss.frame(canvas, "loss", "epoch", "");
        acc.polyline(canvas, ep, tr_acc, kTrain);
        acc.polyline(canvas, ep, va_acc, kVal);
        loss.polyline(canvas, ep, tr_loss, kTrain);
        loss.polyline(canvas, ep, va_loss, kVal);

        sidecar["panels"].push_back({{"run_id", run.run_id},
                                     {"subject_id", run.subject_id},
                                     {"metrics", std::move(metrics)},
                                     {"accuracy_y_range", {acc_range.first, acc_range.second}},
                                     {"loss_y_range", {loss_range.first, loss_range.second}}});
    }

    Figure fig;
    fig.figure_id = content_id("curves", sidecar);
    sidecar["figure_id"] = fig.figure_id;
    fig.sidecar = std::move(sidecar);
    fig.png = canvas.encode_png();
    return fig;
}

std::filesystem::path save_figure(const Figure& figure, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    const auto png = dir / (figure.figure_id + ".png");
    write_file_atomic(png, std::string_view(reinterpret_cast<const char*>(figure.png.data()), figure.png.size()));
    write_file_atomic(dir / (figure.figure_id + ".data.json"), figure.sidecar.dump() + "\n");
    return png;
}

} // namespace chatbci
