// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chatbci/analysis.hpp>
#include <chatbci/raster.hpp>
#include <chatbci/training.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace chatbci {

/// Fixed class → colour map; unknown classes fall back to a palette by index.
Rgb class_color(const std::string& class_name, std::size_t index);

struct ErpFigureSpec {
    std::vector<std::string> channels{"Fz", "C3", "Cz", "C4", "Pz", "EOG1", "EOG3"};
    /// Grey-filled window (ms, ERP time axis).
    std::pair<double, double> fixation_ms{0.0, 2000.0};
    /// Black-outlined window: cue shown for 1.25 s.
    std::pair<double, double> cue_ms{2000.0, 3250.0};
    /// Visible x range; the full time axis when unset.
    std::optional<std::pair<double, double>> x_range_ms;
    std::string title = "ERP";
    int columns = 1;
    int panel_width = 520;
    int panel_height = 150;

    /// The [1500, 3500] ms framing around cue onset.
    static ErpFigureSpec zoom();
    nlohmann::json to_json() const;
    static ErpFigureSpec from_json(const nlohmann::json& j);
};

struct CurvesFigureSpec {
    std::string title = "Learning curves";
    int columns = 3;
    int panel_width = 300;
    int panel_height = 120;

    nlohmann::json to_json() const;
    static CurvesFigureSpec from_json(const nlohmann::json& j);
};

struct Figure {
    std::string figure_id;
    std::vector<std::uint8_t> png;
    /// Exact plotted arrays and layout; the testable artifact.
    nlohmann::json sidecar;
};

/// One panel per spec channel, one trace per class, fixation and cue
/// overlays. Throws SpecError for channels missing from `erp`.
Figure erp_figure(const ErpResult& erp, const ErpFigureSpec& spec = {});

/// One panel per run with train/val accuracy (top) and loss (bottom).
/// Throws SpecError for an empty run list or a run without metrics.
Figure curves_figure(const std::vector<TrainRun>& runs, const CurvesFigureSpec& spec = {});

/// Writes <dir>/<id>.png and <dir>/<id>.data.json; returns the PNG path.
std::filesystem::path save_figure(const Figure& figure, const std::filesystem::path& dir);

} // namespace chatbci
