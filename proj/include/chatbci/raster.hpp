// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace chatbci {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

/// Minimal RGB canvas with lines, rectangles and a 5x7 bitmap font.
class Canvas
{
public:
    Canvas(int width, int height, Rgb background = {255, 255, 255});

    int width() const { return width_; }
    int height() const { return height_; }
    Rgb pixel(int x, int y) const;
    void set(int x, int y, Rgb c);
    /// Alpha-blends `c` over the existing pixel (alpha in [0, 1]).
    void blend(int x, int y, Rgb c, double alpha);

    void line(double x0, double y0, double x1, double y1, Rgb c, int thickness = 1);
    void fill_rect(int x0, int y0, int x1, int y1, Rgb c, double alpha = 1.0);
    void rect(int x0, int y0, int x1, int y1, Rgb c, int thickness = 1);
    /// Text with its top-left corner at (x, y); `scale` multiplies the 5x7 cell.
    void text(int x, int y, std::string_view s, Rgb c, int scale = 1);
    static int text_width(std::string_view s, int scale = 1) { return static_cast<int>(s.size()) * 6 * scale; }

    /// 8-bit RGB PNG without time or text chunks, so output is deterministic.
    std::vector<std::uint8_t> encode_png() const;

private:
    int width_, height_;
    std::vector<std::uint8_t> data_;
};

/// Decodes an 8-bit RGB or RGBA PNG; returns width, height and RGB bytes.
struct DecodedPng {
    int width = 0, height = 0;
    std::vector<std::uint8_t> rgb;

    Rgb pixel(int x, int y) const
    {
        const auto i = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
        return {rgb[i], rgb[i + 1], rgb[i + 2]};
    }
};
DecodedPng decode_png(const std::vector<std::uint8_t>& bytes);

/// 1-2-5 tick positions covering [lo, hi] with about `target` ticks.
std::vector<double> nice_ticks(double lo, double hi, int target = 5);

} // namespace chatbci
