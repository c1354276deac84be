// Copyright 2026 ChatBCI Authors
// SPDX-License-Identifier: Apache-2.0

#include <chatbci/error.hpp>
#include <chatbci/raster.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>

#include <png.h>

namespace chatbci {

namespace {

// Column-major 5x7 glyphs for ASCII 0x20..0x7E, bit 0 at the top.
constexpr std::uint8_t kFont[95][5] = {
    {0x00, 0x00, 0x00, 0x00, 0x00}, {0x00, 0x00, 0x5F, 0x00, 0x00}, {0x00, 0x07, 0x00, 0x07, 0x00},
    {0x14, 0x7F, 0x14, 0x7F, 0x14}, {0x24, 0x2A, 0x7F, 0x2A, 0x12}, {0x23, 0x13, 0x08, 0x64, 0x62},
    {0x36, 0x49, 0x55, 0x22, 0x50}, {0x00, 0x05, 0x03, 0x00, 0x00}, {0x00, 0x1C, 0x22, 0x41, 0x00},
    {0x00, 0x41, 0x22, 0x1C, 0x00}, {0x08, 0x2A, 0x1C, 0x2A, 0x08}, {0x08, 0x08, 0x3E, 0x08, 0x08},
    {0x00, 0x50, 0x30, 0x00, 0x00}, {0x08, 0x08, 0x08, 0x08, 0x08}, {0x00, 0x60, 0x60, 0x00, 0x00},
    {0x20, 0x10, 0x08, 0x04, 0x02}, {0x3E, 0x51, 0x49, 0x45, 0x3E}, {0x00, 0x42, 0x7F, 0x40, 0x00},
    {0x42, 0x61, 0x51, 0x49, 0x46}, {0x21, 0x41, 0x45, 0x4B, 0x31}, {0x18, 0x14, 0x12, 0x7F, 0x10},
    {0x27, 0x45, 0x45, 0x45, 0x39}, {0x3C, 0x4A, 0x49, 0x49, 0x30}, {0x01, 0x71, 0x09, 0x05, 0x03},
    {0x36, 0x49, 0x49, 0x49, 0x36}, {0x06, 0x49, 0x49, 0x29, 0x1E}, {0x00, 0x36, 0x36, 0x00, 0x00},
    {0x00, 0x56, 0x36, 0x00, 0x00}, {0x00, 0x08, 0x14, 0x22, 0x41}, {0x14, 0x14, 0x14, 0x14, 0x14},
    {0x41, 0x22, 0x14, 0x08, 0x00}, {0x02, 0x01, 0x51, 0x09, 0x06}, {0x32, 0x49, 0x79, 0x41, 0x3E},
    {0x7E, 0x11, 0x11, 0x11, 0x7E}, {0x7F, 0x49, 0x49, 0x49, 0x36}, {0x3E, 0x41, 0x41, 0x41, 0x22},
    {0x7F, 0x41, 0x41, 0x22, 0x1C}, {0x7F, 0x49, 0x49, 0x49, 0x41}, {0x7F, 0x09, 0x09, 0x01, 0x01},
    {0x3E, 0x41, 0x41, 0x51, 0x32}, {0x7F, 0x08, 0x08, 0x08, 0x7F}, {0x00, 0x41, 0x7F, 0x41, 0x00},
    {0x20, 0x40, 0x41, 0x3F, 0x01}, {0x7F, 0x08, 0x14, 0x22, 0x41}, {0x7F, 0x40, 0x40, 0x40, 0x40},
    {0x7F, 0x02, 0x04, 0x02, 0x7F}, {0x7F, 0x04, 0x08, 0x10, 0x7F}, {0x3E, 0x41, 0x41, 0x41, 0x3E},
    {0x7F, 0x09, 0x09, 0x09, 0x06}, {0x3E, 0x41, 0x51, 0x21, 0x5E}, {0x7F, 0x09, 0x19, 0x29, 0x46},
    {0x46, 0x49, 0x49, 0x49, 0x31}, {0x01, 0x01, 0x7F, 0x01, 0x01}, {0x3F, 0x40, 0x40, 0x40, 0x3F},
    {0x1F, 0x20, 0x40, 0x20, 0x1F}, {0x7F, 0x20, 0x18, 0x20, 0x7F}, {0x63, 0x14, 0x08, 0x14, 0x63},
    {0x03, 0x04, 0x78, 0x04, 0x03}, {0x61, 0x51, 0x49, 0x45, 0x43}, {0x00, 0x00, 0x7F, 0x41, 0x41},
    {0x02, 0x04, 0x08, 0x10, 0x20}, {0x41, 0x41, 0x7F, 0x00, 0x00}, {0x04, 0x02, 0x01, 0x02, 0x04},
    {0x40, 0x40, 0x40, 0x40, 0x40}, {0x00, 0x01, 0x02, 0x04, 0x00}, {0x20, 0x54, 0x54, 0x54, 0x78},
    {0x7F, 0x48, 0x44, 0x44, 0x38}, {0x38, 0x44, 0x44, 0x44, 0x20}, {0x38, 0x44, 0x44, 0x48, 0x7F},
    {0x38, 0x54, 0x54, 0x54, 0x18}, {0x08, 0x7E, 0x09, 0x01, 0x02}, {0x08, 0x14, 0x54, 0x54, 0x3C},
    {0x7F, 0x08, 0x04, 0x04, 0x78}, {0x00, 0x44, 0x7D, 0x40, 0x00}, {0x20, 0x40, 0x44, 0x3D, 0x00},
    {0x00, 0x7F, 0x10, 0x28, 0x44}, {0x00, 0x41, 0x7F, 0x40, 0x00}, {0x7C, 0x04, 0x18, 0x04, 0x78},
    {0x7C, 0x08, 0x04, 0x04, 0x78}, {0x38, 0x44, 0x44, 0x44, 0x38}, {0x7C, 0x14, 0x14, 0x14, 0x08},
    {0x08, 0x14, 0x14, 0x18, 0x7C}, {0x7C, 0x08, 0x04, 0x04, 0x08}, {0x48, 0x54, 0x54, 0x54, 0x20},
    {0x04, 0x3F, 0x44, 0x40, 0x20}, {0x3C, 0x40, 0x40, 0x20, 0x7C}, {0x1C, 0x20, 0x40, 0x20, 0x1C},
    {0x3C, 0x40, 0x30, 0x40, 0x3C}, {0x44, 0x28, 0x10, 0x28, 0x44}, {0x0C, 0x50, 0x50, 0x50, 0x3C},
    {0x44, 0x64, 0x54, 0x4C, 0x44}, {0x00, 0x08, 0x36, 0x41, 0x00}, {0x00, 0x00, 0x7F, 0x00, 0x00},
    {0x00, 0x41, 0x36, 0x08, 0x00}, {0x08, 0x08, 0x2A, 0x1C, 0x08},
};

void write_to_vector(png_structp png, png_bytep data, png_size_t length)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

struct ReadState {
    const std::vector<std::uint8_t>* bytes;
    std::size_t pos = 0;
};

void read_from_vector(png_structp png, png_bytep out, png_size_t length)
{
    auto* st = static_cast<ReadState*>(png_get_io_ptr(png));
    if (st->pos + length > st->bytes->size())
        png_error(png, "truncated PNG");
    std::memcpy(out, st->bytes->data() + st->pos, length);
    st->pos += length;
}

} // namespace

Canvas::Canvas(int width, int height, Rgb bg)
    : width_(width), height_(height), data_(static_cast<std::size_t>(width * height * 3))
{
    if (width <= 0 || height <= 0)
        throw SpecError("canvas size must be positive");
    for (std::size_t i = 0; i < data_.size(); i += 3) {
        data_[i] = bg.r;
        data_[i + 1] = bg.g;
        data_[i + 2] = bg.b;
    }
}

Rgb Canvas::pixel(int x, int y) const
{
    const auto i = static_cast<std::size_t>((y * width_ + x) * 3);
    return {data_[i], data_[i + 1], data_[i + 2]};
}

void Canvas::set(int x, int y, Rgb c)
{
    if (x < 0 || y < 0 || x >= width_ || y >= height_)
        return;
    const auto i = static_cast<std::size_t>((y * width_ + x) * 3);
    data_[i] = c.r;
    data_[i + 1] = c.g;
    data_[i + 2] = c.b;
}

void Canvas::blend(int x, int y, Rgb c, double alpha)
{
    if (x < 0 || y < 0 || x >= width_ || y >= height_)
        return;
    const auto p = pixel(x, y);
    auto mix = [alpha](std::uint8_t a, std::uint8_t b) {
        return static_cast<std::uint8_t>(std::lround(a * (1.0 - alpha) + b * alpha));
    };
    set(x, y, {mix(p.r, c.r), mix(p.g, c.g), mix(p.b, c.b)});
}

void Canvas::line(double x0, double y0, double x1, double y1, Rgb c, int thickness)
{
    const double dx = x1 - x0, dy = y1 - y0;
    const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))));
    const int half = thickness / 2;
    for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        const int x = static_cast<int>(std::lround(x0 + t * dx));
        const int y = static_cast<int>(std::lround(y0 + t * dy));
        for (int oy = -half; oy < thickness - half; ++oy)
            for (int ox = -half; ox < thickness - half; ++ox)
                set(x + ox, y + oy, c);
    }
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Rgb c, double alpha)
{
    if (x0 > x1)
        std::swap(x0, x1);
    if (y0 > y1)
        std::swap(y0, y1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            alpha >= 1.0 ? set(x, y, c) : blend(x, y, c, alpha);
}

void Canvas::rect(int x0, int y0, int x1, int y1, Rgb c, int thickness)
{
    for (int t = 0; t < thickness; ++t) {
        line(x0 + t, y0 + t, x1 - t, y0 + t, c);
        line(x0 + t, y1 - t, x1 - t, y1 - t, c);
        line(x0 + t, y0 + t, x0 + t, y1 - t, c);
        line(x1 - t, y0 + t, x1 - t, y1 - t, c);
    }
}

void Canvas::text(int x, int y, std::string_view s, Rgb c, int scale)
{
    for (const char ch : s) {
        const int code = static_cast<unsigned char>(ch);
        const auto* glyph = kFont[(code >= 0x20 && code <= 0x7E) ? code - 0x20 : '?' - 0x20];
        for (int col = 0; col < 5; ++col)
            for (int row = 0; row < 7; ++row)
                if (glyph[col] & (1 << row))
                    fill_rect(x + col * scale, y + row * scale, x + col * scale + scale - 1,
                              y + row * scale + scale - 1, c);
        x += 6 * scale;
    }
}

std::vector<std::uint8_t> Canvas::encode_png() const
{
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw IOError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, info ? &info : nullptr);
        throw IOError("PNG encoding failed");
    }
    png_set_write_fn(png, &out, write_to_vector, flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width_), static_cast<png_uint_32>(height_), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height_; ++y)
        png_write_row(png, const_cast<png_bytep>(data_.data() + static_cast<std::size_t>(y * width_ * 3)));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

DecodedPng decode_png(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8))
        throw FormatError("not a PNG file");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    DecodedPng out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError("PNG decoding failed");
    }
    ReadState st{&bytes, 0};
    png_set_read_fn(png, &st, read_from_vector);
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    const auto rowbytes = png_get_rowbytes(png, info);
    out.rgb.resize(rowbytes * static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y)
        png_read_row(png, out.rgb.data() + rowbytes * static_cast<std::size_t>(y), nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

std::vector<double> nice_ticks(double lo, double hi, int target)
{
    if (!(hi > lo) || target < 1)
        return {lo};
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    // Step whose tick count lands closest to the target.
    double step = mag;
    double best = INFINITY;
    for (const double m : {1.0, 2.0, 5.0, 10.0}) {
        const double miss = std::abs((hi - lo) / (m * mag) - target);
        if (miss < best) {
            best = miss;
            step = m * mag;
        }
    }
    std::vector<double> out;
    for (double v = std::ceil(lo / step) * step; v <= hi + step * 1e-9; v += step)
        out.push_back(std::abs(v) < step * 1e-9 ? 0.0 : v);
    return out;
}

} // namespace chatbci
