#include "evkit/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace evk {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageU8 read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("failed to decode " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error(path + ": unsupported channel count " + std::to_string(channels));
    }

    ImageU8 img;
    img.width = int(w);
    img.height = int(h);
    img.channels = channels;
    img.data.resize(size_t(w) * h * channels);

    std::vector<png_bytep> rows(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = img.data.data() + size_t(y) * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const ImageU8& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3)
        throw std::runtime_error("write_png: unsupported channel count " +
                                 std::to_string(img.channels));
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot open " + path + " for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("failed to encode " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_bytep> rows(size_t(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[size_t(y)] = const_cast<png_bytep>(img.data.data() +
                                                size_t(y) * img.width * img.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageU8 to_rgb(const ImageU8& img) {
    if (img.channels == 3) return img;
    ImageU8 out;
    out.width = img.width;
    out.height = img.height;
    out.channels = 3;
    out.data.resize(img.data.size() * 3);
    for (size_t i = 0; i < img.data.size(); ++i) {
        out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = img.data[i];
    }
    return out;
}

ImageU8 hflip_image(const ImageU8& img) {
    ImageU8 out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(img.width - 1 - x, y, c) = img.at(x, y, c);
    return out;
}

ImageU8 warp_affine_nn(const ImageU8& src, const std::array<double, 6>& m, uint8_t fill) {
    ImageU8 out = ImageU8::filled(src.width, src.height, src.channels, fill);
    for (int oy = 0; oy < out.height; ++oy) {
        double cy = oy + 0.5;
        for (int ox = 0; ox < out.width; ++ox) {
            double cx = ox + 0.5;
            // pixel-center convention: pixel i covers [i, i+1)
            int sx = int(std::floor(m[0] * cx + m[1] * cy + m[2]));
            int sy = int(std::floor(m[3] * cx + m[4] * cy + m[5]));
            if (src.in_bounds(sx, sy))
                for (int c = 0; c < src.channels; ++c) out.at(ox, oy, c) = src.at(sx, sy, c);
        }
    }
    return out;
}

ImageU8 crop_image(const ImageU8& src, int x0, int y0, int w, int h) {
    if (w <= 0 || h <= 0 || x0 < 0 || y0 < 0 || x0 + w > src.width || y0 + h > src.height)
        throw std::invalid_argument("crop_image: degenerate or out-of-bounds region");
    ImageU8 out;
    out.width = w;
    out.height = h;
    out.channels = src.channels;
    out.data.resize(size_t(w) * h * src.channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < src.channels; ++c) out.at(x, y, c) = src.at(x0 + x, y0 + y, c);
    return out;
}

namespace {

void put_pixel(ImageU8& img, int x, int y, Rgb color) {
    if (!img.in_bounds(x, y)) return;
    if (img.channels == 1) {
        img.at(x, y) = uint8_t((color[0] * 299 + color[1] * 587 + color[2] * 114) / 1000);
    } else {
        img.at(x, y, 0) = color[0];
        img.at(x, y, 1) = color[1];
        img.at(x, y, 2) = color[2];
    }
}

struct Glyph {
    char ch;
    uint8_t rows[7];  // 5 bits per row, MSB-4 = leftmost column
};

// clang-format off
const Glyph kFont[] = {
    {'0', {0x0e,0x11,0x13,0x15,0x19,0x11,0x0e}},
    {'1', {0x04,0x0c,0x04,0x04,0x04,0x04,0x0e}},
    {'2', {0x0e,0x11,0x01,0x02,0x04,0x08,0x1f}},
    {'3', {0x1f,0x02,0x04,0x02,0x01,0x11,0x0e}},
    {'4', {0x02,0x06,0x0a,0x12,0x1f,0x02,0x02}},
    {'5', {0x1f,0x10,0x1e,0x01,0x01,0x11,0x0e}},
    {'6', {0x06,0x08,0x10,0x1e,0x11,0x11,0x0e}},
    {'7', {0x1f,0x01,0x02,0x04,0x08,0x08,0x08}},
    {'8', {0x0e,0x11,0x11,0x0e,0x11,0x11,0x0e}},
    {'9', {0x0e,0x11,0x11,0x0f,0x01,0x02,0x0c}},
    {'a', {0x00,0x00,0x0e,0x01,0x0f,0x11,0x0f}},
    {'b', {0x10,0x10,0x16,0x19,0x11,0x11,0x1e}},
    {'c', {0x00,0x00,0x0e,0x10,0x10,0x11,0x0e}},
    {'d', {0x01,0x01,0x0d,0x13,0x11,0x11,0x0f}},
    {'e', {0x00,0x00,0x0e,0x11,0x1f,0x10,0x0e}},
    {'f', {0x06,0x09,0x08,0x1c,0x08,0x08,0x08}},
    {'g', {0x00,0x0f,0x11,0x11,0x0f,0x01,0x0e}},
    {'h', {0x10,0x10,0x16,0x19,0x11,0x11,0x11}},
    {'i', {0x04,0x00,0x0c,0x04,0x04,0x04,0x0e}},
    {'j', {0x02,0x00,0x06,0x02,0x02,0x12,0x0c}},
    {'k', {0x10,0x10,0x12,0x14,0x18,0x14,0x12}},
    {'l', {0x0c,0x04,0x04,0x04,0x04,0x04,0x0e}},
    {'m', {0x00,0x00,0x1a,0x15,0x15,0x15,0x15}},
    {'n', {0x00,0x00,0x16,0x19,0x11,0x11,0x11}},
    {'o', {0x00,0x00,0x0e,0x11,0x11,0x11,0x0e}},
    {'p', {0x00,0x00,0x1e,0x11,0x1e,0x10,0x10}},
    {'q', {0x00,0x00,0x0d,0x13,0x0f,0x01,0x01}},
    {'r', {0x00,0x00,0x16,0x19,0x10,0x10,0x10}},
    {'s', {0x00,0x00,0x0e,0x10,0x0e,0x01,0x1e}},
    {'t', {0x08,0x08,0x1c,0x08,0x08,0x09,0x06}},
    {'u', {0x00,0x00,0x11,0x11,0x11,0x13,0x0d}},
    {'v', {0x00,0x00,0x11,0x11,0x11,0x0a,0x04}},
    {'w', {0x00,0x00,0x11,0x15,0x15,0x15,0x0a}},
    {'x', {0x00,0x00,0x11,0x0a,0x04,0x0a,0x11}},
    {'y', {0x00,0x00,0x11,0x11,0x0f,0x01,0x0e}},
    {'z', {0x00,0x00,0x1f,0x02,0x04,0x08,0x1f}},
    {'.', {0x00,0x00,0x00,0x00,0x00,0x0c,0x0c}},
    {'_', {0x00,0x00,0x00,0x00,0x00,0x00,0x1f}},
    {'-', {0x00,0x00,0x00,0x1f,0x00,0x00,0x00}},
    {' ', {0x00,0x00,0x00,0x00,0x00,0x00,0x00}},
};
// clang-format on

const uint8_t* glyph_rows(char ch) {
    for (const Glyph& g : kFont)
        if (g.ch == ch) return g.rows;
    static const uint8_t box[7] = {0x1f, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1f};
    return box;
}

}  // namespace

void draw_rect(ImageU8& img, int x0, int y0, int x1, int y1, Rgb color, int thickness) {
    if (x1 < x0) std::swap(x0, x1);
    if (y1 < y0) std::swap(y0, y1);
    for (int t = 0; t < thickness; ++t) {
        for (int x = x0 - t; x <= x1 + t; ++x) {
            put_pixel(img, x, y0 - t, color);
            put_pixel(img, x, y1 + t, color);
        }
        for (int y = y0 - t; y <= y1 + t; ++y) {
            put_pixel(img, x0 - t, y, color);
            put_pixel(img, x1 + t, y, color);
        }
    }
}

void draw_text(ImageU8& img, int x, int y, const std::string& text, Rgb color, int scale) {
    int pen = x;
    for (char ch : text) {
        const uint8_t* rows = glyph_rows(ch);
        for (int r = 0; r < 7; ++r)
            for (int c = 0; c < 5; ++c)
                if (rows[r] & (1 << (4 - c)))
                    for (int sy = 0; sy < scale; ++sy)
                        for (int sx = 0; sx < scale; ++sx)
                            put_pixel(img, pen + c * scale + sx, y + r * scale + sy, color);
        pen += 6 * scale;
    }
}

}  // namespace evk
