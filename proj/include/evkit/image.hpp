#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace evk {

// Row-major interleaved 8-bit image, 1 (gray) or 3 (RGB) channels.
struct ImageU8 {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<uint8_t> data;

    static ImageU8 filled(int w, int h, int c, uint8_t value) {
        ImageU8 img;
        img.width = w;
        img.height = h;
        img.channels = c;
        img.data.assign(size_t(w) * h * c, value);
        return img;
    }

    uint8_t& at(int x, int y, int c = 0) {
        return data[(size_t(y) * width + x) * channels + c];
    }
    uint8_t at(int x, int y, int c = 0) const {
        return data[(size_t(y) * width + x) * channels + c];
    }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
};

inline bool operator==(const ImageU8& a, const ImageU8& b) {
    return a.width == b.width && a.height == b.height && a.channels == b.channels &&
           a.data == b.data;
}

ImageU8 read_png(const std::string& path);
void write_png(const ImageU8& img, const std::string& path);

ImageU8 to_rgb(const ImageU8& img);
ImageU8 hflip_image(const ImageU8& img);

// Nearest-neighbour inverse mapping: the center of output pixel (ox, oy)
// maps to source coordinates
//   sx = m[0]*(ox+.5) + m[1]*(oy+.5) + m[2],  sy = m[3]*(ox+.5) + m[4]*(oy+.5) + m[5]
// and samples the source pixel covering that point; points outside the
// source get `fill` on every channel.
ImageU8 warp_affine_nn(const ImageU8& src, const std::array<double, 6>& m, uint8_t fill);

ImageU8 crop_image(const ImageU8& src, int x0, int y0, int w, int h);

using Rgb = std::array<uint8_t, 3>;

void draw_rect(ImageU8& img, int x0, int y0, int x1, int y1, Rgb color, int thickness = 1);
// 5x7 bitmap font, lowercase letters / digits / '.' / '_' / space.
void draw_text(ImageU8& img, int x, int y, const std::string& text, Rgb color, int scale = 1);

}  // namespace evk
