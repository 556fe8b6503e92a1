#include "evkit/fixtures.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "evkit/dataset_kit.hpp"

namespace fs = std::filesystem;

namespace evk {

namespace {

// Bounce index over 0..n_pos-1: 0,1,...,n-1,n-2,...,1,0,1,...
int triangle_pos(int k, int n_pos) {
    if (n_pos <= 1) return 0;
    int period = 2 * (n_pos - 1);
    int i = k % period;
    return i < n_pos ? i : period - i;
}

void fill_square(ImageU8& img, int x0, int y0, int side, uint8_t value) {
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) img.data[size_t(y) * img.width + x] = value;
}

NormBox swept_box(int xa, int xb, int y0, int side, int w, int h) {
    int lo = std::min(xa, xb), hi = std::max(xa, xb) + side;
    return NormBox::from_corners(double(lo) / w, double(y0) / h, double(hi) / w,
                                 double(y0 + side) / h);
}

}  // namespace

Fixture make_moving_square(int width, int height, int n_frames, int square, int64_t dt_us) {
    if (width % square != 0 || square <= 0 || n_frames < 2)
        throw std::invalid_argument("make_moving_square: width must be a multiple of the square");

    Fixture fx;
    fx.name = "moving_square";
    fx.width = width;
    fx.height = height;
    fx.dt_us = dt_us;

    const int n_pos = (width - square) / square + 1;
    const int y0 = (height - square) / 2;
    std::vector<int> xs(static_cast<size_t>(n_frames));
    for (int k = 0; k < n_frames; ++k) xs[size_t(k)] = triangle_pos(k, n_pos) * square;

    for (int k = 0; k < n_frames; ++k) {
        ImageU8 img = ImageU8::filled(width, height, 1, 0);
        fill_square(img, xs[size_t(k)], y0, square, 255);
        fx.frames.push_back(std::move(img));
        fx.timestamps.push_back(int64_t(k) * dt_us);
    }
    for (int k = 0; k + 1 < n_frames; ++k)
        fx.window_gt.push_back(
            {{ClassId::Car, swept_box(xs[size_t(k)], xs[size_t(k) + 1], y0, square, width,
                                      height)}});
    return fx;
}

Fixture make_static_scene(int width, int height, int n_frames, int64_t dt_us) {
    if (n_frames < 2) throw std::invalid_argument("make_static_scene: need at least 2 frames");

    Fixture fx;
    fx.name = "static_scene";
    fx.width = width;
    fx.height = height;
    fx.dt_us = dt_us;

    ImageU8 img = ImageU8::filled(width, height, 1, 128);
    fill_square(img, width / 8, height / 6, height / 4, 60);
    fill_square(img, width / 2, height / 2, height / 3, 200);
    for (int k = 0; k < n_frames; ++k) {
        fx.frames.push_back(img);
        fx.timestamps.push_back(int64_t(k) * dt_us);
    }
    fx.window_gt.assign(size_t(n_frames) - 1, {});
    return fx;
}

Fixture make_two_objects(int width, int height, int n_frames, int64_t dt_us) {
    if (n_frames < 2) throw std::invalid_argument("make_two_objects: need at least 2 frames");

    Fixture fx;
    fx.name = "two_objects";
    fx.width = width;
    fx.height = height;
    fx.dt_us = dt_us;

    const int side_a = 32, y_a = height / 6;
    const int side_b = 24, y_b = (height * 2) / 3;
    const int npos_a = (width - side_a) / side_a + 1;
    const int npos_b = (width - side_b) / side_b + 1;

    std::vector<int> xa(static_cast<size_t>(n_frames)), xb(static_cast<size_t>(n_frames));
    for (int k = 0; k < n_frames; ++k) {
        xa[size_t(k)] = triangle_pos(k, npos_a) * side_a;
        // second object starts at the far end, moving the other way
        xb[size_t(k)] = triangle_pos(k + npos_b - 1, npos_b) * side_b;
    }

    for (int k = 0; k < n_frames; ++k) {
        ImageU8 img = ImageU8::filled(width, height, 1, 0);
        fill_square(img, xa[size_t(k)], y_a, side_a, 255);
        fill_square(img, xb[size_t(k)], y_b, side_b, 200);
        fx.frames.push_back(std::move(img));
        fx.timestamps.push_back(int64_t(k) * dt_us);
    }
    for (int k = 0; k + 1 < n_frames; ++k)
        fx.window_gt.push_back(
            {{ClassId::Car,
              swept_box(xa[size_t(k)], xa[size_t(k) + 1], y_a, side_a, width, height)},
             {ClassId::Person,
              swept_box(xb[size_t(k)], xb[size_t(k) + 1], y_b, side_b, width, height)}});
    return fx;
}

Fixture make_fixture(const std::string& name) {
    if (name == "moving_square") return make_moving_square();
    if (name == "static_scene") return make_static_scene();
    if (name == "two_objects") return make_two_objects();
    throw std::invalid_argument("unknown fixture '" + name +
                                "' (moving_square, static_scene, two_objects)");
}

void write_fixture(const Fixture& fx, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "frames");
    fs::create_directories(fs::path(dir) / "gt");

    char name[32];
    for (size_t k = 0; k < fx.frames.size(); ++k) {
        std::snprintf(name, sizeof(name), "%06zu.png", k);
        write_png(fx.frames[k], (fs::path(dir) / "frames" / name).string());
    }

    std::ofstream ts(fs::path(dir) / "timestamps.txt");
    if (!ts) throw std::runtime_error("cannot write timestamps.txt");
    for (int64_t t : fx.timestamps) ts << t << "\n";

    for (size_t k = 0; k < fx.window_gt.size(); ++k) {
        std::snprintf(name, sizeof(name), "%06zu.txt", k);
        write_label_file(fx.window_gt[k], (fs::path(dir) / "gt" / name).string());
    }

    nlohmann::ordered_json j;
    j["name"] = fx.name;
    j["width"] = fx.width;
    j["height"] = fx.height;
    j["frames"] = fx.frames.size();
    j["dt_us"] = fx.dt_us;
    std::ofstream js(fs::path(dir) / "fixture.json");
    if (!js) throw std::runtime_error("cannot write fixture.json");
    js << j.dump(2) << "\n";
}

std::vector<LumaFrame> load_video_dir(const std::string& dir, int64_t dt_us_fallback) {
    fs::path frames_dir = fs::path(dir) / "frames";
    if (!fs::is_directory(frames_dir)) frames_dir = dir;
    if (!fs::is_directory(frames_dir)) throw std::runtime_error("not a directory: " + dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(frames_dir))
        if (entry.path().extension() == ".png") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .png frames under " + dir);

    std::vector<int64_t> ts;
    fs::path ts_file = fs::path(dir) / "timestamps.txt";
    if (fs::exists(ts_file)) {
        std::ifstream in(ts_file);
        int64_t t;
        while (in >> t) ts.push_back(t);
        if (ts.size() != files.size())
            throw std::runtime_error("timestamps.txt has " + std::to_string(ts.size()) +
                                     " entries for " + std::to_string(files.size()) + " frames");
    } else {
        if (dt_us_fallback <= 0)
            throw std::runtime_error("no timestamps.txt under " + dir +
                                     " and no frame interval given");
        for (size_t k = 0; k < files.size(); ++k) ts.push_back(int64_t(k) * dt_us_fallback);
    }

    std::vector<LumaFrame> video;
    video.reserve(files.size());
    for (size_t k = 0; k < files.size(); ++k)
        video.push_back(luma_from_image(read_png(files[k].string()), ts[k]));
    return video;
}

}  // namespace evk
