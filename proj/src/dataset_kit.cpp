#include "evkit/dataset_kit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

#include "evkit/rng.hpp"

namespace fs = std::filesystem;

namespace evk {

std::vector<Annotation> parse_label_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::vector<Annotation> anns;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fail = [&](const std::string& why) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + why);
        };
        int cls;
        double cx, cy, w, h;
        char extra;
        int n = std::sscanf(line.c_str(), "%d %lf %lf %lf %lf %c", &cls, &cx, &cy, &w, &h, &extra);
        if (n != 5) fail("expected 'class cx cy w h'");
        if (cls < 0 || cls > 3) fail("class " + std::to_string(cls) + " outside 0..3");
        if (cx < 0 || cx > 1 || cy < 0 || cy > 1) fail("center outside [0,1]");
        if (w <= 0 || w > 1 || h <= 0 || h > 1) fail("size outside (0,1]");
        anns.push_back({class_from_int(cls), NormBox{cx, cy, w, h}});
    }
    return anns;
}

void write_label_file(std::span<const Annotation> anns, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char line[128];
    for (const Annotation& a : anns) {
        std::snprintf(line, sizeof(line), "%d %.6f %.6f %.6f %.6f\n", int(a.cls), a.box.cx,
                      a.box.cy, a.box.w, a.box.h);
        out << line;
    }
}

std::pair<std::vector<DatasetSample>, std::vector<DatasetSample>> split_dataset(
    std::vector<DatasetSample> samples, double ratio, uint64_t seed) {
    if (samples.empty()) throw std::invalid_argument("split_dataset: empty dataset");
    if (!(ratio > 0 && ratio < 1)) throw std::invalid_argument("split_dataset: ratio not in (0,1)");

    std::mt19937_64 g(rng::mix_seed(seed, 0x73706c6974));  // distinct stream per use
    for (size_t i = samples.size() - 1; i > 0; --i) {
        size_t j = size_t(rng::uniform_below(g, i + 1));
        std::swap(samples[i], samples[j]);
    }

    auto n_train = size_t(std::llround(ratio * double(samples.size())));
    n_train = std::min(n_train, samples.size());
    std::vector<DatasetSample> train(std::make_move_iterator(samples.begin()),
                                     std::make_move_iterator(samples.begin() + ptrdiff_t(n_train)));
    std::vector<DatasetSample> test(std::make_move_iterator(samples.begin() + ptrdiff_t(n_train)),
                                    std::make_move_iterator(samples.end()));
    return {std::move(train), std::move(test)};
}

DatasetSample hflip(const DatasetSample& s) {
    DatasetSample out = s;
    out.image = hflip_image(s.image);
    for (Annotation& a : out.annotations) a.box.cx = 1.0 - a.box.cx;
    return out;
}

namespace {

// Forward linear map about the image center, p' = c + M(p - c), applied to
// box corners in pixel coordinates. Boxes become the clamped AABB of their
// mapped corners; anything under a pixel of area is dropped.
std::vector<Annotation> map_boxes(std::span<const Annotation> anns,
                                  const std::array<double, 4>& m, double w, double h) {
    const double cx = w / 2, cy = h / 2;
    std::vector<Annotation> out;
    for (const Annotation& a : anns) {
        double xs[2] = {a.box.x0() * w, a.box.x1() * w};
        double ys[2] = {a.box.y0() * h, a.box.y1() * h};
        double nx0 = 1e300, ny0 = 1e300, nx1 = -1e300, ny1 = -1e300;
        for (double x : xs)
            for (double y : ys) {
                double dx = x - cx, dy = y - cy;
                double mx = cx + m[0] * dx + m[1] * dy;
                double my = cy + m[2] * dx + m[3] * dy;
                nx0 = std::min(nx0, mx);
                ny0 = std::min(ny0, my);
                nx1 = std::max(nx1, mx);
                ny1 = std::max(ny1, my);
            }
        nx0 = std::max(nx0, 0.0);
        ny0 = std::max(ny0, 0.0);
        nx1 = std::min(nx1, w);
        ny1 = std::min(ny1, h);
        if (nx1 - nx0 <= 0 || ny1 - ny0 <= 0 || (nx1 - nx0) * (ny1 - ny0) < 1.0) continue;
        out.push_back({a.cls, NormBox::from_corners(nx0 / w, ny0 / h, nx1 / w, ny1 / h)});
    }
    return out;
}

}  // namespace

DatasetSample rotate(const DatasetSample& s, double angle_deg) {
    const double rad = angle_deg * std::acos(-1.0) / 180.0;
    const double c = std::cos(rad), sn = std::sin(rad);
    const double cx = double(s.image.width) / 2, cy = double(s.image.height) / 2;

    // warp wants output -> source, the inverse rotation
    std::array<double, 6> inv = {c, sn, cx - c * cx - sn * cy, -sn, c, cy + sn * cx - c * cy};
    DatasetSample out = s;
    out.image = warp_affine_nn(s.image, inv, 128);
    out.annotations = map_boxes(s.annotations, {c, -sn, sn, c}, double(s.image.width),
                                double(s.image.height));
    return out;
}

DatasetSample shear(const DatasetSample& s, double shx, double shy) {
    const double det = 1.0 - shx * shy;
    if (std::abs(det) < 1e-9) throw std::invalid_argument("shear: singular transform");
    const double cx = double(s.image.width) / 2, cy = double(s.image.height) / 2;

    const double i0 = 1.0 / det, i1 = -shx / det, i2 = -shy / det, i3 = 1.0 / det;
    std::array<double, 6> inv = {i0, i1, cx - i0 * cx - i1 * cy, i2, i3, cy - i2 * cx - i3 * cy};
    DatasetSample out = s;
    out.image = warp_affine_nn(s.image, inv, 128);
    out.annotations = map_boxes(s.annotations, {1.0, shx, shy, 1.0}, double(s.image.width),
                                double(s.image.height));
    return out;
}

DatasetSample crop(const DatasetSample& s, const NormBox& region, double min_visibility) {
    const double w = s.image.width, h = s.image.height;
    const int rx0 = int(std::lround(region.x0() * w)), ry0 = int(std::lround(region.y0() * h));
    const int rx1 = int(std::lround(region.x1() * w)), ry1 = int(std::lround(region.y1() * h));
    if (rx0 < 0 || ry0 < 0 || rx1 > s.image.width || ry1 > s.image.height || rx1 - rx0 < 1 ||
        ry1 - ry0 < 1)
        throw std::invalid_argument("crop: degenerate region");

    DatasetSample out = s;
    out.image = crop_image(s.image, rx0, ry0, rx1 - rx0, ry1 - ry0);
    out.annotations.clear();
    const double rw = rx1 - rx0, rh = ry1 - ry0;
    for (const Annotation& a : s.annotations) {
        double bx0 = a.box.x0() * w, bx1 = a.box.x1() * w;
        double by0 = a.box.y0() * h, by1 = a.box.y1() * h;
        double ix0 = std::max(bx0, double(rx0)), ix1 = std::min(bx1, double(rx1));
        double iy0 = std::max(by0, double(ry0)), iy1 = std::min(by1, double(ry1));
        if (ix1 - ix0 <= 0 || iy1 - iy0 <= 0) continue;
        double visible = (ix1 - ix0) * (iy1 - iy0);
        if (visible < min_visibility * (bx1 - bx0) * (by1 - by0)) continue;
        out.annotations.push_back({a.cls, NormBox::from_corners((ix0 - rx0) / rw, (iy0 - ry0) / rh,
                                                                (ix1 - rx0) / rw,
                                                                (iy1 - ry0) / rh)});
    }
    return out;
}

AugmentPlan default_augment_plan(double multiplier) {
    AugmentPlan plan;
    plan.multiplier = multiplier;
    plan.transforms = {
        {TransformKind::HFlip, 0.5, 0, 0},
        {TransformKind::Rotate, 0.6, -15.0, 15.0},
        {TransformKind::Crop, 0.4, 0.7, 0.95},
        {TransformKind::Shear, 0.4, -0.15, 0.15},
    };
    return plan;
}

namespace {

DatasetSample generate_sample(const DatasetSample& src, const AugmentPlan& plan, uint64_t seed,
                              size_t j) {
    std::mt19937_64 g(rng::mix_seed(seed, j));
    DatasetSample cur = src;
    std::string chain;
    char buf[64];
    for (const TransformSpec& spec : plan.transforms) {
        if (rng::uniform_unit(g) >= spec.probability) continue;
        switch (spec.kind) {
            case TransformKind::HFlip:
                cur = hflip(cur);
                chain += "+hflip";
                break;
            case TransformKind::Rotate: {
                double deg = rng::uniform_range(g, spec.lo, spec.hi);
                cur = rotate(cur, deg);
                std::snprintf(buf, sizeof(buf), "+rotate(%.4f)", deg);
                chain += buf;
                break;
            }
            case TransformKind::Crop: {
                double keep = rng::uniform_range(g, spec.lo, spec.hi);
                double x0 = rng::uniform_range(g, 0.0, 1.0 - keep);
                double y0 = rng::uniform_range(g, 0.0, 1.0 - keep);
                cur = crop(cur, NormBox::from_corners(x0, y0, x0 + keep, y0 + keep),
                           plan.min_visibility);
                std::snprintf(buf, sizeof(buf), "+crop(%.4f,%.4f,%.4f)", keep, x0, y0);
                chain += buf;
                break;
            }
            case TransformKind::Shear: {
                double shx = rng::uniform_range(g, spec.lo, spec.hi);
                double shy = rng::uniform_range(g, spec.lo, spec.hi);
                cur = shear(cur, shx, shy);
                std::snprintf(buf, sizeof(buf), "+shear(%.4f,%.4f)", shx, shy);
                chain += buf;
                break;
            }
        }
    }
    if (chain.empty()) chain = "+copy";

    char id[64];
    std::snprintf(id, sizeof(id), "aug_%06zu", j);
    cur.id = id;
    cur.provenance = src.id + chain;
    return cur;
}

}  // namespace

std::vector<DatasetSample> augment_dataset(const std::vector<DatasetSample>& train,
                                           const AugmentPlan& plan, uint64_t seed) {
    if (train.empty()) throw std::invalid_argument("augment_dataset: empty input");
    if (plan.multiplier < 1.0) throw std::invalid_argument("augment_dataset: multiplier < 1");

    const auto target = size_t(std::llround(plan.multiplier * double(train.size())));
    std::vector<DatasetSample> out = train;
    out.reserve(target);
    for (size_t j = 0; out.size() < target; ++j)
        out.push_back(generate_sample(train[j % train.size()], plan, seed, j));
    return out;
}

std::vector<DatasetSample> load_dataset(const std::string& dir) {
    const fs::path images = fs::path(dir) / "images";
    if (!fs::is_directory(images)) throw std::runtime_error("no images/ directory under " + dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(images))
        if (entry.path().extension() == ".png") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<DatasetSample> samples;
    samples.reserve(files.size());
    for (const fs::path& f : files) {
        DatasetSample s;
        s.id = f.stem().string();
        s.image = read_png(f.string());
        fs::path label = fs::path(dir) / "labels" / (s.id + ".txt");
        if (fs::exists(label)) s.annotations = parse_label_file(label.string());
        samples.push_back(std::move(s));
    }
    return samples;
}

void save_dataset(std::span<const DatasetSample> samples, const std::string& dir) {
    fs::create_directories(fs::path(dir) / "images");
    fs::create_directories(fs::path(dir) / "labels");

    std::ofstream prov;
    for (const DatasetSample& s : samples) {
        write_png(s.image, (fs::path(dir) / "images" / (s.id + ".png")).string());
        write_label_file(s.annotations, (fs::path(dir) / "labels" / (s.id + ".txt")).string());
        if (!s.provenance.empty()) {
            if (!prov.is_open()) prov.open(fs::path(dir) / "provenance.txt");
            prov << s.id << " " << s.provenance << "\n";
        }
    }
}

void write_manifest(const std::string& dir, std::span<const DatasetSample> train,
                    std::span<const DatasetSample> test) {
    fs::create_directories(dir);
    auto write_list = [&](const char* name, std::span<const DatasetSample> list) {
        std::ofstream out(fs::path(dir) / name);
        if (!out) throw std::runtime_error(std::string("cannot write ") + name);
        for (const DatasetSample& s : list) out << "images/" << s.id << ".png\n";
    };
    write_list("train.txt", train);
    write_list("test.txt", test);

    std::ofstream yaml(fs::path(dir) / "dataset.yaml");
    if (!yaml) throw std::runtime_error("cannot write dataset.yaml");
    yaml << "path: .\n"
         << "train: train.txt\n"
         << "val: test.txt\n"
         << "nc: 4\n"
         << "names: [person, car, pole, other_vehicle]\n";
}

}  // namespace evk
