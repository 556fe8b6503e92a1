#pragma once

// Independent reference implementations the tests check the library against.
// Deliberately written in the most direct way possible: per-pixel replay for
// the simulator, exhaustive enumeration for matching, rasterized masks for
// box geometry. Keep them slow and obvious.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "evkit/boxes.hpp"
#include "evkit/detection_eval.hpp"
#include "evkit/dvs_simulator.hpp"
#include "evkit/event_model.hpp"

namespace oracle {

// ---- simulator: per-pixel replay ----------------------------------------

struct SimCounts {
    std::vector<int64_t> on;
    std::vector<int64_t> off;
    std::vector<double> mem;  // final memorized values
};

inline double lin_log_ref(double y, double knee) {
    if (y < knee) return y * (std::log(knee) / knee);
    return std::log(y);
}

// Replays the whole video one pixel at a time, outer loop over pixels.
inline SimCounts sim_replay(const std::vector<evk::LumaFrame>& video, const evk::SimParams& p) {
    const size_t n = video[0].pixels.size();
    SimCounts out;
    out.on.assign(n, 0);
    out.off.assign(n, 0);
    out.mem.assign(n, 0);

    for (size_t i = 0; i < n; ++i) {
        double mem = lin_log_ref(video[0].pixels[i], p.lin_log_knee);
        for (size_t f = 1; f < video.size(); ++f) {
            double dt_s = double(video[f].t - video[f - 1].t) * 1e-6;
            mem -= p.leak_rate_hz * p.theta_on * dt_s;
            double delta = lin_log_ref(video[f].pixels[i], p.lin_log_knee) - mem;
            if (delta > 0) {
                auto k = int64_t(std::floor(delta / p.theta_on + 1e-9));
                out.on[i] += k;
                mem += double(k) * p.theta_on;
            } else if (delta < 0) {
                auto k = int64_t(std::floor(-delta / p.theta_off + 1e-9));
                out.off[i] += k;
                mem -= double(k) * p.theta_off;
            }
        }
        out.mem[i] = mem;
    }
    return out;
}

inline SimCounts count_stream(const evk::EventStream& s) {
    const size_t n = size_t(s.width) * size_t(s.height);
    SimCounts out;
    out.on.assign(n, 0);
    out.off.assign(n, 0);
    for (const evk::Event& e : s.events) {
        size_t i = size_t(e.y) * size_t(s.width) + e.x;
        if (e.p > 0)
            ++out.on[i];
        else
            ++out.off[i];
    }
    return out;
}

// ---- average precision: recall-level scan --------------------------------

// AP = sum over k = 1..n_gt of max precision among prefixes reaching
// recall k/n_gt, divided by n_gt. Equivalent to the envelope integral but
// computed by brute scanning.
inline double ap_scan(const std::vector<uint8_t>& flags, int n_gt) {
    double sum = 0;
    for (int k = 1; k <= n_gt; ++k) {
        double best = 0;
        int tp = 0;
        for (size_t j = 0; j < flags.size(); ++j) {
            tp += flags[j];
            if (tp >= k) best = std::max(best, double(tp) / double(j + 1));
        }
        sum += best;
    }
    return n_gt > 0 ? sum / n_gt : 0.0;
}

// ---- greedy matching: exhaustive lexicographic search --------------------

inline double iou_ref(const evk::NormBox& a, const evk::NormBox& b) {
    double x0 = std::max(a.cx - a.w / 2, b.cx - b.w / 2);
    double y0 = std::max(a.cy - a.h / 2, b.cy - b.h / 2);
    double x1 = std::min(a.cx + a.w / 2, b.cx + b.w / 2);
    double y1 = std::min(a.cy + a.h / 2, b.cy + b.h / 2);
    double iw = std::max(0.0, x1 - x0), ih = std::max(0.0, y1 - y0);
    double inter = iw * ih;
    double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0 ? inter / uni : 0.0;
}

// The greedy outcome is the assignment whose per-detection IoU sequence
// (detections in descending confidence, unmatched = -1) is lexicographically
// greatest among all one-to-one assignments. Enumerate them all.
inline std::vector<uint8_t> match_exhaustive(const std::vector<evk::Detection>& dets,
                                             const std::vector<evk::Annotation>& gts,
                                             const evk::EvalConfig& cfg) {
    std::vector<size_t> order(dets.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return dets[a].confidence > dets[b].confidence;
    });

    std::vector<double> best_seq;
    std::vector<uint8_t> best_flags(dets.size(), 0);
    std::vector<uint8_t> used(gts.size(), 0);
    std::vector<double> seq;
    std::vector<uint8_t> flags(dets.size(), 0);

    std::function<void(size_t)> walk = [&](size_t pos) {
        if (pos == order.size()) {
            if (best_seq.empty() || std::lexicographical_compare(
                                        best_seq.begin(), best_seq.end(), seq.begin(), seq.end())) {
                best_seq = seq;
                best_flags = flags;
            }
            return;
        }
        const evk::Detection& d = dets[order[pos]];
        for (size_t g = 0; g < gts.size(); ++g) {
            if (used[g] || gts[g].cls != d.cls) continue;
            double v = iou_ref(d.box, gts[g].box);
            if (v < cfg.iou_threshold) continue;
            used[g] = 1;
            seq.push_back(v);
            flags[order[pos]] = 1;
            walk(pos + 1);
            flags[order[pos]] = 0;
            seq.pop_back();
            used[g] = 0;
        }
        seq.push_back(-1.0);
        walk(pos + 1);
        seq.pop_back();
    };
    walk(0);
    return best_flags;
}

// Full evaluation oracle: exhaustive matching per image, pooled flags sorted
// by confidence (ties by image order then index), ap_scan per class.
inline double map_exhaustive(const std::map<std::string, std::vector<evk::Detection>>& preds,
                             const std::map<std::string, std::vector<evk::Annotation>>& gts,
                             const evk::EvalConfig& cfg) {
    struct Row {
        double conf;
        size_t img, idx;
        uint8_t tp;
    };
    std::array<std::vector<Row>, evk::kNumClasses> pooled;
    std::array<int, evk::kNumClasses> n_gt{};

    size_t img_no = 0;
    for (const auto& [id, gt] : gts) {
        for (const auto& g : gt) ++n_gt[size_t(g.cls)];
        auto it = preds.find(id);
        if (it != preds.end()) {
            std::vector<evk::Detection> kept;
            for (const auto& d : it->second)
                if (d.confidence >= cfg.confidence_threshold) kept.push_back(d);
            std::vector<uint8_t> flags = match_exhaustive(kept, gt, cfg);
            for (size_t i = 0; i < kept.size(); ++i)
                pooled[size_t(kept[i].cls)].push_back({kept[i].confidence, img_no, i, flags[i]});
        }
        ++img_no;
    }

    double sum = 0;
    int classes = 0;
    for (size_t c = 0; c < evk::kNumClasses; ++c) {
        if (n_gt[c] == 0) continue;
        auto rows = pooled[c];
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            if (a.conf != b.conf) return a.conf > b.conf;
            if (a.img != b.img) return a.img < b.img;
            return a.idx < b.idx;
        });
        std::vector<uint8_t> flags;
        for (const Row& r : rows) flags.push_back(r.tp);
        sum += ap_scan(flags, n_gt[c]);
        ++classes;
    }
    return classes ? sum / classes : 0.0;
}

// ---- box geometry: rasterized mask --------------------------------------

struct MaskBox {
    double x0, y0, x1, y1;  // pixel units
    int pixels;
};

// Rasterizes the box, forward-maps every covered pixel center with
// p' = c + M(p - c), marks the nearest output pixel, re-fits the AABB.
inline std::optional<MaskBox> mask_affine_box(const evk::NormBox& box,
                                              const std::array<double, 4>& m, int w, int h) {
    const double cx = w / 2.0, cy = h / 2.0;
    int ox0 = w, oy0 = h, ox1 = -1, oy1 = -1, count = 0;
    int bx0 = std::max(0, int(std::floor(box.x0() * w)));
    int by0 = std::max(0, int(std::floor(box.y0() * h)));
    int bx1 = std::min(w - 1, int(std::ceil(box.x1() * w)) - 1);
    int by1 = std::min(h - 1, int(std::ceil(box.y1() * h)) - 1);
    for (int y = by0; y <= by1; ++y)
        for (int x = bx0; x <= bx1; ++x) {
            double px = x + 0.5, py = y + 0.5;
            if (px < box.x0() * w || px > box.x1() * w || py < box.y0() * h ||
                py > box.y1() * h)
                continue;
            double dx = px - cx, dy = py - cy;
            double mx = cx + m[0] * dx + m[1] * dy;
            double my = cy + m[2] * dx + m[3] * dy;
            int tx = int(std::floor(mx)), ty = int(std::floor(my));
            if (tx < 0 || ty < 0 || tx >= w || ty >= h) continue;
            ox0 = std::min(ox0, tx);
            oy0 = std::min(oy0, ty);
            ox1 = std::max(ox1, tx);
            oy1 = std::max(oy1, ty);
            ++count;
        }
    if (count == 0) return std::nullopt;
    return MaskBox{double(ox0), double(oy0), double(ox1 + 1), double(oy1 + 1), count};
}

// Same idea for a crop: which part of the box lands inside the region, in
// cropped-image pixel coordinates.
inline std::optional<MaskBox> mask_crop_box(const evk::NormBox& box, int rx0, int ry0, int rx1,
                                            int ry1, int w, int h) {
    int ox0 = w, oy0 = h, ox1 = -1, oy1 = -1, count = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double px = x + 0.5, py = y + 0.5;
            if (px < box.x0() * w || px > box.x1() * w || py < box.y0() * h ||
                py > box.y1() * h)
                continue;
            if (px < rx0 || px > rx1 || py < ry0 || py > ry1) continue;
            ox0 = std::min(ox0, x - rx0);
            oy0 = std::min(oy0, y - ry0);
            ox1 = std::max(ox1, x - rx0);
            oy1 = std::max(oy1, y - ry0);
            ++count;
        }
    if (count == 0) return std::nullopt;
    return MaskBox{double(ox0), double(oy0), double(ox1 + 1), double(oy1 + 1), count};
}

// ---- random generators ---------------------------------------------------

inline evk::NormBox random_box(std::mt19937_64& g, double min_side = 0.05,
                               double max_side = 0.5) {
    std::uniform_real_distribution<double> side(min_side, max_side);
    double w = side(g), h = side(g);
    std::uniform_real_distribution<double> px(w / 2, 1.0 - w / 2);
    std::uniform_real_distribution<double> py(h / 2, 1.0 - h / 2);
    return evk::NormBox{px(g), py(g), w, h};
}

inline std::vector<evk::Detection> random_detections(std::mt19937_64& g, size_t n) {
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    std::uniform_int_distribution<int> cls(0, 3);
    std::vector<evk::Detection> out;
    for (size_t i = 0; i < n; ++i)
        out.push_back({evk::class_from_int(cls(g)), conf(g), random_box(g)});
    return out;
}

inline std::vector<evk::LumaFrame> random_video(std::mt19937_64& g, int max_dim = 16,
                                                int max_frames = 10) {
    std::uniform_int_distribution<int> dim(1, max_dim);
    std::uniform_int_distribution<int> nf(2, max_frames);
    std::uniform_int_distribution<int64_t> gap(100, 50000);
    std::uniform_real_distribution<float> lum(0.0f, 255.0f);
    std::uniform_int_distribution<int> integral(0, 1);

    int w = dim(g), h = dim(g), frames = nf(g);
    std::vector<evk::LumaFrame> video;
    int64_t t = 0;
    for (int f = 0; f < frames; ++f) {
        evk::LumaFrame fr;
        fr.t = t;
        fr.width = w;
        fr.height = h;
        fr.pixels.resize(size_t(w) * size_t(h));
        bool ints = integral(g) != 0;  // integer-valued frames hit the u8 path
        for (auto& v : fr.pixels) v = ints ? float(int(lum(g))) : lum(g);
        video.push_back(std::move(fr));
        t += gap(g);
    }
    return video;
}

}  // namespace oracle
