#include "evkit/ensemble_fusion.hpp"

#include <algorithm>
#include <stdexcept>

#include "evkit/detection_eval.hpp"

namespace evk {

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
    if (!(iou_threshold > 0 && iou_threshold <= 1))
        throw std::invalid_argument("nms: iou_threshold not in (0,1]");

    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) {
                         return a.confidence > b.confidence;
                     });

    std::vector<Detection> kept;
    std::vector<uint8_t> dead(dets.size(), 0);
    for (size_t i = 0; i < dets.size(); ++i) {
        if (dead[i]) continue;
        kept.push_back(dets[i]);
        for (size_t j = i + 1; j < dets.size(); ++j) {
            if (dead[j] || dets[j].cls != dets[i].cls) continue;
            if (iou(dets[j].box, dets[i].box) >= iou_threshold) dead[j] = 1;
        }
    }
    return kept;
}

namespace {

struct Cluster {
    ClassId cls;
    double sum_conf = 0;
    double sum_cx = 0, sum_cy = 0, sum_w = 0, sum_h = 0;
    int size = 0;
    NormBox fused{};

    void add(const Detection& d) {
        sum_conf += d.confidence;
        sum_cx += d.confidence * d.box.cx;
        sum_cy += d.confidence * d.box.cy;
        sum_w += d.confidence * d.box.w;
        sum_h += d.confidence * d.box.h;
        ++size;
        fused = NormBox{sum_cx / sum_conf, sum_cy / sum_conf, sum_w / sum_conf,
                        sum_h / sum_conf};
    }
};

std::vector<Detection> wbf(std::span<const std::vector<Detection>> det_sets,
                           const FusionConfig& cfg) {
    std::vector<Detection> all;
    for (const auto& set : det_sets) all.insert(all.end(), set.begin(), set.end());
    std::stable_sort(all.begin(), all.end(), [](const Detection& a, const Detection& b) {
        return a.confidence > b.confidence;
    });

    std::vector<Cluster> clusters;
    for (const Detection& d : all) {
        double best = 0;
        size_t best_c = clusters.size();
        for (size_t c = 0; c < clusters.size(); ++c) {
            if (clusters[c].cls != d.cls) continue;
            double v = iou(d.box, clusters[c].fused);
            if (v > best) {
                best = v;
                best_c = c;
            }
        }
        if (best_c < clusters.size() && best >= cfg.iou_threshold) {
            clusters[best_c].add(d);
        } else {
            Cluster fresh;
            fresh.cls = d.cls;
            fresh.add(d);
            clusters.push_back(fresh);
        }
    }

    std::vector<Detection> out;
    out.reserve(clusters.size());
    for (const Cluster& c : clusters) {
        double conf = (c.sum_conf / c.size) *
                      (double(std::min(c.size, cfg.n_models)) / double(cfg.n_models));
        out.push_back({c.cls, conf, c.fused});
    }
    std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
        return a.confidence > b.confidence;
    });
    return out;
}

}  // namespace

std::vector<Detection> ensemble_merge(std::span<const std::vector<Detection>> det_sets,
                                      const FusionConfig& cfg) {
    if (det_sets.empty()) throw std::invalid_argument("ensemble_merge: no detection sets");
    if (cfg.n_models < 1) throw std::invalid_argument("ensemble_merge: n_models < 1");

    if (cfg.method == FusionMethod::Wbf) return wbf(det_sets, cfg);

    std::vector<Detection> all;
    for (const auto& set : det_sets) all.insert(all.end(), set.begin(), set.end());
    return nms(std::move(all), cfg.iou_threshold);
}

std::vector<Detection> blob_detect(const EventFrame& frame, const BlobParams& params) {
    if (params.min_area < 1) throw std::invalid_argument("blob_detect: min_area < 1");
    if (params.connectivity != 4 && params.connectivity != 8)
        throw std::invalid_argument("blob_detect: connectivity must be 4 or 8");

    const int w = frame.width, h = frame.height;
    const size_t n = size_t(w) * size_t(h);
    const bool counts = frame.mode == FrameMode::Count2Ch;

    // activity mask plus per-pixel event weight for the confidence score
    std::vector<uint8_t> active(n, 0);
    std::vector<uint32_t> weight(n, 0);
    for (size_t i = 0; i < n; ++i) {
        if (counts) {
            uint32_t c = frame.on[i] + frame.off[i];
            if (c >= params.activity_threshold && c > 0) {
                active[i] = 1;
                weight[i] = c;
            }
        } else if (frame.tri[i] != 128) {
            active[i] = 1;
            weight[i] = 1;
        }
    }

    static constexpr int dx8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int dy8[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int n_dirs = params.connectivity;

    std::vector<Detection> out;
    std::vector<uint8_t> seen(n, 0);
    std::vector<size_t> stack;
    for (size_t start = 0; start < n; ++start) {
        if (!active[start] || seen[start]) continue;
        seen[start] = 1;
        stack.assign(1, start);
        int x0 = w, y0 = h, x1 = -1, y1 = -1, area = 0;
        uint64_t events = 0;
        while (!stack.empty()) {
            size_t i = stack.back();
            stack.pop_back();
            int x = int(i % size_t(w)), y = int(i / size_t(w));
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
            ++area;
            events += weight[i];
            for (int d = 0; d < n_dirs; ++d) {
                int nx = x + dx8[d], ny = y + dy8[d];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                size_t j = size_t(ny) * size_t(w) + size_t(nx);
                if (!active[j] || seen[j]) continue;
                seen[j] = 1;
                stack.push_back(j);
            }
        }
        if (area < params.min_area) continue;
        double conf = std::min(1.0, double(events) / params.confidence_norm);
        NormBox box = NormBox::from_corners(double(x0) / w, double(y0) / h, double(x1 + 1) / w,
                                            double(y1 + 1) / h);
        out.push_back({ClassId::Car, conf, box});
    }
    std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
        return a.confidence > b.confidence;
    });
    return out;
}

}  // namespace evk
