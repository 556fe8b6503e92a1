#include "evkit/detection_eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace fs = std::filesystem;

namespace evk {

double iou(const NormBox& a, const NormBox& b) {
    const double ix0 = std::max(a.x0(), b.x0()), iy0 = std::max(a.y0(), b.y0());
    const double ix1 = std::min(a.x1(), b.x1()), iy1 = std::min(a.y1(), b.y1());
    const double iw = ix1 - ix0, ih = iy1 - iy0;
    if (iw <= 0 || ih <= 0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

MatchResult match_detections(std::span<const Detection> dets, std::span<const Annotation> gts,
                             const EvalConfig& cfg) {
    MatchResult res;
    res.det_tp.assign(dets.size(), 0);
    res.gt_matched.assign(gts.size(), 0);

    std::vector<size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return dets[a].confidence > dets[b].confidence;
    });

    for (size_t di : order) {
        const Detection& d = dets[di];
        double best = 0;
        size_t best_gt = gts.size();
        for (size_t gi = 0; gi < gts.size(); ++gi) {
            if (res.gt_matched[gi] || gts[gi].cls != d.cls) continue;
            double v = iou(d.box, gts[gi].box);
            if (v > best) {
                best = v;
                best_gt = gi;
            }
        }
        if (best_gt < gts.size() && best >= cfg.iou_threshold) {
            res.det_tp[di] = 1;
            res.gt_matched[best_gt] = 1;
        }
    }
    return res;
}

std::optional<double> average_precision(std::span<const uint8_t> tp_flags, int n_gt,
                                        bool eleven_point) {
    if (n_gt <= 0) return std::nullopt;
    if (tp_flags.empty()) return 0.0;

    const size_t n = tp_flags.size();
    std::vector<double> prec(n), rec(n);
    int tp = 0;
    for (size_t i = 0; i < n; ++i) {
        tp += tp_flags[i];
        prec[i] = double(tp) / double(i + 1);
        rec[i] = double(tp) / double(n_gt);
    }
    // monotone envelope from the right
    for (size_t i = n - 1; i-- > 0;) prec[i] = std::max(prec[i], prec[i + 1]);

    if (eleven_point) {
        double sum = 0;
        for (int k = 0; k <= 10; ++k) {
            double r = double(k) / 10.0;
            double best = 0;
            for (size_t i = 0; i < n; ++i)
                if (rec[i] >= r - 1e-12) {
                    best = prec[i];
                    break;
                }
            sum += best;
        }
        return sum / 11.0;
    }

    double ap = 0, prev_rec = 0;
    for (size_t i = 0; i < n; ++i) {
        ap += (rec[i] - prev_rec) * prec[i];
        prev_rec = rec[i];
    }
    return ap;
}

EvalReport evaluate(const std::map<std::string, std::vector<Detection>>& predictions,
                    const std::map<std::string, std::vector<Annotation>>& ground_truth,
                    const EvalConfig& cfg) {
    if (!(cfg.iou_threshold > 0 && cfg.iou_threshold <= 1))
        throw std::invalid_argument("iou_threshold not in (0,1]");
    if (!(cfg.confidence_threshold >= 0 && cfg.confidence_threshold < 1))
        throw std::invalid_argument("confidence_threshold not in [0,1)");
    for (const auto& [id, dets] : predictions)
        if (!ground_truth.count(id))
            throw std::runtime_error("predictions for unknown image id '" + id + "'");

    // (confidence, tp) per class, pooled; map order makes ties image-stable
    std::array<std::vector<std::pair<double, uint8_t>>, kNumClasses> pooled;
    EvalReport report;

    for (const auto& [id, gts] : ground_truth) {
        for (const Annotation& g : gts) ++report.per_class[size_t(g.cls)].n_gt;

        auto it = predictions.find(id);
        if (it == predictions.end()) continue;
        std::vector<Detection> dets;
        for (const Detection& d : it->second)
            if (d.confidence >= cfg.confidence_threshold) dets.push_back(d);

        MatchResult m = match_detections(dets, gts, cfg);
        for (size_t i = 0; i < dets.size(); ++i)
            pooled[size_t(dets[i].cls)].push_back({dets[i].confidence, m.det_tp[i]});
    }

    double ap_sum = 0;
    int ap_classes = 0;
    for (size_t c = 0; c < kNumClasses; ++c) {
        ClassEval& ce = report.per_class[c];
        auto& rows = pooled[c];
        std::stable_sort(rows.begin(), rows.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });

        std::vector<uint8_t> flags(rows.size());
        for (size_t i = 0; i < rows.size(); ++i) {
            flags[i] = rows[i].second;
            ce.tp += rows[i].second;
        }
        ce.fp = int(rows.size()) - ce.tp;
        ce.fn = ce.n_gt - ce.tp;
        ce.precision = rows.empty() ? 0.0 : double(ce.tp) / double(rows.size());
        ce.recall = ce.n_gt == 0 ? 0.0 : double(ce.tp) / double(ce.n_gt);
        ce.ap = average_precision(flags, ce.n_gt, cfg.eleven_point);

        int tp_cum = 0;
        for (size_t i = 0; i < rows.size(); ++i) {
            tp_cum += rows[i].second;
            if (ce.n_gt > 0)
                ce.pr.push_back({double(tp_cum) / ce.n_gt, double(tp_cum) / double(i + 1)});
        }

        if (ce.ap) {
            ap_sum += *ce.ap;
            ++ap_classes;
        }
    }
    report.map = ap_classes ? ap_sum / ap_classes : 0.0;
    return report;
}

FpsStats fps_bench(const Detector& detector, std::span<const EventFrame> frames, int warmup) {
    if (warmup < 0) throw std::invalid_argument("fps_bench: negative warmup");
    if (frames.size() <= size_t(warmup))
        throw std::invalid_argument("fps_bench: no frames left after warmup");

    std::vector<double> lat_ms;
    lat_ms.reserve(frames.size() - size_t(warmup));
    for (size_t i = 0; i < frames.size(); ++i) {
        auto start = std::chrono::steady_clock::now();
        try {
            detector(frames[i]);
        } catch (const std::exception& e) {
            throw std::runtime_error("fps_bench: detector failed at frame " + std::to_string(i) +
                                     ": " + e.what());
        }
        auto stop = std::chrono::steady_clock::now();
        if (i >= size_t(warmup))
            lat_ms.push_back(std::chrono::duration<double, std::milli>(stop - start).count());
    }

    FpsStats stats;
    stats.frames = int(lat_ms.size());
    stats.mean_ms = std::accumulate(lat_ms.begin(), lat_ms.end(), 0.0) / double(lat_ms.size());
    std::sort(lat_ms.begin(), lat_ms.end());
    auto rank = [&](double q) {
        size_t i = size_t(std::ceil(q * double(lat_ms.size()))) - 1;
        return lat_ms[std::min(i, lat_ms.size() - 1)];
    };
    stats.p50_ms = rank(0.50);
    stats.p99_ms = rank(0.99);
    stats.fps = stats.mean_ms > 0 ? 1000.0 / stats.mean_ms : 0.0;
    return stats;
}

std::vector<Detection> read_prediction_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::vector<Detection> dets;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fail = [&](const std::string& why) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + why);
        };
        int cls;
        double conf, cx, cy, w, h;
        char extra;
        int n = std::sscanf(line.c_str(), "%d %lf %lf %lf %lf %lf %c", &cls, &conf, &cx, &cy, &w,
                            &h, &extra);
        if (n != 6) fail("expected 'class conf cx cy w h'");
        if (cls < 0 || cls > 3) fail("class " + std::to_string(cls) + " outside 0..3");
        if (conf < 0 || conf > 1) fail("confidence outside [0,1]");
        if (cx < 0 || cx > 1 || cy < 0 || cy > 1) fail("center outside [0,1]");
        if (w <= 0 || w > 1 || h <= 0 || h > 1) fail("size outside (0,1]");
        dets.push_back({class_from_int(cls), conf, NormBox{cx, cy, w, h}});
    }
    return dets;
}

std::map<std::string, std::vector<Detection>> read_predictions(const std::string& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
    std::map<std::string, std::vector<Detection>> out;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.path().extension() == ".txt")
            out[entry.path().stem().string()] = read_prediction_file(entry.path().string());
    return out;
}

void write_prediction_file(std::span<const Detection> dets, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char line[160];
    for (const Detection& d : dets) {
        std::snprintf(line, sizeof(line), "%d %.6f %.6f %.6f %.6f %.6f\n", int(d.cls),
                      d.confidence, d.box.cx, d.box.cy, d.box.w, d.box.h);
        out << line;
    }
}

nlohmann::ordered_json report_to_json(const EvalReport& report, const EvalConfig& cfg) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["iou_threshold"] = cfg.iou_threshold;
    j["confidence_threshold"] = cfg.confidence_threshold;
    j["map"] = report.map;
    j["classes"] = nlohmann::ordered_json::array();
    for (size_t c = 0; c < kNumClasses; ++c) {
        const ClassEval& ce = report.per_class[c];
        nlohmann::ordered_json jc;
        jc["id"] = c;
        jc["name"] = class_name(class_from_int(int(c)));
        jc["n_gt"] = ce.n_gt;
        jc["tp"] = ce.tp;
        jc["fp"] = ce.fp;
        jc["fn"] = ce.fn;
        jc["precision"] = ce.precision;
        jc["recall"] = ce.recall;
        if (ce.ap)
            jc["ap"] = *ce.ap;
        else
            jc["ap"] = nullptr;
        j["classes"].push_back(jc);
    }
    if (report.fps) {
        j["fps"] = {{"fps", report.fps->fps},
                    {"mean_ms", report.fps->mean_ms},
                    {"p50_ms", report.fps->p50_ms},
                    {"p99_ms", report.fps->p99_ms},
                    {"frames", report.fps->frames}};
    }
    return j;
}

std::string report_table(const EvalReport& report) {
    char line[160];
    std::string out;
    out += "class           n_gt    tp    fp    fn   prec  recall      ap\n";
    for (size_t c = 0; c < kNumClasses; ++c) {
        const ClassEval& ce = report.per_class[c];
        char ap[32] = "-";
        if (ce.ap) std::snprintf(ap, sizeof(ap), "%.4f", *ce.ap);
        std::snprintf(line, sizeof(line), "%-14s %5d %5d %5d %5d  %5.3f   %5.3f  %6s\n",
                      class_name(class_from_int(int(c))), ce.n_gt, ce.tp, ce.fp, ce.fn,
                      ce.precision, ce.recall, ap);
        out += line;
    }
    std::snprintf(line, sizeof(line), "mAP %.4f\n", report.map);
    out += line;
    if (report.fps) {
        std::snprintf(line, sizeof(line), "fps %.1f (mean %.3f ms, p50 %.3f ms, p99 %.3f ms)\n",
                      report.fps->fps, report.fps->mean_ms, report.fps->p50_ms,
                      report.fps->p99_ms);
        out += line;
    }
    return out;
}

void write_pr_csv(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "class,recall,precision\n";
    char line[128];
    for (size_t c = 0; c < kNumClasses; ++c)
        for (const PrPoint& p : report.per_class[c].pr) {
            std::snprintf(line, sizeof(line), "%s,%.6f,%.6f\n", class_name(class_from_int(int(c))),
                          p.recall, p.precision);
            out << line;
        }
}

}  // namespace evk
