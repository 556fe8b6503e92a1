#pragma once

// Detection scoring: greedy IoU matching, per-class AP over the monotone
// precision envelope, mAP, and a wall-clock FPS benchmark harness.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "evkit/boxes.hpp"
#include "evkit/frame_builder.hpp"

namespace evk {

struct EvalConfig {
    double iou_threshold = 0.2;        // matching criterion
    double confidence_threshold = 0.2; // detections below are discarded
    bool eleven_point = false;         // legacy 11-point AP instead of all-point
};

double iou(const NormBox& a, const NormBox& b);

// Flags are aligned with the input order; the matching itself walks
// detections by descending confidence. A detection claims the unmatched
// same-class GT of highest IoU when that IoU reaches the threshold.
struct MatchResult {
    std::vector<uint8_t> det_tp;
    std::vector<uint8_t> gt_matched;
};
MatchResult match_detections(std::span<const Detection> dets, std::span<const Annotation> gts,
                             const EvalConfig& cfg);

// tp_flags must be sorted by descending confidence. Returns nullopt when
// n_gt = 0 (class absent, excluded from mAP).
std::optional<double> average_precision(std::span<const uint8_t> tp_flags, int n_gt,
                                        bool eleven_point = false);

struct PrPoint {
    double recall = 0;
    double precision = 0;
};

struct ClassEval {
    int n_gt = 0;
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double precision = 0;
    double recall = 0;
    std::optional<double> ap;
    std::vector<PrPoint> pr;  // cumulative curve, confidence descending
};

struct FpsStats {
    double fps = 0;
    double mean_ms = 0;
    double p50_ms = 0;
    double p99_ms = 0;
    int frames = 0;
};

struct EvalReport {
    std::array<ClassEval, kNumClasses> per_class;
    double map = 0;  // mean AP over classes with ground truth
    std::optional<FpsStats> fps;
};

// Pools match flags across images per class. Prediction image ids must be a
// subset of the ground-truth manifest. Equal-confidence ties order by
// (image id, detection index), so image ordering cannot change the result.
EvalReport evaluate(const std::map<std::string, std::vector<Detection>>& predictions,
                    const std::map<std::string, std::vector<Annotation>>& ground_truth,
                    const EvalConfig& cfg);

using Detector = std::function<std::vector<Detection>(const EventFrame&)>;

// Runs the detector over every frame, discards the first `warmup` timings,
// reports FPS = 1 / mean latency plus p50/p99. Throws if nothing is left to
// measure or the detector fails (message carries the frame index).
FpsStats fps_bench(const Detector& detector, std::span<const EventFrame> frames, int warmup);

// Prediction files: lines of "class conf cx cy w h", one file per image.
std::vector<Detection> read_prediction_file(const std::string& path);
std::map<std::string, std::vector<Detection>> read_predictions(const std::string& dir);
void write_prediction_file(std::span<const Detection> dets, const std::string& path);

nlohmann::ordered_json report_to_json(const EvalReport& report, const EvalConfig& cfg);
std::string report_table(const EvalReport& report);
void write_pr_csv(const EvalReport& report, const std::string& path);

}  // namespace evk
