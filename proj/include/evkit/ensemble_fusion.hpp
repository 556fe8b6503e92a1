#pragma once

// Fuses detections from several models into one set (cross-model NMS or
// weighted box fusion) and provides a connected-component blob detector so
// the pipeline runs end to end without an external model.

#include <span>
#include <vector>

#include "evkit/boxes.hpp"
#include "evkit/frame_builder.hpp"

namespace evk {

enum class FusionMethod { Nms, Wbf };

struct FusionConfig {
    FusionMethod method = FusionMethod::Nms;
    double iou_threshold = 0.5;
    // WBF scales cluster confidence by min(cluster size, n_models)/n_models,
    // penalizing boxes fewer models agreed on.
    int n_models = 2;
};

// Per class: keep the highest-confidence box, drop every remaining box with
// IoU >= threshold against a kept one, repeat. Output sorted by descending
// confidence (ties keep input order).
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

// NMS method concatenates all sets and suppresses. WBF clusters boxes per
// class against the running fused box (highest IoU >= threshold wins),
// fusing coordinates by confidence-weighted mean and confidence by
// (sum conf / cluster size) * min(cluster size, n_models) / n_models.
std::vector<Detection> ensemble_merge(std::span<const std::vector<Detection>> det_sets,
                                      const FusionConfig& cfg);

struct BlobParams {
    uint32_t activity_threshold = 1;  // min events per pixel (COUNT_2CH)
    int min_area = 9;                 // components below this many pixels drop
    int connectivity = 8;             // 4 or 8
    double confidence_norm = 1000.0;  // conf = min(1, events / norm)
};

// Binarizes activity (non-background for tri-level frames, count >= threshold
// for count frames), labels connected components, and emits one car-class
// detection per surviving component with its normalized AABB.
std::vector<Detection> blob_detect(const EventFrame& frame, const BlobParams& params);

}  // namespace evk
