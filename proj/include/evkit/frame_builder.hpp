#pragma once

// Accumulates event windows into 2D frames detectors can consume.
// Two encodings: TRI_LEVEL packs polarity into one 8-bit channel
// (0 = OFF majority, 128 = background, 255 = ON majority), COUNT_2CH
// keeps separate ON and OFF count planes for ML export.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evkit/boxes.hpp"
#include "evkit/event_model.hpp"
#include "evkit/image.hpp"

namespace evk {

enum class FrameMode { TriLevel, Count2Ch };

struct EventFrame {
    int width = 0;
    int height = 0;
    FrameMode mode = FrameMode::TriLevel;
    int64_t t0 = 0;  // window [t0, t1)
    int64_t t1 = 0;

    // TriLevel payload; empty in Count2Ch mode.
    std::vector<uint8_t> tri;
    // Count2Ch payload; empty in TriLevel mode.
    std::vector<uint32_t> on;
    std::vector<uint32_t> off;
    // Polarity of the window's last event per pixel (0 = none). Filled by
    // accumulate in Count2Ch mode so tri-level conversion can break ties;
    // empty on frames read back from a tensor file.
    std::vector<int8_t> last_pol;

    uint8_t tri_at(int x, int y) const { return tri[size_t(y) * width + x]; }
};

// Counts events of each polarity per pixel over [t0, t1).
// TRI_LEVEL ties with at least one event resolve to the polarity of the
// window's last event at that pixel. Throws on t0 > t1.
EventFrame accumulate(const EventStream& stream, int64_t t0, int64_t t1, FrameMode mode);

struct SequenceOptions {
    int64_t window_us = 0;
    int64_t stride_us = 0;
    FrameMode mode = FrameMode::TriLevel;
    // Emit only windows that fit entirely inside the stream span. Off by
    // default so a tiling (stride == window) partitions every event into
    // exactly one frame.
    bool drop_partial = false;
    // Grid origin; defaults to the first event's timestamp.
    std::optional<int64_t> origin;
};

// Windows start at origin + k*stride. Emission stops once a window reaches
// past one-past-the-last-event (that final, possibly partial window is kept
// unless drop_partial). Empty stream yields an empty sequence. Events before
// the origin fall outside every window.
std::vector<EventFrame> frame_sequence(const EventStream& stream, const SequenceOptions& opt);

// Count2Ch -> TriLevel using the stored counts and tie polarities. Ties
// without a recorded last polarity (tensor read-back) resolve to ON.
// TriLevel frames pass through unchanged.
EventFrame to_tri_level(const EventFrame& frame);

// Grayscale render; Count2Ch frames are converted to tri-level first.
ImageU8 render_image(const EventFrame& frame);
void render_png(const EventFrame& frame, const std::string& path);

// Render plus class-colored rectangles and labels. Detections get the
// confidence appended to the label.
ImageU8 render_overlay(const EventFrame& frame, std::span<const Detection> dets);
ImageU8 render_overlay(const EventFrame& frame, std::span<const Annotation> anns);
void overlay_boxes(const EventFrame& frame, std::span<const Detection> dets,
                   const std::string& path);
void overlay_boxes(const EventFrame& frame, std::span<const Annotation> anns,
                   const std::string& path);

Rgb class_color(ClassId cls);

// Count2Ch frame -> flat binary tensor (row-major u16 LE, ON plane then OFF
// plane, counts clamped to 65535) plus a <path>.json sidecar with dims and
// window. read_count_tensor reads the pair back.
void write_count_tensor(const EventFrame& frame, const std::string& path);
EventFrame read_count_tensor(const std::string& path);

// Reinterpret an 8-bit grayscale image as a TriLevel frame. Throws if any
// pixel is not 0, 128 or 255.
EventFrame tri_frame_from_image(const ImageU8& img, int64_t t0, int64_t t1);

}  // namespace evk
