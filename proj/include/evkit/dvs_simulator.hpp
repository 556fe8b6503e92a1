#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "evkit/event_model.hpp"
#include "evkit/image.hpp"

namespace evk {

// DVS pixel model configuration. Thresholds are in log-intensity units;
// noise rates are per pixel per second.
struct SimParams {
    double theta_on = 0.2;
    double theta_off = 0.2;
    double leak_rate_hz = 0.1;          // spurious ON events from memorized-value decay
    double shot_noise_rate_hz = 0.001;  // random events, both polarities combined
    double lin_log_knee = 20.0;         // DN knee of the lin-log mapping, 0..255 scale
    bool shot_noise_dark_bias = false;  // scale the shot rate by (1 - y/255)
    uint64_t seed = 7;
};

// Throws std::invalid_argument on an invariant breach.
void check_params(const SimParams& p);

// Intensity frame after luma conversion, values in [0, 255].
struct LumaFrame {
    int64_t t = 0;  // microseconds
    int width = 0;
    int height = 0;
    std::vector<float> pixels;

    float at(int x, int y) const { return pixels[size_t(y) * width + x]; }
};

// Per-pixel memorized log intensity plus the timestamp of the last
// processed frame. Exclusively owned during a simulation run.
struct PixelState {
    int width = 0;
    int height = 0;
    int64_t t_last = 0;
    std::vector<double> mem;
};

// Rec.601 weights: Y = 0.299 R + 0.587 G + 0.114 B, clamped to [0,255].
// Requires a 3-channel frame.
LumaFrame luma_from_rgb(const ImageU8& rgb, int64_t t,
                        double wr = 0.299, double wg = 0.587, double wb = 0.114);

// Gray frames pass through, RGB goes through luma_from_rgb.
LumaFrame luma_from_image(const ImageU8& img, int64_t t);

// Linear below the knee, natural log above, continuous at the knee:
//   y < knee:  y * ln(knee) / knee
//   y >= knee: ln(y)
double lin_log(double y, double knee);

// mem = lin_log of the first frame.
PixelState init_state(const LumaFrame& first, const SimParams& p);

// Generates events for one inter-frame interval (state.t_last, frame.t].
// Per pixel, dL = lin_log(y) - mem crosses n = floor(|dL|/theta) thresholds;
// the k-th event fires at the linearly interpolated crossing time and mem
// advances by n*theta toward the new value, keeping the sub-threshold
// residual. Output is sorted by timestamp, row-major pixel order on ties.
std::vector<Event> simulate_pair(PixelState& state, const LumaFrame& frame, const SimParams& p);

// Memorized-value decay: mem -= leak_rate_hz * theta_on * dt at every pixel,
// so a static scene produces ON crossings at ~leak_rate_hz per pixel per
// second on the next simulate_pair.
void apply_leak(PixelState& state, double dt_seconds, const SimParams& p);

// Poisson shot noise over [t0, t1): per pixel and per polarity the count is
// ~Poisson(shot_noise_rate_hz * dt / 2), timestamps uniform in the interval.
// Sampled via superposition: one total-count draw, then uniform placement.
// When `luma` is given and shot_noise_dark_bias is set, the per-pixel rate
// is thinned by (1 - y/255). Sorted by timestamp; deterministic per rng state.
std::vector<Event> apply_shot_noise(int64_t t0, int64_t t1, int width, int height,
                                    const SimParams& p, std::mt19937_64& rng,
                                    const LumaFrame* luma = nullptr);

// Full pipeline over a frame sequence: init on the first frame, then fold
// apply_leak + simulate_pair over consecutive pairs and merge shot noise.
// Requires >= 2 frames, strictly increasing timestamps, constant dims.
// Output is identical for any `threads` value.
EventStream simulate_video(std::span<const LumaFrame> frames, const SimParams& p,
                           int threads = 1);

}  // namespace evk
