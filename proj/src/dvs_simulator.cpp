#include "evkit/dvs_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evkit/parallel.hpp"
#include "evkit/rng.hpp"

namespace evk {

namespace {

// Guard against a crossing landing epsilon short of a threshold multiple.
constexpr double kCrossingEps = 1e-9;

void check_frame_dims(const PixelState& state, const LumaFrame& frame) {
    if (frame.width != state.width || frame.height != state.height)
        throw std::invalid_argument("frame dimensions " + std::to_string(frame.width) + "x" +
                                    std::to_string(frame.height) + " do not match state " +
                                    std::to_string(state.width) + "x" +
                                    std::to_string(state.height));
}

// Stable sort by timestamp; counting sort over the window when the span is
// reasonable, std::stable_sort otherwise. Both preserve insertion order on
// ties, so the result is identical either way.
struct SortScratch {
    std::vector<uint32_t> counts;
    std::vector<Event> tmp;
};

void sort_by_time(std::vector<Event>& ev, int64_t t_lo, int64_t t_hi, SortScratch& scratch) {
    if (ev.size() < 2) return;
    uint64_t span = uint64_t(t_hi - t_lo) + 1;
    uint64_t limit = std::max<uint64_t>(uint64_t(1) << 22, 4 * ev.size());
    if (t_hi < t_lo || span > limit) {
        std::stable_sort(ev.begin(), ev.end(),
                         [](const Event& a, const Event& b) { return a.t < b.t; });
        return;
    }
    scratch.counts.assign(span + 1, 0);
    for (const Event& e : ev) ++scratch.counts[size_t(e.t - t_lo)];
    uint32_t running = 0;
    for (auto& c : scratch.counts) {
        uint32_t n = c;
        c = running;
        running += n;
    }
    scratch.tmp.resize(ev.size());
    for (const Event& e : ev) scratch.tmp[scratch.counts[size_t(e.t - t_lo)]++] = e;
    ev.swap(scratch.tmp);
}

// One pixel's threshold crossings for the current pair. n is signed:
// positive = ON, negative = OFF. step is the crossing fraction theta/|dL|.
struct ActivePixel {
    uint32_t idx;
    int32_t n;
    double step;
};

// Scans rows [y0, y1), updates mem in threshold quanta and collects the
// active pixels. Returns the event count for the scanned range.
size_t scan_rows(PixelState& state, const LumaFrame& frame, const SimParams& p, size_t y0,
                 size_t y1, std::vector<ActivePixel>& active) {
    const size_t w = size_t(state.width);
    size_t total = 0;
    for (size_t y = y0; y < y1; ++y) {
        for (size_t i = y * w; i < (y + 1) * w; ++i) {
            double level = lin_log(frame.pixels[i], p.lin_log_knee);
            double delta = level - state.mem[i];
            if (delta > 0) {
                auto n = int64_t(std::floor(delta / p.theta_on + kCrossingEps));
                if (n == 0) continue;
                state.mem[i] += double(n) * p.theta_on;
                active.push_back({uint32_t(i), int32_t(n), p.theta_on / delta});
                total += size_t(n);
            } else if (delta < 0) {
                auto n = int64_t(std::floor(-delta / p.theta_off + kCrossingEps));
                if (n == 0) continue;
                state.mem[i] -= double(n) * p.theta_off;
                active.push_back({uint32_t(i), int32_t(-n), p.theta_off / -delta});
                total += size_t(n);
            }
        }
    }
    return total;
}

void emit_active(std::span<const ActivePixel> active, int width, int64_t t_prev, int64_t dt_us,
                 Event* out) {
    for (const ActivePixel& ap : active) {
        auto x = uint16_t(ap.idx % uint32_t(width));
        auto y = uint16_t(ap.idx / uint32_t(width));
        int8_t pol = ap.n > 0 ? int8_t(1) : int8_t(-1);
        int32_t count = ap.n > 0 ? ap.n : -ap.n;
        for (int32_t k = 1; k <= count; ++k) {
            double frac = double(k) * ap.step;
            if (frac > 1.0) frac = 1.0;
            *out++ = Event{t_prev + int64_t(double(dt_us) * frac + 0.5), x, y, pol};
        }
    }
}

// Shared core of simulate_pair and simulate_video. Appends the interval's
// signal events, sorted, to `out`.
void emit_pair(PixelState& state, const LumaFrame& frame, const SimParams& p, int threads,
               std::vector<Event>& out, SortScratch& scratch) {
    check_frame_dims(state, frame);
    if (frame.t <= state.t_last)
        throw std::invalid_argument("frame timestamp " + std::to_string(frame.t) +
                                    " not after state t_last " + std::to_string(state.t_last));

    const int64_t t_prev = state.t_last;
    const int64_t dt_us = frame.t - t_prev;
    const auto rows = size_t(state.height);

    out.clear();
    if (threads <= 1) {
        std::vector<ActivePixel> active;
        size_t total = scan_rows(state, frame, p, 0, rows, active);
        out.resize(total);
        emit_active(active, state.width, t_prev, dt_us, out.data());
    } else {
        // Row chunks keep the row-major tie order no matter how many
        // workers run: each chunk lands at a precomputed offset.
        int workers = std::min<int>(threads, int(rows));
        std::vector<std::vector<ActivePixel>> active(size_t(workers) + 1);
        std::vector<size_t> counts(size_t(workers) + 1, 0);
        parallel_chunks(rows, workers, [&](int chunk, size_t y0, size_t y1) {
            counts[size_t(chunk)] = scan_rows(state, frame, p, y0, y1, active[size_t(chunk)]);
        });
        size_t total = 0;
        std::vector<size_t> offsets(active.size(), 0);
        for (size_t c = 0; c < active.size(); ++c) {
            offsets[c] = total;
            total += counts[c];
        }
        out.resize(total);
        parallel_chunks(active.size(), int(active.size()), [&](int, size_t c0, size_t c1) {
            for (size_t c = c0; c < c1; ++c)
                emit_active(active[c], state.width, t_prev, dt_us, out.data() + offsets[c]);
        });
    }

    sort_by_time(out, t_prev, frame.t, scratch);
    state.t_last = frame.t;
}

}  // namespace

void check_params(const SimParams& p) {
    if (!(p.theta_on > 0) || !(p.theta_off > 0))
        throw std::invalid_argument("contrast thresholds must be positive");
    if (p.leak_rate_hz < 0 || p.shot_noise_rate_hz < 0)
        throw std::invalid_argument("noise rates must be >= 0");
    if (!(p.lin_log_knee > 0) || !(p.lin_log_knee < 255))
        throw std::invalid_argument("lin_log knee must be in (0, 255)");
}

double lin_log(double y, double knee) {
    if (y < knee) return y * (std::log(knee) / knee);
    return std::log(y);
}

LumaFrame luma_from_rgb(const ImageU8& rgb, int64_t t, double wr, double wg, double wb) {
    if (rgb.channels != 3)
        throw std::invalid_argument("luma_from_rgb: expected 3 channels, got " +
                                    std::to_string(rgb.channels));
    LumaFrame out;
    out.t = t;
    out.width = rgb.width;
    out.height = rgb.height;
    out.pixels.resize(size_t(rgb.width) * rgb.height);
    for (size_t i = 0; i < out.pixels.size(); ++i) {
        double y = wr * rgb.data[3 * i] + wg * rgb.data[3 * i + 1] + wb * rgb.data[3 * i + 2];
        out.pixels[i] = float(std::clamp(y, 0.0, 255.0));
    }
    return out;
}

LumaFrame luma_from_image(const ImageU8& img, int64_t t) {
    if (img.channels == 3) return luma_from_rgb(img, t);
    if (img.channels != 1)
        throw std::invalid_argument("luma_from_image: expected 1 or 3 channels");
    LumaFrame out;
    out.t = t;
    out.width = img.width;
    out.height = img.height;
    out.pixels.assign(img.data.begin(), img.data.end());
    return out;
}

PixelState init_state(const LumaFrame& first, const SimParams& p) {
    PixelState state;
    state.width = first.width;
    state.height = first.height;
    state.t_last = first.t;
    state.mem.resize(first.pixels.size());
    for (size_t i = 0; i < state.mem.size(); ++i)
        state.mem[i] = lin_log(first.pixels[i], p.lin_log_knee);
    return state;
}

std::vector<Event> simulate_pair(PixelState& state, const LumaFrame& frame, const SimParams& p) {
    std::vector<Event> out;
    SortScratch scratch;
    emit_pair(state, frame, p, 1, out, scratch);
    return out;
}

void apply_leak(PixelState& state, double dt_seconds, const SimParams& p) {
    if (dt_seconds < 0) throw std::invalid_argument("apply_leak: negative dt");
    const double decay = p.leak_rate_hz * p.theta_on * dt_seconds;
    if (decay == 0) return;
    for (double& m : state.mem) m -= decay;
}

std::vector<Event> apply_shot_noise(int64_t t0, int64_t t1, int width, int height,
                                    const SimParams& p, std::mt19937_64& rng,
                                    const LumaFrame* luma) {
    if (t0 >= t1) throw std::invalid_argument("apply_shot_noise: empty interval");
    std::vector<Event> out;
    const double duration_s = double(t1 - t0) * 1e-6;
    const double lambda = p.shot_noise_rate_hz * duration_s * double(width) * double(height);
    if (lambda <= 0) return out;

    const int64_t total = rng::poisson(rng, lambda);
    out.reserve(size_t(total));
    const auto n_pixels = uint64_t(width) * uint64_t(height);
    for (int64_t i = 0; i < total; ++i) {
        int64_t t = t0 + int64_t(rng::uniform_below(rng, uint64_t(t1 - t0)));
        auto idx = uint32_t(rng::uniform_below(rng, n_pixels));
        auto pol = int8_t((rng() & 1) ? 1 : -1);
        auto x = uint16_t(idx % uint32_t(width));
        auto y = uint16_t(idx / uint32_t(width));
        if (p.shot_noise_dark_bias && luma) {
            double keep = 1.0 - double(luma->at(x, y)) / 255.0;
            if (rng::uniform_unit(rng) >= keep) continue;
        }
        out.push_back(Event{t, x, y, pol});
    }
    SortScratch scratch;
    sort_by_time(out, t0, t1 - 1, scratch);
    return out;
}

EventStream simulate_video(std::span<const LumaFrame> frames, const SimParams& p, int threads) {
    check_params(p);
    if (frames.size() < 2)
        throw std::invalid_argument("simulate_video: need at least 2 frames, got " +
                                    std::to_string(frames.size()));
    for (size_t i = 1; i < frames.size(); ++i) {
        if (frames[i].width != frames[0].width || frames[i].height != frames[0].height)
            throw std::invalid_argument("simulate_video: frame " + std::to_string(i) +
                                        " changes dimensions");
        if (frames[i].t <= frames[i - 1].t)
            throw std::invalid_argument("simulate_video: timestamp regression at frame " +
                                        std::to_string(i));
    }

    PixelState state = init_state(frames[0], p);
    std::mt19937_64 noise_rng(p.seed);

    EventStream out;
    out.width = frames[0].width;
    out.height = frames[0].height;

    SortScratch scratch;
    std::vector<Event> signal;
    std::vector<Event> merged;
    for (size_t i = 1; i < frames.size(); ++i) {
        const double dt_s = double(frames[i].t - state.t_last) * 1e-6;
        apply_leak(state, dt_s, p);
        emit_pair(state, frames[i], p, threads, signal, scratch);

        if (p.shot_noise_rate_hz > 0) {
            const LumaFrame* bias = p.shot_noise_dark_bias ? &frames[i - 1] : nullptr;
            std::vector<Event> noise = apply_shot_noise(frames[i - 1].t, frames[i].t, out.width,
                                                        out.height, p, noise_rng, bias);
            merged.resize(signal.size() + noise.size());
            // signal wins ties, same as merge()
            std::merge(signal.begin(), signal.end(), noise.begin(), noise.end(), merged.begin(),
                       [](const Event& a, const Event& b) { return a.t < b.t; });
            out.events.insert(out.events.end(), merged.begin(), merged.end());
        } else {
            out.events.insert(out.events.end(), signal.begin(), signal.end());
        }
    }
    return out;
}

}  // namespace evk
