#include "evkit/frame_builder.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace evk {

namespace {

uint8_t tri_value(uint32_t n_on, uint32_t n_off, int8_t last) {
    if (n_on == 0 && n_off == 0) return 128;
    if (n_on > n_off) return 255;
    if (n_off > n_on) return 0;
    return last >= 0 ? 255 : 0;
}

void check_count_mode(const EventFrame& frame, const char* op) {
    if (frame.mode != FrameMode::Count2Ch)
        throw std::invalid_argument(std::string(op) + ": frame is not COUNT_2CH");
}

}  // namespace

EventFrame accumulate(const EventStream& stream, int64_t t0, int64_t t1, FrameMode mode) {
    if (t0 > t1) throw std::invalid_argument("accumulate: window t0 > t1");

    EventFrame frame;
    frame.width = stream.width;
    frame.height = stream.height;
    frame.mode = mode;
    frame.t0 = t0;
    frame.t1 = t1;

    const size_t n = size_t(stream.width) * size_t(stream.height);
    frame.on.assign(n, 0);
    frame.off.assign(n, 0);
    frame.last_pol.assign(n, 0);

    auto cmp = [](const Event& e, int64_t t) { return e.t < t; };
    auto lo = std::lower_bound(stream.events.begin(), stream.events.end(), t0, cmp);
    auto hi = std::lower_bound(lo, stream.events.end(), t1, cmp);
    for (auto it = lo; it != hi; ++it) {
        size_t i = size_t(it->y) * stream.width + it->x;
        if (it->p > 0)
            ++frame.on[i];
        else
            ++frame.off[i];
        frame.last_pol[i] = it->p;
    }

    if (mode == FrameMode::TriLevel) {
        frame.tri.resize(n);
        for (size_t i = 0; i < n; ++i)
            frame.tri[i] = tri_value(frame.on[i], frame.off[i], frame.last_pol[i]);
        frame.on.clear();
        frame.off.clear();
        frame.last_pol.clear();
    }
    return frame;
}

std::vector<EventFrame> frame_sequence(const EventStream& stream, const SequenceOptions& opt) {
    if (opt.window_us <= 0 || opt.stride_us <= 0)
        throw std::invalid_argument("frame_sequence: window and stride must be positive");

    std::vector<EventFrame> frames;
    if (stream.events.empty()) return frames;

    const int64_t origin = opt.origin.value_or(stream.events.front().t);
    const int64_t end = stream.events.back().t + 1;
    for (int64_t s = origin; s < end; s += opt.stride_us) {
        // Once a window pokes past the stream end every later one does too.
        if (s + opt.window_us > end && opt.drop_partial) break;
        frames.push_back(accumulate(stream, s, s + opt.window_us, opt.mode));
        if (s + opt.window_us >= end) break;
    }
    return frames;
}

EventFrame to_tri_level(const EventFrame& frame) {
    if (frame.mode == FrameMode::TriLevel) return frame;
    EventFrame out;
    out.width = frame.width;
    out.height = frame.height;
    out.mode = FrameMode::TriLevel;
    out.t0 = frame.t0;
    out.t1 = frame.t1;
    const size_t n = size_t(frame.width) * size_t(frame.height);
    out.tri.resize(n);
    for (size_t i = 0; i < n; ++i) {
        int8_t last = frame.last_pol.empty() ? int8_t(1) : frame.last_pol[i];
        out.tri[i] = tri_value(frame.on[i], frame.off[i], last);
    }
    return out;
}

ImageU8 render_image(const EventFrame& frame) {
    const EventFrame* src = &frame;
    EventFrame converted;
    if (frame.mode != FrameMode::TriLevel) {
        converted = to_tri_level(frame);
        src = &converted;
    }
    ImageU8 img;
    img.width = src->width;
    img.height = src->height;
    img.channels = 1;
    img.data = src->tri;
    return img;
}

void render_png(const EventFrame& frame, const std::string& path) {
    write_png(render_image(frame), path);
}

Rgb class_color(ClassId cls) {
    switch (cls) {
        case ClassId::Person: return {230, 60, 60};
        case ClassId::Car: return {70, 200, 90};
        case ClassId::Pole: return {80, 130, 255};
        case ClassId::OtherVehicle: return {235, 190, 50};
    }
    return {255, 255, 255};
}

namespace {

void draw_labeled_box(ImageU8& img, ClassId cls, const NormBox& box, const std::string& label) {
    Rgb color = class_color(cls);
    int x0 = std::clamp(int(box.x0() * img.width), 0, img.width - 1);
    int y0 = std::clamp(int(box.y0() * img.height), 0, img.height - 1);
    int x1 = std::clamp(int(box.x1() * img.width) - 1, x0, img.width - 1);
    int y1 = std::clamp(int(box.y1() * img.height) - 1, y0, img.height - 1);
    draw_rect(img, x0, y0, x1, y1, color);
    int ty = y0 >= 9 ? y0 - 9 : y1 + 2;
    draw_text(img, x0, ty, label, color);
}

}  // namespace

ImageU8 render_overlay(const EventFrame& frame, std::span<const Detection> dets) {
    ImageU8 img = to_rgb(render_image(frame));
    char label[64];
    for (const Detection& d : dets) {
        std::snprintf(label, sizeof(label), "%s %.2f", class_name(d.cls), d.confidence);
        draw_labeled_box(img, d.cls, d.box, label);
    }
    return img;
}

ImageU8 render_overlay(const EventFrame& frame, std::span<const Annotation> anns) {
    ImageU8 img = to_rgb(render_image(frame));
    for (const Annotation& a : anns) draw_labeled_box(img, a.cls, a.box, class_name(a.cls));
    return img;
}

void overlay_boxes(const EventFrame& frame, std::span<const Detection> dets,
                   const std::string& path) {
    write_png(render_overlay(frame, dets), path);
}

void overlay_boxes(const EventFrame& frame, std::span<const Annotation> anns,
                   const std::string& path) {
    write_png(render_overlay(frame, anns), path);
}

void write_count_tensor(const EventFrame& frame, const std::string& path) {
    check_count_mode(frame, "write_count_tensor");

    std::string buf;
    buf.reserve(frame.on.size() * 4);
    auto put_plane = [&buf](const std::vector<uint32_t>& plane) {
        for (uint32_t v : plane) {
            uint16_t c = v > 65535 ? uint16_t(65535) : uint16_t(v);
            buf.push_back(char(c & 0xff));
            buf.push_back(char(c >> 8));
        }
    };
    put_plane(frame.on);
    put_plane(frame.off);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out) throw std::runtime_error("write failed: " + path);

    nlohmann::ordered_json side;
    side["width"] = frame.width;
    side["height"] = frame.height;
    side["mode"] = "COUNT_2CH";
    side["dtype"] = "uint16le";
    side["layout"] = {"on", "off"};
    side["t0"] = frame.t0;
    side["t1"] = frame.t1;
    std::ofstream js(path + ".json");
    if (!js) throw std::runtime_error("cannot write " + path + ".json");
    js << side.dump(2) << "\n";
}

EventFrame read_count_tensor(const std::string& path) {
    std::ifstream js(path + ".json");
    if (!js) throw std::runtime_error("cannot open " + path + ".json");
    nlohmann::json side = nlohmann::json::parse(js);
    if (side.value("mode", "") != "COUNT_2CH")
        throw std::runtime_error(path + ".json: unexpected mode");

    EventFrame frame;
    frame.mode = FrameMode::Count2Ch;
    frame.width = side.at("width").get<int>();
    frame.height = side.at("height").get<int>();
    frame.t0 = side.at("t0").get<int64_t>();
    frame.t1 = side.at("t1").get<int64_t>();
    if (frame.width <= 0 || frame.height <= 0)
        throw std::runtime_error(path + ".json: bad dimensions");

    const size_t n = size_t(frame.width) * size_t(frame.height);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string buf(n * 4, '\0');
    in.read(buf.data(), std::streamsize(buf.size()));
    if (size_t(in.gcount()) != buf.size()) throw std::runtime_error(path + ": truncated tensor");

    auto get_plane = [&buf](std::vector<uint32_t>& plane, size_t n_px, size_t base) {
        plane.resize(n_px);
        for (size_t i = 0; i < n_px; ++i) {
            auto lo = uint8_t(buf[base + 2 * i]);
            auto hi = uint8_t(buf[base + 2 * i + 1]);
            plane[i] = uint32_t(lo) | (uint32_t(hi) << 8);
        }
    };
    get_plane(frame.on, n, 0);
    get_plane(frame.off, n, n * 2);
    return frame;
}

EventFrame tri_frame_from_image(const ImageU8& img, int64_t t0, int64_t t1) {
    if (img.channels != 1)
        throw std::invalid_argument("tri_frame_from_image: expected grayscale");
    for (size_t i = 0; i < img.data.size(); ++i) {
        uint8_t v = img.data[i];
        if (v != 0 && v != 128 && v != 255)
            throw std::invalid_argument("tri_frame_from_image: pixel value " + std::to_string(v) +
                                        " at index " + std::to_string(i));
    }
    EventFrame frame;
    frame.width = img.width;
    frame.height = img.height;
    frame.mode = FrameMode::TriLevel;
    frame.t0 = t0;
    frame.t1 = t1;
    frame.tri = img.data;
    return frame;
}

}  // namespace evk
