#include "evkit/event_model.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace evk {

namespace {

std::string violation_text(ViolationKind kind, size_t index) {
    switch (kind) {
        case ViolationKind::Unsorted:
            return "unsorted at index " + std::to_string(index);
        case ViolationKind::OutOfBounds:
            return "out of bounds at index " + std::to_string(index);
        case ViolationKind::BadPolarity:
            return "bad polarity at index " + std::to_string(index);
        default:
            return "";
    }
}

ValidationResult violation(ViolationKind kind, size_t index) {
    return {false, kind, index, violation_text(kind, index)};
}

}  // namespace

ValidationResult validate(const EventStream& stream) {
    const auto& ev = stream.events;
    for (size_t i = 0; i < ev.size(); ++i) {
        if (ev[i].x >= stream.width || ev[i].y >= stream.height || ev[i].t < 0)
            return violation(ViolationKind::OutOfBounds, i);
        if (ev[i].p != 1 && ev[i].p != -1)
            return violation(ViolationKind::BadPolarity, i);
        if (i > 0 && ev[i].t < ev[i - 1].t)
            return violation(ViolationKind::Unsorted, i);
    }
    return {};
}

EventStream slice(const EventStream& stream, int64_t t0, int64_t t1) {
    if (t0 > t1)
        throw std::invalid_argument("slice: invalid window [" + std::to_string(t0) + ", " +
                                    std::to_string(t1) + ")");
    EventStream out;
    out.width = stream.width;
    out.height = stream.height;
    auto cmp = [](const Event& e, int64_t t) { return e.t < t; };
    auto lo = std::lower_bound(stream.events.begin(), stream.events.end(), t0, cmp);
    auto hi = std::lower_bound(lo, stream.events.end(), t1, cmp);
    out.events.assign(lo, hi);
    return out;
}

EventStream merge(const EventStream& a, const EventStream& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("merge: dimension mismatch (" + std::to_string(a.width) + "x" +
                                    std::to_string(a.height) + " vs " + std::to_string(b.width) +
                                    "x" + std::to_string(b.height) + ")");
    EventStream out;
    out.width = a.width;
    out.height = a.height;
    out.events.resize(a.events.size() + b.events.size());
    // std::merge is stable and takes from the first range on ties.
    std::merge(a.events.begin(), a.events.end(), b.events.begin(), b.events.end(),
               out.events.begin(), [](const Event& x, const Event& y) { return x.t < y.t; });
    return out;
}

EventFormat format_from_path(const std::string& path) {
    auto dot = path.rfind('.');
    if (dot != std::string::npos) {
        std::string ext = path.substr(dot);
        if (ext == ".csv" || ext == ".CSV") return EventFormat::Csv;
    }
    return EventFormat::Binary;
}

namespace {

constexpr char kMagic[4] = {'E', 'V', 'K', '1'};

void put_u32(std::string& buf, uint32_t v) {
    buf.push_back(char(v & 0xff));
    buf.push_back(char((v >> 8) & 0xff));
    buf.push_back(char((v >> 16) & 0xff));
    buf.push_back(char((v >> 24) & 0xff));
}

uint32_t get_u32(const unsigned char* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

uint64_t get_u64(const unsigned char* p) {
    return uint64_t(get_u32(p)) | uint64_t(get_u32(p + 4)) << 32;
}

[[noreturn]] void bad_line(const std::string& path, size_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

int8_t canonical_polarity(long long raw, const std::string& path, size_t line_no) {
    if (raw == 1) return 1;
    if (raw == 0 || raw == -1) return -1;
    bad_line(path, line_no, "polarity must be 1, 0 or -1 (got " + std::to_string(raw) + ")");
}

EventStream read_events_csv(const std::string& path, int expected_width, int expected_height) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::string line;
    size_t line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file, expected t,x,y,p header");
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != "t,x,y,p") bad_line(path, line_no, "expected header 't,x,y,p', got '" + line + "'");

    EventStream out;
    int max_x = -1, max_y = -1;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        long long t, x, y, p;
        char trailing;
        int n = std::sscanf(line.c_str(), "%lld ,%lld ,%lld ,%lld %c", &t, &x, &y, &p, &trailing);
        if (n != 4) bad_line(path, line_no, "malformed event line '" + line + "'");
        if (t < 0) bad_line(path, line_no, "negative timestamp");
        if (x < 0 || y < 0 || x > 0xffff || y > 0xffff) bad_line(path, line_no, "coordinate out of range");
        Event e;
        e.t = t;
        e.x = uint16_t(x);
        e.y = uint16_t(y);
        e.p = canonical_polarity(p, path, line_no);
        max_x = std::max(max_x, int(x));
        max_y = std::max(max_y, int(y));
        out.events.push_back(e);
    }
    out.width = expected_width > 0 ? expected_width : max_x + 1;
    out.height = expected_height > 0 ? expected_height : max_y + 1;
    if (expected_width > 0 && max_x >= expected_width)
        throw std::runtime_error(path + ": dimension mismatch, event x=" + std::to_string(max_x) +
                                 " outside width " + std::to_string(expected_width));
    if (expected_height > 0 && max_y >= expected_height)
        throw std::runtime_error(path + ": dimension mismatch, event y=" + std::to_string(max_y) +
                                 " outside height " + std::to_string(expected_height));
    return out;
}

EventStream read_events_binary(const std::string& path, int expected_width, int expected_height) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);

    std::array<unsigned char, 16> header;
    if (!in.read(reinterpret_cast<char*>(header.data()), header.size()))
        throw std::runtime_error(path + ": truncated header");
    if (std::memcmp(header.data(), kMagic, 4) != 0)
        throw std::runtime_error(path + ": bad magic, not an EVK1 event file");

    EventStream out;
    out.width = int(get_u32(header.data() + 4));
    out.height = int(get_u32(header.data() + 8));
    if (expected_width > 0 && out.width != expected_width)
        throw std::runtime_error(path + ": header/dimension mismatch, file width " +
                                 std::to_string(out.width) + " expected " + std::to_string(expected_width));
    if (expected_height > 0 && out.height != expected_height)
        throw std::runtime_error(path + ": header/dimension mismatch, file height " +
                                 std::to_string(out.height) + " expected " + std::to_string(expected_height));

    std::array<unsigned char, 16> rec;
    size_t index = 0;
    while (in.read(reinterpret_cast<char*>(rec.data()), rec.size())) {
        Event e;
        e.t = int64_t(get_u64(rec.data()));
        e.x = uint16_t(rec[8] | rec[9] << 8);
        e.y = uint16_t(rec[10] | rec[11] << 8);
        long long raw_p = int8_t(rec[12]);
        if (raw_p == 1)
            e.p = 1;
        else if (raw_p == 0 || raw_p == -1)
            e.p = -1;
        else
            throw std::runtime_error(path + ": record " + std::to_string(index) +
                                     ": polarity must be 1, 0 or -1");
        out.events.push_back(e);
        ++index;
    }
    if (in.gcount() != 0)
        throw std::runtime_error(path + ": truncated record " + std::to_string(index));
    return out;
}

}  // namespace

EventStream read_events(const std::string& path, EventFormat format, int expected_width,
                        int expected_height) {
    return format == EventFormat::Csv ? read_events_csv(path, expected_width, expected_height)
                                      : read_events_binary(path, expected_width, expected_height);
}

void write_events(const EventStream& stream, const std::string& path, EventFormat format) {
    std::ofstream out(path, format == EventFormat::Binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");

    if (format == EventFormat::Csv) {
        out << "t,x,y,p\n";
        char buf[64];
        for (const Event& e : stream.events) {
            int n = std::snprintf(buf, sizeof(buf), "%lld,%u,%u,%d\n", (long long)e.t, e.x, e.y,
                                  int(e.p));
            out.write(buf, n);
        }
    } else {
        std::string buf;
        buf.reserve(16 + 16 * stream.events.size());
        buf.append(kMagic, 4);
        put_u32(buf, uint32_t(stream.width));
        put_u32(buf, uint32_t(stream.height));
        put_u32(buf, 0);  // reserved
        for (const Event& e : stream.events) {
            uint64_t t = uint64_t(e.t);
            for (int i = 0; i < 8; ++i) buf.push_back(char((t >> (8 * i)) & 0xff));
            buf.push_back(char(e.x & 0xff));
            buf.push_back(char(e.x >> 8));
            buf.push_back(char(e.y & 0xff));
            buf.push_back(char(e.y >> 8));
            buf.push_back(char(e.p));
            buf.append(3, '\0');
        }
        out.write(buf.data(), std::streamsize(buf.size()));
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace evk
