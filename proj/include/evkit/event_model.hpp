#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace evk {

// One DVS event. Timestamps are integer microseconds; polarity is stored
// canonically as +1 (ON) or -1 (OFF). Files that encode OFF as 0 are mapped
// to -1 on read.
struct Event {
    int64_t t = 0;
    uint16_t x = 0;
    uint16_t y = 0;
    int8_t p = 0;
};

inline bool operator==(const Event& a, const Event& b) {
    return a.t == b.t && a.x == b.x && a.y == b.y && a.p == b.p;
}
inline bool operator!=(const Event& a, const Event& b) { return !(a == b); }

// A time-ordered sequence of events on a fixed sensor grid. Streams are
// treated as immutable once built; sharing across threads needs no locking.
struct EventStream {
    int width = 0;
    int height = 0;
    std::vector<Event> events;

    int64_t first_t() const { return events.empty() ? 0 : events.front().t; }
    int64_t last_t() const { return events.empty() ? 0 : events.back().t; }
    size_t size() const { return events.size(); }
    bool empty() const { return events.empty(); }
};

inline bool operator==(const EventStream& a, const EventStream& b) {
    return a.width == b.width && a.height == b.height && a.events == b.events;
}

enum class ViolationKind { None, Unsorted, OutOfBounds, BadPolarity };

struct ValidationResult {
    bool ok = true;
    ViolationKind kind = ViolationKind::None;
    size_t index = 0;
    std::string message;
};

// Checks the stream invariants: non-decreasing timestamps, all events inside
// the sensor bounds, polarity exactly +/-1. Reports the first violation.
ValidationResult validate(const EventStream& stream);

// Events with t0 <= t < t1, input order preserved. Throws std::invalid_argument
// when t0 > t1.
EventStream slice(const EventStream& stream, int64_t t0, int64_t t1);

// Timestamp-ordered union of two streams over the same sensor. Stable: at
// equal timestamps a's events precede b's. Throws on dimension mismatch.
EventStream merge(const EventStream& a, const EventStream& b);

enum class EventFormat { Csv, Binary };

// Csv for a ".csv" extension, Binary otherwise.
EventFormat format_from_path(const std::string& path);

// CSV: header `t,x,y,p`, one event per line, p in {1,0,-1} (0 reads as OFF).
// BINARY: 16-byte header "EVK1" + width/height/reserved u32 LE, then 16 bytes
// per event: t u64 LE, x u16 LE, y u16 LE, p i8, 3 zero pad bytes.
//
// The CSV wire format carries no sensor dimensions; pass expected_width/height
// to restore them (required for exact round-trips), or leave 0 to infer the
// tightest bounds from the data. For BINARY the header is authoritative and a
// non-zero expectation that disagrees with it is an error.
EventStream read_events(const std::string& path, EventFormat format,
                        int expected_width = 0, int expected_height = 0);
void write_events(const EventStream& stream, const std::string& path, EventFormat format);

}  // namespace evk
