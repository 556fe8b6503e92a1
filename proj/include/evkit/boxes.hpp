#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>

namespace evk {

// The four roadside classes, fixed ids.
enum class ClassId : int { Person = 0, Car = 1, Pole = 2, OtherVehicle = 3 };

constexpr int kNumClasses = 4;

inline const char* class_name(ClassId c) {
    switch (c) {
        case ClassId::Person: return "person";
        case ClassId::Car: return "car";
        case ClassId::Pole: return "pole";
        case ClassId::OtherVehicle: return "other_vehicle";
    }
    return "?";
}

inline ClassId class_from_int(int v) {
    if (v < 0 || v >= kNumClasses)
        throw std::invalid_argument("class id " + std::to_string(v) + " outside 0.." +
                                    std::to_string(kNumClasses - 1));
    return ClassId(v);
}

// Axis-aligned box, center + size, normalized to [0,1] of the image dims.
struct NormBox {
    double cx = 0, cy = 0, w = 0, h = 0;

    double x0() const { return cx - w / 2; }
    double y0() const { return cy - h / 2; }
    double x1() const { return cx + w / 2; }
    double y1() const { return cy + h / 2; }
    double area() const { return w * h; }

    static NormBox from_corners(double x0, double y0, double x1, double y1) {
        return {(x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0};
    }
};

inline bool operator==(const NormBox& a, const NormBox& b) {
    return a.cx == b.cx && a.cy == b.cy && a.w == b.w && a.h == b.h;
}

// Corners clamped into [0,1]; empty result (w or h <= 0 after clamping)
// is signalled by nullopt.
inline std::optional<NormBox> clamp_box(const NormBox& b) {
    double x0 = std::max(0.0, b.x0()), y0 = std::max(0.0, b.y0());
    double x1 = std::min(1.0, b.x1()), y1 = std::min(1.0, b.y1());
    if (x1 - x0 <= 0 || y1 - y0 <= 0) return std::nullopt;
    return NormBox::from_corners(x0, y0, x1, y1);
}

struct Annotation {
    ClassId cls = ClassId::Person;
    NormBox box;
};

struct Detection {
    ClassId cls = ClassId::Person;
    double confidence = 0;
    NormBox box;
};

}  // namespace evk
