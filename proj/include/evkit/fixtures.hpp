#pragma once

// Synthetic test videos with closed-form ground truth. A moving square
// travels exactly its own width per frame, so the OFF strip it vacates and
// the ON strip it enters abut into one component whose AABB equals the
// swept box between consecutive positions.

#include <cstdint>
#include <string>
#include <vector>

#include "evkit/boxes.hpp"
#include "evkit/dvs_simulator.hpp"
#include "evkit/image.hpp"

namespace evk {

struct Fixture {
    std::string name;
    int width = 0;
    int height = 0;
    int64_t dt_us = 0;
    std::vector<ImageU8> frames;  // grayscale
    std::vector<int64_t> timestamps;
    // Ground truth per inter-frame window k = [t_k, t_k+1), one entry per
    // consecutive frame pair.
    std::vector<std::vector<Annotation>> window_gt;
};

// Bright square on black bouncing horizontally, one square-width per frame.
Fixture make_moving_square(int width = 256, int height = 192, int n_frames = 101, int square = 32,
                           int64_t dt_us = 20000);

// Constant scene (two gray rectangles on mid background); no ground truth.
Fixture make_static_scene(int width = 128, int height = 96, int n_frames = 6,
                          int64_t dt_us = 20000);

// Two squares on separate rows moving in opposite directions: a car-class
// square of 32 and a person-class square of 24.
Fixture make_two_objects(int width = 256, int height = 192, int n_frames = 61,
                         int64_t dt_us = 20000);

Fixture make_fixture(const std::string& name);

// Layout: frames/NNNNNN.png, timestamps.txt, gt/NNNNNN.txt (one per window),
// fixture.json with the parameters.
void write_fixture(const Fixture& fx, const std::string& dir);

// Loads frames/*.png (or *.png directly under dir) with timestamps.txt when
// present, else dt_us_fallback spacing. Luma frames ready for simulation.
std::vector<LumaFrame> load_video_dir(const std::string& dir, int64_t dt_us_fallback = 0);

}  // namespace evk
