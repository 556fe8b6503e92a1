#include <doctest.h>

#include <random>
#include <stdexcept>

#include "evkit/ensemble_fusion.hpp"
#include "evkit/rng.hpp"
#include "oracles.hpp"

using namespace evk;

namespace {

Detection det(ClassId cls, double conf, double cx, double cy = 0.5, double w = 0.2,
              double h = 0.6) {
    return {cls, conf, NormBox{cx, cy, w, h}};
}

// pairwise IoU below the threshold inside each class
bool nms_clean(const std::vector<Detection>& dets, double thr) {
    for (size_t i = 0; i < dets.size(); ++i)
        for (size_t j = i + 1; j < dets.size(); ++j)
            if (dets[i].cls == dets[j].cls && oracle::iou_ref(dets[i].box, dets[j].box) >= thr)
                return false;
    return true;
}

EventFrame tri_frame(int w, int h) {
    EventFrame f;
    f.width = w;
    f.height = h;
    f.mode = FrameMode::TriLevel;
    f.tri.assign(size_t(w) * h, 128);
    return f;
}

EventFrame count_frame(int w, int h) {
    EventFrame f;
    f.width = w;
    f.height = h;
    f.mode = FrameMode::Count2Ch;
    f.on.assign(size_t(w) * h, 0);
    f.off.assign(size_t(w) * h, 0);
    return f;
}

}  // namespace

TEST_CASE("nms keeps the strongest box per overlap group") {
    SUBCASE("a single box survives") {
        std::vector<Detection> out = nms({det(ClassId::Car, 0.9, 0.3)}, 0.5);
        REQUIRE(out.size() == 1);
        CHECK(out[0].confidence == 0.9);
    }
    SUBCASE("an identical pair collapses to the stronger") {
        std::vector<Detection> out =
            nms({det(ClassId::Car, 0.6, 0.3), det(ClassId::Car, 0.9, 0.3)}, 0.5);
        REQUIRE(out.size() == 1);
        CHECK(out[0].confidence == 0.9);
    }
    SUBCASE("suppression does not chain through a removed box") {
        // A-B and B-C overlap at 0.6, A-C only at 1/3: C comes back
        std::vector<Detection> chain = {det(ClassId::Car, 0.9, 0.30),
                                        det(ClassId::Car, 0.8, 0.35),
                                        det(ClassId::Car, 0.7, 0.40)};
        CHECK(oracle::iou_ref(chain[0].box, chain[1].box) == doctest::Approx(0.6));
        CHECK(oracle::iou_ref(chain[0].box, chain[2].box) == doctest::Approx(1.0 / 3));
        std::vector<Detection> out = nms(chain, 0.5);
        REQUIRE(out.size() == 2);
        CHECK(out[0].confidence == 0.9);
        CHECK(out[1].confidence == 0.7);
    }
    SUBCASE("classes suppress independently") {
        std::vector<Detection> out =
            nms({det(ClassId::Car, 0.9, 0.3), det(ClassId::Person, 0.8, 0.3)}, 0.5);
        CHECK(out.size() == 2);
    }
    SUBCASE("output is sorted by descending confidence") {
        std::vector<Detection> out = nms({det(ClassId::Car, 0.2, 0.1), det(ClassId::Car, 0.9, 0.5),
                                          det(ClassId::Person, 0.5, 0.9)},
                                         0.5);
        REQUIRE(out.size() == 3);
        CHECK(out[0].confidence == 0.9);
        CHECK(out[1].confidence == 0.5);
        CHECK(out[2].confidence == 0.2);
    }
    SUBCASE("bad threshold throws") {
        CHECK_THROWS_AS(nms({}, 0.0), std::invalid_argument);
        CHECK_THROWS_AS(nms({}, 1.5), std::invalid_argument);
    }
}

TEST_CASE("nms properties on random sets") {
    std::mt19937_64 g(321);
    const double thr = 0.5;
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<Detection> dets = oracle::random_detections(g, 2 + rng::uniform_below(g, 12));
        std::vector<Detection> once = nms(dets, thr);
        CAPTURE(trial);

        // survivors never overlap at or above the threshold within a class
        CHECK(nms_clean(once, thr));

        // idempotent
        std::vector<Detection> twice = nms(once, thr);
        REQUIRE(twice.size() == once.size());
        for (size_t i = 0; i < once.size(); ++i) {
            CHECK(twice[i].confidence == once[i].confidence);
            CHECK(twice[i].box == once[i].box);
        }

        // duplicating the input changes nothing
        std::vector<Detection> doubled = dets;
        doubled.insert(doubled.end(), dets.begin(), dets.end());
        std::vector<Detection> merged = nms(doubled, thr);
        REQUIRE(merged.size() == once.size());
        for (size_t i = 0; i < once.size(); ++i) CHECK(merged[i].box == once[i].box);
    }
}

TEST_CASE("ensemble merge with nms equals single-model nms on agreeing models") {
    FusionConfig cfg;
    cfg.method = FusionMethod::Nms;
    cfg.iou_threshold = 0.5;

    std::mt19937_64 g(654);
    for (int trial = 0; trial < 30; ++trial) {
        // a clean set: what a model emits after its own nms pass
        std::vector<Detection> s = nms(oracle::random_detections(g, 8), cfg.iou_threshold);
        std::vector<std::vector<Detection>> two = {s, s};
        std::vector<Detection> fused = ensemble_merge(two, cfg);
        std::vector<Detection> alone = nms(s, cfg.iou_threshold);
        CAPTURE(trial);
        REQUIRE(fused.size() == alone.size());
        for (size_t i = 0; i < fused.size(); ++i) {
            CHECK(fused[i].confidence == alone[i].confidence);
            CHECK(fused[i].box == alone[i].box);
            CHECK(fused[i].cls == alone[i].cls);
        }
    }

    SUBCASE("an empty model list throws") {
        CHECK_THROWS_AS(ensemble_merge({}, cfg), std::invalid_argument);
    }
    SUBCASE("an empty second model is a no-op") {
        std::vector<Detection> s = nms(oracle::random_detections(g, 6), cfg.iou_threshold);
        std::vector<std::vector<Detection>> sets = {s, {}};
        std::vector<Detection> fused = ensemble_merge(sets, cfg);
        CHECK(fused.size() == s.size());
    }
}

TEST_CASE("weighted box fusion averages clustered boxes") {
    FusionConfig cfg;
    cfg.method = FusionMethod::Wbf;
    cfg.iou_threshold = 0.5;
    cfg.n_models = 2;

    SUBCASE("two agreeing boxes fuse confidence to the mean") {
        Detection a = det(ClassId::Car, 0.8, 0.30);
        Detection b = det(ClassId::Car, 0.6, 0.32);
        REQUIRE(oracle::iou_ref(a.box, b.box) > 0.5);
        std::vector<std::vector<Detection>> sets = {{a}, {b}};
        std::vector<Detection> out = ensemble_merge(sets, cfg);
        REQUIRE(out.size() == 1);
        // (0.8 + 0.6) / 2 * min(2,2)/2
        CHECK(out[0].confidence == doctest::Approx(0.7));
        // coordinates lean toward the higher-confidence box
        double want_cx = (0.8 * 0.30 + 0.6 * 0.32) / 1.4;
        CHECK(out[0].box.cx == doctest::Approx(want_cx).epsilon(1e-12));
        CHECK(out[0].box.w == doctest::Approx(0.2));
    }
    SUBCASE("a box only one of two models saw is penalized") {
        std::vector<std::vector<Detection>> sets = {{det(ClassId::Car, 0.8, 0.3)}, {}};
        std::vector<Detection> out = ensemble_merge(sets, cfg);
        REQUIRE(out.size() == 1);
        CHECK(out[0].confidence == doctest::Approx(0.4));  // 0.8 * 1/2
    }
    SUBCASE("a single-model config does not penalize singletons") {
        FusionConfig one = cfg;
        one.n_models = 1;
        std::vector<std::vector<Detection>> sets = {{det(ClassId::Car, 0.8, 0.3)}};
        std::vector<Detection> out = ensemble_merge(sets, one);
        REQUIRE(out.size() == 1);
        CHECK(out[0].confidence == doctest::Approx(0.8));
    }
    SUBCASE("distinct clusters stay separate and sort by confidence") {
        std::vector<std::vector<Detection>> sets = {
            {det(ClassId::Car, 0.6, 0.2), det(ClassId::Car, 0.9, 0.7)},
            {det(ClassId::Car, 0.7, 0.21), det(ClassId::Car, 0.8, 0.71)},
        };
        std::vector<Detection> out = ensemble_merge(sets, cfg);
        REQUIRE(out.size() == 2);
        CHECK(out[0].confidence >= out[1].confidence);
        CHECK(out[0].box.cx > 0.5);  // the 0.9/0.8 cluster
        CHECK(out[1].box.cx < 0.5);
    }
    SUBCASE("classes never fuse together") {
        std::vector<std::vector<Detection>> sets = {{det(ClassId::Car, 0.8, 0.3)},
                                                    {det(ClassId::Person, 0.6, 0.3)}};
        CHECK(ensemble_merge(sets, cfg).size() == 2);
    }
    SUBCASE("confidence stays within [0, 1] on many agreeing models") {
        std::vector<std::vector<Detection>> sets(5, {det(ClassId::Car, 0.9, 0.3)});
        FusionConfig five = cfg;
        five.n_models = 5;
        std::vector<Detection> out = ensemble_merge(sets, five);
        REQUIRE(out.size() == 1);
        CHECK(out[0].confidence <= 1.0);
        CHECK(out[0].confidence == doctest::Approx(0.9));
    }
}

TEST_CASE("blob detection on tri-level frames") {
    BlobParams p;
    p.min_area = 4;
    p.confidence_norm = 10.0;

    SUBCASE("background only yields nothing") {
        CHECK(blob_detect(tri_frame(16, 12), p).empty());
    }
    SUBCASE("a solid block becomes one detection with its exact box") {
        EventFrame f = tri_frame(16, 12);
        for (int y = 3; y <= 7; ++y)
            for (int x = 2; x <= 6; ++x) f.tri[size_t(y) * 16 + x] = 255;
        std::vector<Detection> out = blob_detect(f, p);
        REQUIRE(out.size() == 1);
        CHECK(out[0].cls == ClassId::Car);
        CHECK(out[0].box.x0() == doctest::Approx(2.0 / 16));
        CHECK(out[0].box.x1() == doctest::Approx(7.0 / 16));
        CHECK(out[0].box.y0() == doctest::Approx(3.0 / 12));
        CHECK(out[0].box.y1() == doctest::Approx(8.0 / 12));
        // 25 active pixels against norm 10, clamped
        CHECK(out[0].confidence == doctest::Approx(1.0));
    }
    SUBCASE("off-polarity pixels are activity too") {
        EventFrame f = tri_frame(16, 12);
        for (int y = 3; y <= 5; ++y)
            for (int x = 2; x <= 4; ++x) f.tri[size_t(y) * 16 + x] = (x + y) % 2 ? 0 : 255;
        CHECK(blob_detect(f, p).size() == 1);
    }
    SUBCASE("diagonal touch joins under 8- but not 4-connectivity") {
        EventFrame f = tri_frame(16, 12);
        // two 2x2 blocks meeting only at a corner
        for (int y = 2; y <= 3; ++y)
            for (int x = 2; x <= 3; ++x) f.tri[size_t(y) * 16 + x] = 255;
        for (int y = 4; y <= 5; ++y)
            for (int x = 4; x <= 5; ++x) f.tri[size_t(y) * 16 + x] = 0;

        BlobParams p8 = p;
        p8.connectivity = 8;
        std::vector<Detection> joined = blob_detect(f, p8);
        REQUIRE(joined.size() == 1);
        CHECK(joined[0].box.x1() == doctest::Approx(6.0 / 16));

        BlobParams p4 = p;
        p4.connectivity = 4;
        CHECK(blob_detect(f, p4).size() == 2);
    }
    SUBCASE("small components drop below min_area") {
        EventFrame f = tri_frame(16, 12);
        f.tri[0] = 255;
        f.tri[1] = 255;  // area 2 < 4
        CHECK(blob_detect(f, p).empty());
        BlobParams loose = p;
        loose.min_area = 2;
        CHECK(blob_detect(f, loose).size() == 1);
    }
    SUBCASE("bad params throw") {
        BlobParams bad = p;
        bad.min_area = 0;
        CHECK_THROWS_AS(blob_detect(tri_frame(4, 4), bad), std::invalid_argument);
        bad = p;
        bad.connectivity = 6;
        CHECK_THROWS_AS(blob_detect(tri_frame(4, 4), bad), std::invalid_argument);
    }
}

TEST_CASE("blob detection on count frames uses the activity threshold and weights") {
    BlobParams p;
    p.min_area = 1;
    p.activity_threshold = 3;
    p.confidence_norm = 100.0;

    EventFrame f = count_frame(8, 8);
    // pixel (1,1): 5 events, over threshold; pixel (5,5): 2 events, under
    f.on[1 * 8 + 1] = 3;
    f.off[1 * 8 + 1] = 2;
    f.on[5 * 8 + 5] = 2;

    std::vector<Detection> out = blob_detect(f, p);
    REQUIRE(out.size() == 1);
    CHECK(out[0].box.x0() == doctest::Approx(1.0 / 8));
    CHECK(out[0].confidence == doctest::Approx(0.05));  // 5 events / 100

    SUBCASE("confidence sums the component's event count") {
        f.on[1 * 8 + 2] = 7;  // extends the component: 12 events total
        std::vector<Detection> grown = blob_detect(f, p);
        REQUIRE(grown.size() == 1);
        CHECK(grown[0].confidence == doctest::Approx(0.12));
        CHECK(grown[0].box.x1() == doctest::Approx(3.0 / 8));
    }
}
