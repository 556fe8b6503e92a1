#pragma once

// Annotated event-frame datasets: label file I/O, deterministic train/test
// split, and bbox-preserving augmentation (flip, rotate, crop, shear).
// Geometry runs in pixel space so box corners track the image warp.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evkit/boxes.hpp"
#include "evkit/image.hpp"

namespace evk {

struct DatasetSample {
    std::string id;  // file stem
    ImageU8 image;   // grayscale event frame
    std::vector<Annotation> annotations;
    // Source id + transform chain for generated samples, empty otherwise.
    std::string provenance;
};

// Lines of "class cx cy w h". Parse reports the offending line on error;
// write uses six decimals, so a round trip moves coordinates < 1e-6.
std::vector<Annotation> parse_label_file(const std::string& path);
void write_label_file(std::span<const Annotation> anns, const std::string& path);

// Deterministic shuffle, then the first round(ratio*N) samples train.
std::pair<std::vector<DatasetSample>, std::vector<DatasetSample>> split_dataset(
    std::vector<DatasetSample> samples, double ratio, uint64_t seed);

// Mirror about the vertical axis: cx -> 1 - cx.
DatasetSample hflip(const DatasetSample& s);

// Rotate about the image center, background fill 128. Output boxes are the
// axis-aligned hull of the four rotated corners, clamped; boxes whose
// clamped area falls under one pixel are dropped.
DatasetSample rotate(const DatasetSample& s, double angle_deg);

// Crop to `region` and renormalize. A box survives iff its clipped area is
// at least min_visibility of the original. Throws on a degenerate region.
DatasetSample crop(const DatasetSample& s, const NormBox& region, double min_visibility = 0.25);

// Shear about the image center: x' = x + shx*y, y' = shy*x + y (centered).
// Box handling as in rotate.
DatasetSample shear(const DatasetSample& s, double shx, double shy);

enum class TransformKind { HFlip, Rotate, Crop, Shear };

struct TransformSpec {
    TransformKind kind = TransformKind::HFlip;
    double probability = 1.0;
    // Parameter range: degrees for Rotate, factor for Shear (both axes),
    // kept side fraction for Crop. Unused for HFlip.
    double lo = 0.0;
    double hi = 0.0;
};

struct AugmentPlan {
    double multiplier = 2.5;
    std::vector<TransformSpec> transforms;
    double min_visibility = 0.25;
};

AugmentPlan default_augment_plan(double multiplier = 2.5);

// Originals first, then generated samples cycling through the input until
// the output holds round(multiplier * N) samples. Generated sample j uses an
// rng seeded from (seed, j), so results are reproducible bit for bit and
// independent of thread count. Each generated sample's provenance records
// its source id and transform chain.
std::vector<DatasetSample> augment_dataset(const std::vector<DatasetSample>& train,
                                           const AugmentPlan& plan, uint64_t seed);

// Directory layout: images/<id>.png, labels/<id>.txt, provenance.txt for
// generated samples. Manifest adds dataset.yaml plus train.txt / test.txt.
std::vector<DatasetSample> load_dataset(const std::string& dir);
void save_dataset(std::span<const DatasetSample> samples, const std::string& dir);
void write_manifest(const std::string& dir, std::span<const DatasetSample> train,
                    std::span<const DatasetSample> test);

}  // namespace evk
