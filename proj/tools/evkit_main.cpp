#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "evkit/dataset_kit.hpp"
#include "evkit/detection_eval.hpp"
#include "evkit/dvs_simulator.hpp"
#include "evkit/ensemble_fusion.hpp"
#include "evkit/event_model.hpp"
#include "evkit/fixtures.hpp"
#include "evkit/frame_builder.hpp"

namespace fs = std::filesystem;
using namespace evk;

namespace {

int env_threads() {
    const char* v = std::getenv("EVKIT_THREADS");
    if (!v) return 1;
    int n = std::atoi(v);
    return n > 0 ? n : 1;
}

struct SimulateOpts {
    std::string input;
    std::string out;
    int64_t dt_us = 20000;
    SimParams params;
    int threads = env_threads();
};

void run_simulate(const SimulateOpts& o) {
    std::vector<LumaFrame> video = load_video_dir(o.input, o.dt_us);

    auto start = std::chrono::steady_clock::now();
    EventStream stream = simulate_video(video, o.params, o.threads);
    std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    if (fs::path(o.out).has_parent_path()) fs::create_directories(fs::path(o.out).parent_path());
    write_events(stream, o.out, format_from_path(o.out));

    int64_t duration = video.back().t - video.front().t;
    std::cout << "events=" << stream.size() << " width=" << stream.width
              << " height=" << stream.height << " duration_us=" << duration << "\n";
    if (elapsed.count() > 0)
        std::fprintf(stderr, "simulated %.2f Mev/s (%zu events in %.3f s)\n",
                     double(stream.size()) / elapsed.count() / 1e6, stream.size(),
                     elapsed.count());
}

struct RenderOpts {
    std::string input;
    std::string out;
    int64_t window_us = 0;
    int64_t stride_us = 0;  // 0: same as window
    std::string mode = "tri";
    int64_t t0 = -1;  // -1: first event
    bool drop_partial = false;
    int width = 0, height = 0;
    std::string overlay_dir;
};

void run_render(const RenderOpts& o) {
    EventStream stream = read_events(o.input, format_from_path(o.input), o.width, o.height);

    SequenceOptions seq;
    seq.window_us = o.window_us;
    seq.stride_us = o.stride_us > 0 ? o.stride_us : o.window_us;
    seq.mode = o.mode == "count2" ? FrameMode::Count2Ch : FrameMode::TriLevel;
    seq.drop_partial = o.drop_partial;
    if (o.t0 >= 0) seq.origin = o.t0;

    std::vector<EventFrame> frames = frame_sequence(stream, seq);
    fs::create_directories(o.out);

    uint64_t counted = 0;
    char name[32];
    for (size_t k = 0; k < frames.size(); ++k) {
        if (seq.mode == FrameMode::Count2Ch) {
            std::snprintf(name, sizeof(name), "%06zu.bin", k);
            write_count_tensor(frames[k], (fs::path(o.out) / name).string());
            for (uint32_t v : frames[k].on) counted += v;
            for (uint32_t v : frames[k].off) counted += v;
        } else {
            std::snprintf(name, sizeof(name), "%06zu.png", k);
            std::string path = (fs::path(o.out) / name).string();
            std::string label;
            if (!o.overlay_dir.empty()) {
                std::snprintf(name, sizeof(name), "%06zu.txt", k);
                fs::path lp = fs::path(o.overlay_dir) / name;
                if (fs::exists(lp)) label = lp.string();
            }
            if (!label.empty()) {
                std::vector<Annotation> anns = parse_label_file(label);
                overlay_boxes(frames[k], std::span<const Annotation>(anns), path);
            } else {
                render_png(frames[k], path);
            }
        }
    }

    std::cout << "frames=" << frames.size();
    if (seq.mode == FrameMode::Count2Ch) std::cout << " events_in_frames=" << counted;
    std::cout << "\n";
}

struct AugmentOpts {
    std::string input;
    std::string out;
    double multiplier = 2.5;
    double split = 0.75;
    double min_visibility = 0.25;
    uint64_t seed = 7;
};

void run_augment(const AugmentOpts& o) {
    std::vector<DatasetSample> samples = load_dataset(o.input);
    auto [train, test] = split_dataset(std::move(samples), o.split, o.seed);

    AugmentPlan plan = default_augment_plan(o.multiplier);
    plan.min_visibility = o.min_visibility;
    std::vector<DatasetSample> augmented = augment_dataset(train, plan, o.seed);

    std::vector<DatasetSample> all = augmented;
    all.insert(all.end(), test.begin(), test.end());
    save_dataset(all, o.out);
    write_manifest(o.out, augmented, test);

    std::cout << "input=" << train.size() + test.size() << " train=" << train.size()
              << " augmented=" << augmented.size() << " test=" << test.size() << "\n";
}

std::map<std::string, std::vector<Detection>> blob_predictions(const std::string& frames_dir,
                                                               const BlobParams& params) {
    if (!fs::is_directory(frames_dir)) throw std::runtime_error("not a directory: " + frames_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(frames_dir))
        if (entry.path().extension() == ".png") files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::map<std::string, std::vector<Detection>> out;
    for (const fs::path& f : files) {
        EventFrame frame = tri_frame_from_image(read_png(f.string()), 0, 0);
        out[f.stem().string()] = blob_detect(frame, params);
    }
    return out;
}

struct EvalOpts {
    std::string gt_dir;
    std::vector<std::string> preds;
    EvalConfig cfg;
    std::string ensemble = "nms";
    double fusion_iou = 0.5;
    std::string json_path;
    std::string pr_csv_path;
    BlobParams blob;
};

void run_eval(const EvalOpts& o) {
    std::map<std::string, std::vector<Annotation>> gt;
    for (const auto& entry : fs::directory_iterator(o.gt_dir))
        if (entry.path().extension() == ".txt")
            gt[entry.path().stem().string()] = parse_label_file(entry.path().string());
    if (gt.empty()) throw std::runtime_error("no .txt ground truth under " + o.gt_dir);

    std::vector<std::map<std::string, std::vector<Detection>>> sources;
    for (const std::string& spec : o.preds) {
        if (spec.rfind("blob:", 0) == 0)
            sources.push_back(blob_predictions(spec.substr(5), o.blob));
        else
            sources.push_back(read_predictions(spec));
    }

    std::map<std::string, std::vector<Detection>> merged;
    if (sources.size() == 1) {
        merged = std::move(sources[0]);
    } else {
        FusionConfig fusion;
        fusion.method = o.ensemble == "wbf" ? FusionMethod::Wbf : FusionMethod::Nms;
        fusion.iou_threshold = o.fusion_iou;
        fusion.n_models = int(sources.size());
        std::vector<std::string> ids;
        for (const auto& src : sources)
            for (const auto& [id, dets] : src) ids.push_back(id);
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        for (const std::string& id : ids) {
            std::vector<std::vector<Detection>> sets;
            for (const auto& src : sources) {
                auto it = src.find(id);
                sets.push_back(it == src.end() ? std::vector<Detection>{} : it->second);
            }
            merged[id] = ensemble_merge(sets, fusion);
        }
    }

    EvalReport report = evaluate(merged, gt, o.cfg);
    std::cout << report_table(report);
    if (!o.json_path.empty()) {
        std::ofstream out(o.json_path);
        if (!out) throw std::runtime_error("cannot write " + o.json_path);
        out << report_to_json(report, o.cfg).dump(2) << "\n";
    }
    if (!o.pr_csv_path.empty()) write_pr_csv(report, o.pr_csv_path);
}

struct BenchOpts {
    std::string frames_dir;
    std::string detector = "blob";
    int warmup = 3;
    BlobParams blob;
};

void run_bench(const BenchOpts& o) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(o.frames_dir))
        if (entry.path().extension() == ".png") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("no .png frames under " + o.frames_dir);

    std::vector<EventFrame> frames;
    frames.reserve(files.size());
    for (const fs::path& f : files)
        frames.push_back(tri_frame_from_image(read_png(f.string()), 0, 0));

    Detector detector;
    if (o.detector.rfind("sleep:", 0) == 0) {
        double ms = std::stod(o.detector.substr(6));
        detector = [ms](const EventFrame&) {
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
            return std::vector<Detection>{};
        };
    } else if (o.detector == "blob") {
        BlobParams params = o.blob;
        detector = [params](const EventFrame& f) { return blob_detect(f, params); };
    } else {
        throw std::runtime_error("unknown detector '" + o.detector + "' (blob, sleep:<ms>)");
    }

    FpsStats stats = fps_bench(detector, frames, o.warmup);
    std::printf("fps=%.2f mean_ms=%.3f p50_ms=%.3f p99_ms=%.3f frames=%d\n", stats.fps,
                stats.mean_ms, stats.p50_ms, stats.p99_ms, stats.frames);
}

struct FixtureOpts {
    std::string name;
    std::string out;
    int frames = 0;
    int width = 0, height = 0;
    int64_t dt_us = 0;
};

void run_fixture(const FixtureOpts& o) {
    Fixture fx;
    if (o.name == "moving_square")
        fx = make_moving_square(o.width ? o.width : 256, o.height ? o.height : 192,
                                o.frames ? o.frames : 101, 32, o.dt_us ? o.dt_us : 20000);
    else if (o.name == "static_scene")
        fx = make_static_scene(o.width ? o.width : 128, o.height ? o.height : 96,
                               o.frames ? o.frames : 6, o.dt_us ? o.dt_us : 20000);
    else if (o.name == "two_objects")
        fx = make_two_objects(o.width ? o.width : 256, o.height ? o.height : 192,
                              o.frames ? o.frames : 61, o.dt_us ? o.dt_us : 20000);
    else
        throw std::runtime_error("unknown fixture '" + o.name +
                                 "' (moving_square, static_scene, two_objects)");

    write_fixture(fx, o.out);
    std::cout << "fixture=" << fx.name << " frames=" << fx.frames.size()
              << " windows=" << fx.window_gt.size() << "\n";
}

void add_blob_flags(CLI::App* cmd, BlobParams& blob) {
    cmd->add_option("--blob-activity", blob.activity_threshold,
                    "min events per pixel to count as active")
        ->capture_default_str();
    cmd->add_option("--blob-min-area", blob.min_area, "min component area in pixels")
        ->capture_default_str();
    cmd->add_option("--blob-connectivity", blob.connectivity, "component connectivity (4 or 8)")
        ->capture_default_str();
    cmd->add_option("--blob-norm", blob.confidence_norm,
                    "event count mapped to confidence 1.0")
        ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event camera simulation, dataset and detection toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from a config file (flags win)");

    SimulateOpts sim;
    auto* c_sim = app.add_subcommand("simulate", "convert a frame video into an event stream");
    c_sim->add_option("input", sim.input, "video directory (frames/*.png + timestamps.txt)")
        ->required()
        ->check(CLI::ExistingDirectory);
    c_sim->add_option("-o,--out", sim.out, "output events file (.csv or .bin)")->required();
    c_sim->add_option("--dt", sim.dt_us, "frame interval in us when timestamps.txt is absent")
        ->capture_default_str();
    c_sim->add_option("--theta-on", sim.params.theta_on, "ON contrast threshold")
        ->capture_default_str();
    c_sim->add_option("--theta-off", sim.params.theta_off, "OFF contrast threshold")
        ->capture_default_str();
    c_sim->add_option("--leak", sim.params.leak_rate_hz, "leak noise rate in Hz per pixel")
        ->capture_default_str();
    c_sim->add_option("--shot-noise", sim.params.shot_noise_rate_hz,
                      "shot noise rate in Hz per pixel (ON+OFF)")
        ->capture_default_str();
    c_sim->add_option("--knee", sim.params.lin_log_knee, "lin-log mapping knee intensity")
        ->capture_default_str();
    c_sim->add_flag("--dark-bias", sim.params.shot_noise_dark_bias,
                    "bias shot noise toward dark pixels");
    c_sim->add_option("--seed", sim.params.seed, "noise rng seed")->capture_default_str();
    c_sim->add_option("--threads", sim.threads, "worker threads (EVKIT_THREADS)")
        ->capture_default_str();
    c_sim->callback([&] { run_simulate(sim); });

    RenderOpts ren;
    auto* c_ren = app.add_subcommand("render", "accumulate an event stream into frames");
    c_ren->add_option("input", ren.input, "events file (.csv or .bin)")
        ->required()
        ->check(CLI::ExistingFile);
    c_ren->add_option("-o,--out", ren.out, "output directory")->required();
    c_ren->add_option("--window", ren.window_us, "window length in us")->required();
    c_ren->add_option("--stride", ren.stride_us, "window stride in us (default: window)");
    c_ren->add_option("--mode", ren.mode, "frame encoding")
        ->check(CLI::IsMember({"tri", "count2"}))
        ->capture_default_str();
    c_ren->add_option("--t0", ren.t0, "window grid origin in us (default: first event)");
    c_ren->add_flag("--drop-partial", ren.drop_partial,
                    "drop windows reaching past the last event");
    c_ren->add_option("--width", ren.width, "sensor width for csv input");
    c_ren->add_option("--height", ren.height, "sensor height for csv input");
    c_ren->add_option("--overlay", ren.overlay_dir, "label directory to draw onto frames")
        ->check(CLI::ExistingDirectory);
    c_ren->callback([&] { run_render(ren); });

    AugmentOpts aug;
    auto* c_aug = app.add_subcommand("augment", "split a dataset and augment the train part");
    c_aug->add_option("input", aug.input, "dataset directory (images/ + labels/)")
        ->required()
        ->check(CLI::ExistingDirectory);
    c_aug->add_option("-o,--out", aug.out, "output dataset directory")->required();
    c_aug->add_option("--multiplier", aug.multiplier, "train set growth factor")
        ->capture_default_str();
    c_aug->add_option("--split", aug.split, "train fraction")->capture_default_str();
    c_aug->add_option("--min-visibility", aug.min_visibility,
                      "min clipped/original box area to keep after crop")
        ->capture_default_str();
    c_aug->add_option("--seed", aug.seed, "shuffle and transform rng seed")
        ->capture_default_str();
    c_aug->callback([&] { run_augment(aug); });

    EvalOpts ev;
    auto* c_ev = app.add_subcommand("eval", "score predictions against ground truth");
    c_ev->add_option("--gt", ev.gt_dir, "ground truth label directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    c_ev->add_option("preds", ev.preds,
                     "prediction sources: directory of .txt or blob:<frames dir>")
        ->required();
    c_ev->add_option("--iou", ev.cfg.iou_threshold, "IoU threshold for matching")
        ->capture_default_str();
    c_ev->add_option("--conf", ev.cfg.confidence_threshold, "confidence cutoff")
        ->capture_default_str();
    c_ev->add_flag("--eleven-point", ev.cfg.eleven_point, "11-point AP instead of all-point");
    c_ev->add_option("--ensemble", ev.ensemble, "fusion method for multiple sources")
        ->check(CLI::IsMember({"nms", "wbf"}))
        ->capture_default_str();
    c_ev->add_option("--fusion-iou", ev.fusion_iou, "IoU threshold for fusion")
        ->capture_default_str();
    c_ev->add_option("--json", ev.json_path, "write the report as JSON");
    c_ev->add_option("--pr-csv", ev.pr_csv_path, "write PR curves as CSV");
    add_blob_flags(c_ev, ev.blob);
    c_ev->callback([&] { run_eval(ev); });

    BenchOpts bench;
    auto* c_bench = app.add_subcommand("bench", "measure detector latency over frames");
    c_bench->add_option("--frames", bench.frames_dir, "directory of rendered frames")
        ->required()
        ->check(CLI::ExistingDirectory);
    c_bench->add_option("--detector", bench.detector, "blob or sleep:<ms>")
        ->capture_default_str();
    c_bench->add_option("--warmup", bench.warmup, "frames to discard before timing")
        ->capture_default_str();
    add_blob_flags(c_bench, bench.blob);
    c_bench->callback([&] { run_bench(bench); });

    FixtureOpts fx;
    auto* c_fx = app.add_subcommand("fixture", "generate a synthetic video with ground truth");
    c_fx->add_option("name", fx.name, "moving_square, static_scene or two_objects")->required();
    c_fx->add_option("-o,--out", fx.out, "output directory")->required();
    c_fx->add_option("--frames", fx.frames, "frame count (0: fixture default)");
    c_fx->add_option("--width", fx.width, "frame width (0: fixture default)");
    c_fx->add_option("--height", fx.height, "frame height (0: fixture default)");
    c_fx->add_option("--dt-us", fx.dt_us, "frame interval in us (0: fixture default)");
    c_fx->callback([&] { run_fixture(fx); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
