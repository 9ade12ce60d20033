#include <memory>
#include <optional>

#include "blockprnu/experiment.hpp"
#include "blockprnu/text.hpp"
#include "blockprnu/trace_io.hpp"
#include "cli_util.hpp"

namespace blockprnu::cli {

namespace {

struct SimulateOptions {
    std::string out_dir;
    std::uint64_t seed = 1;
    int width = 128;
    int height = 128;
    int frames = 16;
    int reference_frames = 24;
    double sigma_k = 0.02;
    double read_noise = 2.0;
    std::optional<int> qp;
    double bits_per_frame = 3000.0;
    CodecConfig codec;
    SceneConfig scene;
};

std::string truth_csv(const EncodeResult& enc) {
    std::string out = "frame_idx,mb_x,mb_y,type,qp,bits,lambda,distortion,cost\n";
    for (const auto& t : enc.truth) {
        out += std::to_string(t.record.frame_idx) + "," + std::to_string(t.record.mb_x) + "," +
               std::to_string(t.record.mb_y) + "," + std::string(to_string(t.record.type)) + "," +
               std::to_string(t.record.qp) + "," + std::to_string(t.rate) + "," + format_double(t.lambda) + "," +
               format_double(t.distortion) + "," + format_double(t.cost) + "\n";
    }
    return out;
}

int run_simulate(SimulateOptions o) {
    auto codec = o.codec;
    if (o.qp) {
        codec.mode = RateMode::FixedQp;
        codec.qp = *o.qp;
    } else {
        codec.mode = RateMode::TargetBitrate;
        codec.bits_per_frame = o.bits_per_frame;
    }
    codec.validate();
    const std::filesystem::path dir(o.out_dir);

    const auto model = SensorModel::random(o.width, o.height, o.sigma_k, o.read_noise, derive_seed(o.seed, 1, 0));
    const auto flat = generate_flat_field(o.width, o.height, o.reference_frames, derive_seed(o.seed, 2, 0));
    const auto reference = simulate_capture(model, flat, derive_seed(o.seed, 3, 0));
    auto scene = o.scene;
    scene.width = o.width;
    scene.height = o.height;
    scene.frames = o.frames;
    scene.seed = derive_seed(o.seed, 4, 0);
    const auto captured = simulate_capture(model, generate_scene(scene), derive_seed(o.seed, 5, 0));
    const auto enc = encode_sequence(captured, codec);

    ensure_directory(dir);
    write_raw_video(dir / "captured.yuv", captured);
    write_raw_video(dir / "decoded.yuv", enc.decoded);
    write_raw_video(dir / "reference.yuv", reference);
    save_trace(dir / "trace.txt", enc.trace);
    write_text_file(dir / "truth.csv", truth_csv(enc));
    Fingerprint sensor;
    sensor.k_values = model.k_true;
    sensor.support = Plane<std::uint8_t>(o.width, o.height, 1);
    sensor.source_id = "sensor";
    save_fingerprint(dir / "sensor.bin", sensor);

    std::vector<int> motion;
    for (const auto& [dx, dy] : enc.frame_motion) {
        motion.push_back(dx);
        motion.push_back(dy);
    }
    const nlohmann::json meta = {
        {"seed", o.seed},
        {"width", o.width},
        {"height", o.height},
        {"frames", o.frames},
        {"reference_frames", o.reference_frames},
        {"sigma_k", o.sigma_k},
        {"read_noise_sigma", o.read_noise},
        {"rate_mode", o.qp ? "fixed_qp" : "target_bitrate"},
        {"qp", codec.qp},
        {"bits_per_frame", codec.bits_per_frame},
        {"gop", codec.gop},
        {"intra_qp_offset", codec.intra_qp_offset},
        {"intra_budget_factor", codec.intra_budget_factor},
        {"global_motion_range", codec.global_motion_range},
        {"texture_amplitude", scene.texture_amplitude},
        {"pan_x", scene.pan_x},
        {"pan_y", scene.pan_y},
        {"moving_objects", scene.moving_objects},
        {"frame_qp", enc.frame_qp},
        {"frame_bits", enc.frame_bits},
        {"frame_motion", motion},
        {"sbr", skipped_block_rate(enc.trace)},
        {"bits_per_pixel", bits_per_pixel(enc.trace)},
    };
    write_text_file(dir / "simulation.json", meta.dump(2) + "\n");
    return 0;
}

}  // namespace

CLI::App* add_simulate(CLI::App& app, Action& action) {
    auto o = std::make_shared<SimulateOptions>();
    // Same footage model as the simulated cohorts.
    const CohortConfig defaults;
    o->codec = defaults.codec;
    o->scene = defaults.scene;

    auto* cmd = app.add_subcommand(
        "simulate", "Simulate one camera and one coded video. Writes captured.yuv, decoded.yuv, trace.txt, "
                    "truth.csv (per-block D, R, lambda, J), reference.yuv (flat-field captures), sensor.bin "
                    "(true PRNU) and simulation.json");
    cmd->add_option("--out-dir", o->out_dir, "Output directory")->required();
    cmd->add_option("--seed", o->seed, "Seed; identical seeds give identical files")->capture_default_str();
    cmd->add_option("--width", o->width, "Frame width, multiple of 16")->capture_default_str();
    cmd->add_option("--height", o->height, "Frame height, multiple of 16")->capture_default_str();
    cmd->add_option("--frames", o->frames, "Video frames")->capture_default_str();
    cmd->add_option("--reference-frames", o->reference_frames, "Flat-field captures")->capture_default_str();
    cmd->add_option("--sigma-k", o->sigma_k, "PRNU standard deviation")->capture_default_str();
    cmd->add_option("--read-noise", o->read_noise, "Read noise standard deviation")->capture_default_str();
    auto* qp = cmd->add_option("--qp", o->qp, "Fixed QP (disables rate control)")->check(CLI::Range(kMinQp, kMaxQp));
    cmd->add_option("--bits-per-frame", o->bits_per_frame, "Rate control budget per frame")
        ->excludes(qp)
        ->capture_default_str();
    cmd->add_option("--gop", o->codec.gop, "Intra frame interval, 0 for a single intra frame")
        ->capture_default_str();
    cmd->add_option("--intra-qp-offset", o->codec.intra_qp_offset,
                    "Intra frames after the first use inter QP minus this; -1 gives them their own budget")
        ->capture_default_str();
    cmd->add_option("--intra-budget-factor", o->codec.intra_budget_factor, "Intra frame budget multiple")
        ->capture_default_str();
    cmd->add_option("--global-motion-range", o->codec.global_motion_range, "Global motion search range, 0 for none")
        ->capture_default_str();
    cmd->add_option("--texture", o->scene.texture_amplitude, "Background texture peak-to-peak amplitude")
        ->capture_default_str();
    cmd->add_option("--pan-x", o->scene.pan_x, "Background drift, pixels per frame")->capture_default_str();
    cmd->add_option("--pan-y", o->scene.pan_y, "Background drift, pixels per frame")->capture_default_str();
    cmd->add_option("--objects", o->scene.moving_objects, "Moving objects")->capture_default_str();
    cmd->callback([o, &action] { action = [o] { return run_simulate(*o); }; });
    return cmd;
}

}  // namespace blockprnu::cli
