#include <memory>
#include <optional>

#include "blockprnu/pipeline.hpp"
#include "blockprnu/trace_io.hpp"
#include "cli_util.hpp"

namespace blockprnu::cli {

namespace {

struct EstimateCliOptions {
    std::string frames;
    std::string trace;
    std::string scheme = "conventional";
    std::string table;
    std::string out;
    std::string id;
    int width = 0;
    int height = 0;
    std::string denoiser = "wavelet";
    double noise_variance = 3.0;
    int wavelet_levels = 4;
    bool no_saturation_mask = false;
    std::string normalization = "unit";
    int workers = 1;
};

int run_estimate(const EstimateCliOptions& o) {
    // Everything that can be rejected without reading frames is checked first.
    const auto scheme = parse_scheme(o.scheme);
    if (!scheme) fail(ErrorKind::Usage, "unknown scheme '" + o.scheme + "'");
    SchemeConfig sc;
    sc.scheme = *scheme;
    const bool needs_table = *scheme == Scheme::QpAll || *scheme == Scheme::QpNoSkip || *scheme == Scheme::LambdaR;
    if (needs_table && o.table.empty()) fail(ErrorKind::Usage, o.scheme + " requires --table");
    const bool needs_trace = *scheme != Scheme::Conventional && *scheme != Scheme::LoopFilterOnly;
    if (needs_trace && o.trace.empty()) fail(ErrorKind::Usage, o.scheme + " requires --trace");
    if (o.trace.empty() && (o.width <= 0 || o.height <= 0)) {
        fail(ErrorKind::Usage, "--width and --height are required without --trace");
    }

    EstimateOptions opts;
    if (o.denoiser == "wavelet") {
        opts.denoise.method = DenoiseMethod::Wavelet;
    } else if (o.denoiser == "wiener") {
        opts.denoise.method = DenoiseMethod::SpatialWiener;
    } else {
        fail(ErrorKind::Usage, "unknown denoiser '" + o.denoiser + "'");
    }
    opts.denoise.noise_variance = o.noise_variance;
    opts.denoise.levels = o.wavelet_levels;
    opts.use_saturation_mask = !o.no_saturation_mask;
    if (o.normalization == "unit") {
        opts.finalize.normalization = Normalization::ZeroMeanUnitEnergy;
    } else if (o.normalization == "none") {
        opts.finalize.normalization = Normalization::None;
    } else {
        fail(ErrorKind::Usage, "unknown normalization '" + o.normalization + "'");
    }
    opts.finalize.source_id = o.id.empty() ? std::filesystem::path(o.frames).stem().string() : o.id;

    if (!o.table.empty()) {
        sc.table = load_weight_table(o.table);
        sc.table->validate();
    }
    sc.validate();

    std::optional<TraceFile> trace;
    int width = o.width;
    int height = o.height;
    if (!o.trace.empty()) {
        trace = load_trace(o.trace);
        if ((o.width > 0 && o.width != trace->header.width) || (o.height > 0 && o.height != trace->header.height)) {
            fail(ErrorKind::DimensionMismatch, "--width/--height disagree with the trace header");
        }
        width = trace->header.width;
        height = trace->header.height;
    }

    RawVideoReader reader(o.frames, width, height);
    if (trace && reader.frame_count() != trace->header.frame_count) {
        fail(ErrorKind::DimensionMismatch, o.frames + " holds " + std::to_string(reader.frame_count()) +
                                               " frames, trace declares " +
                                               std::to_string(trace->header.frame_count));
    }
    const auto maps = trace ? trace->frames() : std::vector<FrameBlockMap>{};
    FingerprintEstimator estimator(width, height, sc, opts, o.workers);
    Picture picture;
    int n = 0;
    while (reader.next(picture)) {
        estimator.add(std::move(picture), trace ? &maps[static_cast<std::size_t>(n)] : nullptr);
        ++n;
    }
    const auto fp = estimator.finish();
    save_fingerprint(o.out, fp);

    nlohmann::json config = {
        {"scheme", o.scheme},
        {"denoiser", o.denoiser},
        {"noise_variance", o.noise_variance},
        {"wavelet_levels", o.wavelet_levels},
        {"saturation_mask", opts.use_saturation_mask},
        {"normalization", o.normalization},
        {"table", sc.table ? serialize_weight_table(*sc.table) : std::string()},
    };
    nlohmann::json sidecar = {
        {"scheme", o.scheme},
        {"frame_count", n},
        {"width", width},
        {"height", height},
        {"source_id", fp.source_id},
        {"config", config},
        {"config_hash", fnv1a_hex(config.dump())},
        {"frames", o.frames},
        {"trace", o.trace},
        {"table", o.table},
    };
    write_text_file(o.out + ".json", sidecar.dump(2) + "\n");
    return 0;
}

}  // namespace

CLI::App* add_estimate(CLI::App& app, Action& action) {
    auto o = std::make_shared<EstimateCliOptions>();
    auto* cmd = app.add_subcommand(
        "estimate", "Estimate a camera fingerprint from decoded frames under a block weighting scheme. "
                    "Writes the fingerprint and a JSON sidecar (<out>.json) with the scheme, frame count and config hash");
    cmd->add_option("--frames", o->frames, "Decoded frames, planar 4:2:0 8-bit (only luma is used)")->required();
    cmd->add_option("--trace", o->trace, "Block trace matching the frames (required except for conventional)");
    cmd->add_option("--scheme", o->scheme,
                    "conventional, loop_filter_only, skip_eliminate, qp_all, qp_no_skip or lambda_r")
        ->capture_default_str();
    cmd->add_option("--table", o->table, "Weight table (QP schemes and lambda_r)");
    cmd->add_option("--out", o->out, "Fingerprint output file")->required();
    cmd->add_option("--id", o->id, "Fingerprint source id (default: frames file stem)");
    cmd->add_option("--width", o->width, "Frame width when no trace is given");
    cmd->add_option("--height", o->height, "Frame height when no trace is given");
    cmd->add_option("--denoiser", o->denoiser, "wavelet or wiener")->capture_default_str();
    cmd->add_option("--noise-variance", o->noise_variance, "Denoiser noise variance")->capture_default_str();
    cmd->add_option("--wavelet-levels", o->wavelet_levels, "Wavelet decomposition depth")->capture_default_str();
    cmd->add_flag("--no-saturation-mask", o->no_saturation_mask, "Keep clipped samples (<= 5 or >= 250)");
    cmd->add_option("--normalization", o->normalization, "unit (zero mean, unit energy) or none")
        ->capture_default_str();
    add_workers_option(cmd, o->workers);
    cmd->callback([o, &action] { action = [o] { return run_estimate(*o); }; });
    return cmd;
}

}  // namespace blockprnu::cli
