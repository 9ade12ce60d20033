#include "blockprnu/experiment.hpp"

#include <algorithm>
#include <set>

#include "blockprnu/parallel.hpp"
#include "blockprnu/text.hpp"

namespace blockprnu {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    // splitmix64 over a mixed key
    std::uint64_t z = seed ^ (stream * 0x9E3779B97F4A7C15ull) ^ (index * 0xC2B2AE3D27D4EB4Full);
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

CohortConfig::CohortConfig() {
    scene.width = width;
    scene.height = height;
    scene.frames = frames;
    scene.texture_amplitude = 180.0;
    scene.pan_x = 1.0;
    scene.pan_y = 1.0;
    scene.moving_objects = 2;
    codec.mode = RateMode::TargetBitrate;
    codec.gop = 4;
    codec.intra_qp_offset = 4;
    codec.global_motion_range = 3;
}

namespace {

enum SeedStream : std::uint64_t {
    kSensor = 1,
    kFlatField = 2,
    kReferenceCapture = 3,
    kScene = 4,
    kCapture = 5,
};

std::string camera_id(int stream, int index) {
    return (stream == 0 ? "cam" : stream == 1 ? "calcam" : "sweepcam") + std::to_string(index);
}

std::uint64_t key(int stream, int index) { return static_cast<std::uint64_t>(stream) * 1000003ull + index; }

double single_frame_pce(const PreparedFrame& frame, const Mask& mask, const Fingerprint& reference,
                        const CohortConfig& config, double& filled_fraction) {
    FingerprintAccumulator acc(frame.picture.width(), frame.picture.height());
    acc.accumulate(frame.picture, frame.residual, mask,
                   config.estimate.use_saturation_mask ? &frame.saturation : nullptr);
    std::size_t filled = 0;
    for (const double m : mask.values()) filled += m > 0.0 ? 1 : 0;
    filled_fraction = static_cast<double>(filled) / static_cast<double>(mask.size());
    return pce(finalize(acc, config.estimate.finalize), reference, config.calibration_pce).pce;
}

}  // namespace

SimCamera make_camera(const CohortConfig& config, int stream, int index) {
    SimCamera cam;
    cam.id = camera_id(stream, index);
    const auto k = key(stream, index);
    cam.key = k;
    cam.model = SensorModel::random(config.width, config.height, config.sigma_k, config.read_noise_sigma,
                                    derive_seed(config.seed, kSensor, k));
    const auto flat = generate_flat_field(config.width, config.height, config.reference_frames,
                                          derive_seed(config.seed, kFlatField, k));
    const auto captured = simulate_capture(cam.model, flat, derive_seed(config.seed, kReferenceCapture, k));
    auto opts = config.estimate;
    opts.finalize.source_id = cam.id;
    cam.reference = estimate_reference(captured, opts);
    return cam;
}

SimVideo simulate_video(const CohortConfig& config, const SimCamera& camera, int stream, int video_index,
                        const CodecConfig& codec, double bitrate_label) {
    // The scene and capture depend on the camera and video only, so the same
    // footage is coded at every bitrate.
    const std::uint64_t k = derive_seed(camera.key, static_cast<std::uint64_t>(stream), video_index);
    SceneConfig scene = config.scene;
    scene.width = config.width;
    scene.height = config.height;
    scene.frames = config.frames;
    scene.seed = derive_seed(config.seed, kScene, k);
    const auto clean = generate_scene(scene);
    const auto captured = simulate_capture(camera.model, clean, derive_seed(config.seed, kCapture, k));

    SimVideo v;
    v.id = camera.id + "_v" + std::to_string(video_index) + "_b" + format_double(bitrate_label);
    v.bitrate = bitrate_label;
    v.encoded = encode_sequence(captured, codec);
    v.prepared = prepare_frames(v.encoded.decoded, config.estimate.denoise);
    v.maps = v.encoded.trace.frames();
    v.bits_per_pixel = bits_per_pixel(v.encoded.trace);
    v.sbr = skipped_block_rate(v.encoded.trace);
    return v;
}

SchemeConfig scheme_config(Scheme scheme, const CalibrationTables& tables) {
    SchemeConfig sc;
    sc.scheme = scheme;
    switch (scheme) {
        case Scheme::QpAll: sc.table = tables.qp_all_dense; break;
        case Scheme::QpNoSkip: sc.table = tables.qp_no_skip_dense; break;
        case Scheme::LambdaR: sc.table = tables.lambda_r.table; break;
        default: break;
    }
    return sc;
}

std::vector<Fingerprint> scheme_fingerprints(const SimVideo& video, const std::vector<Scheme>& schemes,
                                             const CalibrationTables& tables, const EstimateOptions& options) {
    std::vector<Fingerprint> out;
    const int w = video.encoded.trace.header.width;
    const int h = video.encoded.trace.header.height;
    for (const auto s : schemes) {
        const auto masks = scheme_masks(scheme_config(s, tables), video.maps, w, h);
        const auto acc = accumulate_prepared(video.prepared, masks, options.use_saturation_mask);
        auto fo = options.finalize;
        fo.source_id = video.id + ":" + std::string(to_string(s));
        out.push_back(finalize(acc, fo));
    }
    return out;
}

CalibrationTables calibrate_tables(const CohortConfig& config) {
    const int ncam = config.calibration_cameras;
    if (ncam < 1) fail(ErrorKind::ConfigError, "calibration needs at least one camera");
    std::vector<SimCamera> cams(static_cast<std::size_t>(ncam));
    parallel_for(cams.size(), config.workers,
                 [&](std::size_t i) { cams[i] = make_camera(config, 1, static_cast<int>(i)); });

    std::set<int> qp_set(config.calibration_qps.begin(), config.calibration_qps.end());
    qp_set.insert(kDefaultAnchorQp);
    const std::vector<int> qps(qp_set.begin(), qp_set.end());
    const std::size_t per_cam_qp = qps.size() * static_cast<std::size_t>(config.videos_per_camera);
    const std::size_t per_cam_lr = config.bitrates.size() * static_cast<std::size_t>(config.videos_per_camera);

    // Slots: QP jobs then lambda*R jobs, written by index.
    std::vector<std::vector<QpObservation>> qp_all_obs(cams.size() * per_cam_qp);
    std::vector<std::vector<QpObservation>> qp_ns_obs(cams.size() * per_cam_qp);
    std::vector<std::vector<LambdaRateObservation>> lr_obs(cams.size() * per_cam_lr);

    parallel_for(qp_all_obs.size() + lr_obs.size(), config.workers, [&](std::size_t job) {
        if (job < qp_all_obs.size()) {
            const auto& cam = cams[job / per_cam_qp];
            const std::size_t r = job % per_cam_qp;
            const int qp = qps[r % qps.size()];
            const int video = static_cast<int>(r / qps.size());
            CodecConfig codec = config.codec;
            codec.mode = RateMode::FixedQp;
            codec.qp = qp;
            const auto v = simulate_video(config, cam, 1, video, codec, qp);
            double sum_all = 0.0, sum_ns = 0.0;
            int n_all = 0, n_ns = 0;
            for (std::size_t f = 0; f < v.prepared.size(); ++f) {
                double frac = 0.0;
                const auto ones = mask_all_ones(v.maps[f], config.width, config.height);
                sum_all += single_frame_pce(v.prepared[f], ones, cam.reference, config, frac);
                ++n_all;
                const auto coded = mask_skip_eliminate(v.maps[f], config.width, config.height);
                if (std::none_of(coded.values().begin(), coded.values().end(), [](double m) { return m > 0.0; })) {
                    continue;
                }
                const double p = single_frame_pce(v.prepared[f], coded, cam.reference, config, frac);
                sum_ns += p / frac;
                ++n_ns;
            }
            qp_all_obs[job].push_back({cam.id, qp, sum_all / n_all});
            if (n_ns > 0) qp_ns_obs[job].push_back({cam.id, qp, sum_ns / n_ns});
        } else {
            const std::size_t j = job - qp_all_obs.size();
            const auto& cam = cams[j / per_cam_lr];
            const std::size_t r = j % per_cam_lr;
            const double bitrate = config.bitrates[r % config.bitrates.size()];
            const int video = static_cast<int>(r / config.bitrates.size());
            CodecConfig codec = config.codec;
            codec.mode = RateMode::TargetBitrate;
            codec.bits_per_frame = bitrate;
            const auto v = simulate_video(config, cam, 1, video, codec, bitrate);
            std::vector<NoiseResidual> residuals;
            std::vector<Picture> pictures;
            for (const auto& p : v.prepared) {
                residuals.push_back(p.residual);
                pictures.push_back(p.picture);
            }
            const auto spliced = splice_by_lambda_rate(residuals, v.maps, pictures, true);
            const double blocks = static_cast<double>(v.maps.front().size());
            for (const auto& sf : spliced.frames) {
                if (sf.filled_blocks == 0) continue;
                const double p = pce(spliced_fingerprint(sf, config.estimate.finalize), cam.reference, config.calibration_pce).pce;
                lr_obs[j].push_back({cam.id, sf.mean_lambda_rate, p * blocks / sf.filled_blocks});
            }
        }
    });

    const auto flatten = [](const auto& slots) {
        std::vector<typename std::decay_t<decltype(slots)>::value_type::value_type> out;
        for (const auto& s : slots) out.insert(out.end(), s.begin(), s.end());
        return out;
    };
    const auto all = flatten(qp_all_obs);
    const auto ns = flatten(qp_ns_obs);
    const auto lr = flatten(lr_obs);

    CalibrationTables t;
    t.qp_all = calibrate_qp(all, TableScheme::QpAll, kDefaultAnchorQp);
    t.qp_no_skip = calibrate_qp(ns, TableScheme::QpNoSkip, kDefaultAnchorQp);
    t.lambda_r = calibrate_lambda_rate(lr, config.lambda_rate_buckets, kDefaultAnchorLambdaRate);
    t.qp_all_dense = densify_qp_table(TableScheme::QpAll, t.qp_all.table.keys, t.qp_all.table.weights,
                                      kDefaultAnchorQp);
    t.qp_no_skip_dense = densify_qp_table(TableScheme::QpNoSkip, t.qp_no_skip.table.keys,
                                          t.qp_no_skip.table.weights, kDefaultAnchorQp);
    t.qp_all_observations = all;
    t.qp_no_skip_observations = ns;
    t.lambda_rate_observations = lr;
    return t;
}

CohortConfig static_content_config(CohortConfig base) {
    base.scene.pan_x = 0.0;
    base.scene.pan_y = 0.0;
    base.scene.moving_objects = 0;
    base.scene.texture_amplitude = 60.0;
    base.codec.gop = 0;
    base.codec.global_motion_range = 0;
    base.bitrates = {250.0, 500.0, 1000.0, 2000.0, 4000.0};
    return base;
}

std::vector<SbrGroup> sbr_sweep(const CohortConfig& config, int videos) {
    if (videos < 1) fail(ErrorKind::ConfigError, "SBR sweep needs at least one video");
    if (config.bitrates.empty()) fail(ErrorKind::ConfigError, "SBR sweep needs at least one bitrate");
    const std::size_t nb = config.bitrates.size();
    std::vector<double> sbr(static_cast<std::size_t>(videos) * nb);
    parallel_for(sbr.size(), config.workers, [&](std::size_t job) {
        const auto cam = make_camera(config, 2, static_cast<int>(job / nb));
        CodecConfig codec = config.codec;
        codec.mode = RateMode::TargetBitrate;
        codec.bits_per_frame = config.bitrates[job % nb];
        sbr[job] = simulate_video(config, cam, 2, 0, codec, codec.bits_per_frame).sbr;
    });
    std::vector<SbrGroup> out;
    for (std::size_t b = 0; b < nb; ++b) {
        SbrGroup g{format_double(config.bitrates[b]), {}};
        for (int v = 0; v < videos; ++v) g.sbr.push_back(sbr[static_cast<std::size_t>(v) * nb + b]);
        out.push_back(std::move(g));
    }
    return out;
}

CohortResult run_cohort(const CohortConfig& config) {
    if (config.cameras < 2) fail(ErrorKind::ConfigError, "cohort needs at least two cameras");
    if (config.bitrates.empty()) fail(ErrorKind::ConfigError, "cohort needs at least one bitrate");
    CohortResult result;
    result.tables = calibrate_tables(config);

    std::vector<SimCamera> cams(static_cast<std::size_t>(config.cameras));
    parallel_for(cams.size(), config.workers,
                 [&](std::size_t i) { cams[i] = make_camera(config, 0, static_cast<int>(i)); });
    std::vector<Fingerprint> references;
    for (const auto& c : cams) references.push_back(c.reference);

    const std::vector<Scheme> schemes(std::begin(kAllSchemes), std::end(kAllSchemes));
    const std::size_t per_cam = static_cast<std::size_t>(config.videos_per_camera) * config.bitrates.size();
    std::vector<std::vector<GridRow>> rows(cams.size() * per_cam);
    std::vector<double> sbr(rows.size());
    parallel_for(rows.size(), config.workers, [&](std::size_t job) {
        const std::size_t c = job / per_cam;
        const std::size_t r = job % per_cam;
        const double bitrate = config.bitrates[r % config.bitrates.size()];
        const int video = static_cast<int>(r / config.bitrates.size());
        CodecConfig codec = config.codec;
        codec.mode = RateMode::TargetBitrate;
        codec.bits_per_frame = bitrate;
        const auto v = simulate_video(config, cams[c], 0, video, codec, bitrate);
        sbr[job] = v.sbr;

        GridInput match;
        match.video_id = v.id;
        match.camera_id = cams[c].id;
        match.bitrate = bitrate;
        match.bits_per_pixel = v.bits_per_pixel;
        match.fingerprints = scheme_fingerprints(v, schemes, result.tables, config.estimate);
        match.reference = c;
        GridInput other = match;
        other.matching = false;
        other.reference = (c + 1) % cams.size();
        other.camera_id = cams[other.reference].id;
        const std::vector<GridInput> inputs{std::move(match), std::move(other)};
        rows[job] = run_grid(inputs, schemes, references, config.pce, 1).rows;
    });

    result.grid.schemes = schemes;
    for (auto& r : rows) {
        for (auto& row : r) result.grid.rows.push_back(std::move(row));
    }
    for (const double b : config.bitrates) result.sbr.push_back({format_double(b), {}});
    for (std::size_t job = 0; job < rows.size(); ++job) {
        result.sbr[(job % per_cam) % config.bitrates.size()].sbr.push_back(sbr[job]);
    }
    return result;
}

}  // namespace blockprnu
