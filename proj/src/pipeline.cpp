#include "blockprnu/pipeline.hpp"

#include "blockprnu/parallel.hpp"

namespace blockprnu {

PreparedFrame prepare_frame(const Picture& picture, const DenoiseConfig& config) {
    PreparedFrame f;
    f.residual = extract_residual(picture, config);
    f.saturation = saturation_mask(picture);
    f.picture = picture;
    return f;
}

std::vector<PreparedFrame> prepare_frames(const std::vector<Picture>& pictures, const DenoiseConfig& config,
                                          int workers) {
    std::vector<PreparedFrame> out(pictures.size());
    parallel_for(pictures.size(), workers, [&](std::size_t i) { out[i] = prepare_frame(pictures[i], config); });
    return out;
}

FingerprintEstimator::FingerprintEstimator(int width, int height, SchemeConfig scheme, EstimateOptions options,
                                           int workers)
    : width_(width), height_(height), scheme_(std::move(scheme)), options_(std::move(options)),
      workers_(std::max(1, workers)), acc_(width, height) {
    scheme_.validate();
}

void FingerprintEstimator::add(Picture picture, const FrameBlockMap* blocks) {
    if (picture.width() != width_ || picture.height() != height_) {
        fail(ErrorKind::DimensionMismatch, "frame " + std::to_string(picture.frame_idx) + " has size " +
                                               std::to_string(picture.width()) + "x" +
                                               std::to_string(picture.height()));
    }
    if (blocks == nullptr && scheme_.scheme != Scheme::Conventional && scheme_.scheme != Scheme::LoopFilterOnly) {
        fail(ErrorKind::Usage, std::string(to_string(scheme_.scheme)) + " needs block metadata");
    }
    pending_.push_back(std::move(picture));
    pending_blocks_.push_back(blocks ? std::optional<FrameBlockMap>(*blocks) : std::nullopt);
    ++frames_added_;
    if (static_cast<int>(pending_.size()) >= workers_) flush();
}

void FingerprintEstimator::flush() {
    if (pending_.empty()) return;
    std::vector<PreparedFrame> prepared(pending_.size());
    std::vector<Mask> masks(pending_.size());
    parallel_for(pending_.size(), workers_, [&](std::size_t i) {
        prepared[i] = prepare_frame(pending_[i], options_.denoise);
        masks[i] = pending_blocks_[i] ? build_mask(scheme_, *pending_blocks_[i], width_, height_)
                                      : Mask(width_, height_, 1.0);
    });
    // Summation order must not depend on the batch size.
    for (std::size_t i = 0; i < prepared.size(); ++i) {
        acc_.accumulate(prepared[i].picture, prepared[i].residual, masks[i],
                        options_.use_saturation_mask ? &prepared[i].saturation : nullptr);
    }
    pending_.clear();
    pending_blocks_.clear();
}

Fingerprint FingerprintEstimator::finish() {
    flush();
    return finalize(acc_, options_.finalize);
}

FingerprintAccumulator accumulate_prepared(std::span<const PreparedFrame> frames, std::span<const Mask> masks,
                                           bool use_saturation_mask) {
    if (frames.size() != masks.size()) fail(ErrorKind::DimensionMismatch, "one mask per frame required");
    if (frames.empty()) fail(ErrorKind::EmptyInput, "no frames");
    FingerprintAccumulator acc(frames.front().picture.width(), frames.front().picture.height());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        acc.accumulate(frames[i].picture, frames[i].residual, masks[i],
                       use_saturation_mask ? &frames[i].saturation : nullptr);
    }
    return acc;
}

std::vector<Mask> scheme_masks(const SchemeConfig& scheme, std::span<const FrameBlockMap> maps, int width,
                               int height) {
    std::vector<Mask> out;
    out.reserve(maps.size());
    for (const auto& m : maps) out.push_back(build_mask(scheme, m, width, height));
    return out;
}

Fingerprint estimate_fingerprint(const std::vector<Picture>& pictures, const TraceFile& trace,
                                 const SchemeConfig& scheme, const EstimateOptions& options, int workers) {
    if (pictures.empty()) fail(ErrorKind::EmptyInput, "no frames");
    const auto& h = trace.header;
    if (h.frame_count != static_cast<int>(pictures.size())) {
        fail(ErrorKind::DimensionMismatch, "trace has " + std::to_string(h.frame_count) + " frames, video has " +
                                               std::to_string(pictures.size()));
    }
    if (h.width != pictures.front().width() || h.height != pictures.front().height()) {
        fail(ErrorKind::DimensionMismatch, "trace and video dimensions differ");
    }
    FingerprintEstimator est(h.width, h.height, scheme, options, workers);
    const auto maps = trace.frames();
    for (std::size_t i = 0; i < pictures.size(); ++i) est.add(pictures[i], &maps[i]);
    return est.finish();
}

Fingerprint estimate_reference(const std::vector<Picture>& pictures, const EstimateOptions& options, int workers) {
    if (pictures.empty()) fail(ErrorKind::EmptyInput, "no frames");
    FingerprintEstimator est(pictures.front().width(), pictures.front().height(), SchemeConfig{}, options, workers);
    for (const auto& p : pictures) est.add(p, nullptr);
    return est.finish();
}

}  // namespace blockprnu
