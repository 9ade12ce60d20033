#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "blockprnu/noise.hpp"
#include "blockprnu/prnu.hpp"
#include "blockprnu/trace.hpp"
#include "blockprnu/weighting.hpp"

namespace blockprnu {

struct EstimateOptions {
    DenoiseConfig denoise;
    bool use_saturation_mask = true;
    FinalizeOptions finalize;
};

// Residual and clipping mask of one decoded picture, reusable across schemes.
struct PreparedFrame {
    Picture picture;
    NoiseResidual residual;
    Plane<std::uint8_t> saturation;
};

PreparedFrame prepare_frame(const Picture& picture, const DenoiseConfig& config);
// Results in input order regardless of worker count.
std::vector<PreparedFrame> prepare_frames(const std::vector<Picture>& pictures, const DenoiseConfig& config,
                                          int workers = 1);

// Streaming masked estimation. Frames are buffered in groups of `workers`
// for residual extraction and accumulated in input order.
class FingerprintEstimator {
public:
    FingerprintEstimator(int width, int height, SchemeConfig scheme, EstimateOptions options, int workers = 1);

    // `blocks` may be null only for the conventional scheme (all-ones mask).
    void add(Picture picture, const FrameBlockMap* blocks);
    Fingerprint finish();

    int frames_added() const noexcept { return frames_added_; }

private:
    void flush();

    int width_;
    int height_;
    SchemeConfig scheme_;
    EstimateOptions options_;
    int workers_;
    FingerprintAccumulator acc_;
    std::vector<Picture> pending_;
    std::vector<std::optional<FrameBlockMap>> pending_blocks_;
    int frames_added_ = 0;
};

// Trace frame count and dimensions must match the pictures (DimensionMismatch).
Fingerprint estimate_fingerprint(const std::vector<Picture>& pictures, const TraceFile& trace,
                                 const SchemeConfig& scheme, const EstimateOptions& options = {}, int workers = 1);

// Reference fingerprint from uncompressed captures, unit masks.
Fingerprint estimate_reference(const std::vector<Picture>& pictures, const EstimateOptions& options = {},
                               int workers = 1);

// Accumulates prepared frames under per-frame masks.
FingerprintAccumulator accumulate_prepared(std::span<const PreparedFrame> frames, std::span<const Mask> masks,
                                           bool use_saturation_mask = true);

std::vector<Mask> scheme_masks(const SchemeConfig& scheme, std::span<const FrameBlockMap> maps, int width,
                               int height);

}  // namespace blockprnu
