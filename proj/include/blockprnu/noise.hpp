#pragma once

#include <cstdint>

#include "blockprnu/plane.hpp"

namespace blockprnu {

enum class DenoiseMethod {
    // Multi-level 8-tap Daubechies decomposition, locally adaptive Wiener
    // shrinkage of each detail subband.
    Wavelet,
    // 3x3 spatial Wiener filter.
    SpatialWiener,
};

struct DenoiseConfig {
    DenoiseMethod method = DenoiseMethod::Wavelet;
    // Assumed noise variance, in squared 8-bit sample units.
    double noise_variance = 3.0;
    // Decomposition depth; reduced automatically when the frame is not divisible by 2^levels.
    int levels = 4;
};

Plane<double> denoise(const Plane<double>& image, const DenoiseConfig& config);

// W = I - denoise(I), then zero-meaned per row and per column.
NoiseResidual extract_residual(const Picture& picture, const DenoiseConfig& config = {});

// 0 at clipped samples (<= 5 or >= 250), 1 elsewhere.
Plane<std::uint8_t> saturation_mask(const Picture& picture);

void zero_mean_rows_cols(Plane<double>& values);

// Periodized orthogonal 2-D wavelet transform in Mallat layout. Exposed for tests.
Plane<double> wavelet_forward(const Plane<double>& image, int levels);
Plane<double> wavelet_inverse(const Plane<double>& coeffs, int levels);
int usable_wavelet_levels(int width, int height, int requested);

}  // namespace blockprnu
