#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "blockprnu/plane.hpp"

namespace blockprnu {

// Running sums of the masked PRNU estimator
//
//        sum_i I_i * W_i * M_i
//   K = -----------------------
//          sum_i I_i^2 * M_i
//
// evaluated pixelwise. Accumulators from disjoint frame sets merge by addition.
class FingerprintAccumulator {
public:
    FingerprintAccumulator(int width, int height);

    int width() const noexcept { return numerator_.width(); }
    int height() const noexcept { return numerator_.height(); }
    int frames_ingested() const noexcept { return frames_; }
    const Plane<double>& numerator() const noexcept { return numerator_; }
    const Plane<double>& denominator() const noexcept { return denominator_; }

    // Effective weight is mask * saturation. Throws DimensionMismatch.
    void accumulate(const Picture& picture, const NoiseResidual& residual, const Mask& mask,
                    const Plane<std::uint8_t>* saturation = nullptr);

    void merge(const FingerprintAccumulator& other);

private:
    Plane<double> numerator_;
    Plane<double> denominator_;
    int frames_ = 0;
};

struct Fingerprint {
    Plane<double> k_values;
    Plane<std::uint8_t> support;
    std::string source_id;

    int width() const noexcept { return k_values.width(); }
    int height() const noexcept { return k_values.height(); }
};

enum class Normalization {
    // Raw ratio, zero off support.
    None,
    // Zero mean over support, then unit energy.
    ZeroMeanUnitEnergy,
};

struct FinalizeOptions {
    // Absolute denominator floor; when unset, 1e-3 x mean of the nonzero denominators.
    std::optional<double> denominator_floor;
    Normalization normalization = Normalization::ZeroMeanUnitEnergy;
    std::string source_id;
};

// Throws EmptyAccumulator (no frames) or AllMaskedOut (empty support).
Fingerprint finalize(const FingerprintAccumulator& acc, const FinalizeOptions& options = {});

double default_denominator_floor(const FingerprintAccumulator& acc);

// Zero-mean over support, unit energy. Throws DegenerateFingerprint on zero energy.
void normalize_fingerprint(Fingerprint& fp);

// Geometric inverse transform applied to masks/residuals of stabilized video.
// Only the identity is supported; anything else throws Unsupported.
struct AffineTransform {
    // x' = a*x + b*y + tx, y' = c*x + d*y + ty
    std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

    static AffineTransform identity() { return {}; }
    bool is_identity() const noexcept { return m == std::array<double, 6>{1.0, 0.0, 0.0, 0.0, 1.0, 0.0}; }
};

Plane<double> apply_inverse_transform(const Plane<double>& values, const AffineTransform& transform);

// Binary fingerprint file: "BPRNUFP1", u32 width, u32 height, u32 id length,
// id bytes, width*height little-endian float32 K values (row-major), then the
// support bitmap packed MSB-first, row-major, zero padded to a byte.
std::vector<std::uint8_t> serialize_fingerprint(const Fingerprint& fp);
Fingerprint parse_fingerprint(const std::vector<std::uint8_t>& bytes);
void save_fingerprint(const std::filesystem::path& path, const Fingerprint& fp);
Fingerprint load_fingerprint(const std::filesystem::path& path);

}  // namespace blockprnu
