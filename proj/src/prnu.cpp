#include "blockprnu/prnu.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace blockprnu {

FingerprintAccumulator::FingerprintAccumulator(int width, int height)
    : numerator_(width, height, 0.0), denominator_(width, height, 0.0) {}

void FingerprintAccumulator::accumulate(const Picture& picture, const NoiseResidual& residual, const Mask& mask,
                                        const Plane<std::uint8_t>* saturation) {
    require_same_shape(numerator_, picture.luma, "accumulate picture");
    require_same_shape(numerator_, residual.values, "accumulate residual");
    require_same_shape(numerator_, mask, "accumulate mask");
    if (saturation != nullptr) require_same_shape(numerator_, *saturation, "accumulate saturation mask");
    for (std::size_t i = 0; i < numerator_.size(); ++i) {
        double m = mask[i];
        if (saturation != nullptr && (*saturation)[i] == 0) m = 0.0;
        if (m == 0.0) continue;
        const double intensity = picture.luma[i];
        numerator_[i] += intensity * residual.values[i] * m;
        denominator_[i] += intensity * intensity * m;
    }
    ++frames_;
}

void FingerprintAccumulator::merge(const FingerprintAccumulator& other) {
    require_same_shape(numerator_, other.numerator_, "merge");
    for (std::size_t i = 0; i < numerator_.size(); ++i) {
        numerator_[i] += other.numerator_[i];
        denominator_[i] += other.denominator_[i];
    }
    frames_ += other.frames_;
}

double default_denominator_floor(const FingerprintAccumulator& acc) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const double d : acc.denominator().values()) {
        if (d > 0.0) {
            sum += d;
            ++n;
        }
    }
    return n == 0 ? 0.0 : 1e-3 * sum / static_cast<double>(n);
}

void normalize_fingerprint(Fingerprint& fp) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < fp.k_values.size(); ++i) {
        if (fp.support[i] != 0) {
            sum += fp.k_values[i];
            ++n;
        }
    }
    if (n == 0) fail(ErrorKind::DegenerateFingerprint, "fingerprint has empty support");
    const double mean = sum / static_cast<double>(n);
    double energy = 0.0;
    double raw_energy = 0.0;
    for (std::size_t i = 0; i < fp.k_values.size(); ++i) {
        if (fp.support[i] != 0) {
            raw_energy += fp.k_values[i] * fp.k_values[i];
            fp.k_values[i] -= mean;
            energy += fp.k_values[i] * fp.k_values[i];
        } else {
            fp.k_values[i] = 0.0;
        }
    }
    // A constant pattern leaves only rounding residue after the mean is removed.
    if (!(energy > 1e-24 * raw_energy) || !std::isfinite(energy)) fail(ErrorKind::DegenerateFingerprint, "fingerprint has zero energy");
    const double scale = 1.0 / std::sqrt(energy);
    for (auto& v : fp.k_values.values()) v *= scale;
}

Fingerprint finalize(const FingerprintAccumulator& acc, const FinalizeOptions& options) {
    if (acc.frames_ingested() < 1) fail(ErrorKind::EmptyAccumulator, "finalize before any frame was accumulated");
    const double floor = options.denominator_floor.value_or(default_denominator_floor(acc));
    Fingerprint fp;
    fp.source_id = options.source_id;
    fp.k_values = Plane<double>(acc.width(), acc.height(), 0.0);
    fp.support = Plane<std::uint8_t>(acc.width(), acc.height(), 0);
    std::size_t supported = 0;
    for (std::size_t i = 0; i < fp.k_values.size(); ++i) {
        const double d = acc.denominator()[i];
        if (d > 0.0 && d >= floor) {
            fp.k_values[i] = acc.numerator()[i] / d;
            fp.support[i] = 1;
            ++supported;
        }
    }
    if (supported == 0) fail(ErrorKind::AllMaskedOut, "no pixel has a denominator above the floor");
    if (options.normalization == Normalization::ZeroMeanUnitEnergy) normalize_fingerprint(fp);
    return fp;
}

Plane<double> apply_inverse_transform(const Plane<double>& values, const AffineTransform& transform) {
    if (!transform.is_identity()) {
        fail(ErrorKind::Unsupported, "only identity inverse transforms are supported (stabilized video is out of scope)");
    }
    return values;
}

// =============================================================================
// File format
// =============================================================================

namespace {

constexpr char kMagic[8] = {'B', 'P', 'R', 'N', 'U', 'F', 'P', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
    if (pos + 4 > in.size()) fail(ErrorKind::SchemaError, "fingerprint file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + static_cast<std::size_t>(i)]) << (8 * i);
    pos += 4;
    return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_fingerprint(const Fingerprint& fp) {
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    put_u32(out, static_cast<std::uint32_t>(fp.width()));
    put_u32(out, static_cast<std::uint32_t>(fp.height()));
    put_u32(out, static_cast<std::uint32_t>(fp.source_id.size()));
    out.insert(out.end(), fp.source_id.begin(), fp.source_id.end());
    for (const double k : fp.k_values.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(k)));
    std::uint8_t byte = 0;
    int nbits = 0;
    for (const auto s : fp.support.values()) {
        byte = static_cast<std::uint8_t>((byte << 1) | (s != 0 ? 1 : 0));
        if (++nbits == 8) {
            out.push_back(byte);
            byte = 0;
            nbits = 0;
        }
    }
    if (nbits > 0) out.push_back(static_cast<std::uint8_t>(byte << (8 - nbits)));
    return out;
}

Fingerprint parse_fingerprint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        fail(ErrorKind::SchemaError, "not a fingerprint file (bad magic)");
    }
    std::size_t pos = sizeof(kMagic);
    const auto w = get_u32(bytes, pos);
    const auto h = get_u32(bytes, pos);
    const auto id_len = get_u32(bytes, pos);
    if (w > (1U << 16) || h > (1U << 16)) fail(ErrorKind::SchemaError, "implausible fingerprint dimensions");
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const std::size_t need = pos + id_len + 4 * n + (n + 7) / 8;
    if (bytes.size() != need) fail(ErrorKind::SchemaError, "fingerprint file has unexpected length");
    Fingerprint fp;
    fp.source_id.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                        bytes.begin() + static_cast<std::ptrdiff_t>(pos + id_len));
    pos += id_len;
    fp.k_values = Plane<double>(static_cast<int>(w), static_cast<int>(h));
    fp.support = Plane<std::uint8_t>(static_cast<int>(w), static_cast<int>(h));
    for (std::size_t i = 0; i < n; ++i) fp.k_values[i] = std::bit_cast<float>(get_u32(bytes, pos));
    for (std::size_t i = 0; i < n; ++i) {
        fp.support[i] = (bytes[pos + i / 8] >> (7 - i % 8)) & 1U;
    }
    return fp;
}

void save_fingerprint(const std::filesystem::path& path, const Fingerprint& fp) {
    const auto bytes = serialize_fingerprint(fp);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

Fingerprint load_fingerprint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_fingerprint(bytes);
}

}  // namespace blockprnu
