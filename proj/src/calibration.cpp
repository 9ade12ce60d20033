#include "blockprnu/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "blockprnu/text.hpp"

namespace blockprnu {

// =============================================================================
// Splicing
// =============================================================================

SplicedFrameSet splice_by_lambda_rate(std::span<const NoiseResidual> residuals, std::span<const FrameBlockMap> maps,
                                      std::span<const Picture> pictures, bool exclude_skip) {
    const std::size_t n = residuals.size();
    if (n < 2) fail(ErrorKind::InsufficientFrames, "splicing needs at least 2 frames, got " + std::to_string(n));
    if (maps.size() != n) fail(ErrorKind::DimensionMismatch, "one block map per residual required");
    if (!pictures.empty() && pictures.size() != n) fail(ErrorKind::DimensionMismatch, "one picture per residual required");
    const int width = residuals.front().values.width();
    const int height = residuals.front().values.height();
    const int cols = maps.front().mb_cols();
    const int rows = maps.front().mb_rows();
    for (std::size_t i = 0; i < n; ++i) {
        require_same_shape(residuals[i].values, residuals.front().values, "splice residual");
        if (!pictures.empty()) require_same_shape(pictures[i].luma, residuals.front().values, "splice picture");
        if (maps[i].mb_cols() != cols || maps[i].mb_rows() != rows) {
            fail(ErrorKind::DimensionMismatch, "block maps differ in grid size");
        }
    }
    if (cols * kMacroblockSize > width || rows * kMacroblockSize > height) {
        fail(ErrorKind::DimensionMismatch, "block grid exceeds the residual plane");
    }

    SplicedFrameSet out;
    out.frames.resize(n);
    out.source.assign(n, std::vector<int>(static_cast<std::size_t>(cols * rows), -1));
    std::vector<double> lr_sum(n, 0.0);
    for (auto& f : out.frames) {
        f.residual.values = Plane<double>(width, height, 0.0);
        f.mask = Mask(width, height, 0.0);
        if (!pictures.empty()) f.picture.luma = Plane<std::uint8_t>(width, height, 0);
    }

    std::vector<std::pair<double, int>> ranked;
    ranked.reserve(n);
    for (int by = 0; by < rows; ++by) {
        for (int bx = 0; bx < cols; ++bx) {
            ranked.clear();
            for (std::size_t i = 0; i < n; ++i) {
                const auto& b = maps[i].at(bx, by);
                if (exclude_skip && b.is_skip()) continue;
                ranked.emplace_back(lambda_rate(b), static_cast<int>(i));
            }
            std::sort(ranked.begin(), ranked.end());
            for (std::size_t j = 0; j < ranked.size(); ++j) {
                const auto src = static_cast<std::size_t>(ranked[j].second);
                auto& dst = out.frames[j];
                out.source[j][static_cast<std::size_t>(by * cols + bx)] = ranked[j].second;
                lr_sum[j] += ranked[j].first;
                ++dst.filled_blocks;
                for (int y = by * kMacroblockSize; y < (by + 1) * kMacroblockSize; ++y) {
                    for (int x = bx * kMacroblockSize; x < (bx + 1) * kMacroblockSize; ++x) {
                        dst.residual.values(x, y) = residuals[src].values(x, y);
                        dst.mask(x, y) = 1.0;
                        if (!pictures.empty()) dst.picture.luma(x, y) = pictures[src].luma(x, y);
                    }
                }
            }
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        auto& f = out.frames[j];
        f.picture.frame_idx = static_cast<int>(j);
        f.mean_lambda_rate = f.filled_blocks > 0 ? lr_sum[j] / f.filled_blocks : 0.0;
    }
    return out;
}

Fingerprint spliced_fingerprint(const SplicedFrame& frame, const FinalizeOptions& options) {
    if (frame.picture.luma.empty()) fail(ErrorKind::Usage, "spliced frame carries no picture");
    if (frame.filled_blocks == 0) fail(ErrorKind::AllMaskedOut, "spliced frame is empty");
    FingerprintAccumulator acc(frame.picture.width(), frame.picture.height());
    const auto sat = saturation_mask(frame.picture);
    acc.accumulate(frame.picture, frame.residual, frame.mask, &sat);
    return finalize(acc, options);
}

// =============================================================================
// Tables
// =============================================================================

namespace {

// Per-camera condition means, with cameras and conditions in sorted order.
using ConditionMeans = std::map<std::string, std::map<std::size_t, std::pair<double, std::size_t>>>;

CalibrationResult assemble(const ConditionMeans& sums, const std::vector<double>& keys, std::size_t anchor,
                           TableScheme scheme, double anchor_key, bool exclude_missing_anchor) {
    CalibrationResult result;
    std::map<std::string, double> anchor_mean;
    for (const auto& [camera, conds] : sums) {
        const auto it = conds.find(anchor);
        if (it == conds.end()) {
            if (exclude_missing_anchor) {
                result.excluded_cameras.push_back(camera);
                continue;
            }
            fail(ErrorKind::MissingAnchor, "camera " + camera + " has no observation at the anchor");
        }
        anchor_mean[camera] = std::max(kPceFloor, it->second.first / static_cast<double>(it->second.second));
    }
    if (anchor_mean.empty()) fail(ErrorKind::EmptyBucket, "no camera has an observation at the anchor");

    for (std::size_t c = 0; c < keys.size(); ++c) {
        CalibrationRow row;
        row.key = c == anchor ? anchor_key : keys[c];
        double total = 0.0;
        for (const auto& [camera, ref] : anchor_mean) {
            const auto& conds = sums.at(camera);
            const auto it = conds.find(c);
            if (it == conds.end()) continue;
            const double raw = it->second.first / static_cast<double>(it->second.second);
            const double norm = c == anchor ? 1.0 : std::max(kPceFloor, raw) / ref;
            row.cameras.push_back(camera);
            row.raw_mean_pce.push_back(raw);
            row.normalized.push_back(norm);
            row.observations += it->second.second;
            total += norm;
        }
        if (row.cameras.empty()) continue;
        row.mean_normalized = c == anchor ? 1.0 : total / static_cast<double>(row.cameras.size());
        row.weight = c == anchor ? 1.0 : std::sqrt(row.mean_normalized);
        result.rows.push_back(std::move(row));
    }

    result.table.scheme = scheme;
    result.table.anchor_key = anchor_key;
    for (const auto& row : result.rows) {
        result.table.keys.push_back(row.key);
        result.table.weights.push_back(row.weight);
    }
    result.table.validate();
    return result;
}

}  // namespace

CalibrationResult calibrate_qp(std::span<const QpObservation> observations, TableScheme scheme, int anchor_qp) {
    if (scheme != TableScheme::QpAll && scheme != TableScheme::QpNoSkip) {
        fail(ErrorKind::ConfigError, "QP calibration produces qp_all or qp_no_skip tables");
    }
    if (observations.empty()) fail(ErrorKind::InsufficientData, "no QP observations");
    std::vector<double> keys;
    for (const auto& o : observations) {
        if (o.qp < kMinQp || o.qp > kMaxQp) fail(ErrorKind::RangeError, "observation qp out of range");
        if (!std::isfinite(o.pce)) fail(ErrorKind::InsufficientData, "non-finite PCE observation");
        keys.push_back(o.qp);
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    const auto anchor_it = std::find(keys.begin(), keys.end(), static_cast<double>(anchor_qp));
    if (anchor_it == keys.end()) fail(ErrorKind::MissingAnchor, "anchor QP " + std::to_string(anchor_qp) + " not observed");
    if (keys.size() < 2) fail(ErrorKind::InsufficientData, "QP calibration needs at least two QP levels");

    ConditionMeans sums;
    for (const auto& o : observations) {
        const auto c = static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), o.qp) - keys.begin());
        auto& s = sums[o.camera_id][c];
        s.first += o.pce;
        ++s.second;
    }
    return assemble(sums, keys, static_cast<std::size_t>(anchor_it - keys.begin()), scheme, anchor_qp, false);
}

CalibrationResult calibrate_lambda_rate(std::span<const LambdaRateObservation> observations, int bucket_count,
                                        double anchor) {
    if (bucket_count < 2) fail(ErrorKind::ConfigError, "need at least two lambda*R buckets");
    if (observations.size() < 2) fail(ErrorKind::InsufficientData, "too few lambda*R observations");
    for (const auto& o : observations) {
        if (!std::isfinite(o.pce) || !std::isfinite(o.lambda_rate)) {
            fail(ErrorKind::InsufficientData, "non-finite lambda*R observation");
        }
    }
    std::vector<std::size_t> order(observations.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return observations[a].lambda_rate < observations[b].lambda_rate;
    });

    // Equal-population ranges over the sorted order; buckets with equal means merge.
    const std::size_t n = order.size();
    const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(bucket_count), n);
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t i = 0; i < b; ++i) ranges.emplace_back(i * n / b, (i + 1) * n / b);
    const auto mean_of = [&](const std::pair<std::size_t, std::size_t>& r) {
        double s = 0.0;
        for (std::size_t i = r.first; i < r.second; ++i) s += observations[order[i]].lambda_rate;
        return s / static_cast<double>(r.second - r.first);
    };
    std::vector<std::pair<std::size_t, std::size_t>> merged;
    for (const auto& r : ranges) {
        if (!merged.empty() && mean_of(merged.back()) >= mean_of(r)) {
            merged.back().second = r.second;
        } else {
            merged.push_back(r);
        }
    }

    const auto lo = [&](std::size_t k) { return observations[order[merged[k].first]].lambda_rate; };
    const auto hi = [&](std::size_t k) { return observations[order[merged[k].second - 1]].lambda_rate; };
    if (anchor < lo(0) || anchor > hi(merged.size() - 1)) {
        fail(ErrorKind::EmptyBucket, "anchor lambda*R " + format_double(anchor) + " outside the observed range [" +
                                         format_double(lo(0)) + ", " + format_double(hi(merged.size() - 1)) + "]");
    }
    std::size_t anchor_bucket = 0;
    for (std::size_t k = 0; k < merged.size(); ++k) {
        if (anchor >= lo(k) && anchor <= hi(k)) {
            anchor_bucket = k;
            break;
        }
        if (k + 1 < merged.size() && anchor > hi(k) && anchor < lo(k + 1)) {
            anchor_bucket = anchor - hi(k) <= lo(k + 1) - anchor ? k : k + 1;
            break;
        }
    }
    // Neighbors whose mean collides with the anchor key fold into the anchor bucket.
    while (anchor_bucket > 0 && mean_of(merged[anchor_bucket - 1]) >= anchor) {
        merged[anchor_bucket - 1].second = merged[anchor_bucket].second;
        merged.erase(merged.begin() + static_cast<std::ptrdiff_t>(anchor_bucket));
        --anchor_bucket;
    }
    while (anchor_bucket + 1 < merged.size() && mean_of(merged[anchor_bucket + 1]) <= anchor) {
        merged[anchor_bucket].second = merged[anchor_bucket + 1].second;
        merged.erase(merged.begin() + static_cast<std::ptrdiff_t>(anchor_bucket + 1));
    }

    std::vector<double> keys;
    ConditionMeans sums;
    for (std::size_t k = 0; k < merged.size(); ++k) {
        keys.push_back(mean_of(merged[k]));
        for (std::size_t i = merged[k].first; i < merged[k].second; ++i) {
            const auto& o = observations[order[i]];
            auto& s = sums[o.camera_id][k];
            s.first += o.pce;
            ++s.second;
        }
    }
    return assemble(sums, keys, anchor_bucket, TableScheme::LambdaR, anchor, true);
}

namespace {

template <typename Row, typename MakeRow>
std::vector<Row> parse_observations(std::string_view text, std::string_view expected_header, MakeRow&& make) {
    const auto rows = lines(text);
    if (rows.empty() || trim(rows.front()) != expected_header) {
        fail(ErrorKind::SchemaError, "observation header must be '" + std::string(expected_header) + "'");
    }
    std::vector<Row> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto fields = split(rows[i], ',');
        if (fields.size() != 3) {
            fail(ErrorKind::SchemaError, "observation line " + std::to_string(i + 1) + ": expected 3 fields");
        }
        double key = 0.0;
        double pce = 0.0;
        const auto id = trim(fields[0]);
        if (id.empty() || !parse_double(trim(fields[1]), key) || !parse_double(trim(fields[2]), pce) ||
            !std::isfinite(key) || !std::isfinite(pce)) {
            fail(ErrorKind::SchemaError, "observation line " + std::to_string(i + 1) + ": bad value");
        }
        out.push_back(make(std::string(id), key, pce, i + 1));
    }
    return out;
}

}  // namespace

std::vector<QpObservation> parse_qp_observations(std::string_view text) {
    return parse_observations<QpObservation>(
        text, "camera_id,qp,pce", [](std::string id, double key, double pce, std::size_t line) {
            if (key != std::floor(key) || key < kMinQp || key > kMaxQp) {
                fail(ErrorKind::RangeError, "observation line " + std::to_string(line) + ": qp outside [0, 51]");
            }
            return QpObservation{std::move(id), static_cast<int>(key), pce};
        });
}

std::vector<LambdaRateObservation> parse_lambda_rate_observations(std::string_view text) {
    return parse_observations<LambdaRateObservation>(
        text, "camera_id,lambda_rate,pce", [](std::string id, double key, double pce, std::size_t line) {
            if (key < 0.0) fail(ErrorKind::RangeError, "observation line " + std::to_string(line) + ": negative lambda*R");
            return LambdaRateObservation{std::move(id), key, pce};
        });
}

std::string serialize_qp_observations(std::span<const QpObservation> observations) {
    std::string out = "camera_id,qp,pce\n";
    for (const auto& o : observations) out += o.camera_id + "," + std::to_string(o.qp) + "," + format_double(o.pce) + "\n";
    return out;
}

std::string serialize_lambda_rate_observations(std::span<const LambdaRateObservation> observations) {
    std::string out = "camera_id,lambda_rate,pce\n";
    for (const auto& o : observations) {
        out += o.camera_id + "," + format_double(o.lambda_rate) + "," + format_double(o.pce) + "\n";
    }
    return out;
}

std::string format_calibration_report(const CalibrationResult& result) {
    std::string out = "#scheme=" + std::string(to_string(result.table.scheme)) +
                      " anchor_key=" + format_double(result.table.anchor_key) + "\n";
    out += "key,observations,cameras,mean_normalized,weight,camera:raw_pce:normalized...\n";
    for (const auto& row : result.rows) {
        out += format_double(row.key) + "," + std::to_string(row.observations) + "," +
               std::to_string(row.cameras.size()) + "," + format_double(row.mean_normalized) + "," +
               format_double(row.weight);
        for (std::size_t i = 0; i < row.cameras.size(); ++i) {
            out += "," + row.cameras[i] + ":" + format_double(row.raw_mean_pce[i]) + ":" +
                   format_double(row.normalized[i]);
        }
        out += "\n";
    }
    for (const auto& c : result.excluded_cameras) out += "#excluded " + c + "\n";
    return out;
}

}  // namespace blockprnu
