#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blockprnu/plane.hpp"
#include "blockprnu/trace.hpp"

namespace blockprnu {

// Per-frame mask construction from block metadata.
//
// Four block-level schemes plus the unweighted baseline:
//   SkipEliminate  binary, zero on SKIP footprints
//   QpAll          QP -> weight table on every block
//   QpNoSkip       QP -> weight table on coded blocks, zero on SKIP
//   LambdaR        interpolated lambda*R -> weight table, zero on SKIP
//
// Masks are blockwise constant; pixels outside the macroblock grid (cropped
// edges of frames that are not multiples of 16) are always 0.

enum class Scheme {
    Conventional,
    LoopFilterOnly,
    SkipEliminate,
    QpAll,
    QpNoSkip,
    LambdaR,
};

std::string_view to_string(Scheme scheme);
std::optional<Scheme> parse_scheme(std::string_view name);
inline constexpr Scheme kAllSchemes[] = {Scheme::Conventional, Scheme::LoopFilterOnly, Scheme::SkipEliminate,
                                         Scheme::QpAll,        Scheme::QpNoSkip,       Scheme::LambdaR};

enum class TableScheme { SkipEliminate, QpAll, QpNoSkip, LambdaR };

std::string_view to_string(TableScheme scheme);
std::optional<TableScheme> parse_table_scheme(std::string_view name);

struct WeightTable {
    TableScheme scheme = TableScheme::QpAll;
    std::vector<double> keys;
    std::vector<double> weights;
    double anchor_key = 15.0;

    // Throws ConfigError if keys are not strictly increasing, weights are
    // negative or non-finite, or the anchor weight differs from 1 by more than 1e-9.
    void validate() const;

    // Exact-key lookup (QP tables). Throws MissingKey.
    double weight_for_key(double key) const;

    // Piecewise-linear between keys, clamped outside [front, back].
    double interpolate(double key) const;

    bool is_qp_table() const noexcept { return scheme == TableScheme::QpAll || scheme == TableScheme::QpNoSkip; }
};

WeightTable parse_weight_table(std::string_view text);
std::string serialize_weight_table(const WeightTable& table);
WeightTable load_weight_table(const std::filesystem::path& path);
void save_weight_table(const std::filesystem::path& path, const WeightTable& table);

// Dense 0..51 QP table from sparse (qp, weight) samples by linear
// interpolation, flat extrapolation at the ends.
WeightTable densify_qp_table(TableScheme scheme, const std::vector<double>& qps, const std::vector<double>& weights,
                             double anchor_qp);

// Optional tail smoothing: pool-adjacent-violators fit that makes weights
// non-increasing in QP (or non-decreasing in lambda*R), then renormalized at the anchor.
WeightTable monotone_smooth(const WeightTable& table);

// A table of all-ones weights (reduces every scheme to the baseline).
WeightTable unit_table(TableScheme scheme);

struct SchemeConfig {
    Scheme scheme = Scheme::Conventional;
    std::optional<WeightTable> table;

    // LambdaR needs a lambda*R table, QP schemes need a QP table.
    void validate() const;
};

Mask mask_all_ones(const FrameBlockMap& blocks, int width, int height);
Mask mask_skip_eliminate(const FrameBlockMap& blocks, int width, int height);
Mask mask_qp(const FrameBlockMap& blocks, const WeightTable& table, bool exclude_skip, int width, int height);
Mask mask_lambda_rate(const FrameBlockMap& blocks, const WeightTable& table, int width, int height);

Mask build_mask(const SchemeConfig& config, const FrameBlockMap& blocks, int width, int height);

// Paints one value per macroblock; `weight_of` receives each block record.
template <typename WeightFn>
Mask paint_blocks(const FrameBlockMap& blocks, int width, int height, WeightFn&& weight_of) {
    Mask mask(width, height, 0.0);
    for (int by = 0; by < blocks.mb_rows(); ++by) {
        for (int bx = 0; bx < blocks.mb_cols(); ++bx) {
            const double w = weight_of(blocks.at(bx, by));
            const int x0 = bx * kMacroblockSize;
            const int y0 = by * kMacroblockSize;
            const int x1 = std::min(width, x0 + kMacroblockSize);
            const int y1 = std::min(height, y0 + kMacroblockSize);
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) mask(x, y) = w;
            }
        }
    }
    return mask;
}

}  // namespace blockprnu
