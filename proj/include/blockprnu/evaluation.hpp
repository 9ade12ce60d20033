#pragma once

#include <array>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blockprnu/matching.hpp"
#include "blockprnu/weighting.hpp"

namespace blockprnu {

// Bits-per-pixel group edges of the attribution table.
inline constexpr std::array<double, 4> kDefaultBppEdges{0.024, 0.052, 0.084, 0.172};

struct GridRow {
    std::string video_id;
    // Camera of the reference fingerprint the video was matched against.
    std::string camera_id;
    // Bitrate proxy the video was coded at.
    double bitrate = 0.0;
    double bits_per_pixel = 0.0;
    // False for a test/reference pair from different cameras.
    bool matching = true;
    // One cell per grid scheme, in ExperimentGrid::schemes order.
    std::vector<MatchCell> cells;
};

struct ExperimentGrid {
    std::vector<Scheme> schemes;
    std::vector<GridRow> rows;

    // Column of `scheme`; throws MissingKey.
    std::size_t column(Scheme scheme) const;
};

struct GridInput {
    std::string video_id;
    std::string camera_id;
    double bitrate = 0.0;
    double bits_per_pixel = 0.0;
    bool matching = true;
    // One test fingerprint per grid scheme.
    std::vector<Fingerprint> fingerprints;
    // Index into the reference list.
    std::size_t reference = 0;
};

ExperimentGrid run_grid(std::span<const GridInput> inputs, const std::vector<Scheme>& schemes,
                        std::span<const Fingerprint> references, const PceConfig& config = {}, int workers = 1);

struct SchemeSummary {
    Scheme scheme = Scheme::Conventional;
    std::size_t reports = 0;
    double mean_pce = 0.0;
    // mean_pce / mean_pce(Conventional); unset without a conventional column.
    std::optional<double> ratio_vs_conventional;
};

// Mean PCE per scheme over the matching rows accepted by `include_bitrate`
// (all rows when empty). Failed cells are skipped.
std::vector<SchemeSummary> summarize(const ExperimentGrid& grid, std::span<const double> include_bitrates = {});

struct ThresholdTable {
    std::vector<double> edges;
    std::vector<Scheme> schemes;
    std::vector<std::string> group_labels;
    // counts[group][scheme]
    std::vector<std::vector<std::size_t>> counts;
    std::vector<std::size_t> populations;
    std::vector<std::size_t> totals;
    std::size_t total_population = 0;
};

// Counts matching rows with pce > threshold per bits-per-pixel group and scheme.
ThresholdTable threshold_table(const ExperimentGrid& grid,
                               std::span<const double> edges = kDefaultBppEdges,
                               double threshold = kDefaultPceThreshold);

std::string format_threshold_table(const ThresholdTable& table);

struct RocCurve {
    // Ascending; the first is -infinity. Decision is pce > threshold.
    std::vector<double> thresholds;
    std::vector<double> tpr;
    std::vector<double> fpr;

    // Trapezoidal area; ties contribute half credit.
    double auc() const;
};

// Throws EmptyInput.
RocCurve roc(std::span<const double> matching, std::span<const double> non_matching);
std::string format_roc(const RocCurve& curve);

struct SbrGroup {
    std::string label;
    std::vector<double> sbr;
};

struct SbrSummary {
    std::string label;
    std::size_t count = 0;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

// Five-number summary per group (linear-interpolated quartiles). Throws EmptyInput.
std::vector<SbrSummary> sbr_summary(std::span<const SbrGroup> groups);
std::string format_sbr_summary(std::span<const SbrSummary> summary);

// Linear-interpolated quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

// Three significant digits.
std::string format_ratio(double ratio);

// Grid CSV: video_id,camera_id,bitrate,bpp,matching,scheme,pce per line.
std::string serialize_grid(const ExperimentGrid& grid);
ExperimentGrid parse_grid(std::string_view text);

std::string format_summary(std::span<const SchemeSummary> summary);

}  // namespace blockprnu
