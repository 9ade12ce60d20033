#include "blockprnu/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "blockprnu/parallel.hpp"
#include "blockprnu/text.hpp"

namespace blockprnu {

std::size_t ExperimentGrid::column(Scheme scheme) const {
    const auto it = std::find(schemes.begin(), schemes.end(), scheme);
    if (it == schemes.end()) fail(ErrorKind::MissingKey, "grid has no column " + std::string(to_string(scheme)));
    return static_cast<std::size_t>(it - schemes.begin());
}

ExperimentGrid run_grid(std::span<const GridInput> inputs, const std::vector<Scheme>& schemes,
                        std::span<const Fingerprint> references, const PceConfig& config, int workers) {
    ExperimentGrid grid;
    grid.schemes = schemes;
    grid.rows.resize(inputs.size());
    const std::size_t cols = schemes.size();
    for (std::size_t r = 0; r < inputs.size(); ++r) {
        const auto& in = inputs[r];
        if (in.fingerprints.size() != cols) {
            fail(ErrorKind::DimensionMismatch, in.video_id + ": expected one fingerprint per scheme");
        }
        if (in.reference >= references.size()) fail(ErrorKind::MissingKey, in.video_id + ": no such reference");
        auto& row = grid.rows[r];
        row.video_id = in.video_id;
        row.camera_id = in.camera_id;
        row.bitrate = in.bitrate;
        row.bits_per_pixel = in.bits_per_pixel;
        row.matching = in.matching;
        row.cells.resize(cols);
    }
    parallel_for(inputs.size() * cols, workers, [&](std::size_t i) {
        const auto& in = inputs[i / cols];
        auto& cell = grid.rows[i / cols].cells[i % cols];
        try {
            cell.report = pce(in.fingerprints[i % cols], references[in.reference], config);
        } catch (const Error& e) {
            cell.error = e.kind();
            cell.message = e.what();
        }
    });
    return grid;
}

std::vector<SchemeSummary> summarize(const ExperimentGrid& grid, std::span<const double> include_bitrates) {
    std::vector<SchemeSummary> out;
    for (std::size_t c = 0; c < grid.schemes.size(); ++c) {
        SchemeSummary s;
        s.scheme = grid.schemes[c];
        double sum = 0.0;
        for (const auto& row : grid.rows) {
            if (!row.matching || !row.cells[c].ok()) continue;
            if (!include_bitrates.empty() &&
                std::find(include_bitrates.begin(), include_bitrates.end(), row.bitrate) == include_bitrates.end()) {
                continue;
            }
            sum += row.cells[c].report->pce;
            ++s.reports;
        }
        s.mean_pce = s.reports > 0 ? sum / static_cast<double>(s.reports) : 0.0;
        out.push_back(s);
    }
    const auto conv = std::find_if(out.begin(), out.end(), [](const SchemeSummary& s) {
        return s.scheme == Scheme::Conventional;
    });
    if (conv != out.end() && conv->reports > 0 && conv->mean_pce != 0.0) {
        const double base = conv->mean_pce;
        for (auto& s : out) s.ratio_vs_conventional = s.mean_pce / base;
    }
    return out;
}

std::string format_summary(std::span<const SchemeSummary> summary) {
    std::string out = "scheme,reports,mean_pce,ratio_vs_conventional\n";
    for (const auto& s : summary) {
        out += std::string(to_string(s.scheme)) + "," + std::to_string(s.reports) + "," +
               format_significant(s.mean_pce, 6) + "," +
               (s.ratio_vs_conventional ? format_ratio(*s.ratio_vs_conventional) : std::string("-")) + "\n";
    }
    return out;
}

// =============================================================================
// Attribution table
// =============================================================================

ThresholdTable threshold_table(const ExperimentGrid& grid, std::span<const double> edges, double threshold) {
    if (!std::is_sorted(edges.begin(), edges.end())) fail(ErrorKind::ConfigError, "bpp edges must be ascending");
    ThresholdTable t;
    t.edges.assign(edges.begin(), edges.end());
    t.schemes = grid.schemes;
    for (const double e : edges) t.group_labels.push_back("<" + format_double(e));
    t.group_labels.push_back(edges.empty() ? std::string("all") : ">" + format_double(edges.back()));
    const std::size_t groups = t.group_labels.size();
    t.counts.assign(groups, std::vector<std::size_t>(grid.schemes.size(), 0));
    t.populations.assign(groups, 0);
    t.totals.assign(grid.schemes.size(), 0);
    for (const auto& row : grid.rows) {
        if (!row.matching) continue;
        const auto g = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), row.bits_per_pixel) -
                                                edges.begin());
        ++t.populations[g];
        ++t.total_population;
        for (std::size_t c = 0; c < grid.schemes.size(); ++c) {
            const auto& cell = row.cells[c];
            if (cell.ok() && cell.report->pce > threshold) {
                ++t.counts[g][c];
                ++t.totals[c];
            }
        }
    }
    return t;
}

std::string format_threshold_table(const ThresholdTable& table) {
    std::string out = "bpp";
    for (const auto s : table.schemes) out += "," + std::string(to_string(s));
    out += ",population\n";
    for (std::size_t g = 0; g < table.group_labels.size(); ++g) {
        out += table.group_labels[g];
        for (const auto c : table.counts[g]) out += "," + std::to_string(c);
        out += "," + std::to_string(table.populations[g]) + "\n";
    }
    out += "total";
    for (const auto c : table.totals) out += "," + std::to_string(c);
    out += "," + std::to_string(table.total_population) + "\n";
    return out;
}

// =============================================================================
// ROC
// =============================================================================

RocCurve roc(std::span<const double> matching, std::span<const double> non_matching) {
    if (matching.empty() || non_matching.empty()) fail(ErrorKind::EmptyInput, "ROC needs both populations");
    std::vector<double> values(matching.begin(), matching.end());
    values.insert(values.end(), non_matching.begin(), non_matching.end());
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());

    std::vector<double> pos(matching.begin(), matching.end());
    std::vector<double> neg(non_matching.begin(), non_matching.end());
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    const auto above = [](const std::vector<double>& v, double t) {
        return static_cast<double>(v.end() - std::upper_bound(v.begin(), v.end(), t)) / static_cast<double>(v.size());
    };

    RocCurve curve;
    curve.thresholds.push_back(-std::numeric_limits<double>::infinity());
    curve.tpr.push_back(1.0);
    curve.fpr.push_back(1.0);
    for (const double t : values) {
        curve.thresholds.push_back(t);
        curve.tpr.push_back(above(pos, t));
        curve.fpr.push_back(above(neg, t));
    }
    return curve;
}

double RocCurve::auc() const {
    double area = 0.0;
    for (std::size_t i = 1; i < fpr.size(); ++i) {
        area += (fpr[i - 1] - fpr[i]) * (tpr[i - 1] + tpr[i]) / 2.0;
    }
    return area;
}

std::string format_roc(const RocCurve& curve) {
    std::string out = "threshold,fpr,tpr\n";
    for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
        out += (std::isinf(curve.thresholds[i]) ? std::string("-inf") : format_double(curve.thresholds[i])) + "," +
               format_double(curve.fpr[i]) + "," + format_double(curve.tpr[i]) + "\n";
    }
    return out;
}

// =============================================================================
// SBR
// =============================================================================

double quantile(std::vector<double> values, double q) {
    if (values.empty()) fail(ErrorKind::EmptyInput, "quantile of nothing");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<SbrSummary> sbr_summary(std::span<const SbrGroup> groups) {
    if (groups.empty()) fail(ErrorKind::EmptyInput, "no SBR groups");
    std::vector<SbrSummary> out;
    for (const auto& g : groups) {
        if (g.sbr.empty()) fail(ErrorKind::EmptyInput, "SBR group " + g.label + " is empty");
        SbrSummary s;
        s.label = g.label;
        s.count = g.sbr.size();
        s.min = quantile(g.sbr, 0.0);
        s.q1 = quantile(g.sbr, 0.25);
        s.median = quantile(g.sbr, 0.5);
        s.q3 = quantile(g.sbr, 0.75);
        s.max = quantile(g.sbr, 1.0);
        out.push_back(s);
    }
    return out;
}

std::string format_sbr_summary(std::span<const SbrSummary> summary) {
    std::string out = "group,count,min,q1,median,q3,max\n";
    for (const auto& s : summary) {
        out += s.label + "," + std::to_string(s.count) + "," + format_double(s.min) + "," + format_double(s.q1) + "," +
               format_double(s.median) + "," + format_double(s.q3) + "," + format_double(s.max) + "\n";
    }
    return out;
}

std::string format_ratio(double ratio) { return format_significant(ratio, 3); }

// =============================================================================
// Grid files
// =============================================================================

std::string serialize_grid(const ExperimentGrid& grid) {
    std::string out = "video_id,camera_id,bitrate,bpp,matching,scheme,pce\n";
    for (const auto& row : grid.rows) {
        for (std::size_t c = 0; c < grid.schemes.size(); ++c) {
            const auto& cell = row.cells[c];
            out += row.video_id + "," + row.camera_id + "," + format_double(row.bitrate) + "," +
                   format_double(row.bits_per_pixel) + "," + (row.matching ? "1" : "0") + "," +
                   std::string(to_string(grid.schemes[c])) + "," +
                   (cell.ok() ? format_double(cell.report->pce)
                              : std::string(to_string(cell.error.value_or(ErrorKind::Unsupported)))) +
                   "\n";
        }
    }
    return out;
}

ExperimentGrid parse_grid(std::string_view text) {
    const auto all = lines(text);
    if (all.empty()) fail(ErrorKind::SchemaError, "empty grid file");
    if (trim(all.front()) != "video_id,camera_id,bitrate,bpp,matching,scheme,pce") {
        fail(ErrorKind::SchemaError, "grid header must be video_id,camera_id,bitrate,bpp,matching,scheme,pce");
    }
    ExperimentGrid grid;
    std::map<std::string, std::size_t> row_of;
    std::vector<std::map<std::size_t, MatchCell>> cells;
    for (std::size_t l = 1; l < all.size(); ++l) {
        const auto where = "grid line " + std::to_string(l + 1);
        const auto f = split(all[l], ',');
        if (f.size() != 7) fail(ErrorKind::SchemaError, where + ": expected 7 fields");
        GridRow row;
        row.video_id = std::string(trim(f[0]));
        row.camera_id = std::string(trim(f[1]));
        long long matching = 0;
        if (!parse_double(f[2], row.bitrate) || !parse_double(f[3], row.bits_per_pixel) ||
            !parse_int(f[4], matching) || (matching != 0 && matching != 1)) {
            fail(ErrorKind::SchemaError, where + ": malformed numeric field");
        }
        row.matching = matching == 1;
        const auto scheme = parse_scheme(trim(f[5]));
        if (!scheme) fail(ErrorKind::SchemaError, where + ": unknown scheme " + std::string(trim(f[5])));
        auto col_it = std::find(grid.schemes.begin(), grid.schemes.end(), *scheme);
        if (col_it == grid.schemes.end()) {
            grid.schemes.push_back(*scheme);
            col_it = grid.schemes.end() - 1;
        }
        const auto col = static_cast<std::size_t>(col_it - grid.schemes.begin());

        MatchCell cell;
        double value = 0.0;
        if (parse_double(f[6], value)) {
            if (!std::isfinite(value)) fail(ErrorKind::SchemaError, where + ": non-finite pce");
            MatchReport r;
            r.pce = value;
            r.decision = value > r.threshold;
            cell.report = r;
        } else {
            const auto kind = parse_error_kind(trim(f[6]));
            if (!kind) fail(ErrorKind::SchemaError, where + ": pce is neither a number nor an error name");
            cell.error = *kind;
            cell.message = std::string(trim(f[6]));
        }

        const std::string key = row.video_id + "\x1f" + row.camera_id;
        auto [it, inserted] = row_of.try_emplace(key, grid.rows.size());
        if (inserted) {
            grid.rows.push_back(row);
            cells.emplace_back();
        } else {
            const auto& prev = grid.rows[it->second];
            if (prev.bitrate != row.bitrate || prev.bits_per_pixel != row.bits_per_pixel ||
                prev.matching != row.matching) {
                fail(ErrorKind::SchemaError, where + ": inconsistent metadata for video " + row.video_id);
            }
        }
        if (!cells[it->second].emplace(col, cell).second) {
            fail(ErrorKind::SchemaError, where + ": duplicate cell for video " + row.video_id);
        }
    }
    for (std::size_t r = 0; r < grid.rows.size(); ++r) {
        if (cells[r].size() != grid.schemes.size()) {
            fail(ErrorKind::CoverageGap, "video " + grid.rows[r].video_id + " lacks some scheme cells");
        }
        for (std::size_t c = 0; c < grid.schemes.size(); ++c) grid.rows[r].cells.push_back(cells[r].at(c));
    }
    return grid;
}

}  // namespace blockprnu
