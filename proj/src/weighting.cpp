#include "blockprnu/weighting.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "blockprnu/text.hpp"
#include "blockprnu/trace_io.hpp"

namespace blockprnu {

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::Conventional: return "conventional";
        case Scheme::LoopFilterOnly: return "loop_filter_only";
        case Scheme::SkipEliminate: return "skip_eliminate";
        case Scheme::QpAll: return "qp_all";
        case Scheme::QpNoSkip: return "qp_no_skip";
        case Scheme::LambdaR: return "lambda_r";
    }
    return "?";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
    for (const auto s : kAllSchemes) {
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

std::string_view to_string(TableScheme scheme) {
    switch (scheme) {
        case TableScheme::SkipEliminate: return "skip_eliminate";
        case TableScheme::QpAll: return "qp_all";
        case TableScheme::QpNoSkip: return "qp_no_skip";
        case TableScheme::LambdaR: return "lambda_r";
    }
    return "?";
}

std::optional<TableScheme> parse_table_scheme(std::string_view name) {
    for (const auto s : {TableScheme::SkipEliminate, TableScheme::QpAll, TableScheme::QpNoSkip, TableScheme::LambdaR}) {
        if (to_string(s) == name) return s;
    }
    return std::nullopt;
}

// =============================================================================
// WeightTable
// =============================================================================

void WeightTable::validate() const {
    if (keys.empty() || keys.size() != weights.size()) {
        fail(ErrorKind::ConfigError, "weight table needs matching, non-empty key and weight columns");
    }
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (!std::isfinite(keys[i])) fail(ErrorKind::ConfigError, "non-finite table key");
        if (i > 0 && !(keys[i] > keys[i - 1])) fail(ErrorKind::ConfigError, "table keys not strictly increasing");
        if (!std::isfinite(weights[i]) || weights[i] < 0.0) fail(ErrorKind::ConfigError, "invalid table weight");
    }
    if (std::abs(interpolate(anchor_key) - 1.0) > 1e-9) {
        fail(ErrorKind::ConfigError, "weight at anchor key is not 1");
    }
}

double WeightTable::weight_for_key(double key) const {
    const auto it = std::lower_bound(keys.begin(), keys.end(), key);
    if (it == keys.end() || *it != key) {
        fail(ErrorKind::MissingKey, "no weight for key " + std::to_string(key));
    }
    return weights[static_cast<std::size_t>(it - keys.begin())];
}

double WeightTable::interpolate(double key) const {
    if (keys.empty()) fail(ErrorKind::ConfigError, "empty weight table");
    if (key <= keys.front()) return weights.front();
    if (key >= keys.back()) return weights.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(keys.begin(), keys.end(), key) - keys.begin());
    const std::size_t lo = hi - 1;
    const double t = (key - keys[lo]) / (keys[hi] - keys[lo]);
    return weights[lo] + t * (weights[hi] - weights[lo]);
}


WeightTable parse_weight_table(std::string_view text) {
    WeightTable table;
    bool have_header = false;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const std::string where = "weight table line " + std::to_string(line_no);
        if (!have_header) {
            if (line.front() != '#') fail(ErrorKind::SchemaError, where + ": missing header");
            line.remove_prefix(1);
            bool seen_scheme = false, seen_anchor = false;
            std::size_t p = 0;
            while (p < line.size()) {
                auto sp = line.find(' ', p);
                auto tok = line.substr(p, sp == std::string_view::npos ? std::string_view::npos : sp - p);
                p = sp == std::string_view::npos ? line.size() : sp + 1;
                if (tok.empty()) continue;
                const auto eq = tok.find('=');
                if (eq == std::string_view::npos) fail(ErrorKind::SchemaError, where + ": bad header token");
                const auto key = tok.substr(0, eq);
                const auto value = tok.substr(eq + 1);
                if (key == "scheme") {
                    const auto s = parse_table_scheme(value);
                    if (!s) fail(ErrorKind::SchemaError, where + ": unknown scheme " + std::string(value));
                    table.scheme = *s;
                    seen_scheme = true;
                } else if (key == "anchor_key") {
                    if (!parse_double(value, table.anchor_key)) fail(ErrorKind::SchemaError, where + ": bad anchor_key");
                    seen_anchor = true;
                } else {
                    fail(ErrorKind::SchemaError, where + ": unknown header key " + std::string(key));
                }
            }
            if (!seen_scheme || !seen_anchor) fail(ErrorKind::SchemaError, where + ": header needs scheme and anchor_key");
            have_header = true;
            continue;
        }
        const auto comma = line.find(',');
        double k = 0.0, w = 0.0;
        if (comma == std::string_view::npos || !parse_double(line.substr(0, comma), k) ||
            !parse_double(line.substr(comma + 1), w)) {
            fail(ErrorKind::SchemaError, where + ": expected key,weight");
        }
        table.keys.push_back(k);
        table.weights.push_back(w);
    }
    if (!have_header) fail(ErrorKind::SchemaError, "empty weight table");
    table.validate();
    return table;
}

std::string serialize_weight_table(const WeightTable& table) {
    std::string out = "#scheme=" + std::string(to_string(table.scheme)) + " anchor_key=" +
                      format_double(table.anchor_key) + "\n";
    for (std::size_t i = 0; i < table.keys.size(); ++i) {
        out += format_double(table.keys[i]);
        out += ',';
        out += format_double(table.weights[i]);
        out += '\n';
    }
    return out;
}

WeightTable load_weight_table(const std::filesystem::path& path) { return parse_weight_table(read_text_file(path)); }

void save_weight_table(const std::filesystem::path& path, const WeightTable& table) {
    write_text_file(path, serialize_weight_table(table));
}

WeightTable densify_qp_table(TableScheme scheme, const std::vector<double>& qps, const std::vector<double>& weights,
                             double anchor_qp) {
    WeightTable sparse;
    sparse.scheme = scheme;
    sparse.keys = qps;
    sparse.weights = weights;
    sparse.anchor_key = anchor_qp;
    WeightTable dense;
    dense.scheme = scheme;
    dense.anchor_key = anchor_qp;
    for (int qp = kMinQp; qp <= kMaxQp; ++qp) {
        dense.keys.push_back(qp);
        dense.weights.push_back(sparse.interpolate(qp));
    }
    return dense;
}

WeightTable monotone_smooth(const WeightTable& table) {
    // Non-increasing in QP, non-decreasing in lambda*R.
    const bool decreasing = table.is_qp_table();
    std::vector<double> y = table.weights;
    if (decreasing) std::reverse(y.begin(), y.end());
    // PAV for a non-decreasing fit.
    std::vector<double> level;
    std::vector<std::size_t> count;
    for (const double v : y) {
        level.push_back(v);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            const auto n1 = static_cast<double>(count[count.size() - 2]);
            const auto n2 = static_cast<double>(count.back());
            const double merged = (level[level.size() - 2] * n1 + level.back() * n2) / (n1 + n2);
            const std::size_t c = count[count.size() - 2] + count.back();
            level.pop_back();
            count.pop_back();
            level.back() = merged;
            count.back() = c;
        }
    }
    std::vector<double> fit;
    for (std::size_t i = 0; i < level.size(); ++i) fit.insert(fit.end(), count[i], level[i]);
    if (decreasing) std::reverse(fit.begin(), fit.end());

    WeightTable out = table;
    out.weights = fit;
    const double anchor = out.interpolate(out.anchor_key);
    if (anchor <= 0.0) fail(ErrorKind::ConfigError, "smoothed table has zero weight at anchor");
    for (auto& w : out.weights) w /= anchor;
    // Anchor exactly 1 when it is a key.
    const auto it = std::lower_bound(out.keys.begin(), out.keys.end(), out.anchor_key);
    if (it != out.keys.end() && *it == out.anchor_key) out.weights[static_cast<std::size_t>(it - out.keys.begin())] = 1.0;
    return out;
}

WeightTable unit_table(TableScheme scheme) {
    WeightTable t;
    t.scheme = scheme;
    if (scheme == TableScheme::LambdaR) {
        t.anchor_key = 60.0;
        t.keys = {0.0, 60.0};
        t.weights = {1.0, 1.0};
        return t;
    }
    t.anchor_key = 15.0;
    for (int qp = kMinQp; qp <= kMaxQp; ++qp) {
        t.keys.push_back(qp);
        t.weights.push_back(1.0);
    }
    return t;
}

// =============================================================================
// Masks
// =============================================================================

void SchemeConfig::validate() const {
    switch (scheme) {
        case Scheme::Conventional:
        case Scheme::LoopFilterOnly:
        case Scheme::SkipEliminate:
            return;
        case Scheme::QpAll:
        case Scheme::QpNoSkip:
            if (!table || !table->is_qp_table()) {
                fail(ErrorKind::Usage, std::string(to_string(scheme)) + " requires a QP weight table");
            }
            return;
        case Scheme::LambdaR:
            if (!table || table->scheme != TableScheme::LambdaR) {
                fail(ErrorKind::Usage, "lambda_r requires a lambda*R weight table");
            }
            return;
    }
}

Mask mask_all_ones(const FrameBlockMap& blocks, int width, int height) {
    return paint_blocks(blocks, width, height, [](const BlockRecord&) { return 1.0; });
}

Mask mask_skip_eliminate(const FrameBlockMap& blocks, int width, int height) {
    return paint_blocks(blocks, width, height, [](const BlockRecord& b) { return b.is_skip() ? 0.0 : 1.0; });
}

Mask mask_qp(const FrameBlockMap& blocks, const WeightTable& table, bool exclude_skip, int width, int height) {
    return paint_blocks(blocks, width, height, [&](const BlockRecord& b) {
        if (exclude_skip && b.is_skip()) return 0.0;
        return table.weight_for_key(b.qp);
    });
}

Mask mask_lambda_rate(const FrameBlockMap& blocks, const WeightTable& table, int width, int height) {
    return paint_blocks(blocks, width, height, [&](const BlockRecord& b) {
        if (b.is_skip()) return 0.0;
        return table.interpolate(lambda_rate(b));
    });
}

Mask build_mask(const SchemeConfig& config, const FrameBlockMap& blocks, int width, int height) {
    config.validate();
    switch (config.scheme) {
        case Scheme::Conventional:
        case Scheme::LoopFilterOnly:
            return mask_all_ones(blocks, width, height);
        case Scheme::SkipEliminate:
            return mask_skip_eliminate(blocks, width, height);
        case Scheme::QpAll:
            return mask_qp(blocks, *config.table, false, width, height);
        case Scheme::QpNoSkip:
            return mask_qp(blocks, *config.table, true, width, height);
        case Scheme::LambdaR:
            return mask_lambda_rate(blocks, *config.table, width, height);
    }
    return mask_all_ones(blocks, width, height);
}

}  // namespace blockprnu
