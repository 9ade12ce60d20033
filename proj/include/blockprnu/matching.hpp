#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blockprnu/error.hpp"
#include "blockprnu/prnu.hpp"

namespace blockprnu {

inline constexpr double kDefaultPceThreshold = 60.0;

enum class SearchWindow { FullPlane, ZeroShift };

struct PceConfig {
    // 5 gives the 11x11 exclusion neighborhood around the peak.
    int exclusion_half_width = 5;
    SearchWindow search_window = SearchWindow::FullPlane;
    double threshold = kDefaultPceThreshold;
};

struct MatchReport {
    double pce = 0.0;
    // Cyclic shift (dx, dy) of the reference that best aligns it with the
    // test, wrapped into (-W/2, W/2] x (-H/2, H/2].
    int dx = 0;
    int dy = 0;
    double correlation_peak = 0.0;
    bool decision = false;
    double threshold = kDefaultPceThreshold;
};

// Signed peak-to-correlation energy over all cyclic shifts:
//   pce = sign(c_peak) * c_peak^2 / mean_{s outside exclusion}(c_s^2)
// Throws DimensionMismatch, DegenerateFingerprint.
MatchReport pce(const Fingerprint& test, const Fingerprint& reference, const PceConfig& config = {});
MatchReport pce(const Plane<double>& test, const Plane<double>& reference, const PceConfig& config = {});

// Cyclic cross-correlation c(dx, dy) = sum_p a[p] * b[p + (dx, dy)], computed by FFT.
Plane<double> cross_correlation(const Plane<double>& a, const Plane<double>& b);

struct MatchCell {
    std::optional<MatchReport> report;
    std::optional<ErrorKind> error;
    std::string message;

    bool ok() const noexcept { return report.has_value(); }
};

// Row-major [test][reference] matrix; per-pair failures are stored, not thrown.
std::vector<std::vector<MatchCell>> batch_match(const std::vector<Fingerprint>& tests,
                                                const std::vector<Fingerprint>& references,
                                                const PceConfig& config = {}, int workers = 1);

// "test_id,reference_id,pce,dx,dy,decision" lines; failed cells carry the error name in the pce column.
std::string format_match_report_line(const std::string& test_id, const std::string& reference_id,
                                     const MatchCell& cell);

}  // namespace blockprnu
