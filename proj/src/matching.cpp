#include "blockprnu/matching.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>

#include "blockprnu/parallel.hpp"
#include "blockprnu/text.hpp"

namespace blockprnu {

namespace {

// FFTW planning is not thread-safe; execution on plan-owned buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

template <typename T>
struct FftwBuffer {
    explicit FftwBuffer(std::size_t n) : ptr(static_cast<T*>(fftw_malloc(sizeof(T) * n))) {
        if (!ptr) throw std::bad_alloc();
    }
    ~FftwBuffer() { fftw_free(ptr); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;
    T* ptr;
};

struct Plan {
    explicit Plan(fftw_plan p) : plan(p) {}
    ~Plan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    fftw_plan plan;
};

double energy(const Plane<double>& p) {
    double e = 0.0;
    for (const double v : p.values()) e += v * v;
    return e;
}

int wrap(int d, int n) { return d > n / 2 ? d - n : d; }

}  // namespace

Plane<double> cross_correlation(const Plane<double>& a, const Plane<double>& b) {
    require_same_shape(a, b, "cross-correlation");
    const int w = a.width();
    const int h = a.height();
    if (w == 0 || h == 0) fail(ErrorKind::DimensionMismatch, "cross-correlation of empty planes");
    const std::size_t n = a.size();
    const std::size_t nc = static_cast<std::size_t>(h) * static_cast<std::size_t>(w / 2 + 1);

    FftwBuffer<double> real(n);
    FftwBuffer<fftw_complex> fa(nc);
    FftwBuffer<fftw_complex> fb(nc);
    fftw_plan fwd_raw = nullptr;
    fftw_plan inv_raw = nullptr;
    {
        std::lock_guard lock(planner_mutex());
        fwd_raw = fftw_plan_dft_r2c_2d(h, w, real.ptr, fa.ptr, FFTW_ESTIMATE);
        inv_raw = fftw_plan_dft_c2r_2d(h, w, fa.ptr, real.ptr, FFTW_ESTIMATE);
    }
    Plan fwd(fwd_raw);
    Plan inv(inv_raw);

    std::copy(a.values().begin(), a.values().end(), real.ptr);
    fftw_execute_dft_r2c(fwd.plan, real.ptr, fa.ptr);
    std::copy(b.values().begin(), b.values().end(), real.ptr);
    fftw_execute_dft_r2c(fwd.plan, real.ptr, fb.ptr);

    for (std::size_t i = 0; i < nc; ++i) {
        const std::complex<double> za(fa.ptr[i][0], fa.ptr[i][1]);
        const std::complex<double> zb(fb.ptr[i][0], fb.ptr[i][1]);
        const auto z = std::conj(za) * zb;
        fa.ptr[i][0] = z.real();
        fa.ptr[i][1] = z.imag();
    }
    fftw_execute_dft_c2r(inv.plan, fa.ptr, real.ptr);

    Plane<double> c(w, h);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = real.ptr[i] * scale;
    return c;
}

MatchReport pce(const Plane<double>& test, const Plane<double>& reference, const PceConfig& config) {
    require_same_shape(test, reference, "pce");
    if (config.exclusion_half_width < 0) fail(ErrorKind::ConfigError, "negative exclusion half width");
    const int w = test.width();
    const int h = test.height();
    const int side = 2 * config.exclusion_half_width + 1;
    if (side >= w || side >= h) fail(ErrorKind::ConfigError, "exclusion neighborhood covers the plane");
    if (!(energy(test) > 0.0) || !(energy(reference) > 0.0)) {
        fail(ErrorKind::DegenerateFingerprint, "fingerprint has zero energy");
    }

    const auto c = cross_correlation(test, reference);
    int px = 0;
    int py = 0;
    if (config.search_window == SearchWindow::FullPlane) {
        double best = c(0, 0);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (c(x, y) > best) {
                    best = c(x, y);
                    px = x;
                    py = y;
                }
            }
        }
    }
    const double peak = c(px, py);

    const int r = config.exclusion_half_width;
    double sum = 0.0;
    std::size_t count = 0;
    for (int y = 0; y < h; ++y) {
        int dy = std::abs(y - py);
        dy = std::min(dy, h - dy);
        for (int x = 0; x < w; ++x) {
            int dx = std::abs(x - px);
            dx = std::min(dx, w - dx);
            if (dx <= r && dy <= r) continue;
            sum += c(x, y) * c(x, y);
            ++count;
        }
    }
    const double mean = sum / static_cast<double>(count);
    if (!(mean > 0.0)) fail(ErrorKind::DegenerateFingerprint, "zero correlation energy outside the peak");

    MatchReport report;
    report.correlation_peak = peak;
    report.pce = std::copysign(peak * peak, peak) / mean;
    report.dx = wrap(px, w);
    report.dy = wrap(py, h);
    report.threshold = config.threshold;
    report.decision = report.pce > config.threshold;
    return report;
}

MatchReport pce(const Fingerprint& test, const Fingerprint& reference, const PceConfig& config) {
    return pce(test.k_values, reference.k_values, config);
}

std::vector<std::vector<MatchCell>> batch_match(const std::vector<Fingerprint>& tests,
                                                const std::vector<Fingerprint>& references, const PceConfig& config,
                                                int workers) {
    if (tests.empty() || references.empty()) fail(ErrorKind::EmptyInput, "batch match needs tests and references");
    std::vector<std::vector<MatchCell>> out(tests.size(), std::vector<MatchCell>(references.size()));
    const std::size_t cols = references.size();
    parallel_for(tests.size() * cols, workers, [&](std::size_t i) {
        auto& cell = out[i / cols][i % cols];
        try {
            cell.report = pce(tests[i / cols], references[i % cols], config);
        } catch (const Error& e) {
            cell.error = e.kind();
            cell.message = e.what();
        }
    });
    return out;
}

std::string format_match_report_line(const std::string& test_id, const std::string& reference_id,
                                     const MatchCell& cell) {
    std::string line = test_id + "," + reference_id + ",";
    if (!cell.ok()) {
        line += std::string(to_string(cell.error.value_or(ErrorKind::Unsupported)));
        line += ",,,";
        return line;
    }
    const auto& r = *cell.report;
    line += format_double(r.pce) + "," + std::to_string(r.dx) + "," + std::to_string(r.dy) + "," +
            (r.decision ? "1" : "0");
    return line;
}

}  // namespace blockprnu
