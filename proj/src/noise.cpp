#include "blockprnu/noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace blockprnu {

namespace {

// Daubechies, 4 vanishing moments (8 taps), orthonormal low-pass.
constexpr std::array<double, 8> kLow = {
    0.23037781330885523,  0.7148465705525415,   0.6308807679295904,   -0.02798376941698385,
    -0.18703481171888114, 0.030841381835986965, 0.032883011666982945, -0.010597401784997278,
};

constexpr std::array<double, 8> make_high() {
    std::array<double, 8> g{};
    for (std::size_t n = 0; n < 8; ++n) g[n] = ((n % 2 == 0) ? 1.0 : -1.0) * kLow[7 - n];
    return g;
}
constexpr std::array<double, 8> kHigh = make_high();

// One periodized analysis step over `n` samples with the given stride.
void analyze(const double* in, double* out, int n, std::vector<double>& tmp) {
    const int half = n / 2;
    tmp.assign(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < half; ++k) {
        double a = 0.0;
        double d = 0.0;
        for (int t = 0; t < 8; ++t) {
            const double x = in[(2 * k + t) % n];
            a += kLow[static_cast<std::size_t>(t)] * x;
            d += kHigh[static_cast<std::size_t>(t)] * x;
        }
        tmp[static_cast<std::size_t>(k)] = a;
        tmp[static_cast<std::size_t>(half + k)] = d;
    }
    std::copy(tmp.begin(), tmp.end(), out);
}

void synthesize(const double* in, double* out, int n, std::vector<double>& tmp) {
    const int half = n / 2;
    tmp.assign(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < half; ++k) {
        const double a = in[k];
        const double d = in[half + k];
        for (int t = 0; t < 8; ++t) {
            tmp[static_cast<std::size_t>((2 * k + t) % n)] +=
                kLow[static_cast<std::size_t>(t)] * a + kHigh[static_cast<std::size_t>(t)] * d;
        }
    }
    std::copy(tmp.begin(), tmp.end(), out);
}

// Transforms the top-left w x h region in place (rows then columns).
void transform_region(Plane<double>& p, int w, int h, bool forward) {
    std::vector<double> line;
    std::vector<double> tmp;
    const auto rows = [&] {
        line.resize(static_cast<std::size_t>(w));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) line[static_cast<std::size_t>(x)] = p(x, y);
            if (forward) analyze(line.data(), line.data(), w, tmp);
            else synthesize(line.data(), line.data(), w, tmp);
            for (int x = 0; x < w; ++x) p(x, y) = line[static_cast<std::size_t>(x)];
        }
    };
    const auto cols = [&] {
        line.resize(static_cast<std::size_t>(h));
        for (int x = 0; x < w; ++x) {
            for (int y = 0; y < h; ++y) line[static_cast<std::size_t>(y)] = p(x, y);
            if (forward) analyze(line.data(), line.data(), h, tmp);
            else synthesize(line.data(), line.data(), h, tmp);
            for (int y = 0; y < h; ++y) p(x, y) = line[static_cast<std::size_t>(y)];
        }
    };
    if (forward) {
        rows();
        cols();
    } else {
        cols();
        rows();
    }
}

// Box mean of squared values over a (2r+1)^2 window clipped to the region.
void local_energy(const Plane<double>& c, int x0, int y0, int w, int h, int radius, std::vector<double>& integral,
                  std::vector<double>& out) {
    const int stride = w + 1;
    integral.assign(static_cast<std::size_t>(stride * (h + 1)), 0.0);
    for (int y = 0; y < h; ++y) {
        double run = 0.0;
        for (int x = 0; x < w; ++x) {
            const double v = c(x0 + x, y0 + y);
            run += v * v;
            integral[static_cast<std::size_t>((y + 1) * stride + x + 1)] =
                integral[static_cast<std::size_t>(y * stride + x + 1)] + run;
        }
    }
    out.resize(static_cast<std::size_t>(w * h));
    for (int y = 0; y < h; ++y) {
        const int ya = std::max(0, y - radius);
        const int yb = std::min(h, y + radius + 1);
        for (int x = 0; x < w; ++x) {
            const int xa = std::max(0, x - radius);
            const int xb = std::min(w, x + radius + 1);
            const double sum = integral[static_cast<std::size_t>(yb * stride + xb)] -
                               integral[static_cast<std::size_t>(ya * stride + xb)] -
                               integral[static_cast<std::size_t>(yb * stride + xa)] +
                               integral[static_cast<std::size_t>(ya * stride + xa)];
            out[static_cast<std::size_t>(y * w + x)] = sum / static_cast<double>((yb - ya) * (xb - xa));
        }
    }
}

void wiener_subband(Plane<double>& c, int x0, int y0, int w, int h, double sigma2) {
    std::vector<double> integral;
    std::vector<double> energy;
    std::vector<double> variance(static_cast<std::size_t>(w * h), std::numeric_limits<double>::infinity());
    for (const int radius : {1, 2, 3, 4}) {
        local_energy(c, x0, y0, w, h, radius, integral, energy);
        for (std::size_t i = 0; i < variance.size(); ++i) {
            variance[i] = std::min(variance[i], std::max(0.0, energy[i] - sigma2));
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = variance[static_cast<std::size_t>(y * w + x)];
            c(x0 + x, y0 + y) *= v / (v + sigma2);
        }
    }
}

Plane<double> spatial_wiener(const Plane<double>& img, double sigma2) {
    const int w = img.width();
    const int h = img.height();
    Plane<double> out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sum = 0.0;
            double sq = 0.0;
            int n = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = x + dx;
                    const int yy = y + dy;
                    if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
                    const double v = img(xx, yy);
                    sum += v;
                    sq += v * v;
                    ++n;
                }
            }
            const double mean = sum / n;
            const double var = std::max(0.0, sq / n - mean * mean);
            const double gain = std::max(var - sigma2, 0.0) / std::max(var, sigma2);
            out(x, y) = mean + gain * (img(x, y) - mean);
        }
    }
    return out;
}

}  // namespace

int usable_wavelet_levels(int width, int height, int requested) {
    int levels = 0;
    int w = width;
    int h = height;
    while (levels < requested && w % 2 == 0 && h % 2 == 0 && w >= 2 && h >= 2) {
        w /= 2;
        h /= 2;
        ++levels;
    }
    return levels;
}

Plane<double> wavelet_forward(const Plane<double>& image, int levels) {
    Plane<double> c = image;
    int w = image.width();
    int h = image.height();
    for (int l = 0; l < levels; ++l) {
        transform_region(c, w, h, true);
        w /= 2;
        h /= 2;
    }
    return c;
}

Plane<double> wavelet_inverse(const Plane<double>& coeffs, int levels) {
    Plane<double> c = coeffs;
    for (int l = levels - 1; l >= 0; --l) {
        transform_region(c, coeffs.width() >> l, coeffs.height() >> l, false);
    }
    return c;
}

Plane<double> denoise(const Plane<double>& image, const DenoiseConfig& config) {
    if (config.method == DenoiseMethod::SpatialWiener) return spatial_wiener(image, config.noise_variance);

    const int levels = usable_wavelet_levels(image.width(), image.height(), config.levels);
    if (levels == 0) return spatial_wiener(image, config.noise_variance);
    Plane<double> c = wavelet_forward(image, levels);
    for (int l = 0; l < levels; ++l) {
        const int w = image.width() >> (l + 1);
        const int h = image.height() >> (l + 1);
        wiener_subband(c, w, 0, w, h, config.noise_variance);  // HL
        wiener_subband(c, 0, h, w, h, config.noise_variance);  // LH
        wiener_subband(c, w, h, w, h, config.noise_variance);  // HH
    }
    return wavelet_inverse(c, levels);
}

void zero_mean_rows_cols(Plane<double>& v) {
    const int w = v.width();
    const int h = v.height();
    if (w == 0 || h == 0) return;
    for (int y = 0; y < h; ++y) {
        double s = 0.0;
        for (int x = 0; x < w; ++x) s += v(x, y);
        const double m = s / w;
        for (int x = 0; x < w; ++x) v(x, y) -= m;
    }
    for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int y = 0; y < h; ++y) s += v(x, y);
        const double m = s / h;
        for (int y = 0; y < h; ++y) v(x, y) -= m;
    }
}

NoiseResidual extract_residual(const Picture& picture, const DenoiseConfig& config) {
    const auto& luma = picture.luma;
    NoiseResidual out;
    out.values = Plane<double>(luma.width(), luma.height());
    if (luma.empty()) return out;
    const auto [lo, hi] = std::minmax_element(luma.values().begin(), luma.values().end());
    if (*lo == *hi) {
        out.degenerate = true;
        return out;
    }
    Plane<double> img(luma.width(), luma.height());
    for (std::size_t i = 0; i < luma.size(); ++i) img[i] = luma[i];
    const Plane<double> smooth = denoise(img, config);
    for (std::size_t i = 0; i < img.size(); ++i) out.values[i] = img[i] - smooth[i];
    zero_mean_rows_cols(out.values);
    return out;
}

Plane<std::uint8_t> saturation_mask(const Picture& picture) {
    Plane<std::uint8_t> mask(picture.width(), picture.height());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const auto v = picture.luma[i];
        mask[i] = (v >= 250 || v <= 5) ? 0 : 1;
    }
    return mask;
}

}  // namespace blockprnu
