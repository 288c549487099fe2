#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "errors.hpp"
#include "volume.hpp"

namespace hepa {

struct histogram {
    std::vector<double> bin_edges;       // ascending, length B+1
    std::vector<std::uint64_t> counts;   // length B

    std::size_t bins() const { return counts.size(); }
    double center(std::size_t b) const { return 0.5 * (bin_edges[b] + bin_edges[b + 1]); }
};

struct preprocess_config {
    int bins = 256;
    double clip_lo = -200.0;  // HU window covering soft tissue contrast
    double clip_hi = 400.0;
    double peak_prominence = 0.05;   // min fraction of max count for a peak
    double target_peak_value = 0.9;  // normalized intensity the peak maps to

    void validate() const {
        if (bins < 2) throw config_error("preprocess: bins must be >= 2");
        if (!(clip_lo < clip_hi)) throw config_error("preprocess: clip range low must be < high");
        if (!(peak_prominence > 0.0 && peak_prominence <= 1.0))
            throw config_error("preprocess: peak_prominence must be in (0,1]");
        if (!(target_peak_value > 0.0 && target_peak_value <= 1.0))
            throw config_error("preprocess: target_peak_value must be in (0,1]");
    }
};

namespace detail {

inline std::size_t bin_index(double v, double lo, double hi, std::size_t bins) {
    double t = (v - lo) / (hi - lo) * static_cast<double>(bins);
    auto b = static_cast<std::ptrdiff_t>(t);
    if (b < 0) b = 0;
    if (b >= static_cast<std::ptrdiff_t>(bins)) b = static_cast<std::ptrdiff_t>(bins) - 1;
    return static_cast<std::size_t>(b);
}

}  // namespace detail

// Intensity histogram after clipping to the configured window; total count preserved.
inline histogram compute_histogram(const ct_volume& v, const preprocess_config& cfg = {}) {
    cfg.validate();
    histogram h;
    std::size_t B = static_cast<std::size_t>(cfg.bins);
    h.counts.assign(B, 0);
    h.bin_edges.resize(B + 1);
    for (std::size_t b = 0; b <= B; ++b)
        h.bin_edges[b] =
            cfg.clip_lo + (cfg.clip_hi - cfg.clip_lo) * static_cast<double>(b) / static_cast<double>(B);
    for (float x : v.vox.data) {
        double c = std::clamp(static_cast<double>(x), cfg.clip_lo, cfg.clip_hi);
        ++h.counts[detail::bin_index(c, cfg.clip_lo, cfg.clip_hi, B)];
    }
    return h;
}

// Bin center of the rightmost qualifying local maximum. A bin qualifies when its
// count is at least peak_prominence * max(count) and strictly greater than both
// neighbors (boundary bins compare against their single neighbor).
inline double rightmost_peak(const histogram& h, const preprocess_config& cfg = {}) {
    cfg.validate();
    const auto& c = h.counts;
    if (c.empty()) throw no_peak_error("rightmost_peak: empty histogram");
    std::uint64_t cmax = *std::max_element(c.begin(), c.end());
    double floor = cfg.peak_prominence * static_cast<double>(cmax);
    for (std::size_t i = c.size(); i-- > 0;) {
        if (static_cast<double>(c[i]) < floor || c[i] == 0) continue;
        bool up = i == 0 || c[i] > c[i - 1];
        bool down = i + 1 == c.size() || c[i] > c[i + 1];
        if (up && down) return h.center(i);
    }
    throw no_peak_error("rightmost_peak: no qualifying local maximum");
}

struct preprocess_info {
    double peak_intensity = 0.0;   // HU of the selected peak
    bool peak_fallback = false;    // true when no qualifying peak existed
};

// Clip to the window, rescale so the rightmost peak lands on target_peak_value
// (window low -> 0), then apply CDF histogram equalization over the rescaled
// range. Piecewise-linear CDF interpolation keeps the map strictly monotone
// within occupied bins; a single-bin histogram maps through unchanged.
inline ct_volume normalize_equalize(const ct_volume& v, const preprocess_config& cfg = {},
                                    preprocess_info* info = nullptr) {
    cfg.validate();
    histogram h = compute_histogram(v, cfg);
    double peak;
    bool fallback = false;
    try {
        peak = rightmost_peak(h, cfg);
    } catch (const no_peak_error&) {
        std::size_t best = static_cast<std::size_t>(
            std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
        peak = h.center(best);
        fallback = true;
    }
    if (info) {
        info->peak_intensity = peak;
        info->peak_fallback = fallback;
    }

    double denom = peak - cfg.clip_lo;
    if (denom <= 0.0) denom = cfg.clip_hi - cfg.clip_lo;
    double scale = cfg.target_peak_value / denom;
    double top = (cfg.clip_hi - cfg.clip_lo) * scale;  // rescaled window upper bound

    ct_volume out;
    out.vox.shape = v.vox.shape;
    out.vox.data.resize(v.vox.data.size());
    out.spacing = v.spacing;
    out.meta = v.meta;

    std::size_t B = static_cast<std::size_t>(cfg.bins);
    std::vector<std::uint64_t> counts(B, 0);
    std::vector<double> rescaled(v.vox.data.size());
    for (std::size_t i = 0; i < v.vox.data.size(); ++i) {
        double c = std::clamp(static_cast<double>(v.vox.data[i]), cfg.clip_lo, cfg.clip_hi);
        double x = (c - cfg.clip_lo) * scale;
        rescaled[i] = x;
        ++counts[detail::bin_index(x, 0.0, top, B)];
    }

    std::size_t occupied = 0;
    for (auto n : counts) occupied += n > 0;
    double total = static_cast<double>(v.vox.data.size());
    if (occupied <= 1) {
        for (std::size_t i = 0; i < rescaled.size(); ++i)
            out.vox.data[i] = static_cast<float>(std::clamp(rescaled[i], 0.0, 1.0));
        return out;
    }

    std::vector<double> cum(B + 1, 0.0);  // mass strictly before each bin edge
    for (std::size_t b = 0; b < B; ++b) cum[b + 1] = cum[b] + static_cast<double>(counts[b]);
    double binw = top / static_cast<double>(B);
    for (std::size_t i = 0; i < rescaled.size(); ++i) {
        std::size_t b = detail::bin_index(rescaled[i], 0.0, top, B);
        double frac = (rescaled[i] - static_cast<double>(b) * binw) / binw;
        frac = std::clamp(frac, 0.0, 1.0);
        double f = (cum[b] + frac * static_cast<double>(counts[b])) / total;
        out.vox.data[i] = static_cast<float>(std::clamp(f, 0.0, 1.0));
    }
    return out;
}

}  // namespace hepa
