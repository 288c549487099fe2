#pragma once
#include <array>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "errors.hpp"
#include "nd.hpp"

namespace hepa {

// Opaque NIfTI metadata kept for round-trip; empty for raw-format volumes.
struct volume_meta {
    std::vector<char> nifti_header;  // 348-byte NIfTI-1 header, native byte order
    bool has_nifti() const { return nifti_header.size() == 348; }
};

// 3D CT intensity grid, axis order (D slices, H rows, W cols), slice axis first.
struct ct_volume {
    grid3f vox;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per axis, (D,H,W) order
    volume_meta meta;

    std::size_t depth() const { return vox.shape[0]; }
    std::size_t height() const { return vox.shape[1]; }
    std::size_t width() const { return vox.shape[2]; }

    void validate() const {
        if (vox.shape[0] < 1 || vox.shape[1] < 1 || vox.shape[2] < 1)
            throw format_error("ct_volume: every dimension must be >= 1");
        for (double s : spacing)
            if (!(s > 0)) throw format_error("ct_volume: spacing must be positive");
        for (float v : vox.data)
            if (!std::isfinite(v)) throw format_error("ct_volume: non-finite voxel value");
    }
};

// {0,1} grid aligned with a reference volume.
struct binary_mask {
    grid3u8 vox;

    std::size_t depth() const { return vox.shape[0]; }
    std::size_t height() const { return vox.shape[1]; }
    std::size_t width() const { return vox.shape[2]; }

    bool any() const {
        for (auto v : vox.data)
            if (v) return true;
        return false;
    }
    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : vox.data) n += v != 0;
        return n;
    }
    void validate() const {
        for (auto v : vox.data)
            if (v > 1) throw format_error("binary_mask: values must be 0 or 1");
    }
};

// [0,1]-valued probability grid.
using prob_map = grid3f;

// Non-owning view of one axial slice; slices are contiguous in memory.
struct slice_view {
    std::size_t rows = 0, cols = 0;
    const float* data = nullptr;

    float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

inline slice_view slice_of(const ct_volume& v, std::size_t d) {
    return {v.height(), v.width(), v.vox.data.data() + d * v.height() * v.width()};
}

inline grid2f slice_copy(const grid3f& g, std::size_t d) {
    grid2f out({g.shape[1], g.shape[2]});
    std::memcpy(out.data.data(), g.data.data() + d * out.size(), out.size() * sizeof(float));
    return out;
}

inline grid2u8 slice_copy(const grid3u8& g, std::size_t d) {
    grid2u8 out({g.shape[1], g.shape[2]});
    std::memcpy(out.data.data(), g.data.data() + d * out.size(), out.size());
    return out;
}

// Ordered 2D slice sequence, ascending slice index.
inline std::vector<grid2f> slices(const ct_volume& v) {
    std::vector<grid2f> out;
    out.reserve(v.depth());
    for (std::size_t d = 0; d < v.depth(); ++d) out.push_back(slice_copy(v.vox, d));
    return out;
}

// Inverse of slices(): stack D grids of equal shape into a (D,H,W) volume.
inline grid3f stack(const std::vector<grid2f>& sl) {
    if (sl.empty()) throw shape_mismatch_error("stack: empty slice list");
    const auto hw = sl.front().shape;
    grid3f out({sl.size(), hw[0], hw[1]});
    for (std::size_t d = 0; d < sl.size(); ++d) {
        if (sl[d].shape != hw) throw shape_mismatch_error("stack: inconsistent slice shapes");
        std::memcpy(out.data.data() + d * sl[d].size(), sl[d].data.data(),
                    sl[d].size() * sizeof(float));
    }
    return out;
}

inline grid3u8 stack_masks(const std::vector<grid2u8>& sl) {
    if (sl.empty()) throw shape_mismatch_error("stack: empty slice list");
    const auto hw = sl.front().shape;
    grid3u8 out({sl.size(), hw[0], hw[1]});
    for (std::size_t d = 0; d < sl.size(); ++d) {
        if (sl[d].shape != hw) throw shape_mismatch_error("stack: inconsistent slice shapes");
        std::memcpy(out.data.data() + d * sl[d].size(), sl[d].data.data(), sl[d].size());
    }
    return out;
}

}  // namespace hepa
