#pragma once
#include <array>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace hepa {

// Dense row-major N-dimensional array. The last axis is contiguous.
template <typename T, std::size_t R>
struct ndarray {
    std::array<std::size_t, R> shape{};
    std::vector<T> data;

    ndarray() = default;
    explicit ndarray(const std::array<std::size_t, R>& s, T fill = T{})
        : shape(s), data(count(s), fill) {}

    static std::size_t count(const std::array<std::size_t, R>& s) {
        std::size_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }
    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    template <typename... I>
    T& operator()(I... idx) {
        static_assert(sizeof...(I) == R, "index rank mismatch");
        return data[offset({static_cast<std::size_t>(idx)...})];
    }
    template <typename... I>
    const T& operator()(I... idx) const {
        static_assert(sizeof...(I) == R, "index rank mismatch");
        return data[offset({static_cast<std::size_t>(idx)...})];
    }

    std::size_t offset(const std::array<std::size_t, R>& idx) const {
        std::size_t off = 0;
        for (std::size_t a = 0; a < R; ++a) off = off * shape[a] + idx[a];
        return off;
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const ndarray& o) const { return shape == o.shape; }

    friend bool operator==(const ndarray& a, const ndarray& b) {
        return a.shape == b.shape && a.data == b.data;
    }
};

using grid2f = ndarray<float, 2>;
using grid3f = ndarray<float, 3>;
using grid2u8 = ndarray<std::uint8_t, 2>;
using grid3u8 = ndarray<std::uint8_t, 3>;

}  // namespace hepa
