#pragma once
#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "../nd.hpp"
#include "../rng.hpp"
#include "blas.hpp"

namespace hepa::nn {

// activations and feature maps are (N, C, D, H, W); 2D networks use D = 1
template <typename T>
using tens5 = ndarray<T, 5>;

template <typename T>
struct param {
    std::string name;
    std::vector<T> w;
    std::vector<T> g;
    bool regularized = false;

    void resize(std::size_t n) {
        w.assign(n, T(0));
        g.assign(n, T(0));
    }
    void zero_grad() { std::fill(g.begin(), g.end(), T(0)); }
};

template <typename T>
inline void axpy(std::vector<T>& y, const std::vector<T>& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
}

template <typename T>
inline tens5<T>& add_into(tens5<T>& y, const tens5<T>& x) {
    for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += x.data[i];
    return y;
}

// ---------------------------------------------------------------------------
// convolution, stride 1, odd kernel, same padding

namespace detail {

// col layout: [C*kd*kh*kw, D*H*W] for one sample
template <typename T>
void im2col(const T* x, int C, int D, int H, int W, const std::array<int, 3>& k, T* col) {
    const int pd = k[0] / 2, ph = k[1] / 2, pw = k[2] / 2;
    const std::size_t plane = static_cast<std::size_t>(D) * H * W;
    std::size_t row = 0;
    for (int c = 0; c < C; ++c) {
        const T* xc = x + static_cast<std::size_t>(c) * plane;
        for (int kz = 0; kz < k[0]; ++kz)
            for (int ky = 0; ky < k[1]; ++ky)
                for (int kx = 0; kx < k[2]; ++kx, ++row) {
                    T* dst = col + row * plane;
                    const int dz = kz - pd, dy = ky - ph, dx = kx - pw;
                    for (int z = 0; z < D; ++z) {
                        const int sz = z + dz;
                        if (sz < 0 || sz >= D) {
                            std::memset(dst + static_cast<std::size_t>(z) * H * W, 0,
                                        sizeof(T) * H * W);
                            continue;
                        }
                        for (int y = 0; y < H; ++y) {
                            T* drow = dst + (static_cast<std::size_t>(z) * H + y) * W;
                            const int sy = y + dy;
                            if (sy < 0 || sy >= H) {
                                std::memset(drow, 0, sizeof(T) * W);
                                continue;
                            }
                            const T* srow = xc + (static_cast<std::size_t>(sz) * H + sy) * W;
                            const int x0 = std::max(0, -dx);
                            const int x1 = std::min(W, W - dx);
                            if (x0 > 0) std::memset(drow, 0, sizeof(T) * x0);
                            if (x1 > x0)
                                std::memcpy(drow + x0, srow + x0 + dx, sizeof(T) * (x1 - x0));
                            if (x1 < W) std::memset(drow + x1, 0, sizeof(T) * (W - x1));
                        }
                    }
                }
    }
}

// transpose of im2col: scatter-add col rows back into the image
template <typename T>
void col2im(const T* col, int C, int D, int H, int W, const std::array<int, 3>& k, T* x) {
    const int pd = k[0] / 2, ph = k[1] / 2, pw = k[2] / 2;
    const std::size_t plane = static_cast<std::size_t>(D) * H * W;
    std::memset(x, 0, sizeof(T) * C * plane);
    std::size_t row = 0;
    for (int c = 0; c < C; ++c) {
        T* xc = x + static_cast<std::size_t>(c) * plane;
        for (int kz = 0; kz < k[0]; ++kz)
            for (int ky = 0; ky < k[1]; ++ky)
                for (int kx = 0; kx < k[2]; ++kx, ++row) {
                    const T* src = col + row * plane;
                    const int dz = kz - pd, dy = ky - ph, dx = kx - pw;
                    for (int z = 0; z < D; ++z) {
                        const int sz = z + dz;
                        if (sz < 0 || sz >= D) continue;
                        for (int y = 0; y < H; ++y) {
                            const int sy = y + dy;
                            if (sy < 0 || sy >= H) continue;
                            const T* srow = src + (static_cast<std::size_t>(z) * H + y) * W;
                            T* drow = xc + (static_cast<std::size_t>(sz) * H + sy) * W;
                            const int x0 = std::max(0, -dx);
                            const int x1 = std::min(W, W - dx);
                            for (int xx = x0; xx < x1; ++xx) drow[xx + dx] += srow[xx];
                        }
                    }
                }
    }
}

}  // namespace detail

template <typename T>
struct conv3d {
    int ci = 0, co = 0;
    std::array<int, 3> kernel{1, 3, 3};
    param<T> w;  // [co, ci*kd*kh*kw]
    param<T> b;  // [co]
    tens5<T> x_cache;
    std::vector<T> col;  // shared workspace

    void init(int ci_, int co_, std::array<int, 3> k, const std::string& name, rng64& rng) {
        ci = ci_;
        co = co_;
        kernel = k;
        const int kn = k[0] * k[1] * k[2];
        w.name = name + ".w";
        w.regularized = true;
        w.resize(static_cast<std::size_t>(co) * ci * kn);
        b.name = name + ".b";
        b.resize(static_cast<std::size_t>(co));
        const double std_dev = std::sqrt(2.0 / (static_cast<double>(ci) * kn));
        for (auto& v : w.w) v = static_cast<T>(rng.normal(0.0, std_dev));
    }

    bool is_1x1() const { return kernel[0] == 1 && kernel[1] == 1 && kernel[2] == 1; }

    tens5<T> forward(const tens5<T>& x, bool train) {
        const auto [N, C, D, H, W] = std::tuple(x.shape[0], x.shape[1], x.shape[2], x.shape[3],
                                                x.shape[4]);
        if (static_cast<int>(C) != ci) throw shape_mismatch_error("conv3d: channel mismatch");
        tens5<T> y({N, static_cast<std::size_t>(co), D, H, W});
        const int plane = static_cast<int>(D * H * W);
        const int kdim = ci * kernel[0] * kernel[1] * kernel[2];
        if (!is_1x1()) col.resize(static_cast<std::size_t>(kdim) * plane);
        for (std::size_t n = 0; n < N; ++n) {
            const T* xs = x.data.data() + n * C * plane;
            T* ys = y.data.data() + n * static_cast<std::size_t>(co) * plane;
            const T* rhs = xs;
            if (!is_1x1()) {
                detail::im2col(xs, ci, static_cast<int>(D), static_cast<int>(H),
                               static_cast<int>(W), kernel, col.data());
                rhs = col.data();
            }
            gemm(false, false, co, plane, kdim, T(1), w.w.data(), kdim, rhs, plane, T(0), ys,
                 plane);
            for (int c = 0; c < co; ++c) {
                T* yc = ys + static_cast<std::size_t>(c) * plane;
                const T bias = b.w[static_cast<std::size_t>(c)];
                for (int i = 0; i < plane; ++i) yc[i] += bias;
            }
        }
        if (train) x_cache = x;
        return y;
    }

    tens5<T> backward(const tens5<T>& dy) {
        const tens5<T>& x = x_cache;
        const auto [N, C, D, H, W] = std::tuple(x.shape[0], x.shape[1], x.shape[2], x.shape[3],
                                                x.shape[4]);
        const int plane = static_cast<int>(D * H * W);
        const int kdim = ci * kernel[0] * kernel[1] * kernel[2];
        tens5<T> dx(x.shape);
        std::vector<T> dcol;
        if (!is_1x1()) {
            col.resize(static_cast<std::size_t>(kdim) * plane);
            dcol.resize(static_cast<std::size_t>(kdim) * plane);
        }
        for (std::size_t n = 0; n < N; ++n) {
            const T* xs = x.data.data() + n * C * plane;
            const T* dys = dy.data.data() + n * static_cast<std::size_t>(co) * plane;
            T* dxs = dx.data.data() + n * C * plane;
            const T* rhs = xs;
            if (!is_1x1()) {
                detail::im2col(xs, ci, static_cast<int>(D), static_cast<int>(H),
                               static_cast<int>(W), kernel, col.data());
                rhs = col.data();
            }
            // dW += dY * col^T
            gemm(false, true, co, kdim, plane, T(1), dys, plane, rhs, plane, T(1), w.g.data(),
                 kdim);
            // db += row sums of dY
            for (int c = 0; c < co; ++c) {
                const T* dyc = dys + static_cast<std::size_t>(c) * plane;
                T s = T(0);
                for (int i = 0; i < plane; ++i) s += dyc[i];
                b.g[static_cast<std::size_t>(c)] += s;
            }
            // dX = col2im(W^T * dY)
            if (is_1x1()) {
                gemm(true, false, kdim, plane, co, T(1), w.w.data(), kdim, dys, plane, T(0), dxs,
                     plane);
            } else {
                gemm(true, false, kdim, plane, co, T(1), w.w.data(), kdim, dys, plane, T(0),
                     dcol.data(), plane);
                detail::col2im(dcol.data(), ci, static_cast<int>(D), static_cast<int>(H),
                               static_cast<int>(W), kernel, dxs);
            }
        }
        x_cache = tens5<T>();
        return dx;
    }

    void collect(std::vector<param<T>*>& ps) {
        ps.push_back(&w);
        ps.push_back(&b);
    }
};

// ---------------------------------------------------------------------------
// transposed convolution with kernel == stride (non-overlapping upsampling)

template <typename T>
struct conv_transpose3d {
    int ci = 0, co = 0;
    std::array<int, 3> stride{1, 2, 2};
    param<T> w;  // offset-major: [kd*kh*kw][co][ci]
    param<T> b;  // [co]
    tens5<T> x_cache;

    void init(int ci_, int co_, std::array<int, 3> s, const std::string& name, rng64& rng) {
        ci = ci_;
        co = co_;
        stride = s;
        const int kn = s[0] * s[1] * s[2];
        w.name = name + ".w";
        w.regularized = true;
        w.resize(static_cast<std::size_t>(kn) * co * ci);
        b.name = name + ".b";
        b.resize(static_cast<std::size_t>(co));
        const double std_dev = std::sqrt(2.0 / static_cast<double>(ci));
        for (auto& v : w.w) v = static_cast<T>(rng.normal(0.0, std_dev));
    }

    tens5<T> forward(const tens5<T>& x, bool train) {
        const auto [N, C, D, H, W] = std::tuple(x.shape[0], x.shape[1], x.shape[2], x.shape[3],
                                                x.shape[4]);
        if (static_cast<int>(C) != ci)
            throw shape_mismatch_error("conv_transpose3d: channel mismatch");
        const std::size_t OD = D * stride[0], OH = H * stride[1], OW = W * stride[2];
        tens5<T> y({N, static_cast<std::size_t>(co), OD, OH, OW});
        const int plane = static_cast<int>(D * H * W);
        std::vector<T> tmp(static_cast<std::size_t>(co) * plane);
        const int kn = stride[0] * stride[1] * stride[2];
        for (std::size_t n = 0; n < N; ++n) {
            const T* xs = x.data.data() + n * C * plane;
            T* ys = y.data.data() + n * static_cast<std::size_t>(co) * OD * OH * OW;
            for (int off = 0; off < kn; ++off) {
                const int kz = off / (stride[1] * stride[2]);
                const int ky = (off / stride[2]) % stride[1];
                const int kx = off % stride[2];
                gemm(false, false, co, plane, ci, T(1),
                     w.w.data() + static_cast<std::size_t>(off) * co * ci, ci, xs, plane, T(0),
                     tmp.data(), plane);
                for (int c = 0; c < co; ++c) {
                    const T* tc = tmp.data() + static_cast<std::size_t>(c) * plane;
                    const T bias = b.w[static_cast<std::size_t>(c)];
                    T* yc = ys + static_cast<std::size_t>(c) * OD * OH * OW;
                    for (std::size_t z = 0; z < D; ++z)
                        for (std::size_t yy = 0; yy < H; ++yy) {
                            const T* trow = tc + (z * H + yy) * W;
                            T* orow = yc + ((z * stride[0] + kz) * OH + yy * stride[1] + ky) * OW +
                                      kx;
                            for (std::size_t xx = 0; xx < W; ++xx)
                                orow[xx * stride[2]] = trow[xx] + bias;
                        }
                }
            }
        }
        if (train) x_cache = x;
        return y;
    }

    tens5<T> backward(const tens5<T>& dy) {
        const tens5<T>& x = x_cache;
        const auto [N, C, D, H, W] = std::tuple(x.shape[0], x.shape[1], x.shape[2], x.shape[3],
                                                x.shape[4]);
        const std::size_t OD = D * stride[0], OH = H * stride[1], OW = W * stride[2];
        const int plane = static_cast<int>(D * H * W);
        const int kn = stride[0] * stride[1] * stride[2];
        tens5<T> dx(x.shape, T(0));
        std::vector<T> dtmp(static_cast<std::size_t>(co) * plane);
        for (std::size_t n = 0; n < N; ++n) {
            const T* xs = x.data.data() + n * C * plane;
            const T* dys = dy.data.data() + n * static_cast<std::size_t>(co) * OD * OH * OW;
            T* dxs = dx.data.data() + n * C * plane;
            for (int off = 0; off < kn; ++off) {
                const int kz = off / (stride[1] * stride[2]);
                const int ky = (off / stride[2]) % stride[1];
                const int kx = off % stride[2];
                // gather strided gradient block
                for (int c = 0; c < co; ++c) {
                    T* tc = dtmp.data() + static_cast<std::size_t>(c) * plane;
                    const T* dyc = dys + static_cast<std::size_t>(c) * OD * OH * OW;
                    for (std::size_t z = 0; z < D; ++z)
                        for (std::size_t yy = 0; yy < H; ++yy) {
                            T* trow = tc + (z * H + yy) * W;
                            const T* irow =
                                dyc + ((z * stride[0] + kz) * OH + yy * stride[1] + ky) * OW + kx;
                            for (std::size_t xx = 0; xx < W; ++xx)
                                trow[xx] = irow[xx * stride[2]];
                        }
                    T s = T(0);
                    for (int i = 0; i < plane; ++i) s += tc[i];
                    b.g[static_cast<std::size_t>(c)] += s;
                }
                // dW_off += dY_off * X^T ; dX += W_off^T * dY_off
                gemm(false, true, co, ci, plane, T(1), dtmp.data(), plane, xs, plane, T(1),
                     w.g.data() + static_cast<std::size_t>(off) * co * ci, ci);
                gemm(true, false, ci, plane, co, T(1),
                     w.w.data() + static_cast<std::size_t>(off) * co * ci, ci, dtmp.data(), plane,
                     T(1), dxs, plane);
            }
        }
        x_cache = tens5<T>();
        return dx;
    }

    void collect(std::vector<param<T>*>& ps) {
        ps.push_back(&w);
        ps.push_back(&b);
    }
};

// ---------------------------------------------------------------------------
// batch normalization over (N, D, H, W) per channel

template <typename T>
struct batchnorm {
    int c = 0;
    T momentum = T(0.1);
    T eps = T(1e-5);
    param<T> gamma, beta;
    std::vector<T> run_mean, run_var;  // buffers, saved with checkpoints
    std::vector<T> xhat;
    std::vector<T> invstd;
    std::array<std::size_t, 5> xshape{};

    void init(int c_, const std::string& name) {
        c = c_;
        gamma.name = name + ".gamma";
        gamma.resize(static_cast<std::size_t>(c));
        std::fill(gamma.w.begin(), gamma.w.end(), T(1));
        beta.name = name + ".beta";
        beta.resize(static_cast<std::size_t>(c));
        run_mean.assign(static_cast<std::size_t>(c), T(0));
        run_var.assign(static_cast<std::size_t>(c), T(1));
    }

    tens5<T> forward(const tens5<T>& x, bool train) {
        const std::size_t N = x.shape[0], C = x.shape[1];
        const std::size_t plane = x.shape[2] * x.shape[3] * x.shape[4];
        tens5<T> y(x.shape);
        if (!train) {
            for (std::size_t ch = 0; ch < C; ++ch) {
                const T is = T(1) / std::sqrt(run_var[ch] + eps);
                const T g = gamma.w[ch], bt = beta.w[ch], mu = run_mean[ch];
                for (std::size_t n = 0; n < N; ++n) {
                    const T* xc = x.data.data() + (n * C + ch) * plane;
                    T* yc = y.data.data() + (n * C + ch) * plane;
                    for (std::size_t i = 0; i < plane; ++i) yc[i] = g * (xc[i] - mu) * is + bt;
                }
            }
            return y;
        }
        xshape = x.shape;
        xhat.resize(x.size());
        invstd.resize(C);
        const T cnt = static_cast<T>(N * plane);
        for (std::size_t ch = 0; ch < C; ++ch) {
            T mean = T(0);
            for (std::size_t n = 0; n < N; ++n) {
                const T* xc = x.data.data() + (n * C + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i) mean += xc[i];
            }
            mean /= cnt;
            T var = T(0);
            for (std::size_t n = 0; n < N; ++n) {
                const T* xc = x.data.data() + (n * C + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    const T d = xc[i] - mean;
                    var += d * d;
                }
            }
            var /= cnt;
            const T is = T(1) / std::sqrt(var + eps);
            invstd[ch] = is;
            const T g = gamma.w[ch], bt = beta.w[ch];
            for (std::size_t n = 0; n < N; ++n) {
                const T* xc = x.data.data() + (n * C + ch) * plane;
                T* xh = xhat.data() + (n * C + ch) * plane;
                T* yc = y.data.data() + (n * C + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    xh[i] = (xc[i] - mean) * is;
                    yc[i] = g * xh[i] + bt;
                }
            }
            // unbiased variance feeds the running estimate
            const T unbiased = cnt > 1 ? var * cnt / (cnt - 1) : var;
            run_mean[ch] = (T(1) - momentum) * run_mean[ch] + momentum * mean;
            run_var[ch] = (T(1) - momentum) * run_var[ch] + momentum * unbiased;
        }
        return y;
    }

    tens5<T> backward(const tens5<T>& dy) {
        const std::size_t N = xshape[0], C = xshape[1];
        const std::size_t plane = xshape[2] * xshape[3] * xshape[4];
        const T cnt = static_cast<T>(N * plane);
        tens5<T> dx(xshape);
        for (std::size_t ch = 0; ch < C; ++ch) {
            T sum_dy = T(0), sum_dy_xhat = T(0);
            for (std::size_t n = 0; n < N; ++n) {
                const T* dyc = dy.data.data() + (n * C + ch) * plane;
                const T* xh = xhat.data() + (n * C + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    sum_dy += dyc[i];
                    sum_dy_xhat += dyc[i] * xh[i];
                }
            }
            gamma.g[ch] += sum_dy_xhat;
            beta.g[ch] += sum_dy;
            const T g_is = gamma.w[ch] * invstd[ch];
            const T mean_dy = sum_dy / cnt, mean_dy_xhat = sum_dy_xhat / cnt;
            for (std::size_t n = 0; n < N; ++n) {
                const T* dyc = dy.data.data() + (n * C + ch) * plane;
                const T* xh = xhat.data() + (n * C + ch) * plane;
                T* dxc = dx.data.data() + (n * C + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i)
                    dxc[i] = g_is * (dyc[i] - mean_dy - xh[i] * mean_dy_xhat);
            }
        }
        xhat.clear();
        return dx;
    }

    void collect(std::vector<param<T>*>& ps) {
        ps.push_back(&gamma);
        ps.push_back(&beta);
    }
};

// ---------------------------------------------------------------------------
// max pooling with kernel == stride

template <typename T>
struct maxpool3d {
    std::array<int, 3> s{1, 2, 2};
    std::vector<std::size_t> argmax;
    std::array<std::size_t, 5> xshape{};

    tens5<T> forward(const tens5<T>& x, bool train) {
        const std::size_t N = x.shape[0], C = x.shape[1];
        const std::size_t D = x.shape[2], H = x.shape[3], W = x.shape[4];
        if (D % s[0] || H % s[1] || W % s[2])
            throw shape_mismatch_error("maxpool3d: input not divisible by pool size");
        const std::size_t OD = D / s[0], OH = H / s[1], OW = W / s[2];
        tens5<T> y({N, C, OD, OH, OW});
        xshape = x.shape;
        if (train) argmax.resize(y.size());
        std::size_t o = 0;
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t ch = 0; ch < C; ++ch) {
                const T* xc = x.data.data() + (n * C + ch) * D * H * W;
                for (std::size_t z = 0; z < OD; ++z)
                    for (std::size_t yy = 0; yy < OH; ++yy)
                        for (std::size_t xx = 0; xx < OW; ++xx, ++o) {
                            T best = -std::numeric_limits<T>::infinity();
                            std::size_t besti = 0;
                            for (int dz = 0; dz < s[0]; ++dz)
                                for (int dy = 0; dy < s[1]; ++dy)
                                    for (int dx = 0; dx < s[2]; ++dx) {
                                        std::size_t idx = ((z * s[0] + dz) * H + yy * s[1] + dy) *
                                                              W +
                                                          xx * s[2] + dx;
                                        if (xc[idx] > best) {
                                            best = xc[idx];
                                            besti = idx;
                                        }
                                    }
                            y.data[o] = best;
                            if (train) argmax[o] = (n * C + ch) * D * H * W + besti;
                        }
            }
        return y;
    }

    tens5<T> backward(const tens5<T>& dy) {
        tens5<T> dx(xshape, T(0));
        for (std::size_t i = 0; i < dy.data.size(); ++i) dx.data[argmax[i]] += dy.data[i];
        argmax.clear();
        return dx;
    }
};

// ---------------------------------------------------------------------------
// inverted dropout

template <typename T>
struct dropout {
    double rate = 0.0;
    rng64* rng = nullptr;
    std::vector<T> mask;

    tens5<T> forward(const tens5<T>& x, bool train) {
        if (!train || rate <= 0.0) return x;
        tens5<T> y(x.shape);
        mask.resize(x.size());
        const T scale = static_cast<T>(1.0 / (1.0 - rate));
        for (std::size_t i = 0; i < x.size(); ++i) {
            mask[i] = rng->uniform() < rate ? T(0) : scale;
            y.data[i] = x.data[i] * mask[i];
        }
        return y;
    }

    tens5<T> backward(const tens5<T>& dy) {
        if (mask.empty()) return dy;
        tens5<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] = dy.data[i] * mask[i];
        mask.clear();
        return dx;
    }
};

// ---------------------------------------------------------------------------
// activations

template <typename T>
struct relu {
    std::vector<std::uint8_t> pass;

    tens5<T> forward(const tens5<T>& x, bool train) {
        tens5<T> y(x.shape);
        if (train) pass.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const bool p = x.data[i] > T(0);
            y.data[i] = p ? x.data[i] : T(0);
            if (train) pass[i] = p;
        }
        return y;
    }
    tens5<T> backward(const tens5<T>& dy) {
        tens5<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] = pass[i] ? dy.data[i] : T(0);
        pass.clear();
        return dx;
    }
};

template <typename T>
struct sigmoid {
    std::vector<T> y_cache;

    tens5<T> forward(const tens5<T>& x, bool train) {
        tens5<T> y(x.shape);
        for (std::size_t i = 0; i < x.size(); ++i)
            y.data[i] = T(1) / (T(1) + std::exp(-x.data[i]));
        if (train) y_cache = y.data;
        return y;
    }
    tens5<T> backward(const tens5<T>& dy) {
        tens5<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.size(); ++i)
            dx.data[i] = dy.data[i] * y_cache[i] * (T(1) - y_cache[i]);
        y_cache.clear();
        return dx;
    }
};

// clamp to [0,1]; gradient is zero outside the range
template <typename T>
struct clamp01 {
    std::vector<std::uint8_t> pass;

    tens5<T> forward(const tens5<T>& x, bool train) {
        tens5<T> y(x.shape);
        if (train) pass.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const bool p = x.data[i] > T(0) && x.data[i] < T(1);
            y.data[i] = std::clamp(x.data[i], T(0), T(1));
            if (train) pass[i] = p;
        }
        return y;
    }
    tens5<T> backward(const tens5<T>& dy) {
        tens5<T> dx(dy.shape);
        for (std::size_t i = 0; i < dy.size(); ++i) dx.data[i] = pass[i] ? dy.data[i] : T(0);
        pass.clear();
        return dx;
    }
};

// ---------------------------------------------------------------------------
// channel concatenation

template <typename T>
inline tens5<T> concat_channels(const std::vector<const tens5<T>*>& parts) {
    const auto& s0 = parts.front()->shape;
    std::size_t ctot = 0;
    for (auto* p : parts) {
        if (p->shape[0] != s0[0] || p->shape[2] != s0[2] || p->shape[3] != s0[3] ||
            p->shape[4] != s0[4])
            throw shape_mismatch_error("concat_channels: spatial/batch mismatch");
        ctot += p->shape[1];
    }
    tens5<T> y({s0[0], ctot, s0[2], s0[3], s0[4]});
    const std::size_t plane = s0[2] * s0[3] * s0[4];
    for (std::size_t n = 0; n < s0[0]; ++n) {
        std::size_t coff = 0;
        for (auto* p : parts) {
            const std::size_t pc = p->shape[1];
            std::memcpy(y.data.data() + (n * ctot + coff) * plane,
                        p->data.data() + n * pc * plane, sizeof(T) * pc * plane);
            coff += pc;
        }
    }
    return y;
}

template <typename T>
inline std::vector<tens5<T>> split_channels(const tens5<T>& dy,
                                            const std::vector<std::size_t>& widths) {
    const std::size_t N = dy.shape[0], plane = dy.shape[2] * dy.shape[3] * dy.shape[4];
    std::vector<tens5<T>> parts;
    parts.reserve(widths.size());
    for (std::size_t w : widths)
        parts.emplace_back(std::array<std::size_t, 5>{N, w, dy.shape[2], dy.shape[3], dy.shape[4]});
    const std::size_t ctot = dy.shape[1];
    for (std::size_t n = 0; n < N; ++n) {
        std::size_t coff = 0;
        for (std::size_t pi = 0; pi < widths.size(); ++pi) {
            std::memcpy(parts[pi].data.data() + n * widths[pi] * plane,
                        dy.data.data() + (n * ctot + coff) * plane,
                        sizeof(T) * widths[pi] * plane);
            coff += widths[pi];
        }
    }
    return parts;
}

}  // namespace hepa::nn
