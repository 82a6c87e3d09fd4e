#pragma once

#include <complex>
#include <vector>

#include "uhddip/ops.hpp"
#include "uhddip/tensor.hpp"

namespace uhddip {
namespace ops {

namespace detail {

inline bool is_pow2(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 Cooley-Tukey, forward (e^{-2pi i}) direction.
template <typename T>
void fft_line(std::complex<T>* a, int64_t n, int64_t stride) {
    // bit reversal
    for (int64_t i = 1, j = 0; i < n; ++i) {
        int64_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i * stride], a[j * stride]);
    }
    for (int64_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * 3.141592653589793238462643 / static_cast<double>(len);
        const std::complex<T> wl(static_cast<T>(std::cos(ang)), static_cast<T>(std::sin(ang)));
        for (int64_t i = 0; i < n; i += len) {
            std::complex<T> w(1, 0);
            for (int64_t k = 0; k < len / 2; ++k) {
                std::complex<T>& u = a[(i + k) * stride];
                std::complex<T>& v = a[(i + k + len / 2) * stride];
                const std::complex<T> t = v * w;
                v = u - t;
                u = u + t;
                w *= wl;
            }
        }
    }
}

// Unnormalized 2-D DFT over the trailing [H,W] of a complex buffer.
template <typename T>
void fft2_inplace(std::complex<T>* buf, int64_t H, int64_t W) {
    for (int64_t y = 0; y < H; ++y) fft_line(buf + y * W, W, 1);
    for (int64_t x = 0; x < W; ++x) fft_line(buf + x, H, W);
}

}  // namespace detail

template <typename T>
struct Fft2 {
    Tensor<T> re;
    Tensor<T> im;
};

// Unnormalized forward 2-D DFT over the trailing two dims. Extents must be
// powers of two (radix-2 kernel). Input is real; output is a real/imag pair.
template <typename T>
Fft2<T> fft2(const Tensor<T>& x) {
    if (x.rank() < 2) throw DimensionError("fft2: needs at least 2 dims");
    const int64_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
    if (!detail::is_pow2(H) || !detail::is_pow2(W))
        throw ConfigError("fft2: extents must be powers of two, got " + shape_str(x.shape()));
    const int64_t batch = x.numel() / (H * W);
    Tensor<T> re(x.shape()), im(x.shape());
    std::vector<std::complex<T>> buf(static_cast<size_t>(H * W));
    for (int64_t b = 0; b < batch; ++b) {
        const T* src = x.data() + b * H * W;
        for (int64_t i = 0; i < H * W; ++i) buf[static_cast<size_t>(i)] = {src[i], T(0)};
        detail::fft2_inplace(buf.data(), H, W);
        T* rp = re.data() + b * H * W;
        T* ip = im.data() + b * H * W;
        for (int64_t i = 0; i < H * W; ++i) {
            rp[i] = buf[static_cast<size_t>(i)].real();
            ip[i] = buf[static_cast<size_t>(i)].imag();
        }
    }
    if (recording<T>({&x})) {
        // d/dx of (R, I) for real x: grad = Re(DFT2(gR - i*gI)), using the
        // symmetry of the DFT matrix.
        Tensor<T> re_out = re, im_out = im;
        auto backward = [x, re_out, im_out, batch, H, W]() mutable {
            const bool hr = re_out.has_grad(), hi = im_out.has_grad();
            if (!hr && !hi) return;
            auto& gx = x.grad_vec();
            std::vector<std::complex<T>> buf(static_cast<size_t>(H * W));
            for (int64_t b = 0; b < batch; ++b) {
                for (int64_t i = 0; i < H * W; ++i) {
                    const T gr = hr ? re_out.grad_vec()[static_cast<size_t>(b * H * W + i)] : T(0);
                    const T gi = hi ? im_out.grad_vec()[static_cast<size_t>(b * H * W + i)] : T(0);
                    buf[static_cast<size_t>(i)] = {gr, -gi};
                }
                detail::fft2_inplace(buf.data(), H, W);
                for (int64_t i = 0; i < H * W; ++i)
                    gx[static_cast<size_t>(b * H * W + i)] += buf[static_cast<size_t>(i)].real();
            }
        };
        re.set_requires_grad(true);
        im.set_requires_grad(true);
        // One node serves both outputs; it reads whatever grads they carry.
        TapeScope<T>::current()->record("fft2", std::move(backward));
    }
    return {re, im};
}

}  // namespace ops
}  // namespace uhddip
