#pragma once

// Independent reference implementations used as oracles in the test suites.
// Everything here is written as plain nested loops straight from the formal
// definitions; none of it shares code with the library kernels it checks.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "uhddip/tensor.hpp"

namespace oracle {

using uhddip::Shape;
using uhddip::Tensor;

template <typename T>
Tensor<T> conv2d_ref(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b, int stride,
                     int padding, int groups) {
    const int64_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t Cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    const int64_t cpg_in = Cin / groups, cpg_out = Cout / groups;
    const int64_t Ho = (H + 2 * padding - kh) / stride + 1;
    const int64_t Wo = (W + 2 * padding - kw) / stride + 1;
    Tensor<T> out({N, Cout, Ho, Wo});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t co = 0; co < Cout; ++co)
            for (int64_t oy = 0; oy < Ho; ++oy)
                for (int64_t ox = 0; ox < Wo; ++ox) {
                    double acc = b ? static_cast<double>((*b)[co]) : 0.0;
                    const int64_t g = co / cpg_out;
                    for (int64_t cig = 0; cig < cpg_in; ++cig)
                        for (int64_t ky = 0; ky < kh; ++ky)
                            for (int64_t kx = 0; kx < kw; ++kx) {
                                const int64_t y = oy * stride - padding + ky;
                                const int64_t xx = ox * stride - padding + kx;
                                if (y < 0 || y >= H || xx < 0 || xx >= W) continue;
                                acc += static_cast<double>(
                                           x.at(n, g * cpg_in + cig, y, xx)) *
                                       static_cast<double>(
                                           w[((co * cpg_in + cig) * kh + ky) * kw + kx]);
                            }
                    out.at(n, co, oy, ox) = static_cast<T>(acc);
                }
    return out;
}

template <typename T>
Tensor<T> matmul_ref(const Tensor<T>& a, const Tensor<T>& b) {
    const int64_t M = a.dim(a.rank() - 2), K = a.dim(a.rank() - 1);
    const int64_t Nn = b.dim(b.rank() - 1);
    const int64_t B = a.numel() / (M * K);
    Shape out_shape(a.shape().begin(), a.shape().end() - 2);
    out_shape.push_back(M);
    out_shape.push_back(Nn);
    Tensor<T> out(out_shape);
    for (int64_t bi = 0; bi < B; ++bi)
        for (int64_t i = 0; i < M; ++i)
            for (int64_t j = 0; j < Nn; ++j) {
                double acc = 0;
                for (int64_t k = 0; k < K; ++k)
                    acc += static_cast<double>(a[bi * M * K + i * K + k]) *
                           static_cast<double>(b[bi * K * Nn + k * Nn + j]);
                out[bi * M * Nn + i * Nn + j] = static_cast<T>(acc);
            }
    return out;
}

template <typename T>
void layer_norm_ref(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                    double eps, Tensor<T>& out) {
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t y = 0; y < H; ++y)
            for (int64_t xx = 0; xx < W; ++xx) {
                double mean = 0;
                for (int64_t c = 0; c < C; ++c) mean += x.at(n, c, y, xx);
                mean /= C;
                double var = 0;
                for (int64_t c = 0; c < C; ++c) {
                    const double d = x.at(n, c, y, xx) - mean;
                    var += d * d;
                }
                var /= C;
                for (int64_t c = 0; c < C; ++c)
                    out.at(n, c, y, xx) = static_cast<T>(
                        gamma[c] * (x.at(n, c, y, xx) - mean) / std::sqrt(var + eps) + beta[c]);
            }
}

// O(N^2) direct DFT of the trailing two dims, unnormalized forward.
template <typename T>
void dft2_ref(const Tensor<T>& x, Tensor<T>& re, Tensor<T>& im) {
    const int64_t H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
    const int64_t batch = x.numel() / (H * W);
    const double two_pi = 6.283185307179586476925287;
    for (int64_t b = 0; b < batch; ++b)
        for (int64_t u = 0; u < H; ++u)
            for (int64_t v = 0; v < W; ++v) {
                double sr = 0, si = 0;
                for (int64_t y = 0; y < H; ++y)
                    for (int64_t xx = 0; xx < W; ++xx) {
                        const double ang = -two_pi * (static_cast<double>(u * y) / H +
                                                      static_cast<double>(v * xx) / W);
                        const double val = x[b * H * W + y * W + xx];
                        sr += val * std::cos(ang);
                        si += val * std::sin(ang);
                    }
                re[b * H * W + u * W + v] = static_cast<T>(sr);
                im[b * H * W + u * W + v] = static_cast<T>(si);
            }
}

// Per-patch gather matching unfold(k, stride 1, zero pad (k-1)/2).
template <typename T>
Tensor<T> unfold_ref(const Tensor<T>& x, int k) {
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t pad = (k - 1) / 2;
    Tensor<T> out({N, C * k * k, H * W});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t ky = 0; ky < k; ++ky)
                for (int64_t kx = 0; kx < k; ++kx)
                    for (int64_t y = 0; y < H; ++y)
                        for (int64_t xx = 0; xx < W; ++xx) {
                            const int64_t sy = y + ky - pad, sx = xx + kx - pad;
                            T v = T(0);
                            if (sy >= 0 && sy < H && sx >= 0 && sx < W) v = x.at(n, c, sy, sx);
                            out[(n * C * k * k + c * k * k + ky * k + kx) * H * W + y * W + xx] =
                                v;
                        }
    return out;
}

template <typename T>
Tensor<T> cosine_cols_ref(const Tensor<T>& u, const Tensor<T>& v, double eps) {
    const int64_t N = u.dim(0), K = u.dim(1), M = u.dim(2);
    Tensor<T> out({N, 1, M});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t m = 0; m < M; ++m) {
            double dot = 0, nu = 0, nv = 0;
            for (int64_t k = 0; k < K; ++k) {
                const double a = u[n * K * M + k * M + m];
                const double b = v[n * K * M + k * M + m];
                dot += a * b;
                nu += a * a;
                nv += b * b;
            }
            out[n * M + m] = static_cast<T>(dot / (std::sqrt(nu) * std::sqrt(nv) + eps));
        }
    return out;
}

// ---------------------------------------------------------------------------
// Central finite-difference gradient verification (double precision).
// ---------------------------------------------------------------------------

struct GradCheck {
    double max_err = 0.0;
    int64_t checked = 0;
};

// f: builds the scalar loss from the current input values. Analytic grads are
// taken through one taped evaluation; numeric ones by central differences with
// untaped evaluations. Error metric: |a - n| / max(|a|, |n|, 0.01).
inline GradCheck check_gradients(std::vector<Tensor<double>*> inputs,
                                 const std::function<Tensor<double>()>& f, double h = 1e-5,
                                 int64_t max_probes_per_input = 64) {
    using uhddip::Tape;
    using uhddip::TapeScope;
    for (auto* t : inputs) {
        t->set_requires_grad(true);
        t->zero_grad();
    }
    Tape<double> tape;
    {
        TapeScope<double> scope(tape);
        Tensor<double> loss = f();
        tape.backward(loss);
    }
    std::vector<std::vector<double>> analytic;
    analytic.reserve(inputs.size());
    for (auto* t : inputs) analytic.push_back(t->grad().vec());
    for (auto* t : inputs) t->set_requires_grad(false);

    GradCheck result;
    for (size_t ti = 0; ti < inputs.size(); ++ti) {
        Tensor<double>& t = *inputs[ti];
        const int64_t n = t.numel();
        const int64_t stride = std::max<int64_t>(1, n / max_probes_per_input);
        for (int64_t i = 0; i < n; i += stride) {
            const double orig = t[i];
            t[i] = orig + h;
            const double fp = f()[0];
            t[i] = orig - h;
            const double fm = f()[0];
            t[i] = orig;
            const double numeric = (fp - fm) / (2 * h);
            const double a = analytic[ti][static_cast<size_t>(i)];
            const double err = std::abs(a - numeric) /
                               std::max({std::abs(a), std::abs(numeric), 0.01});
            result.max_err = std::max(result.max_err, err);
            ++result.checked;
        }
    }
    for (auto* t : inputs) t->set_requires_grad(true);
    return result;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    double m = 0;
    for (int64_t i = 0; i < a.numel(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

}  // namespace oracle
