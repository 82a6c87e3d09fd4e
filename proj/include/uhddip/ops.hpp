#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "uhddip/parallel.hpp"
#include "uhddip/tensor.hpp"

// Forward operators for the network, each recording a reverse-mode node when
// executed under an active TapeScope with a grad-requiring input. Kernels are
// plain loops; parallel sections always assign each output element to exactly
// one worker, so results do not depend on the worker count.

namespace uhddip {
namespace ops {

template <typename T>
inline bool recording(std::initializer_list<const Tensor<T>*> inputs) {
    if (TapeScope<T>::current() == nullptr) return false;
    for (const Tensor<T>* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

template <typename T, typename F>
inline void record(Tensor<T>& out, const char* name, F&& backward) {
    out.set_requires_grad(true);
    TapeScope<T>::current()->record(name, std::forward<F>(backward));
}

template <typename T>
inline void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "add");
    Tensor<T> out(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
    if (recording<T>({&a, &b})) {
        record(out, "add", [a, b, out]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            if (a.requires_grad()) a.accumulate_grad(g.data(), a.numel());
            if (b.requires_grad()) b.accumulate_grad(g.data(), b.numel());
        });
    }
    return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "sub");
    Tensor<T> out(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
    if (recording<T>({&a, &b})) {
        record(out, "sub", [a, b, out]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            if (a.requires_grad()) a.accumulate_grad(g.data(), a.numel());
            if (b.requires_grad()) {
                auto& gb = b.grad_vec();
                for (int64_t i = 0; i < b.numel(); ++i) gb[static_cast<size_t>(i)] -= g[static_cast<size_t>(i)];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "mul");
    Tensor<T> out(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
    if (recording<T>({&a, &b})) {
        record(out, "mul", [a, b, out]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            if (a.requires_grad()) {
                auto& ga = a.grad_vec();
                for (int64_t i = 0; i < a.numel(); ++i)
                    ga[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * b[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad_vec();
                for (int64_t i = 0; i < b.numel(); ++i)
                    gb[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * a[i];
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, double s) {
    Tensor<T> out(x.shape());
    const T sv = static_cast<T>(s);
    for (int64_t i = 0; i < x.numel(); ++i) out[i] = x[i] * sv;
    if (recording<T>({&x})) {
        record(out, "scale", [x, out, sv]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            auto& gx = x.grad_vec();
            for (int64_t i = 0; i < x.numel(); ++i)
                gx[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * sv;
        });
    }
    return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i)
        out[i] = T(1) / (T(1) + std::exp(-x[i]));
    if (recording<T>({&x})) {
        record(out, "sigmoid", [x, out]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            auto& gx = x.grad_vec();
            for (int64_t i = 0; i < x.numel(); ++i) {
                const T y = out[i];
                gx[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * y * (T(1) - y);
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& x) {
    Tensor<T> out(x.shape());
    const double inv_sqrt2 = 0.7071067811865475244;
    for (int64_t i = 0; i < x.numel(); ++i) {
        const double v = static_cast<double>(x[i]);
        out[i] = static_cast<T>(0.5 * v * (1.0 + std::erf(v * inv_sqrt2)));
    }
    if (recording<T>({&x})) {
        record(out, "gelu", [x, out, inv_sqrt2]() mutable {
            if (!out.has_grad()) return;
            const double inv_sqrt2pi = 0.3989422804014326779;
            const auto& g = out.grad_vec();
            auto& gx = x.grad_vec();
            for (int64_t i = 0; i < x.numel(); ++i) {
                const double v = static_cast<double>(x[i]);
                const double d = 0.5 * (1.0 + std::erf(v * inv_sqrt2)) +
                                 v * inv_sqrt2pi * std::exp(-0.5 * v * v);
                gx[static_cast<size_t>(i)] += g[static_cast<size_t>(i)] * static_cast<T>(d);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shape plumbing
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
    if (shape_numel(shape) != x.numel())
        throw DimensionError("reshape: " + shape_str(x.shape()) + " to " + shape_str(shape) +
                             " changes element count");
    Tensor<T> out = Tensor<T>::from_data(std::move(shape), x.vec());
    if (recording<T>({&x})) {
        record(out, "reshape", [x, out]() mutable {
            if (!out.has_grad()) return;
            x.accumulate_grad(out.grad_vec().data(), x.numel());
        });
    }
    return out;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 4 || b.rank() != 4 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) ||
        a.dim(3) != b.dim(3))
        throw DimensionError("concat_channels: incompatible shapes " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    const int64_t N = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), H = a.dim(2), W = a.dim(3);
    Tensor<T> out({N, Ca + Cb, H, W});
    const int64_t plane = H * W;
    for (int64_t n = 0; n < N; ++n) {
        std::copy_n(a.data() + n * Ca * plane, Ca * plane, out.data() + n * (Ca + Cb) * plane);
        std::copy_n(b.data() + n * Cb * plane, Cb * plane,
                    out.data() + (n * (Ca + Cb) + Ca) * plane);
    }
    if (recording<T>({&a, &b})) {
        record(out, "concat_channels", [a, b, out, N, Ca, Cb, plane]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            if (a.requires_grad()) {
                auto& ga = a.grad_vec();
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t i = 0; i < Ca * plane; ++i)
                        ga[static_cast<size_t>(n * Ca * plane + i)] +=
                            g[static_cast<size_t>(n * (Ca + Cb) * plane + i)];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad_vec();
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t i = 0; i < Cb * plane; ++i)
                        gb[static_cast<size_t>(n * Cb * plane + i)] +=
                            g[static_cast<size_t>((n * (Ca + Cb) + Ca) * plane + i)];
            }
        });
    }
    return out;
}

// Splits channels into two equal halves.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> chunk2_channels(const Tensor<T>& x) {
    if (x.rank() != 4 || x.dim(1) % 2 != 0)
        throw DimensionError("chunk2_channels: needs even channel count, got " +
                             shape_str(x.shape()));
    const int64_t N = x.dim(0), C = x.dim(1) / 2, H = x.dim(2), W = x.dim(3);
    const int64_t plane = H * W;
    Tensor<T> a({N, C, H, W}), b({N, C, H, W});
    for (int64_t n = 0; n < N; ++n) {
        std::copy_n(x.data() + n * 2 * C * plane, C * plane, a.data() + n * C * plane);
        std::copy_n(x.data() + (n * 2 + 1) * C * plane, C * plane, b.data() + n * C * plane);
    }
    if (recording<T>({&x})) {
        auto push = [x, N, C, plane](Tensor<T>& half, int64_t which) mutable {
            record(half, "chunk2_channels", [x, half, N, C, plane, which]() mutable {
                if (!half.has_grad()) return;
                const auto& g = half.grad_vec();
                auto& gx = x.grad_vec();
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t i = 0; i < C * plane; ++i)
                        gx[static_cast<size_t>((n * 2 + which) * C * plane + i)] +=
                            g[static_cast<size_t>(n * C * plane + i)];
            });
        };
        push(a, 0);
        push(b, 1);
    }
    return {a, b};
}

// ---------------------------------------------------------------------------
// Broadcast products
// ---------------------------------------------------------------------------

// Per-channel scale: x[N,C,H,W] * s[C].
template <typename T>
Tensor<T> channel_scale(const Tensor<T>& x, const Tensor<T>& s) {
    if (x.rank() != 4 || s.numel() != x.dim(1))
        throw DimensionError("channel_scale: scale size must equal channel count");
    const int64_t N = x.dim(0), C = x.dim(1), plane = x.dim(2) * x.dim(3);
    Tensor<T> out(x.shape());
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const T sv = s[c];
            const T* xs = x.data() + (n * C + c) * plane;
            T* os = out.data() + (n * C + c) * plane;
            for (int64_t i = 0; i < plane; ++i) os[i] = xs[i] * sv;
        }
    if (recording<T>({&x, &s})) {
        record(out, "channel_scale", [x, s, out, N, C, plane]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            if (x.requires_grad()) {
                auto& gx = x.grad_vec();
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t c = 0; c < C; ++c) {
                        const T sv = s[c];
                        const int64_t base = (n * C + c) * plane;
                        for (int64_t i = 0; i < plane; ++i)
                            gx[static_cast<size_t>(base + i)] +=
                                g[static_cast<size_t>(base + i)] * sv;
                    }
            }
            if (s.requires_grad()) {
                auto& gs = s.grad_vec();
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t c = 0; c < C; ++c) {
                        const int64_t base = (n * C + c) * plane;
                        T acc = T(0);
                        for (int64_t i = 0; i < plane; ++i)
                            acc += g[static_cast<size_t>(base + i)] * x[base + i];
                        gs[static_cast<size_t>(c)] += acc;
                    }
            }
        });
    }
    return out;
}

// x[N,C,H,W] * m where m is [N,1,H,W] (per-pixel map) or [N,C,1,1]
// (per-channel gate, e.g. simplified channel attention).
template <typename T>
Tensor<T> mul_broadcast(const Tensor<T>& x, const Tensor<T>& m) {
    if (x.rank() != 4 || m.rank() != 4 || m.dim(0) != x.dim(0))
        throw DimensionError("mul_broadcast: incompatible shapes " + shape_str(x.shape()) +
                             " vs " + shape_str(m.shape()));
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const bool pixel_map = m.dim(1) == 1 && m.dim(2) == H && m.dim(3) == W;
    const bool channel_map = m.dim(1) == C && m.dim(2) == 1 && m.dim(3) == 1;
    if (!pixel_map && !channel_map)
        throw DimensionError("mul_broadcast: map must be [N,1,H,W] or [N,C,1,1], got " +
                             shape_str(m.shape()));
    const int64_t plane = H * W;
    Tensor<T> out(x.shape());
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const T* xs = x.data() + (n * C + c) * plane;
            T* os = out.data() + (n * C + c) * plane;
            if (pixel_map) {
                const T* ms = m.data() + n * plane;
                for (int64_t i = 0; i < plane; ++i) os[i] = xs[i] * ms[i];
            } else {
                const T mv = m[n * C + c];
                for (int64_t i = 0; i < plane; ++i) os[i] = xs[i] * mv;
            }
        }
    if (recording<T>({&x, &m})) {
        record(out, "mul_broadcast", [x, m, out, N, C, plane, pixel_map]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            if (x.requires_grad()) {
                auto& gx = x.grad_vec();
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t c = 0; c < C; ++c) {
                        const int64_t base = (n * C + c) * plane;
                        if (pixel_map) {
                            const T* ms = m.data() + n * plane;
                            for (int64_t i = 0; i < plane; ++i)
                                gx[static_cast<size_t>(base + i)] +=
                                    g[static_cast<size_t>(base + i)] * ms[i];
                        } else {
                            const T mv = m[n * C + c];
                            for (int64_t i = 0; i < plane; ++i)
                                gx[static_cast<size_t>(base + i)] +=
                                    g[static_cast<size_t>(base + i)] * mv;
                        }
                    }
            }
            if (m.requires_grad()) {
                auto& gm = m.grad_vec();
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t c = 0; c < C; ++c) {
                        const int64_t base = (n * C + c) * plane;
                        if (pixel_map) {
                            for (int64_t i = 0; i < plane; ++i)
                                gm[static_cast<size_t>(n * plane + i)] +=
                                    g[static_cast<size_t>(base + i)] * x[base + i];
                        } else {
                            T acc = T(0);
                            for (int64_t i = 0; i < plane; ++i)
                                acc += g[static_cast<size_t>(base + i)] * x[base + i];
                            gm[static_cast<size_t>(n * C + c)] += acc;
                        }
                    }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

// Cross-correlation, x[N,Cin,H,W] * w[Cout,Cin/groups,kh,kw] (+ bias[Cout]).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const std::optional<Tensor<T>>& b,
                 int stride = 1, int padding = 0, int groups = 1) {
    if (x.rank() != 4 || w.rank() != 4)
        throw DimensionError("conv2d: expects 4-D input and weight");
    const int64_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t Cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
    if (groups < 1 || Cin % groups != 0 || Cout % groups != 0)
        throw ConfigError("conv2d: groups=" + std::to_string(groups) +
                          " must divide Cin=" + std::to_string(Cin) +
                          " and Cout=" + std::to_string(Cout));
    if (w.dim(1) != Cin / groups)
        throw DimensionError("conv2d: weight " + shape_str(w.shape()) + " does not match Cin=" +
                             std::to_string(Cin) + " groups=" + std::to_string(groups));
    if (b && b->numel() != Cout)
        throw DimensionError("conv2d: bias size must equal Cout");
    if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
    const int64_t Ho = (H + 2 * padding - kh) / stride + 1;
    const int64_t Wo = (W + 2 * padding - kw) / stride + 1;
    if (H + 2 * padding < kh || W + 2 * padding < kw || Ho <= 0 || Wo <= 0)
        throw DimensionError("conv2d: output extent non-positive for input " +
                             shape_str(x.shape()));

    Tensor<T> out({N, Cout, Ho, Wo});
    const int64_t cpg_in = Cin / groups, cpg_out = Cout / groups;
    const int64_t s = stride, p = padding;

    parallel_for(0, N * Cout, [&](int64_t idx) {
        const int64_t n = idx / Cout, co = idx % Cout;
        const int64_t g = co / cpg_out;
        const T bias = b ? (*b)[co] : T(0);
        for (int64_t oy = 0; oy < Ho; ++oy) {
            T* orow = out.data() + ((n * Cout + co) * Ho + oy) * Wo;
            for (int64_t ox = 0; ox < Wo; ++ox) orow[ox] = bias;
            for (int64_t cig = 0; cig < cpg_in; ++cig) {
                const int64_t ci = g * cpg_in + cig;
                for (int64_t ky = 0; ky < kh; ++ky) {
                    const int64_t y = oy * s - p + ky;
                    if (y < 0 || y >= H) continue;
                    const T* xrow = x.data() + ((n * Cin + ci) * H + y) * W;
                    const T* wrow = w.data() + ((co * cpg_in + cig) * kh + ky) * kw;
                    for (int64_t kx = 0; kx < kw; ++kx) {
                        const T wv = wrow[kx];
                        // valid ox range: 0 <= ox*s - p + kx < W
                        int64_t lo = 0, hi = Wo - 1;
                        if (p - kx > 0) lo = (p - kx + s - 1) / s;
                        hi = std::min<int64_t>(hi, (W - 1 + p - kx) / s);
                        const T* xs = xrow - p + kx;
                        for (int64_t ox = lo; ox <= hi; ++ox) orow[ox] += wv * xs[ox * s];
                    }
                }
            }
        }
    });

    const bool need = b ? recording<T>({&x, &w, &*b}) : recording<T>({&x, &w});
    if (need) {
        std::optional<Tensor<T>> bias = b;
        record(out, "conv2d",
               [x, w, bias, out, N, Cin, H, W, Cout, Ho, Wo, kh, kw, s, p, cpg_in,
                cpg_out]() mutable {
                   if (!out.has_grad()) return;
                   const auto& g = out.grad_vec();
                   const T* gp = g.data();
                   if (x.requires_grad()) {
                       x.grad_vec();  // materialize before the parallel region
                       parallel_for(0, N * Cin, [&](int64_t idx) {
                           const int64_t n = idx / Cin, ci = idx % Cin;
                           const int64_t grp = ci / cpg_in, cig = ci % cpg_in;
                           T* gxp = x.grad_vec().data() + (n * Cin + ci) * H * W;
                           for (int64_t co = grp * cpg_out; co < (grp + 1) * cpg_out; ++co) {
                               const T* wbase = w.data() + (co * cpg_in + cig) * kh * kw;
                               const T* gbase = gp + (n * Cout + co) * Ho * Wo;
                               for (int64_t ky = 0; ky < kh; ++ky)
                                   for (int64_t kx = 0; kx < kw; ++kx) {
                                       const T wv = wbase[ky * kw + kx];
                                       if (wv == T(0)) continue;
                                       for (int64_t oy = 0; oy < Ho; ++oy) {
                                           const int64_t y = oy * s - p + ky;
                                           if (y < 0 || y >= H) continue;
                                           const T* grow = gbase + oy * Wo;
                                           T* gxrow = gxp + y * W;
                                           for (int64_t ox = 0; ox < Wo; ++ox) {
                                               const int64_t xx = ox * s - p + kx;
                                               if (xx < 0 || xx >= W) continue;
                                               gxrow[xx] += grow[ox] * wv;
                                           }
                                       }
                                   }
                           }
                       });
                   }
                   if (w.requires_grad()) {
                       w.grad_vec();
                       parallel_for(0, Cout, [&](int64_t co) {
                           const int64_t grp = co / cpg_out;
                           T* gw = w.grad_vec().data() + co * cpg_in * kh * kw;
                           for (int64_t cig = 0; cig < cpg_in; ++cig) {
                               const int64_t ci = grp * cpg_in + cig;
                               for (int64_t ky = 0; ky < kh; ++ky)
                                   for (int64_t kx = 0; kx < kw; ++kx) {
                                       T acc = T(0);
                                       for (int64_t n = 0; n < N; ++n) {
                                           const T* gbase = gp + (n * Cout + co) * Ho * Wo;
                                           const T* xbase = x.data() + (n * Cin + ci) * H * W;
                                           for (int64_t oy = 0; oy < Ho; ++oy) {
                                               const int64_t y = oy * s - p + ky;
                                               if (y < 0 || y >= H) continue;
                                               const T* grow = gbase + oy * Wo;
                                               const T* xrow = xbase + y * W;
                                               for (int64_t ox = 0; ox < Wo; ++ox) {
                                                   const int64_t xx = ox * s - p + kx;
                                                   if (xx < 0 || xx >= W) continue;
                                                   acc += grow[ox] * xrow[xx];
                                               }
                                           }
                                       }
                                       gw[(cig * kh + ky) * kw + kx] += acc;
                                   }
                           }
                       });
                   }
                   if (bias && bias->requires_grad()) {
                       auto& gb = bias->grad_vec();
                       for (int64_t n = 0; n < N; ++n)
                           for (int64_t co = 0; co < Cout; ++co) {
                               const T* grow = gp + (n * Cout + co) * Ho * Wo;
                               T acc = T(0);
                               for (int64_t i = 0; i < Ho * Wo; ++i) acc += grow[i];
                               gb[static_cast<size_t>(co)] += acc;
                           }
                   }
               });
    }
    return out;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, int stride = 1, int padding = 0,
                 int groups = 1) {
    return conv2d(x, w, std::optional<Tensor<T>>(), stride, padding, groups);
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride = 1,
                 int padding = 0, int groups = 1) {
    return conv2d(x, w, std::optional<Tensor<T>>(b), stride, padding, groups);
}

// ---------------------------------------------------------------------------
// Batched matrix product
// ---------------------------------------------------------------------------

// a[...,M,K] x b[...,K,N] -> [...,M,N]. Leading dims must match, or one
// operand may be rank-2 and is then shared across the other's batches.
template <typename T>
Tensor<T> matmul_batched(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() < 2 || b.rank() < 2)
        throw DimensionError("matmul_batched: operands must be at least rank-2");
    const int64_t M = a.dim(a.rank() - 2), K = a.dim(a.rank() - 1);
    const int64_t Kb = b.dim(b.rank() - 2), Nn = b.dim(b.rank() - 1);
    if (K != Kb)
        throw DimensionError("matmul_batched: inner dims disagree, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    Shape lead_a(a.shape().begin(), a.shape().end() - 2);
    Shape lead_b(b.shape().begin(), b.shape().end() - 2);
    const bool a_bcast = lead_a.empty() && !lead_b.empty();
    const bool b_bcast = lead_b.empty() && !lead_a.empty();
    if (!a_bcast && !b_bcast && lead_a != lead_b)
        throw DimensionError("matmul_batched: batch dims disagree, " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
    const Shape& lead = a_bcast ? lead_b : lead_a;
    const int64_t B = shape_numel(lead);
    Shape out_shape = lead;
    out_shape.push_back(M);
    out_shape.push_back(Nn);
    Tensor<T> out(out_shape);

    parallel_for(0, B, [&](int64_t bi) {
        const T* ap = a.data() + (a_bcast ? 0 : bi * M * K);
        const T* bp = b.data() + (b_bcast ? 0 : bi * K * Nn);
        T* op = out.data() + bi * M * Nn;
        for (int64_t i = 0; i < M; ++i) {
            T* orow = op + i * Nn;
            std::fill_n(orow, Nn, T(0));
            for (int64_t k = 0; k < K; ++k) {
                const T av = ap[i * K + k];
                const T* brow = bp + k * Nn;
                for (int64_t j = 0; j < Nn; ++j) orow[j] += av * brow[j];
            }
        }
    });

    if (recording<T>({&a, &b})) {
        record(out, "matmul_batched", [a, b, out, B, M, K, Nn, a_bcast, b_bcast]() mutable {
            if (!out.has_grad()) return;
            const T* gp = out.grad_vec().data();
            if (a.requires_grad()) {
                auto& ga = a.grad_vec();
                for (int64_t bi = 0; bi < B; ++bi) {
                    const T* gb_ = gp + bi * M * Nn;
                    const T* bp = b.data() + (b_bcast ? 0 : bi * K * Nn);
                    T* gap = ga.data() + (a_bcast ? 0 : bi * M * K);
                    for (int64_t i = 0; i < M; ++i)
                        for (int64_t k = 0; k < K; ++k) {
                            T acc = T(0);
                            const T* grow = gb_ + i * Nn;
                            const T* brow = bp + k * Nn;
                            for (int64_t j = 0; j < Nn; ++j) acc += grow[j] * brow[j];
                            gap[i * K + k] += acc;
                        }
                }
            }
            if (b.requires_grad()) {
                auto& gbv = b.grad_vec();
                for (int64_t bi = 0; bi < B; ++bi) {
                    const T* gb_ = gp + bi * M * Nn;
                    const T* ap = a.data() + (a_bcast ? 0 : bi * M * K);
                    T* gbp = gbv.data() + (b_bcast ? 0 : bi * K * Nn);
                    for (int64_t k = 0; k < K; ++k)
                        for (int64_t i = 0; i < M; ++i) {
                            const T av = ap[i * K + k];
                            const T* grow = gb_ + i * Nn;
                            T* gbrow = gbp + k * Nn;
                            for (int64_t j = 0; j < Nn; ++j) gbrow[j] += av * grow[j];
                        }
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Normalization / softmax
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
    if (axis < 0) axis += x.rank();
    if (axis < 0 || axis >= x.rank())
        throw DimensionError("softmax: axis out of range for " + shape_str(x.shape()));
    const int64_t len = x.dim(axis);
    int64_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= x.dim(i);
    for (int i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
    Tensor<T> out(x.shape());
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t in = 0; in < inner; ++in) {
            const int64_t base = o * len * inner + in;
            T mx = x[base];
            for (int64_t k = 1; k < len; ++k) mx = std::max(mx, x[base + k * inner]);
            T sum = T(0);
            for (int64_t k = 0; k < len; ++k) {
                const T e = std::exp(x[base + k * inner] - mx);
                out[base + k * inner] = e;
                sum += e;
            }
            const T inv = T(1) / sum;
            for (int64_t k = 0; k < len; ++k) out[base + k * inner] *= inv;
        }
    if (recording<T>({&x})) {
        record(out, "softmax", [x, out, outer, inner, len]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            auto& gx = x.grad_vec();
            for (int64_t o = 0; o < outer; ++o)
                for (int64_t in = 0; in < inner; ++in) {
                    const int64_t base = o * len * inner + in;
                    T dot = T(0);
                    for (int64_t k = 0; k < len; ++k)
                        dot += g[static_cast<size_t>(base + k * inner)] * out[base + k * inner];
                    for (int64_t k = 0; k < len; ++k) {
                        const int64_t idx = base + k * inner;
                        gx[static_cast<size_t>(idx)] +=
                            out[idx] * (g[static_cast<size_t>(idx)] - dot);
                    }
                }
        });
    }
    return out;
}

// Layer norm over the channel dimension, per spatial location, followed by a
// per-channel affine (gamma, beta).
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     double eps = 1e-6) {
    if (x.rank() != 4) throw DimensionError("layer_norm: expects [N,C,H,W]");
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (gamma.numel() != C || beta.numel() != C)
        throw DimensionError("layer_norm: affine params must have C elements");
    if (eps <= 0) throw ConfigError("layer_norm: eps must be positive");
    const int64_t plane = H * W;
    Tensor<T> out(x.shape());
    parallel_for(0, N * plane, [&](int64_t idx) {
        const int64_t n = idx / plane, hw = idx % plane;
        const int64_t base = n * C * plane + hw;
        T mean = T(0);
        for (int64_t c = 0; c < C; ++c) mean += x[base + c * plane];
        mean /= static_cast<T>(C);
        T var = T(0);
        for (int64_t c = 0; c < C; ++c) {
            const T d = x[base + c * plane] - mean;
            var += d * d;
        }
        var /= static_cast<T>(C);
        const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
        for (int64_t c = 0; c < C; ++c) {
            const T xh = (x[base + c * plane] - mean) * inv;
            out[base + c * plane] = gamma[c] * xh + beta[c];
        }
    });
    if (recording<T>({&x, &gamma, &beta})) {
        record(out, "layer_norm", [x, gamma, beta, out, N, C, plane, eps]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            const bool need_x = x.requires_grad();
            if (need_x) x.grad_vec();
            auto* gg = gamma.requires_grad() ? &gamma.grad_vec() : nullptr;
            auto* gb = beta.requires_grad() ? &beta.grad_vec() : nullptr;
            for (int64_t n = 0; n < N; ++n)
                for (int64_t hw = 0; hw < plane; ++hw) {
                    const int64_t base = n * C * plane + hw;
                    T mean = T(0);
                    for (int64_t c = 0; c < C; ++c) mean += x[base + c * plane];
                    mean /= static_cast<T>(C);
                    T var = T(0);
                    for (int64_t c = 0; c < C; ++c) {
                        const T d = x[base + c * plane] - mean;
                        var += d * d;
                    }
                    var /= static_cast<T>(C);
                    const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
                    T mean_d = T(0), mean_dxh = T(0);
                    for (int64_t c = 0; c < C; ++c) {
                        const int64_t idx = base + c * plane;
                        const T xh = (x[idx] - mean) * inv;
                        const T d = g[static_cast<size_t>(idx)] * gamma[c];
                        mean_d += d;
                        mean_dxh += d * xh;
                        if (gg) (*gg)[static_cast<size_t>(c)] += g[static_cast<size_t>(idx)] * xh;
                        if (gb) (*gb)[static_cast<size_t>(c)] += g[static_cast<size_t>(idx)];
                    }
                    mean_d /= static_cast<T>(C);
                    mean_dxh /= static_cast<T>(C);
                    if (need_x) {
                        auto& gx = x.grad_vec();
                        for (int64_t c = 0; c < C; ++c) {
                            const int64_t idx = base + c * plane;
                            const T xh = (x[idx] - mean) * inv;
                            const T d = g[static_cast<size_t>(idx)] * gamma[c];
                            gx[static_cast<size_t>(idx)] += inv * (d - mean_d - xh * mean_dxh);
                        }
                    }
                }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pixel shuffle / unshuffle, unfold
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r) {
    if (x.rank() != 4) throw DimensionError("pixel_unshuffle: expects [N,C,H,W]");
    if (r < 1) throw ConfigError("pixel_unshuffle: factor must be >= 1");
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % r != 0 || W % r != 0)
        throw DimensionError("pixel_unshuffle: extents " + shape_str(x.shape()) +
                             " not divisible by " + std::to_string(r));
    const int64_t Ho = H / r, Wo = W / r;
    Tensor<T> out({N, C * r * r, Ho, Wo});
    parallel_for(0, N * C, [&](int64_t idx) {
        const int64_t n = idx / C, c = idx % C;
        for (int64_t dy = 0; dy < r; ++dy)
            for (int64_t dx = 0; dx < r; ++dx) {
                const int64_t co = c * r * r + dy * r + dx;
                for (int64_t y = 0; y < Ho; ++y) {
                    const T* src = x.data() + ((n * C + c) * H + y * r + dy) * W + dx;
                    T* dst = out.data() + ((n * C * r * r + co) * Ho + y) * Wo;
                    for (int64_t xx = 0; xx < Wo; ++xx) dst[xx] = src[xx * r];
                }
            }
    });
    if (recording<T>({&x})) {
        record(out, "pixel_unshuffle", [x, out, N, C, H, W, Ho, Wo, r]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            auto& gx = x.grad_vec();
            for (int64_t n = 0; n < N; ++n)
                for (int64_t c = 0; c < C; ++c)
                    for (int64_t dy = 0; dy < r; ++dy)
                        for (int64_t dx = 0; dx < r; ++dx) {
                            const int64_t co = c * r * r + dy * r + dx;
                            for (int64_t y = 0; y < Ho; ++y)
                                for (int64_t xx = 0; xx < Wo; ++xx)
                                    gx[static_cast<size_t>(((n * C + c) * H + y * r + dy) * W +
                                                           xx * r + dx)] +=
                                        g[static_cast<size_t>(((n * C * r * r + co) * Ho + y) * Wo +
                                                              xx)];
                        }
        });
    }
    return out;
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
    if (x.rank() != 4) throw DimensionError("pixel_shuffle: expects [N,C,H,W]");
    if (r < 1) throw ConfigError("pixel_shuffle: factor must be >= 1");
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (C % (static_cast<int64_t>(r) * r) != 0)
        throw DimensionError("pixel_shuffle: channels " + std::to_string(C) +
                             " not divisible by r^2=" + std::to_string(r * r));
    const int64_t Co = C / (r * r), Ho = H * r, Wo = W * r;
    Tensor<T> out({N, Co, Ho, Wo});
    parallel_for(0, N * Co, [&](int64_t idx) {
        const int64_t n = idx / Co, c = idx % Co;
        for (int64_t dy = 0; dy < r; ++dy)
            for (int64_t dx = 0; dx < r; ++dx) {
                const int64_t ci = c * r * r + dy * r + dx;
                for (int64_t y = 0; y < H; ++y) {
                    const T* src = x.data() + ((n * C + ci) * H + y) * W;
                    T* dst = out.data() + ((n * Co + c) * Ho + y * r + dy) * Wo + dx;
                    for (int64_t xx = 0; xx < W; ++xx) dst[xx * r] = src[xx];
                }
            }
    });
    if (recording<T>({&x})) {
        record(out, "pixel_shuffle", [x, out, N, C, H, W, Co, Ho, Wo, r]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            auto& gx = x.grad_vec();
            for (int64_t n = 0; n < N; ++n)
                for (int64_t c = 0; c < Co; ++c)
                    for (int64_t dy = 0; dy < r; ++dy)
                        for (int64_t dx = 0; dx < r; ++dx) {
                            const int64_t ci = c * r * r + dy * r + dx;
                            for (int64_t y = 0; y < H; ++y)
                                for (int64_t xx = 0; xx < W; ++xx)
                                    gx[static_cast<size_t>(((n * C + ci) * H + y) * W + xx)] +=
                                        g[static_cast<size_t>(((n * Co + c) * Ho + y * r + dy) *
                                                                  Wo +
                                                              xx * r + dx)];
                        }
        });
    }
    return out;
}

// im2col with odd kernel, stride 1, zero padding (k-1)/2: column j holds the
// kxk patch centered at spatial index j.
template <typename T>
Tensor<T> unfold(const Tensor<T>& x, int k) {
    if (x.rank() != 4) throw DimensionError("unfold: expects [N,C,H,W]");
    if (k < 1 || k % 2 == 0) throw ConfigError("unfold: kernel must be odd, got " + std::to_string(k));
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t pad = (k - 1) / 2, L = H * W;
    Tensor<T> out({N, C * k * k, L});
    parallel_for(0, N * C, [&](int64_t idx) {
        const int64_t n = idx / C, c = idx % C;
        for (int64_t ky = 0; ky < k; ++ky)
            for (int64_t kx = 0; kx < k; ++kx) {
                const int64_t row = c * k * k + ky * k + kx;
                T* dst = out.data() + (n * C * k * k + row) * L;
                for (int64_t y = 0; y < H; ++y) {
                    const int64_t sy = y + ky - pad;
                    for (int64_t xx = 0; xx < W; ++xx) {
                        const int64_t sx = xx + kx - pad;
                        dst[y * W + xx] = (sy >= 0 && sy < H && sx >= 0 && sx < W)
                                              ? x[((n * C + c) * H + sy) * W + sx]
                                              : T(0);
                    }
                }
            }
    });
    if (recording<T>({&x})) {
        record(out, "unfold", [x, out, N, C, H, W, k, pad, L]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            auto& gx = x.grad_vec();
            for (int64_t n = 0; n < N; ++n)
                for (int64_t c = 0; c < C; ++c)
                    for (int64_t ky = 0; ky < k; ++ky)
                        for (int64_t kx = 0; kx < k; ++kx) {
                            const int64_t row = c * k * k + ky * k + kx;
                            const T* gsrc = g.data() + (n * C * k * k + row) * L;
                            for (int64_t y = 0; y < H; ++y) {
                                const int64_t sy = y + ky - pad;
                                if (sy < 0 || sy >= H) continue;
                                for (int64_t xx = 0; xx < W; ++xx) {
                                    const int64_t sx = xx + kx - pad;
                                    if (sx < 0 || sx >= W) continue;
                                    gx[static_cast<size_t>(((n * C + c) * H + sy) * W + sx)] +=
                                        gsrc[y * W + xx];
                                }
                            }
                        }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pooling / resampling
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
    if (x.rank() != 4) throw DimensionError("global_avg_pool: expects [N,C,H,W]");
    const int64_t N = x.dim(0), C = x.dim(1), plane = x.dim(2) * x.dim(3);
    Tensor<T> out({N, C, 1, 1});
    for (int64_t i = 0; i < N * C; ++i) {
        const T* xs = x.data() + i * plane;
        T acc = T(0);
        for (int64_t j = 0; j < plane; ++j) acc += xs[j];
        out[i] = acc / static_cast<T>(plane);
    }
    if (recording<T>({&x})) {
        record(out, "global_avg_pool", [x, out, N, C, plane]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            auto& gx = x.grad_vec();
            for (int64_t i = 0; i < N * C; ++i) {
                const T gv = g[static_cast<size_t>(i)] / static_cast<T>(plane);
                for (int64_t j = 0; j < plane; ++j) gx[static_cast<size_t>(i * plane + j)] += gv;
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor) {
    if (x.rank() != 4) throw DimensionError("upsample_nearest: expects [N,C,H,W]");
    if (factor < 1) throw ConfigError("upsample_nearest: factor must be >= 1");
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t Ho = H * factor, Wo = W * factor;
    Tensor<T> out({N, C, Ho, Wo});
    parallel_for(0, N * C, [&](int64_t idx) {
        const T* src = x.data() + idx * H * W;
        T* dst = out.data() + idx * Ho * Wo;
        for (int64_t y = 0; y < Ho; ++y) {
            const T* srow = src + (y / factor) * W;
            T* drow = dst + y * Wo;
            for (int64_t xx = 0; xx < Wo; ++xx) drow[xx] = srow[xx / factor];
        }
    });
    if (recording<T>({&x})) {
        record(out, "upsample_nearest", [x, out, N, C, H, W, Ho, Wo, factor]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            auto& gx = x.grad_vec();
            for (int64_t idx = 0; idx < N * C; ++idx)
                for (int64_t y = 0; y < Ho; ++y)
                    for (int64_t xx = 0; xx < Wo; ++xx)
                        gx[static_cast<size_t>(idx * H * W + (y / factor) * W + xx / factor)] +=
                            g[static_cast<size_t>(idx * Ho * Wo + y * Wo + xx)];
        });
    }
    return out;
}

// Non-overlapping box average with kernel = stride = k.
template <typename T>
Tensor<T> avg_pool(const Tensor<T>& x, int k) {
    if (x.rank() != 4) throw DimensionError("avg_pool: expects [N,C,H,W]");
    if (k < 1) throw ConfigError("avg_pool: kernel must be >= 1");
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % k != 0 || W % k != 0)
        throw DimensionError("avg_pool: extents " + shape_str(x.shape()) +
                             " not divisible by " + std::to_string(k));
    const int64_t Ho = H / k, Wo = W / k;
    Tensor<T> out({N, C, Ho, Wo});
    const T inv = T(1) / static_cast<T>(k * k);
    for (int64_t idx = 0; idx < N * C; ++idx) {
        const T* src = x.data() + idx * H * W;
        T* dst = out.data() + idx * Ho * Wo;
        for (int64_t y = 0; y < Ho; ++y)
            for (int64_t xx = 0; xx < Wo; ++xx) {
                T acc = T(0);
                for (int64_t dy = 0; dy < k; ++dy)
                    for (int64_t dx = 0; dx < k; ++dx)
                        acc += src[(y * k + dy) * W + xx * k + dx];
                dst[y * Wo + xx] = acc * inv;
            }
    }
    if (recording<T>({&x})) {
        record(out, "avg_pool", [x, out, N, C, H, W, Ho, Wo, k, inv]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            auto& gx = x.grad_vec();
            for (int64_t idx = 0; idx < N * C; ++idx)
                for (int64_t y = 0; y < Ho; ++y)
                    for (int64_t xx = 0; xx < Wo; ++xx) {
                        const T gv = g[static_cast<size_t>(idx * Ho * Wo + y * Wo + xx)] * inv;
                        for (int64_t dy = 0; dy < k; ++dy)
                            for (int64_t dx = 0; dx < k; ++dx)
                                gx[static_cast<size_t>(idx * H * W + (y * k + dy) * W + xx * k +
                                                       dx)] += gv;
                    }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Column cosine similarity
// ---------------------------------------------------------------------------

// u, v: [N,K,M]; per column m, w = <u,v> / (|u||v| + eps). Output [N,1,M].
template <typename T>
Tensor<T> cosine_similarity_cols(const Tensor<T>& u, const Tensor<T>& v, double eps = 1e-8) {
    require_same_shape(u, v, "cosine_similarity_cols");
    if (u.rank() != 3) throw DimensionError("cosine_similarity_cols: expects [N,K,M]");
    const int64_t N = u.dim(0), K = u.dim(1), M = u.dim(2);
    Tensor<T> out({N, 1, M});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t m = 0; m < M; ++m) {
            T dot = T(0), nu = T(0), nv = T(0);
            const int64_t base = n * K * M + m;
            for (int64_t k = 0; k < K; ++k) {
                const T a = u[base + k * M], b = v[base + k * M];
                dot += a * b;
                nu += a * a;
                nv += b * b;
            }
            out[n * M + m] =
                dot / (std::sqrt(nu) * std::sqrt(nv) + static_cast<T>(eps));
        }
    if (recording<T>({&u, &v})) {
        record(out, "cosine_similarity_cols", [u, v, out, N, K, M, eps]() mutable {
            if (!out.has_grad()) return;
            const auto& g = out.grad_vec();
            const bool nu_req = u.requires_grad(), nv_req = v.requires_grad();
            if (nu_req) u.grad_vec();
            if (nv_req) v.grad_vec();
            for (int64_t n = 0; n < N; ++n)
                for (int64_t m = 0; m < M; ++m) {
                    const T gv = g[static_cast<size_t>(n * M + m)];
                    if (gv == T(0)) continue;
                    const int64_t base = n * K * M + m;
                    T dot = T(0), su = T(0), sv = T(0);
                    for (int64_t k = 0; k < K; ++k) {
                        const T a = u[base + k * M], b = v[base + k * M];
                        dot += a * b;
                        su += a * a;
                        sv += b * b;
                    }
                    const T nu = std::sqrt(su), nv = std::sqrt(sv);
                    const T den = nu * nv + static_cast<T>(eps);
                    const T w = dot / den;
                    // d w / d u_k = v_k/den - w * nv * u_k / (nu * den)
                    const T cu = (nu > T(0)) ? w * nv / (nu * den) : T(0);
                    const T cv = (nv > T(0)) ? w * nu / (nv * den) : T(0);
                    for (int64_t k = 0; k < K; ++k) {
                        const T a = u[base + k * M], b = v[base + k * M];
                        if (nu_req)
                            u.grad_vec()[static_cast<size_t>(base + k * M)] +=
                                gv * (b / den - cu * a);
                        if (nv_req)
                            v.grad_vec()[static_cast<size_t>(base + k * M)] +=
                                gv * (a / den - cv * b);
                    }
                }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum_all(const Tensor<T>& x) {
    T acc = T(0);
    for (int64_t i = 0; i < x.numel(); ++i) acc += x[i];
    Tensor<T> out = Tensor<T>::scalar(acc);
    if (recording<T>({&x})) {
        record(out, "sum_all", [x, out]() mutable {
            if (!out.has_grad()) return;
            const T gv = out.grad_vec()[0];
            auto& gx = x.grad_vec();
            for (int64_t i = 0; i < x.numel(); ++i) gx[static_cast<size_t>(i)] += gv;
        });
    }
    return out;
}

// Mean absolute difference. Subgradient at zero is taken as zero.
template <typename T>
Tensor<T> l1_diff(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "l1_diff");
    const int64_t n = a.numel();
    T acc = T(0);
    for (int64_t i = 0; i < n; ++i) acc += std::abs(a[i] - b[i]);
    Tensor<T> out = Tensor<T>::scalar(acc / static_cast<T>(n));
    if (recording<T>({&a, &b})) {
        record(out, "l1_diff", [a, b, out, n]() mutable {
            if (!out.has_grad()) return;
            const T gv = out.grad_vec()[0] / static_cast<T>(n);
            const bool ra = a.requires_grad(), rb = b.requires_grad();
            if (ra) a.grad_vec();
            if (rb) b.grad_vec();
            for (int64_t i = 0; i < n; ++i) {
                const T d = a[i] - b[i];
                const T s = d > T(0) ? gv : (d < T(0) ? -gv : T(0));
                if (ra) a.grad_vec()[static_cast<size_t>(i)] += s;
                if (rb) b.grad_vec()[static_cast<size_t>(i)] -= s;
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

// Throws NumericError naming `where` if any value is non-finite. Pass-through.
template <typename T>
const Tensor<T>& check_finite(const Tensor<T>& x, const std::string& where) {
    for (int64_t i = 0; i < x.numel(); ++i)
        if (!std::isfinite(static_cast<double>(x[i])))
            throw NumericError("non-finite value in " + where);
    return x;
}

}  // namespace ops
}  // namespace uhddip
