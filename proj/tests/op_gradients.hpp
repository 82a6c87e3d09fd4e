#pragma once

// Finite-difference gradient suite over every registered autodiff operator,
// shared by the unit tests and the acceptance runner. All checks run in f64
// on micro shapes with inputs in [-1, 1].

#include <string>
#include <utility>
#include <vector>

#include "oracles.hpp"
#include "uhddip/fft.hpp"
#include "uhddip/ops.hpp"
#include "uhddip/rng.hpp"

namespace gradsuite {

using uhddip::Rng;
using uhddip::Shape;
using uhddip::Tensor;
namespace ops = uhddip::ops;

struct OpResult {
    std::string name;
    double max_err;
};

inline std::vector<OpResult> run_op_suite() {
    std::vector<OpResult> results;
    Rng rng(20240517);
    auto U = [&](Shape s) { return Tensor<double>::uniform(std::move(s), rng); };

    auto push = [&](const std::string& name, std::vector<Tensor<double>*> inputs,
                    std::function<Tensor<double>()> f) {
        auto r = oracle::check_gradients(std::move(inputs), std::move(f));
        results.push_back({name, r.max_err});
    };

    // scalarize through a fixed random weighting so every output element
    // contributes to the loss
    auto weighted_sum = [](const Tensor<double>& y, const Tensor<double>& wgt) {
        return ops::sum_all(ops::mul(y, wgt));
    };

    {
        auto a = U({2, 3, 4, 4}), b = U({2, 3, 4, 4}), w = U({2, 3, 4, 4});
        push("add", {&a, &b}, [&] { return weighted_sum(ops::add(a, b), w); });
        push("sub", {&a, &b}, [&] { return weighted_sum(ops::sub(a, b), w); });
        push("mul", {&a, &b}, [&] { return weighted_sum(ops::mul(a, b), w); });
        push("scale", {&a}, [&] { return weighted_sum(ops::scale(a, -1.7), w); });
        push("sigmoid", {&a}, [&] { return weighted_sum(ops::sigmoid(a), w); });
        push("gelu", {&a}, [&] { return weighted_sum(ops::gelu(a), w); });
        push("reshape", {&a}, [&] {
            return ops::sum_all(ops::mul(ops::reshape(a, {2, 48}), ops::reshape(w, {2, 48})));
        });
    }
    {
        auto a = U({1, 2, 3, 3}), b = U({1, 3, 3, 3}), w = U({1, 5, 3, 3});
        push("concat_channels", {&a, &b},
             [&] { return weighted_sum(ops::concat_channels(a, b), w); });
    }
    {
        auto x = U({1, 4, 3, 3}), w1 = U({1, 2, 3, 3}), w2 = U({1, 2, 3, 3});
        push("chunk2_channels", {&x}, [&] {
            auto halves = ops::chunk2_channels(x);
            return ops::add(weighted_sum(halves.first, w1), weighted_sum(halves.second, w2));
        });
    }
    {
        auto x = U({2, 3, 4, 4}), s = U({3}), w = U({2, 3, 4, 4});
        push("channel_scale", {&x, &s}, [&] { return weighted_sum(ops::channel_scale(x, s), w); });
    }
    {
        auto x = U({2, 3, 4, 4}), m = U({2, 1, 4, 4}), w = U({2, 3, 4, 4});
        push("mul_broadcast_map", {&x, &m},
             [&] { return weighted_sum(ops::mul_broadcast(x, m), w); });
        auto c = U({2, 3, 1, 1});
        push("mul_broadcast_channel", {&x, &c},
             [&] { return weighted_sum(ops::mul_broadcast(x, c), w); });
    }
    {
        auto x = U({1, 4, 5, 5}), w = U({3, 4, 3, 3}), b = U({3});
        auto wsum = U({1, 3, 5, 5});
        push("conv2d", {&x, &w, &b},
             [&] { return weighted_sum(ops::conv2d(x, w, b, 1, 1, 1), wsum); });
    }
    {
        auto x = U({1, 4, 6, 6}), w = U({6, 2, 3, 3}), b = U({6});
        auto wsum = U({1, 6, 3, 3});
        push("conv2d_stride2_groups2", {&x, &w, &b},
             [&] { return weighted_sum(ops::conv2d(x, w, b, 2, 1, 2), wsum); });
    }
    {
        auto x = U({1, 4, 4, 4}), w = U({4, 1, 3, 3});
        auto wsum = U({1, 4, 4, 4});
        push("conv2d_depthwise", {&x, &w},
             [&] { return weighted_sum(ops::conv2d(x, w, 1, 1, 4), wsum); });
    }
    {
        auto a = U({3, 4, 5}), b = U({3, 5, 2}), w = U({3, 4, 2});
        push("matmul_batched", {&a, &b},
             [&] { return weighted_sum(ops::matmul_batched(a, b), w); });
    }
    {
        auto a = U({2, 3, 4, 5}), b = U({5, 3}), w = U({2, 3, 4, 3});
        push("matmul_broadcast_rhs", {&a, &b},
             [&] { return weighted_sum(ops::matmul_batched(a, b), w); });
    }
    {
        auto x = U({2, 5, 3}), w = U({2, 5, 3});
        push("softmax", {&x}, [&] { return weighted_sum(ops::softmax(x, 1), w); });
    }
    {
        auto x = U({1, 4, 3, 3}), g = U({4}), b = U({4}), w = U({1, 4, 3, 3});
        push("layer_norm", {&x, &g, &b},
             [&] { return weighted_sum(ops::layer_norm(x, g, b, 1e-6), w); });
    }
    {
        auto x = U({1, 2, 4, 4}), w = U({1, 8, 2, 2});
        push("pixel_unshuffle", {&x},
             [&] { return weighted_sum(ops::pixel_unshuffle(x, 2), w); });
    }
    {
        auto x = U({1, 8, 2, 2}), w = U({1, 2, 4, 4});
        push("pixel_shuffle", {&x}, [&] { return weighted_sum(ops::pixel_shuffle(x, 2), w); });
    }
    {
        auto x = U({1, 2, 4, 4}), w = U({1, 18, 16});
        push("unfold", {&x}, [&] { return weighted_sum(ops::unfold(x, 3), w); });
    }
    {
        auto x = U({2, 3, 4, 4}), w = U({2, 3, 1, 1});
        push("global_avg_pool", {&x}, [&] { return weighted_sum(ops::global_avg_pool(x), w); });
    }
    {
        auto x = U({1, 2, 3, 3}), w = U({1, 2, 6, 6});
        push("upsample_nearest", {&x},
             [&] { return weighted_sum(ops::upsample_nearest(x, 2), w); });
    }
    {
        auto x = U({1, 2, 4, 4}), w = U({1, 2, 2, 2});
        push("avg_pool", {&x}, [&] { return weighted_sum(ops::avg_pool(x, 2), w); });
    }
    {
        // keep columns away from zero so the cosine stays smooth
        auto u = U({1, 4, 5}), v = U({1, 4, 5}), w = U({1, 1, 5});
        for (int64_t i = 0; i < u.numel(); ++i) {
            u[i] += (u[i] >= 0 ? 0.5 : -0.5);
            v[i] += (v[i] >= 0 ? 0.5 : -0.5);
        }
        push("cosine_similarity_cols", {&u, &v},
             [&] { return weighted_sum(ops::cosine_similarity_cols(u, v, 1e-8), w); });
    }
    {
        auto x = U({2, 3, 2, 2});
        push("sum_all", {&x}, [&] { return ops::sum_all(x); });
    }
    {
        // keep |a-b| away from the kink at zero
        auto a = U({2, 8}), b = U({2, 8});
        for (int64_t i = 0; i < a.numel(); ++i) b[i] = a[i] + (b[i] >= 0 ? 0.4 : -0.4) + b[i] * 0.1;
        push("l1_diff", {&a, &b}, [&] { return ops::l1_diff(a, b); });
    }
    {
        auto x = U({2, 4, 4}), wr = U({2, 4, 4}), wi = U({2, 4, 4});
        push("fft2", {&x}, [&] {
            auto f = ops::fft2(x);
            return ops::add(weighted_sum(f.re, wr), weighted_sum(f.im, wi));
        });
    }
    return results;
}

}  // namespace gradsuite
