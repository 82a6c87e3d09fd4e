#pragma once

#include <vector>

#include "uhddip/tensor.hpp"

namespace uhddip {

// H x W x C raster, float values in [0,1], channel-interleaved rows.
// The working unit of the synthesis, prior and metric pipelines.
struct ImageBuffer {
    int h = 0, w = 0, c = 0;
    std::vector<float> data;

    ImageBuffer() = default;
    ImageBuffer(int h_, int w_, int c_, float fill = 0.0f)
        : h(h_), w(w_), c(c_),
          data(static_cast<size_t>(h_) * w_ * c_, fill) {}

    bool empty() const { return data.empty(); }
    int64_t pixels() const { return static_cast<int64_t>(h) * w; }

    float& at(int y, int x, int ch) {
        return data[(static_cast<size_t>(y) * w + x) * c + ch];
    }
    float at(int y, int x, int ch) const {
        return data[(static_cast<size_t>(y) * w + x) * c + ch];
    }

    bool same_dims(const ImageBuffer& o) const { return h == o.h && w == o.w && c == o.c; }
};

// Rec. 601 luma; pass-through for single-channel input.
ImageBuffer luminance(const ImageBuffer& img);

void clamp01(ImageBuffer& img);

ImageBuffer crop(const ImageBuffer& img, int y0, int x0, int ch, int cw);

// Horizontal mirror. When the image encodes unit normals as (n+1)/2, the
// x component must flip sign, i.e. channel 0 maps to 1-v.
ImageBuffer flip_horizontal(const ImageBuffer& img, bool is_normal_map = false);

// Replicate-pad on the right/bottom to reach (th, tw).
ImageBuffer pad_edge(const ImageBuffer& img, int th, int tw);

// Separable Gaussian on a single-channel image, kernel half-width
// ceil(3*sigma), renormalized at the borders so constants are preserved.
ImageBuffer gaussian_smooth(const ImageBuffer& img, double sigma);

// [1, C, H, W] tensor from an image and back.
Tensor<float> image_to_tensor(const ImageBuffer& img);
ImageBuffer tensor_to_image(const Tensor<float>& t, bool clamp = true);

}  // namespace uhddip
