#include "uhddip/image.hpp"

#include <algorithm>
#include <cmath>

#include "uhddip/errors.hpp"

namespace uhddip {

ImageBuffer luminance(const ImageBuffer& img) {
    if (img.empty()) throw UsageError("luminance: empty image");
    if (img.c == 1) return img;
    if (img.c != 3) throw UsageError("luminance: expects 1 or 3 channels");
    ImageBuffer out(img.h, img.w, 1);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            out.at(y, x, 0) = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) +
                              0.114f * img.at(y, x, 2);
    return out;
}

void clamp01(ImageBuffer& img) {
    for (float& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
}

ImageBuffer crop(const ImageBuffer& img, int y0, int x0, int ch, int cw) {
    if (y0 < 0 || x0 < 0 || y0 + ch > img.h || x0 + cw > img.w)
        throw DimensionError("crop: window outside image");
    ImageBuffer out(ch, cw, img.c);
    for (int y = 0; y < ch; ++y)
        for (int x = 0; x < cw; ++x)
            for (int k = 0; k < img.c; ++k) out.at(y, x, k) = img.at(y0 + y, x0 + x, k);
    return out;
}

ImageBuffer flip_horizontal(const ImageBuffer& img, bool is_normal_map) {
    ImageBuffer out(img.h, img.w, img.c);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int k = 0; k < img.c; ++k) {
                float v = img.at(y, img.w - 1 - x, k);
                if (is_normal_map && k == 0) v = 1.0f - v;
                out.at(y, x, k) = v;
            }
    return out;
}

ImageBuffer pad_edge(const ImageBuffer& img, int th, int tw) {
    if (th < img.h || tw < img.w) throw DimensionError("pad_edge: target smaller than image");
    ImageBuffer out(th, tw, img.c);
    for (int y = 0; y < th; ++y) {
        const int sy = std::min(y, img.h - 1);
        for (int x = 0; x < tw; ++x) {
            const int sx = std::min(x, img.w - 1);
            for (int k = 0; k < img.c; ++k) out.at(y, x, k) = img.at(sy, sx, k);
        }
    }
    return out;
}

ImageBuffer gaussian_smooth(const ImageBuffer& img, double sigma) {
    if (img.c != 1) throw UsageError("gaussian_smooth: expects a single-channel image");
    if (sigma <= 0) return img;
    const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(static_cast<size_t>(2 * half + 1));
    double sum = 0;
    for (int i = -half; i <= half; ++i) {
        k[static_cast<size_t>(i + half)] = std::exp(-0.5 * (i * i) / (sigma * sigma));
        sum += k[static_cast<size_t>(i + half)];
    }
    for (double& v : k) v /= sum;

    ImageBuffer tmp(img.h, img.w, 1), out(img.h, img.w, 1);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            double acc = 0, wsum = 0;
            for (int i = -half; i <= half; ++i) {
                const int xx = x + i;
                if (xx < 0 || xx >= img.w) continue;
                acc += k[static_cast<size_t>(i + half)] * img.at(y, xx, 0);
                wsum += k[static_cast<size_t>(i + half)];
            }
            tmp.at(y, x, 0) = static_cast<float>(acc / wsum);
        }
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            double acc = 0, wsum = 0;
            for (int i = -half; i <= half; ++i) {
                const int yy = y + i;
                if (yy < 0 || yy >= img.h) continue;
                acc += k[static_cast<size_t>(i + half)] * tmp.at(yy, x, 0);
                wsum += k[static_cast<size_t>(i + half)];
            }
            out.at(y, x, 0) = static_cast<float>(acc / wsum);
        }
    return out;
}

Tensor<float> image_to_tensor(const ImageBuffer& img) {
    if (img.empty()) throw UsageError("image_to_tensor: empty image");
    Tensor<float> t({1, img.c, img.h, img.w});
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int k = 0; k < img.c; ++k) t.at(0, k, y, x) = img.at(y, x, k);
    return t;
}

ImageBuffer tensor_to_image(const Tensor<float>& t, bool clamp) {
    if (t.rank() != 4 || t.dim(0) != 1)
        throw DimensionError("tensor_to_image: expects [1,C,H,W], got " + shape_str(t.shape()));
    ImageBuffer img(static_cast<int>(t.dim(2)), static_cast<int>(t.dim(3)),
                    static_cast<int>(t.dim(1)));
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int k = 0; k < img.c; ++k) {
                float v = t.at(0, k, y, x);
                if (clamp) v = std::clamp(v, 0.0f, 1.0f);
                img.at(y, x, k) = v;
            }
    return img;
}

}  // namespace uhddip
