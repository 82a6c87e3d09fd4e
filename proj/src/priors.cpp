#include "uhddip/priors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

#include "uhddip/errors.hpp"
#include "uhddip/png_io.hpp"

namespace uhddip {
namespace priors {

namespace {

inline float px_clamped(const ImageBuffer& img, int y, int x) {
    y = std::clamp(y, 0, img.h - 1);
    x = std::clamp(x, 0, img.w - 1);
    return img.at(y, x, 0);
}

void sobel(const ImageBuffer& lum, std::vector<float>& gx, std::vector<float>& gy) {
    const int h = lum.h, w = lum.w;
    gx.assign(static_cast<size_t>(h) * w, 0.0f);
    gy.assign(static_cast<size_t>(h) * w, 0.0f);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const float tl = px_clamped(lum, y - 1, x - 1), tc = px_clamped(lum, y - 1, x),
                        tr = px_clamped(lum, y - 1, x + 1), ml = px_clamped(lum, y, x - 1),
                        mr = px_clamped(lum, y, x + 1), bl = px_clamped(lum, y + 1, x - 1),
                        bc = px_clamped(lum, y + 1, x), br = px_clamped(lum, y + 1, x + 1);
            gx[static_cast<size_t>(y) * w + x] = (tr + 2 * mr + br) - (tl + 2 * ml + bl);
            gy[static_cast<size_t>(y) * w + x] = (bl + 2 * bc + br) - (tl + 2 * tc + tr);
        }
}

}  // namespace

ImageBuffer canny(const ImageBuffer& img, const CannyOptions& opt) {
    if (img.empty()) throw UsageError("canny: empty image");
    if (opt.sigma <= 0) throw UsageError("canny: sigma must be positive");
    if (!(opt.low_ratio > 0 && opt.low_ratio < opt.high_ratio && opt.high_ratio <= 1.0))
        throw UsageError("canny: need 0 < low_ratio < high_ratio <= 1");

    const ImageBuffer smooth = gaussian_smooth(luminance(img), opt.sigma);
    const int h = img.h, w = img.w;
    std::vector<float> gx, gy;
    sobel(smooth, gx, gy);

    std::vector<float> mag(static_cast<size_t>(h) * w);
    float max_mag = 0.0f;
    for (size_t i = 0; i < mag.size(); ++i) {
        mag[i] = std::hypot(gx[i], gy[i]);
        max_mag = std::max(max_mag, mag[i]);
    }
    ImageBuffer out(h, w, 1);
    if (max_mag <= 0.0f) return out;  // constant image: no edges

    // non-maximum suppression along the quantized gradient direction
    std::vector<float> thin(static_cast<size_t>(h) * w, 0.0f);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            if (mag[i] == 0.0f) continue;
            const float angle = std::atan2(gy[i], gx[i]);
            // sectors: 0 = E/W, 1 = NE/SW, 2 = N/S, 3 = NW/SE
            const int sector =
                ((static_cast<int>(std::lround(angle / 0.7853981633974483)) % 4) + 4) % 4;
            static const int dy[4] = {0, 1, 1, 1};
            static const int dx[4] = {1, 1, 0, -1};
            const int y1 = y + dy[sector], x1 = x + dx[sector];
            const int y2 = y - dy[sector], x2 = x - dx[sector];
            const float m1 = (y1 >= 0 && y1 < h && x1 >= 0 && x1 < w)
                                 ? mag[static_cast<size_t>(y1) * w + x1]
                                 : 0.0f;
            const float m2 = (y2 >= 0 && y2 < h && x2 >= 0 && x2 < w)
                                 ? mag[static_cast<size_t>(y2) * w + x2]
                                 : 0.0f;
            if (mag[i] >= m1 && mag[i] >= m2) thin[i] = mag[i];
        }

    const float high = static_cast<float>(opt.high_ratio) * max_mag;
    const float low = static_cast<float>(opt.low_ratio) * max_mag;

    // hysteresis: strong pixels seed a flood fill through weak ones
    std::vector<uint8_t> state(static_cast<size_t>(h) * w, 0);  // 1 weak, 2 strong
    std::vector<int> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            if (thin[i] >= high) {
                state[i] = 2;
                stack.push_back(static_cast<int>(i));
            } else if (thin[i] >= low) {
                state[i] = 1;
            }
        }
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        const int y = i / w, x = i % w;
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int yy = y + dy, xx = x + dx;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                const size_t j = static_cast<size_t>(yy) * w + xx;
                if (state[j] == 1) {
                    state[j] = 2;
                    stack.push_back(static_cast<int>(j));
                }
            }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            if (state[i] == 2)
                out.at(y, x, 0) = opt.soft ? std::min(1.0f, thin[i] / max_mag) : 1.0f;
        }
    return out;
}

ImageBuffer normal_from_heightfield(const ImageBuffer& img) {
    if (img.empty()) throw UsageError("normal_from_heightfield: empty image");
    const ImageBuffer lum = luminance(img);
    std::vector<float> gx, gy;
    sobel(lum, gx, gy);
    ImageBuffer out(img.h, img.w, 3);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            const size_t i = static_cast<size_t>(y) * img.w + x;
            // Sobel responds 8x to a unit slope; undo that
            const double dx = gx[i] / 8.0, dy = gy[i] / 8.0;
            double nx = -dx, ny = -dy, nz = 1.0;
            const double inv = 1.0 / std::sqrt(nx * nx + ny * ny + nz * nz);
            nx *= inv;
            ny *= inv;
            nz *= inv;
            out.at(y, x, 0) = static_cast<float>((nx + 1.0) * 0.5);
            out.at(y, x, 1) = static_cast<float>((ny + 1.0) * 0.5);
            out.at(y, x, 2) = static_cast<float>((nz + 1.0) * 0.5);
        }
    return out;
}

ImageBuffer load_normal_map(const std::string& path, int th, int tw) {
    ImageBuffer img = io::read_png(path);
    if (img.c != 3) throw IngestError("load_normal_map: " + path + " is not a 3-channel map");
    if (img.h != th || img.w != tw)
        throw IngestError("load_normal_map: " + path + " is " + std::to_string(img.h) + "x" +
                          std::to_string(img.w) + ", expected " + std::to_string(th) + "x" +
                          std::to_string(tw));
    bool warned = false;
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            double nx = 2.0 * img.at(y, x, 0) - 1.0;
            double ny = 2.0 * img.at(y, x, 1) - 1.0;
            double nz = 2.0 * img.at(y, x, 2) - 1.0;
            double norm = std::sqrt(nx * nx + ny * ny + nz * nz);
            if (!warned && std::abs(norm - 1.0) > 0.1) {
                std::cerr << "load_normal_map: " << path
                          << " contains non-unit vectors; renormalizing\n";
                warned = true;
            }
            if (norm < 1e-6) {
                nx = 0.0;
                ny = 0.0;
                nz = 1.0;
                norm = 1.0;
            }
            img.at(y, x, 0) = static_cast<float>((nx / norm + 1.0) * 0.5);
            img.at(y, x, 1) = static_cast<float>((ny / norm + 1.0) * 0.5);
            img.at(y, x, 2) = static_cast<float>((nz / norm + 1.0) * 0.5);
        }
    return img;
}

PriorPair compute_priors(const ImageBuffer& degraded, const PriorOptions& opt) {
    PriorPair pair;
    pair.gradient = canny(degraded, opt.canny);
    pair.normal = opt.normal_map_path
                      ? load_normal_map(*opt.normal_map_path, degraded.h, degraded.w)
                      : normal_from_heightfield(degraded);
    return pair;
}

}  // namespace priors
}  // namespace uhddip
