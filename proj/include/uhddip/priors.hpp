#pragma once

#include <optional>
#include <string>

#include "uhddip/image.hpp"

namespace uhddip {
namespace priors {

// Guidance priors computed from the degraded input: a surface-normal map
// (H x W x 3, unit vectors encoded as (n+1)/2) and an edge map (H x W x 1).
struct PriorPair {
    ImageBuffer normal;
    ImageBuffer gradient;
};

struct CannyOptions {
    double sigma = 1.4;
    double low_ratio = 0.1;   // of max gradient magnitude
    double high_ratio = 0.2;  // of max gradient magnitude
    bool soft = false;        // edges carry normalized magnitude instead of 1
};

// Gaussian smoothing, Sobel gradients, non-maximum suppression, double
// threshold at ratios of the max magnitude, hysteresis.
ImageBuffer canny(const ImageBuffer& img, const CannyOptions& opt = {});

// Analytic fallback for the normal provider: treats luminance as a height
// field, n = normalize((-dL/dx, -dL/dy, 1)), encoded (n+1)/2.
ImageBuffer normal_from_heightfield(const ImageBuffer& img);

// Ingests an externally produced normal map. Dimensions must match
// (th, tw); decoded vectors are renormalized to unit length (with a warning
// on stderr when they deviate by more than 0.1).
ImageBuffer load_normal_map(const std::string& path, int th, int tw);

struct PriorOptions {
    CannyOptions canny;
    std::optional<std::string> normal_map_path;  // file provider when set
};

PriorPair compute_priors(const ImageBuffer& degraded, const PriorOptions& opt = {});

}  // namespace priors
}  // namespace uhddip
