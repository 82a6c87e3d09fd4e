#pragma once

#include <string>
#include <vector>

#include "uhddip/image.hpp"

namespace uhddip {
namespace metrics {

// 10*log10(peak^2 / MSE) over all channels, capped at 100 dB for
// near-identical images (MSE < 1e-10).
double psnr(const ImageBuffer& a, const ImageBuffer& b, double peak = 1.0);

// Standard single-scale SSIM on luminance: 11x11 Gaussian window with
// sigma 1.5, K1 = 0.01, K2 = 0.03, averaged over fully valid positions.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

struct MetricRow {
    std::string name;
    double psnr_db = 0.0;
    double ssim = 0.0;
};

struct MetricReport {
    std::vector<MetricRow> rows;
    double mean_psnr() const;
    double mean_ssim() const;
};

// CSV with one row per image plus a trailing mean row.
void write_csv(const MetricReport& report, const std::string& path);

}  // namespace metrics
}  // namespace uhddip
