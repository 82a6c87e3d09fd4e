#include "uhddip/metrics.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include "uhddip/errors.hpp"

namespace uhddip {
namespace metrics {

double psnr(const ImageBuffer& a, const ImageBuffer& b, double peak) {
    if (!a.same_dims(b)) throw DimensionError("psnr: image dims differ");
    if (a.empty()) throw UsageError("psnr: empty image");
    double mse = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.data.size());
    if (mse < 1e-10) return 100.0;
    return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_dims(b)) throw DimensionError("ssim: image dims differ");
    if (a.h < 11 || a.w < 11) throw UsageError("ssim: image smaller than the 11x11 window");

    const ImageBuffer la = luminance(a), lb = luminance(b);
    constexpr int kWin = 11, kHalf = 5;
    constexpr double kSigma = 1.5;
    constexpr double c1 = (0.01 * 0.01), c2 = (0.03 * 0.03);

    double win[kWin][kWin];
    double wsum = 0.0;
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
            const double dy = i - kHalf, dx = j - kHalf;
            win[i][j] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
            wsum += win[i][j];
        }
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) win[i][j] /= wsum;

    double acc = 0.0;
    int64_t count = 0;
    for (int y = kHalf; y < la.h - kHalf; ++y)
        for (int x = kHalf; x < la.w - kHalf; ++x) {
            double mu_a = 0, mu_b = 0;
            for (int i = 0; i < kWin; ++i)
                for (int j = 0; j < kWin; ++j) {
                    mu_a += win[i][j] * la.at(y + i - kHalf, x + j - kHalf, 0);
                    mu_b += win[i][j] * lb.at(y + i - kHalf, x + j - kHalf, 0);
                }
            double var_a = 0, var_b = 0, cov = 0;
            for (int i = 0; i < kWin; ++i)
                for (int j = 0; j < kWin; ++j) {
                    const double da = la.at(y + i - kHalf, x + j - kHalf, 0) - mu_a;
                    const double db = lb.at(y + i - kHalf, x + j - kHalf, 0) - mu_b;
                    var_a += win[i][j] * da * da;
                    var_b += win[i][j] * db * db;
                    cov += win[i][j] * da * db;
                }
            const double num = (2 * mu_a * mu_b + c1) * (2 * cov + c2);
            const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            acc += num / den;
            ++count;
        }
    return acc / static_cast<double>(count);
}

double MetricReport::mean_psnr() const {
    if (rows.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : rows) s += r.psnr_db;
    return s / static_cast<double>(rows.size());
}

double MetricReport::mean_ssim() const {
    if (rows.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : rows) s += r.ssim;
    return s / static_cast<double>(rows.size());
}

void write_csv(const MetricReport& report, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IngestError("write_csv: cannot write " + path);
    os << "path,psnr,ssim\n";
    os.precision(6);
    os << std::fixed;
    for (const auto& r : report.rows) os << r.name << "," << r.psnr_db << "," << r.ssim << "\n";
    os << "mean," << report.mean_psnr() << "," << report.mean_ssim() << "\n";
}

}  // namespace metrics
}  // namespace uhddip
