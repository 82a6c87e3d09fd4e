#include "uhddip/synth.hpp"

#include <algorithm>
#include <cmath>

#include "uhddip/errors.hpp"
#include "uhddip/rng.hpp"

namespace uhddip {
namespace synth {

std::string kind_name(WeatherKind k) { return k == WeatherKind::kSnow ? "snow" : "rain"; }

WeatherKind kind_from_name(const std::string& name) {
    if (name == "snow") return WeatherKind::kSnow;
    if (name == "rain") return WeatherKind::kRain;
    throw UsageError("unknown weather kind: " + name);
}

void SynthSpec::validate() const {
    if (!(noise_amount > 0.0 && noise_amount <= 1.0))
        throw ConfigError("SynthSpec: noise_amount must be in (0,1]");
    if (crystallize_cell < 1) throw ConfigError("SynthSpec: crystallize_cell must be >= 1");
    if (motion_len < 1) throw ConfigError("SynthSpec: motion_len must be >= 1");
    if (threshold_level < 0 || threshold_level > 255)
        throw ConfigError("SynthSpec: threshold_level must be an 8-bit level");
    if (motion_angle_deg < 45.0 || motion_angle_deg > 135.0)
        throw ConfigError("SynthSpec: angle must lie in [45,135] degrees");
    if (gauss_radius < 0) throw ConfigError("SynthSpec: gauss_radius must be >= 0");
    if (flows.empty()) throw ConfigError("SynthSpec: needs at least one flow");
    for (double f : flows)
        if (!(f > 0.0 && f <= 1.0)) throw ConfigError("SynthSpec: flow opacities must be in (0,1]");
}

SynthSpec SynthSpec::snow_defaults(uint64_t seed) {
    SynthSpec s;
    s.kind = WeatherKind::kSnow;
    s.noise_amount = 0.5;
    s.crystallize_cell = 15;
    s.motion_len = 25;
    s.motion_angle_deg = 90.0;
    s.threshold_level = 130;
    s.gauss_radius = 5.0;
    s.flows = {0.6, 1.0};
    s.seed = seed;
    return s;
}

SynthSpec SynthSpec::rain_defaults(uint64_t seed) {
    SynthSpec s;
    s.kind = WeatherKind::kRain;
    s.noise_amount = 0.5;
    s.crystallize_cell = 5;
    s.motion_len = 200;
    s.motion_angle_deg = 60.0;
    s.threshold_level = 61;
    s.gauss_radius = 2.0;
    s.flows = {1.0};
    s.seed = seed;
    return s;
}

const std::vector<int>& rain_angles() {
    // 45, 50, 55, 60-80, 85, 95, 100-120, 125, 130, 135
    static const std::vector<int> angles = [] {
        std::vector<int> a{45, 50, 55};
        for (int v = 60; v <= 80; ++v) a.push_back(v);
        a.push_back(85);
        a.push_back(95);
        for (int v = 100; v <= 120; ++v) a.push_back(v);
        a.push_back(125);
        a.push_back(130);
        a.push_back(135);
        return a;
    }();
    return angles;
}

const std::vector<int>& snow_thresholds() {
    static const std::vector<int> levels = [] {
        std::vector<int> v;
        for (int i = 0; i < 10; ++i)
            v.push_back(100 + static_cast<int>(std::lround(i * 65.0 / 9.0)));
        return v;
    }();
    return levels;
}

const std::vector<int>& rain_thresholds() {
    static const std::vector<int> levels{55, 59, 63, 67};
    return levels;
}

SynthSpec sample_spec(WeatherKind kind, uint64_t master_seed, uint64_t index) {
    SynthSpec s = kind == WeatherKind::kSnow ? SynthSpec::snow_defaults(0)
                                             : SynthSpec::rain_defaults(0);
    s.seed = hash_counters(master_seed, index, 0xA11CE);
    if (kind == WeatherKind::kSnow) {
        const auto& th = snow_thresholds();
        s.threshold_level = th[counter_below(master_seed, th.size(), index, 1)];
    } else {
        const auto& th = rain_thresholds();
        s.threshold_level = th[counter_below(master_seed, th.size(), index, 2)];
        const auto& an = rain_angles();
        s.motion_angle_deg = an[counter_below(master_seed, an.size(), index, 3)];
    }
    return s;
}

ImageBuffer gen_noise(int h, int w, double amount, uint64_t seed) {
    if (!(amount > 0.0 && amount <= 1.0)) throw ConfigError("gen_noise: amount must be in (0,1]");
    ImageBuffer out(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(y, x, 0) = static_cast<float>(
                amount * counter_uniform(seed, static_cast<uint64_t>(x),
                                         static_cast<uint64_t>(y)));
    return out;
}

ImageBuffer crystallize(const ImageBuffer& img, int cell, uint64_t seed) {
    if (cell < 1) throw ConfigError("crystallize: cell must be >= 1");
    if (cell > std::min(img.h, img.w))
        throw ConfigError("crystallize: cell larger than image extent");
    if (cell == 1) return img;

    const int gx = (img.w + cell - 1) / cell;
    const int gy = (img.h + cell - 1) / cell;
    // jittered-grid seed points, one per cell
    std::vector<int> sx(static_cast<size_t>(gx) * gy), sy(static_cast<size_t>(gx) * gy);
    for (int j = 0; j < gy; ++j)
        for (int i = 0; i < gx; ++i) {
            const double u = counter_uniform(seed, static_cast<uint64_t>(i),
                                             static_cast<uint64_t>(j), 0);
            const double v = counter_uniform(seed, static_cast<uint64_t>(i),
                                             static_cast<uint64_t>(j), 1);
            sx[static_cast<size_t>(j) * gx + i] =
                std::min(img.w - 1, static_cast<int>(i * cell + u * cell));
            sy[static_cast<size_t>(j) * gx + i] =
                std::min(img.h - 1, static_cast<int>(j * cell + v * cell));
        }

    ImageBuffer out(img.h, img.w, 1);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            const int ci = x / cell, cj = y / cell;
            int best_i = 0, best_j = 0;
            int64_t best_d = INT64_MAX;
            // nearest jittered seed can sit up to two cells away
            for (int dj = -2; dj <= 2; ++dj)
                for (int di = -2; di <= 2; ++di) {
                    const int ni = ci + di, nj = cj + dj;
                    if (ni < 0 || ni >= gx || nj < 0 || nj >= gy) continue;
                    const int px = sx[static_cast<size_t>(nj) * gx + ni];
                    const int py = sy[static_cast<size_t>(nj) * gx + ni];
                    const int64_t d = static_cast<int64_t>(px - x) * (px - x) +
                                      static_cast<int64_t>(py - y) * (py - y);
                    if (d < best_d) {
                        best_d = d;
                        best_i = ni;
                        best_j = nj;
                    }
                }
            const int px = sx[static_cast<size_t>(best_j) * gx + best_i];
            const int py = sy[static_cast<size_t>(best_j) * gx + best_i];
            out.at(y, x, 0) = img.at(py, px, 0);
        }
    return out;
}

ImageBuffer motion_blur(const ImageBuffer& img, int length, double angle_deg) {
    if (length < 1) throw ConfigError("motion_blur: length must be >= 1");
    if (length == 1) return img;

    // 1-px-wide line kernel through the origin; angle measured from +x,
    // counterclockwise in display orientation (y axis points down).
    const double rad = angle_deg * 3.141592653589793238 / 180.0;
    const double half = (length - 1) / 2.0;
    const int x0 = static_cast<int>(std::lround(-half * std::cos(rad)));
    const int y0 = static_cast<int>(std::lround(half * std::sin(rad)));
    const int x1 = static_cast<int>(std::lround(half * std::cos(rad)));
    const int y1 = static_cast<int>(std::lround(-half * std::sin(rad)));

    std::vector<std::pair<int, int>> taps;  // (dy, dx)
    int x = x0, y = y0;
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
        taps.emplace_back(y, x);
        if (x == x1 && y == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y += sy;
        }
    }
    const float wgt = 1.0f / static_cast<float>(taps.size());

    ImageBuffer out(img.h, img.w, 1);
    for (int yy = 0; yy < img.h; ++yy)
        for (int xx = 0; xx < img.w; ++xx) {
            float acc = 0.0f;
            for (const auto& [ty, tx] : taps) {
                const int py = std::clamp(yy + ty, 0, img.h - 1);
                const int px = std::clamp(xx + tx, 0, img.w - 1);
                acc += img.at(py, px, 0);
            }
            out.at(yy, xx, 0) = acc * wgt;
        }
    return out;
}

ImageBuffer threshold_mask(const ImageBuffer& img, int level) {
    if (level < 0 || level > 255) throw ConfigError("threshold: level must be an 8-bit value");
    const float t = static_cast<float>(level) / 255.0f;
    ImageBuffer out(img.h, img.w, 1);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) out.at(y, x, 0) = img.at(y, x, 0) >= t ? 1.0f : 0.0f;
    return out;
}

ImageBuffer gaussian_blur(const ImageBuffer& img, double radius) {
    if (radius < 0) throw ConfigError("gaussian_blur: radius must be >= 0");
    if (radius == 0) return img;
    return gaussian_smooth(img, radius / 2.0);
}

ImageBuffer gen_mask(const SynthSpec& spec, int h, int w) {
    spec.validate();
    ImageBuffer mask(h, w, 1);
    for (size_t fi = 0; fi < spec.flows.size(); ++fi) {
        const uint64_t layer_seed = hash_counters(spec.seed, fi, 0xF10);
        ImageBuffer layer = gen_noise(h, w, spec.noise_amount, layer_seed);
        layer = crystallize(layer, spec.crystallize_cell, hash_counters(layer_seed, 1));
        // snow: only the 100% flow is a streak layer; the translucent flow
        // keeps compact flakes
        const bool streaks = spec.kind == WeatherKind::kRain || spec.flows[fi] >= 1.0;
        if (streaks) layer = motion_blur(layer, spec.motion_len, spec.motion_angle_deg);
        layer = threshold_mask(layer, spec.threshold_level);
        layer = gaussian_blur(layer, spec.gauss_radius);
        const float opacity = static_cast<float>(spec.flows[fi]);
        for (size_t i = 0; i < mask.data.size(); ++i) mask.data[i] += opacity * layer.data[i];
    }
    clamp01(mask);
    return mask;
}

ImageBuffer composite(const ImageBuffer& clean, const ImageBuffer& mask) {
    if (clean.h != mask.h || clean.w != mask.w || mask.c != 1)
        throw UsageError("composite: mask must be single-channel with matching extents");
    ImageBuffer out(clean.h, clean.w, clean.c);
    for (int y = 0; y < clean.h; ++y)
        for (int x = 0; x < clean.w; ++x) {
            const float m = mask.at(y, x, 0);
            for (int k = 0; k < clean.c; ++k)
                out.at(y, x, k) = std::clamp(clean.at(y, x, k) * (1.0f - m) + m, 0.0f, 1.0f);
        }
    return out;
}

}  // namespace synth
}  // namespace uhddip
