#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uhddip/image.hpp"

namespace uhddip {
namespace synth {

enum class WeatherKind { kSnow, kRain };

std::string kind_name(WeatherKind k);
WeatherKind kind_from_name(const std::string& name);

// One weather-mask recipe. Defaults follow the snow/rain photoshop-style
// settings: noise 50%, crystallize cell 15/5 px, motion blur 25/200 px,
// gaussian blur radius 5/2 px, threshold 100-165 / 55-67, snow composited
// from two flows at 60% and 100% opacity.
struct SynthSpec {
    WeatherKind kind = WeatherKind::kSnow;
    double noise_amount = 0.5;
    int crystallize_cell = 15;
    int motion_len = 25;
    double motion_angle_deg = 90.0;  // rain: one of the 50 catalogued angles
    int threshold_level = 130;       // 8-bit
    double gauss_radius = 5.0;
    std::vector<double> flows = {0.6, 1.0};
    uint64_t seed = 0;

    void validate() const;

    static SynthSpec snow_defaults(uint64_t seed);
    static SynthSpec rain_defaults(uint64_t seed);
};

// The 50 rain-streak angles (45-135 degrees, 90 excluded).
const std::vector<int>& rain_angles();
// Snow threshold levels: 10 densities evenly spaced in [100, 165].
const std::vector<int>& snow_thresholds();
// Rain threshold levels: 4 densities in [55, 67].
const std::vector<int>& rain_thresholds();

// Draws a SynthSpec from the catalogued ranges, addressed by (master_seed,
// index) so dataset builds are order-independent.
SynthSpec sample_spec(WeatherKind kind, uint64_t master_seed, uint64_t index);

// Mask-generation stages. All single-channel, deterministic in their seed.
ImageBuffer gen_noise(int h, int w, double amount, uint64_t seed);
ImageBuffer crystallize(const ImageBuffer& img, int cell, uint64_t seed);
ImageBuffer motion_blur(const ImageBuffer& img, int length, double angle_deg);
ImageBuffer threshold_mask(const ImageBuffer& img, int level);
ImageBuffer gaussian_blur(const ImageBuffer& img, double radius);

// Full recipe: per flow, noise -> crystallize -> motion blur (rain always;
// snow only on the 100% streak flow) -> threshold -> gaussian blur, then
// opacity-weighted sum clamped to [0,1].
ImageBuffer gen_mask(const SynthSpec& spec, int h, int w);

// Alpha-over with white streak color: out = clean*(1-m) + m.
ImageBuffer composite(const ImageBuffer& clean, const ImageBuffer& mask);

}  // namespace synth
}  // namespace uhddip
