#pragma once

#include <string>

#include "uhddip/image.hpp"

namespace uhddip {
namespace io {

// 8-bit PNG in/out. Gray and RGB are produced as-is; palette, alpha and
// 16-bit inputs are converted down to gray/RGB on read.
ImageBuffer read_png(const std::string& path);
void write_png(const std::string& path, const ImageBuffer& img);

}  // namespace io
}  // namespace uhddip
