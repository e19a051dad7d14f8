#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gsnav/image.hpp"

namespace gsnav {

void write_png_rgb(const std::string& path, const Image8& image);
void write_png_gray(const std::string& path, int width, int height,
                    const std::vector<uint8_t>& pixels);

// In-memory encode, used for the wire format of remote planners.
std::vector<uint8_t> encode_png_rgb(const Image8& image);

std::string base64_encode(const uint8_t* data, size_t len);

}  // namespace gsnav
