#pragma once

#include "gsnav/image.hpp"

namespace gsnav {

// Mean structural similarity with a uniform window, averaged over channels.
// Statistics use only positions where the full window fits; images smaller
// than the window fall back to global statistics.
double ssim_mean(const ImageD& a, const ImageD& b, int window = 7);

// d(ssim_mean)/d(a), same shape as a.
ImageD ssim_gradient(const ImageD& a, const ImageD& b, int window = 7);

}  // namespace gsnav
