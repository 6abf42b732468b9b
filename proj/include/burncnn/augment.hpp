#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace burncnn {

/// 8-bit interleaved image, row-major HWC.
struct Raster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 3;
    std::vector<std::uint8_t> pixels;

    Raster() = default;
    Raster(std::size_t w, std::size_t h, std::size_t c = 3) : width(w), height(h), channels(c), pixels(w * h * c) {}

    bool empty() const noexcept { return pixels.empty(); }
    std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
    std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels[(y * width + x) * channels + c];
    }

    friend bool operator==(const Raster&, const Raster&) = default;
};

enum class Rotation { r0, r90, r180, r270 };
enum class Crop { full, center };

/// One of the sixteen (rotation, flip, crop) recipes.
struct AugmentationVariant {
    /// Counter-clockwise quarter turns.
    Rotation rotation = Rotation::r0;
    bool horizontal_flip = false;
    Crop crop = Crop::full;

    friend bool operator==(const AugmentationVariant&, const AugmentationVariant&) = default;
};

/// Center crop keeps floor(7/8) of each side.
inline constexpr std::size_t kCropNumerator = 7;
inline constexpr std::size_t kCropDenominator = 8;

/// Canonical order: rotation-major, then flip, then crop, so
/// index = 4*rotation + 2*flip + crop.
std::vector<AugmentationVariant> enumerate_variants();
AugmentationVariant variant_at(std::size_t index);
std::size_t variant_index(const AugmentationVariant& v);

Raster rotate_ccw(const Raster& img, Rotation r);
Raster flip_horizontal(const Raster& img);
Raster center_crop(const Raster& img, std::size_t numerator = kCropNumerator,
                   std::size_t denominator = kCropDenominator);

/// Rotate, then flip, then crop. Rotation and flip are exact pixel
/// permutations.
Raster augment(const Raster& img, const AugmentationVariant& v);

}  // namespace burncnn
