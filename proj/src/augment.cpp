#include "burncnn/augment.hpp"

#include <algorithm>
#include <string>

#include "burncnn/errors.hpp"

namespace burncnn {

std::vector<AugmentationVariant> enumerate_variants() {
    std::vector<AugmentationVariant> out;
    out.reserve(16);
    for (auto r : {Rotation::r0, Rotation::r90, Rotation::r180, Rotation::r270}) {
        for (bool flip : {false, true}) {
            for (auto c : {Crop::full, Crop::center}) out.push_back({r, flip, c});
        }
    }
    return out;
}

AugmentationVariant variant_at(std::size_t index) {
    if (index >= 16) throw ContractViolation("augmentation variant index " + std::to_string(index) + " >= 16");
    return {static_cast<Rotation>(index / 4), (index / 2) % 2 == 1, index % 2 == 1 ? Crop::center : Crop::full};
}

std::size_t variant_index(const AugmentationVariant& v) {
    return 4 * static_cast<std::size_t>(v.rotation) + 2 * (v.horizontal_flip ? 1 : 0) + (v.crop == Crop::center ? 1 : 0);
}

Raster rotate_ccw(const Raster& img, Rotation r) {
    const std::size_t W = img.width, H = img.height, C = img.channels;
    switch (r) {
        case Rotation::r0: return img;
        case Rotation::r180: {
            Raster out(W, H, C);
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x)
                    for (std::size_t c = 0; c < C; ++c) out.at(y, x, c) = img.at(H - 1 - y, W - 1 - x, c);
            return out;
        }
        case Rotation::r90: {
            // new[y][x] = old[x][W-1-y]
            Raster out(H, W, C);
            for (std::size_t y = 0; y < W; ++y)
                for (std::size_t x = 0; x < H; ++x)
                    for (std::size_t c = 0; c < C; ++c) out.at(y, x, c) = img.at(x, W - 1 - y, c);
            return out;
        }
        case Rotation::r270: {
            // new[y][x] = old[H-1-x][y]
            Raster out(H, W, C);
            for (std::size_t y = 0; y < W; ++y)
                for (std::size_t x = 0; x < H; ++x)
                    for (std::size_t c = 0; c < C; ++c) out.at(y, x, c) = img.at(H - 1 - x, y, c);
            return out;
        }
    }
    return img;
}

Raster flip_horizontal(const Raster& img) {
    Raster out(img.width, img.height, img.channels);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x)
            for (std::size_t c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
    return out;
}

Raster center_crop(const Raster& img, std::size_t numerator, std::size_t denominator) {
    const std::size_t cw = img.width * numerator / denominator;
    const std::size_t ch = img.height * numerator / denominator;
    if (cw == 0 || ch == 0) {
        throw ContractViolation("center crop of " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                                " image leaves no pixels");
    }
    const std::size_t x0 = (img.width - cw) / 2, y0 = (img.height - ch) / 2;
    Raster out(cw, ch, img.channels);
    for (std::size_t y = 0; y < ch; ++y) {
        const auto* src = &img.pixels[((y0 + y) * img.width + x0) * img.channels];
        std::copy(src, src + cw * img.channels, &out.pixels[y * cw * img.channels]);
    }
    return out;
}

Raster augment(const Raster& img, const AugmentationVariant& v) {
    if (img.empty() || img.width == 0 || img.height == 0) throw ContractViolation("cannot augment an empty image");
    Raster out = rotate_ccw(img, v.rotation);
    if (v.horizontal_flip) out = flip_horizontal(out);
    if (v.crop == Crop::center) out = center_crop(out);
    return out;
}

}  // namespace burncnn
