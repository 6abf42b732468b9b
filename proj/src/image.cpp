#include "burncnn/image.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "burncnn/errors.hpp"

namespace burncnn {

namespace fs = std::filesystem;

Raster decode_image(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw DecodeError(path.string(), "file does not exist");
    cv::Mat bgr;
    try {
        bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    } catch (const cv::Exception& e) {
        throw DecodeError(path.string(), e.what());
    }
    if (bgr.empty()) throw DecodeError(path.string(), "unsupported or corrupt image data");
    if (bgr.type() != CV_8UC3) throw DecodeError(path.string(), "not an 8-bit colour image");

    Raster out(static_cast<std::size_t>(bgr.cols), static_cast<std::size_t>(bgr.rows), 3);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<std::uint8_t>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            out.at(y, x, 0) = row[3 * x + 2];
            out.at(y, x, 1) = row[3 * x + 1];
            out.at(y, x, 2) = row[3 * x + 0];
        }
    }
    return out;
}

void write_image(const Raster& img, const fs::path& path) {
    if (img.channels != 3) throw ContractViolation("write_image needs a 3-channel raster");
    cv::Mat bgr(static_cast<int>(img.height), static_cast<int>(img.width), CV_8UC3);
    for (std::size_t y = 0; y < img.height; ++y) {
        auto* row = bgr.ptr<std::uint8_t>(static_cast<int>(y));
        for (std::size_t x = 0; x < img.width; ++x) {
            row[3 * x + 0] = img.at(y, x, 2);
            row[3 * x + 1] = img.at(y, x, 1);
            row[3 * x + 2] = img.at(y, x, 0);
        }
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), bgr);
    } catch (const cv::Exception& e) {
        throw IoError("cannot write image '" + path.string() + "': " + e.what());
    }
    if (!ok) throw IoError("cannot write image '" + path.string() + "'");
}

Tensor resize_bilinear(const Raster& img, std::size_t width, std::size_t height) {
    if (img.empty() || width == 0 || height == 0) throw ContractViolation("resize of an empty image");
    struct Tap {
        std::size_t i0, i1;
        float frac;
    };
    auto taps = [](std::size_t src, std::size_t dst) {
        std::vector<Tap> out(dst);
        const double scale = static_cast<double>(src) / static_cast<double>(dst);
        for (std::size_t d = 0; d < dst; ++d) {
            double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
            s = std::clamp(s, 0.0, static_cast<double>(src - 1));
            const auto i0 = static_cast<std::size_t>(std::floor(s));
            out[d] = {i0, std::min(i0 + 1, src - 1), static_cast<float>(s - static_cast<double>(i0))};
        }
        return out;
    };
    const auto xs = taps(img.width, width);
    const auto ys = taps(img.height, height);

    Tensor out({img.channels, height, width});
    for (std::size_t c = 0; c < img.channels; ++c) {
        for (std::size_t y = 0; y < height; ++y) {
            const Tap ty = ys[y];
            for (std::size_t x = 0; x < width; ++x) {
                const Tap tx = xs[x];
                const float top = static_cast<float>(img.at(ty.i0, tx.i0, c)) * (1.0f - tx.frac) +
                                  static_cast<float>(img.at(ty.i0, tx.i1, c)) * tx.frac;
                const float bottom = static_cast<float>(img.at(ty.i1, tx.i0, c)) * (1.0f - tx.frac) +
                                     static_cast<float>(img.at(ty.i1, tx.i1, c)) * tx.frac;
                out[(c * height + y) * width + x] = top * (1.0f - ty.frac) + bottom * ty.frac;
            }
        }
    }
    return out;
}

PreparedImage prepare_image(const Raster& img, std::size_t variant, const std::string& source_id, std::size_t size) {
    if (img.channels != 3) throw ContractViolation("prepare_image needs an RGB raster");
    const Raster aug = augment(img, variant_at(variant));
    Tensor t = resize_bilinear(aug, size, size);
    const std::size_t plane = size * size;
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < plane; ++i) t[c * plane + i] -= kChannelMeans[c];
    }
    return {std::move(t), source_id, variant};
}

PreparedImage prepare_image(const fs::path& path, std::size_t variant, const std::string& source_id, std::size_t size) {
    return prepare_image(decode_image(path), variant, source_id, size);
}

// ---- sources ------------------------------------------------------------------------

InMemorySource::InMemorySource(std::vector<Tensor> images, std::vector<int> labels)
    : images_(std::move(images)), labels_(std::move(labels)) {
    if (images_.size() != labels_.size()) throw ContractViolation("image and label counts differ");
}

ManifestSource::ManifestSource(const DatasetManifest& manifest, std::vector<Item> items, SplitMode mode,
                               std::size_t size)
    : items_(std::move(items)), size_(size) {
    for (const auto& it : items_) {
        const Sample* s = manifest.find(it.id);
        if (!s) throw ContractViolation("id '" + it.id + "' is not in the manifest");
        if (it.variant >= kVariantsPerImage) throw ContractViolation("variant out of range for '" + it.id + "'");
        labels_.push_back(class_index(s->burn_class, mode));
        paths_.push_back(s->image_path);
    }
}

ManifestSource ManifestSource::from_table(const DatasetManifest& manifest, const std::vector<AugmentedRow>& rows,
                                          SplitMode mode, std::size_t size) {
    std::vector<Item> items;
    items.reserve(rows.size());
    for (const auto& r : rows) items.push_back({r.id, r.variant});
    return ManifestSource(manifest, std::move(items), mode, size);
}

ManifestSource ManifestSource::from_split(const DatasetManifest& manifest, const SplitAssignment& split, Split which,
                                          std::size_t size) {
    std::vector<Item> items;
    for (const auto& id : split.ids(which)) items.push_back({id, 0});
    return ManifestSource(manifest, std::move(items), split.mode, size);
}

Tensor ManifestSource::image(std::size_t i) const {
    const Item& it = items_.at(i);
    std::shared_ptr<const Raster> raster;
    {
        std::lock_guard lock(mutex_);
        if (auto found = cache_.find(it.id); found != cache_.end()) raster = found->second;
    }
    if (!raster) {
        raster = std::make_shared<const Raster>(decode_image(paths_[i]));
        std::lock_guard lock(mutex_);
        cache_.emplace(it.id, raster);
    }
    return prepare_image(*raster, it.variant, it.id, size_).tensor;
}

}  // namespace burncnn
