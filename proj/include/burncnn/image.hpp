#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "burncnn/augment.hpp"
#include "burncnn/dataset.hpp"
#include "burncnn/tensor.hpp"

namespace burncnn {

inline constexpr std::size_t kNetworkInputSize = 227;
/// ImageNet RGB channel means on the 0..255 scale.
inline constexpr std::array<float, 3> kChannelMeans = {123.68f, 116.78f, 103.94f};

/// Decodes JPEG/BMP/PNG into an 8-bit RGB raster. Throws DecodeError.
Raster decode_image(const std::filesystem::path& path);
/// Encodes by file extension. Throws IoError.
void write_image(const Raster& img, const std::filesystem::path& path);

/// Bilinear resize with half-pixel centres and edge clamping; returns a
/// [C, height, width] float tensor on the source 0..255 scale.
Tensor resize_bilinear(const Raster& img, std::size_t width, std::size_t height);

struct PreparedImage {
    Tensor tensor;  // [3, size, size], mean-subtracted
    std::string source_id;
    std::size_t variant = 0;
};

PreparedImage prepare_image(const Raster& img, std::size_t variant, const std::string& source_id = {},
                            std::size_t size = kNetworkInputSize);
PreparedImage prepare_image(const std::filesystem::path& path, std::size_t variant, const std::string& source_id = {},
                            std::size_t size = kNetworkInputSize);

// ---- sample sources -----------------------------------------------------------------

/// Indexed labelled images for training and evaluation.
class SampleSource {
public:
    virtual ~SampleSource() = default;
    virtual std::size_t size() const = 0;
    virtual int label(std::size_t i) const = 0;
    /// [3, H, W] network input for sample i.
    virtual Tensor image(std::size_t i) const = 0;
};

class InMemorySource : public SampleSource {
public:
    InMemorySource() = default;
    InMemorySource(std::vector<Tensor> images, std::vector<int> labels);

    std::size_t size() const override { return images_.size(); }
    int label(std::size_t i) const override { return labels_.at(i); }
    Tensor image(std::size_t i) const override { return images_.at(i); }

private:
    std::vector<Tensor> images_;
    std::vector<int> labels_;
};

/// Loads (sample, variant) pairs from disk on demand, caching decoded rasters.
class ManifestSource : public SampleSource {
public:
    struct Item {
        std::string id;
        std::size_t variant = 0;
    };

    ManifestSource(const DatasetManifest& manifest, std::vector<Item> items, SplitMode mode,
                   std::size_t size = kNetworkInputSize);

    /// Augmented training rows.
    static ManifestSource from_table(const DatasetManifest& manifest, const std::vector<AugmentedRow>& rows,
                                     SplitMode mode, std::size_t size = kNetworkInputSize);
    /// Un-augmented samples of one split.
    static ManifestSource from_split(const DatasetManifest& manifest, const SplitAssignment& split, Split which,
                                     std::size_t size = kNetworkInputSize);

    std::size_t size() const override { return items_.size(); }
    int label(std::size_t i) const override { return labels_.at(i); }
    Tensor image(std::size_t i) const override;
    const Item& item(std::size_t i) const { return items_.at(i); }

private:
    std::vector<Item> items_;
    std::vector<int> labels_;
    std::vector<std::filesystem::path> paths_;
    std::size_t size_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::shared_ptr<const Raster>> cache_;
};

}  // namespace burncnn
