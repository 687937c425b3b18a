#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "csrda/image_io.hpp"
#include "csrda/tensor.hpp"

namespace csrda {

enum class DomainTag { source, target, confident_pseudo };

std::string_view to_string(DomainTag tag) noexcept;

struct Sample {
    std::string id;
    ImageTensor image;
    std::optional<SoftMask> label;
    DomainTag domain_tag = DomainTag::target;
};

// Throws ShapeError/DataError when the tag/label pairing or the image/label
// shapes disagree.
void validate_sample(const Sample& sample);

// Ordered collection of samples with unique ids. Either every sample shares
// one tag, or the tags are drawn from {source, confident_pseudo} (the
// evolving labeled set).
class DomainDataset {
public:
    DomainDataset() = default;
    DomainDataset(std::string name, std::vector<Sample> samples);

    const std::string& name() const noexcept { return name_; }
    const std::vector<Sample>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    const Sample& operator[](std::size_t i) const noexcept { return samples_[i]; }
    auto begin() const noexcept { return samples_.begin(); }
    auto end() const noexcept { return samples_.end(); }

    // True when every sample carries a label.
    bool fully_labeled() const noexcept;
    std::size_t count(DomainTag tag) const noexcept;

private:
    std::string name_;
    std::vector<Sample> samples_;
};

// Reads `<root>/images/*.png` and, when `expect_labels`, the stem-matched
// `<root>/masks/*.png`. Samples are sorted by filename; ids are file stems.
DomainDataset load_dataset(const std::filesystem::path& root, bool expect_labels);

// Writes the dataset back in the same layout (masks only for labeled samples).
void save_dataset(const DomainDataset& dataset, const std::filesystem::path& root);

// Disjoint union preserving order: all of `a`, then all of `b`.
DomainDataset merge_datasets(const DomainDataset& a, const DomainDataset& b, std::string name = {});

// 8-bit grayscale PNG; v is stored as round(255 v).
void save_mask(const SoftMask& mask, const std::filesystem::path& path);
SoftMask load_mask(const std::filesystem::path& path);

void save_image(const ImageTensor& image, const std::filesystem::path& path);
ImageTensor load_image(const std::filesystem::path& path);

RawImage to_raw(const SoftMask& mask);
RawImage to_raw(const ImageTensor& image);

}  // namespace csrda
