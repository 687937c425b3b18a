#include "csrda/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace csrda {

namespace fs = std::filesystem;

std::string_view to_string(DomainTag tag) noexcept {
    switch (tag) {
        case DomainTag::source: return "source";
        case DomainTag::target: return "target";
        case DomainTag::confident_pseudo: return "confident-pseudo";
    }
    return "unknown";
}

void validate_sample(const Sample& s) {
    const bool needs_label = s.domain_tag != DomainTag::target;
    if (needs_label && !s.label) {
        throw DataError("sample " + s.id + " tagged " + std::string(to_string(s.domain_tag)) + " has no label",
                        {s.id});
    }
    if (!needs_label && s.label) {
        throw DataError("sample " + s.id + " tagged target must not carry a label", {s.id});
    }
    if (s.label && (s.label->height() != s.image.height() || s.label->width() != s.image.width())) {
        throw ShapeError("sample " + s.id + ": mask " + std::to_string(s.label->height()) + "x" +
                         std::to_string(s.label->width()) + " does not match image " +
                         std::to_string(s.image.height()) + "x" + std::to_string(s.image.width()));
    }
}

DomainDataset::DomainDataset(std::string name, std::vector<Sample> samples)
    : name_(std::move(name)), samples_(std::move(samples)) {
    std::set<std::string> ids;
    std::vector<std::string> duplicates;
    std::set<DomainTag> tags;
    for (const auto& s : samples_) {
        validate_sample(s);
        if (!ids.insert(s.id).second) duplicates.push_back(s.id);
        tags.insert(s.domain_tag);
    }
    if (!duplicates.empty()) throw DataError("dataset " + name_ + ": duplicate sample ids", duplicates);
    const bool evolving_mix = tags == std::set<DomainTag>{DomainTag::source, DomainTag::confident_pseudo};
    if (tags.size() > 1 && !evolving_mix) {
        throw DataError("dataset " + name_ + ": mixed domain tags are only allowed for source + confident-pseudo");
    }
}

bool DomainDataset::fully_labeled() const noexcept {
    return std::all_of(samples_.begin(), samples_.end(), [](const Sample& s) { return s.label.has_value(); });
}

std::size_t DomainDataset::count(DomainTag tag) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(samples_.begin(), samples_.end(), [tag](const Sample& s) { return s.domain_tag == tag; }));
}

RawImage to_raw(const SoftMask& mask) {
    RawImage raw{mask.width(), mask.height(), 1, {}};
    raw.pixels.resize(mask.values().size());
    for (std::size_t i = 0; i < raw.pixels.size(); ++i) {
        raw.pixels[i] = static_cast<std::uint8_t>(std::lround(mask.values().data[i] * 255.0f));
    }
    return raw;
}

RawImage to_raw(const ImageTensor& image) {
    const auto& px = image.pixels();
    RawImage raw{px.width, px.height, 3, {}};
    raw.pixels.resize(px.size());
    for (int y = 0; y < px.height; ++y) {
        for (int x = 0; x < px.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                raw.pixels[(static_cast<std::size_t>(y) * px.width + x) * 3 + c] =
                    static_cast<std::uint8_t>(std::lround(px(c, y, x) * 255.0f));
            }
        }
    }
    return raw;
}

void save_mask(const SoftMask& mask, const fs::path& path) { write_png(path, to_raw(mask)); }

SoftMask load_mask(const fs::path& path) {
    const RawImage raw = read_png(path);
    Plane<float> values(raw.height, raw.width);
    for (std::size_t i = 0; i < values.size(); ++i) {
        int sum = 0;
        for (int c = 0; c < raw.channels; ++c) sum += raw.pixels[i * raw.channels + c];
        values.data[i] = static_cast<float>(sum) / (255.0f * static_cast<float>(raw.channels));
    }
    for (float v : values.data) {
        if (!(v >= 0.0f && v <= 1.0f)) throw DataError("mask value outside [0,1]: " + path.string(), {path.string()});
    }
    return SoftMask(std::move(values));
}

void save_image(const ImageTensor& image, const fs::path& path) { write_png(path, to_raw(image)); }

ImageTensor load_image(const fs::path& path) {
    const RawImage raw = read_png(path);
    Tensor3<float> px(3, raw.height, raw.width);
    for (int y = 0; y < raw.height; ++y) {
        for (int x = 0; x < raw.width; ++x) {
            const std::size_t base = (static_cast<std::size_t>(y) * raw.width + x) * raw.channels;
            for (int c = 0; c < 3; ++c) {
                px(c, y, x) = static_cast<float>(raw.pixels[base + (raw.channels == 3 ? c : 0)]) / 255.0f;
            }
        }
    }
    return ImageTensor(std::move(px));
}

namespace {

std::map<std::string, fs::path> list_pngs(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("missing directory: " + dir.string(), {dir.string()});
    std::map<std::string, fs::path> by_stem;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
        if (ext == ".png") by_stem.emplace(entry.path().stem().string(), entry.path());
    }
    return by_stem;
}

}  // namespace

DomainDataset load_dataset(const fs::path& root, bool expect_labels) {
    if (!fs::is_directory(root)) throw DataError("missing dataset root: " + root.string(), {root.string()});
    // std::map keeps the stems (and therefore the samples) filename-sorted.
    const auto images = list_pngs(root / "images");
    std::map<std::string, fs::path> masks;
    if (expect_labels) {
        masks = list_pngs(root / "masks");
        std::vector<std::string> unpaired;
        for (const auto& [stem, _] : images) {
            if (!masks.contains(stem)) unpaired.push_back(stem);
        }
        if (!unpaired.empty()) throw DataError("images without masks under " + root.string(), unpaired);
    }

    std::vector<Sample> samples;
    samples.reserve(images.size());
    for (const auto& [stem, image_path] : images) {
        Sample s;
        s.id = stem;
        s.image = load_image(image_path);
        if (expect_labels) {
            s.label = load_mask(masks.at(stem));
            s.domain_tag = DomainTag::source;
        } else {
            s.domain_tag = DomainTag::target;
        }
        validate_sample(s);
        samples.push_back(std::move(s));
    }
    return DomainDataset(root.filename().string(), std::move(samples));
}

void save_dataset(const DomainDataset& dataset, const fs::path& root) {
    fs::create_directories(root / "images");
    if (std::any_of(dataset.begin(), dataset.end(), [](const Sample& s) { return s.label.has_value(); })) {
        fs::create_directories(root / "masks");
    }
    for (const auto& s : dataset) {
        // Pseudo-label ids carry a "cl<cycle>/" namespace; keep file names flat.
        std::string stem = s.id;
        std::replace(stem.begin(), stem.end(), '/', '_');
        save_image(s.image, root / "images" / (stem + ".png"));
        if (s.label) save_mask(*s.label, root / "masks" / (stem + ".png"));
    }
}

DomainDataset merge_datasets(const DomainDataset& a, const DomainDataset& b, std::string name) {
    std::set<std::string> ids;
    for (const auto& s : a) ids.insert(s.id);
    std::vector<std::string> collisions;
    for (const auto& s : b) {
        if (ids.contains(s.id)) collisions.push_back(s.id);
    }
    if (!collisions.empty()) throw DataError("merge: duplicate sample ids", collisions);

    std::vector<Sample> samples;
    samples.reserve(a.size() + b.size());
    samples.insert(samples.end(), a.begin(), a.end());
    samples.insert(samples.end(), b.begin(), b.end());
    if (name.empty()) name = b.empty() ? a.name() : a.name() + "+" + b.name();
    return DomainDataset(std::move(name), std::move(samples));
}

}  // namespace csrda
