#include "csrda/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <numeric>

namespace csrda {

namespace {

constexpr char kMagic[8] = {'C', 'S', 'R', 'D', 'A', 'K', 'V', '\0'};
constexpr std::uint8_t kF32 = 0, kI64 = 1, kStr = 2;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::filesystem::path& path) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw DataError("truncated archive: " + path.string(), {path.string()});
    }
    return v;
}

}  // namespace

void TensorArchive::put(const std::string& key, std::vector<std::int64_t> dims, std::span<const float> values) {
    const auto n = std::accumulate(dims.begin(), dims.end(), std::int64_t{1}, std::multiplies<>());
    if (n != static_cast<std::int64_t>(values.size())) throw Error("archive put: dims do not match value count");
    Entry e{kF32, std::move(dims), std::vector<char>(values.size_bytes())};
    std::memcpy(e.bytes.data(), values.data(), values.size_bytes());
    if (!entries_.contains(key)) order_.push_back(key);
    entries_[key] = std::move(e);
}

void TensorArchive::put(const std::string& key, std::int64_t value) {
    Entry e{kI64, {1}, std::vector<char>(sizeof value)};
    std::memcpy(e.bytes.data(), &value, sizeof value);
    if (!entries_.contains(key)) order_.push_back(key);
    entries_[key] = std::move(e);
}

void TensorArchive::put(const std::string& key, const std::string& value) {
    Entry e{kStr, {static_cast<std::int64_t>(value.size())}, std::vector<char>(value.begin(), value.end())};
    if (!entries_.contains(key)) order_.push_back(key);
    entries_[key] = std::move(e);
}

const TensorArchive::Entry& TensorArchive::at(const std::string& key, std::uint8_t dtype) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw DataError("archive: missing key " + key, {key});
    if (it->second.dtype != dtype) throw DataError("archive: wrong type for key " + key, {key});
    return it->second;
}

std::vector<float> TensorArchive::get_f32(const std::string& key, std::vector<std::int64_t>* dims) const {
    const Entry& e = at(key, kF32);
    std::vector<float> out(e.bytes.size() / sizeof(float));
    std::memcpy(out.data(), e.bytes.data(), e.bytes.size());
    if (dims) *dims = e.dims;
    return out;
}

std::int64_t TensorArchive::get_i64(const std::string& key) const {
    std::int64_t v = 0;
    std::memcpy(&v, at(key, kI64).bytes.data(), sizeof v);
    return v;
}

std::string TensorArchive::get_string(const std::string& key) const {
    const Entry& e = at(key, kStr);
    return {e.bytes.begin(), e.bytes.end()};
}

std::vector<std::string> TensorArchive::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& k : order_) {
        if (k.starts_with(prefix)) out.push_back(k);
    }
    return out;
}

void TensorArchive::write(const std::filesystem::path& path) const {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw DataError("cannot write archive: " + path.string(), {path.string()});
        os.write(kMagic, sizeof kMagic);
        write_pod(os, kVersion);
        write_pod(os, static_cast<std::uint32_t>(order_.size()));
        for (const auto& key : order_) {
            const Entry& e = entries_.at(key);
            write_pod(os, static_cast<std::uint32_t>(key.size()));
            os.write(key.data(), static_cast<std::streamsize>(key.size()));
            write_pod(os, e.dtype);
            write_pod(os, static_cast<std::uint32_t>(e.dims.size()));
            for (auto d : e.dims) write_pod(os, d);
            os.write(e.bytes.data(), static_cast<std::streamsize>(e.bytes.size()));
        }
        os.flush();
        if (!os) throw DataError("write failed: " + path.string(), {path.string()});
    }
    std::filesystem::rename(tmp, path);
}

TensorArchive TensorArchive::read(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open archive: " + path.string(), {path.string()});
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw DataError("not a csrda archive: " + path.string(), {path.string()});
    }
    const auto version = read_pod<std::uint32_t>(is, path);
    if (version != kVersion) {
        throw DataError("unsupported archive version " + std::to_string(version) + ": " + path.string(), {path.string()});
    }
    const auto count = read_pod<std::uint32_t>(is, path);
    TensorArchive ar;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto klen = read_pod<std::uint32_t>(is, path);
        std::string key(klen, '\0');
        is.read(key.data(), klen);
        Entry e;
        e.dtype = read_pod<std::uint8_t>(is, path);
        const auto ndim = read_pod<std::uint32_t>(is, path);
        for (std::uint32_t d = 0; d < ndim; ++d) e.dims.push_back(read_pod<std::int64_t>(is, path));
        const auto n = std::accumulate(e.dims.begin(), e.dims.end(), std::int64_t{1}, std::multiplies<>());
        const std::size_t elem = e.dtype == kF32 ? 4 : e.dtype == kI64 ? 8 : 1;
        e.bytes.resize(static_cast<std::size_t>(n) * elem);
        if (!is.read(e.bytes.data(), static_cast<std::streamsize>(e.bytes.size()))) {
            throw DataError("truncated archive: " + path.string(), {path.string()});
        }
        ar.order_.push_back(key);
        ar.entries_[key] = std::move(e);
    }
    return ar;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    TensorArchive ar;
    ar.put("meta/architecture_id", ckpt.student.architecture_id);
    ar.put("meta/iteration", ckpt.iteration);
    ar.put("meta/cycle", ckpt.cycle);
    ar.put("meta/epoch", ckpt.epoch);
    auto put_set = [&](const std::string& prefix, const ModelState& s) {
        for (const auto& p : s.layout->params()) {
            ar.put(prefix + p.name, std::vector<std::int64_t>(p.shape.begin(), p.shape.end()), s.view(p));
        }
    };
    put_set("student/", ckpt.student);
    put_set("teacher/", ckpt.teacher);
    put_set("adam.m/", ckpt.moments.first);
    put_set("adam.v/", ckpt.moments.second);
    ar.write(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const TensorArchive ar = TensorArchive::read(path);
    auto layout = std::make_shared<ParamLayout>();
    for (const auto& key : ar.keys_with_prefix("student/")) {
        std::vector<std::int64_t> dims;
        ar.get_f32(key, &dims);
        layout->add(key.substr(8), std::vector<int>(dims.begin(), dims.end()));
    }
    const std::string arch = ar.get_string("meta/architecture_id");
    auto get_set = [&](const std::string& prefix) {
        ModelState s = ModelState::zeros(arch, layout);
        for (const auto& p : layout->params()) {
            const auto values = ar.get_f32(prefix + p.name);
            if (values.size() != p.size) throw DataError("checkpoint: size mismatch for " + prefix + p.name);
            std::copy(values.begin(), values.end(), s.view(p).begin());
        }
        return s;
    };
    Checkpoint ckpt;
    ckpt.iteration = ar.get_i64("meta/iteration");
    ckpt.cycle = ar.get_i64("meta/cycle");
    ckpt.epoch = ar.get_i64("meta/epoch");
    ckpt.student = get_set("student/");
    ckpt.teacher = get_set("teacher/");
    ckpt.moments = {get_set("adam.m/"), get_set("adam.v/")};
    return ckpt;
}

}  // namespace csrda
