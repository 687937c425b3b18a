#pragma once

// Checkpoint archive, format version 1 (little-endian):
//
//   magic    8 bytes  "CSRDAKV\0"
//   version  u32      1
//   count    u32      number of entries
//   entry*   count times:
//     key_len u32, key bytes (UTF-8)
//     dtype   u8       0 = f32, 1 = i64, 2 = utf-8 string
//     ndim    u32, dims i64[ndim]
//     payload product(dims) elements (strings: ndim = 1, dims[0] = byte length)
//
// Checkpoints use the keys
//   meta/architecture_id, meta/iteration, meta/cycle, meta/epoch,
//   student/<param>, teacher/<param>, adam.m/<param>, adam.v/<param>.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csrda/model_state.hpp"
#include "csrda/optimizer.hpp"

namespace csrda {

class TensorArchive {
public:
    static constexpr std::uint32_t kVersion = 1;

    void put(const std::string& key, std::vector<std::int64_t> dims, std::span<const float> values);
    void put(const std::string& key, std::int64_t value);
    void put(const std::string& key, const std::string& value);

    bool contains(const std::string& key) const { return entries_.contains(key); }
    std::vector<float> get_f32(const std::string& key, std::vector<std::int64_t>* dims = nullptr) const;
    std::int64_t get_i64(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    // Atomic: writes `<path>.tmp` then renames.
    void write(const std::filesystem::path& path) const;
    static TensorArchive read(const std::filesystem::path& path);

private:
    struct Entry {
        std::uint8_t dtype = 0;
        std::vector<std::int64_t> dims;
        std::vector<char> bytes;
    };
    const Entry& at(const std::string& key, std::uint8_t dtype) const;

    // Insertion order is kept so files are byte-stable.
    std::vector<std::string> order_;
    std::map<std::string, Entry> entries_;
};

struct Checkpoint {
    std::int64_t iteration = 0;
    std::int64_t cycle = 0;
    std::int64_t epoch = 0;
    ModelState student;
    ModelState teacher;
    AdamMoments<float> moments;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Rebuilds the parameter layout from the stored student arrays.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace csrda
