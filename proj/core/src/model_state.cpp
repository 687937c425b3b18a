#include "csrda/model_state.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

namespace csrda {

std::size_t ParamLayout::add(std::string name, std::vector<int> shape) {
    const std::size_t size =
        std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<std::size_t>());
    params_.push_back({std::move(name), std::move(shape), total_, size});
    total_ += size;
    return params_.back().offset;
}

const ParamSpec& ParamLayout::find(const std::string& name) const {
    for (const auto& p : params_) {
        if (p.name == name) return p;
    }
    throw Error("unknown parameter: " + name);
}

const ParamSpec& ParamLayout::owner_of(std::size_t flat_index) const {
    auto it = std::upper_bound(params_.begin(), params_.end(), flat_index,
                               [](std::size_t i, const ParamSpec& p) { return i < p.offset; });
    return *std::prev(it);
}

bool operator==(const ParamLayout& a, const ParamLayout& b) {
    if (a.params_.size() != b.params_.size()) return false;
    for (std::size_t i = 0; i < a.params_.size(); ++i) {
        if (a.params_[i].name != b.params_[i].name || a.params_[i].shape != b.params_[i].shape) return false;
    }
    return true;
}

template <typename T>
void require_finite(const ParamSet<T>& p, const char* what) {
    for (std::size_t i = 0; i < p.values.size(); ++i) {
        if (!std::isfinite(p.values[i])) {
            throw NumericError(std::string(what) + ": non-finite value in parameter '" +
                               p.layout->owner_of(i).name + "'");
        }
    }
}

template <typename T>
std::uint64_t param_hash(const ParamSet<T>& p) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto* bytes = reinterpret_cast<const unsigned char*>(p.values.data());
    for (std::size_t i = 0; i < p.values.size() * sizeof(T); ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
void require_compatible(const ParamSet<T>& a, const ParamSet<T>& b, const char* what) {
    if (!a.compatible_with(b)) {
        throw Error(std::string(what) + ": architecture mismatch (" + a.architecture_id + " vs " +
                    b.architecture_id + ")");
    }
}

template void require_finite(const ParamSet<float>&, const char*);
template void require_finite(const ParamSet<double>&, const char*);
template std::uint64_t param_hash(const ParamSet<float>&);
template std::uint64_t param_hash(const ParamSet<double>&);
template void require_compatible(const ParamSet<float>&, const ParamSet<float>&, const char*);
template void require_compatible(const ParamSet<double>&, const ParamSet<double>&, const char*);

}  // namespace csrda
