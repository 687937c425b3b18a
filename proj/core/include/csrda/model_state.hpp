#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "csrda/error.hpp"

namespace csrda {

struct ParamSpec {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

// Ordered, named parameter arrays laid out back-to-back in one flat buffer.
class ParamLayout {
public:
    std::size_t add(std::string name, std::vector<int> shape);

    const std::vector<ParamSpec>& params() const noexcept { return params_; }
    std::size_t total_size() const noexcept { return total_; }
    const ParamSpec& find(const std::string& name) const;
    const ParamSpec& owner_of(std::size_t flat_index) const;

    friend bool operator==(const ParamLayout& a, const ParamLayout& b);

private:
    std::vector<ParamSpec> params_;
    std::size_t total_ = 0;
};

// Flat parameter (or gradient / moment) buffer bound to a layout. Used for
// student and teacher weights, their gradients and the optimizer moments.
template <typename T>
struct ParamSet {
    std::string architecture_id;
    std::shared_ptr<const ParamLayout> layout;
    std::vector<T> values;

    static ParamSet zeros(std::string architecture_id, std::shared_ptr<const ParamLayout> layout) {
        ParamSet p{std::move(architecture_id), std::move(layout), {}};
        p.values.assign(p.layout->total_size(), T(0));
        return p;
    }
    ParamSet zeros_like() const { return zeros(architecture_id, layout); }

    std::size_t param_count() const noexcept { return values.size(); }
    std::span<T> view(const ParamSpec& p) noexcept { return {values.data() + p.offset, p.size}; }
    std::span<const T> view(const ParamSpec& p) const noexcept { return {values.data() + p.offset, p.size}; }
    std::span<T> view(const std::string& name) { return view(layout->find(name)); }
    std::span<const T> view(const std::string& name) const { return view(layout->find(name)); }

    template <typename U>
    ParamSet<U> cast() const {
        ParamSet<U> out{architecture_id, layout, {}};
        out.values.assign(values.begin(), values.end());
        return out;
    }

    bool compatible_with(const ParamSet& o) const noexcept {
        return architecture_id == o.architecture_id && values.size() == o.values.size();
    }
};

using ModelState = ParamSet<float>;
using Gradients = ParamSet<float>;

// Throws NumericError naming the first parameter holding a NaN/Inf value.
template <typename T>
void require_finite(const ParamSet<T>& p, const char* what);

// Stable 64-bit FNV-1a digest of the raw parameter bytes.
template <typename T>
std::uint64_t param_hash(const ParamSet<T>& p);

// Throws Error unless both sets share architecture and sizes.
template <typename T>
void require_compatible(const ParamSet<T>& a, const ParamSet<T>& b, const char* what);

}  // namespace csrda
