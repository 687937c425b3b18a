#include "csrda/optimizer.hpp"

#include <cmath>

namespace csrda {

template <typename T>
ParamSet<T> optimizer_step(const ParamSet<T>& state, const ParamSet<T>& gradients, AdamMoments<T>& moments,
                           const AdamStep& step) {
    require_compatible(state, gradients, "optimizer_step");
    require_compatible(state, moments.first, "optimizer_step");
    require_finite(gradients, "optimizer_step gradient");
    if (step.iteration < 1) throw Error("optimizer_step: iteration is 1-based");

    const double c1 = 1.0 - std::pow(step.beta1, static_cast<double>(step.iteration));
    const double c2 = 1.0 - std::pow(step.beta2, static_cast<double>(step.iteration));
    ParamSet<T> next = state;
    auto& m = moments.first.values;
    auto& v = moments.second.values;
    for (std::size_t i = 0; i < next.values.size(); ++i) {
        const double g = gradients.values[i];
        const double mi = step.beta1 * m[i] + (1.0 - step.beta1) * g;
        const double vi = step.beta2 * v[i] + (1.0 - step.beta2) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double update = step.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + step.eps);
        next.values[i] = static_cast<T>(next.values[i] - update);
    }
    return next;
}

template ParamSet<float> optimizer_step(const ParamSet<float>&, const ParamSet<float>&, AdamMoments<float>&,
                                        const AdamStep&);
template ParamSet<double> optimizer_step(const ParamSet<double>&, const ParamSet<double>&, AdamMoments<double>&,
                                         const AdamStep&);

}  // namespace csrda
