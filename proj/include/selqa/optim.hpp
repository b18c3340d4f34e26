#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "selqa/params.hpp"
#include "selqa/tensor.hpp"

namespace selqa {

/// Seeded Gaussian matrix orthogonalized by QR. Rows are orthonormal when
/// rows <= cols, columns otherwise.
ad::Tensor<float> orthogonal_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

struct RmspropState {
    double lr = 1e-3;
    double decay = 0.9;
    double eps = 1e-8;
    /// Squared-gradient moving averages, one per parameter name.
    std::map<std::string, ad::Tensor<float>> accumulators;
};

/// acc ← decay·acc + (1−decay)·g², p ← p − lr·g/(√acc + eps). Non-embedding
/// parameters get g += 2·l2·p first and are updated every step; embedding
/// tables only on the rows that received gradient.
void rmsprop_step(RmspropState& state, ParamSet<float>& params, const Gradients<float>& grads, double l2);

struct GradCheckOptions {
    double h = 1e-4;  // 1e-3 straddles max-pooling kinks on some attention fixtures
    double tol = 1e-4;
    /// 0 checks every coordinate; otherwise a seeded sample per parameter.
    std::size_t max_coords_per_param = 0;
    std::uint64_t seed = 0;
};

struct GradCheckReport {
    bool passed = false;
    double max_rel_error = 0.0;
    std::string worst;  // "param[index]"
    std::size_t checked = 0;
    std::string failure;  // set when a non-finite value was met
};

/// Loss in double precision; when grads is non-null it receives the analytic gradient.
using LossFn = std::function<double(const ParamSet<double>&, Gradients<double>*)>;

/// Central differences against the analytic gradient. Relative error per
/// coordinate is |g−ĝ|/(|g|+|ĝ|+1e-8); passes iff every coordinate is below tol.
GradCheckReport grad_check(const LossFn& f, ParamSet<double> params, const GradCheckOptions& options = {});

}  // namespace selqa
