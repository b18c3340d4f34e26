#include "selqa/optim.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "selqa/error.hpp"

namespace selqa {

ad::Tensor<float> orthogonal_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("orthogonal_init: dimensions must be positive");
    const std::size_t tall = std::max(rows, cols);
    const std::size_t wide = std::min(rows, cols);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(tall, wide);
    for (Eigen::Index c = 0; c < g.cols(); ++c)
        for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = normal(rng);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, wide);
    // Sign fix so the distribution is uniform over orthogonal matrices.
    Eigen::MatrixXd r = qr.matrixQR().topRows(wide).triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
        if (r(c, c) < 0) q.col(c) *= -1.0;
    }

    ad::Tensor<float> out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            out(i, j) = static_cast<float>(rows >= cols ? q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                                                        : q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)));
    return out;
}

namespace {

void update_coordinate(float& p, float& acc, double g, const RmspropState& s, const std::string& name) {
    const double a = s.decay * acc + (1.0 - s.decay) * g * g;
    const double next = p - s.lr * g / (std::sqrt(a) + s.eps);
    if (!std::isfinite(next) || !std::isfinite(a)) throw NumericError("rmsprop: non-finite update for " + name);
    acc = static_cast<float>(a);
    p = static_cast<float>(next);
}

}  // namespace

void rmsprop_step(RmspropState& state, ParamSet<float>& params, const Gradients<float>& grads, double l2) {
    if (l2 < 0) throw std::invalid_argument("rmsprop: l2 must be non-negative");
    for (auto& p : params.items()) {
        if (!p.trainable) continue;
        auto [it, inserted] = state.accumulators.try_emplace(p.name, p.value.rows(), p.value.cols());
        auto& acc = it->second;
        if (p.embedding) {
            auto sp = grads.sparse.find(p.name);
            if (sp != grads.sparse.end()) {
                for (const auto& [row, g] : sp->second)
                    for (std::size_t c = 0; c < g.size(); ++c) update_coordinate(p.value(row, c), acc(row, c), g[c], state, p.name);
            }
            auto dn = grads.dense.find(p.name);
            if (dn != grads.dense.end()) {
                for (std::size_t i = 0; i < p.value.size(); ++i) {
                    if (dn->second[i] != 0.0f) update_coordinate(p.value[i], acc[i], dn->second[i], state, p.name);
                }
            }
            continue;
        }
        auto dn = grads.dense.find(p.name);
        const ad::Tensor<float>* g = dn == grads.dense.end() ? nullptr : &dn->second;
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            double gi = g ? static_cast<double>((*g)[i]) : 0.0;
            gi += 2.0 * l2 * p.value[i];
            update_coordinate(p.value[i], acc[i], gi, state, p.name);
        }
    }
}

GradCheckReport grad_check(const LossFn& f, ParamSet<double> params, const GradCheckOptions& options) {
    GradCheckReport report;
    Gradients<double> analytic;
    const double base = f(params, &analytic);
    if (!std::isfinite(base)) {
        report.failure = "loss is non-finite at the base point";
        return report;
    }
    std::mt19937_64 rng(options.seed);
    for (auto& p : params.items()) {
        if (!p.trainable) continue;
        const ad::Tensor<double> g = analytic.densify(p);
        std::vector<std::size_t> coords(p.value.size());
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (options.max_coords_per_param && coords.size() > options.max_coords_per_param) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(options.max_coords_per_param);
            std::sort(coords.begin(), coords.end());
        }
        for (std::size_t i : coords) {
            const double orig = p.value[i];
            p.value[i] = orig + options.h;
            const double up = f(params, nullptr);
            p.value[i] = orig - options.h;
            const double down = f(params, nullptr);
            p.value[i] = orig;
            const std::string id = p.name + "[" + std::to_string(i) + "]";
            if (!std::isfinite(up) || !std::isfinite(down) || !std::isfinite(g[i])) {
                report.failure = "non-finite value at " + id;
                report.worst = id;
                report.passed = false;
                return report;
            }
            const double numeric = (up - down) / (2.0 * options.h);
            const double rel = std::abs(g[i] - numeric) / (std::abs(g[i]) + std::abs(numeric) + 1e-8);
            ++report.checked;
            if (report.worst.empty() || rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst = id;
            }
        }
    }
    report.passed = report.max_rel_error < options.tol;
    return report;
}

}  // namespace selqa
