#include "swarmplan/adamw.hpp"

#include <cmath>
#include <stdexcept>

namespace swarmplan {

AdamWState::AdamWState(std::span<const Tensor2* const> shapes, AdamWOptions opts) : options(opts) {
    for (const Tensor2* t : shapes) {
        first_moment.push_back(Tensor2::Zero(t->rows(), t->cols()));
        second_moment.push_back(Tensor2::Zero(t->rows(), t->cols()));
    }
}

AdamWState::AdamWState(const GnnParams& shapes, AdamWOptions opts)
    : AdamWState(std::span<const Tensor2* const>(shapes.tensors()), opts) {}

void adamw_step(std::span<Tensor2* const> params, std::span<const Tensor2* const> grads, AdamWState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        throw std::invalid_argument("adamw: parameter, gradient and moment lists differ in length");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols() ||
            params[i]->rows() != state.first_moment[i].rows() || params[i]->cols() != state.first_moment[i].cols()) {
            throw std::invalid_argument("adamw: shape mismatch at tensor " + std::to_string(i));
        }
    }
    const AdamWOptions& o = state.options;
    ++state.step;
    const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        double* p = params[i]->data();
        const double* g = grads[i]->data();
        double* m = state.first_moment[i].data();
        double* v = state.second_moment[i].data();
        const Eigen::Index n = params[i]->size();
        for (Eigen::Index e = 0; e < n; ++e) {
            m[e] = o.beta1 * m[e] + (1.0 - o.beta1) * g[e];
            v[e] = o.beta2 * v[e] + (1.0 - o.beta2) * g[e] * g[e];
            const double m_hat = m[e] / c1;
            const double v_hat = v[e] / c2;
            p[e] -= o.lr * (m_hat / (std::sqrt(v_hat) + o.eps) + o.weight_decay * p[e]);
        }
    }
}

void adamw_step(GnnParams& params, const GnnParams& grads, AdamWState& state) {
    const auto p = params.tensors();
    const auto g = grads.tensors();
    adamw_step(std::span<Tensor2* const>(p), std::span<const Tensor2* const>(g), state);
}

}  // namespace swarmplan
