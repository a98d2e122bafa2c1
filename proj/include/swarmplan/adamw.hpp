#pragma once

#include "swarmplan/gnn.hpp"

#include <span>
#include <vector>

namespace swarmplan {

struct AdamWOptions {
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-8;
};

/// First/second moments mirroring a parameter list, plus the step counter.
struct AdamWState {
    AdamWOptions options;
    std::vector<Tensor2> first_moment;
    std::vector<Tensor2> second_moment;
    long long step = 0;

    AdamWState() = default;
    AdamWState(std::span<const Tensor2* const> shapes, AdamWOptions opts);
    AdamWState(const GnnParams& shapes, AdamWOptions opts);
};

/// p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p), bias corrected.
void adamw_step(std::span<Tensor2* const> params, std::span<const Tensor2* const> grads, AdamWState& state);

void adamw_step(GnnParams& params, const GnnParams& grads, AdamWState& state);

}  // namespace swarmplan
