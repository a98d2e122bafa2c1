#include "swarmplan/gnn.hpp"

#include <cmath>
#include <random>

namespace swarmplan {
namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

Tensor2 uniform_tensor(int rows, int cols, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor2 t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
    return t;
}

Affine make_affine(int in, int out, bool random, bool use_bias, std::mt19937_64& rng) {
    if (!random) return {Tensor2::Zero(in, out), Tensor2::Zero(1, out)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Affine a{uniform_tensor(in, out, bound, rng), Tensor2::Zero(1, out)};
    if (use_bias) a.bias = uniform_tensor(1, out, bound, rng);
    return a;
}

GnnParams build(const GnnConfig& c, bool random, std::uint64_t seed) {
    c.validate();
    std::mt19937_64 rng(seed);
    GnnParams p;
    p.config = c;
    const int f = c.features;
    const int g = c.mlp_hidden;
    p.read_in.push_back(make_affine(c.input_dim, f, random, c.use_bias, rng));
    p.read_in.push_back(make_affine(f, f, random, c.use_bias, rng));
    for (int l = 0; l < c.num_layers; ++l) {
        GnnLayerParams layer;
        const double bound = 1.0 / std::sqrt(static_cast<double>(f) * c.taps);
        for (int k = 0; k < c.taps; ++k) {
            layer.taps.push_back(random ? uniform_tensor(f, f, bound, rng) : Tensor2::Zero(f, f));
        }
        layer.conv_bias = random && c.use_bias ? uniform_tensor(1, f, bound, rng) : Tensor2::Zero(1, f);
        for (int m = 0; m < c.mlp_depth; ++m) {
            const int in = m == 0 ? f : g;
            const int out = m == c.mlp_depth - 1 ? f : g;
            layer.mlp.push_back(make_affine(in, out, random, c.use_bias, rng));
        }
        p.layers.push_back(std::move(layer));
    }
    p.read_out.push_back(make_affine(f, f, random, c.use_bias, rng));
    p.read_out.push_back(make_affine(f, c.output_dim, random, c.use_bias, rng));
    return p;
}

template <class Self, class Fn>
void visit_tensors(Self& p, Fn&& fn) {
    auto visit_affines = [&](auto& affines, const std::string& prefix) {
        for (std::size_t m = 0; m < affines.size(); ++m) {
            fn(affines[m].weight, prefix + "." + std::to_string(m) + ".weight");
            fn(affines[m].bias, prefix + "." + std::to_string(m) + ".bias");
        }
    };
    visit_affines(p.read_in, "read_in");
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& layer = p.layers[l];
        const std::string prefix = "layer" + std::to_string(l);
        for (std::size_t k = 0; k < layer.taps.size(); ++k) {
            fn(layer.taps[k], prefix + ".tap" + std::to_string(k));
        }
        fn(layer.conv_bias, prefix + ".conv_bias");
        visit_affines(layer.mlp, prefix + ".mlp");
    }
    visit_affines(p.read_out, "read_out");
}

void check_finite(const Tensor2& t, const std::string& where) {
    if (!t.allFinite()) {
        throw NumericError("non-finite activation in " + where);
    }
}

// tanh(r)/r and (d/dr)(tanh(r)/r) / r, stable near zero.
constexpr double kSquashCap = 15.0;

void squash_factors(double r, double& f, double& fprime_over_r) {
    if (r < 1e-3) {
        const double r2 = r * r;
        f = 1.0 - r2 / 3.0 + 2.0 * r2 * r2 / 15.0;
        fprime_over_r = -2.0 / 3.0 + 8.0 * r2 / 15.0;
        return;
    }
    if (r > kSquashCap) {
        const double t = std::tanh(kSquashCap);
        f = t / r;
        fprime_over_r = -t / (r * r * r);
        return;
    }
    const double t = std::tanh(r);
    const double sech2 = 1.0 - t * t;
    f = t / r;
    fprime_over_r = (sech2 * r - t) / (r * r * r);
}

}  // namespace

std::string to_string(Nonlinearity n) {
    switch (n) {
        case Nonlinearity::LeakyRelu: return "leaky_relu";
        case Nonlinearity::Tanh: return "tanh";
        case Nonlinearity::Identity: return "identity";
    }
    return "unknown";
}

Nonlinearity parse_nonlinearity(const std::string& name) {
    if (name == "leaky_relu") return Nonlinearity::LeakyRelu;
    if (name == "tanh") return Nonlinearity::Tanh;
    if (name == "identity") return Nonlinearity::Identity;
    throw std::invalid_argument("unknown nonlinearity '" + name + "'");
}

void GnnConfig::validate() const {
    require(num_layers >= 1, "num_layers must be >= 1");
    require(taps >= 1, "taps must be >= 1");
    require(features >= 1, "features must be >= 1");
    require(mlp_hidden >= 1, "mlp_hidden must be >= 1");
    require(mlp_depth >= 1, "mlp_depth must be >= 1");
    require(input_dim >= 1, "input_dim must be >= 1");
    require(output_dim >= 1, "output_dim must be >= 1");
    require(!action_squash || (output_dim == 2 && max_speed > 0.0),
            "action_squash needs output_dim == 2 and max_speed > 0");
}

GnnParams GnnParams::zeros(const GnnConfig& config) { return build(config, false, 0); }

GnnParams GnnParams::init(const GnnConfig& config, std::uint64_t seed) { return build(config, true, seed); }

std::vector<Tensor2*> GnnParams::tensors() {
    std::vector<Tensor2*> out;
    visit_tensors(*this, [&](Tensor2& t, const std::string&) { out.push_back(&t); });
    return out;
}

std::vector<const Tensor2*> GnnParams::tensors() const {
    std::vector<const Tensor2*> out;
    visit_tensors(*this, [&](const Tensor2& t, const std::string&) { out.push_back(&t); });
    return out;
}

std::vector<std::string> GnnParams::tensor_names() const {
    std::vector<std::string> out;
    visit_tensors(*this, [&](const Tensor2&, const std::string& name) { out.push_back(name); });
    return out;
}

std::size_t GnnParams::parameter_count() const {
    std::size_t total = 0;
    for (const Tensor2* t : tensors()) total += static_cast<std::size_t>(t->size());
    return total;
}

void GnnParams::set_zero() {
    for (Tensor2* t : tensors()) t->setZero();
}

Tensor2 activate(const Tensor2& pre, Nonlinearity n) {
    switch (n) {
        case Nonlinearity::LeakyRelu:
            return pre.unaryExpr([](double x) { return x > 0.0 ? x : kLeakySlope * x; });
        case Nonlinearity::Tanh:
            return pre.array().tanh().matrix();
        case Nonlinearity::Identity:
            return pre;
    }
    return pre;
}

Tensor2 activate_backward(const Tensor2& pre, const Tensor2& grad, Nonlinearity n) {
    switch (n) {
        case Nonlinearity::LeakyRelu:
            return grad.binaryExpr(pre, [](double g, double x) { return x > 0.0 ? g : kLeakySlope * g; });
        case Nonlinearity::Tanh:
            return grad.binaryExpr(pre, [](double g, double x) {
                const double t = std::tanh(x);
                return g * (1.0 - t * t);
            });
        case Nonlinearity::Identity:
            return grad;
    }
    return grad;
}

Tensor2 graph_conv_forward(const Tensor2& z, const Adjacency& s, std::span<const Tensor2> taps,
                           const Tensor2* bias, Nonlinearity n, GraphConvCache* cache) {
    require(!taps.empty(), "graph_conv_forward needs at least one tap");
    require(s.rows() == z.rows() && s.cols() == z.rows(),
            "shift operator must be N x N with N = rows of Z");
    for (const Tensor2& h : taps) {
        require(h.rows() == z.cols(), "tap rows must equal feature count of Z");
        require(h.cols() == taps.front().cols(), "taps must share an output width");
    }
    Tensor2 power = z;
    Tensor2 pre(z.rows(), taps.front().cols());
    pre.noalias() = power * taps[0];
    if (cache) {
        cache->powers.clear();
        cache->powers.push_back(power);
    }
    for (std::size_t k = 1; k < taps.size(); ++k) {
        Tensor2 next = s * power;
        power = std::move(next);
        pre.noalias() += power * taps[k];
        if (cache) cache->powers.push_back(power);
    }
    if (bias) {
        require(bias->rows() == 1 && bias->cols() == pre.cols(), "conv bias shape mismatch");
        pre.rowwise() += bias->row(0);
    }
    Tensor2 out = activate(pre, n);
    if (cache) cache->pre = std::move(pre);
    return out;
}

Tensor2 graph_conv_backward(const GraphConvCache& cache, const Adjacency& s,
                            std::span<const Tensor2> taps, const Tensor2& grad_out, Nonlinearity n,
                            std::span<Tensor2> tap_grads, Tensor2* bias_grad) {
    const Tensor2 d_pre = activate_backward(cache.pre, grad_out, n);
    if (bias_grad) *bias_grad += d_pre.colwise().sum();
    const std::size_t k_taps = taps.size();
    for (std::size_t k = 0; k < k_taps; ++k) {
        tap_grads[k].noalias() += cache.powers[k].transpose() * d_pre;
    }
    // dZ = sum_k (S^T)^k d_pre H_k^T, evaluated Horner style.
    Tensor2 acc = d_pre * taps[k_taps - 1].transpose();
    for (std::size_t k = k_taps - 1; k-- > 0;) {
        Tensor2 shifted = s.transpose() * acc;
        shifted.noalias() += d_pre * taps[k].transpose();
        acc = std::move(shifted);
    }
    return acc;
}

Tensor2 mlp_forward(const Tensor2& x, std::span<const Affine> affines, Nonlinearity n,
                    bool activate_last, bool use_bias, MlpCache* cache) {
    if (cache) {
        cache->inputs.clear();
        cache->pre.clear();
    }
    Tensor2 h = x;
    for (std::size_t m = 0; m < affines.size(); ++m) {
        const Affine& a = affines[m];
        require(a.weight.rows() == h.cols(), "affine input width mismatch");
        Tensor2 pre(h.rows(), a.weight.cols());
        pre.noalias() = h * a.weight;
        if (use_bias) pre.rowwise() += a.bias.row(0);
        const bool act = activate_last || m + 1 < affines.size();
        Tensor2 out = act ? activate(pre, n) : pre;
        if (cache) {
            cache->inputs.push_back(std::move(h));
            cache->pre.push_back(std::move(pre));
        }
        h = std::move(out);
    }
    return h;
}

Tensor2 mlp_backward(const MlpCache& cache, std::span<const Affine> affines, const Tensor2& grad_out,
                     Nonlinearity n, bool activate_last, std::span<Affine> grads, bool use_bias) {
    Tensor2 g = grad_out;
    for (std::size_t m = affines.size(); m-- > 0;) {
        const bool act = activate_last || m + 1 < affines.size();
        const Tensor2 d_pre = act ? activate_backward(cache.pre[m], g, n) : g;
        grads[m].weight.noalias() += cache.inputs[m].transpose() * d_pre;
        if (use_bias) grads[m].bias += d_pre.colwise().sum();
        Tensor2 next(d_pre.rows(), affines[m].weight.rows());
        next.noalias() = d_pre * affines[m].weight.transpose();
        g = std::move(next);
    }
    return g;
}

Tensor2 residual_mlp_forward(const Tensor2& z_hat, const Tensor2& z_prev,
                             std::span<const Affine> affines, Nonlinearity n, bool use_bias,
                             MlpCache* cache) {
    require(z_hat.rows() == z_prev.rows(), "residual input row mismatch");
    Tensor2 out = mlp_forward(z_hat, affines, n, true, use_bias, cache);
    require(out.cols() == z_prev.cols(), "residual MLP output width must equal F");
    out += z_prev;
    return out;
}

Tensor2 squash_rows(const Tensor2& v, double max_speed) {
    Tensor2 u(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        double f = 0.0;
        double unused = 0.0;
        squash_factors(v.row(i).norm(), f, unused);
        u.row(i) = (max_speed * f) * v.row(i);
    }
    return u;
}

Tensor2 squash_rows_backward(const Tensor2& v, const Tensor2& grad_out, double max_speed) {
    Tensor2 g(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        double f = 0.0;
        double fpr = 0.0;
        squash_factors(v.row(i).norm(), f, fpr);
        const double dot = v.row(i).dot(grad_out.row(i));
        g.row(i) = max_speed * (f * grad_out.row(i) + (fpr * dot) * v.row(i));
    }
    return g;
}

namespace {

Tensor2 run_forward(const GnnParams& params, const Tensor2& obs, const Adjacency& shift,
                    GradTape* tape) {
    const GnnConfig& c = params.config;
    require(obs.cols() == c.input_dim, "observation width " + std::to_string(obs.cols()) +
                                           " does not match input_dim " + std::to_string(c.input_dim));
    require(shift.rows() == obs.rows() && shift.cols() == obs.rows(),
            "shift operator must be N x N with N = observation rows");
    Tensor2 z = mlp_forward(obs, params.read_in, c.nonlinearity, true, c.use_bias,
                            tape ? &tape->read_in : nullptr);
    check_finite(z, "read-in");
    if (tape) tape->layers.resize(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const GnnLayerParams& layer = params.layers[l];
        LayerCache* lc = tape ? &tape->layers[l] : nullptr;
        const Tensor2 z_hat = graph_conv_forward(z, shift, layer.taps, c.use_bias ? &layer.conv_bias : nullptr,
                                                 c.nonlinearity, lc ? &lc->conv : nullptr);
        z = residual_mlp_forward(z_hat, z, layer.mlp, c.nonlinearity, c.use_bias, lc ? &lc->mlp : nullptr);
        check_finite(z, "layer " + std::to_string(l));
    }
    Tensor2 raw = mlp_forward(z, params.read_out, c.nonlinearity, false, c.use_bias,
                              tape ? &tape->read_out : nullptr);
    check_finite(raw, "read-out");
    if (!c.action_squash) return raw;
    Tensor2 out = squash_rows(raw, c.max_speed);
    if (tape) tape->raw_output = std::move(raw);
    return out;
}

}  // namespace

GnnForward gnn_forward(const GnnParams& params, const Tensor2& observations, const Adjacency& shift) {
    GnnForward result;
    result.tape.config = params.config;
    result.tape.shift = shift;
    result.tape.input = observations;
    result.output = run_forward(params, observations, shift, &result.tape);
    return result;
}

Tensor2 gnn_infer(const GnnParams& params, const Tensor2& observations, const Adjacency& shift) {
    return run_forward(params, observations, shift, nullptr);
}

GnnGradients gnn_backward(GradTape& tape, const GnnParams& params, const Tensor2& grad_output) {
    if (tape.consumed) {
        throw std::logic_error("gradient tape already consumed by a previous backward call");
    }
    require(tape.config == params.config, "tape was recorded with a different network config");
    const GnnConfig& c = params.config;
    require(grad_output.rows() == tape.input.rows() && grad_output.cols() == c.output_dim,
            "upstream gradient shape mismatch");
    tape.consumed = true;

    GnnGradients grads{GnnParams::zeros(c), Tensor2()};
    Tensor2 g = c.action_squash ? squash_rows_backward(tape.raw_output, grad_output, c.max_speed) : grad_output;
    g = mlp_backward(tape.read_out, params.read_out, g, c.nonlinearity, false, grads.params.read_out, c.use_bias);
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const GnnLayerParams& layer = params.layers[l];
        GnnLayerParams& lg = grads.params.layers[l];
        const LayerCache& lc = tape.layers[l];
        // Z_l = Z_{l-1} + MLP(conv(Z_{l-1}))
        const Tensor2 d_hat = mlp_backward(lc.mlp, layer.mlp, g, c.nonlinearity, true, lg.mlp, c.use_bias);
        Tensor2 d_prev = graph_conv_backward(lc.conv, tape.shift, layer.taps, d_hat, c.nonlinearity, lg.taps,
                                             c.use_bias ? &lg.conv_bias : nullptr);
        d_prev += g;
        g = std::move(d_prev);
    }
    grads.input = mlp_backward(tape.read_in, params.read_in, g, c.nonlinearity, true, grads.params.read_in,
                               c.use_bias);
    return grads;
}

Adjacency to_adjacency(const Tensor2& dense) {
    require(dense.rows() == dense.cols(), "adjacency must be square");
    Adjacency s = dense.sparseView();
    s.makeCompressed();
    return s;
}

Adjacency block_diagonal(std::span<const Adjacency> blocks) {
    Eigen::Index total = 0;
    std::size_t nnz = 0;
    for (const Adjacency& b : blocks) {
        require(b.rows() == b.cols(), "adjacency blocks must be square");
        total += b.rows();
        nnz += static_cast<std::size_t>(b.nonZeros());
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(nnz);
    Eigen::Index offset = 0;
    for (const Adjacency& b : blocks) {
        for (Eigen::Index r = 0; r < b.outerSize(); ++r) {
            for (Adjacency::InnerIterator it(b, r); it; ++it) {
                triplets.emplace_back(offset + it.row(), offset + it.col(), it.value());
            }
        }
        offset += b.rows();
    }
    Adjacency out(total, total);
    out.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

}  // namespace swarmplan
