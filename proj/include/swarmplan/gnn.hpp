#pragma once

#include "swarmplan/tensor.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmplan {

enum class Nonlinearity { LeakyRelu, Tanh, Identity };

inline constexpr double kLeakySlope = 0.01;

std::string to_string(Nonlinearity n);
Nonlinearity parse_nonlinearity(const std::string& name);

struct GnnConfig {
    int num_layers = 5;    ///< L
    int taps = 3;          ///< K
    int features = 128;    ///< F
    int mlp_hidden = 256;  ///< hidden width of the per-layer MLP
    int mlp_depth = 3;     ///< affine maps per layer MLP
    int input_dim = 14;    ///< 2(1 + 2k)
    int output_dim = 2;
    Nonlinearity nonlinearity = Nonlinearity::LeakyRelu;
    bool action_squash = true;
    double max_speed = 0.5;  ///< squash radius
    bool use_bias = true;
    bool normalize_adjacency = false;

    void validate() const;
    bool operator==(const GnnConfig&) const = default;
};

/// y = x W + b with W of shape in x out and b of shape 1 x out.
struct Affine {
    Tensor2 weight;
    Tensor2 bias;
};

struct GnnLayerParams {
    std::vector<Tensor2> taps;  ///< H_0..H_{K-1}, each F x F
    Tensor2 conv_bias;          ///< 1 x F
    std::vector<Affine> mlp;    ///< F x G, G x G ..., G x F
};

/// All learnable tensors of one network. Read-in maps input_dim -> F -> F,
/// read-out maps F -> F -> output_dim.
struct GnnParams {
    GnnConfig config;
    std::vector<Affine> read_in;
    std::vector<GnnLayerParams> layers;
    std::vector<Affine> read_out;

    static GnnParams zeros(const GnnConfig& config);
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per matrix; biases zero when use_bias is off.
    static GnnParams init(const GnnConfig& config, std::uint64_t seed);

    /// Stable traversal order shared by optimizers, checkpoints and gradient checks.
    std::vector<Tensor2*> tensors();
    std::vector<const Tensor2*> tensors() const;
    std::vector<std::string> tensor_names() const;
    std::size_t parameter_count() const;
    void set_zero();
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Tensor2 activate(const Tensor2& pre, Nonlinearity n);
/// Multiplies `grad` by the activation derivative evaluated at `pre`.
Tensor2 activate_backward(const Tensor2& pre, const Tensor2& grad, Nonlinearity n);

struct MlpCache {
    std::vector<Tensor2> inputs;
    std::vector<Tensor2> pre;
};

struct GraphConvCache {
    std::vector<Tensor2> powers;  ///< S^k Z for k = 0..K-1
    Tensor2 pre;
};

struct LayerCache {
    GraphConvCache conv;
    MlpCache mlp;
};

/// Intermediate activations of one forward call. Consumed by one backward call.
struct GradTape {
    GnnConfig config;
    Adjacency shift;
    Tensor2 input;
    MlpCache read_in;
    std::vector<LayerCache> layers;
    MlpCache read_out;
    Tensor2 raw_output;
    bool consumed = false;
};

/// sigma(sum_k S^k Z H_k + b). Powers are applied iteratively, never materialized.
Tensor2 graph_conv_forward(const Tensor2& z, const Adjacency& s, std::span<const Tensor2> taps,
                           const Tensor2* bias, Nonlinearity n, GraphConvCache* cache = nullptr);

/// Returns dL/dZ and accumulates into tap_grads / bias_grad.
Tensor2 graph_conv_backward(const GraphConvCache& cache, const Adjacency& s,
                            std::span<const Tensor2> taps, const Tensor2& grad_out, Nonlinearity n,
                            std::span<Tensor2> tap_grads, Tensor2* bias_grad);

/// Runs the affine stack; the activation follows every map, or every map but
/// the last when activate_last is false.
Tensor2 mlp_forward(const Tensor2& x, std::span<const Affine> affines, Nonlinearity n,
                    bool activate_last, bool use_bias, MlpCache* cache = nullptr);

Tensor2 mlp_backward(const MlpCache& cache, std::span<const Affine> affines, const Tensor2& grad_out,
                     Nonlinearity n, bool activate_last, std::span<Affine> grads, bool use_bias);

/// z_prev + MLP(z_hat).
Tensor2 residual_mlp_forward(const Tensor2& z_hat, const Tensor2& z_prev,
                             std::span<const Affine> affines, Nonlinearity n, bool use_bias,
                             MlpCache* cache = nullptr);

/// u = u_max * tanh(|v|) * v / |v|, row by row.
Tensor2 squash_rows(const Tensor2& v, double max_speed);
Tensor2 squash_rows_backward(const Tensor2& v, const Tensor2& grad_out, double max_speed);

struct GnnForward {
    Tensor2 output;
    GradTape tape;
};

GnnForward gnn_forward(const GnnParams& params, const Tensor2& observations, const Adjacency& shift);
/// Forward pass without recording a tape.
Tensor2 gnn_infer(const GnnParams& params, const Tensor2& observations, const Adjacency& shift);

struct GnnGradients {
    GnnParams params;
    Tensor2 input;
};

/// Exact reverse-mode gradients for all parameters and the input rows.
/// Throws std::logic_error if the tape was already consumed.
GnnGradients gnn_backward(GradTape& tape, const GnnParams& params, const Tensor2& grad_output);

/// Dense N x N adjacency to sparse form.
Adjacency to_adjacency(const Tensor2& dense);
/// Block-diagonal stack of several graphs, one block per sample.
Adjacency block_diagonal(std::span<const Adjacency> blocks);

}  // namespace swarmplan
