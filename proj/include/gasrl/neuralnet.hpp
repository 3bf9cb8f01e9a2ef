#pragma once

#include "gasrl/rng.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <span>
#include <vector>

namespace gasrl::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct DenseLayer {
    Matrix weight;  // out x in
    Vector bias;    // out
};

/// Parameter gradients, one entry per layer, congruent with Mlp::layers.
using Gradients = std::vector<DenseLayer>;

/// Inputs seen by each layer during a forward pass; needed by backward().
struct Tape {
    std::vector<Matrix> inputs;
};

/// Dense feed-forward network: rectified-linear hidden layers, linear output.
/// Batches are column-major: one sample per column.
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<DenseLayer> layers);

    /// `sizes` = {input, hidden..., output}. Weights and biases are drawn from
    /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    static Mlp create(std::span<const int> sizes, CounterRng& rng);
    static Mlp zeros(std::span<const int> sizes);

    Eigen::Index input_size() const;
    Eigen::Index output_size() const;
    std::vector<int> sizes() const;

    Matrix forward(const Matrix& x) const;
    Matrix forward(const Matrix& x, Tape& tape) const;
    std::vector<double> forward(std::span<const double> x) const;

    /// Reverse-mode pass for the scalar loss whose gradient w.r.t. the output is
    /// `upstream`. Writes parameter gradients into `grads` when non-null and
    /// returns the gradient w.r.t. the input batch.
    Matrix backward(const Tape& tape, const Matrix& upstream, Gradients* grads) const;

    Gradients zero_gradients() const;

    std::size_t parameter_count() const;
    /// Parameters flattened layer by layer: weight (column-major) then bias.
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);

    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    bool all_finite() const;
    bool operator==(const Mlp& other) const;

private:
    void check_shapes() const;

    std::vector<DenseLayer> layers_;
};

std::vector<double> flatten(const Gradients& grads);

/// Bias-corrected adaptive-moment optimizer bound to one network's shapes.
class Adam {
public:
    struct Hyper {
        double learning_rate = 3e-4;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
        bool operator==(const Hyper&) const = default;
    };

    Adam() = default;
    Adam(const Mlp& net, Hyper hyper);

    void step(Mlp& net, const Gradients& grads);

    const Hyper& hyper() const { return hyper_; }
    long step_count() const { return steps_; }

    nlohmann::json to_json() const;
    static Adam from_json(const nlohmann::json& j);
    bool operator==(const Adam& other) const;

private:
    Hyper hyper_{};
    long steps_ = 0;
    Gradients first_;
    Gradients second_;
};

/// Scalar Adam for a single free parameter (the SAC temperature).
struct ScalarAdam {
    Adam::Hyper hyper{};
    long steps = 0;
    double first = 0.0;
    double second = 0.0;

    double step(double param, double grad);
    bool operator==(const ScalarAdam&) const = default;
};

/// target <- (1 - tau) target + tau online, elementwise.
void soft_update(Mlp& target, const Mlp& online, double tau);

nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

/// Raw little-endian doubles wrapped as a JSON binary value (bit-exact in CBOR).
nlohmann::json encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(const nlohmann::json& j);

}  // namespace gasrl::nn
