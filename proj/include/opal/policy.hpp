#pragma once

#include "opal/operators.hpp"

#include <optional>
#include <string>
#include <vector>

namespace opal {

/// Shape of the encoder and heads. The parameter count is a function of
/// these fields alone.
struct Architecture {
    int input = 6;
    int hidden = 64;
    int layers = 3;
    int operators = kNumOperators;
    int phases = 3;
    int classes = 4;
    int aux_hidden = 32;

    std::size_t parameter_count() const;
    bool operator==(const Architecture&) const = default;
};

/// All learnable weights in one flat vector, with structured views.
///
/// Matrices are stored column-major as (fan_in x fan_out), so a layer maps
/// row features X to X * W + b.
class PolicyParams {
public:
    struct Block {
        std::string name;
        Eigen::Index offset = 0;
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        Eigen::Index size() const { return rows * cols; }
    };

    explicit PolicyParams(const Architecture& arch = {});

    /// Glorot-uniform weights, zero biases.
    static PolicyParams initialized(const Architecture& arch, std::uint64_t seed);

    const Architecture& arch() const noexcept { return arch_; }
    Eigen::VectorXd& flat() noexcept { return flat_; }
    const Eigen::VectorXd& flat() const noexcept { return flat_; }
    void set_flat(const Eigen::VectorXd& v);
    const std::vector<Block>& blocks() const noexcept { return blocks_; }

    Eigen::Map<Eigen::MatrixXd> gnn_weight(int layer) { return mat(layer_block(layer, 0)); }
    Eigen::Map<const Eigen::MatrixXd> gnn_weight(int layer) const { return mat(layer_block(layer, 0)); }
    Eigen::Map<Eigen::MatrixXd> gnn_bias(int layer) { return mat(layer_block(layer, 1)); }
    Eigen::Map<const Eigen::MatrixXd> gnn_bias(int layer) const { return mat(layer_block(layer, 1)); }
    Eigen::Map<Eigen::MatrixXd> phase_weight(int p) { return mat(phase_block(p, 0)); }
    Eigen::Map<const Eigen::MatrixXd> phase_weight(int p) const { return mat(phase_block(p, 0)); }
    Eigen::Map<Eigen::MatrixXd> phase_bias(int p) { return mat(phase_block(p, 1)); }
    Eigen::Map<const Eigen::MatrixXd> phase_bias(int p) const { return mat(phase_block(p, 1)); }
    Eigen::Map<Eigen::MatrixXd> aux_weight(int i) { return mat(aux_block(i, 0)); }
    Eigen::Map<const Eigen::MatrixXd> aux_weight(int i) const { return mat(aux_block(i, 0)); }
    Eigen::Map<Eigen::MatrixXd> aux_bias(int i) { return mat(aux_block(i, 1)); }
    Eigen::Map<const Eigen::MatrixXd> aux_bias(int i) const { return mat(aux_block(i, 1)); }

    /// Same layout, any vector (e.g. a gradient).
    static Eigen::Map<const Eigen::MatrixXd> view(const Eigen::VectorXd& v, const Block& b) {
        return {v.data() + b.offset, b.rows, b.cols};
    }
    static Eigen::Map<Eigen::MatrixXd> view(Eigen::VectorXd& v, const Block& b) {
        return {v.data() + b.offset, b.rows, b.cols};
    }

private:
    std::size_t layer_block(int l, int part) const { return static_cast<std::size_t>(2 * l + part); }
    std::size_t phase_block(int p, int part) const {
        return static_cast<std::size_t>(2 * arch_.layers + 2 * p + part);
    }
    std::size_t aux_block(int i, int part) const {
        return static_cast<std::size_t>(2 * arch_.layers + 2 * arch_.phases + 2 * i + part);
    }
    Eigen::Map<Eigen::MatrixXd> mat(std::size_t b) { return view(flat_, blocks_.at(b)); }
    Eigen::Map<const Eigen::MatrixXd> mat(std::size_t b) const { return view(flat_, blocks_.at(b)); }

    Architecture arch_;
    std::vector<Block> blocks_;
    Eigen::VectorXd flat_;
};

/// Intermediate values of one forward pass, kept for the backward pass.
struct ForwardPass {
    Eigen::MatrixXd adj_norm;                 // D^-1 A
    std::vector<Eigen::MatrixXd> inputs;      // H^(l), l = 0..L-1
    std::vector<Eigen::MatrixXd> aggregated;  // D^-1 A H^(l)
    std::vector<Eigen::MatrixXd> pre;         // aggregated * W + b
    Eigen::VectorXd z;
    Eigen::MatrixXd logits;     // operators x phases
    Eigen::MatrixXd log_probs;  // operators x phases
    Eigen::VectorXd aux_pre;
    Eigen::VectorXd aux_hidden;
    Eigen::VectorXd aux_logits;
};

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);
/// -sum p log p of softmax(logits).
double categorical_entropy(const Eigen::VectorXd& logits);

/// Row-normalize A by its degrees. Throws on a zero-degree row.
Eigen::MatrixXd mean_aggregator(const Eigen::MatrixXd& A);

ForwardPass forward(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const PolicyParams& params);

/// Encoder only: three mean-aggregation layers with relu, then mean pooling.
Eigen::VectorXd gnn_forward(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const PolicyParams& params);
/// operators x phases matrix of unnormalized scores.
Eigen::MatrixXd phase_logits(const Eigen::VectorXd& z, const PolicyParams& params);
Eigen::VectorXd aux_forward(const Eigen::VectorXd& z, const PolicyParams& params);

enum class DecodeMode { sample, greedy };

struct PolicyOutput {
    OperatorProgram program;
    std::vector<int> tokens;
    double log_prob = 0.0;
    double entropy = 0.0;
    Eigen::VectorXd z;
    Eigen::VectorXd aux_logits;
    Eigen::MatrixXd probs;  // operators x phases
};

/// One token per phase: sampled from the categorical, or the argmax (ties
/// to the lowest token index). Calls use the operators' default theta.
PolicyOutput decode(const ForwardPass& pass, DecodeMode mode, Rng& rng);
PolicyOutput decode(const Eigen::VectorXd& z, const PolicyParams& params, DecodeMode mode, Rng& rng);

struct LossTerms {
    std::vector<int> tokens;  // one per phase, held fixed
    double advantage = 0.0;
    std::optional<int> label;  // landscape class; absent skips the aux term
    double beta = 0.0;
    double lambda_aux = 0.0;
};

struct LossResult {
    double loss = 0.0;
    double log_prob = 0.0;
    double entropy = 0.0;
    double aux_loss = 0.0;
    Eigen::VectorXd grad;  // same layout as PolicyParams::flat()
    Eigen::VectorXd aux_logits;
};

/// -A log p(tokens) - beta * entropy + lambda_aux * cross_entropy(aux, label).
double loss_value(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const LossTerms& terms,
                  const PolicyParams& params);

/// Loss and its exact gradient by a hand-written reverse pass. Throws
/// NumericalError naming the first non-finite tensor.
LossResult loss_and_gradient(const Eigen::MatrixXd& H, const Eigen::MatrixXd& A, const LossTerms& terms,
                             const PolicyParams& params);

}  // namespace opal
