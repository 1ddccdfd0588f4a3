#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fgan {

enum class HiddenActivation { relu, tanh };
enum class OutputActivation { sigmoid, identity };

// Sigmoid outputs are clamped into [kProbClamp, 1 - kProbClamp] so that the
// log terms of the adversarial value function stay finite.
constexpr double kProbClamp = 1e-7;

// Fully-connected network shape. Parameters are stored flat, layer by layer,
// weights before biases: for layer l with fan_in i and fan_out o the block is
// o*i weights in row-major order (one row per output unit) followed by o
// biases.
struct MlpSpec {
    std::vector<std::size_t> layer_sizes;
    HiddenActivation hidden_activation = HiddenActivation::relu;
    OutputActivation output_activation = OutputActivation::sigmoid;

    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t output_dim() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return layer_sizes.size() - 1; }
    std::size_t param_count() const;

    // Throws std::invalid_argument when fewer than two layer sizes or any
    // size is zero.
    void validate() const;

    bool operator==(const MlpSpec&) const = default;
};

std::uint64_t spec_hash(const MlpSpec& spec);

struct ParamVector {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    bool operator==(const ParamVector&) const = default;
};

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
ParamVector init_params(const MlpSpec& spec, std::uint64_t seed);

// Plain inference pass. Sigmoid outputs come back clamped, so every
// component is strictly inside (0, 1).
std::vector<double> forward(const MlpSpec& spec, const ParamVector& params,
                            std::span<const double> input);

// Binary layout: 8-byte spec hash, u32 value count, then count little-endian
// IEEE-754 doubles. The hash lets a loader reject vectors produced for a
// different architecture.
std::vector<std::uint8_t> serialize_params(const MlpSpec& spec,
                                           const ParamVector& params);
ParamVector deserialize_params(const MlpSpec& expected_spec,
                               std::span<const std::uint8_t> bytes);

namespace detail {

// Forward pass that keeps pre-activations and activations per layer; the
// gradient code in gan.cpp consumes this.
struct ForwardTrace {
    std::vector<std::vector<double>> pre;   // z_l, one per layer
    std::vector<std::vector<double>> act;   // a_0 = input, then a_l
};

ForwardTrace forward_trace(const MlpSpec& spec, const ParamVector& params,
                           std::span<const double> input);

double apply_hidden(HiddenActivation act, double z);
double hidden_derivative(HiddenActivation act, double z);

// Offset of layer l's weight block inside the flat parameter vector.
std::size_t layer_offset(const MlpSpec& spec, std::size_t layer);

}  // namespace detail

}  // namespace fgan
