#include "fgan/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "fgan/hash.hpp"
#include "fgan/rng.hpp"

namespace fgan {

std::size_t MlpSpec::param_count() const {
    std::size_t n = 0;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
        n += layer_sizes[l] * layer_sizes[l - 1] + layer_sizes[l];
    }
    return n;
}

void MlpSpec::validate() const {
    if (layer_sizes.size() < 2) {
        throw std::invalid_argument(
            "MlpSpec: need at least input and output layer sizes");
    }
    for (std::size_t s : layer_sizes) {
        if (s == 0) throw std::invalid_argument("MlpSpec: layer size must be positive");
    }
}

std::uint64_t spec_hash(const MlpSpec& spec) {
    Hasher h;
    h.str("mlp-v1");
    h.u64(spec.layer_sizes.size());
    for (std::size_t s : spec.layer_sizes) h.u64(s);
    h.u64(static_cast<std::uint64_t>(spec.hidden_activation));
    h.u64(static_cast<std::uint64_t>(spec.output_activation));
    return h.digest();
}

ParamVector init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    ParamVector p;
    p.values.reserve(spec.param_count());
    for (std::size_t l = 1; l < spec.layer_sizes.size(); ++l) {
        const std::size_t fan_in = spec.layer_sizes[l - 1];
        const std::size_t fan_out = spec.layer_sizes[l];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t i = 0; i < fan_out * fan_in; ++i) {
            p.values.push_back((2.0 * rng.next_double() - 1.0) * bound);
        }
        for (std::size_t i = 0; i < fan_out; ++i) p.values.push_back(0.0);
    }
    return p;
}

namespace detail {

double apply_hidden(HiddenActivation act, double z) {
    switch (act) {
        case HiddenActivation::relu: return z > 0.0 ? z : 0.0;
        case HiddenActivation::tanh: return std::tanh(z);
    }
    return z;
}

double hidden_derivative(HiddenActivation act, double z) {
    switch (act) {
        case HiddenActivation::relu: return z > 0.0 ? 1.0 : 0.0;
        case HiddenActivation::tanh: {
            double t = std::tanh(z);
            return 1.0 - t * t;
        }
    }
    return 1.0;
}

std::size_t layer_offset(const MlpSpec& spec, std::size_t layer) {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layer; ++l) {
        off += spec.layer_sizes[l + 1] * spec.layer_sizes[l] + spec.layer_sizes[l + 1];
    }
    return off;
}

ForwardTrace forward_trace(const MlpSpec& spec, const ParamVector& params,
                           std::span<const double> input) {
    if (input.size() != spec.input_dim()) {
        throw std::invalid_argument("forward: input dimension mismatch");
    }
    if (params.size() != spec.param_count()) {
        throw std::invalid_argument("forward: parameter count mismatch");
    }
    ForwardTrace tr;
    tr.act.emplace_back(input.begin(), input.end());
    std::size_t off = 0;
    const std::size_t layers = spec.layer_count();
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = spec.layer_sizes[l];
        const std::size_t out = spec.layer_sizes[l + 1];
        const double* w = params.values.data() + off;
        const double* b = w + out * in;
        const std::vector<double>& a = tr.act.back();

        std::vector<double> z(out);
        for (std::size_t j = 0; j < out; ++j) {
            double acc = b[j];
            const double* row = w + j * in;
            for (std::size_t k = 0; k < in; ++k) acc += row[k] * a[k];
            z[j] = acc;
        }

        std::vector<double> a_next(out);
        const bool last = (l + 1 == layers);
        for (std::size_t j = 0; j < out; ++j) {
            if (!last) {
                a_next[j] = apply_hidden(spec.hidden_activation, z[j]);
            } else if (spec.output_activation == OutputActivation::sigmoid) {
                double s = 1.0 / (1.0 + std::exp(-z[j]));
                a_next[j] = std::clamp(s, kProbClamp, 1.0 - kProbClamp);
            } else {
                a_next[j] = z[j];
            }
        }
        tr.pre.push_back(std::move(z));
        tr.act.push_back(std::move(a_next));
        off += out * in + out;
    }
    return tr;
}

}  // namespace detail

std::vector<double> forward(const MlpSpec& spec, const ParamVector& params,
                            std::span<const double> input) {
    return detail::forward_trace(spec, params, input).act.back();
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
    return v;
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[off + i]) << (8 * i);
    return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_params(const MlpSpec& spec,
                                           const ParamVector& params) {
    if (params.size() != spec.param_count()) {
        throw std::invalid_argument("serialize_params: parameter count mismatch");
    }
    std::vector<std::uint8_t> out;
    out.reserve(12 + 8 * params.size());
    put_u64(out, spec_hash(spec));
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (double v : params.values) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        put_u64(out, bits);
    }
    return out;
}

ParamVector deserialize_params(const MlpSpec& expected_spec,
                               std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12) {
        throw std::runtime_error("deserialize_params: truncated header");
    }
    const std::uint64_t stored = get_u64(bytes, 0);
    const std::uint64_t expected = spec_hash(expected_spec);
    if (stored != expected) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "deserialize_params: spec hash mismatch (stored %016llx, "
                      "expected %016llx)",
                      static_cast<unsigned long long>(stored),
                      static_cast<unsigned long long>(expected));
        throw std::runtime_error(buf);
    }
    const std::uint32_t count = get_u32(bytes, 8);
    if (count != expected_spec.param_count()) {
        throw std::runtime_error("deserialize_params: value count does not match spec");
    }
    if (bytes.size() != 12 + 8 * static_cast<std::size_t>(count)) {
        throw std::runtime_error("deserialize_params: truncated payload");
    }
    ParamVector p;
    p.values.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint64_t bits = get_u64(bytes, 12 + 8 * static_cast<std::size_t>(i));
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        p.values[i] = v;
    }
    return p;
}

}  // namespace fgan
