#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fliu/dataset.hpp"
#include "fliu/error.hpp"
#include "fliu/rng.hpp"

namespace fliu {

// Flat real-valued model parameter vector; the unit of aggregation and
// interpolation. The layout is interpreted by a ModelSpec.
using ParamVector = std::vector<double>;

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatrixRM>;
using ConstMapRM = Eigen::Map<const MatrixRM>;

enum class Architecture { Logistic, Mlp };

// Dense softmax classifier over flat inputs: logistic regression or a
// ReLU MLP. Parameters are packed layer by layer, row-major weights
// (in x out) followed by the bias (out).
struct ModelSpec {
    Architecture architecture = Architecture::Logistic;
    size_t input_dim = 0;
    std::vector<size_t> hidden_sizes;  // empty for logistic
    int32_t num_classes = 0;

    // (in, out) of every dense layer.
    std::vector<std::pair<size_t, size_t>> layer_dims() const {
        std::vector<std::pair<size_t, size_t>> dims;
        size_t in = input_dim;
        for (size_t h : hidden_sizes) {
            dims.emplace_back(in, h);
            in = h;
        }
        dims.emplace_back(in, static_cast<size_t>(num_classes));
        return dims;
    }

    size_t param_count() const {
        size_t total = 0;
        for (const auto& [in, out] : layer_dims()) total += (in + 1) * out;
        return total;
    }

    void validate() const {
        if (input_dim == 0) throw InvalidArgumentError("model spec: input_dim must be positive");
        if (num_classes < 2) throw InvalidArgumentError("model spec: need at least 2 classes");
        if (architecture == Architecture::Logistic && !hidden_sizes.empty()) {
            throw InvalidArgumentError("model spec: logistic architecture takes no hidden layers");
        }
        if (architecture == Architecture::Mlp && hidden_sizes.empty()) {
            throw InvalidArgumentError("model spec: mlp architecture needs at least one hidden layer");
        }
        for (size_t h : hidden_sizes) {
            if (h == 0) throw InvalidArgumentError("model spec: hidden size must be positive");
        }
    }

    std::string canonical_string() const {
        std::string s = architecture == Architecture::Logistic ? "logistic:" : "mlp:";
        s += std::to_string(input_dim);
        for (size_t h : hidden_sizes) s += "-" + std::to_string(h);
        s += ">" + std::to_string(num_classes);
        return s;
    }

    uint64_t hash() const { return derive_seed(0x4d4f44454c484153ULL, canonical_string()); }
};

// A mini-batch view ready for the dense math: row-major B x d features plus
// labels.
struct Batch {
    MatrixRM features;           // B x d
    std::vector<int32_t> labels; // B

    size_t size() const { return labels.size(); }
};

inline Batch make_batch(const LabeledDataset& ds, const uint32_t* indices, size_t count) {
    Batch b;
    b.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(ds.dim));
    b.labels.resize(count);
    for (size_t r = 0; r < count; ++r) {
        const float* src = ds.row(indices[r]);
        double* dst = b.features.data() + r * ds.dim;
        for (size_t j = 0; j < ds.dim; ++j) dst[j] = static_cast<double>(src[j]);
        b.labels[r] = ds.labels[indices[r]];
    }
    return b;
}

inline bool all_finite(const ParamVector& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void require_finite(const ParamVector& v, const char* ctx) {
    if (!all_finite(v)) throw InvalidArgumentError(std::string(ctx) + ": non-finite parameter value");
}

// Fresh parameters: weights drawn from N(0, 1/fan_in), biases zero.
// Deterministic in the seed; in a federation every client starts from the
// same draw.
inline ParamVector init_params(const ModelSpec& spec, Rng& rng) {
    spec.validate();
    ParamVector params(spec.param_count());
    size_t offset = 0;
    for (const auto& [in, out] : spec.layer_dims()) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (size_t i = 0; i < in * out; ++i) params[offset + i] = rng.normal() * scale;
        offset += in * out;
        // biases start at zero
        offset += out;
    }
    return params;
}

inline ParamVector init_params(const ModelSpec& spec, uint64_t seed) {
    Rng rng(seed);
    return init_params(spec, rng);
}

namespace detail {

struct LayerView {
    ConstMapRM weights;
    ConstMapRM bias;  // 1 x out
};

inline std::vector<LayerView> layer_views(const ModelSpec& spec, const ParamVector& params) {
    if (params.size() != spec.param_count()) {
        throw DimensionError("model: parameter vector length " + std::to_string(params.size()) +
                             " != spec count " + std::to_string(spec.param_count()));
    }
    std::vector<LayerView> views;
    size_t offset = 0;
    for (const auto& [in, out] : spec.layer_dims()) {
        views.push_back({ConstMapRM(params.data() + offset, static_cast<Eigen::Index>(in),
                                    static_cast<Eigen::Index>(out)),
                         ConstMapRM(params.data() + offset + in * out, 1,
                                    static_cast<Eigen::Index>(out))});
        offset += (in + 1) * out;
    }
    return views;
}

// Forward pass keeping per-layer activations for backprop. activations[0] is
// the input; logits are the last entry.
inline std::vector<MatrixRM> forward(const ModelSpec& spec, const ParamVector& params,
                                     const MatrixRM& input) {
    const auto views = layer_views(spec, params);
    std::vector<MatrixRM> activations;
    activations.reserve(views.size() + 1);
    activations.push_back(input);
    for (size_t l = 0; l < views.size(); ++l) {
        MatrixRM z = activations.back() * views[l].weights;
        z.rowwise() += views[l].bias.row(0);
        if (l + 1 < views.size()) z = z.cwiseMax(0.0);  // ReLU on hidden layers
        activations.push_back(std::move(z));
    }
    return activations;
}

// Row-wise softmax probabilities with the mean cross-entropy of the batch.
inline double softmax_cross_entropy(const MatrixRM& logits, const std::vector<int32_t>& labels,
                                    MatrixRM& probs) {
    const auto B = logits.rows();
    probs.resize(B, logits.cols());
    double loss = 0.0;
    for (Eigen::Index r = 0; r < B; ++r) {
        const double max_logit = logits.row(r).maxCoeff();
        const auto shifted = (logits.row(r).array() - max_logit).exp();
        const double denom = shifted.sum();
        probs.row(r) = shifted / denom;
        loss += std::log(denom) + max_logit - logits(r, labels[static_cast<size_t>(r)]);
    }
    return loss / static_cast<double>(B);
}

} // namespace detail

// Batch logits without gradient bookkeeping.
inline MatrixRM forward_logits(const ModelSpec& spec, const ParamVector& params,
                               const MatrixRM& input) {
    return detail::forward(spec, params, input).back();
}

// Mean softmax cross-entropy over the batch and its exact gradient with
// respect to every parameter.
inline std::pair<double, ParamVector> loss_and_grad(const ModelSpec& spec, const ParamVector& params,
                                                    const Batch& batch) {
    if (batch.size() == 0) throw InvalidArgumentError("loss_and_grad: empty batch");
    if (static_cast<size_t>(batch.features.cols()) != spec.input_dim) {
        throw DimensionError("loss_and_grad: batch feature dim != spec input_dim");
    }
    for (int32_t y : batch.labels) {
        if (y < 0 || y >= spec.num_classes) throw DimensionError("loss_and_grad: label out of range");
    }

    const auto views = detail::layer_views(spec, params);
    const auto activations = detail::forward(spec, params, batch.features);

    MatrixRM probs;
    const double loss = detail::softmax_cross_entropy(activations.back(), batch.labels, probs);

    // delta = d(loss)/d(logits) = (softmax - onehot)/B
    MatrixRM delta = probs;
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (Eigen::Index r = 0; r < delta.rows(); ++r) {
        delta(r, batch.labels[static_cast<size_t>(r)]) -= 1.0;
    }
    delta *= inv_b;

    ParamVector grad(params.size(), 0.0);
    const auto dims = spec.layer_dims();
    size_t offset = params.size();
    for (size_t l = views.size(); l-- > 0;) {
        const auto [in, out] = dims[l];
        offset -= (in + 1) * out;
        MapRM grad_w(grad.data() + offset, static_cast<Eigen::Index>(in),
                     static_cast<Eigen::Index>(out));
        MapRM grad_b(grad.data() + offset + in * out, 1, static_cast<Eigen::Index>(out));
        grad_w.noalias() = activations[l].transpose() * delta;
        grad_b = delta.colwise().sum();
        if (l > 0) {
            MatrixRM next = delta * views[l].weights.transpose();
            // ReLU mask from the stored hidden activation.
            next.array() *= (activations[l].array() > 0.0).cast<double>();
            delta = std::move(next);
        }
    }
    return {loss, std::move(grad)};
}

// Fraction of samples whose argmax logit matches the label; argmax ties go
// to the lowest class index. Evaluation runs in fixed-size chunks.
inline double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params,
                                const LabeledDataset& ds, const std::vector<uint32_t>& indices) {
    if (indices.empty()) throw InvalidArgumentError("evaluate_accuracy: empty evaluation set");
    constexpr size_t kChunk = 1024;
    size_t correct = 0;
    for (size_t start = 0; start < indices.size(); start += kChunk) {
        const size_t count = std::min(kChunk, indices.size() - start);
        const Batch b = make_batch(ds, indices.data() + start, count);
        const MatrixRM logits = forward_logits(spec, params, b.features);
        for (Eigen::Index r = 0; r < logits.rows(); ++r) {
            Eigen::Index best = 0;
            for (Eigen::Index c = 1; c < logits.cols(); ++c) {
                if (logits(r, c) > logits(r, best)) best = c;
            }
            if (best == b.labels[static_cast<size_t>(r)]) ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

// Convenience: accuracy over the whole dataset.
inline double evaluate_accuracy(const ModelSpec& spec, const ParamVector& params,
                                const LabeledDataset& ds) {
    std::vector<uint32_t> all(ds.size());
    std::iota(all.begin(), all.end(), 0u);
    return evaluate_accuracy(spec, params, ds, all);
}

// ---------------------------------------------------------------------------
// Parameter blobs: magic, spec hash, length, then the raw values as
// little-endian 64-bit reals. Loading validates the hash so a blob cannot be
// applied to a different model layout.
// ---------------------------------------------------------------------------
inline constexpr uint64_t kParamBlobMagic = 0x464c495550524d31ULL;  // "FLIUPRM1"

namespace detail {

inline void write_u64_le(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline uint64_t read_u64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw SerializationError("param blob: truncated file");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline void write_f64_le(std::ostream& out, double d) {
    uint64_t bits;
    std::memcpy(&bits, &d, 8);
    write_u64_le(out, bits);
}

inline double read_f64_le(std::istream& in) {
    const uint64_t bits = read_u64_le(in);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

} // namespace detail

inline void write_param_blob(std::ostream& out, const ModelSpec& spec, const ParamVector& params) {
    detail::write_u64_le(out, kParamBlobMagic);
    detail::write_u64_le(out, spec.hash());
    detail::write_u64_le(out, params.size());
    for (double v : params) detail::write_f64_le(out, v);
}

inline ParamVector read_param_blob(std::istream& in, const ModelSpec& spec) {
    if (detail::read_u64_le(in) != kParamBlobMagic) {
        throw SerializationError("param blob: bad magic");
    }
    if (detail::read_u64_le(in) != spec.hash()) {
        throw SerializationError("param blob: spec hash mismatch (blob written for another model)");
    }
    const uint64_t len = detail::read_u64_le(in);
    if (len != spec.param_count()) throw SerializationError("param blob: length mismatch");
    ParamVector params(len);
    for (uint64_t i = 0; i < len; ++i) params[i] = detail::read_f64_le(in);
    return params;
}

inline void save_params(const std::string& path, const ModelSpec& spec, const ParamVector& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SerializationError("save_params: cannot open '" + path + "'");
    write_param_blob(out, spec, params);
}

inline ParamVector load_params(const std::string& path, const ModelSpec& spec) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SerializationError("load_params: cannot open '" + path + "'");
    return read_param_blob(in, spec);
}

} // namespace fliu
