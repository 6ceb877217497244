#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "fliu/error.hpp"
#include "fliu/rng.hpp"

namespace fliu {

// ---------------------------------------------------------------------------
// LabeledDataset: flat feature vectors with integer class labels.
//
// Features are stored row-major as one contiguous float array (n x dim);
// image pixels are scaled by 1/255 into [0,1] at load time. Datasets are
// immutable after construction and safe to share across threads.
// ---------------------------------------------------------------------------
struct LabeledDataset {
    std::vector<float> features;  // n * dim, row-major
    std::vector<int32_t> labels;  // n, each in [0, num_classes)
    size_t dim = 0;
    int32_t num_classes = 0;
    std::string name;

    size_t size() const { return labels.size(); }

    const float* row(size_t i) const { return features.data() + i * dim; }

    // Sample counts per class, length num_classes.
    std::vector<size_t> class_counts() const {
        std::vector<size_t> counts(static_cast<size_t>(num_classes), 0);
        for (int32_t y : labels) counts[static_cast<size_t>(y)]++;
        return counts;
    }

    // Indices of every sample of each class, ascending within a class.
    std::vector<std::vector<uint32_t>> indices_by_class() const {
        std::vector<std::vector<uint32_t>> by_class(static_cast<size_t>(num_classes));
        for (size_t i = 0; i < labels.size(); ++i) {
            by_class[static_cast<size_t>(labels[i])].push_back(static_cast<uint32_t>(i));
        }
        return by_class;
    }

    void validate() const {
        if (labels.empty()) throw InvalidArgumentError("dataset '" + name + "' is empty");
        if (num_classes < 1) throw InvalidArgumentError("dataset '" + name + "': num_classes must be positive");
        if (dim == 0 || features.size() != labels.size() * dim) {
            throw DimensionError("dataset '" + name + "': feature storage does not match n x dim");
        }
        for (int32_t y : labels) {
            if (y < 0 || y >= num_classes) {
                throw InvalidArgumentError("dataset '" + name + "': label out of range");
            }
        }
    }
};

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IdxFormatError(std::string(what) + ": cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

inline uint32_t read_be_u32(const unsigned char* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

inline void write_be_u32(std::ostream& out, uint32_t v) {
    unsigned char p[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(p), 4);
}

} // namespace detail

// IDX magic numbers: uint8 tensor of rank 3 (images) and rank 1 (labels).
inline constexpr uint32_t kIdxImageMagic = 0x00000803;
inline constexpr uint32_t kIdxLabelMagic = 0x00000801;

// Reads an MNIST-style IDX image/label file pair.
//
//   images: magic(4) | count(4) | rows(4) | cols(4) | pixels[count*rows*cols]
//   labels: magic(4) | count(4) | labels[count]
//
// All header fields are big-endian. Pixels land in [0,1] as value/255,
// flattened row-wise to dim = rows*cols.
inline LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = detail::read_file_bytes(images_path, "load_idx images");
    const auto lab = detail::read_file_bytes(labels_path, "load_idx labels");

    if (img.size() < 16) throw IdxFormatError("load_idx: image file '" + images_path + "' truncated header");
    if (lab.size() < 8) throw IdxFormatError("load_idx: label file '" + labels_path + "' truncated header");

    const uint32_t img_magic = detail::read_be_u32(img.data());
    if (img_magic != kIdxImageMagic) {
        throw IdxFormatError("load_idx: bad image magic in '" + images_path + "' (got " +
                             std::to_string(img_magic) + ", want 2051)");
    }
    const uint32_t lab_magic = detail::read_be_u32(lab.data());
    if (lab_magic != kIdxLabelMagic) {
        throw IdxFormatError("load_idx: bad label magic in '" + labels_path + "' (got " +
                             std::to_string(lab_magic) + ", want 2049)");
    }

    const uint32_t n_img = detail::read_be_u32(img.data() + 4);
    const uint32_t rows = detail::read_be_u32(img.data() + 8);
    const uint32_t cols = detail::read_be_u32(img.data() + 12);
    const uint32_t n_lab = detail::read_be_u32(lab.data() + 4);

    if (n_img != n_lab) {
        throw IdxFormatError("load_idx: image count " + std::to_string(n_img) +
                             " != label count " + std::to_string(n_lab));
    }
    const size_t dim = static_cast<size_t>(rows) * cols;
    if (img.size() != 16 + static_cast<size_t>(n_img) * dim) {
        throw IdxFormatError("load_idx: image file '" + images_path + "' truncated payload");
    }
    if (lab.size() != 8 + static_cast<size_t>(n_lab)) {
        throw IdxFormatError("load_idx: label file '" + labels_path + "' truncated payload");
    }

    LabeledDataset ds;
    ds.dim = dim;
    ds.name = images_path;
    ds.features.resize(static_cast<size_t>(n_img) * dim);
    ds.labels.resize(n_img);
    constexpr float scale = 1.0f / 255.0f;
    for (size_t i = 0; i < ds.features.size(); ++i) {
        ds.features[i] = static_cast<float>(img[16 + i]) * scale;
    }
    int32_t max_label = 0;
    for (uint32_t i = 0; i < n_lab; ++i) {
        ds.labels[i] = static_cast<int32_t>(lab[8 + i]);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.num_classes = std::max(10, max_label + 1);
    ds.validate();
    return ds;
}

// Writes a byte-quantized dataset back to the IDX pair format. Features must
// lie in [0,1]; they are stored as round(value*255), so datasets that came
// from load_idx round-trip exactly.
inline void write_idx(const LabeledDataset& ds, const std::string& images_path,
                      const std::string& labels_path, uint32_t rows, uint32_t cols) {
    if (static_cast<size_t>(rows) * cols != ds.dim) {
        throw DimensionError("write_idx: rows*cols != dataset dim");
    }
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IdxFormatError("write_idx: cannot open '" + images_path + "'");
    detail::write_be_u32(img, kIdxImageMagic);
    detail::write_be_u32(img, static_cast<uint32_t>(ds.size()));
    detail::write_be_u32(img, rows);
    detail::write_be_u32(img, cols);
    for (float f : ds.features) {
        const int v = static_cast<int>(std::lround(static_cast<double>(f) * 255.0));
        img.put(static_cast<char>(std::clamp(v, 0, 255)));
    }

    std::ofstream lab(labels_path, std::ios::binary);
    if (!lab) throw IdxFormatError("write_idx: cannot open '" + labels_path + "'");
    detail::write_be_u32(lab, kIdxLabelMagic);
    detail::write_be_u32(lab, static_cast<uint32_t>(ds.size()));
    for (int32_t y : ds.labels) lab.put(static_cast<char>(y));
}

// Reads CIFAR-10 binary batches: each file is a sequence of 3073-byte
// records, 1 label byte followed by 3072 pixel bytes (CHW). Pixels are
// scaled by 1/255; dim is always 3072.
inline LabeledDataset load_cifar10(const std::vector<std::string>& batch_paths) {
    constexpr size_t kRecord = 3073;
    constexpr size_t kPixels = 3072;
    if (batch_paths.empty()) throw InvalidArgumentError("load_cifar10: no batch files given");

    LabeledDataset ds;
    ds.dim = kPixels;
    ds.num_classes = 10;
    ds.name = batch_paths.front();
    constexpr float scale = 1.0f / 255.0f;

    for (const auto& path : batch_paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw CifarFormatError("load_cifar10: cannot open '" + path + "'");
        std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
        if (bytes.empty() || bytes.size() % kRecord != 0) {
            throw CifarFormatError("load_cifar10: '" + path + "' length " +
                                   std::to_string(bytes.size()) + " is not a multiple of 3073");
        }
        const size_t records = bytes.size() / kRecord;
        for (size_t r = 0; r < records; ++r) {
            const unsigned char* rec = bytes.data() + r * kRecord;
            if (rec[0] >= 10) {
                throw CifarFormatError("load_cifar10: '" + path + "' record " + std::to_string(r) +
                                       " has label byte " + std::to_string(rec[0]) + " >= 10");
            }
            ds.labels.push_back(static_cast<int32_t>(rec[0]));
            const size_t base = ds.features.size();
            ds.features.resize(base + kPixels);
            for (size_t p = 0; p < kPixels; ++p) {
                ds.features[base + p] = static_cast<float>(rec[1 + p]) * scale;
            }
        }
    }
    ds.validate();
    return ds;
}

// Synthetic isotropic-Gaussian classification data for tests and the
// desk-scale MNIST surrogate. Class means are random directions scaled so
// pairwise distances are proportional to `separation` (unit noise). Labels
// cycle 0,1,...,L-1 so every prefix is near-balanced; exactly `per_class`
// samples per class. Pure function of its arguments.
inline LabeledDataset generate_synthetic(int32_t num_classes, size_t per_class, size_t dim,
                                         double separation, uint64_t seed) {
    if (num_classes < 2) throw InvalidArgumentError("generate_synthetic: need at least 2 classes");
    if (per_class < 1) throw InvalidArgumentError("generate_synthetic: per_class must be >= 1");
    if (dim < 1) throw InvalidArgumentError("generate_synthetic: dim must be >= 1");
    if (!(separation > 0.0)) throw InvalidArgumentError("generate_synthetic: separation must be > 0");

    Rng rng(derive_seed(seed, "synthetic", static_cast<uint64_t>(num_classes),
                        static_cast<uint64_t>(per_class), static_cast<uint64_t>(dim)));

    // Class means: random unit directions scaled by separation/sqrt(2), so two
    // independent means sit ~separation apart in expectation.
    const size_t L = static_cast<size_t>(num_classes);
    std::vector<double> means(L * dim);
    for (size_t c = 0; c < L; ++c) {
        double norm2 = 0.0;
        for (size_t j = 0; j < dim; ++j) {
            const double g = rng.normal();
            means[c * dim + j] = g;
            norm2 += g * g;
        }
        const double inv = (norm2 > 0.0) ? separation / std::sqrt(2.0 * norm2) : 0.0;
        for (size_t j = 0; j < dim; ++j) means[c * dim + j] *= inv;
    }

    const double clamp = separation + 6.0;
    const size_t n = L * per_class;
    LabeledDataset ds;
    ds.dim = dim;
    ds.num_classes = num_classes;
    ds.name = "synthetic";
    ds.features.resize(n * dim);
    ds.labels.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const size_t c = i % L;
        ds.labels[i] = static_cast<int32_t>(c);
        for (size_t j = 0; j < dim; ++j) {
            const double x = means[c * dim + j] + rng.normal();
            ds.features[i * dim + j] = static_cast<float>(std::clamp(x, -clamp, clamp));
        }
    }
    ds.validate();
    return ds;
}

// Train/test pair drawn from one synthetic distribution: a single
// generate_synthetic draw of train+test samples per class, split by
// occurrence order within each class. Both sides share the class means, and
// no sample crosses the split boundary between runs.
struct SyntheticSplit {
    LabeledDataset train;
    LabeledDataset test;
};

inline SyntheticSplit generate_synthetic_split(int32_t num_classes, size_t train_per_class,
                                               size_t test_per_class, size_t dim, double separation,
                                               uint64_t seed) {
    if (test_per_class < 1) throw InvalidArgumentError("generate_synthetic_split: test_per_class must be >= 1");
    const auto full = generate_synthetic(num_classes, train_per_class + test_per_class, dim,
                                         separation, seed);
    SyntheticSplit out;
    for (LabeledDataset* side : {&out.train, &out.test}) {
        side->dim = dim;
        side->num_classes = num_classes;
    }
    out.train.name = "synthetic-train";
    out.test.name = "synthetic-test";

    std::vector<size_t> seen(static_cast<size_t>(num_classes), 0);
    for (size_t i = 0; i < full.size(); ++i) {
        const auto c = static_cast<size_t>(full.labels[i]);
        LabeledDataset& side = (seen[c]++ < train_per_class) ? out.train : out.test;
        side.labels.push_back(full.labels[i]);
        side.features.insert(side.features.end(), full.row(i), full.row(i) + dim);
    }
    out.train.validate();
    out.test.validate();
    return out;
}

} // namespace fliu
