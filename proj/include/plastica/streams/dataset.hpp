#pragma once

#include "plastica/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plastica::streams {

struct Dataset {
    Tensor images;            // (N, d), values in [0, 1]
    std::vector<int> labels;  // N class indices
    int num_classes = 0;
    std::string name;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const { return images.cols(); }

    /// Throws std::invalid_argument when the invariants do not hold.
    void validate() const;

    /// Subset of rows, in the given order.
    Dataset select(std::span<const std::size_t> indices) const;
};

class IdxError : public std::runtime_error {
public:
    enum class Kind { Io, BadMagic, Truncated, CountMismatch, Format };
    IdxError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

/// Reads an IDX image/label pair (plain or gzip-compressed). Pixels are scaled by 1/255.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes a gzip-compressed IDX pair (pixels are rounded back to bytes).
void write_idx(const Dataset& ds, const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               std::size_t image_rows, std::size_t image_cols);

/// First `n` examples chosen by a seed-derived shuffle (n >= size returns a copy).
Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed);

}  // namespace plastica::streams
