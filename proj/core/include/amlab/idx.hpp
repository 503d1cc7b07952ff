#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "amlab/dataset.hpp"

namespace amlab {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads an IDX image/label pair (the published MNIST layout: big-endian
/// headers, magic 0x00000803 for images and 0x00000801 for labels).
/// Pixels are scaled to [0,1]; byte 255 maps to exactly 1.0. Malformed or
/// truncated files raise FormatError naming the byte offset.
LabeledDataset load_idx_images(const std::string& images_path, const std::string& labels_path,
                               Role role = Role::defender_train, std::string name = "idx");

/// Writes an IDX pair; pixel values are clamped to [0,1] and quantized to
/// bytes. Used for fixtures and round-trip checks.
void write_idx(const std::string& images_path, const std::string& labels_path,
               const std::vector<Tensor>& images, const std::vector<std::size_t>& labels);

}  // namespace amlab
