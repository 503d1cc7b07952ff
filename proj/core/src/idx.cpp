#include "amlab/idx.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace amlab {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path, std::size_t& offset) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in)
        throw FormatError(path + ": truncated at byte " + std::to_string(offset));
    offset += 4;
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

LabeledDataset load_idx_images(const std::string& images_path, const std::string& labels_path,
                               Role role, std::string name) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw FormatError("cannot open " + images_path);
    std::size_t offset = 0;
    std::uint32_t magic = read_be32(img, images_path, offset);
    if (magic != kImagesMagic)
        throw FormatError(images_path + ": bad image magic at byte 0");
    std::uint32_t count = read_be32(img, images_path, offset);
    std::uint32_t rows = read_be32(img, images_path, offset);
    std::uint32_t cols = read_be32(img, images_path, offset);

    std::vector<Tensor> images;
    images.reserve(count);
    std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (!img)
            throw FormatError(images_path + ": truncated at byte " + std::to_string(offset));
        offset += buf.size();
        Tensor t({rows, cols});
        for (std::size_t p = 0; p < buf.size(); ++p) t[p] = buf[p] / 255.0;
        images.push_back(std::move(t));
    }

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw FormatError("cannot open " + labels_path);
    std::size_t loffset = 0;
    if (read_be32(lab, labels_path, loffset) != kLabelsMagic)
        throw FormatError(labels_path + ": bad label magic at byte 0");
    std::uint32_t lcount = read_be32(lab, labels_path, loffset);
    if (lcount != count)
        throw FormatError(labels_path + ": label count " + std::to_string(lcount) +
                          " does not match image count " + std::to_string(count));
    std::vector<std::size_t> labels(lcount);
    for (std::uint32_t i = 0; i < lcount; ++i) {
        unsigned char b;
        lab.read(reinterpret_cast<char*>(&b), 1);
        if (!lab)
            throw FormatError(labels_path + ": truncated at byte " + std::to_string(loffset));
        ++loffset;
        labels[i] = b;
    }
    std::size_t num_classes =
        std::max<std::size_t>(2, labels.empty() ? 2 : *std::max_element(labels.begin(),
                                                                        labels.end()) + 1);
    return LabeledDataset(std::move(images), std::move(labels), num_classes, role,
                          std::move(name));
}

void write_idx(const std::string& images_path, const std::string& labels_path,
               const std::vector<Tensor>& images, const std::vector<std::size_t>& labels) {
    if (images.size() != labels.size())
        throw FormatError("write_idx: image/label count mismatch");
    std::ofstream img(images_path, std::ios::binary | std::ios::trunc);
    if (!img) throw FormatError("cannot open for write: " + images_path);
    std::uint32_t rows = images.empty() ? 0 : static_cast<std::uint32_t>(images[0].shape()[0]);
    std::uint32_t cols = images.empty() ? 0 : static_cast<std::uint32_t>(images[0].shape()[1]);
    write_be32(img, kImagesMagic);
    write_be32(img, static_cast<std::uint32_t>(images.size()));
    write_be32(img, rows);
    write_be32(img, cols);
    for (const auto& t : images)
        for (std::size_t p = 0; p < t.size(); ++p) {
            double v = std::clamp(t[p], 0.0, 1.0);
            unsigned char b = static_cast<unsigned char>(std::lround(v * 255.0));
            img.write(reinterpret_cast<const char*>(&b), 1);
        }

    std::ofstream lab(labels_path, std::ios::binary | std::ios::trunc);
    if (!lab) throw FormatError("cannot open for write: " + labels_path);
    write_be32(lab, kLabelsMagic);
    write_be32(lab, static_cast<std::uint32_t>(labels.size()));
    for (std::size_t l : labels) {
        unsigned char b = static_cast<unsigned char>(l);
        lab.write(reinterpret_cast<const char*>(&b), 1);
    }
}

}  // namespace amlab
