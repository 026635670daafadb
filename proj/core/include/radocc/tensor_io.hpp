#pragma once

#include <filesystem>
#include <iosfwd>

#include "radocc/tensor.hpp"

namespace radocc {

// Text dump: a header line "shape: d0 d1 ..." followed by the values in
// row-major order, whitespace separated, printed with round-trip precision.
void write_tensor_text(std::ostream& os, const Tensor& t);
Tensor read_tensor_text(std::istream& is);

// Binary dump, little-endian: magic "DTNS", u32 rank, rank x u32 extents,
// then the payload as f32. Values are narrowed to float on write.
void write_tensor_binary(std::ostream& os, const Tensor& t);
Tensor read_tensor_binary(std::istream& is);

void save_tensor_binary(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor_binary(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM (P5). `image` is H x W with values in [0, 1];
/// values are clamped, scaled by 255 and rounded.
void write_pgm(const std::filesystem::path& path, const Tensor& image);

/// Per-pixel L2 norm over channels, min-max normalized to [0, 1]. 4-D volumes
/// are reduced by the maximum over the height axis first.
Tensor channel_norm_image(const Tensor& features);

}  // namespace radocc
