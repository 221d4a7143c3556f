#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mdlp/imaging.hpp"
#include "mdlp/rng.hpp"

namespace mdlp {

/// The 7-real label layout z1..z7 = (x1, x2, y2, x3, y3, x4, y4),
/// max-normalized so that max |z_n| == 1, with z1 >= 0 by gauge.
struct LabelVector {
  std::array<double, 7> z{};

  void validate() const;  // throws InvariantViolation
};

/// Pack coefficients into the label layout and divide by max |z_n|.
/// Throws AllZeroCoefficients.
LabelVector encode_labels(const ModeCoefficients& coeffs);

/// Read coefficients verbatim from the label layout.
ModeCoefficients decode_labels(const LabelVector& label);

/// Coefficient sampling law: x1 ~ U(0,1], the six remaining components
/// ~ U[-1,1); redrawn while max |z_n| < 1e-6. Gauge holds by construction.
ModeCoefficients sample_coefficients(Rng& rng);

struct DatasetHeader {
  std::string magic = "MDLP11";
  int version = 1;
  long long n = 0;
  int height = 0;
  int width = 0;
  ChannelSet channels;
  int label_len = 7;
  std::string handedness = kHandednessTag;
  FiberSpec fiber;
  int grid_pixels = 121;
  double pitch_over_a = 0.02;
  std::uint64_t seed = 0;
};

struct SampleRecord {
  const float* stack = nullptr;  // height x width x channels
  const float* label = nullptr;  // 7 floats
  long long sample_id = 0;
  std::array<std::uint64_t, 2> seed_material{};  // (base_seed, sample_id)
};

struct Dataset {
  DatasetHeader header;
  std::vector<float> images;  // [n][height][width][channels]
  std::vector<float> labels;  // [n][7]

  long long count() const { return header.n; }
  std::size_t stack_len() const {
    return static_cast<std::size_t>(header.height) * header.width * header.channels.count();
  }
  const float* stack(long long i) const { return images.data() + stack_len() * i; }
  const float* label(long long i) const { return labels.data() + 7 * i; }
  SampleRecord record(long long i) const {
    return {stack(i), label(i), i, {header.seed, static_cast<std::uint64_t>(i)}};
  }
};

/// Render the canonical network-input stack for a float32-quantized label:
/// decode -> render_full -> crop -> normalize -> cast to float32.
void render_label_stack(const Renderer& renderer, const float z[7], const ChannelSet& set,
                        float* out);

/// Deterministic parallel generation: sample i depends only on (seed, i).
Dataset generate_dataset(const Renderer& renderer, long long n, std::uint64_t seed,
                         const ChannelSet& set);

/// File layout: one UTF-8 JSON header line, then raw little-endian float32:
/// images [n][h][w][c] followed by labels [n][7].
void save_dataset(const Dataset& dataset, const std::string& path);

/// Throws BadMagic, VersionMismatch, TruncatedFile, InvariantViolation, IoError.
Dataset load_dataset(const std::string& path);

}  // namespace mdlp
