#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "mdlp/fiber_modes.hpp"
#include "mdlp/stack.hpp"

namespace mdlp {

// The seven analyzer channels in canonical order: the unfiltered image, four
// linear polarizers, then the two circular polarizers.
enum class Channel : int { Full = 0, LP0, LP45, LP90, LP135, RHCP, LHCP };

inline constexpr std::array<Channel, 7> kCanonicalChannels = {
    Channel::Full, Channel::LP0, Channel::LP45, Channel::LP90,
    Channel::LP135, Channel::RHCP, Channel::LHCP};

const char* channel_name(Channel c);
Channel channel_from_name(std::string_view name);  // throws InvalidArgument

// Handedness convention used throughout: the RHCP analyzer passes
// (ex - i*ey)/sqrt(2). The two CP channels swap under field conjugation;
// tests assert the swap, never an absolute handedness.
inline constexpr const char* kHandednessTag = "rhcp=(ex-i*ey)/sqrt2";

/// Ordered analyzer list. Presets: n3 = LP0,LP45,LP90; n4 = n3 + RHCP;
/// n7 = all seven in canonical order.
struct ChannelSet {
  std::vector<Channel> channels;

  static ChannelSet n3();
  static ChannelSet n4();
  static ChannelSet n7();
  static ChannelSet preset(std::string_view name);  // "n3" | "n4" | "n7"

  int count() const { return static_cast<int>(channels.size()); }
  void validate() const;  // non-empty, no duplicates
};

/// Analyzer intensity at one point.
double project_pixel(Channel ch, cplx ex, cplx ey);

/// Linear polarizer at an arbitrary angle (radians from x). Supported
/// internally; the presets only use 0/45/90/135 degrees.
double project_lp_pixel(double alpha, cplx ex, cplx ey);

/// One intensity image per grid point. Output is h*w, row-major.
std::vector<double> project(Channel ch, const FieldMap& field);

/// Channel-last stack of projections in set order. Throws EmptyChannelSet.
StackD project_stack(const ChannelSet& set, const FieldMap& field);

struct StokesMap {
  int h = 0, w = 0;
  std::vector<double> s0, s1, s2, s3;
};

/// Stokes parameters from the seven canonical-channel images:
/// s0 = LP0+LP90, s1 = LP0-LP90, s2 = LP45-LP135, s3 = RHCP-LHCP.
/// Throws DimensionMismatch.
StokesMap stokes_from_channels(const std::array<std::vector<double>, 7>& images, int h, int w);

}  // namespace mdlp
