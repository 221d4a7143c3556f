#include "mdlp/polarimetry.hpp"

#include <cmath>

namespace mdlp {

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Full: return "full";
    case Channel::LP0: return "lp0";
    case Channel::LP45: return "lp45";
    case Channel::LP90: return "lp90";
    case Channel::LP135: return "lp135";
    case Channel::RHCP: return "rhcp";
    case Channel::LHCP: return "lhcp";
  }
  return "?";
}

Channel channel_from_name(std::string_view name) {
  for (Channel c : kCanonicalChannels) {
    if (name == channel_name(c)) return c;
  }
  fail(Errc::invalid_argument, "unknown channel name: " + std::string(name));
}

ChannelSet ChannelSet::n3() { return {{Channel::LP0, Channel::LP45, Channel::LP90}}; }

ChannelSet ChannelSet::n4() { return {{Channel::LP0, Channel::LP45, Channel::LP90, Channel::RHCP}}; }

ChannelSet ChannelSet::n7() {
  ChannelSet s;
  s.channels.assign(kCanonicalChannels.begin(), kCanonicalChannels.end());
  return s;
}

ChannelSet ChannelSet::preset(std::string_view name) {
  if (name == "n3") return n3();
  if (name == "n4") return n4();
  if (name == "n7") return n7();
  fail(Errc::invalid_argument, "unknown channel preset: " + std::string(name));
}

void ChannelSet::validate() const {
  require(!channels.empty(), Errc::empty_channel_set, "channel set is empty");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    for (std::size_t j = i + 1; j < channels.size(); ++j) {
      require(channels[i] != channels[j], Errc::invalid_argument, "duplicate channel in set");
    }
  }
}

namespace {

inline double sq(double x) { return x * x; }

// |ex*ca + ey*sa|^2 for a linear analyzer with direction (ca, sa).
inline double lp_intensity(double ca, double sa, cplx ex, cplx ey) {
  return sq(ca * ex.real() + sa * ey.real()) + sq(ca * ex.imag() + sa * ey.imag());
}

}  // namespace

double project_lp_pixel(double alpha, cplx ex, cplx ey) {
  return lp_intensity(std::cos(alpha), std::sin(alpha), ex, ey);
}

double project_pixel(Channel ch, cplx ex, cplx ey) {
  switch (ch) {
    case Channel::Full:
      return sq(ex.real()) + sq(ex.imag()) + sq(ey.real()) + sq(ey.imag());
    case Channel::LP0:
      return lp_intensity(1.0, 0.0, ex, ey);
    case Channel::LP45:
      return lp_intensity(M_SQRT1_2, M_SQRT1_2, ex, ey);
    case Channel::LP90:
      return lp_intensity(0.0, 1.0, ex, ey);
    case Channel::LP135:
      return lp_intensity(-M_SQRT1_2, M_SQRT1_2, ex, ey);
    case Channel::RHCP:
      // |(ex - i*ey)/sqrt(2)|^2
      return 0.5 * (sq(ex.real() + ey.imag()) + sq(ex.imag() - ey.real()));
    case Channel::LHCP:
      return 0.5 * (sq(ex.real() - ey.imag()) + sq(ex.imag() + ey.real()));
  }
  fail(Errc::invalid_argument, "unknown channel");
}

std::vector<double> project(Channel ch, const FieldMap& field) {
  const std::size_t npix = field.ex.size();
  std::vector<double> img(npix);
  for (std::size_t p = 0; p < npix; ++p) {
    img[p] = project_pixel(ch, field.ex[p], field.ey[p]);
  }
  return img;
}

StackD project_stack(const ChannelSet& set, const FieldMap& field) {
  set.validate();
  StackD stack(field.h, field.w, set.count());
  for (int k = 0; k < set.count(); ++k) {
    const Channel ch = set.channels[k];
    for (int y = 0; y < field.h; ++y) {
      for (int x = 0; x < field.w; ++x) {
        const std::size_t p = field.index(y, x);
        stack.at(y, x, k) = project_pixel(ch, field.ex[p], field.ey[p]);
      }
    }
  }
  return stack;
}

StokesMap stokes_from_channels(const std::array<std::vector<double>, 7>& images, int h, int w) {
  const std::size_t npix = static_cast<std::size_t>(h) * w;
  for (const auto& img : images) {
    require(img.size() == npix, Errc::dimension_mismatch, "channel image size mismatch");
  }
  StokesMap m;
  m.h = h;
  m.w = w;
  m.s0.resize(npix);
  m.s1.resize(npix);
  m.s2.resize(npix);
  m.s3.resize(npix);
  const auto& lp0 = images[static_cast<int>(Channel::LP0)];
  const auto& lp45 = images[static_cast<int>(Channel::LP45)];
  const auto& lp90 = images[static_cast<int>(Channel::LP90)];
  const auto& lp135 = images[static_cast<int>(Channel::LP135)];
  const auto& rhcp = images[static_cast<int>(Channel::RHCP)];
  const auto& lhcp = images[static_cast<int>(Channel::LHCP)];
  for (std::size_t p = 0; p < npix; ++p) {
    m.s0[p] = lp0[p] + lp90[p];
    m.s1[p] = lp0[p] - lp90[p];
    m.s2[p] = lp45[p] - lp135[p];
    m.s3[p] = rhcp[p] - lhcp[p];
  }
  return m;
}

}  // namespace mdlp
