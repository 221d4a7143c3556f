#include <array>
#include <cmath>

#include <doctest.h>

#include "mdlp/dataset.hpp"
#include "mdlp/imaging.hpp"
#include "mdlp/polarimetry.hpp"
#include "mdlp/rng.hpp"

using namespace mdlp;

namespace {

const Renderer& shared_renderer() {
  static const Renderer renderer{FiberSpec{}};
  return renderer;
}

std::array<std::vector<double>, 7> canonical_images(const FieldMap& field) {
  std::array<std::vector<double>, 7> images;
  for (int k = 0; k < 7; ++k) images[k] = project(kCanonicalChannels[k], field);
  return images;
}

}  // namespace

TEST_CASE("channel presets") {
  const ChannelSet n3 = ChannelSet::preset("n3");
  CHECK(n3.channels == std::vector<Channel>{Channel::LP0, Channel::LP45, Channel::LP90});
  const ChannelSet n4 = ChannelSet::preset("n4");
  CHECK(n4.channels ==
        std::vector<Channel>{Channel::LP0, Channel::LP45, Channel::LP90, Channel::RHCP});
  const ChannelSet n7 = ChannelSet::preset("n7");
  CHECK(n7.count() == 7);
  CHECK(n7.channels.front() == Channel::Full);
  CHECK_THROWS_AS(ChannelSet::preset("n5"), Error);

  ChannelSet dup{{Channel::LP0, Channel::LP0}};
  CHECK_THROWS_AS(dup.validate(), Error);
  ChannelSet empty;
  try {
    empty.validate();
    FAIL("expected EmptyChannelSet");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_channel_set);
  }
}

TEST_CASE("TE01 through LP0: two lobes, dark along the x axis") {
  const Renderer& renderer = shared_renderer();
  ModeCoefficients te;
  te.c = {cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{0, 0}};
  const FieldMap field = renderer.superpose(te);
  const auto img = project(Channel::LP0, field);
  const int n = field.w;
  // center row (y = 0): sin(theta)^2 vanishes
  for (int ix = 0; ix < n; ++ix) {
    CHECK(img[static_cast<std::size_t>(n / 2) * n + ix] < 1e-20);
  }
  // lobes on the y axis
  CHECK(img[static_cast<std::size_t>(n / 2 + 25) * n + n / 2] > 1e-4);
  CHECK(img[static_cast<std::size_t>(n / 2 - 25) * n + n / 2] > 1e-4);
}

TEST_CASE("E1 + i E2 is circular everywhere: LP images are angle-independent") {
  const Renderer& renderer = shared_renderer();
  ModeCoefficients circ;
  circ.c = {cplx{1, 0}, cplx{0, 1}, cplx{0, 0}, cplx{0, 0}};
  const FieldMap field = renderer.superpose(circ);

  const auto lp0 = project(Channel::LP0, field);
  for (Channel ch : {Channel::LP45, Channel::LP90, Channel::LP135}) {
    const auto img = project(ch, field);
    for (std::size_t p = 0; p < img.size(); p += 53) {
      CHECK(std::abs(img[p] - lp0[p]) < 1e-12);
    }
  }
  // arbitrary analyzer angles too
  for (std::size_t p = 0; p < lp0.size(); p += 997) {
    for (double alpha : {0.3, 1.1, 2.0}) {
      CHECK(std::abs(project_lp_pixel(alpha, field.ex[p], field.ey[p]) - lp0[p]) < 1e-12);
    }
  }

  // one CP channel is dark, the other carries 2 B(r)^2 = Full
  const auto full = project(Channel::Full, field);
  const auto rhcp = project(Channel::RHCP, field);
  const auto lhcp = project(Channel::LHCP, field);
  for (std::size_t p = 0; p < full.size(); p += 31) {
    CHECK(rhcp[p] < 1e-20);
    CHECK(std::abs(lhcp[p] - full[p]) < 1e-12);
  }

  // and the conjugate pair swaps the CP channels
  ModeCoefficients anti = circ.conjugated();
  const FieldMap field2 = renderer.superpose(anti);
  const auto rhcp2 = project(Channel::RHCP, field2);
  const auto lhcp2 = project(Channel::LHCP, field2);
  for (std::size_t p = 0; p < full.size(); p += 31) {
    CHECK(lhcp2[p] < 1e-20);
    CHECK(rhcp2[p] == lhcp[p]);
  }
}

TEST_CASE("pointwise energy split across analyzer pairs") {
  const Renderer& renderer = shared_renderer();
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const FieldMap field = renderer.superpose(sample_coefficients(rng));
    const auto images = canonical_images(field);
    const auto& full = images[0];
    for (std::size_t p = 0; p < full.size(); p += 17) {
      const double scale = 1.0 + full[p];
      CHECK(std::abs(images[1][p] + images[3][p] - full[p]) < 1e-12 * scale);
      CHECK(std::abs(images[2][p] + images[4][p] - full[p]) < 1e-12 * scale);
      CHECK(std::abs(images[5][p] + images[6][p] - full[p]) < 1e-12 * scale);
    }
  }
}

TEST_CASE("conjugation ambiguity: LP images equal, CP images exchanged") {
  const Renderer& renderer = shared_renderer();
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const ModeCoefficients c = sample_coefficients(rng);
    const auto a = canonical_images(renderer.superpose(c));
    const auto b = canonical_images(renderer.superpose(c.conjugated()));
    for (int lp : {1, 2, 3, 4}) {
      for (std::size_t p = 0; p < a[lp].size(); p += 43) {
        CHECK(a[lp][p] == b[lp][p]);  // exact: see polarimetry conventions
      }
    }
    for (std::size_t p = 0; p < a[5].size(); p += 43) {
      CHECK(a[5][p] == b[6][p]);
      CHECK(a[6][p] == b[5][p]);
    }
  }
}

TEST_CASE("project_stack preserves set order") {
  const Renderer& renderer = shared_renderer();
  Rng rng(5);
  const FieldMap field = renderer.superpose(sample_coefficients(rng));
  const StackD stack = project_stack(ChannelSet::n7(), field);
  CHECK(stack.c == 7);
  const auto full = project(Channel::Full, field);
  for (int y = 0; y < stack.h; y += 9) {
    for (int x = 0; x < stack.w; x += 9) {
      CHECK(stack.at(y, x, 0) == full[field.index(y, x)]);
    }
  }
}

TEST_CASE("Stokes parameters from the canonical images") {
  const Renderer& renderer = shared_renderer();

  // pure eigenmode: linear polarization everywhere, s3 = 0 exactly
  ModeCoefficients tm;
  tm.c = {cplx{0, 0}, cplx{1, 0}, cplx{0, 0}, cplx{0, 0}};
  const FieldMap ftm = renderer.superpose(tm);
  const auto itm = canonical_images(ftm);
  const StokesMap stm = stokes_from_channels(itm, ftm.h, ftm.w);
  for (std::size_t p = 0; p < stm.s3.size(); p += 19) {
    CHECK(stm.s3[p] == 0.0);
    CHECK(std::abs(stm.s0[p] - itm[0][p]) < 1e-12 * (1.0 + itm[0][p]));
    CHECK(stm.s0[p] >= 0.0);
  }

  // circular superposition: |s3| = s0 pointwise
  ModeCoefficients circ;
  circ.c = {cplx{1, 0}, cplx{0, 1}, cplx{0, 0}, cplx{0, 0}};
  const FieldMap fc = renderer.superpose(circ);
  const auto ic = canonical_images(fc);
  const StokesMap sc = stokes_from_channels(ic, fc.h, fc.w);
  for (std::size_t p = 0; p < sc.s3.size(); p += 19) {
    CHECK(std::abs(std::abs(sc.s3[p]) - sc.s0[p]) < 1e-12 * (1.0 + sc.s0[p]));
  }

  // fully polarized identity on a generic field
  Rng rng(31);
  const FieldMap fr = renderer.superpose(sample_coefficients(rng));
  const auto ir = canonical_images(fr);
  const StokesMap sr = stokes_from_channels(ir, fr.h, fr.w);
  for (std::size_t p = 0; p < sr.s0.size(); p += 13) {
    const double lhs = sr.s1[p] * sr.s1[p] + sr.s2[p] * sr.s2[p] + sr.s3[p] * sr.s3[p];
    const double rhs = sr.s0[p] * sr.s0[p];
    CHECK(std::abs(lhs - rhs) <= 1e-9 * (rhs + 1e-300));
    CHECK(lhs <= rhs * (1.0 + 1e-9));
  }
}

TEST_CASE("stokes_from_channels rejects mismatched dimensions") {
  std::array<std::vector<double>, 7> images;
  for (auto& img : images) img.assign(4, 0.0);
  images[3].assign(5, 0.0);
  try {
    stokes_from_channels(images, 2, 2);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension_mismatch);
  }
}
