#include <cmath>

#include <doctest.h>

#include "mdlp/metrics.hpp"
#include "mdlp/rng.hpp"

using namespace mdlp;

namespace {

const Renderer& shared_renderer() {
  static const Renderer renderer{FiberSpec{}};
  return renderer;
}

}  // namespace

TEST_CASE("label_errors") {
  const std::vector<double> z{0.1, -0.2, 0.3, 0, 0.5, 1, -1};
  CHECK(label_errors(z, z) == std::pair<double, double>{0.0, 0.0});

  std::vector<double> zp = z;
  zp[0] -= 1.0;
  const auto [mae, rms] = label_errors(z, zp);
  CHECK(mae == doctest::Approx(1.0 / 7).epsilon(1e-15));
  CHECK(rms == doctest::Approx(std::sqrt(1.0 / 7)).epsilon(1e-15));

  // rms >= mae on random pairs (power-mean inequality)
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(7), b(7);
    for (int k = 0; k < 7; ++k) {
      a[k] = rng.uniform_pm1();
      b[k] = rng.uniform_pm1();
    }
    const auto [m, r] = label_errors(a, b);
    CHECK(r >= m - 1e-15);
  }

  CHECK_THROWS_AS(label_errors({1, 2, 3}, {1, 2, 3}), Error);
}

TEST_CASE("rho_phi_errors") {
  Rng rng(5);
  const ModeCoefficients c = sample_coefficients(rng);
  const RhoPhiErrors zero = rho_phi_errors(c, c);
  CHECK(zero.rho_mae == 0.0);
  CHECK(zero.rho_rms == 0.0);
  CHECK(zero.phase_mae_over_2pi < 1e-15);  // fused multiplies leave arg() a few ulp off 0

  // rotate C2 by pi/2: phase error (pi/2)/(2 pi)/3 = 1/12 over modes 2..4
  ModeCoefficients ca;
  ca.c = {cplx{0.5, 0}, cplx{0.4, 0.1}, cplx{-0.3, 0.2}, cplx{0.1, -0.6}};
  ModeCoefficients cp = ca;
  cp.c[1] *= cplx{0, 1};
  const RhoPhiErrors quarter = rho_phi_errors(ca, cp);
  CHECK(quarter.phase_terms == 3);
  CHECK(quarter.phase_mae_over_2pi == doctest::Approx(1.0 / 12).epsilon(1e-12));
  CHECK(quarter.rho_mae == doctest::Approx(0.0).epsilon(1e-15));

  // wrapping: a true difference near pi stays near pi and never exceeds it;
  // a difference just past pi wraps back
  ModeCoefficients pa = ca, pb = ca;
  pa.c[2] = std::polar(0.5, M_PI - 0.01);
  pb.c[2] = std::polar(0.5, 0.0);
  const RhoPhiErrors near_pi = rho_phi_errors(pa, pb);
  CHECK(near_pi.phase_mae_over_2pi * 3 * 2 * M_PI == doctest::Approx(M_PI - 0.01).epsilon(1e-9));

  pb.c[2] = std::polar(0.5, -(M_PI - 0.01));  // separation 2 pi - 0.02 -> wraps to 0.02
  const RhoPhiErrors wrapped = rho_phi_errors(pa, pb);
  CHECK(wrapped.phase_mae_over_2pi * 3 * 2 * M_PI == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(wrapped.phase_mae_over_2pi * 3 * 2 * M_PI <= M_PI);

  // near-zero coefficients are skipped
  ModeCoefficients tiny = ca;
  tiny.c[3] = cplx{1e-6, 0};
  const RhoPhiErrors skipped = rho_phi_errors(tiny, cp);
  CHECK(skipped.phase_terms == 2);
}

TEST_CASE("field_correlation") {
  const std::vector<double> a{0.0, 1.0, 2.0, 0.5};
  std::vector<double> b = a;
  for (double& x : b) x *= 3.7;
  CHECK(field_correlation(a, b) == doctest::Approx(1.0).epsilon(1e-14));

  const std::vector<double> c{1.0, 0.0, 0.0, 0.0};
  const std::vector<double> d{0.0, 1.0, 0.0, 0.0};
  CHECK(field_correlation(c, d) == 0.0);
  CHECK(field_correlation(c, a) == field_correlation(a, c));

  const std::vector<double> zeros(4, 0.0);
  try {
    field_correlation(a, zeros);
    FAIL("expected AllZeroImage");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::all_zero_image);
  }
}

TEST_CASE("quartile_examples ranks") {
  // N = 10000: the 2500th, 5000th and 7500th smallest
  std::vector<double> losses(10000);
  Rng rng(11);
  for (auto& x : losses) x = rng.uniform01();
  const auto q = quartile_examples(losses);
  std::vector<double> sorted = losses;
  std::sort(sorted.begin(), sorted.end());
  CHECK(losses[q[0]] == sorted[2499]);
  CHECK(losses[q[1]] == sorted[4999]);
  CHECK(losses[q[2]] == sorted[7499]);

  // N = 4 with losses (4,3,2,1): indices of losses 1, 2, 3
  const auto q4 = quartile_examples({4, 3, 2, 1});
  CHECK(q4 == std::array<long long, 3>{3, 2, 1});

  // ties resolve by ascending index
  const auto qt = quartile_examples({1, 1, 1, 1});
  CHECK(qt == std::array<long long, 3>{0, 1, 2});

  CHECK_THROWS_AS(quartile_examples({1, 2, 3}), Error);
}

TEST_CASE("evaluate with injected exact predictions") {
  const Renderer& renderer = shared_renderer();
  const Dataset ds = generate_dataset(renderer, 5, 100, ChannelSet::n4());
  const Predictor oracle = [&](long long i, const float*, bool*) {
    std::array<double, 7> z{};
    for (int k = 0; k < 7; ++k) z[k] = ds.label(i)[k];
    return z;
  };
  const EvalResult r = evaluate(renderer, ds, oracle);
  CHECK(r.summary.n_samples == 5);
  CHECK(r.summary.label_mae == 0.0);
  CHECK(r.summary.label_rms == 0.0);
  CHECK(r.summary.rho_mae == 0.0);
  CHECK(r.summary.rho_rms == 0.0);
  CHECK(r.summary.phase_mae_over_2pi < 1e-15);
  CHECK(r.summary.corr_full == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.summary.corr_mean == doctest::Approx(1.0).epsilon(1e-12));
  for (double c : r.summary.corr_channel) CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.per_sample.size() == 5);
  CHECK(r.quartiles[0] >= 0);
}

TEST_CASE("evaluate aggregates per-sample errors") {
  const Renderer& renderer = shared_renderer();
  const Dataset ds = generate_dataset(renderer, 6, 101, ChannelSet::n3());
  // biased predictor: z1 off by 0.5 on every sample
  const Predictor biased = [&](long long i, const float*, bool* ambiguous) {
    std::array<double, 7> z{};
    for (int k = 0; k < 7; ++k) z[k] = ds.label(i)[k];
    z[0] -= 0.5;
    if (ambiguous) *ambiguous = (i % 2 == 0);
    return z;
  };
  const EvalResult r = evaluate(renderer, ds, biased);
  CHECK(r.summary.label_mae == doctest::Approx(0.5 / 7).epsilon(1e-12));
  CHECK(r.summary.label_rms == doctest::Approx(std::sqrt(0.25 / 7)).epsilon(1e-12));
  CHECK(r.summary.label_rms >= r.summary.label_mae);
  CHECK(r.summary.n_ambiguous == 3);
  CHECK(r.summary.corr_full < 1.0);
  for (const auto& s : r.per_sample) {
    CHECK(s.label_mae == doctest::Approx(0.5 / 7).epsilon(1e-12));
  }
}
