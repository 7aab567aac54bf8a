#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "su2td/errors.hpp"
#include "su2td/scaling_fits.hpp"

using namespace su2td;

namespace {

std::vector<ScalingPoint> sample(double (*f)(double), std::initializer_list<double> ns) {
  std::vector<ScalingPoint> pts;
  for (double n : ns) pts.push_back({n, f(n)});
  return pts;
}

}  // namespace

TEST_CASE("exponential fit recovers exact exponential data") {
  SUBCASE("unit amplitude, unit rate") {
    const auto fit = fit_exponential(sample([](double n) { return std::exp(-n); },
                                            {4.0, 6.0, 8.0, 10.0, 12.0}));
    CHECK(fit.a == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.b == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.rss_log <= 1e-20);
    CHECK(fit.n_points == 5);
    CHECK(fit.n_dropped == 0);
  }
  SUBCASE("amplitude two, rate one half") {
    const auto fit = fit_exponential(
        sample([](double n) { return 2.0 * std::exp(-0.5 * n); }, {4.0, 6.0, 8.0, 10.0}));
    CHECK(std::abs(fit.a - 2.0) <= 1e-12);
    CHECK(std::abs(fit.b - 0.5) <= 1e-12);
  }
  SUBCASE("constant data fits with zero rate") {
    const auto fit =
        fit_exponential(sample([](double) { return 0.7; }, {4.0, 6.0, 8.0, 10.0}));
    CHECK(fit.a == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(std::abs(fit.b) <= 1e-14);
    CHECK(fit.r_squared == doctest::Approx(1.0));
  }
}

TEST_CASE("power-law fit recovers exact power-law data") {
  SUBCASE("inverse square") {
    const auto fit = fit_powerlaw(
        sample([](double n) { return std::pow(n, -2.0); }, {4.0, 6.0, 8.0, 10.0, 12.0}));
    CHECK(fit.a == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.b == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("amplitude three, rate one") {
    const auto fit = fit_powerlaw(
        sample([](double n) { return 3.0 / n; }, {4.0, 6.0, 8.0, 10.0}));
    CHECK(std::abs(fit.a - 3.0) <= 1e-10);
    CHECK(std::abs(fit.b - 1.0) <= 1e-12);
  }
}

TEST_CASE("fits are independent of point order") {
  std::vector<ScalingPoint> pts{{8.0, 0.31}, {4.0, 0.9}, {12.0, 0.11}, {6.0, 0.52}, {10.0, 0.18}};
  std::vector<ScalingPoint> shuffled = pts;
  std::mt19937 rng(3);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  for (auto* fitter : {&fit_exponential, &fit_powerlaw}) {
    const ScalingFit a = (*fitter)(pts);
    const ScalingFit b = (*fitter)(shuffled);
    CHECK(a.a == b.a);
    CHECK(a.b == b.b);
    CHECK(a.rss_log == b.rss_log);
    REQUIRE(a.residuals.size() == b.residuals.size());
    for (std::size_t i = 0; i < a.residuals.size(); ++i)
      CHECK(a.residuals[i] == b.residuals[i]);
  }
}

TEST_CASE("rescaling the data only rescales the amplitude") {
  std::vector<ScalingPoint> pts{{4.0, 0.8}, {6.0, 0.5}, {8.0, 0.33}, {10.0, 0.21}};
  std::vector<ScalingPoint> scaled = pts;
  for (auto& p : scaled) p.y *= 37.0;

  const ScalingFit base = fit_exponential(pts);
  const ScalingFit big = fit_exponential(scaled);
  CHECK(std::abs(big.b - base.b) <= 1e-10);
  CHECK(big.a == doctest::Approx(37.0 * base.a).epsilon(1e-10));
  CHECK(std::abs(big.rss_log - base.rss_log) <= 1e-10);
}

TEST_CASE("input validation and tiny-value dropping") {
  CHECK_THROWS_AS(fit_exponential({{4.0, 1.0}, {6.0, -0.1}, {8.0, 0.2}}), argument_error);
  CHECK_THROWS_AS(fit_powerlaw({{4.0, 0.0}, {6.0, 0.1}, {8.0, 0.2}}), argument_error);
  CHECK_THROWS_AS(fit_exponential({{4.0, 1.0}, {6.0, 0.5}}), argument_error);  // too few

  const ScalingFit fit = fit_exponential(
      {{4.0, 1.0}, {6.0, 0.5}, {8.0, 0.25}, {10.0, 1e-301}, {12.0, 0.0625}});
  CHECK(fit.n_dropped == 1);
  CHECK(fit.n_points == 4);
  CHECK(fit.b == doctest::Approx(std::log(2.0) / 2.0).epsilon(1e-10));

  // Dropping everything leaves too few points.
  CHECK_THROWS_AS(fit_exponential({{4.0, 1e-301}, {6.0, 1e-302}, {8.0, 1e-303}}),
                  argument_error);
}

TEST_CASE("model comparison prefers the generating model") {
  SUBCASE("exponential data") {
    const auto pts = sample([](double n) { return 0.8 * std::exp(-0.4 * n); },
                            {8.0, 10.0, 12.0, 14.0, 16.0});
    const ModelComparison cmp = compare_models(pts);
    CHECK(cmp.preferred == ModelPreference::exponential);
    CHECK(cmp.delta_rss_log < 0.0);
    CHECK(cmp.exponential.rss_log < cmp.powerlaw.rss_log);
    CHECK(cmp.powerlaw.r_squared < cmp.exponential.r_squared);
  }
  SUBCASE("power-law data") {
    const auto pts = sample([](double n) { return 5.0 * std::pow(n, -1.7); },
                            {8.0, 10.0, 12.0, 14.0, 16.0});
    const ModelComparison cmp = compare_models(pts);
    CHECK(cmp.preferred == ModelPreference::powerlaw);
    CHECK(cmp.delta_rss_log > 0.0);
  }
  SUBCASE("constant data fits both exactly and is indeterminate") {
    const auto pts = sample([](double) { return 0.25; }, {8.0, 10.0, 12.0});
    const ModelComparison cmp = compare_models(pts);
    CHECK(cmp.preferred == ModelPreference::indeterminate);
    CHECK(std::abs(cmp.delta_rss_log) <= 1e-12);
  }
}

TEST_CASE("model and preference names") {
  CHECK(std::string(fit_model_name(FitModel::exponential)) == "exponential");
  CHECK(std::string(fit_model_name(FitModel::powerlaw)) == "powerlaw");
  CHECK(std::string(preference_name(ModelPreference::exponential)) == "exponential");
  CHECK(std::string(preference_name(ModelPreference::powerlaw)) == "powerlaw");
  CHECK(std::string(preference_name(ModelPreference::indeterminate)) == "indeterminate");
}
