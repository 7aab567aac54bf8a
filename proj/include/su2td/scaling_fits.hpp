#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace su2td {

enum class FitModel {
  exponential,  // y = a * exp(-b N)
  powerlaw,     // y = a * N^{-b}
};

const char* fit_model_name(FitModel m);

struct ScalingPoint {
  double n;
  double y;
};

/// Log-space least-squares fit. Points with y <= 1e-300 are dropped and
/// counted in n_dropped; nonpositive y is an argument_error. Points are
/// sorted by (n, y) before fitting, so the result is order-independent.
struct ScalingFit {
  FitModel model = FitModel::exponential;
  double a = 0.0;
  double b = 0.0;
  double r_squared = 0.0;
  double rss_log = 0.0;            // residual sum of squares in log space
  std::vector<double> residuals;   // log-space, in sorted point order
  std::size_t n_points = 0;
  std::size_t n_dropped = 0;
};

ScalingFit fit_exponential(std::vector<ScalingPoint> points);
ScalingFit fit_powerlaw(std::vector<ScalingPoint> points);

enum class ModelPreference { exponential, powerlaw, indeterminate };

const char* preference_name(ModelPreference p);

struct ModelComparison {
  ScalingFit exponential;
  ScalingFit powerlaw;
  ModelPreference preferred = ModelPreference::indeterminate;
  double delta_rss_log = 0.0;  // rss(exponential) - rss(powerlaw)
};

/// Both fits on the same points; the model with smaller log-space residual
/// sum wins, ties within 1e-12 are indeterminate.
ModelComparison compare_models(const std::vector<ScalingPoint>& points);

}  // namespace su2td
