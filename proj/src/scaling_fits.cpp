#include "su2td/scaling_fits.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "su2td/errors.hpp"

namespace su2td {

const char* fit_model_name(FitModel m) {
  return m == FitModel::exponential ? "exponential" : "powerlaw";
}

const char* preference_name(ModelPreference p) {
  switch (p) {
    case ModelPreference::exponential: return "exponential";
    case ModelPreference::powerlaw: return "powerlaw";
    default: return "indeterminate";
  }
}

namespace {

ScalingFit fit_log_linear(std::vector<ScalingPoint> points, FitModel model) {
  std::ostringstream bad;
  bool any_bad = false;
  for (const auto& p : points) {
    if (p.y <= 0.0 || (model == FitModel::powerlaw && p.n <= 0.0)) {
      if (any_bad) bad << ", ";
      bad << "(" << p.n << ", " << p.y << ")";
      any_bad = true;
    }
  }
  if (any_bad) {
    throw argument_error(std::string("scaling fit: nonpositive data at ") + bad.str());
  }

  std::sort(points.begin(), points.end(), [](const ScalingPoint& a, const ScalingPoint& b) {
    return a.n != b.n ? a.n < b.n : a.y < b.y;
  });

  ScalingFit fit;
  fit.model = model;
  std::vector<double> xs, zs;
  for (const auto& p : points) {
    if (p.y <= 1e-300) {
      ++fit.n_dropped;
      continue;
    }
    xs.push_back(model == FitModel::exponential ? p.n : std::log(p.n));
    zs.push_back(std::log(p.y));
  }
  fit.n_points = xs.size();
  if (fit.n_points < 3) {
    throw argument_error("scaling fit: need at least 3 usable points, have " +
                         std::to_string(fit.n_points));
  }

  const double inv = 1.0 / static_cast<double>(xs.size());
  double mx = 0.0, mz = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i] * inv;
    mz += zs[i] * inv;
  }
  double sxx = 0.0, sxz = 0.0, szz = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxz += (xs[i] - mx) * (zs[i] - mz);
    szz += (zs[i] - mz) * (zs[i] - mz);
  }
  if (sxx <= 0.0) {
    throw argument_error("scaling fit: need at least 2 distinct sizes");
  }
  const double slope = sxz / sxx;
  const double intercept = mz - slope * mx;

  fit.a = std::exp(intercept);
  fit.b = -slope;
  fit.residuals.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = zs[i] - (intercept + slope * xs[i]);
    fit.residuals.push_back(r);
    fit.rss_log += r * r;
  }
  fit.r_squared = (szz > 1e-30) ? 1.0 - fit.rss_log / szz : 1.0;
  return fit;
}

}  // namespace

ScalingFit fit_exponential(std::vector<ScalingPoint> points) {
  return fit_log_linear(std::move(points), FitModel::exponential);
}

ScalingFit fit_powerlaw(std::vector<ScalingPoint> points) {
  return fit_log_linear(std::move(points), FitModel::powerlaw);
}

ModelComparison compare_models(const std::vector<ScalingPoint>& points) {
  ModelComparison cmp;
  cmp.exponential = fit_exponential(points);
  cmp.powerlaw = fit_powerlaw(points);
  cmp.delta_rss_log = cmp.exponential.rss_log - cmp.powerlaw.rss_log;
  if (std::abs(cmp.delta_rss_log) <= 1e-12) {
    cmp.preferred = ModelPreference::indeterminate;
  } else if (cmp.delta_rss_log < 0.0) {
    cmp.preferred = ModelPreference::exponential;
  } else {
    cmp.preferred = ModelPreference::powerlaw;
  }
  return cmp;
}

}  // namespace su2td
