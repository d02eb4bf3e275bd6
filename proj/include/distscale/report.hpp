#pragma once

#include <span>
#include <string>

#include "distscale/regressor.hpp"

namespace distscale {

/// Percentage error against load for the learned and baseline predictions,
/// with each mean drawn as a dashed horizontal line.
std::string error_vs_load_svg(const ErrorCurve& learned, const ErrorCurve& baseline);

/// Predicted against true delta_1 with the y = x line and an R2 label.
std::string delta_scatter_svg(std::span<const double> truth, std::span<const double> pred, double r2);

/// Mean R2 over units x dropout.
std::string grid_heatmap_svg(const GridSearchResult& result);

/// Mean R2 against units per layer.
std::string grid_marginal_svg(const GridSearchResult& result);

}  // namespace distscale
