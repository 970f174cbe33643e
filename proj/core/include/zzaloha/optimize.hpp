#pragma once

#include <functional>
#include <vector>

namespace zzaloha {

struct MaximizeOptions {
    double lower = 1e-4;
    double upper = 1.0;
    double grid_step = 0.01;
    /// Final bracket width of each golden-section refinement.
    double tolerance = 1e-6;
    /// Number of best grid cells refined.
    int starts = 3;
    /// The objective is flat when max - min over the grid is below this.
    double flat_tolerance = 1e-10;
};

struct ScalarMaximum {
    double arg = 0.0;
    double value = 0.0;
    bool flat = false;
};

/// Grid points used by maximize_scalar: `lower`, the multiples of
/// `grid_step` strictly inside (lower, upper), and `upper`.
std::vector<double> maximize_grid(const MaximizeOptions& options);

/// Coarse grid scan followed by golden-section refinement of the best
/// `starts` cells. Ties, including a flat objective, go to the smallest
/// argument.
ScalarMaximum maximize_scalar(const std::function<double(double)>& objective, const MaximizeOptions& options = {});

}  // namespace zzaloha
