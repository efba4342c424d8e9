#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cicw/kernels.hpp"

namespace cicw {

struct Segment {
  double x0, y0, x1, y1;
};

/// Marching-squares contour of `grid` (row = y index) at `level`, in the
/// coordinates of `box`.
std::vector<Segment> contour_segments(const Eigen::MatrixXd& grid, const GridBox& box, double level);

struct SvgPanel {
  std::string title;
  std::vector<Segment> boundary;
};

/// Scatter of `points` (raw coordinates, one colour per label, corrupted
/// points ringed) with one decision boundary per panel, side by side.
void write_decision_svg(std::ostream& out, const GridBox& box, const Eigen::MatrixXd& points,
                        const std::vector<std::size_t>& labels, const std::vector<bool>& corrupted,
                        const std::vector<SvgPanel>& panels);

}  // namespace cicw
