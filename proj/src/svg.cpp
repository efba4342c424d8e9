#include "cicw/svg.hpp"

#include <ostream>

#include "cicw/errors.hpp"
#include "cicw/format.hpp"

namespace cicw {

std::vector<Segment> contour_segments(const Eigen::MatrixXd& grid, const GridBox& box, double level) {
  require(grid.rows() >= 2 && grid.cols() >= 2, ErrorKind::kInvalidArgument,
          "contour grid must be at least 2 x 2");
  const double dx = (box.x_max - box.x_min) / static_cast<double>(grid.cols() - 1);
  const double dy = (box.y_max - box.y_min) / static_cast<double>(grid.rows() - 1);
  std::vector<Segment> out;
  for (Eigen::Index r = 0; r + 1 < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c + 1 < grid.cols(); ++c) {
      // Corners counter-clockwise from bottom-left.
      const double v[4] = {grid(r, c), grid(r, c + 1), grid(r + 1, c + 1), grid(r + 1, c)};
      const double px[4] = {0, 1, 1, 0};
      const double py[4] = {0, 0, 1, 1};
      std::vector<std::pair<double, double>> hits;
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        if ((v[a] < level) == (v[b] < level)) continue;
        const double s = (level - v[a]) / (v[b] - v[a]);
        hits.emplace_back(px[a] + s * (px[b] - px[a]), py[a] + s * (py[b] - py[a]));
      }
      auto to_box = [&](std::pair<double, double> q) {
        return std::pair{box.x_min + (static_cast<double>(c) + q.first) * dx,
                         box.y_min + (static_cast<double>(r) + q.second) * dy};
      };
      for (std::size_t h = 0; h + 1 < hits.size(); h += 2) {
        const auto p = to_box(hits[h]);
        const auto q = to_box(hits[h + 1]);
        out.push_back({p.first, p.second, q.first, q.second});
      }
    }
  }
  return out;
}

void write_decision_svg(std::ostream& out, const GridBox& box, const Eigen::MatrixXd& points,
                        const std::vector<std::size_t>& labels, const std::vector<bool>& corrupted,
                        const std::vector<SvgPanel>& panels) {
  require(points.cols() == 2, ErrorKind::kShapeMismatch, "decision plots need 2-D points");
  require(labels.size() == static_cast<std::size_t>(points.rows()) && corrupted.size() == labels.size(),
          ErrorKind::kShapeMismatch, "labels and points differ in length");
  const double size = 360.0, pad = 20.0, head = 24.0;
  const double sx = size / (box.x_max - box.x_min);
  const double sy = size / (box.y_max - box.y_min);
  const double width = static_cast<double>(panels.size()) * (size + pad) + pad;
  const char* colours[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << shortest(width) << "\" height=\""
      << shortest(size + 2 * pad + head) << "\">\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double ox = pad + static_cast<double>(p) * (size + pad), oy = pad + head;
    auto X = [&](double x) { return shortest(ox + (x - box.x_min) * sx); };
    auto Y = [&](double y) { return shortest(oy + (box.y_max - y) * sy); };
    out << "<text x=\"" << shortest(ox) << "\" y=\"" << shortest(pad + 14) << "\" font-size=\"14\">"
        << panels[p].title << "</text>\n";
    out << "<rect x=\"" << shortest(ox) << "\" y=\"" << shortest(oy) << "\" width=\"" << shortest(size)
        << "\" height=\"" << shortest(size) << "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const double x = points(i, 0), y = points(i, 1);
      if (x < box.x_min || x > box.x_max || y < box.y_min || y > box.y_max) continue;
      const auto k = static_cast<std::size_t>(i);
      out << "<circle cx=\"" << X(x) << "\" cy=\"" << Y(y) << "\" r=\"2\" fill=\"" << colours[labels[k] % 6]
          << '"' << (corrupted[k] ? " stroke=\"black\" stroke-width=\"0.8\"" : "") << "/>\n";
    }
    for (const Segment& s : panels[p].boundary) {
      out << "<line x1=\"" << X(s.x0) << "\" y1=\"" << Y(s.y0) << "\" x2=\"" << X(s.x1) << "\" y2=\""
          << Y(s.y1) << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace cicw
