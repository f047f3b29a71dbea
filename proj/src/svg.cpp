#include "excirec/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "excirec/common.hpp"

namespace excirec {

namespace {

constexpr int kWidth = 860;
constexpr int kHeight = 480;
constexpr int kMargin = 50;

const char* kSeriesColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                               "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::ofstream open_svg(const std::string& path, int w, int h) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw format_error("cannot open " + path + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return out;
}

// Blue -> white -> red ramp over [0, 1].
void ramp(double t, int& r, int& g, int& b) {
  t = std::clamp(t, 0.0, 1.0);
  if (t < 0.5) {
    const double u = t / 0.5;
    r = static_cast<int>(30 + u * (255 - 30));
    g = static_cast<int>(60 + u * (255 - 60));
    b = static_cast<int>(170 + u * (255 - 170));
  } else {
    const double u = (t - 0.5) / 0.5;
    r = 255;
    g = static_cast<int>(255 - u * (255 - 60));
    b = static_cast<int>(255 - u * (255 - 40));
  }
}

}  // namespace

void write_line_svg(const std::string& path, const Eigen::VectorXd& x,
                    const std::vector<Eigen::VectorXd>& series,
                    const std::string& title) {
  if (series.empty() || x.size() < 2)
    throw invalid_input("line plot needs at least one series and two points");
  double lo = series[0].minCoeff(), hi = series[0].maxCoeff();
  for (const auto& s : series) {
    if (s.size() != x.size())
      throw invalid_input("series length does not match the x grid");
    lo = std::min(lo, s.minCoeff());
    hi = std::max(hi, s.maxCoeff());
  }
  if (hi <= lo) hi = lo + 1.0;

  auto out = open_svg(path, kWidth, kHeight);
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title
      << "</text>\n";
  const double x0 = x.minCoeff(), x1 = x.maxCoeff();
  const double sx = (kWidth - 2.0 * kMargin) / (x1 - x0);
  const double sy = (kHeight - 2.0 * kMargin) / (hi - lo);
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
      << kWidth - 2 * kMargin << "\" height=\"" << kHeight - 2 * kMargin
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (size_t k = 0; k < series.size(); ++k) {
    out << "<polyline fill=\"none\" stroke=\""
        << kSeriesColors[k % 8] << "\" stroke-width=\"1.2\" points=\"";
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double px = kMargin + (x[i] - x0) * sx;
      const double py = kHeight - kMargin - (series[k][i] - lo) * sy;
      out << px << ',' << py << ' ';
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
  if (!out) throw format_error("short write to " + path);
}

void write_heatmap_svg(const std::string& path, const Eigen::MatrixXd& m,
                       const std::string& title) {
  if (m.size() == 0) throw invalid_input("empty heatmap");
  // Downsample to at most 256 cells per axis to keep files small.
  const int max_cells = 256;
  const int step_r = std::max<int>(1, static_cast<int>(m.rows()) / max_cells);
  const int step_c = std::max<int>(1, static_cast<int>(m.cols()) / max_cells);
  const int nr = (static_cast<int>(m.rows()) + step_r - 1) / step_r;
  const int nc = (static_cast<int>(m.cols()) + step_c - 1) / step_c;

  const double lo = m.minCoeff();
  const double hi = m.maxCoeff() > lo ? m.maxCoeff() : lo + 1.0;
  const double cw = (kWidth - 2.0 * kMargin) / nc;
  const double ch = (kHeight - 2.0 * kMargin) / nr;

  auto out = open_svg(path, kWidth, kHeight);
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title
      << "</text>\n";
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) {
      double acc = 0.0;
      int count = 0;
      for (int r = i * step_r; r < std::min<int>((i + 1) * step_r, m.rows());
           ++r)
        for (int c = j * step_c; c < std::min<int>((j + 1) * step_c, m.cols());
             ++c) {
          acc += m(r, c);
          ++count;
        }
      int red, green, blue;
      ramp((acc / count - lo) / (hi - lo), red, green, blue);
      out << "<rect x=\"" << kMargin + j * cw << "\" y=\"" << kMargin + i * ch
          << "\" width=\"" << cw + 0.5 << "\" height=\"" << ch + 0.5
          << "\" fill=\"rgb(" << red << ',' << green << ',' << blue
          << ")\"/>\n";
    }
  out << "</svg>\n";
  if (!out) throw format_error("short write to " + path);
}

}  // namespace excirec
