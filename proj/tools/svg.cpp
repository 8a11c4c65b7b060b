#include <algorithm>
#include <limits>
#include <sstream>

#include "output.hpp"

namespace rhcli {

namespace {

std::size_t column(const Csv& csv, const std::string& name) {
  const auto& cols = csv.columns();
  auto it = std::find(cols.begin(), cols.end(), name);
  if (it == cols.end()) throw std::logic_error("no column " + name + " in " + csv.name());
  return static_cast<std::size_t>(it - cols.begin());
}

std::optional<double> number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || !std::isfinite(v)) return std::nullopt;
  return v;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

void write_svg(const std::filesystem::path& file, const std::string& title, const Csv& csv,
               const std::string& x_col, const std::string& y_col,
               const std::vector<std::string>& group_cols) {
  const std::size_t xi = column(csv, x_col);
  const std::size_t yi = column(csv, y_col);
  std::vector<std::size_t> gi;
  for (const auto& g : group_cols) gi.push_back(column(csv, g));

  std::map<std::string, std::vector<std::pair<double, double>>> series;
  std::vector<std::string> order;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& r : csv.rows()) {
    auto x = number(r[xi]);
    auto y = number(r[yi]);
    if (!x || !y) continue;
    std::string key;
    for (auto g : gi) key += (key.empty() ? "" : " ") + csv.columns()[g] + "=" + r[g];
    if (!series.count(key)) order.push_back(key);
    series[key].emplace_back(*x, *y);
    x0 = std::min(x0, *x);
    x1 = std::max(x1, *x);
    y0 = std::min(y0, *y);
    y1 = std::max(y1, *y);
  }
  if (order.empty()) {
    x0 = y0 = 0.0;
    x1 = y1 = 1.0;
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;

  const double W = 720, H = 440, L = 70, R = 200, T = 40, B = 50;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << L << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
    << H - T - B << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    s << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
      << fmt(std::round(xv * 1000) / 1000) << "</text>\n";
    s << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
      << fmt(std::round(yv * 1000) / 1000) << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
    << x_col << "</text>\n";
  s << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\" text-anchor=\"middle\">" << y_col << "</text>\n";
  for (std::size_t k = 0; k < order.size(); ++k) {
    const char* colour = kPalette[k % 10];
    s << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\"";
    const auto& pts = series[order[k]];
    const std::size_t stride = std::max<std::size_t>(1, pts.size() / 2000);
    for (std::size_t i = 0; i < pts.size(); i += stride) {
      s << fmt(std::round(px(pts[i].first) * 10) / 10) << ','
        << fmt(std::round(py(pts[i].second) * 10) / 10) << ' ';
    }
    s << "\"/>\n";
    if (k < 20) {
      s << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 14 * (k + 1) << "\" fill=\"" << colour
        << "\">" << order[k] << "</text>\n";
    }
  }
  s << "</svg>\n";
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << s.str();
}

}  // namespace rhcli
