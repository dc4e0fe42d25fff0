#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "invreg/diagnostics.hpp"

namespace invreg::cli {
namespace {

constexpr double kPanelW = 420.0;
constexpr double kPanelH = 280.0;
constexpr double kMargin = 48.0;
constexpr std::size_t kMaxPoints = 1500;
constexpr double kLogFloor = 1e-16;

struct Series {
  std::vector<double> xs;
  std::vector<double> ys;
  std::string color;
  std::string label;
};

struct Panel {
  std::string title;
  std::string x_label;
  bool log_y = false;
  std::vector<Series> series;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::size_t stride_for(std::size_t count) {
  return std::max<std::size_t>(1, (count + kMaxPoints - 1) / kMaxPoints);
}

void draw_panel(std::ostream& out, const Panel& panel, double ox, double oy) {
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  auto ty = [&](double y) { return panel.log_y ? std::log10(std::max(y, kLogFloor)) : y; };
  for (const auto& s : panel.series) {
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      x_lo = std::min(x_lo, s.xs[i]);
      x_hi = std::max(x_hi, s.xs[i]);
      y_lo = std::min(y_lo, ty(s.ys[i]));
      y_hi = std::max(y_hi, ty(s.ys[i]));
    }
  }
  if (!(x_hi > x_lo)) x_hi = x_lo + 1.0;
  if (!(y_hi > y_lo)) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  const double w = kPanelW - 2 * kMargin;
  const double h = kPanelH - 2 * kMargin;
  auto px = [&](double x) { return ox + kMargin + (x - x_lo) / (x_hi - x_lo) * w; };
  auto py = [&](double y) { return oy + kMargin + h - (ty(y) - y_lo) / (y_hi - y_lo) * h; };

  out << "<rect x=\"" << ox + kMargin << "\" y=\"" << oy + kMargin << "\" width=\"" << w
      << "\" height=\"" << h << "\" fill=\"none\" stroke=\"#444\"/>\n";
  out << "<text x=\"" << ox + kPanelW / 2 << "\" y=\"" << oy + kMargin - 14
      << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(panel.title) << "</text>\n";
  out << "<text x=\"" << ox + kPanelW / 2 << "\" y=\"" << oy + kPanelH - 12
      << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(panel.x_label) << "</text>\n";
  const std::string y_lo_text = panel.log_y ? "1e" + fmt(y_lo) : fmt(y_lo);
  const std::string y_hi_text = panel.log_y ? "1e" + fmt(y_hi) : fmt(y_hi);
  out << "<text x=\"" << ox + kMargin - 4 << "\" y=\"" << oy + kMargin + h
      << "\" text-anchor=\"end\" font-size=\"10\">" << y_lo_text << "</text>\n";
  out << "<text x=\"" << ox + kMargin - 4 << "\" y=\"" << oy + kMargin + 10
      << "\" text-anchor=\"end\" font-size=\"10\">" << y_hi_text << "</text>\n";
  out << "<text x=\"" << ox + kMargin << "\" y=\"" << oy + kMargin + h + 14
      << "\" font-size=\"10\">" << fmt(x_lo) << "</text>\n";
  out << "<text x=\"" << ox + kMargin + w << "\" y=\"" << oy + kMargin + h + 14
      << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(x_hi) << "</text>\n";

  double legend_y = oy + kMargin + 14;
  for (const auto& s : panel.series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      out << fmt(px(s.xs[i])) << ',' << fmt(py(s.ys[i])) << ' ';
    }
    out << "\"/>\n";
    if (!s.label.empty()) {
      out << "<text x=\"" << ox + kMargin + w - 6 << "\" y=\"" << legend_y
          << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << s.color << "\">"
          << escape(s.label) << "</text>\n";
      legend_y += 14;
    }
  }
}

}  // namespace

void write_svg(std::ostream& out, const Trajectory& traj, const Models& models,
               const std::string& title) {
  const std::size_t step = stride_for(traj.size());
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < traj.size(); k += step) idx.push_back(k);
  if (!traj.empty() && idx.back() != traj.size() - 1) idx.push_back(traj.size() - 1);

  Panel phase;
  Panel psi{"psi(x(t))", "t", false, {}};
  Panel est{"||theta - theta_hat||", "t", true, {}};
  Panel lyap{"Lyapunov traces", "t", true, {}};

  Series x_series{{}, {}, "#1f77b4", "x"};
  Series xi_series{{}, {}, "#ff7f0e", "xi"};
  Series psi_series{{}, {}, "#2ca02c", ""};
  Series est_series{{}, {}, "#d62728", ""};
  if (models.n() >= 2) {
    phase = {"phase portrait", "x_1 (vertical: x_2)", false, {}};
    for (std::size_t k : idx) {
      x_series.xs.push_back(traj.states[k].x[0]);
      x_series.ys.push_back(traj.states[k].x[1]);
      xi_series.xs.push_back(traj.states[k].xi[0]);
      xi_series.ys.push_back(traj.states[k].xi[1]);
    }
  } else {
    phase = {"state", "t", false, {}};
    for (std::size_t k : idx) {
      x_series.xs.push_back(traj.times[k]);
      x_series.ys.push_back(traj.states[k].x[0]);
      xi_series.xs.push_back(traj.times[k]);
      xi_series.ys.push_back(traj.states[k].xi[0]);
    }
  }
  for (std::size_t k : idx) {
    psi_series.xs.push_back(traj.times[k]);
    psi_series.ys.push_back(traj.derived[k].psi);
    est_series.xs.push_back(traj.times[k]);
    est_series.ys.push_back(norm(sub(traj.states[k].theta, traj.derived[k].theta_hat)));
  }
  phase.series = {x_series, xi_series};
  psi.series = {psi_series};
  est.series = {est_series};

  if (!traj.empty()) {
    const Trace vt = v_theta_trace(traj, models);
    const Trace vx = v_xi_trace(traj, models);
    Series vt_series{{}, {}, "#9467bd", "V_theta"};
    Series vx_series{{}, {}, "#8c564b", "V_xi"};
    for (std::size_t k : idx) {
      vt_series.xs.push_back(vt[k].t);
      vt_series.ys.push_back(vt[k].value);
      vx_series.xs.push_back(vx[k].t);
      vx_series.ys.push_back(vx[k].value);
    }
    lyap.series = {vt_series, vx_series};
  }

  const double width = 2 * kPanelW;
  const double height = 2 * kPanelH + 30;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height
      << "\" font-family=\"sans-serif\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";
  draw_panel(out, phase, 0, 30);
  draw_panel(out, psi, kPanelW, 30);
  draw_panel(out, est, 0, 30 + kPanelH);
  draw_panel(out, lyap, kPanelW, 30 + kPanelH);
  out << "</svg>\n";
}

}  // namespace invreg::cli
