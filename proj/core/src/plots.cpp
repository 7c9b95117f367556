#include "ivbandit/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ivbandit/errors.hpp"

namespace ivb {

namespace {

constexpr double kW = 720, kH = 420;
constexpr double kLeft = 80, kRight = 24, kTop = 40, kBottom = 80;
constexpr double kPlotW = kW - kLeft - kRight;
constexpr double kPlotH = kH - kTop - kBottom;

const char* kPalette[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f",
                          "#956cb4", "#8c613c", "#dc7ec0", "#797979"};
constexpr size_t kPaletteN = sizeof(kPalette) / sizeof(kPalette[0]);

std::string fmt(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%g", v);
  return b;
}

std::string fmt2(double v) {
  char b[64];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else if (c == '"')
      out += "&quot;";
    else
      out += c;
  }
  return out;
}

std::string svg_open(const std::string& title) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kW) +
                  "\" height=\"" + fmt(kH) + "\" viewBox=\"0 0 " + fmt(kW) + " " + fmt(kH) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "  <text x=\"" + fmt(kW / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       escape(title) + "</text>\n";
  return s;
}

std::string axis_frame() {
  return "  <line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) +
         "\" y2=\"" + fmt(kTop + kPlotH) + "\" stroke=\"black\"/>\n  <line x1=\"" + fmt(kLeft) +
         "\" y1=\"" + fmt(kTop + kPlotH) + "\" x2=\"" + fmt(kLeft + kPlotW) + "\" y2=\"" +
         fmt(kTop + kPlotH) + "\" stroke=\"black\"/>\n";
}

std::string y_ticks(double ymax, const char* label) {
  std::string s;
  for (int i = 0; i <= 4; ++i) {
    const double v = ymax * i / 4.0;
    const double y = kTop + kPlotH * (1.0 - double(i) / 4.0);
    s += "  <line x1=\"" + fmt(kLeft - 4) + "\" y1=\"" + fmt2(y) + "\" x2=\"" +
         fmt(kLeft + kPlotW) + "\" y2=\"" + fmt2(y) + "\" stroke=\"#dddddd\"/>\n";
    s += "  <text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt2(y + 4) +
         "\" text-anchor=\"end\">" + fmt(v) + "</text>\n";
  }
  s += "  <text x=\"16\" y=\"" + fmt(kTop + kPlotH / 2) + "\" transform=\"rotate(-90 16 " +
       fmt(kTop + kPlotH / 2) + ")\" text-anchor=\"middle\">" + escape(label) + "</text>\n";
  return s;
}

std::string legend(const std::vector<std::string>& names) {
  std::string s = "  <g class=\"legend\">\n";
  for (size_t i = 0; i < names.size(); ++i) {
    const double y = kTop + 8 + 18.0 * double(i);
    s += "    <rect x=\"" + fmt(kLeft + kPlotW - 150) + "\" y=\"" + fmt2(y - 9) +
         "\" width=\"12\" height=\"12\" fill=\"" + kPalette[i % kPaletteN] + "\"/>\n";
    s += "    <text x=\"" + fmt(kLeft + kPlotW - 132) + "\" y=\"" + fmt2(y + 2) + "\">" +
         escape(names[i]) + "</text>\n";
  }
  s += "  </g>\n";
  return s;
}

// Per-key samples moments in first-appearance order; keys prefix the
// instance when the table spans several.
struct KeyStats {
  std::string key;
  double mean = 0.0;
  double stdev = 0.0;
  double success = 0.0;
  size_t n = 0;
};

std::vector<KeyStats> collect(const ResultsTable& table, bool per_step_only, bool skip_per_step) {
  std::vector<std::string> ids;
  for (const auto& r : table.rows)
    if (std::find(ids.begin(), ids.end(), r.instance_id) == ids.end())
      ids.push_back(r.instance_id);
  const bool multi = ids.size() > 1;

  std::vector<std::pair<std::string, std::vector<const ResultRow*>>> groups;
  for (const auto& r : table.rows) {
    const bool per_step = r.algorithm == "ucb-ols" || r.algorithm == "ucb-iv";
    if (per_step_only && !per_step) continue;
    if (skip_per_step && per_step) continue;
    const std::string key = multi ? r.instance_id + "/" + r.algorithm : r.algorithm;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == key; });
    if (it == groups.end()) {
      groups.push_back({key, {}});
      it = groups.end() - 1;
    }
    it->second.push_back(&r);
  }

  std::vector<KeyStats> out;
  for (const auto& [key, rows] : groups) {
    KeyStats st;
    st.key = key;
    st.n = rows.size();
    for (const auto* r : rows) {
      st.mean += double(r->samples);
      st.success += r->correct ? 1.0 : 0.0;
    }
    st.mean /= double(st.n);
    st.success /= double(st.n);
    double var = 0.0;
    for (const auto* r : rows) var += (double(r->samples) - st.mean) * (double(r->samples) - st.mean);
    st.stdev = st.n > 1 ? std::sqrt(var / double(st.n - 1)) : 0.0;
    out.push_back(std::move(st));
  }
  return out;
}

}  // namespace

std::string svg_samples_bar(const ResultsTable& table) {
  const auto stats = collect(table, false, false);
  if (stats.empty()) throw EmptySelection("samples bar figure: no rows to plot");

  double ymax = 1.0;
  for (const auto& st : stats) ymax = std::max(ymax, st.mean + st.stdev);
  ymax *= 1.1;

  std::string s = svg_open("mean samples to identification");
  s += y_ticks(ymax, "samples");
  const double slot = kPlotW / double(stats.size());
  std::vector<std::string> names;
  for (size_t i = 0; i < stats.size(); ++i) {
    const auto& st = stats[i];
    names.push_back(st.key);
    const double x = kLeft + slot * double(i) + 0.2 * slot;
    const double h = kPlotH * st.mean / ymax;
    const double y = kTop + kPlotH - h;
    s += "  <rect class=\"bar\" x=\"" + fmt2(x) + "\" y=\"" + fmt2(y) + "\" width=\"" +
         fmt2(0.6 * slot) + "\" height=\"" + fmt2(h) + "\" fill=\"" +
         kPalette[i % kPaletteN] + "\" data-algorithm=\"" + escape(st.key) + "\" data-mean=\"" +
         fmt(st.mean) + "\" data-std=\"" + fmt(st.stdev) + "\"/>\n";
    // error whisker at +/- one sample standard deviation
    const double cx = x + 0.3 * slot;
    const double ylo = kTop + kPlotH - kPlotH * std::max(0.0, st.mean - st.stdev) / ymax;
    const double yhi = kTop + kPlotH - kPlotH * std::min(ymax, st.mean + st.stdev) / ymax;
    s += "  <line x1=\"" + fmt2(cx) + "\" y1=\"" + fmt2(ylo) + "\" x2=\"" + fmt2(cx) +
         "\" y2=\"" + fmt2(yhi) + "\" stroke=\"black\"/>\n";
    s += "  <text x=\"" + fmt2(cx) + "\" y=\"" + fmt(kTop + kPlotH + 18) +
         "\" text-anchor=\"middle\">" + escape(st.key) + "</text>\n";
  }
  s += axis_frame();
  s += legend(names);
  s += "</svg>\n";
  return s;
}

std::string svg_success_vs_horizon(const ResultsTable& table,
                                   const std::vector<SuccessCurve>& curves) {
  const auto elim = collect(table, false, true);
  if (curves.empty() && elim.empty())
    throw EmptySelection("horizon figure: no curves and no elimination rows");

  double xmax = 1.0;
  for (const auto& c : curves) xmax = std::max(xmax, double(c.success_at.size()) * double(c.step));
  for (const auto& st : elim) xmax = std::max(xmax, 1.25 * st.mean);

  std::string s = svg_open("probability of identifying the best arm");
  s += y_ticks(1.0, "success probability");
  for (int i = 0; i <= 4; ++i) {
    const double v = xmax * i / 4.0;
    const double x = kLeft + kPlotW * double(i) / 4.0;
    s += "  <text x=\"" + fmt2(x) + "\" y=\"" + fmt(kTop + kPlotH + 18) +
         "\" text-anchor=\"middle\">" + fmt(v) + "</text>\n";
  }
  s += "  <text x=\"" + fmt(kLeft + kPlotW / 2) + "\" y=\"" + fmt(kH - 24) +
       "\" text-anchor=\"middle\">samples</text>\n";

  const auto px = [&](double v) { return kLeft + kPlotW * v / xmax; };
  const auto py = [&](double v) { return kTop + kPlotH * (1.0 - v); };

  std::vector<std::string> names;
  size_t color = 0;
  for (const auto& c : curves) {
    names.push_back(c.algorithm);
    const size_t stride = std::max<size_t>(1, c.success_at.size() / 512);
    std::string pts;
    for (size_t i = 0; i < c.success_at.size(); i += stride)
      pts += fmt2(px(double(i + 1) * double(c.step))) + "," + fmt2(py(c.success_at[i])) + " ";
    if (!c.success_at.empty())
      pts += fmt2(px(double(c.success_at.size()) * double(c.step))) + "," +
             fmt2(py(c.success_at.back()));
    s += "  <polyline class=\"series\" fill=\"none\" stroke=\"" +
         std::string(kPalette[color % kPaletteN]) + "\" stroke-width=\"1.5\" data-algorithm=\"" +
         escape(c.algorithm) + "\" data-final=\"" +
         fmt(c.success_at.empty() ? 0.0 : c.success_at.back()) + "\" points=\"" + pts + "\"/>\n";
    ++color;
  }
  for (const auto& st : elim) {
    names.push_back(st.key);
    // step curve: nothing until the mean budget, its success rate afterwards
    std::string pts = fmt2(px(0)) + "," + fmt2(py(0)) + " " + fmt2(px(st.mean)) + "," +
                      fmt2(py(0)) + " " + fmt2(px(st.mean)) + "," + fmt2(py(st.success)) + " " +
                      fmt2(px(xmax)) + "," + fmt2(py(st.success));
    s += "  <polyline class=\"series\" fill=\"none\" stroke=\"" +
         std::string(kPalette[color % kPaletteN]) + "\" stroke-width=\"1.5\" stroke-dasharray=\"5 3\"" +
         " data-algorithm=\"" + escape(st.key) + "\" data-final=\"" + fmt(st.success) +
         "\" data-mean-samples=\"" + fmt(st.mean) + "\" points=\"" + pts + "\"/>\n";
    ++color;
  }
  s += axis_frame();
  s += legend(names);
  s += "</svg>\n";
  return s;
}

void emit_plots(const ResultsTable& table, const RunArtifacts* artifacts, const std::string& dir,
                PlotKind kind) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IOError("cannot create plot directory " + dir + ": " + ec.message());
  const auto write_file = [&](const char* name, const std::string& content) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    out << content;
    if (!out) throw IOError(std::string("cannot write ") + name + " in " + dir);
  };
  if (kind == PlotKind::SamplesBar) {
    write_file("samples_bar.svg", svg_samples_bar(table));
  } else {
    static const std::vector<SuccessCurve> none;
    write_file("success_vs_horizon.svg",
               svg_success_vs_horizon(table, artifacts ? artifacts->curves : none));
  }
}

}  // namespace ivb
