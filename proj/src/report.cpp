#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "dartr/error.hpp"
#include "dartr/harness.hpp"
#include "dartr/io.hpp"

namespace dartr {
namespace {

namespace fs = std::filesystem;

const char* kCellsHeader = "operator,kernel,nsr,dx,seed,regularizer,n,lambda,loss,l2rho_error,wall_time_s";
const char* kRatesHeader = "operator,kernel,nsr,regularizer,mean_rate,sd_rate,n_seeds";

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(line);
  while (std::getline(is, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string profile_stem(const CellResult& c) {
  return std::string(to_string(c.op)) + "_" + c.kernel + "_nsr" + short_number(c.nsr) + "_" +
         std::string(short_name(c.regularizer)) + "_dx" + short_number(c.dx);
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_for_write(path);
  out << text;
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

// Minimal line-chart renderer for the plot-data files.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;
  bool dashed = false;
};

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double map(double v) const {
    const double t = log ? (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo)) : (v - lo) / (hi - lo);
    return t;
  }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

Axis fit_axis(const std::vector<Series>& series, bool use_x, bool log) {
  Axis a;
  a.log = log;
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& s : series) {
    for (double v : use_x ? s.x : s.y) {
      if (!a.usable(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) {
    lo = log ? 1.0 : 0.0;
    hi = log ? 10.0 : 1.0;
  }
  if (log) {
    lo = std::pow(10.0, std::floor(std::log10(lo)));
    hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (hi <= lo) hi = lo * 10.0;
  } else {
    const double pad = hi > lo ? 0.05 * (hi - lo) : std::max(1.0, std::abs(hi)) * 0.5;
    lo -= pad;
    hi += pad;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

std::vector<double> ticks(const Axis& a) {
  std::vector<double> t;
  if (a.log) {
    for (double v = a.lo; v <= a.hi * (1 + 1e-9); v *= 10.0) t.push_back(v);
  } else {
    for (int i = 0; i <= 4; ++i) t.push_back(a.lo + (a.hi - a.lo) * i / 4.0);
  }
  return t;
}

std::string render_svg(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                       const std::vector<Series>& series, bool logx, bool logy) {
  const double W = 640, H = 420, ml = 80, mr = 150, mt = 40, mb = 55;
  const double pw = W - ml - mr, ph = H - mt - mb;
  const Axis ax = fit_axis(series, true, logx);
  const Axis ay = fit_axis(series, false, logy);
  auto px = [&](double v) { return ml + ax.map(v) * pw; };
  auto py = [&](double v) { return mt + (1.0 - ay.map(v)) * ph; };
  char buf[256];
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << ml + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n",
                ml, mt, pw, ph);
  s << buf;
  for (double t : ticks(ax)) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.3g</text>\n",
                  px(t), mt, px(t), mt + ph, px(t), mt + ph + 16, t);
    s << buf;
  }
  for (double t : ticks(ay)) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>"
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n",
                  ml, py(t), ml + pw, py(t), ml - 6, py(t) + 4, t);
    s << buf;
  }
  s << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  s << "<text transform=\"translate(18," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel
    << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    s << "<polyline fill=\"none\" stroke=\"" << sr.color << "\" stroke-width=\"1.6\""
      << (sr.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < sr.x.size(); ++i) {
      if (!ax.usable(sr.x[i]) || !ay.usable(sr.y[i])) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(sr.x[i]), py(sr.y[i]));
      s << buf;
    }
    s << "\"/>\n";
    const double ly = mt + 14 + 18.0 * static_cast<double>(k);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\"%s/>"
                  "<text x=\"%.1f\" y=\"%.1f\">",
                  ml + pw + 10, ly, ml + pw + 34, ly, sr.color.c_str(), sr.dashed ? " stroke-dasharray=\"6,4\"" : "",
                  ml + pw + 40, ly + 4);
    s << buf << sr.label << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

const char* color_for(RegularizerKind k) {
  switch (k) {
    case RegularizerKind::ProjectedL2small: return "#1f77b4";
    case RegularizerKind::ProjectedL2rho: return "#2ca02c";
    case RegularizerKind::SidaRkhs: return "#d62728";
  }
  return "black";
}

void write_profile_csv(const fs::path& path, const CellResult& c) {
  const Profile& p = *c.profile;
  auto out = open_for_write(path);
  out << "# operator=" << to_string(c.op) << "\n# kernel=" << c.kernel << "\n# nsr=" << format_double(c.nsr)
      << "\n# dx=" << format_double(c.dx) << "\n# seed=" << c.seed << "\n# regularizer=" << short_name(c.regularizer)
      << "\nr,estimate,truth,rho\n";
  for (Eigen::Index i = 0; i < p.r.size(); ++i) {
    out << format_double(p.r[i]) << ',' << format_double(p.estimate[i]) << ',' << format_double(p.truth[i]) << ','
        << format_double(p.rho[i]) << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "failed writing " + path.string());
}

void render_profile(const fs::path& path, const CellResult& c) {
  const Profile& p = *c.profile;
  Series est{"estimate", {}, {}, color_for(c.regularizer), false};
  Series tru{"truth", {}, {}, "black", true};
  Series rho{"rho (scaled)", {}, {}, "#999999", false};
  double peak = 0.0, rmax = 0.0;
  for (Eigen::Index i = 0; i < p.r.size(); ++i) {
    peak = std::max({peak, std::abs(p.truth[i]), std::abs(p.estimate[i])});
    rmax = std::max(rmax, p.rho[i]);
  }
  const double scale = rmax > 0.0 ? peak / rmax : 1.0;
  for (Eigen::Index i = 0; i < p.r.size(); ++i) {
    est.x.push_back(p.r[i]);
    est.y.push_back(p.estimate[i]);
    tru.x.push_back(p.r[i]);
    tru.y.push_back(p.truth[i]);
    rho.x.push_back(p.r[i]);
    rho.y.push_back(p.rho[i] * scale);
  }
  const std::string title = std::string(to_string(c.op)) + ", " + c.kernel + ", nsr " + short_number(c.nsr) + ", " +
                            std::string(short_name(c.regularizer)) + ", dx " + short_number(c.dx);
  write_text(path, render_svg(title, "r", "phi(r)", {est, tru, rho}, false, false));
}

}  // namespace

void write_cells_csv(std::ostream& out, const std::vector<CellResult>& cells) {
  out << kCellsHeader << '\n';
  for (const auto& c : cells) {
    out << to_string(c.op) << ',' << c.kernel << ',' << format_double(c.nsr) << ',' << format_double(c.dx) << ','
        << c.seed << ',' << short_name(c.regularizer) << ',' << c.n << ',' << format_double(c.lambda) << ','
        << format_double(c.loss) << ',' << format_double(c.l2rho_error) << ',' << format_double(c.wall_time_s)
        << '\n';
  }
}

void write_rates_csv(std::ostream& out, const std::vector<RateSummary>& rates) {
  out << kRatesHeader << '\n';
  for (const auto& r : rates) {
    out << to_string(r.op) << ',' << r.kernel << ',' << format_double(r.nsr) << ',' << short_name(r.regularizer)
        << ',' << format_double(r.mean_rate) << ',' << format_double(r.sd_rate) << ',' << r.per_seed.size() << '\n';
  }
}

std::vector<CellResult> read_cells_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kCellsHeader) {
    fail(ErrorCode::IoError, "cells file does not start with the expected header");
  }
  std::vector<CellResult> cells;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 11) fail(ErrorCode::IoError, "cells row has " + std::to_string(f.size()) + " fields");
    CellResult c;
    try {
      c.op = parse_operator(f[0]);
      c.regularizer = parse_regularizer(f[5]);
    } catch (const Error& e) {
      fail(ErrorCode::IoError, std::string("bad cells row: ") + e.what());
    }
    c.kernel = f[1];
    c.nsr = parse_double(f[2]);
    c.dx = parse_double(f[3]);
    c.seed = static_cast<std::size_t>(parse_double(f[4]));
    c.n = static_cast<std::size_t>(parse_double(f[6]));
    c.lambda = parse_double(f[7]);
    c.loss = parse_double(f[8]);
    c.l2rho_error = parse_double(f[9]);
    c.wall_time_s = parse_double(f[10]);
    if (std::isnan(c.l2rho_error)) c.error = "recorded as failed";
    cells.push_back(std::move(c));
  }
  return cells;
}

void emit_plots(const StudyResults& results, const fs::path& out_dir) {
  if (results.cells.empty()) fail(ErrorCode::IoError, "no cells to plot");
  const fs::path plots = out_dir / "plots";

  // Error and loss against dx, one table per (operator, kernel, nsr).
  using PanelKey = std::tuple<int, std::string, double>;
  std::vector<PanelKey> panels;
  std::map<PanelKey, std::map<std::pair<int, double>, std::vector<const CellResult*>>> grouped;
  for (const auto& c : results.cells) {
    const PanelKey pk{static_cast<int>(c.op), c.kernel, c.nsr};
    if (!grouped.count(pk)) panels.push_back(pk);
    grouped[pk][{static_cast<int>(c.regularizer), c.dx}].push_back(&c);
  }
  std::ostringstream index;
  index << "file,description\n";
  for (const auto& pk : panels) {
    const auto op = static_cast<OperatorKind>(std::get<0>(pk));
    const std::string stem =
        "error_vs_dx_" + std::string(to_string(op)) + "_" + std::get<1>(pk) + "_nsr" + short_number(std::get<2>(pk));
    std::ostringstream table;
    table << "regularizer,dx,median_error,q25_error,q75_error,median_loss,n_ok\n";
    std::map<int, Series> lines;
    for (const auto& [rk, cells] : grouped[pk]) {
      std::vector<double> errs, losses;
      for (const CellResult* c : cells) {
        if (!c->ok()) continue;
        errs.push_back(c->l2rho_error);
        losses.push_back(c->loss);
      }
      const auto kind = static_cast<RegularizerKind>(rk.first);
      const double med = quantile(errs, 0.5);
      table << short_name(kind) << ',' << format_double(rk.second) << ',' << format_double(med) << ','
            << format_double(quantile(errs, 0.25)) << ',' << format_double(quantile(errs, 0.75)) << ','
            << format_double(quantile(losses, 0.5)) << ',' << errs.size() << '\n';
      auto& s = lines[rk.first];
      s.label = std::string(short_name(kind));
      s.color = color_for(kind);
      s.x.push_back(rk.second);
      s.y.push_back(med);
    }
    write_text(plots / (stem + ".csv"), table.str());
    std::vector<Series> series;
    for (auto& [k, s] : lines) series.push_back(s);
    const std::string title =
        std::string(to_string(op)) + ", " + std::get<1>(pk) + ", nsr " + short_number(std::get<2>(pk));
    write_text(plots / (stem + ".svg"), render_svg(title, "dx", "median L2(rho) error", series, true, true));
    index << stem << ".csv,error vs dx table\n" << stem << ".svg,error vs dx log-log plot\n";
  }

  for (const auto& c : results.cells) {
    if (!c.profile) continue;
    const std::string stem = "profile_" + profile_stem(c);
    render_profile(plots / (stem + ".svg"), c);
    index << stem << ".svg,estimator vs truth with exploration density\n";
  }
  write_text(plots / "index.csv", index.str());
}

void emit_report(const StudyResults& results, const fs::path& out_dir) {
  if (results.cells.empty()) fail(ErrorCode::IoError, "no cells to report");
  {
    std::ostringstream s;
    write_cells_csv(s, results.cells);
    write_text(out_dir / "cells.csv", s.str());
  }
  {
    std::ostringstream s;
    write_rates_csv(s, results.rates);
    write_text(out_dir / "rates.csv", s.str());
  }
  {
    std::ostringstream s;
    s << "operator,kernel,nsr,dx,seed,regularizer,error\n";
    for (const auto& c : results.cells) {
      if (c.ok()) continue;
      std::string msg = c.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      s << to_string(c.op) << ',' << c.kernel << ',' << format_double(c.nsr) << ',' << format_double(c.dx) << ','
        << c.seed << ',' << short_name(c.regularizer) << ',' << msg << '\n';
    }
    write_text(out_dir / "failures.csv", s.str());
  }
  for (const auto& c : results.cells) {
    if (c.profile) write_profile_csv(out_dir / "profiles" / ("profile_" + profile_stem(c) + ".csv"), c);
  }
  emit_plots(results, out_dir);
}

StudyResults load_study_results(const fs::path& dir) {
  StudyResults results;
  {
    auto in = open_for_read(dir / "cells.csv");
    results.cells = read_cells_csv(in);
  }
  const fs::path pdir = dir / "profiles";
  std::error_code ec;
  if (fs::is_directory(pdir, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(pdir)) {
      if (entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      auto in = open_for_read(file);
      std::map<std::string, std::string> meta;
      std::string line;
      std::vector<double> r, e, t, w;
      while (std::getline(in, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
          const auto eq = line.find('=');
          if (eq != std::string::npos) meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
          continue;
        }
        if (line.rfind("r,", 0) == 0) continue;
        const auto f = split_csv(line);
        if (f.size() != 4) fail(ErrorCode::IoError, "bad profile row in " + file.string());
        r.push_back(parse_double(f[0]));
        e.push_back(parse_double(f[1]));
        t.push_back(parse_double(f[2]));
        w.push_back(parse_double(f[3]));
      }
      auto vec = [](const std::vector<double>& v) {
        return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
      };
      for (auto& c : results.cells) {
        if (to_string(c.op) == meta["operator"] && c.kernel == meta["kernel"] &&
            format_double(c.nsr) == meta["nsr"] && format_double(c.dx) == meta["dx"] &&
            std::to_string(c.seed) == meta["seed"] && short_name(c.regularizer) == meta["regularizer"]) {
          c.profile = Profile{vec(r), vec(e), vec(t), vec(w)};
          break;
        }
      }
    }
  }
  results.rates = aggregate_rates(results.cells);
  return results;
}

}  // namespace dartr
