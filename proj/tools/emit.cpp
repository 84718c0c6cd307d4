#include "emit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <tuple>

#include "descriptors.hpp"

#ifndef QRES_VERSION
#define QRES_VERSION "unknown"
#endif

namespace qres::cli {
namespace {

std::string fmt(const char* f, auto... args) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string csv_cell(const Field& v) {
  if (const auto* d = std::get_if<double>(&v)) return fmt("%.17g", *d);
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  const auto& s = std::get<std::string>(v);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

nlohmann::ordered_json to_json(const Field& v) {
  return std::visit([](const auto& x) { return nlohmann::ordered_json(x); }, v);
}

std::optional<double> numeric(const ExperimentRecord& r, const std::string& key) {
  const Field* f = r.find(key);
  if (!f) return {};
  double v;
  if (const auto* d = std::get_if<double>(f)) v = *d;
  else if (const auto* i = std::get_if<std::int64_t>(f)) v = static_cast<double>(*i);
  else if (const auto* b = std::get_if<bool>(f)) v = *b ? 1.0 : 0.0;
  else return {};
  if (!std::isfinite(v)) return {};
  return v;
}

std::vector<std::string> columns(const std::vector<ExperimentRecord>& records) {
  std::vector<std::string> cols{"experiment"};
  for (const auto& r : records)
    for (const auto& [k, _] : r.fields)
      if (std::find(cols.begin(), cols.end(), k) == cols.end()) cols.push_back(k);
  return cols;
}

void header_lines(const Output& out, std::ostream& os, const char* prefix) {
  os << prefix << "qres_version: " << version() << "\n";
  os << prefix << "command: " << out.command << "\n";
  os << prefix << "seed: " << out.seed << "\n";
  os << prefix << "config_hash: " << config_hash(out.config) << "\n";
  os << prefix << "config: " << out.config.dump() << "\n";
}

void write_csv(const Output& out, std::ostream& os) {
  header_lines(out, os, "# ");
  const auto cols = columns(out.records);
  for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
  os << "\n";
  for (const auto& r : out.records) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) os << ",";
      if (c == 0) os << csv_cell(r.experiment);
      else if (const Field* f = r.find(cols[c])) os << csv_cell(*f);
    }
    os << "\n";
  }
}

// Like dump(2), but floats use %.17g; non-finite values become null.
void write_value(const nlohmann::ordered_json& j, std::ostream& os, int depth) {
  const std::string pad(2 * (depth + 1), ' '), close(2 * depth, ' ');
  if (j.is_number_float()) {
    const double v = j.get<double>();
    os << (std::isfinite(v) ? fmt("%.17g", v) : "null");
  } else if (j.is_object() && !j.empty()) {
    os << "{\n";
    std::size_t i = 0;
    for (const auto& [k, v] : j.items()) {
      os << pad << nlohmann::json(k).dump() << ": ";
      write_value(v, os, depth + 1);
      os << (++i < j.size() ? ",\n" : "\n");
    }
    os << close << "}";
  } else if (j.is_array() && std::all_of(j.begin(), j.end(), [](const auto& e) { return e.is_primitive(); })) {
    os << "[";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) os << ", ";
      write_value(j[i], os, depth + 1);
    }
    os << "]";
  } else if (j.is_array()) {
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      os << pad;
      write_value(j[i], os, depth + 1);
      os << (i + 1 < j.size() ? ",\n" : "\n");
    }
    os << close << "]";
  } else {
    os << j.dump();
  }
}

void write_json(const Output& out, std::ostream& os) {
  nlohmann::ordered_json doc;
  doc["qres_version"] = version();
  doc["command"] = out.command;
  doc["seed"] = out.seed;
  doc["config_hash"] = config_hash(out.config);
  doc["config"] = out.config;
  for (const auto& [k, v] : out.payload.items()) doc[k] = v;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : out.records) {
    nlohmann::ordered_json row;
    row["experiment"] = r.experiment;
    for (const auto& [k, v] : r.fields) row[k] = to_json(v);
    rows.push_back(std::move(row));
  }
  doc["records"] = std::move(rows);
  write_value(doc, os, 0);
  os << "\n";
}

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

// Range padded by 5%, widened when degenerate.
std::pair<double, double> padded(double lo, double hi) {
  if (hi - lo < 1e-12) {
    const double w = std::max(std::abs(hi), 1.0) * 0.5;
    return {lo - w, hi + w};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

void write_svg(const Output& out, std::ostream& os) {
  const PlotSpec& p = out.plot;
  if (p.x.empty() || p.y.empty()) throw UsageError("svg output needs --x and --y fields");
  struct Series {
    std::string name;
    std::vector<std::pair<double, double>> pts;
  };
  std::vector<Series> series;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& name : p.y) {
    Series s{name, {}};
    for (const auto& r : out.records) {
      const auto x = numeric(r, p.x), y = numeric(r, name);
      if (!x || !y) continue;
      s.pts.emplace_back(*x, *y);
      x0 = std::min(x0, *x), x1 = std::max(x1, *x), y0 = std::min(y0, *y), y1 = std::max(y1, *y);
    }
    series.push_back(std::move(s));
  }
  if (!std::isfinite(x0)) throw UsageError("no numeric values for '" + p.x + "' against the requested y fields");
  if (p.diagonal) x0 = y0 = std::min(x0, y0), x1 = y1 = std::max(x1, y1);
  std::tie(x0, x1) = padded(x0, x1);
  std::tie(y0, y1) = padded(y0, y1);

  constexpr double W = 640, H = 440, L = 70, R = 20, T = 20, B = 60;
  auto sx = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto sy = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  os << fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\">\n", W, H, W, H);
  os << "<metadata>";
  std::ostringstream meta;
  header_lines(out, meta, "");
  os << xml_escape(meta.str()) << "</metadata>\n";
  os << fmt("<rect x=\"0\" y=\"0\" width=\"%g\" height=\"%g\" fill=\"white\"/>\n", W, H);
  os << fmt("<g stroke=\"black\" stroke-width=\"1\"><line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/>", L, H - B, W - R, H - B);
  os << fmt("<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/></g>\n", L, T, L, H - B);
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
    os << fmt("<line x1=\"%.2f\" y1=\"%g\" x2=\"%.2f\" y2=\"%g\" stroke=\"black\"/>", sx(xv), H - B, sx(xv), H - B + 5);
    os << fmt("<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">%.3g</text>\n", sx(xv), H - B + 18, xv);
    os << fmt("<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"black\"/>", L - 5, sy(yv), L, sy(yv));
    os << fmt("<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\">%.3g</text>\n", L - 8, sy(yv) + 4, yv);
  }
  std::string ylabel;
  for (const auto& s : series) ylabel += (ylabel.empty() ? "" : ", ") + s.name;
  os << fmt("<text x=\"%g\" y=\"%g\" text-anchor=\"middle\" font-size=\"13\">", (L + W - R) / 2, H - 15)
     << xml_escape(p.x) << "</text>\n";
  os << fmt("<text x=\"15\" y=\"%g\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 15 %g)\">",
            (T + H - B) / 2, (T + H - B) / 2)
     << xml_escape(ylabel) << "</text>\n</g>\n";
  if (p.diagonal) {
    const double lo = std::max(x0, y0), hi = std::min(x1, y1);
    os << fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"red\" stroke-dasharray=\"4 3\"/>\n",
              sx(lo), sy(lo), sx(hi), sy(hi));
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = palette[k % std::size(palette)];
    if (p.lines && series[k].pts.size() > 1) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
      for (std::size_t i = 0; i < series[k].pts.size(); ++i)
        os << (i ? " " : "") << fmt("%.2f,%.2f", sx(series[k].pts[i].first), sy(series[k].pts[i].second));
      os << "\"/>\n";
    }
    os << "<g fill=\"" << color << "\">\n";
    for (const auto& [x, y] : series[k].pts) os << fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"2.5\"/>\n", sx(x), sy(y));
    os << "</g>\n";
    os << fmt("<text x=\"%g\" y=\"%g\" font-family=\"sans-serif\" font-size=\"11\" fill=\"%s\">", L + 10,
              T + 14 * (k + 1), color)
       << xml_escape(series[k].name) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace

std::string version() { return QRES_VERSION; }

std::string config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt("%016llx", static_cast<unsigned long long>(h));
}

void emit(const Output& out, Format format, std::ostream& os) {
  if (out.records.empty()) throw UsageError("nothing to write: no records");
  switch (format) {
    case Format::csv: write_csv(out, os); break;
    case Format::json: write_json(out, os); break;
    case Format::svg: write_svg(out, os); break;
  }
}

}  // namespace qres::cli
