// Copyright 2026 The duality-nets Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "duality_nets/error.h"
#include "duality_nets/experiments.h"
#include "json.hpp"

namespace dn {

namespace {

std::string FormatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// JSON has no NaN or infinity; those become null.
nlohmann::json Num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double Map(double v, double a, double b) const {
    const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return a + t * (b - a);
  }
  double Value(double t) const {
    const double v = lo + t * (hi - lo);
    return log ? std::pow(10.0, v) : v;
  }
};

Axis FitAxis(const std::vector<const std::vector<double>*>& data, bool log) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto* vs : data) {
    for (double v : *vs) {
      if (!std::isfinite(v) || (log && v <= 0.0)) continue;
      const double w = log ? std::log10(v) : v;
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
  }
  if (!std::isfinite(lo)) return {0.0, 1.0, log};
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.04 * (hi - lo);
  return {lo - pad, hi + pad, log};
}

bool Drawable(double v, const Axis& a) {
  return std::isfinite(v) && (!a.log || v > 0.0);
}

}  // namespace

bool ExperimentResult::pass() const {
  return std::all_of(assertions.begin(), assertions.end(),
                     [](const Assertion& a) { return a.pass; });
}

Assertion Check(const std::string& name, double actual, const std::string& op,
                double expected, double tol) {
  Assertion a{name, op, expected, actual, tol, false};
  if (std::isnan(actual)) return a;
  if (op == "<=") {
    a.pass = actual <= expected + tol;
  } else if (op == ">=") {
    a.pass = actual >= expected - tol;
  } else if (op == "==") {
    a.pass = std::abs(actual - expected) <= tol;
  } else {
    Fail(ErrorCode::kInvalidInput, "unknown comparison '" + op + "'");
  }
  return a;
}

void ParallelFor(int count, int threads, const std::function<void(int)>& task) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  // Rethrow the lowest-index failure so errors do not depend on scheduling.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int EffectiveThreads(int requested) {
  if (const char* env = std::getenv("DUALITY_NETS_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    Require(end != env && *end == '\0' && v >= 1 && v <= 1024,
            ErrorCode::kConfigError,
            std::string("DUALITY_NETS_THREADS must be a positive integer, got '") +
                env + "'");
    return static_cast<int>(v);
  }
  return std::max(1, requested);
}

std::string EmitReport(const ExperimentResult& result) {
  Require(!result.rows.empty() || !result.metrics.empty(),
          ErrorCode::kInvalidInput, "no results to report");
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["experiment"] = result.experiment;
  j["config_echo"] = result.config_echo.empty()
                         ? nlohmann::ordered_json::object()
                         : nlohmann::ordered_json::parse(result.config_echo);
  nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
  for (const auto& [k, v] : result.metrics) metrics[k] = Num(v);
  j["metrics"] = metrics;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const Assertion& a : result.assertions) {
    list.push_back({{"name", a.name},
                    {"op", a.op},
                    {"expected", Num(a.expected)},
                    {"actual", Num(a.actual)},
                    {"tol", Num(a.tol)},
                    {"pass", a.pass}});
  }
  j["assertions"] = list;
  j["wall_time_s"] = result.wall_time_s;
  j["pass"] = result.pass();
  return j.dump(2) + "\n";
}

std::string RenderCsv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "experiment,key,metric,value\n";
  for (const ResultRow& r : result.rows) {
    out << r.experiment << ',' << FormatNumber(r.key) << ',' << r.metric << ','
        << FormatNumber(r.value) << '\n';
  }
  return out.str();
}

std::string RenderSvg(const Plot& plot) {
  constexpr double kW = 720, kH = 440, kL = 80, kR = 180, kT = 40, kB = 60;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  std::vector<const std::vector<double>*> xs, ys;
  for (const PlotSeries& s : plot.series) {
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  const Axis ax = FitAxis(xs, plot.log_x);
  const Axis ay = FitAxis(ys, plot.log_y);
  const double x0 = kL, x1 = kW - kR, y0 = kH - kB, y1 = kT;
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
    << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << Escape(plot.title) << "</text>\n";
  o << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0
    << "\" height=\"" << y0 - y1 << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double t = i / 5.0;
    const double px = x0 + t * (x1 - x0);
    const double py = y0 + t * (y1 - y0);
    char lx[32], ly[32];
    std::snprintf(lx, sizeof(lx), "%.3g", ax.Value(t));
    std::snprintf(ly, sizeof(ly), "%.3g", ay.Value(t));
    o << "<line x1=\"" << px << "\" y1=\"" << y0 << "\" x2=\"" << px << "\" y2=\""
      << y0 + 5 << "\" stroke=\"black\"/>";
    o << "<text x=\"" << px << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">"
      << lx << "</text>\n";
    o << "<line x1=\"" << x0 - 5 << "\" y1=\"" << py << "\" x2=\"" << x0 << "\" y2=\""
      << py << "\" stroke=\"black\"/>";
    o << "<text x=\"" << x0 - 8 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
      << ly << "</text>\n";
  }
  o << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kH - 18
    << "\" text-anchor=\"middle\">" << Escape(plot.x_label) << "</text>\n";
  o << "<text transform=\"translate(20," << (y0 + y1) / 2
    << ") rotate(-90)\" text-anchor=\"middle\">" << Escape(plot.y_label)
    << "</text>\n";
  for (size_t s = 0; s < plot.series.size(); ++s) {
    const PlotSeries& ser = plot.series[s];
    const char* color = kColors[s % 8];
    if (ser.markers) {
      for (size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
        if (!Drawable(ser.x[i], ax) || !Drawable(ser.y[i], ay)) continue;
        o << "<circle cx=\"" << ax.Map(ser.x[i], x0, x1) << "\" cy=\""
          << ay.Map(ser.y[i], y0, y1) << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
      }
    } else {
      o << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << color
        << "\" points=\"";
      for (size_t i = 0; i < ser.x.size() && i < ser.y.size(); ++i) {
        if (!Drawable(ser.x[i], ax) || !Drawable(ser.y[i], ay)) continue;
        o << ax.Map(ser.x[i], x0, x1) << ',' << ay.Map(ser.y[i], y0, y1) << ' ';
      }
      o << "\"/>\n";
    }
    const double ly = y1 + 10 + 18 * static_cast<double>(s);
    o << "<rect x=\"" << x1 + 12 << "\" y=\"" << ly << "\" width=\"14\" height=\"4\" fill=\""
      << color << "\"/><text x=\"" << x1 + 32 << "\" y=\"" << ly + 6 << "\">"
      << Escape(ser.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void WriteArtifacts(const ExperimentResult& result, const std::string& dir) {
  const std::string report = EmitReport(result);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  Require(!ec, ErrorCode::kIoError, "cannot create '" + dir + "': " + ec.message());
  const auto write = [&](const std::string& name, const std::string& body) {
    const std::filesystem::path path = std::filesystem::path(dir) / name;
    std::ofstream f(path, std::ios::binary);
    f << body;
    Require(static_cast<bool>(f), ErrorCode::kIoError,
            "cannot write '" + path.string() + "'");
  };
  write("results.csv", RenderCsv(result));
  write("report.json", report);
  write("plot.svg", RenderSvg(result.plot));
}

}  // namespace dn
