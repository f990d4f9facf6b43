#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "olim/grid.hpp"
#include "olim/problems.hpp"

namespace olim {

/// Shared grid file format: row-major 64-bit little-endian floats plus a
/// JSON sidecar (<path>.json) holding {dim, shape, h, origin}.
inline std::string sidecar_path(const std::string& path) { return path + ".json"; }

inline void write_grid(const std::string& path, const GridSpec& spec,
                       const std::vector<double>& data) {
  if (static_cast<std::int64_t>(data.size()) != spec.size())
    throw std::invalid_argument("data size does not match grid");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!f) throw std::runtime_error("write failed: " + path);

  nlohmann::json j;
  j["dim"] = spec.dim;
  j["shape"] = std::vector<int>(spec.shape.begin(), spec.shape.begin() + spec.dim);
  j["h"] = spec.h;
  j["origin"] =
      std::vector<double>(spec.origin.begin(), spec.origin.begin() + spec.dim);
  std::ofstream sf(sidecar_path(path));
  if (!sf) throw std::runtime_error("cannot open " + sidecar_path(path));
  sf << j.dump(2) << "\n";
}

struct GridFile {
  GridSpec spec;
  std::vector<double> data;
};

inline GridFile read_grid(const std::string& path) {
  std::ifstream sf(sidecar_path(path));
  if (!sf) throw std::runtime_error("sidecar not found: " + sidecar_path(path));
  nlohmann::json j;
  sf >> j;
  int dim = j.at("dim").get<int>();
  auto shape = j.at("shape").get<std::vector<int>>();
  auto origin = j.at("origin").get<std::vector<double>>();
  if (static_cast<int>(shape.size()) != dim || static_cast<int>(origin.size()) != dim)
    throw std::runtime_error("malformed sidecar: " + sidecar_path(path));
  std::array<int, 3> shp{};
  std::array<double, 3> org{};
  for (int k = 0; k < dim; ++k) {
    shp[k] = shape[static_cast<std::size_t>(k)];
    org[k] = origin[static_cast<std::size_t>(k)];
  }
  GridFile g{GridSpec(dim, shp, j.at("h").get<double>(), org), {}};

  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  g.data.resize(static_cast<std::size_t>(g.spec.size()));
  f.read(reinterpret_cast<char*>(g.data.data()),
         static_cast<std::streamsize>(g.data.size() * sizeof(double)));
  if (f.gcount() != static_cast<std::streamsize>(g.data.size() * sizeof(double)))
    throw std::runtime_error("grid file truncated: " + path);
  return g;
}

inline void write_report_csv(std::ostream& os, const ConvergenceReport& report) {
  char buf[512];
  os << "config,N,h,error,seconds,updates_attempted,updates_skipped,heap_ops\n";
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g,%llu,%llu,%llu\n",
                  r.config.c_str(), r.n, r.h, r.error, r.seconds,
                  static_cast<unsigned long long>(r.stats.total_attempted()),
                  static_cast<unsigned long long>(r.stats.total_skipped()),
                  static_cast<unsigned long long>(r.stats.heap_ops()));
    os << buf;
  }
  for (const auto& [cfg, fit] : report.error_fits) {
    std::snprintf(buf, sizeof buf, "# error_fit,%s,C_E=%.17g,beta=%.17g\n",
                  cfg.c_str(), fit.c, fit.exponent);
    os << buf;
  }
  for (const auto& [cfg, fit] : report.time_fits) {
    std::snprintf(buf, sizeof buf, "# time_fit,%s,C_T=%.17g,alpha=%.17g\n",
                  cfg.c_str(), fit.c, fit.exponent);
    os << buf;
  }
}

}  // namespace olim
