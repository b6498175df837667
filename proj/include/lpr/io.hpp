#pragma once

// Trajectory CSV, atomic file output, state specs and the geometry listing.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "lpr/bundle_geometry.hpp"
#include "lpr/config.hpp"
#include "lpr/dynamics.hpp"
#include "lpr/error.hpp"

namespace lpr {

inline std::string fmt17(double x) { return config_detail::fmt(x); }

inline std::string csv_header(const SystemModel& m, Mode mode) {
  const int n = m.n_p, g = m.n_g();
  std::string h = "t";
  const auto cols = [&](const std::string& name, int k) {
    for (int i = 1; i <= k; ++i) h += "," + name + "_" + std::to_string(i);
  };
  if (mode == Mode::Full) {
    cols("Q", n);
    cols("Qdot", n);
    h += ",energy";
  } else {
    cols("qstar", n);
    cols("omega", n);
    cols("p", g);
    cols("a", g);
    h += ",energy,chi_resid,tang_resid";
  }
  return h + "\n";
}

/// One row per sample, 17 significant digits.
inline std::string trajectory_csv(const SystemModel& m, const Trajectory& tr) {
  std::string out = csv_header(m, tr.mode);
  const auto put = [&](const VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) out += "," + fmt17(v(i));
  };
  for (std::size_t k = 0; k < tr.size(); ++k) {
    out += fmt17(tr.t[k]);
    if (tr.mode == Mode::Full) {
      put(tr.full[k].Q);
      put(tr.full[k].Qdot);
      out += "," + fmt17(tr.energy[k]);
    } else {
      const ReducedState& r = tr.reduced[k];
      put(r.q_star);
      put(r.omega);
      put(r.p);
      put(r.a);
      out += "," + fmt17(tr.energy[k]) + "," + fmt17(tr.chi_resid[k]) + "," + fmt17(tr.tang_resid[k]);
    }
    out += "\n";
  }
  return out;
}

/// Write to a sibling temporary and rename over the target, so a failed run leaves no partial file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::OutOfRange, "cannot open '" + tmp.string() + "' for writing");
    f << content;
    f.flush();
    if (!f) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      fail(ErrorCode::OutOfRange, "write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    fail(ErrorCode::OutOfRange, "cannot rename onto '" + path.string() + "'");
  }
}

inline VectorXd to_vector(const std::vector<double>& xs) {
  return Eigen::Map<const VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

/// Default initial state per built-in model.
inline FullState default_state(const SystemModel& m) {
  const auto v = [](std::initializer_list<double> xs) { return to_vector(std::vector<double>(xs)); };
  if (m.name == "planar-rotor") return {v({1.5, 0.3}), v({1.5, 3.0})};
  if (m.name == "hopf") return {v({1.0, 0.2, 0.5, -0.3}), v({0.8, 2.0, -1.2, 1.0})};
  return {v({0.8, -0.5, 0.0, 0.0, 0.0}), v({0.3, 0.4, 0.2, -0.1, 0.15})};
}

/// Full state from a spec: `full:` takes Q then Qdot; `reduced:` takes Q*, omega, p, a.
inline FullState resolve_full(const SystemModel& m, const StateSpec& s) {
  if (s.empty()) return default_state(m);
  const int n = m.n_p, g = m.n_g();
  const VectorXd x = to_vector(s.values);
  if (s.kind == StateSpec::Kind::Full) {
    if (x.size() != 2 * n)
      fail(ErrorCode::OutOfRange, m.name + ": full state takes " + std::to_string(2 * n) + " numbers");
    return {x.head(n), x.tail(n)};
  }
  if (x.size() != 2 * n + 2 * g)
    fail(ErrorCode::OutOfRange, m.name + ": reduced state takes " + std::to_string(2 * n + 2 * g) + " numbers");
  return to_full(m, unpack_reduced(x, n, g));
}

/// Reduced specs are integrated as given; full specs go through the reduction map.
inline ReducedState resolve_reduced(const SystemModel& m, const StateSpec& s) {
  if (s.kind == StateSpec::Kind::Reduced && !s.empty()) {
    const int n = m.n_p, g = m.n_g();
    if (static_cast<int>(s.values.size()) != 2 * n + 2 * g)
      fail(ErrorCode::OutOfRange, m.name + ": reduced state takes " + std::to_string(2 * n + 2 * g) + " numbers");
    return unpack_reduced(to_vector(s.values), n, g);
  }
  return to_reduced(m, resolve_full(m, s));
}

inline std::string format_matrix(const DenseMatrix& x) {
  char buf[32];
  std::string s = "[";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (i) s += ";";
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.10g", x(i, j));
      s += (j ? "," : "") + std::string(buf);
    }
  }
  return s + "]";
}

/// key=value listing of the cache at the projection of Q onto the gauge surface.
inline std::string geometry_listing(const SystemModel& m, const VectorXd& q) {
  const auto [p, a] = project_to_sigma(m, q);
  const GeometryCache c = geometry_at(m, p);
  std::string s;
  const auto put = [&](const std::string& k, const DenseMatrix& v) { s += k + "=" + format_matrix(v) + "\n"; };
  s += "model=" + m.name + "\n";
  put("point", q.transpose());
  put("q_star", c.q_star.transpose());
  put("fibre", a.a.transpose());
  put("gamma", c.gamma);
  put("conn", c.A_conn);
  put("N", c.N);
  put("P_perp", c.P_perp);
  put("Pi", c.Pi);
  put("G_H", c.G_H);
  put("fp", c.Phi);
  for (std::size_t al = 0; al < c.F_curv.size(); ++al) put("curv_" + std::to_string(al + 1), c.F_curv[al]);
  put("grad_V", c.gradV.transpose());
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", cache_invariant_residual(c));
  s += "invariant_residual=" + std::string(buf) + "\n";
  return s;
}

/// Seeded point for commands run without an explicit point.
inline VectorXd sample_point(const SystemModel& m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return m.sampler(rng);
}

}  // namespace lpr
