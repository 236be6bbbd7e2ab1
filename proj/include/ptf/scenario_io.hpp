#pragma once

// Scenario files (JSON) and trajectory CSV.

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "ptf/scenario.hpp"
#include "ptf/simulator.hpp"
#include "ptf/synthesis.hpp"

namespace ptf {

namespace io_detail {

using nlohmann::json;

inline void expect_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ParseError(where + ": unknown key '" + key + "'");
  }
}

inline const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing key '" + key + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

inline Matrix matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a non-empty list of rows");
  std::vector<double> data;
  std::size_t cols = 0;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto& row = j[r];
    if (!row.is_array()) throw ParseError(where + ": row " + std::to_string(r + 1) + " is not a list");
    if (r == 0) cols = row.size();
    if (row.size() != cols || cols == 0) throw ParseError(where + ": ragged or empty rows");
    for (const auto& v : row) data.push_back(number(v, where));
  }
  try {
    return Matrix(j.size(), cols, std::move(data));
  } catch (const NonFiniteValue&) {
    throw ParseError(where + ": non-finite entry");
  }
}

inline Vector vector(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a non-empty list of numbers");
  std::vector<double> data;
  for (const auto& v : j) data.push_back(number(v, where));
  return Vector::column(std::move(data));
}

inline SignalTerm term(const json& j, const std::string& where) {
  expect_keys(j, {"kind", "amplitude", "frequency", "phase", "rate", "values"}, where);
  const auto kind = require(j, "kind", where).get<std::string>();
  auto get = [&](const char* key, double fallback) {
    return j.contains(key) ? number(j.at(key), where + "." + key) : fallback;
  };
  if (kind == "zero") return SignalTerm::zero();
  if (kind == "const") return SignalTerm::constant(get("amplitude", 0.0));
  if (kind == "sin") return SignalTerm::sine(get("amplitude", 1.0), get("frequency", 1.0), get("phase", 0.0));
  if (kind == "cos") return SignalTerm::cosine(get("amplitude", 1.0), get("frequency", 1.0), get("phase", 0.0));
  if (kind == "exp_decay") return SignalTerm::exp_decay(get("amplitude", 1.0), get("rate", 1.0));
  if (kind == "table") {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : require(j, "values", where)) {
      if (!p.is_array() || p.size() != 2) throw ParseError(where + ": table values must be [t, value] pairs");
      pts.emplace_back(number(p[0], where), number(p[1], where));
    }
    try {
      SignalTerm s = SignalTerm::from_table(std::move(pts));
      s.amplitude = get("amplitude", 1.0);
      return s;
    } catch (const ValidationError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  throw ParseError(where + ": unknown signal kind '" + kind + "'");
}

// number | term object | {"sum": [entries]}
inline ScalarSignal entry(const json& j, const std::string& where) {
  ScalarSignal s;
  if (j.is_number()) {
    const double v = j.get<double>();
    if (v != 0.0) s.terms.push_back(SignalTerm::constant(v));
  } else if (j.is_object() && j.contains("sum")) {
    expect_keys(j, {"sum"}, where);
    for (const auto& part : j.at("sum")) {
      const auto sub = entry(part, where);
      s.terms.insert(s.terms.end(), sub.terms.begin(), sub.terms.end());
    }
  } else if (j.is_object()) {
    s.terms.push_back(term(j, where));
  } else {
    throw ParseError(where + ": expected a number, a signal term, or {\"sum\": [...]}");
  }
  return s;
}

struct SignalTable {
  const json* named = nullptr;
};

// A vector signal is a list of entries, a matrix signal a list of rows of
// entries; either may be a string naming an item of the "signals" section.
inline Signal signal(const json& j, const std::string& where, const SignalTable& table, bool as_matrix) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (!table.named || !table.named->contains(name)) throw ParseError(where + ": unknown signal '" + name + "'");
    return signal(table.named->at(name), "signals." + name, table, as_matrix);
  }
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a signal list");
  if (!as_matrix) {
    std::vector<ScalarSignal> entries;
    for (std::size_t k = 0; k < j.size(); ++k) entries.push_back(entry(j[k], where + "[" + std::to_string(k) + "]"));
    const std::size_t rows = entries.size();
    return Signal(rows, 1, std::move(entries));
  }
  std::vector<ScalarSignal> entries;
  std::size_t cols = 0;
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array()) throw ParseError(where + ": matrix signal rows must be lists");
    if (r == 0) cols = j[r].size();
    if (j[r].size() != cols) throw ParseError(where + ": ragged matrix signal");
    for (std::size_t c = 0; c < cols; ++c)
      entries.push_back(entry(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]"));
  }
  const std::size_t rows = j.size();
  return Signal(rows, cols, std::move(entries));
}

inline std::vector<double> per_follower(const json& j, std::size_t n, const std::string& where) {
  if (j.is_number()) return std::vector<double>(n, j.get<double>());
  if (!j.is_array() || j.size() != n) throw ParseError(where + ": expected a number or one value per follower");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, where));
  return out;
}

// Rethrows graph errors as Assumption-1 validation failures.
inline Topology checked_topology(const Matrix& adj, const std::vector<int>& access) {
  try {
    return build_topology(adj, access);
  } catch (const NotSymmetric& e) {
    throw ValidationError(std::string("Assumption 1: ") + e.what());
  } catch (const NotConnected& e) {
    throw ValidationError(std::string("Assumption 1: ") + e.what());
  } catch (const HNotPositiveDefinite& e) {
    throw ValidationError(std::string("Assumption 1: ") + e.what());
  }
}

}  // namespace io_detail

/// Parses and validates a scenario document. Checks, beyond structure:
/// graph connectivity (Assumption 1), row-full rank B_i (Assumption 3),
/// solvability of both regulator equation families (Assumptions 4, 5),
/// and the matched structure of raw uncertainty tables.
inline Scenario parse_scenario(const std::string& text, const std::string& source = "<scenario>") {
  using io_detail::json;
  namespace d = io_detail;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
  d::expect_keys(root, {"name", "description", "leader", "followers", "exosystems", "topology", "times", "control",
                        "gains", "bounds", "signals", "initial"},
                 source);
  d::SignalTable table;
  if (root.contains("signals")) {
    if (!root["signals"].is_object()) throw ParseError("signals: expected an object");
    table.named = &root["signals"];
  }

  Scenario s;
  s.name = root.value("name", std::string("unnamed"));

  // times first: the uncertainty checks sample over the horizon.
  {
    const auto& t = d::require(root, "times", source);
    d::expect_keys(t, {"t0", "T1", "T2", "v", "t_end", "dt", "ratio_cap", "log_stride"}, "times");
    auto get = [&](const char* k, double fallback) { return t.contains(k) ? d::number(t[k], std::string("times.") + k) : fallback; };
    s.times.t0 = get("t0", 0.0);
    s.times.t1 = d::number(d::require(t, "T1", "times"), "times.T1");
    s.times.t2 = d::number(d::require(t, "T2", "times"), "times.T2");
    s.times.v = get("v", 3.0);
    s.times.t_end = d::number(d::require(t, "t_end", "times"), "times.t_end");
    s.times.dt = get("dt", 1e-4);
    s.times.ratio_cap = get("ratio_cap", 1e3);
    s.times.log_stride = static_cast<std::size_t>(get("log_stride", 10));
  }

  {
    const auto& l = d::require(root, "leader", source);
    d::expect_keys(l, {"A", "B", "C", "input"}, "leader");
    s.leader.a0 = d::matrix(d::require(l, "A", "leader"), "leader.A");
    s.leader.b0 = d::matrix(d::require(l, "B", "leader"), "leader.B");
    s.leader.c0 = d::matrix(d::require(l, "C", "leader"), "leader.C");
    s.leader.u0 = l.contains("input") ? d::signal(l["input"], "leader.input", table, false)
                                      : Signal::zero(s.leader.b0.cols());
    s.leader.validate();
  }

  const auto grid = sample_grid(s.times.t0, s.times.t_end, std::min(1e-2, (s.times.t_end - s.times.t0) / 100.0));
  const auto& fl = d::require(root, "followers", source);
  if (!fl.is_array() || fl.empty()) throw ParseError("followers: expected a non-empty list");
  for (std::size_t i = 0; i < fl.size(); ++i) {
    const std::string where = "followers[" + std::to_string(i + 1) + "]";
    const auto& f = fl[i];
    d::expect_keys(f, {"A", "B", "C", "uncertainty", "disturbance"}, where);
    FollowerModel m;
    m.a = d::matrix(d::require(f, "A", where), where + ".A");
    m.b = d::matrix(d::require(f, "B", where), where + ".B");
    m.c = d::matrix(d::require(f, "C", where), where + ".C");
    if (m.b.rows() != m.a.rows()) throw ValidationError(where + ": B rows must match A");
    Matrix b_plus;
    try {
      b_plus = pinv_right(m.b);
    } catch (const RankDeficient& e) {
      throw ValidationError("Assumption 3: " + where + ".B is not row-full rank (" + e.what() + ")");
    }
    m.disturbance = f.contains("disturbance") ? d::signal(f["disturbance"], where + ".disturbance", table, false)
                                              : Signal::zero(m.b.cols());
    if (!f.contains("uncertainty")) {
      m.uncertainty = UncertaintyModel::none(m.a.rows(), m.b.cols());
    } else {
      const auto& u = f["uncertainty"];
      const std::string uw = where + ".uncertainty";
      d::expect_keys(u, {"delta_A", "delta_B", "N", "M"}, uw);
      const bool raw = u.contains("delta_A") || u.contains("delta_B");
      const bool factored = u.contains("N") || u.contains("M");
      if (raw && factored) throw ParseError(uw + ": give either delta_A/delta_B or N/M, not both");
      if (raw) {
        const Signal da = u.contains("delta_A") ? d::signal(u["delta_A"], uw + ".delta_A", table, true)
                                                : Signal::zero(m.a.rows(), m.a.rows());
        const Signal db = u.contains("delta_B") ? d::signal(u["delta_B"], uw + ".delta_B", table, true)
                                                : Signal::zero(m.b.rows(), m.b.cols());
        try {
          m.uncertainty = UncertaintyModel::from_raw(m.b, b_plus, da, db, grid);
        } catch (const UnmatchedUncertainty& e) {
          throw ValidationError(uw + ": " + e.what());
        }
      } else {
        m.uncertainty.n_of_t = u.contains("N") ? d::signal(u["N"], uw + ".N", table, true)
                                               : Signal::zero(m.b.cols(), m.a.rows());
        m.uncertainty.m_of_t = u.contains("M") ? d::signal(u["M"], uw + ".M", table, true)
                                               : Signal::zero(m.b.cols(), m.b.cols());
        for (double t : grid) {
          const Matrix mm = m.uncertainty.m_of_t(t);
          for (std::size_t r = 0; r < mm.rows(); ++r)
            for (std::size_t c = 0; c < mm.cols(); ++c)
              if (r != c && mm(r, c) != 0.0) throw ValidationError(uw + ".M must be diagonal");
        }
      }
    }
    m.validate(i);
    s.followers.push_back(std::move(m));
  }
  const std::size_t n = s.followers.size();

  const auto& ex = d::require(root, "exosystems", source);
  if (!ex.is_array() || ex.size() != n) throw ParseError("exosystems: expected one entry per follower");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string where = "exosystems[" + std::to_string(i + 1) + "]";
    d::expect_keys(ex[i], {"A", "C", "h0"}, where);
    s.exosystems.push_back({d::matrix(d::require(ex[i], "A", where), where + ".A"),
                            d::matrix(d::require(ex[i], "C", where), where + ".C"),
                            d::vector(d::require(ex[i], "h0", where), where + ".h0")});
  }

  {
    const auto& t = d::require(root, "topology", source);
    d::expect_keys(t, {"edges", "adjacency", "pinned"}, "topology");
    Matrix adj(n, n);
    if (t.contains("adjacency") && t.contains("edges")) throw ParseError("topology: give edges or adjacency, not both");
    if (t.contains("adjacency")) {
      adj = d::matrix(t["adjacency"], "topology.adjacency");
      if (adj.rows() != n || adj.cols() != n) throw ValidationError("topology.adjacency must be N x N");
    } else {
      for (const auto& e : d::require(t, "edges", "topology")) {
        if (!e.is_array() || (e.size() != 2 && e.size() != 3)) throw ParseError("topology.edges: expected [i, j] or [i, j, w]");
        const auto a = e[0].get<std::size_t>(), b = e[1].get<std::size_t>();
        const double w = e.size() == 3 ? d::number(e[2], "topology.edges") : 1.0;
        if (a < 1 || b < 1 || a > n || b > n || a == b) throw ValidationError("topology.edges: bad endpoint");
        adj(a - 1, b - 1) = w;
        adj(b - 1, a - 1) = w;
      }
    }
    std::vector<int> access(n, 0);
    for (const auto& p : d::require(t, "pinned", "topology")) {
      const auto k = p.get<std::size_t>();
      if (k < 1 || k > n) throw ValidationError("topology.pinned: follower out of range");
      access[k - 1] = 1;
    }
    s.topology = d::checked_topology(adj, access);
  }

  if (root.contains("control")) {
    const auto& c = root["control"];
    d::expect_keys(c, {"eps_s", "eps_c", "robust_term", "compensation_term"}, "control");
    if (c.contains("eps_s")) s.control.eps_s = d::number(c["eps_s"], "control.eps_s");
    if (c.contains("eps_c")) s.control.eps_c = d::number(c["eps_c"], "control.eps_c");
    if (c.contains("robust_term")) s.control.robust_term = c["robust_term"].get<bool>();
    if (c.contains("compensation_term")) s.control.compensation_term = c["compensation_term"].get<bool>();
  }

  {
    const auto& g = d::require(root, "gains", source);
    d::expect_keys(g, {"c", "alpha", "beta", "k4", "rho"}, "gains");
    s.gains.c = d::per_follower(d::require(g, "c", "gains"), n, "gains.c");
    s.gains.alpha = d::per_follower(d::require(g, "alpha", "gains"), n, "gains.alpha");
    s.gains.beta = d::per_follower(d::require(g, "beta", "gains"), n, "gains.beta");
    s.gains.k4 = g.contains("k4") ? d::per_follower(g["k4"], n, "gains.k4") : std::vector<double>(n, 1.0);
    const auto& rho = d::require(g, "rho", "gains");
    if (!rho.is_array() || rho.size() != 4) throw ParseError("gains.rho: expected four values");
    for (std::size_t k = 0; k < 4; ++k) s.gains.rho[k] = d::number(rho[k], "gains.rho");
  }

  {
    const auto& b = d::require(root, "bounds", source);
    d::expect_keys(b, {"n_bar", "m_bar", "d_bar", "u_bar"}, "bounds");
    s.bounds.n_bar = d::number(d::require(b, "n_bar", "bounds"), "bounds.n_bar");
    s.bounds.m_bar = d::number(d::require(b, "m_bar", "bounds"), "bounds.m_bar");
    s.bounds.d_bar = d::number(d::require(b, "d_bar", "bounds"), "bounds.d_bar");
    s.bounds.u_bar = d::number(d::require(b, "u_bar", "bounds"), "bounds.u_bar");
  }

  {
    const auto& init = d::require(root, "initial", source);
    d::expect_keys(init, {"x0", "x", "xi"}, "initial");
    s.initial.x0 = d::vector(d::require(init, "x0", "initial"), "initial.x0");
    for (const auto& v : d::require(init, "x", "initial")) s.initial.x.push_back(d::vector(v, "initial.x"));
    if (init.contains("xi")) {
      for (const auto& v : init["xi"]) s.initial.xi.push_back(d::vector(v, "initial.xi"));
    } else {
      s.initial.xi.assign(n, Vector(s.leader.state_dim(), 1));
    }
  }

  validate_structure(s);

  for (std::size_t i = 0; i < n; ++i) {
    const std::string id = std::to_string(i + 1);
    try {
      solve_regulation(s.leader, s.followers[i]);
    } catch (const NoSolution& e) {
      throw ValidationError("Assumption 4: regulator equations of follower " + id + " have no solution (" + e.what() + ")");
    }
    try {
      solve_formation_regulation(s.followers[i], s.exosystems[i]);
    } catch (const NoSolution& e) {
      throw ValidationError("Assumption 5: formation regulator equations of follower " + id + " have no solution (" +
                            e.what() + ")");
    }
  }
  return s;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_text_file(path), path); }

/// Applies one `key=value` override and re-validates the structure. `c_i`,
/// `alpha_i`, `beta_i` and `k4_i` set the value for every follower.
inline void apply_override(Scenario& s, const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  const bool numeric = end && *end == '\0' && !value.empty();
  auto need_number = [&] {
    if (!numeric) throw ParseError("override " + key + ": expected a number, got '" + value + "'");
    return v;
  };
  auto boolean = [&] {
    if (value == "1" || value == "true" || value == "on") return true;
    if (value == "0" || value == "false" || value == "off") return false;
    throw ParseError("override " + key + ": expected a boolean, got '" + value + "'");
  };
  const std::size_t n = s.size();
  if (key == "dt") s.times.dt = need_number();
  else if (key == "T1") s.times.t1 = need_number();
  else if (key == "T2") s.times.t2 = need_number();
  else if (key == "t_end") s.times.t_end = need_number();
  else if (key == "t0") s.times.t0 = need_number();
  else if (key == "v") s.times.v = need_number();
  else if (key == "ratio_cap") s.times.ratio_cap = need_number();
  else if (key == "log_stride") s.times.log_stride = static_cast<std::size_t>(need_number());
  else if (key == "eps_s") s.control.eps_s = need_number();
  else if (key == "eps_c") s.control.eps_c = need_number();
  else if (key == "robust_term") s.control.robust_term = boolean();
  else if (key == "compensation_term") s.control.compensation_term = boolean();
  else if (key == "c_i") s.gains.c.assign(n, need_number());
  else if (key == "alpha_i") s.gains.alpha.assign(n, need_number());
  else if (key == "beta_i") s.gains.beta.assign(n, need_number());
  else if (key == "k4_i") s.gains.k4.assign(n, need_number());
  else if (key == "rho1") s.gains.rho[0] = need_number();
  else if (key == "rho2") s.gains.rho[1] = need_number();
  else if (key == "rho3") s.gains.rho[2] = need_number();
  else if (key == "rho4") s.gains.rho[3] = need_number();
  else if (key == "n_bar") s.bounds.n_bar = need_number();
  else if (key == "m_bar") s.bounds.m_bar = need_number();
  else if (key == "d_bar") s.bounds.d_bar = need_number();
  else if (key == "u_bar") s.bounds.u_bar = need_number();
  else throw ParseError("unknown override key '" + key + "'");
  validate_structure(s);
}

// ---------------------------------------------------------------------------
// Trajectory CSV: header "t, x0_1.., x_i_k.., xi_i_k.., xit_i_k.., e_i_k..,
// ebar_i_k.., u_i_k.., h_i_k.., V, Vbar_i.." with 1-based indices; values
// printed with 17 significant digits so a re-read is exact.

namespace io_detail {
inline const std::vector<std::string>& follower_fields() {
  static const std::vector<std::string> f{"x", "xi", "xit", "e", "ebar", "u", "h"};
  return f;
}
inline bool is_follower_field(const std::string& name) {
  const auto& f = follower_fields();
  return std::find(f.begin(), f.end(), name) != f.end();
}
inline std::vector<Vector>* field(LogRecord& r, const std::string& name) {
  if (name == "x") return &r.x;
  if (name == "xi") return &r.xi;
  if (name == "xit") return &r.xi_err;
  if (name == "e") return &r.e;
  if (name == "ebar") return &r.ebar;
  if (name == "u") return &r.u;
  if (name == "h") return &r.h;
  return nullptr;
}
inline const std::vector<Vector>& field(const LogRecord& r, const std::string& name) {
  return *field(const_cast<LogRecord&>(r), name);
}
}  // namespace io_detail

inline void write_csv(const TrajectoryLog& log, std::ostream& out) {
  if (log.records.empty()) return;
  const auto& first = log.records.front();
  const std::size_t n = first.x.size();
  std::string header = "t";
  for (std::size_t k = 0; k < first.x0.size(); ++k) header += fmt::format(",x0_{}", k + 1);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& name : io_detail::follower_fields())
      for (std::size_t k = 0; k < io_detail::field(first, name)[i].size(); ++k)
        header += fmt::format(",{}_{}_{}", name, i + 1, k + 1);
  header += ",V";
  for (std::size_t i = 0; i < n; ++i) header += fmt::format(",Vbar_{}", i + 1);
  out << header << '\n';

  std::string line;
  for (const auto& r : log.records) {
    line = fmt::format("{:.17g}", r.t);
    for (double v : r.x0.data()) line += fmt::format(",{:.17g}", v);
    for (std::size_t i = 0; i < n; ++i)
      for (const auto& name : io_detail::follower_fields())
        for (double v : io_detail::field(r, name)[i].data()) line += fmt::format(",{:.17g}", v);
    line += fmt::format(",{:.17g}", r.v);
    for (double v : r.vbar) line += fmt::format(",{:.17g}", v);
    out << line << '\n';
  }
}

inline void write_csv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write " + path);
  write_csv(log, out);
}

inline TrajectoryLog read_csv(std::istream& in, const std::string& source = "<csv>") {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(source + ": empty file");
  struct Column {
    std::string field;  // "t", "x0", "V", "Vbar" or a follower field
    std::size_t follower = 0, index = 0;
  };
  std::vector<Column> cols;
  std::size_t n = 0, n0 = 0;
  std::map<std::pair<std::string, std::size_t>, std::size_t> dims;
  {
    std::stringstream ss(header);
    std::string name;
    while (std::getline(ss, name, ',')) {
      std::vector<std::string> parts;
      std::stringstream ps(name);
      std::string p;
      while (std::getline(ps, p, '_')) parts.push_back(p);
      Column c;
      c.field = parts.at(0);
      try {
        if (c.field == "t" || c.field == "V") {
          if (parts.size() != 1) throw ParseError("");
        } else if (c.field == "x0" || c.field == "Vbar") {
          if (parts.size() != 2) throw ParseError("");
          c.index = std::stoul(parts[1]);
          if (c.field == "x0") n0 = std::max(n0, c.index);
          else n = std::max(n, c.index);
        } else if (io_detail::is_follower_field(c.field)) {
          if (parts.size() != 3) throw ParseError("");
          c.follower = std::stoul(parts[1]);
          c.index = std::stoul(parts[2]);
          n = std::max(n, c.follower);
          auto& dim = dims[{c.field, c.follower}];
          dim = std::max(dim, c.index);
        } else {
          throw ParseError("");
        }
      } catch (const std::exception&) {
        throw ParseError(source + ": unrecognised column '" + name + "'");
      }
      cols.push_back(c);
    }
  }

  TrajectoryLog log;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    LogRecord r;
    r.x0 = Vector(n0, 1);
    r.vbar.assign(n, 0.0);
    for (const auto& name : io_detail::follower_fields()) {
      auto* f = io_detail::field(r, name);
      for (std::size_t i = 1; i <= n; ++i) f->push_back(Vector(dims[{name, i}], 1));
    }
    std::stringstream ss(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(ss, cell, ',')) {
      if (k >= cols.size()) throw ParseError(fmt::format("{}:{}: too many values", source, line_no));
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw ParseError(fmt::format("{}:{}: bad number '{}'", source, line_no, cell));
      const auto& c = cols[k++];
      if (c.field == "t") r.t = v;
      else if (c.field == "V") r.v = v;
      else if (c.field == "x0") r.x0[c.index - 1] = v;
      else if (c.field == "Vbar") r.vbar[c.index - 1] = v;
      else (*io_detail::field(r, c.field))[c.follower - 1][c.index - 1] = v;
    }
    if (k != cols.size()) throw ParseError(fmt::format("{}:{}: expected {} values, got {}", source, line_no, cols.size(), k));
    log.records.push_back(std::move(r));
  }
  return log;
}

inline TrajectoryLog read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path);
  return read_csv(in, path);
}

}  // namespace ptf
