#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "wlab/glue.hpp"

namespace wlab {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

inline double parse_double(const std::string& tok, const std::string& where) {
  double x = 0.0;
  const char* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, x);
  if (ec != std::errc() || p != end) throw Error(ErrorKind::ParseError, where + ": bad number '" + tok + "'");
  return x;
}

// "12", "12/3", "12/3/4" or "12//4"; negative indices count from the end.
inline int parse_obj_index(const std::string& tok, int n_vertices, const std::string& where) {
  const std::string head = tok.substr(0, tok.find('/'));
  int i = 0;
  auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), i);
  if (ec != std::errc() || p != head.data() + head.size() || i == 0)
    throw Error(ErrorKind::ParseError, where + ": bad vertex index '" + tok + "'");
  return i > 0 ? i - 1 : n_vertices + i;
}

inline Piece piece_from_group(const std::string& name) {
  if (name == "U") return Piece::U;
  if (name == "W") return Piece::W;
  if (name == "V") return Piece::V;
  return Piece::None;
}

inline std::string fmt(double x) {
  if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", x);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Wavefront OBJ

inline TriangleMesh parse_obj(std::istream& in, const std::string& name = "<obj>") {
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  std::vector<Piece> pieces;
  Piece group = Piece::None;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = name + ":" + std::to_string(lineno);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    if (key == "v") {
      std::string a, b, c;
      if (!(ls >> a >> b >> c)) throw Error(ErrorKind::ParseError, where + ": vertex needs 3 coordinates");
      verts.emplace_back(detail::parse_double(a, where), detail::parse_double(b, where), detail::parse_double(c, where));
    } else if (key == "f") {
      std::vector<std::string> toks;
      for (std::string t; ls >> t;) toks.push_back(t);
      if (toks.size() != 3)
        throw Error(ErrorKind::NonTriangleFace, where + ": face with " + std::to_string(toks.size()) + " vertices");
      Face f;
      for (int k = 0; k < 3; ++k) {
        f[k] = detail::parse_obj_index(toks[k], static_cast<int>(verts.size()), where);
        if (f[k] < 0 || f[k] >= static_cast<int>(verts.size()))
          throw Error(ErrorKind::ParseError, where + ": vertex index " + toks[k] + " out of range");
      }
      faces.push_back(f);
      pieces.push_back(group);
    } else if (key == "g") {
      std::string g;
      ls >> g;
      group = detail::piece_from_group(g);
    }
    // vn, vt, o, s, usemtl, mtllib: ignored
  }
  TriangleMesh probe;
  probe.vertices = verts;
  probe.faces = faces;
  probe.closed = false;
  const bool closed = !faces.empty() && boundary_loops(probe).empty();
  TriangleMesh m = closed ? build_mesh(std::move(verts), std::move(faces))
                          : build_open_mesh(std::move(verts), std::move(faces));
  m.pieces = std::move(pieces);
  return m;
}

inline TriangleMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return parse_obj(in, path.string());
}

inline void print_obj(std::ostream& out, const TriangleMesh& m) {
  char buf[96];
  for (const Vec3& v : m.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  Piece current = Piece::None;
  for (int f = 0; f < m.num_faces(); ++f) {
    const Piece p = f < static_cast<int>(m.pieces.size()) ? m.pieces[f] : Piece::None;
    if (p != current) {
      out << "g " << (p == Piece::None ? "default" : std::string(1, piece_char(p))) << '\n';
      current = p;
    }
    const Face& t = m.faces[f];
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

inline void write_obj(const TriangleMesh& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  print_obj(out, m);
  if (!out) throw Error(ErrorKind::IoError, "write failed on " + path.string());
}

// ---------------------------------------------------------------------------
// CSV reports

struct CsvTable {
  std::string schema;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline void print_csv(std::ostream& out, const CsvTable& t) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (!quote) {
        out << cells[i];
        continue;
      }
      out << '"';
      for (char c : cells[i]) out << (c == '"' ? "\"\"" : std::string(1, c));
      out << '"';
    }
    out << '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

inline void write_report(const CsvTable& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  print_csv(out, t);
  if (!out) throw Error(ErrorKind::IoError, "write failed on " + path.string());
}

inline CsvTable measures_table() {
  return {"measures", {"name", "area", "volume", "willmore", "iso", "euler_char", "genus"}, {}};
}

inline void add_measures(CsvTable& t, const std::string& name, const SurfaceMeasures& s) {
  t.rows.push_back({name, detail::fmt(s.area), detail::fmt(s.volume), detail::fmt(s.willmore),
                    s.iso ? detail::fmt(*s.iso) : "", std::to_string(s.euler_char), std::to_string(s.genus)});
}

inline CsvTable sweep_table(const AsymptoticsReport& r) {
  CsvTable t{"sweep", {"alpha", "dW_excess", "predicted", "dIso"}, {}};
  for (const SweepRow& row : r.rows)
    t.rows.push_back({detail::fmt(row.alpha), detail::fmt(row.dW_excess), detail::fmt(row.predicted),
                      detail::fmt(row.dIso)});
  if (r.rows.size() >= 3) {
    t.rows.push_back({"slope_dW", detail::fmt(r.dW_slope.slope), detail::fmt(r.dW_slope.half_width), ""});
    t.rows.push_back({"slope_dIso", detail::fmt(r.dIso_slope.slope), detail::fmt(r.dIso_slope.half_width), ""});
  }
  return t;
}

inline CsvTable harness_table(const CertifiedResult& r) {
  CsvTable t{"harness", {"kind", "alpha", "s", "dW_excess", "error", "iso", "willmore", "margin", "note"}, {}};
  for (const AlphaTrial& a : r.trials)
    t.rows.push_back({"trial", detail::fmt(a.alpha), "", detail::fmt(a.dW_excess), detail::fmt(a.quadrature_error), "",
                      "", "", a.note});
  for (const BisectionStep& b : r.steps)
    t.rows.push_back({"bisection", detail::fmt(r.alpha_star), detail::fmt(b.s), "", "", detail::fmt(r.iso_f2 + b.iso_gap),
                      "", "", ""});
  if (r.w_margin > 0.0) {
    t.rows.push_back({"f2", "", "", "", "", detail::fmt(r.iso_f2), "", "", ""});
    t.rows.push_back({"bound", "", "", "", "", "", detail::fmt(r.w_bound), "", "W(f1)+W(f2)-4pi"});
    t.rows.push_back({"result", detail::fmt(r.alpha_star), detail::fmt(r.s_star), detail::fmt(r.dW_excess),
                      detail::fmt(r.quadrature_error), detail::fmt(r.iso_glued), detail::fmt(r.w_glued),
                      detail::fmt(r.w_margin), "genus " + std::to_string(r.measured.genus)});
    t.rows.push_back({"mesh", "", "", "", "", detail::fmt(r.iso_glued_mesh), detail::fmt(r.measured.willmore), "",
                      "emitted mesh"});
  }
  return t;
}

inline CsvTable constants_table() {
  const auto k = solution_interval_constants();
  CsvTable t{"constants", {"name", "value"}, {}};
  for (const auto& [name, v] : std::vector<std::pair<std::string, double>>{{"c1", k.c1},
                                                                           {"iso_sphere", k.iso_sphere},
                                                                           {"iso_clifford", k.iso_clifford},
                                                                           {"iso_Tc1", k.iso_Tc1},
                                                                           {"eight_pi", k.eight_pi},
                                                                           {"two_pi_sq", k.two_pi_sq}})
    t.rows.push_back({name, detail::fmt(v)});
  return t;
}

inline CsvTable variation_table(const VariationSpec& s, const VariationRates& r) {
  CsvTable t{"variation", {"p", "q", "radius", "dArea", "dVol", "dIso", "dW_bound", "volume_residual", "fd_mismatch"}, {}};
  t.rows.push_back({std::to_string(s.p), std::to_string(s.q), detail::fmt(s.radius), detail::fmt(r.dArea),
                    detail::fmt(r.dVol), detail::fmt(r.dIso), detail::fmt(r.dW_bound), detail::fmt(r.volume_residual),
                    detail::fmt(r.max_relative_mismatch)});
  return t;
}

// ---------------------------------------------------------------------------
// key = value configuration

using Config = std::map<std::string, std::string>;

inline Config parse_config(std::istream& in, const std::string& name = "<config>") {
  Config c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = detail::trim(line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::ParseError, name + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = detail::trim(body.substr(0, eq));
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    if (key.empty()) throw Error(ErrorKind::ParseError, name + ":" + std::to_string(lineno) + ": empty key");
    c[key] = detail::trim(body.substr(eq + 1));
  }
  return c;
}

inline Config read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return parse_config(in, path.string());
}

}  // namespace wlab
