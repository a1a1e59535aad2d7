#pragma once

#include <CLI11.hpp>

#include <iostream>

#include "wlab/io.hpp"

namespace wlab {

enum ExitCode : int { kExitOk = 0, kExitInvalid = 2, kExitNumerical = 3, kExitUsage = 64 };

// "torus:c=0.4,n=96", "ellipsoid:a=1,b=1,c=2", "icosphere", "necked:g=2" or a path to an OBJ file.
struct SurfaceSpec {
  std::string gen;
  std::map<std::string, double> params;
  std::filesystem::path file;
};

inline SurfaceSpec parse_surface_spec(const std::string& text) {
  SurfaceSpec s;
  if (text.size() > 4 && text.substr(text.size() - 4) == ".obj") {
    s.file = text;
    return s;
  }
  const auto colon = text.find(':');
  s.gen = text.substr(0, colon);
  if (colon == std::string::npos) return s;
  std::istringstream in(text.substr(colon + 1));
  for (std::string kv; std::getline(in, kv, ',');) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "expected key=value in '" + kv + "'");
    s.params[detail::trim(kv.substr(0, eq))] = detail::parse_double(detail::trim(kv.substr(eq + 1)), text);
  }
  return s;
}

inline Surface make_surface(const SurfaceSpec& s) {
  if (!s.file.empty()) return {read_obj(s.file), nullptr, s.file.stem().string()};
  auto get = [&](const std::string& k, double def) {
    const auto it = s.params.find(k);
    return it == s.params.end() ? def : it->second;
  };
  auto count = [&](const std::string& k, double def) {
    const double x = get(k, def);
    if (x != std::floor(x) || x < 0 || x > 1e6) throw Error(ErrorKind::InvalidArgument, k + " must be a count");
    return static_cast<int>(x);
  };
  for (const auto& [k, v] : s.params) {
    static const std::map<std::string, std::vector<std::string>> known{
        {"torus", {"R", "r", "c", "n", "nu", "nv"}},
        {"icosphere", {"radius", "subdiv"}},
        {"ellipsoid", {"a", "b", "c", "subdiv"}},
        {"necked", {"g", "eps", "delta", "subdiv"}}};
    const auto it = known.find(s.gen);
    if (it != known.end() && std::find(it->second.begin(), it->second.end(), k) == it->second.end())
      throw Error(ErrorKind::InvalidArgument, "unknown parameter '" + k + "' for " + s.gen);
  }
  if (s.gen == "torus") {
    const double R = get("R", 1.0);
    const double r = s.params.count("c") ? get("c", 0.5) * R : get("r", 0.5);
    const int n = count("n", 128);
    Surface out = torus_surface({R, r, count("nu", n), count("nv", n)});
    out.name = "torus";
    return out;
  }
  if (s.gen == "icosphere") return icosphere_surface(get("radius", 1.0), count("subdiv", 4));
  if (s.gen == "ellipsoid") return ellipsoid_surface(get("a", 1.0), get("b", 1.0), get("c", 2.0), count("subdiv", 4));
  if (s.gen == "necked") {
    NeckOptions opt;
    opt.sphere_subdiv = count("subdiv", opt.sphere_subdiv);
    return {gen_necked_spheres(count("g", 1), get("eps", 0.05), get("delta", 0.005), opt), nullptr, "necked"};
  }
  throw Error(ErrorKind::InvalidArgument, "unknown surface generator '" + s.gen + "'");
}

namespace detail {

struct CliState {
  std::string config;
  std::string out = ".";
  // surface given by flags
  std::string in, gen;
  double R = 1.0, r = 0.5, c = std::nan(""), radius = 1.0, a = 1.0, b = 1.0;
  int n = 128, subdiv = -1, genus = 1;  // subdiv -1: generator default
  double eps = 0.05, delta = 0.005;
  // pairs
  std::string f1 = "torus:c=0.4", f2 = "torus:c=0.6";
  int p1 = -1, p2 = -1;
  // gluing
  double alpha = 0.02, t = 0.0, gamma = 0.1, kappa = 0.01, m = 2.25;
  int n_theta = 64;
  std::vector<double> alphas{0.08, 0.04, 0.02, 0.01};
  double alpha_floor = 0.005, tol = 1e-3, margin_factor = 10.0, support_edges = 5.0;
  // invert and vary
  std::vector<double> center;
  int vertex = -1, q = -1;
  double target_iso = std::nan("");
};

inline Surface surface_from_flags(const CliState& st) {
  if (!st.in.empty()) return make_surface(parse_surface_spec(st.in));
  if (st.gen.empty()) throw Error(ErrorKind::InvalidArgument, "give --in <file.obj> or --gen <generator>");
  SurfaceSpec s;
  s.gen = st.gen;
  if (s.gen == "torus") {
    s.params = {{"R", st.R}, {"r", st.r}, {"n", st.n}};
    if (std::isfinite(st.c)) s.params["c"] = st.c;
  } else if (s.gen == "icosphere") {
    s.params = {{"radius", st.radius}};
  } else if (s.gen == "ellipsoid") {
    s.params = {{"a", st.a}, {"b", st.b}, {"c", std::isfinite(st.c) ? st.c : 2.0}};
  } else if (s.gen == "necked") {
    s.params = {{"g", st.genus}, {"eps", st.eps}, {"delta", st.delta}};
  }
  if (st.subdiv >= 0 && s.gen != "torus") s.params["subdiv"] = st.subdiv;
  return make_surface(s);
}

inline GluingParams gluing_from_flags(const CliState& st) {
  GluingParams p;
  p.alpha = st.alpha;
  p.t = st.t;
  p.gamma = st.gamma;
  p.kappa = st.kappa;
  p.m = st.m;
  p.n_theta = st.n_theta;
  return p;
}

inline void add_surface_flags(CLI::App* sub, CliState& st) {
  sub->add_option("--in", st.in, "input OBJ file");
  sub->add_option("--gen", st.gen, "generator: torus, icosphere, ellipsoid, necked");
  sub->add_option("--R", st.R, "torus axis radius");
  sub->add_option("--r", st.r, "torus tube radius");
  sub->add_option("--c", st.c, "torus ratio r/R, or ellipsoid third semi-axis");
  sub->add_option("--n", st.n, "torus grid size");
  sub->add_option("--radius", st.radius, "icosphere radius");
  sub->add_option("--a", st.a, "ellipsoid semi-axis");
  sub->add_option("--b", st.b, "ellipsoid semi-axis");
  sub->add_option("--subdiv", st.subdiv, "sphere subdivision level");
  sub->add_option("--genus", st.genus, "necked spheres: number of handles");
  sub->add_option("--eps", st.eps, "necked spheres: gap");
  sub->add_option("--delta", st.delta, "necked spheres: neck waist");
}

inline void add_pair_flags(CLI::App* sub, CliState& st) {
  sub->add_option("--f1", st.f1, "first surface, inverted and scaled down");
  sub->add_option("--f2", st.f2, "second surface");
  sub->add_option("--p1", st.p1, "gluing vertex on f1 (default: largest |P°|)");
  sub->add_option("--p2", st.p2, "gluing vertex on f2");
  sub->add_option("--t", st.t, "beta = t alpha; 0 picks 2|P°|^2/<P°,Q°>");
  sub->add_option("--gamma", st.gamma, "inner bridge radius");
  sub->add_option("--kappa", st.kappa, "|P°| of f1 after rescaling");
  sub->add_option("--n-theta", st.n_theta, "angular resolution of the polar grid");
}

inline std::filesystem::path out_dir(const CliState& st) {
  std::filesystem::path p(st.out);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + p.string() + ": " + ec.message());
  return p;
}

// The config file is read before parsing so that flags can override it.
inline std::string find_config(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return {};
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  detail::CliState st;
  CLI::App app{"Willmore energy and isoperimetric ratio lab"};
  app.name("wlab");
  app.require_subcommand(1);
  app.add_option("--config", st.config, "key = value file; flags win over it");
  app.add_option("--out", st.out, "output directory");

  auto* gen = app.add_subcommand("gen", "generate a surface and write it as OBJ");
  auto* meas = app.add_subcommand("measure", "area, volume, Willmore energy, iso, genus");
  auto* inv = app.add_subcommand("invert", "sphere inversion");
  auto* vary = app.add_subcommand("vary", "volume preserving variation and its first order rates");
  auto* glue = app.add_subcommand("glue", "connected sum of two surfaces");
  auto* sweep = app.add_subcommand("sweep", "energy and iso excess against alpha");
  auto* thm = app.add_subcommand("theorem", "glued surface below W(f1)+W(f2)-4pi at iso(f2)");
  auto* cons = app.add_subcommand("constants", "closed form constants");
  for (auto* s : {gen, meas, inv, vary}) detail::add_surface_flags(s, st);
  for (auto* s : {glue, sweep, thm}) detail::add_pair_flags(s, st);
  for (auto* s : app.get_subcommands({})) {
    s->add_option("--config", st.config, "key = value file");
    s->add_option("--out", st.out, "output directory");
  }
  inv->add_option("--center", st.center, "inversion center x y z")->expected(3);
  inv->add_option("--vertex", st.vertex, "normalized inversion at this vertex");
  inv->add_option("--target-iso", st.target_iso, "pick a center giving this iso");
  vary->add_option("--q", st.q, "forbidden vertex");
  vary->add_option("--support-edges", st.support_edges, "support radius in mean edge lengths");
  glue->add_option("--alpha", st.alpha, "scale of the inverted f1");
  sweep->add_option("--alphas", st.alphas, "decreasing alpha values")->delimiter(',');
  thm->add_option("--alphas", st.alphas, "alpha trials, decreasing")->delimiter(',');
  thm->add_option("--alpha-floor", st.alpha_floor, "smallest alpha tried");
  thm->add_option("--m", st.m, "s ranges over [-alpha^m, alpha^m]");
  thm->add_option("--tol", st.tol, "relative iso tolerance");
  thm->add_option("--margin-factor", st.margin_factor, "-dW must exceed this times the quadrature error");
  thm->add_option("--support-edges", st.support_edges, "variation support radius in mean edge lengths");

  std::filesystem::path dir;
  CertifiedResult harness;
  try {
    const std::string cfg_path = detail::find_config(argc, argv);
    if (!cfg_path.empty()) {
      const std::string sub_name = argc > 1 ? argv[1] : "";
      for (const auto& [key, value] : read_config(cfg_path)) {
        if (key == "config") continue;
        bool used = false;
        for (CLI::App* s : app.get_subcommands({})) {
          if (s->get_name() != sub_name) continue;
          if (CLI::Option* o = s->get_option_no_throw("--" + key)) {
            o->default_str(value);
            o->default_val(value);
            used = true;
          }
        }
        if (!used && key == "out") {
          st.out = value;
          used = true;
        }
        if (!used) throw Error(ErrorKind::InvalidArgument, "config key '" + key + "' does not apply to " + sub_name);
      }
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kExitInvalid;
  } catch (const CLI::Error& e) {
    err << e.what() << '\n';
    return kExitInvalid;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ValidationError& e) {
    err << e.what() << '\n';
    return kExitInvalid;
  } catch (const CLI::ConversionError& e) {
    err << e.what() << '\n';
    return kExitInvalid;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    dir = detail::out_dir(st);
    if (*cons) {
      write_report(constants_table(), dir / "constants.csv");
      for (const auto& row : constants_table().rows) out << row[0] << " = " << row[1] << '\n';
    } else if (*gen || *meas) {
      CLI::App* s = *gen ? gen : meas;
      const Surface surf = detail::surface_from_flags(st);
      const SurfaceMeasures sm = measure(surf.mesh);
      CsvTable t = measures_table();
      add_measures(t, surf.name, sm);
      write_report(t, dir / "measures.csv");
      if (*gen) write_obj(surf.mesh, dir / (surf.name + ".obj"));
      out << surf.name << ": W = " << sm.willmore << ", iso = " << (sm.iso ? std::to_string(*sm.iso) : "undefined")
          << ", genus " << sm.genus << '\n';
    } else if (*inv) {
      const Surface surf = detail::surface_from_flags(st);
      TriangleMesh res;
      if (std::isfinite(st.target_iso)) {
        const IsoMatch mt = match_iso_by_inversion(surf.mesh, st.target_iso);
        res = mt.mesh;
      } else if (st.vertex >= 0) {
        const NormalizedSurface ns = normalize_at_point(surf.mesh, st.vertex);
        res = normalized_inversion(ns.mesh, ns.vertex).mesh;
      } else if (st.center.size() == 3) {
        res = invert(surf.mesh, Vec3(st.center[0], st.center[1], st.center[2]));
      } else {
        throw Error(ErrorKind::InvalidArgument, "give --center, --vertex or --target-iso");
      }
      CsvTable t = measures_table();
      add_measures(t, surf.name, measure(surf.mesh));
      const SurfaceMeasures sm = measure(res);
      add_measures(t, "inverted", sm);
      write_report(t, dir / "measures.csv");
      write_obj(res, dir / "inverted.obj");
      out << "inverted: W = " << sm.willmore << '\n';
    } else if (*vary) {
      const Surface surf = detail::surface_from_flags(st);
      const int p = select_variation_point(surf.mesh, st.q);
      const VariationSpec vs = build_variation(surf.mesh, p, st.support_edges * mean_edge_length(surf.mesh), st.q);
      const double step = default_step(vs);
      const VariationRates rates = first_variation_rates(vs, {step, 10 * step});
      write_report(variation_table(vs, rates), dir / "variation.csv");
      write_obj(displaced(surf.mesh, vs.xi, step), dir / "varied.obj");
      out << "vertex " << p << ": dIso = " << rates.dIso << ", dArea = " << rates.dArea << '\n';
    } else if (*glue) {
      const Surface s1 = make_surface(parse_surface_spec(st.f1)), s2 = make_surface(parse_surface_spec(st.f2));
      const int p1 = st.p1 >= 0 ? st.p1 : choose_gluing_vertex(s1);
      const int p2 = st.p2 >= 0 ? st.p2 : choose_gluing_vertex(s2);
      const GluedSurface g = connected_sum(s1, p1, s2, p2, detail::gluing_from_flags(st));
      const SurfaceMeasures m1 = measure(s1.mesh), m2 = measure(s2.mesh), mg = measure(g.mesh);
      const ExcessReport ex = energy_iso_excess(g, m1, m2);
      CsvTable t = measures_table();
      add_measures(t, "f1", m1);
      add_measures(t, "f2", m2);
      add_measures(t, "glued", mg);
      write_report(t, dir / "measures.csv");
      AsymptoticsReport single;
      single.rows.push_back({g.alpha, ex.dW_excess, ex.predicted, ex.dIso});
      write_report(sweep_table(single), dir / "glue.csv");
      write_obj(g.mesh, dir / "glued.obj");
      out << "genus " << mg.genus << ", dW_excess = " << ex.dW_excess << " (predicted " << ex.predicted
          << "), dIso = " << ex.dIso << '\n';
    } else if (*sweep) {
      const Surface s1 = make_surface(parse_surface_spec(st.f1)), s2 = make_surface(parse_surface_spec(st.f2));
      const int p1 = st.p1 >= 0 ? st.p1 : choose_gluing_vertex(s1);
      const int p2 = st.p2 >= 0 ? st.p2 : choose_gluing_vertex(s2);
      GluingParams base = detail::gluing_from_flags(st);
      const AsymptoticsReport r = sweep_alpha(s1, p1, s2, p2, st.t, st.gamma, st.alphas, base);
      write_report(sweep_table(r), dir / "sweep.csv");
      out << "slope dW = " << r.dW_slope.slope << " +- " << r.dW_slope.half_width << ", slope dIso = "
          << r.dIso_slope.slope << " +- " << r.dIso_slope.half_width << '\n';
    } else if (*thm) {
      const Surface s1 = make_surface(parse_surface_spec(st.f1)), s2 = make_surface(parse_surface_spec(st.f2));
      HarnessOptions opt;
      opt.alphas = st.alphas;
      opt.alpha_floor = st.alpha_floor;
      opt.iso_tol = st.tol;
      opt.margin_factor = st.margin_factor;
      opt.support_edges = st.support_edges;
      opt.p1 = st.p1;
      opt.p2 = st.p2;
      opt.params = detail::gluing_from_flags(st);
      run_theorem_harness(s1, s2, opt, harness);
      write_report(harness_table(harness), dir / "harness.csv");
      write_obj(harness.glued.mesh, dir / "glued.obj");
      out << "alpha = " << harness.alpha_star << ", s = " << harness.s_star << ", iso = " << harness.iso_glued
          << " (f2: " << harness.iso_f2 << "), W margin = " << harness.w_margin << ", genus "
          << harness.measured.genus << '\n';
    }
  } catch (const Error& e) {
    err << e.what() << '\n';
    if (!is_numerical(e.kind())) return kExitInvalid;
    if (*thm && !dir.empty()) {
      CsvTable t = harness_table(harness);
      t.rows.push_back({"error", "", "", "", "", "", "", "", e.what()});
      try {
        write_report(t, dir / "harness.csv");
      } catch (const Error& w) {
        err << w.what() << '\n';
      }
    }
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace wlab
