#pragma once

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "perron_ap/conditions.hpp"
#include "perron_ap/errors.hpp"
#include "perron_ap/gridfun.hpp"
#include "perron_ap/riccati.hpp"
#include "perron_ap/solver.hpp"
#include "perron_ap/trigpoly.hpp"
#include "perron_ap/verify.hpp"

namespace perron_ap {

using ordered_json = nlohmann::ordered_json;

/// One decoded run: problem data plus every knob the pipeline accepts.
struct RunConfig {
  ProblemSpec spec;
  std::string mode = "conditions";
  int lambda_index = 0;
  double beta = 0.0;
  double tol = 1e-12;
  int max_iter = 200;
  TruncationPolicy policy{};
  double window = 50.0;  // half-width of the sample/report window
  double h = 0.01;       // sample step
  std::string out_dir = ".";
  std::vector<std::string> diagnostics;  // non-fatal notes (decimal rounding etc.)
};

inline const std::vector<std::string>& known_modes() {
  static const std::vector<std::string> m{"roots",  "conditions", "solve",     "fundamental",
                                          "decompose", "verify",  "example-n3"};
  return m;
}

namespace detail {

inline const ordered_json* find(const ordered_json& j, const std::string& key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double get_number(const ordered_json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigParse(field + ": expected a number");
  return j.get<double>();
}

inline int get_integer(const ordered_json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigParse(field + ": expected an integer");
  return j.get<int>();
}

/// Frequencies may be written as exact decimal strings; the binary rounding
/// is detected against an extended-precision parse and reported.
inline double parse_decimal(const ordered_json& j, const std::string& field,
                            std::vector<std::string>* diags) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) throw ConfigParse(field + ": expected a number or a decimal string");
  const std::string s = j.get<std::string>();
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v))
    throw ConfigParse(field + ": bad decimal literal '" + s + "'");
  if (diags) {
    char* lend = nullptr;
    const long double lv = std::strtold(begin, &lend);
    if (static_cast<long double>(v) != lv) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%.21g", v);
      diags->push_back(field + ": decimal '" + s + "' rounded to binary " + buf);
    }
  }
  return v;
}

inline Complex parse_complex(const ordered_json& j, const std::string& field) {
  if (j.is_number()) return Complex{j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Complex{j[0].get<double>(), j[1].get<double>()};
  throw ConfigParse(field + ": expected a number or an [re, im] pair");
}

inline TrigPoly parse_trig(const ordered_json& arr, const std::string& field,
                           std::vector<std::string>* diags) {
  if (!arr.is_array()) throw ConfigParse(field + ": expected an array of terms");
  TrigPoly out;
  int idx = 0;
  for (const ordered_json& term : arr) {
    const std::string where = field + "[" + std::to_string(idx++) + "]";
    if (!term.is_object()) throw ConfigParse(where + ": expected a term object");
    const ordered_json* type = find(term, "type");
    if (!type || !type->is_string()) throw ConfigParse(where + ".type: required string");
    const std::string kind = type->get<std::string>();
    const ordered_json* cj = find(term, "c");
    if (!cj) throw ConfigParse(where + ".c: required");
    const Complex c = parse_complex(*cj, where + ".c");
    if (kind == "const") {
      out = out + TrigPoly::constant(c);
      continue;
    }
    const ordered_json* fj = find(term, "freq");
    if (!fj) throw ConfigParse(where + ".freq: required for type '" + kind + "'");
    const double nu = parse_decimal(*fj, where + ".freq", diags);
    if (kind == "cos")
      out = out + TrigPoly::harmonic(nu, 0.5 * c) + TrigPoly::harmonic(-nu, 0.5 * c);
    else if (kind == "sin")
      out = out + TrigPoly::harmonic(nu, c / Complex{0, 2}) +
            TrigPoly::harmonic(-nu, -c / Complex{0, 2});
    else if (kind == "exp")
      out = out + TrigPoly::harmonic(nu, c);
    else
      throw ConfigParse(where + ".type: unknown term type '" + kind + "'");
  }
  return out;
}

inline TailModel parse_tail(const ordered_json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigParse(field + ": expected a tail object");
  const ordered_json* mj = find(j, "model");
  if (!mj || !mj->is_string()) throw ConfigParse(field + ".model: required string");
  const std::string model = mj->get<std::string>();
  if (model == "zero") return TailModel::zero();
  const ordered_json* Cj = find(j, "C");
  const ordered_json* qj = find(j, "q");
  if (!Cj || !qj) throw ConfigParse(field + ": models exp/power need C and q");
  const double C = get_number(*Cj, field + ".C");
  const double q = get_number(*qj, field + ".q");
  if (model == "exp") return TailModel::exp_bound(C, q);
  if (model == "power") return TailModel::power_bound(C, q);
  throw ConfigParse(field + ".model: unknown tail model '" + model + "'");
}

inline GridFunction parse_decay(const ordered_json& j, const std::string& field) {
  if (!j.is_object()) throw ConfigParse(field + ": expected a decay object");
  const ordered_json* fj = find(j, "form");
  if (!fj || !fj->is_string()) throw ConfigParse(field + ".form: required string");
  const std::string form = fj->get<std::string>();

  if (form == "rational" || form == "exp") {
    const ordered_json* Cj = find(j, "C");
    const ordered_json* qj = find(j, "q");
    if (!Cj || !qj) throw ConfigParse(field + ": forms rational/exp need C and q");
    const double C = get_number(*Cj, field + ".C");
    const double q = get_number(*qj, field + ".q");
    if (!(C >= 0.0) || !(q > 0.0)) throw ConfigParse(field + ": need C >= 0 and q > 0");
    double window = 60.0, h = 0.02;
    if (const ordered_json* wj = find(j, "window")) window = get_number(*wj, field + ".window");
    if (const ordered_json* hj = find(j, "h")) h = get_number(*hj, field + ".h");
    if (!(window > 0.0) || !(h > 0.0)) throw ConfigParse(field + ": need window > 0 and h > 0");
    const auto half = static_cast<std::size_t>(std::llround(window / h));
    const double t0 = -h * static_cast<double>(half);
    const std::size_t count = 2 * half + 1;
    if (form == "rational")
      return GridFunction::sample(
          [&](double t) { return Complex{C / (1.0 + std::pow(std::abs(t), q)), 0.0}; }, t0, h,
          count, TailModel::power_bound(C, q));
    return GridFunction::sample(
        [&](double t) { return Complex{C * std::exp(-q * std::abs(t)), 0.0}; }, t0, h, count,
        TailModel::exp_bound(C, q));
  }

  if (form == "samples") {
    const ordered_json* t0j = find(j, "t0");
    const ordered_json* hj = find(j, "h");
    const ordered_json* vj = find(j, "values");
    if (!t0j || !hj || !vj || !vj->is_array())
      throw ConfigParse(field + ": form samples needs t0, h and a values array");
    std::vector<Complex> vals;
    std::size_t idx = 0;
    for (const ordered_json& v : *vj)
      vals.push_back(parse_complex(v, field + ".values[" + std::to_string(idx++) + "]"));
    TailModel tm = TailModel::zero();
    if (const ordered_json* tj = find(j, "tail")) tm = parse_tail(*tj, field + ".tail");
    return GridFunction(get_number(*t0j, field + ".t0"), get_number(*hj, field + ".h"),
                        std::move(vals), tm);
  }

  throw ConfigParse(field + ".form: unknown decay form '" + form + "'");
}

}  // namespace detail

inline ordered_json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParse("cannot open config file: " + path);
  try {
    return ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigParse(path + ": invalid JSON: " + e.what());
  }
}

inline RunConfig parse_config(const ordered_json& j) {
  if (!j.is_object()) throw ConfigParse("config root must be an object");
  RunConfig rc;

  const ordered_json* nj = detail::find(j, "n");
  if (!nj) throw ConfigParse("n: missing required field");
  rc.spec.n = detail::get_integer(*nj, "n");

  const ordered_json* aj = detail::find(j, "a");
  if (!aj || !aj->is_array()) throw ConfigParse("a: required array of n coefficients a_0..a_{n-1}");
  for (std::size_t i = 0; i < aj->size(); ++i)
    rc.spec.a.push_back(detail::parse_complex((*aj)[i], "a[" + std::to_string(i) + "]"));

  if (const ordered_json* cj = detail::find(j, "class")) {
    if (!cj->is_string()) throw ConfigParse("class: expected a string tag");
    rc.spec.cls = class_from_name(cj->get<std::string>());
  }
  if (const ordered_json* pj = detail::find(j, "p"))
    rc.spec.p = detail::get_number(*pj, "p");

  rc.spec.r.resize(static_cast<std::size_t>(std::max(rc.spec.n, 0)));
  if (const ordered_json* rj = detail::find(j, "r")) {
    if (!rj->is_array()) throw ConfigParse("r: expected an array of coefficient objects");
    if (rj->size() > rc.spec.r.size())
      throw ConfigParse("r: more entries than the order admits (max n = " +
                        std::to_string(rc.spec.n) + ")");
    for (std::size_t i = 0; i < rj->size(); ++i) {
      const ordered_json& entry = (*rj)[i];
      const std::string where = "r[" + std::to_string(i) + "]";
      if (entry.is_null()) continue;
      if (!entry.is_object()) throw ConfigParse(where + ": expected an object or null");
      if (const ordered_json* tj = detail::find(entry, "trig"))
        rc.spec.r[i].mu = detail::parse_trig(*tj, where + ".trig", &rc.diagnostics);
      if (const ordered_json* dj = detail::find(entry, "decay"))
        rc.spec.r[i].nu = detail::parse_decay(*dj, where + ".decay");
    }
  }
  rc.spec.validate();

  if (const ordered_json* lj = detail::find(j, "lambda_index")) {
    rc.lambda_index = detail::get_integer(*lj, "lambda_index");
    if (rc.lambda_index < 0 || rc.lambda_index >= rc.spec.n)
      throw ConfigParse("lambda_index: must lie in [0, n)");
  }
  if (const ordered_json* bj = detail::find(j, "beta")) {
    rc.beta = detail::get_number(*bj, "beta");
    if (rc.beta < 0.0) throw ConfigParse("beta: must be >= 0");
  }
  if (const ordered_json* mj = detail::find(j, "mode")) {
    if (!mj->is_string()) throw ConfigParse("mode: expected a string");
    rc.mode = mj->get<std::string>();
    const auto& modes = known_modes();
    if (std::find(modes.begin(), modes.end(), rc.mode) == modes.end())
      throw ConfigParse("mode: unknown mode '" + rc.mode + "'");
  }
  if (const ordered_json* oj = detail::find(j, "out")) {
    if (!oj->is_string()) throw ConfigParse("out: expected a directory path string");
    rc.out_dir = oj->get<std::string>();
  }

  if (const ordered_json* sj = detail::find(j, "solver")) {
    if (!sj->is_object()) throw ConfigParse("solver: expected an options object");
    if (const ordered_json* v = detail::find(*sj, "tol")) {
      rc.tol = detail::get_number(*v, "solver.tol");
      if (!(rc.tol > 0.0)) throw ConfigParse("solver.tol: must be positive");
    }
    if (const ordered_json* v = detail::find(*sj, "max_iter")) {
      rc.max_iter = detail::get_integer(*v, "solver.max_iter");
      if (rc.max_iter < 1) throw ConfigParse("solver.max_iter: must be >= 1");
    }
    if (const ordered_json* v = detail::find(*sj, "k_max")) {
      const int k = detail::get_integer(*v, "solver.k_max");
      if (k < 1) throw ConfigParse("solver.k_max: must be >= 1");
      rc.policy.k_max = static_cast<std::size_t>(k);
    }
    if (const ordered_json* v = detail::find(*sj, "eps_drop")) {
      rc.policy.eps_drop = detail::get_number(*v, "solver.eps_drop");
      if (rc.policy.eps_drop < 0.0) throw ConfigParse("solver.eps_drop: must be >= 0");
    }
    if (const ordered_json* v = detail::find(*sj, "window")) {
      rc.window = detail::get_number(*v, "solver.window");
      if (!(rc.window > 0.0)) throw ConfigParse("solver.window: must be positive");
    }
    if (const ordered_json* v = detail::find(*sj, "h")) {
      rc.h = detail::get_number(*v, "solver.h");
      if (!(rc.h > 0.0)) throw ConfigParse("solver.h: must be positive");
    }
  }
  return rc;
}

/// Schema walk that accumulates violations instead of stopping at the first;
/// ends with a full parse to catch anything the walk does not model.
inline std::vector<std::string> validate_config(const ordered_json& j) {
  std::vector<std::string> issues;
  if (!j.is_object()) {
    issues.push_back("config root must be an object");
    return issues;
  }
  const ordered_json* nj = detail::find(j, "n");
  if (!nj)
    issues.push_back("n: missing required field");
  else if (!nj->is_number_integer() || nj->get<int>() < 2)
    issues.push_back("n: must be an integer >= 2");
  const ordered_json* aj = detail::find(j, "a");
  if (!aj)
    issues.push_back("a: missing required field");
  else if (!aj->is_array())
    issues.push_back("a: must be an array");
  else if (nj && nj->is_number_integer() && static_cast<int>(aj->size()) != nj->get<int>())
    issues.push_back("a: expected exactly n entries");
  if (const ordered_json* cj = detail::find(j, "class")) {
    if (!cj->is_string()) {
      issues.push_back("class: must be a string tag");
    } else {
      try {
        class_from_name(cj->get<std::string>());
      } catch (const ConfigParse& e) {
        issues.push_back(e.what());
      }
      if (cj->get<std::string>() == "AP") {
        if (const ordered_json* rj = detail::find(j, "r"); rj && rj->is_array())
          for (const ordered_json& entry : *rj)
            if (entry.is_object() && detail::find(entry, "decay"))
              issues.push_back("class: AP admits no decaying perturbation part, r[].decay present");
      }
      if ((cj->get<std::string>() == "pAP" || cj->get<std::string>() == "pAP0") &&
          !detail::find(j, "p"))
        issues.push_back("p: required for the pAP classes");
    }
  }
  if (const ordered_json* mj = detail::find(j, "mode")) {
    const auto& modes = known_modes();
    if (!mj->is_string() ||
        std::find(modes.begin(), modes.end(), mj->get<std::string>()) == modes.end())
      issues.push_back("mode: unknown mode");
  }
  if (!issues.empty()) return issues;
  try {
    parse_config(j);
  } catch (const Error& e) {
    issues.push_back(e.what());
  }
  return issues;
}

namespace detail {

inline void write_escaped(std::string& out, const std::string& s) {
  out += '"';
  for (const char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(ch) & 0xff);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  out += '"';
}

inline void write_double(std::string& out, double v) {
  if (!std::isfinite(v)) throw Error("non-finite value in report serialization");
  if (v == 0.0) v = 0.0;  // drop the sign of -0 so the round-trip is stable
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

inline void write_json(std::string& out, const ordered_json& j, int depth) {
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const std::string pad1(static_cast<std::size_t>(depth + 1) * 2, ' ');
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad1;
      write_escaped(out, it.key());
      out += ": ";
      write_json(out, it.value(), depth + 1);
    }
    out += "\n" + pad + "}";
    return;
  }
  if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    bool inline_ok = j.size() <= 4;
    for (const ordered_json& el : j)
      inline_ok = inline_ok && (el.is_number() || el.is_boolean() || el.is_null());
    if (inline_ok) {
      out += "[";
      bool first = true;
      for (const ordered_json& el : j) {
        if (!first) out += ", ";
        first = false;
        write_json(out, el, depth);
      }
      out += "]";
      return;
    }
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const std::string pad1(static_cast<std::size_t>(depth + 1) * 2, ' ');
    out += "[\n";
    bool first = true;
    for (const ordered_json& el : j) {
      if (!first) out += ",\n";
      first = false;
      out += pad1;
      write_json(out, el, depth + 1);
    }
    out += "\n" + pad + "]";
    return;
  }
  if (j.is_string()) {
    write_escaped(out, j.get<std::string>());
    return;
  }
  if (j.is_boolean()) {
    out += j.get<bool>() ? "true" : "false";
    return;
  }
  if (j.is_null()) {
    out += "null";
    return;
  }
  if (j.is_number_unsigned()) {
    out += std::to_string(j.get<unsigned long long>());
    return;
  }
  if (j.is_number_integer()) {
    out += std::to_string(j.get<long long>());
    return;
  }
  write_double(out, j.get<double>());
}

}  // namespace detail

/// Canonical serialization: stable key order, 2-space indent, floats at 17
/// significant digits. parse(dump(j)) then dump again is byte-identical.
inline std::string dump_json(const ordered_json& j) {
  std::string out;
  detail::write_json(out, j, 0);
  out += '\n';
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path);
  out << content;
  out.flush();
  if (!out) throw Error("failed writing output file: " + path);
}

inline ordered_json complex_json(Complex z) { return ordered_json::array({z.real(), z.imag()}); }

inline ordered_json trig_json(const TrigPoly& p) {
  ordered_json terms = ordered_json::array();
  for (std::size_t m = 0; m < p.size(); ++m) {
    ordered_json t;
    t["freq"] = p.freqs()[m];
    t["c"] = complex_json(p.coeffs()[m]);
    terms.push_back(std::move(t));
  }
  return terms;
}

inline ordered_json grid_json(const GridFunction& f) {
  ordered_json g;
  g["t0"] = f.t0();
  g["h"] = f.h();
  g["count"] = static_cast<std::uint64_t>(f.size());
  const TailModel& tm = f.tail();
  ordered_json tail;
  tail["model"] = tm.kind == TailKind::Zero ? "zero"
                  : tm.kind == TailKind::ExpBound ? "exp"
                                                  : "power";
  tail["C"] = tm.C;
  tail["q"] = tm.q;
  g["tail"] = std::move(tail);
  return g;
}

inline ordered_json condition_json(const ConditionReport& r) {
  ordered_json o;
  o["lambda"] = complex_json(r.lambda);
  o["beta"] = r.beta;
  o["L0"] = r.L0;
  o["Lbeta"] = r.Lbeta;
  o["Q0"] = r.Q0;
  o["Qbeta"] = r.Qbeta;
  o["H"] = r.H;
  o["delta_lambda"] = r.delta_lambda;
  o["M"] = r.M;
  o["gM"] = r.gM;
  o["eps0"] = r.eps0;
  o["existence_pass"] = r.existence_pass;
  o["order_pass"] = r.order_pass;
  if (r.sharp) {
    o["L0_sharp"] = r.L0_sharp;
    o["Q0_sharp"] = r.Q0_sharp;
    o["H_sharp"] = r.H_sharp;
  }
  o["notes"] = r.notes;
  return o;
}

inline ordered_json theta_json(const ThetaConditionReport& r) {
  ordered_json o;
  o["beta"] = r.beta;
  o["L0"] = r.L0;
  o["Lbeta"] = r.Lbeta;
  o["Q0"] = r.Q0;
  o["Qbeta"] = r.Qbeta;
  o["delta_lambda"] = r.delta_lambda;
  o["M"] = r.M;
  o["gM"] = r.gM;
  o["eps0"] = r.eps0;
  o["forcing_norm"] = r.forcing_norm;
  o["pass"] = r.pass;
  o["notes"] = r.notes;
  return o;
}

inline ordered_json fundamental_json(const FundamentalReport& r) {
  ordered_json o;
  ordered_json roots = ordered_json::array();
  for (Complex z : r.roots) roots.push_back(complex_json(z));
  o["roots"] = std::move(roots);
  o["factors"] = r.factors;
  o["sum_factors"] = r.sum_factors;
  o["vinv_exact"] = r.vinv_exact;
  o["vinv_gautschi"] = r.vinv_gautschi;
  o["vinv_used"] = r.vinv_used;
  o["criterion_value"] = r.criterion_value;
  o["independent"] = r.independent;
  ordered_json per = ordered_json::array();
  for (const ConditionReport& cr : r.per_root) per.push_back(condition_json(cr));
  o["per_root"] = std::move(per);
  return o;
}

inline ordered_json bundle_json(const SolutionBundle& b) {
  ordered_json o;
  o["lambda"] = complex_json(b.lambda());
  o["iterations"] = b.iterations;
  o["psi_iterations"] = b.psi_iterations;
  o["last_step_norm"] = b.last_step_norm;
  o["ball_bound"] = b.ball_bound;
  o["eps0"] = b.eps0;
  o["truncation_budget"] = b.truncation_budget;
  o["forced"] = b.forced;
  o["z"] = trig_json(b.z);
  if (b.psi) o["psi"] = grid_json(*b.psi);
  if (b.theta_report) o["theta_conditions"] = theta_json(*b.theta_report);
  return o;
}

inline ordered_json representation_json(const SolutionRepresentation& rep) {
  ordered_json o;
  o["lambda"] = complex_json(rep.lambda);
  o["lambda_eff"] = complex_json(rep.lambda_eff);
  o["kappa"] = complex_json(rep.kappa);
  o["oscillatory"] = trig_json(rep.oscillatory);
  ordered_json coeffs = ordered_json::array();
  for (Complex c : rep.green_coeff) coeffs.push_back(complex_json(c));
  o["green_coeff"] = std::move(coeffs);
  o["normalization"] = 1.0;
  return o;
}

inline ordered_json verification_json(const VerificationReport& v) {
  ordered_json o;
  o["residual_sup"] = v.residual_sup;
  o["reference_rel_error"] = v.reference_rel_error;
  o["wronskian_min_abs"] = v.wronskian_min_abs;
  ordered_json grid;
  grid["t_lo"] = v.residual_t_lo;
  grid["t_hi"] = v.residual_t_hi;
  grid["count"] = static_cast<std::uint64_t>(v.residual_count);
  o["residual_grid"] = std::move(grid);
  ordered_json ref;
  ref["t_end"] = v.reference_t_end;
  ref["rtol"] = v.reference_rtol;
  o["reference"] = std::move(ref);
  return o;
}

struct SampleRow {
  double t = 0.0;
  Complex y;
  Complex z;
  double residual = 0.0;
};

inline std::string samples_csv(const std::vector<SampleRow>& rows) {
  std::string out = "t,re_y,im_y,re_z,im_z,residual\n";
  char buf[256];
  for (const SampleRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.y.real(),
                  r.y.imag(), r.z.real(), r.z.imag(), r.residual);
    out += buf;
  }
  return out;
}

}  // namespace perron_ap
