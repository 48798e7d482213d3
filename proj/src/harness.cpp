#include "ivx/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ivx/blackscholes.hpp"
#include "ivx/errors.hpp"

namespace ivx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_g(double v) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

double get_param(const std::map<std::string, double>& params, const std::string& key,
                 double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

LocalVolFn displaced_lognormal(double sigma0, double shift) {
  LocalVolFn eta;
  eta.value = [sigma0, shift](double s) { return sigma0 * (s + shift) / s; };
  eta.d1 = [sigma0, shift](double s) { return -sigma0 * shift / (s * s); };
  eta.d2 = [sigma0, shift](double s) { return 2.0 * sigma0 * shift / (s * s * s); };
  return eta;
}

}  // namespace

ModelSpec model_from_name(const std::string& name,
                          const std::map<std::string, double>& params) {
  if (name == "cev") {
    return builtin_cev(get_param(params, "sigma", 1.0), get_param(params, "beta", 0.5),
                       get_param(params, "spot", 1.0));
  }
  if (name == "heston") {
    double theta = get_param(params, "theta", 0.04);
    return builtin_heston(get_param(params, "kappa", 1.0), theta,
                          get_param(params, "delta", 1.0), get_param(params, "rho", -0.5),
                          get_param(params, "spot", 1.0), get_param(params, "y0", theta));
  }
  if (name == "dlv") {
    return builtin_lv(
        displaced_lognormal(get_param(params, "sigma0", 0.2), get_param(params, "shift", 0.1)),
        get_param(params, "spot", 1.0), "dlv");
  }
  throw ValidationError("unknown model '" + name + "' (available: cev, heston, dlv)");
}

OrderFitReport run_convergence(const ConvergenceStudySpec& spec) {
  if (spec.levels < 2 || spec.levels > 12)
    throw ValidationError("convergence study needs between 2 and 12 grid levels");
  if (!(spec.tau0 > 0.0)) throw ValidationError("tau0 must be positive");
  if (spec.q < 0 || spec.q > 1) throw ValidationError("supported maturity orders: q in {0, 1}");
  if (spec.m < 0 || spec.m > 2) throw ValidationError("supported strike orders: m in {0, 1, 2}");
  if (2 * spec.q + spec.m > spec.N)
    throw ValidationError("derivative (q, m) needs 2q + m <= expansion order N");
  if (spec.lambda < 0.0) throw ValidationError("lambda must be nonnegative");

  ModelSpec model = model_from_name(spec.model_name, spec.params);

  ExpansionContext ctx = make_expansion_context(model, spec.N);
  IVExpansion expn = make_iv_expansion(ctx);
  BiPoly approx_poly = BiPoly::constant(expn.sigma0_level);
  for (int n = 1; n <= spec.N; ++n) approx_poly = approx_poly + sigma_n_symbolic(expn, n);
  for (int i = 0; i < spec.m; ++i) approx_poly = approx_poly.d_k();
  for (int i = 0; i < spec.q; ++i) approx_poly = approx_poly.d_tau();

  std::string method = spec.reference;
  if (method == "auto") {
    if (model.name == "cev") method = "cev";
    else if (model.name == "heston") method = "heston";
    else method = "mc";
  }

  const double x0 = model.z0[0];
  const double big_m = model.ellipt_M;

  OrderFitReport rep;
  rep.predicted = 0.5 * (spec.N - spec.m - 2 * spec.q + 1);
  rep.taus.assign(spec.levels, 0.0);
  rep.errors.assign(spec.levels, kNaN);
  rep.notes.assign(spec.levels, "");

  // Reference-side derivative of the implied volatility surface by central
  // differences with one Richardson refinement; the expansion side is exact.
  auto ref_deriv = [&](double tau, double k) {
    auto g = [&](double tt, double kk) {
      return reference_iv(model, tt, std::exp(kk), method, spec.mc_paths);
    };
    auto k_slice = [&](double tt) -> double {
      if (spec.m == 0) return g(tt, k);
      const double h = 0.02;
      auto stencil = [&](double hh) {
        if (spec.m == 1) return (g(tt, k + hh) - g(tt, k - hh)) / (2.0 * hh);
        return (g(tt, k + hh) - 2.0 * g(tt, k) + g(tt, k - hh)) / (hh * hh);
      };
      return (4.0 * stencil(0.5 * h) - stencil(h)) / 3.0;
    };
    if (spec.q == 0) return k_slice(tau);
    const double h = 0.2 * tau;
    auto stencil = [&](double hh) { return (k_slice(tau + hh) - k_slice(tau - hh)) / (2.0 * hh); };
    return (4.0 * stencil(0.5 * h) - stencil(h)) / 3.0;
  };

  auto run_level = [&](int p) {
    const double tau = spec.tau0 * std::pow(2.0, -p);
    rep.taus[p] = tau;
    const double centered_k = spec.lambda * std::sqrt(big_m * tau);
    try {
      double approx = approx_poly.eval(centered_k, std::sqrt(tau));
      double ref = ref_deriv(tau, x0 + centered_k);
      rep.errors[p] = std::abs(approx - ref);
    } catch (const ValidationError& e) {
      rep.notes[p] = e.what();
    } catch (const NumericalError& e) {
      rep.notes[p] = e.what();
    }
  };

  if (method == "mc") {
    // The Monte Carlo pricer manages its own thread pool; keep levels serial.
    for (int p = 0; p < spec.levels; ++p) run_level(p);
  } else {
    std::vector<std::future<void>> futs;
    futs.reserve(spec.levels);
    for (int p = 0; p < spec.levels; ++p)
      futs.push_back(std::async(std::launch::async, run_level, p));
    for (auto& f : futs) f.get();
  }

  // Fit log error against log tau, skipping failed levels and levels at
  // rounding noise (those indicate the truncation is exact for this model).
  std::vector<double> lx;
  std::vector<double> ly;
  int exact_count = 0;
  for (int p = 0; p < spec.levels; ++p) {
    double e = rep.errors[p];
    if (std::isnan(e)) continue;
    if (e <= 1e-13) {
      ++exact_count;
      if (rep.notes[p].empty()) rep.notes[p] = "exact";
      continue;
    }
    lx.push_back(std::log(rep.taus[p]));
    ly.push_back(std::log(e));
  }

  if (lx.size() < 4) {
    if (exact_count >= (spec.levels + 1) / 2) {
      rep.exact_model = true;
      rep.pass = true;
      rep.slope = kNaN;
      rep.r2 = 1.0;
    } else {
      rep.inconclusive = true;
    }
    return rep;
  }

  const size_t n = lx.size();
  double mx = 0.0;
  double my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  rep.slope = sxy / sxx;
  rep.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  rep.pass = rep.slope >= rep.predicted - 0.25 && rep.r2 >= 0.95;
  return rep;
}

std::vector<Table1Row> run_table1() {
  std::vector<Table1Row> rows(9);
  auto run_row = [&](int i) {
    const double beta = 0.1 * (i + 1);
    Table1Row& row = rows[i];
    row.beta = beta;
    ModelSpec model = builtin_cev(1.0, beta, 1.0);

    ExpansionContext ctx = make_expansion_context(model, 2);
    IVExpansion expn = make_iv_expansion(ctx);
    row.taylor = iv_taylor_coeffs(expn).entry(1, 0);

    LocalVolFn eta;
    eta.value = [beta](double s) { return std::pow(s, beta - 1.0); };
    eta.d1 = [beta](double s) { return (beta - 1.0) * std::pow(s, beta - 2.0); };
    eta.d2 = [beta](double s) { return (beta - 1.0) * (beta - 2.0) * std::pow(s, beta - 3.0); };
    row.durrleman = durrleman_time_derivative(eta, 1.0);

    // At-the-money maturity slope from the exact pricer: one-sided stencil
    // anchored at the known tau -> 0 limit g(0) = sigma s^(beta-1) = 1.
    auto g = [&](double tau) { return reference_iv(model, tau, 1.0, "cev"); };
    row.numerical = 2.0 * (g(0.02) - 1.0) / 0.02 - (g(0.04) - 1.0) / 0.04;
  };
  std::vector<std::future<void>> futs;
  futs.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i)
    futs.push_back(std::async(std::launch::async, run_row, static_cast<int>(i)));
  for (auto& f : futs) f.get();
  return rows;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += csv_escape(fields[i]);
  }
  out += '\n';
  return out;
}

namespace {

std::string trimmed(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> parse_ini(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    size_t cut = line.find_first_of("#;");
    if (cut != std::string::npos) line.erase(cut);
    line = trimmed(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trimmed(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ValidationError("config line " + std::to_string(lineno) + ": empty section name");
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trimmed(line.substr(0, eq));
    std::string val = trimmed(line.substr(eq + 1));
    if (key.empty())
      throw ValidationError("config line " + std::to_string(lineno) + ": empty key");
    out[section.empty() ? key : section + "." + key] = val;
  }
  return out;
}

namespace {

double to_double(const std::string& key, const std::string& val) {
  try {
    size_t pos = 0;
    double v = std::stod(val, &pos);
    if (pos != val.size()) throw std::invalid_argument(val);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config value for '" + key + "' is not a number: " + val);
  }
}

long to_long(const std::string& key, const std::string& val) {
  try {
    size_t pos = 0;
    long v = std::stol(val, &pos);
    if (pos != val.size()) throw std::invalid_argument(val);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("config value for '" + key + "' is not an integer: " + val);
  }
}

ConvergenceStudySpec study_from_config(const std::map<std::string, std::string>& cfg) {
  ConvergenceStudySpec spec;
  auto it = cfg.find("model.name");
  if (it == cfg.end()) throw ValidationError("config needs model.name");
  spec.model_name = it->second;
  for (const auto& [key, val] : cfg) {
    if (key.rfind("model.", 0) != 0) continue;
    std::string leaf = key.substr(6);
    if (leaf == "name") continue;
    if (leaf == "reference") {
      spec.reference = val;
      continue;
    }
    if (leaf == "mc_paths") {
      spec.mc_paths = to_long(key, val);
      continue;
    }
    spec.params[leaf] = to_double(key, val);
  }
  auto num = [&](const char* key, double dflt) {
    auto jt = cfg.find(key);
    return jt == cfg.end() ? dflt : to_double(key, jt->second);
  };
  spec.N = static_cast<int>(num("expansion.order", 2));
  spec.q = static_cast<int>(num("expansion.q", 0));
  spec.m = static_cast<int>(num("expansion.m", 0));
  spec.lambda = num("expansion.lambda", 0.0);
  spec.tau0 = num("grid.tau0", 0.1);
  spec.levels = static_cast<int>(num("grid.levels", 7));
  return spec;
}

struct ModelCli {
  std::string name = "cev";
  std::map<std::string, double> params;
};

void add_model_options(CLI::App* cmd, ModelCli& mc) {
  cmd->add_option("--model", mc.name, "Model id (cev, heston, dlv)")
      ->capture_default_str();
  static const struct {
    const char* key;
    const char* help;
  } kParams[] = {
      {"sigma", "cev volatility scale"},
      {"beta", "cev elasticity in (0, 1]"},
      {"kappa", "heston mean reversion speed"},
      {"theta", "heston long-run variance"},
      {"delta", "heston volatility of variance"},
      {"rho", "heston spot-variance correlation"},
      {"y0", "heston initial variance (defaults to theta)"},
      {"sigma0", "dlv volatility level"},
      {"shift", "dlv displacement"},
      {"spot", "initial spot (all models)"},
  };
  for (const auto& p : kParams) {
    std::string key = p.key;
    cmd->add_option_function<double>(
        "--" + key, [&mc, key](double v) { mc.params[key] = v; }, p.help);
  }
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open output file: " + path);
  out << content;
  if (!out) throw ValidationError("failed writing output file: " + path);
}

std::pair<double, double> reference_price(const ModelSpec& model, double T, double K,
                                          const std::string& method, long mc_paths,
                                          uint64_t mc_seed) {
  if (method == "cev") {
    double sigma = model.params.at("sigma");
    double beta = model.params.at("beta");
    double s0 = model.params.at("s0");
    if (beta >= 1.0) {
      return {bs_price(BSContext{sigma, T, std::log(s0), std::log(K)}), 0.0};
    }
    return {cev_call_price(CEVDensityParams{sigma, beta, T, s0}, K), 0.0};
  }
  if (method == "heston") {
    HestonParams hp{model.params.at("kappa"), model.params.at("theta"),
                    model.params.at("delta"), model.params.at("rho")};
    return {heston_call_price(hp, model.params.at("s0"), model.params.at("y0"), T, K), 0.0};
  }
  if (method == "mc") {
    McResult r = mc_price(model, T, K, mc_paths, 0, mc_seed);
    return {r.price, r.std_error};
  }
  throw ValidationError("unknown reference method: " + method);
}

std::string resolve_reference(const std::string& requested, const ModelSpec& model) {
  if (requested != "auto") return requested;
  if (model.name == "cev") return "cev";
  if (model.name == "heston") return "heston";
  return "mc";
}

int run_taylor_cmd(const ModelCli& mc, int order, const std::string& format,
                   const std::string& output) {
  ModelSpec model = model_from_name(mc.name, mc.params);
  ExpansionContext ctx = make_expansion_context(model, order);
  IVExpansion expn = make_iv_expansion(ctx);
  IVTaylorTable table = iv_taylor_coeffs(expn);
  if (format == "csv") {
    std::string out = csv_row({"q", "m", "value"});
    for (const auto& [qm, value] : table.c)
      out += csv_row({std::to_string(qm.first), std::to_string(qm.second), fmt_g(value)});
    write_output(output, out);
    return 0;
  }
  nlohmann::ordered_json doc;
  doc["model"] = model.name;
  doc["order"] = table.N;
  doc["t"] = table.t;
  doc["x0"] = table.zbar[0];
  doc["coefficients"] = nlohmann::ordered_json::array();
  for (const auto& [qm, value] : table.c)
    doc["coefficients"].push_back({{"q", qm.first}, {"m", qm.second}, {"value", value}});
  write_output(output, doc.dump(2) + "\n");
  return 0;
}

int run_price_cmd(const ModelCli& mc, double tau, double strike, int order,
                  const std::string& requested_ref, long mc_paths, const std::string& format,
                  const std::string& output) {
  ModelSpec model = model_from_name(mc.name, mc.params);
  ExpansionContext ctx = make_expansion_context(model, order);
  double k = std::log(strike);
  double approx = price_bar_N(ctx, tau, k);

  double ref = kNaN;
  double se = 0.0;
  std::string method = "none";
  if (requested_ref != "none") {
    method = resolve_reference(requested_ref, model);
    std::tie(ref, se) = reference_price(model, tau, strike, method, mc_paths, 7151);
  }

  if (format == "csv") {
    std::string out = csv_row({"field", "value"});
    out += csv_row({"model", model.name});
    out += csv_row({"tau", fmt_g(tau)});
    out += csv_row({"strike", fmt_g(strike)});
    out += csv_row({"order", std::to_string(order)});
    out += csv_row({"price_expansion", fmt_g(approx)});
    out += csv_row({"reference_method", method});
    if (method != "none") {
      out += csv_row({"price_reference", fmt_g(ref)});
      out += csv_row({"abs_diff", fmt_g(std::abs(approx - ref))});
      if (method == "mc") out += csv_row({"mc_std_error", fmt_g(se)});
    }
    write_output(output, out);
    return 0;
  }
  nlohmann::ordered_json doc;
  doc["model"] = model.name;
  doc["tau"] = tau;
  doc["strike"] = strike;
  doc["order"] = order;
  doc["price_expansion"] = approx;
  doc["reference_method"] = method;
  if (method != "none") {
    doc["price_reference"] = ref;
    doc["abs_diff"] = std::abs(approx - ref);
    if (method == "mc") doc["mc_std_error"] = se;
  }
  write_output(output, doc.dump(2) + "\n");
  return 0;
}

int run_iv_cmd(const ModelCli& mc, double tau, double strike, int order,
               const std::string& requested_ref, long mc_paths, const std::string& format,
               const std::string& output) {
  ModelSpec model = model_from_name(mc.name, mc.params);
  ExpansionContext ctx = make_expansion_context(model, order);
  IVExpansion expn = make_iv_expansion(ctx);
  double k = std::log(strike);
  VolQuote quote = sigma_bar_N(expn, tau, k);

  double ref = kNaN;
  std::string method = "none";
  if (requested_ref != "none") {
    method = resolve_reference(requested_ref, model);
    ref = reference_iv(model, tau, strike, method, mc_paths);
  }

  if (format == "csv") {
    std::string out = csv_row({"field", "value"});
    out += csv_row({"model", model.name});
    out += csv_row({"tau", fmt_g(tau)});
    out += csv_row({"strike", fmt_g(strike)});
    out += csv_row({"order", std::to_string(order)});
    out += csv_row({"iv_expansion", fmt_g(quote.value)});
    out += csv_row({"extrapolated", quote.extrapolated ? "true" : "false"});
    out += csv_row({"negative_warning", quote.negative_warning ? "true" : "false"});
    out += csv_row({"reference_method", method});
    if (method != "none") {
      out += csv_row({"iv_reference", fmt_g(ref)});
      out += csv_row({"abs_diff", fmt_g(std::abs(quote.value - ref))});
    }
    write_output(output, out);
    return 0;
  }
  nlohmann::ordered_json doc;
  doc["model"] = model.name;
  doc["tau"] = tau;
  doc["strike"] = strike;
  doc["order"] = order;
  doc["iv_expansion"] = quote.value;
  doc["extrapolated"] = quote.extrapolated;
  doc["negative_warning"] = quote.negative_warning;
  doc["reference_method"] = method;
  if (method != "none") {
    doc["iv_reference"] = ref;
    doc["abs_diff"] = std::abs(quote.value - ref);
  }
  write_output(output, doc.dump(2) + "\n");
  return 0;
}

int run_verify_table1(const std::string& format, const std::string& output) {
  std::vector<Table1Row> rows = run_table1();
  bool all_ok = true;
  const double tol = 5e-4;
  if (format == "csv") {
    std::string out = csv_row({"beta", "numerical", "taylor", "durrleman", "abs_gap", "status"});
    for (const auto& r : rows) {
      double gap = std::abs(r.numerical - r.taylor);
      bool ok = gap <= tol;
      all_ok = all_ok && ok;
      out += csv_row({fmt_g(r.beta), fmt_g(r.numerical), fmt_g(r.taylor), fmt_g(r.durrleman),
                      fmt_g(gap), ok ? "ok" : "FAIL"});
    }
    write_output(output, out);
  } else {
    nlohmann::ordered_json doc;
    doc["tolerance"] = tol;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      double gap = std::abs(r.numerical - r.taylor);
      bool ok = gap <= tol;
      all_ok = all_ok && ok;
      doc["rows"].push_back({{"beta", r.beta},
                             {"numerical", r.numerical},
                             {"taylor", r.taylor},
                             {"durrleman", r.durrleman},
                             {"abs_gap", gap},
                             {"status", ok ? "ok" : "FAIL"}});
    }
    doc["pass"] = all_ok;
    write_output(output, doc.dump(2) + "\n");
  }
  return all_ok ? 0 : 1;
}

int run_verify_order(const std::string& config_path, const std::string& format,
                     const std::string& output) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file: " + config_path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::map<std::string, std::string> cfg = parse_ini(buf.str());
  ConvergenceStudySpec spec = study_from_config(cfg);

  // [output] section in the file supplies defaults that CLI flags override.
  std::string fmt = format;
  std::string dest = output;
  if (fmt.empty()) {
    auto it = cfg.find("output.format");
    fmt = it == cfg.end() ? "csv" : it->second;
  }
  if (dest.empty()) {
    auto it = cfg.find("output.path");
    dest = it == cfg.end() ? "-" : it->second;
  }
  if (fmt != "csv" && fmt != "json")
    throw ValidationError("output format must be csv or json, got: " + fmt);

  OrderFitReport rep = run_convergence(spec);

  std::string status = rep.exact_model ? "exact"
                       : rep.inconclusive ? "inconclusive"
                       : rep.pass ? "pass"
                                  : "fail";
  if (fmt == "csv") {
    std::string out = csv_row(
        {"row", "level", "tau", "error", "note", "slope", "r2", "predicted", "status"});
    for (size_t p = 0; p < rep.taus.size(); ++p)
      out += csv_row({"level", std::to_string(p), fmt_g(rep.taus[p]), fmt_g(rep.errors[p]),
                      rep.notes[p], "", "", "", ""});
    out += csv_row({"summary", "", "", "", "", fmt_g(rep.slope), fmt_g(rep.r2),
                    fmt_g(rep.predicted), status});
    write_output(dest, out);
  } else {
    nlohmann::ordered_json doc;
    doc["model"] = spec.model_name;
    doc["order"] = spec.N;
    doc["q"] = spec.q;
    doc["m"] = spec.m;
    doc["lambda"] = spec.lambda;
    doc["levels"] = nlohmann::ordered_json::array();
    for (size_t p = 0; p < rep.taus.size(); ++p)
      doc["levels"].push_back(
          {{"tau", rep.taus[p]}, {"error", rep.errors[p]}, {"note", rep.notes[p]}});
    doc["slope"] = rep.slope;
    doc["r2"] = rep.r2;
    doc["predicted"] = rep.predicted;
    doc["status"] = status;
    write_output(dest, doc.dump(2) + "\n");
  }
  return (rep.pass || rep.exact_model) ? 0 : 1;
}

int run_models_list() {
  std::cout << "cev      parameters: sigma (1.0), beta (0.5), spot (1.0)\n"
            << "         constant elasticity diffusion dS = sigma S^beta dW\n"
            << "heston   parameters: kappa (1.0), theta (0.04), delta (1.0), rho (-0.5),\n"
            << "         y0 (theta), spot (1.0)\n"
            << "         square-root stochastic variance dY = kappa (theta - Y) dt\n"
            << "         + delta sqrt(Y) dB, d<W,B> = rho dt\n"
            << "dlv      parameters: sigma0 (0.2), shift (0.1), spot (1.0)\n"
            << "         displaced lognormal local volatility dS = sigma0 (S + shift) dW\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Implied volatility asymptotics for local-stochastic volatility models"};
  app.require_subcommand(1);

  ModelCli taylor_model;
  int taylor_order = 2;
  std::string taylor_format = "csv";
  std::string taylor_output = "-";
  CLI::App* taylor = app.add_subcommand(
      "taylor", "Exact Taylor coefficients of the implied volatility surface at the base point");
  add_model_options(taylor, taylor_model);
  taylor->add_option("--order", taylor_order, "Expansion order N")
      ->check(CLI::Range(1, 4))
      ->capture_default_str();
  taylor->add_option("--format", taylor_format, "Output format (csv, json)")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  taylor->add_option("--output", taylor_output, "Output path, - for stdout")
      ->capture_default_str();

  ModelCli price_model;
  double price_tau = 0.0;
  double price_strike = 0.0;
  int price_order = 2;
  std::string price_ref = "auto";
  long price_mc_paths = 200000;
  std::string price_format = "csv";
  std::string price_output = "-";
  CLI::App* price =
      app.add_subcommand("price", "Expansion price of a call against a reference pricer");
  add_model_options(price, price_model);
  price->add_option("--tau", price_tau, "Time to maturity")
      ->required()
      ->check(CLI::PositiveNumber);
  price->add_option("--strike", price_strike, "Strike")->required()->check(CLI::PositiveNumber);
  price->add_option("--order", price_order, "Expansion order N")
      ->check(CLI::Range(1, 4))
      ->capture_default_str();
  price->add_option("--reference", price_ref, "Reference pricer (auto, cev, heston, mc, none)")
      ->check(CLI::IsMember({"auto", "cev", "heston", "mc", "none"}))
      ->capture_default_str();
  price->add_option("--mc-paths", price_mc_paths, "Monte Carlo path count")
      ->check(CLI::Range(10000L, 100000000L))
      ->capture_default_str();
  price->add_option("--format", price_format, "Output format (csv, json)")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  price->add_option("--output", price_output, "Output path, - for stdout")
      ->capture_default_str();

  ModelCli iv_model;
  double iv_tau = 0.0;
  double iv_strike = 0.0;
  int iv_order = 2;
  std::string iv_ref = "auto";
  long iv_mc_paths = 200000;
  std::string iv_format = "csv";
  std::string iv_output = "-";
  CLI::App* iv = app.add_subcommand(
      "iv", "Truncated implied volatility expansion against a reference pricer");
  add_model_options(iv, iv_model);
  iv->add_option("--tau", iv_tau, "Time to maturity")->required()->check(CLI::PositiveNumber);
  iv->add_option("--strike", iv_strike, "Strike")->required()->check(CLI::PositiveNumber);
  iv->add_option("--order", iv_order, "Expansion order N")
      ->check(CLI::Range(1, 4))
      ->capture_default_str();
  iv->add_option("--reference", iv_ref, "Reference pricer (auto, cev, heston, mc, none)")
      ->check(CLI::IsMember({"auto", "cev", "heston", "mc", "none"}))
      ->capture_default_str();
  iv->add_option("--mc-paths", iv_mc_paths, "Monte Carlo path count")
      ->check(CLI::Range(10000L, 100000000L))
      ->capture_default_str();
  iv->add_option("--format", iv_format, "Output format (csv, json)")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  iv->add_option("--output", iv_output, "Output path, - for stdout")->capture_default_str();

  CLI::App* verify = app.add_subcommand("verify", "Built-in verification studies");
  verify->require_subcommand(1);

  std::string t1_format = "csv";
  std::string t1_output = "-";
  CLI::App* table1 = verify->add_subcommand(
      "table1", "Constant elasticity at-the-money maturity slope benchmark");
  table1->add_option("--format", t1_format, "Output format (csv, json)")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  table1->add_option("--output", t1_output, "Output path, - for stdout")->capture_default_str();

  std::string order_config;
  std::string order_format;
  std::string order_output;
  CLI::App* order = verify->add_subcommand(
      "order", "Empirical error-decay order study from an INI config file");
  order->add_option("config", order_config, "Study config file")
      ->required()
      ->check(CLI::ExistingFile);
  order->add_option("--format", order_format, "Output format (csv, json)")
      ->check(CLI::IsMember({"csv", "json"}));
  order->add_option("--output", order_output, "Output path, - for stdout");

  CLI::App* models = app.add_subcommand("models", "Model catalog");
  models->require_subcommand(1);
  CLI::App* models_list = models->add_subcommand("list", "List available models");

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(taylor))
      return run_taylor_cmd(taylor_model, taylor_order, taylor_format, taylor_output);
    if (app.got_subcommand(price))
      return run_price_cmd(price_model, price_tau, price_strike, price_order, price_ref,
                           price_mc_paths, price_format, price_output);
    if (app.got_subcommand(iv))
      return run_iv_cmd(iv_model, iv_tau, iv_strike, iv_order, iv_ref, iv_mc_paths, iv_format,
                        iv_output);
    if (app.got_subcommand(verify)) {
      if (verify->got_subcommand(table1)) return run_verify_table1(t1_format, t1_output);
      return run_verify_order(order_config, order_format, order_output);
    }
    if (app.got_subcommand(models) && models->got_subcommand(models_list))
      return run_models_list();
    return 2;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace ivx
