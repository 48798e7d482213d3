#pragma once

#include <map>
#include <string>
#include <vector>

#include "ivx/iv_expansion.hpp"
#include "ivx/reference_pricers.hpp"

namespace ivx {

// One empirical error-decay study: fix a model, an order N and a derivative
// (q, m), then walk tau down a dyadic grid with the strike ray
// k = x0 + lambda sqrt(M tau) and regress log error on log tau.
struct ConvergenceStudySpec {
  std::string model_name;                 // "cev", "heston", "dlv"
  std::map<std::string, double> params;
  int N = 2;
  int q = 0;
  int m = 0;
  double lambda = 0.0;
  double tau0 = 0.1;
  int levels = 7;
  std::string reference = "auto";         // "auto", "cev", "heston", "mc"
  long mc_paths = 200000;
};

struct OrderFitReport {
  std::vector<double> taus;
  std::vector<double> errors;       // NaN where a level failed
  std::vector<std::string> notes;   // per-level diagnostics
  double slope = 0.0;
  double r2 = 0.0;
  double predicted = 0.0;
  bool pass = false;
  bool inconclusive = false;
  bool exact_model = false;         // errors at rounding level everywhere
};

ModelSpec model_from_name(const std::string& name, const std::map<std::string, double>& params);

OrderFitReport run_convergence(const ConvergenceStudySpec& spec);

// Constant elasticity benchmark table: the at-the-money maturity slope of
// implied volatility per elasticity, from the numerical reference pricer,
// from the exact Taylor coefficient, and from the flawed shortcut formula
// kept as a negative control.
struct Table1Row {
  double beta = 0.0;
  double numerical = 0.0;
  double taylor = 0.0;
  double durrleman = 0.0;
};
std::vector<Table1Row> run_table1();

// Minimal RFC 4180 CSV writing: quotes fields containing commas, quotes or
// newlines, doubles embedded quotes, terminates records with LF.
std::string csv_escape(const std::string& field);
std::string csv_row(const std::vector<std::string>& fields);

// Flat INI-style config: [section] headers and key = value pairs, with #
// or ; comments. Keys are returned as "section.key".
std::map<std::string, std::string> parse_ini(const std::string& text);

int cli_main(int argc, const char* const* argv);

}  // namespace ivx
