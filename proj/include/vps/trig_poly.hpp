#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vps/types.hpp"

namespace vps {

enum class Trig : unsigned char { Cos, Sin };

/// trig(2 pi k z[var]) with k >= 1.
struct TrigFactor {
  int var = 0;
  int k = 1;
  Trig fn = Trig::Cos;
};

/// coef * product of factors.
struct TrigTerm {
  double coef = 0.0;
  std::vector<TrigFactor> factors;
};

/// Smooth 1-periodic function of `nvars` variables: a constant plus a sum of
/// products of cos/sin at integer frequencies. Angles are in cycles, so
/// "sin(2y)" means sin(2 pi * 2 * y).
///
/// Evaluation computes one sincos per variable and builds the harmonics by
/// angle addition, so cost is independent of how many terms share a variable.
class TrigPoly {
 public:
  TrigPoly() = default;
  explicit TrigPoly(int nvars, double constant = 0.0)
      : nvars_(nvars), constant_(constant), maxk_(static_cast<std::size_t>(nvars), 0) {}

  /// c + sum_k a_k cos(2 pi k z[var]) + b_k sin(2 pi k z[var]), k = 1..K.
  static TrigPoly univariate(int nvars, int var, double c, const std::vector<double>& a,
                             const std::vector<double>& b);

  /// Parses e.g. "1 + 0.5*sin(y) - 0.3*cos(2t)*sin(x)". `names` lists the variable names in order.
  /// Throws Error(Schema) with the character offset of the problem.
  static TrigPoly parse(std::string_view text, const std::vector<std::string>& names);

  TrigPoly& add_term(double coef, std::vector<TrigFactor> factors);

  int nvars() const { return nvars_; }
  double constant() const { return constant_; }
  const std::vector<TrigTerm>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }
  bool depends_on(int var) const;
  int max_frequency(int var) const;

  double value(const double* z) const;
  /// Value and gradient; `grad` has nvars entries.
  double value_grad(const double* z, double* grad) const;

  /// Lower bound of the function over the torus: constant - sum |coef|.
  double lower_bound() const;
  /// Upper bound on |d f / d z[var]|.
  double derivative_bound(int var) const;

  TrigPoly scaled(double factor) const;

  /// G with dG/dz[var] = f - constant(), when every term is a single cos/sin factor
  /// in `var`; std::nullopt otherwise.
  std::optional<TrigPoly> antiderivative(int var) const;

  std::string to_string(const std::vector<std::string>& names) const;

 private:
  int nvars_ = 0;
  double constant_ = 0.0;
  std::vector<TrigTerm> terms_;
  std::vector<int> maxk_;
};

/// Several TrigPolys in the same variables evaluated together from one
/// harmonic table, e.g. the components of a vector field.
class TrigSystem {
 public:
  TrigSystem() = default;
  explicit TrigSystem(std::vector<TrigPoly> polys);

  std::size_t size() const { return polys_.size(); }
  int nvars() const { return nvars_; }
  const std::vector<TrigPoly>& polys() const { return polys_; }
  const TrigPoly& operator[](std::size_t i) const { return polys_[i]; }

  /// out[i] = polys[i](z).
  void values(const double* z, double* out) const;
  /// Also grads[i * nvars + j] = d polys[i] / d z[j].
  void values_grads(const double* z, double* out, double* grads) const;

 private:
  static constexpr std::size_t kMaxFlatFactors = 4;
  struct FlatTerm {
    int poly = 0;
    int nf = 0;
    double coef = 0.0;
    TrigFactor f[kMaxFlatFactors];
  };

  std::vector<TrigPoly> polys_;
  int nvars_ = 0;
  std::vector<int> maxk_;
  std::vector<int> active_;     ///< variables with a nonzero frequency
  std::vector<double> consts_;  ///< constant part of each polynomial
  std::vector<FlatTerm> terms_;
  bool flat_ = true;  ///< every term has at most kMaxFlatFactors factors
};

}  // namespace vps
