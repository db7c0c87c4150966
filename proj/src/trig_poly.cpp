#include "vps/trig_poly.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

namespace vps {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxVars = kMaxDim + 1;
constexpr int kTableK = 16;

// Harmonic tables for one evaluation point.
struct Harmonics {
  std::array<std::array<double, kTableK + 1>, kMaxVars> c;
  std::array<std::array<double, kTableK + 1>, kMaxVars> s;
  std::array<double, kMaxVars> z;

  void fill(const double* pt, int nvars, const int* maxk) {
    for (int v = 0; v < nvars; ++v) fill_var(pt, v, maxk[v]);
  }

  // Only the listed variables, e.g. those a system actually depends on.
  void fill(const double* pt, const std::vector<int>& vars, const int* maxk) {
    for (int v : vars) fill_var(pt, v, maxk[v]);
  }

  void fill_var(const double* pt, int v, int maxk) {
    const int K = std::min(maxk, kTableK);
    if (K == 0) return;
    // reduce to [-1/2, 1/2) before scaling by 2 pi
    const double a = pt[v] + 0.5;
    double fl;
    if (std::abs(a) < 0x1p52) {
      fl = static_cast<double>(static_cast<long long>(a));
      if (fl > a) fl -= 1.0;
    } else {
      fl = std::floor(a);
    }
    const double r = pt[v] - fl;
    z[v] = r;
    const double c1 = std::cos(kTwoPi * r);
    const double s1 = std::sin(kTwoPi * r);
    c[v][0] = 1.0;
    s[v][0] = 0.0;
    c[v][1] = c1;
    s[v][1] = s1;
    for (int k = 2; k <= K; ++k) {
      c[v][k] = c[v][k - 1] * c1 - s[v][k - 1] * s1;
      s[v][k] = s[v][k - 1] * c1 + c[v][k - 1] * s1;
    }
  }


  double cosk(int v, int k) const { return k <= kTableK ? c[v][k] : std::cos(kTwoPi * k * z[v]); }
  double sink(int v, int k) const { return k <= kTableK ? s[v][k] : std::sin(kTwoPi * k * z[v]); }

  double factor(const TrigFactor& f) const { return f.fn == Trig::Cos ? cosk(f.var, f.k) : sink(f.var, f.k); }
  double dfactor(const TrigFactor& f) const {
    return f.fn == Trig::Cos ? -kTwoPi * f.k * sink(f.var, f.k) : kTwoPi * f.k * cosk(f.var, f.k);
  }
};

// Recursive-descent parser for sums of products of numbers and trig calls.
class Parser {
 public:
  Parser(std::string_view text, const std::vector<std::string>& names) : text_(text), names_(names) {}

  TrigPoly parse() {
    TrigPoly poly(static_cast<int>(names_.size()));
    double constant = 0.0;
    skip_ws();
    if (at_end()) fail("empty expression");
    bool first = true;
    while (!at_end()) {
      double sign = 1.0;
      if (peek() == '+' || peek() == '-') {
        sign = peek() == '-' ? -1.0 : 1.0;
        ++pos_;
        skip_ws();
      } else if (!first) {
        fail("expected '+' or '-'");
      }
      first = false;
      double coef = sign;
      std::vector<TrigFactor> factors;
      parse_factor(coef, factors);
      skip_ws();
      while (!at_end() && peek() == '*') {
        ++pos_;
        skip_ws();
        parse_factor(coef, factors);
        skip_ws();
      }
      if (factors.empty()) {
        constant += coef;
      } else if (coef != 0.0) {
        poly.add_term(coef, std::move(factors));
      }
    }
    TrigPoly out(poly.nvars(), constant);
    for (const auto& t : poly.terms()) out.add_term(t.coef, t.factors);
    return out;
  }

 private:
  void parse_factor(double& coef, std::vector<TrigFactor>& factors) {
    if (at_end()) fail("unexpected end of expression");
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      coef *= parse_number();
      return;
    }
    if (text_.substr(pos_, 3) == "sin" || text_.substr(pos_, 3) == "cos") {
      const Trig fn = text_.substr(pos_, 3) == "sin" ? Trig::Sin : Trig::Cos;
      pos_ += 3;
      skip_ws();
      expect('(');
      skip_ws();
      int k = 1;
      if (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
        const double kd = parse_number();
        if (kd != std::floor(kd) || kd < 0 || kd > 1e6) fail("frequency must be a non-negative integer");
        k = static_cast<int>(kd);
        skip_ws();
        if (!at_end() && peek() == '*') {
          ++pos_;
          skip_ws();
        }
      }
      const int var = parse_var();
      skip_ws();
      expect(')');
      if (k == 0) {
        if (fn == Trig::Sin) coef = 0.0;  // sin(0) == 0
        return;
      }
      factors.push_back({var, k, fn});
      return;
    }
    fail("expected a number, sin(...) or cos(...)");
  }

  double parse_number() {
    const char* b = text_.data() + pos_;
    const char* e = text_.data() + text_.size();
    double v = 0.0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc()) fail("malformed number");
    pos_ += static_cast<std::size_t>(p - b);
    return v;
  }

  int parse_var() {
    std::size_t end = pos_;
    while (end < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) ++end;
    const std::string_view name = text_.substr(pos_, end - pos_);
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) {
        pos_ = end;
        return static_cast<int>(i);
      }
    }
    fail("unknown variable '" + std::string(name) + "'");
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "expression \"" << text_ << "\" at offset " << pos_ << ": " << msg;
    throw Error(ErrorKind::Schema, os.str());
  }

  std::string_view text_;
  const std::vector<std::string>& names_;
  std::size_t pos_ = 0;
};

}  // namespace

TrigPoly TrigPoly::univariate(int nvars, int var, double c, const std::vector<double>& a,
                              const std::vector<double>& b) {
  TrigPoly p(nvars, c);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0.0) p.add_term(a[i], {{var, static_cast<int>(i + 1), Trig::Cos}});
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i] != 0.0) p.add_term(b[i], {{var, static_cast<int>(i + 1), Trig::Sin}});
  return p;
}

TrigPoly TrigPoly::parse(std::string_view text, const std::vector<std::string>& names) {
  return Parser(text, names).parse();
}

TrigPoly& TrigPoly::add_term(double coef, std::vector<TrigFactor> factors) {
  for (const auto& f : factors) {
    if (f.var < 0 || f.var >= nvars_) throw Error(ErrorKind::DimensionMismatch, "trig factor variable out of range");
    if (f.k < 1) throw Error(ErrorKind::Schema, "trig factor frequency must be >= 1");
  }
  for (const auto& f : factors) maxk_[f.var] = std::max(maxk_[f.var], f.k);
  terms_.push_back({coef, std::move(factors)});
  return *this;
}

bool TrigPoly::depends_on(int var) const { return max_frequency(var) > 0; }

int TrigPoly::max_frequency(int var) const { return maxk_.at(static_cast<std::size_t>(var)); }

namespace {

double terms_value(const TrigPoly& poly, const Harmonics& h) {
  double v = poly.constant();
  for (const auto& t : poly.terms()) {
    double p = t.coef;
    for (const auto& f : t.factors) p *= h.factor(f);
    v += p;
  }
  return v;
}

double terms_value_grad(const TrigPoly& poly, const Harmonics& h, double* grad) {
  for (int i = 0; i < poly.nvars(); ++i) grad[i] = 0.0;
  double v = poly.constant();
  std::array<double, 8> vals;
  for (const auto& t : poly.terms()) {
    const std::size_t n = t.factors.size();
    double p = t.coef;
    for (std::size_t i = 0; i < n; ++i) {
      const double fv = h.factor(t.factors[i]);
      if (i < vals.size()) vals[i] = fv;
      p *= fv;
    }
    v += p;
    for (std::size_t i = 0; i < n; ++i) {
      double d = t.coef * h.dfactor(t.factors[i]);
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) d *= j < vals.size() ? vals[j] : h.factor(t.factors[j]);
      grad[t.factors[i].var] += d;
    }
  }
  return v;
}

std::vector<int> joint_max_frequency(const std::vector<TrigPoly>& polys, int nvars) {
  std::vector<int> maxk(static_cast<std::size_t>(nvars), 0);
  for (const auto& p : polys)
    for (int v = 0; v < nvars; ++v) maxk[v] = std::max(maxk[v], p.max_frequency(v));
  return maxk;
}

void check_joint(const std::vector<TrigPoly>& polys, int nvars) {
  for (const auto& p : polys)
    if (p.nvars() != nvars) throw Error(ErrorKind::DimensionMismatch, "trig polynomials have different variable counts");
}

}  // namespace

double TrigPoly::value(const double* z) const {
  if (terms_.empty()) return constant_;
  Harmonics h;
  h.fill(z, nvars_, maxk_.data());
  return terms_value(*this, h);
}

double TrigPoly::value_grad(const double* z, double* grad) const {
  if (terms_.empty()) {
    for (int i = 0; i < nvars_; ++i) grad[i] = 0.0;
    return constant_;
  }
  Harmonics h;
  h.fill(z, nvars_, maxk_.data());
  return terms_value_grad(*this, h, grad);
}

TrigSystem::TrigSystem(std::vector<TrigPoly> polys) : polys_(std::move(polys)) {
  if (polys_.empty()) return;
  nvars_ = polys_.front().nvars();
  check_joint(polys_, nvars_);
  maxk_ = joint_max_frequency(polys_, nvars_);
  for (int v = 0; v < nvars_; ++v)
    if (maxk_[static_cast<std::size_t>(v)] > 0) active_.push_back(v);
  for (const auto& p : polys_) consts_.push_back(p.constant());
  for (std::size_t i = 0; i < polys_.size(); ++i) {
    for (const auto& t : polys_[i].terms()) {
      if (t.factors.size() > kMaxFlatFactors) {
        flat_ = false;
        continue;
      }
      FlatTerm ft;
      ft.poly = static_cast<int>(i);
      ft.coef = t.coef;
      ft.nf = static_cast<int>(t.factors.size());
      for (int j = 0; j < ft.nf; ++j) ft.f[j] = t.factors[static_cast<std::size_t>(j)];
      terms_.push_back(ft);
    }
  }
}

void TrigSystem::values(const double* z, double* out) const {
  Harmonics h;
  h.fill(z, active_, maxk_.data());
  if (!flat_) {
    for (std::size_t i = 0; i < polys_.size(); ++i) out[i] = terms_value(polys_[i], h);
    return;
  }
  for (std::size_t i = 0; i < consts_.size(); ++i) out[i] = consts_[i];
  for (const auto& t : terms_) {
    double p = t.coef;
    for (int j = 0; j < t.nf; ++j) p *= h.factor(t.f[j]);
    out[t.poly] += p;
  }
}

void TrigSystem::values_grads(const double* z, double* out, double* grads) const {
  Harmonics h;
  h.fill(z, active_, maxk_.data());
  if (!flat_) {
    for (std::size_t i = 0; i < polys_.size(); ++i)
      out[i] = terms_value_grad(polys_[i], h, grads + i * static_cast<std::size_t>(nvars_));
    return;
  }
  const int n = nvars_;
  const int size = static_cast<int>(consts_.size());
  const double* c0 = consts_.data();
  for (int i = 0; i < size; ++i) out[i] = c0[i];
  std::fill_n(grads, size * n, 0.0);
  double vals[kMaxFlatFactors];
  for (const auto& t : terms_) {
    if (t.nf == 1) {
      out[t.poly] += t.coef * h.factor(t.f[0]);
      grads[t.poly * n + t.f[0].var] += t.coef * h.dfactor(t.f[0]);
      continue;
    }
    double p = t.coef;
    for (int j = 0; j < t.nf; ++j) {
      vals[j] = h.factor(t.f[j]);
      p *= vals[j];
    }
    out[t.poly] += p;
    double* g = grads + t.poly * n;
    for (int i = 0; i < t.nf; ++i) {
      double d = t.coef * h.dfactor(t.f[i]);
      for (int j = 0; j < t.nf; ++j)
        if (j != i) d *= vals[j];
      g[t.f[i].var] += d;
    }
  }
}

double TrigPoly::lower_bound() const {
  double s = 0.0;
  for (const auto& t : terms_) s += std::abs(t.coef);
  return constant_ - s;
}

double TrigPoly::derivative_bound(int var) const {
  double s = 0.0;
  for (const auto& t : terms_)
    for (const auto& f : t.factors)
      if (f.var == var) s += std::abs(t.coef) * kTwoPi * f.k;
  return s;
}

TrigPoly TrigPoly::scaled(double factor) const {
  TrigPoly p(nvars_, constant_ * factor);
  for (const auto& t : terms_) p.add_term(t.coef * factor, t.factors);
  return p;
}

std::optional<TrigPoly> TrigPoly::antiderivative(int var) const {
  TrigPoly g(nvars_);
  for (const auto& t : terms_) {
    if (t.factors.size() != 1 || t.factors[0].var != var) return std::nullopt;
    const TrigFactor& f = t.factors[0];
    const double w = kTwoPi * f.k;
    // cos -> sin / w, sin -> -cos / w
    if (f.fn == Trig::Cos) {
      g.add_term(t.coef / w, {{var, f.k, Trig::Sin}});
    } else {
      g.add_term(-t.coef / w, {{var, f.k, Trig::Cos}});
    }
  }
  return g;
}

std::string TrigPoly::to_string(const std::vector<std::string>& names) const {
  std::ostringstream os;
  os.precision(17);
  os << constant_;
  for (const auto& t : terms_) {
    os << (t.coef < 0 ? " - " : " + ") << std::abs(t.coef);
    for (const auto& f : t.factors) {
      os << "*" << (f.fn == Trig::Cos ? "cos(" : "sin(");
      if (f.k != 1) os << f.k;
      os << names.at(f.var) << ")";
    }
  }
  return os.str();
}

}  // namespace vps
