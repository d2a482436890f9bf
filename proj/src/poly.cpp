#include "reachbound/poly.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace reachbound {

namespace {

// Neumaier compensated summation.
struct Accum {
  double sum = 0.0, comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

double pow_int(double base, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}

}  // namespace

int total_degree(const MultiIndex& a) {
  int s = 0;
  for (int e : a) s += e;
  return s;
}

bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
  const int da = total_degree(a), db = total_degree(b);
  if (da != db) return da < db;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

Polynomial::Polynomial(int n, int degree, std::vector<Term> terms,
                       std::vector<MultiIndex> support)
    : n_(n), degree_(degree) {
  if (n < 0) throw DimensionMismatch("polynomial dimension must be nonnegative");
  if (degree < 0) throw DimensionMismatch("degree bound must be nonnegative");

  // merge duplicate exponents, drop zeros, keep graded-lex order
  std::map<MultiIndex, double> acc;
  for (auto& t : terms) {
    if (int(t.exp.size()) != n)
      throw DimensionMismatch("exponent vector length does not match dimension");
    for (int e : t.exp)
      if (e < 0) throw DimensionMismatch("negative exponent");
    const int td = total_degree(t.exp);
    if (td > degree) throw DegreeOverflow(0, td, degree);
    acc[t.exp] += t.coef;
  }
  terms_.reserve(acc.size());
  for (auto& [e, c] : acc)
    if (c != 0.0) terms_.push_back(Term{e, c});
  std::sort(terms_.begin(), terms_.end(),
            [](const Term& a, const Term& b) { return graded_lex_less(a.exp, b.exp); });

  // support = declared support united with the realized exponents
  for (const auto& t : terms_) support.push_back(t.exp);
  for (auto& s : support) {
    if (int(s.size()) != n)
      throw DimensionMismatch("support index length does not match dimension");
    const int td = total_degree(s);
    if (td > degree) throw DegreeOverflow(0, td, degree);
  }
  std::sort(support.begin(), support.end(), graded_lex_less);
  support.erase(std::unique(support.begin(), support.end()), support.end());
  support_ = std::move(support);
}

double Polynomial::coefficient(const MultiIndex& e) const {
  for (const auto& t : terms_)
    if (t.exp == e) return t.coef;
  return 0.0;
}

double Polynomial::eval(const Eigen::VectorXd& x) const {
  Accum acc;
  for (const auto& t : terms_) {
    double m = t.coef;
    for (int k = 0; k < n_; ++k)
      if (t.exp[std::size_t(k)] > 0) m *= pow_int(x[k], t.exp[std::size_t(k)]);
    acc.add(m);
  }
  return acc.value();
}

double Polynomial::eval_derivative(const MultiIndex& beta, const Eigen::VectorXd& x) const {
  Accum acc;
  for (const auto& t : terms_) {
    double m = t.coef;
    bool vanish = false;
    for (int k = 0; k < n_ && !vanish; ++k) {
      const int a = t.exp[std::size_t(k)], b = beta[std::size_t(k)];
      if (a < b) {
        vanish = true;
        break;
      }
      for (int j = 0; j < b; ++j) m *= double(a - j);  // falling factorial
      m *= pow_int(x[k], a - b);
    }
    if (!vanish) acc.add(m);
  }
  return acc.value();
}

double Polynomial::coef_abs_sum() const {
  Accum acc;
  for (const auto& t : terms_) acc.add(std::abs(t.coef));
  return acc.value();
}

PolyTuple::PolyTuple(int n, std::vector<Polynomial> polys, bool integer_coeffs)
    : n_(n), polys_(std::move(polys)), integer_coeffs_(integer_coeffs) {
  if (polys_.empty()) throw DimensionMismatch("tuple must contain at least one polynomial");
  degrees_.reserve(polys_.size());
  for (const auto& p : polys_) {
    if (p.n() != n) throw DimensionMismatch("tuple entries disagree on dimension");
    degrees_.push_back(p.degree());
    max_degree_ = std::max(max_degree_, p.degree());
  }
}

// --- parsing -------------------------------------------------------------

namespace {

enum class Tok { Number, Var, Plus, Minus, Star, Caret, Semi, End };

struct Token {
  Tok kind;
  double value = 0.0;    // Number
  bool integral = true;  // Number
  int var = 0;           // Var
  std::size_t pos = 0;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '+') {
      out.push_back({Tok::Plus, 0, true, 0, i});
      ++i;
    } else if (c == '-') {
      out.push_back({Tok::Minus, 0, true, 0, i});
      ++i;
    } else if (c == '*') {
      out.push_back({Tok::Star, 0, true, 0, i});
      ++i;
    } else if (c == '^') {
      out.push_back({Tok::Caret, 0, true, 0, i});
      ++i;
    } else if (c == ';') {
      out.push_back({Tok::Semi, 0, true, 0, i});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::size_t start = i;
      bool dot = false, exp = false;
      while (i < src.size()) {
        const char d = src[i];
        if (std::isdigit(static_cast<unsigned char>(d))) {
          ++i;
        } else if (d == '.' && !dot && !exp) {
          dot = true;
          ++i;
        } else if ((d == 'e' || d == 'E') && !exp && i + 1 < src.size() &&
                   (std::isdigit(static_cast<unsigned char>(src[i + 1])) || src[i + 1] == '+' ||
                    src[i + 1] == '-')) {
          exp = true;
          ++i;
          if (src[i] == '+' || src[i] == '-') ++i;
        } else {
          break;
        }
      }
      const std::string text(src.substr(start, i - start));
      try {
        Token t{Tok::Number, std::stod(text), !dot && !exp, 0, start};
        out.push_back(t);
      } catch (const std::exception&) {
        throw ParseError("malformed number '" + text + "'", start);
      }
    } else if (c == 'x' || c == 'X') {
      const std::size_t start = i;
      ++i;
      std::size_t ds = i;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      if (i == ds) throw ParseError("expected variable index after 'x'", start);
      out.push_back({Tok::Var, 0, true, std::stoi(std::string(src.substr(ds, i - ds))), start});
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", i);
    }
  }
  out.push_back({Tok::End, 0, true, 0, src.size()});
  return out;
}

struct Parser {
  const std::vector<Token>& toks;
  std::size_t i = 0;

  const Token& peek() const { return toks[i]; }
  const Token& take() { return toks[i++]; }

  // one polynomial up to ';' or end
  std::vector<Term> parse_poly(int n, bool& integral) {
    std::vector<Term> terms;
    bool first = true;
    for (;;) {
      double sign = 1.0;
      if (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
        if (take().kind == Tok::Minus) sign = -1.0;
      } else if (!first) {
        break;  // caller checks for ';' / end
      }
      Term t = parse_term(n, integral);
      t.coef *= sign;
      terms.push_back(std::move(t));
      first = false;
    }
    if (terms.empty()) throw ParseError("empty polynomial", peek().pos);
    return terms;
  }

  Term parse_term(int n, bool& integral) {
    Term t;
    t.exp.assign(std::size_t(n), 0);
    t.coef = 1.0;
    bool any = false;
    for (;;) {
      const Token& tok = peek();
      if (tok.kind == Tok::Number) {
        take();
        t.coef *= tok.value;
        integral = integral && tok.integral;
        any = true;
      } else if (tok.kind == Tok::Var) {
        take();
        if (tok.var >= n)
          throw ParseError("variable x" + std::to_string(tok.var) + " exceeds dimension " +
                               std::to_string(n),
                           tok.pos);
        int e = 1;
        if (peek().kind == Tok::Caret) {
          take();
          const Token& ex = peek();
          if (ex.kind != Tok::Number || !ex.integral || ex.value < 0)
            throw ParseError("exponent must be a nonnegative integer", ex.pos);
          take();
          e = int(ex.value);
        }
        t.exp[std::size_t(tok.var)] += e;
        any = true;
      } else {
        if (!any) throw ParseError("expected a number or variable", tok.pos);
        break;
      }
      if (peek().kind == Tok::Star) {
        take();
        continue;
      }
      // next factor must be introduced by '*'
      if (peek().kind == Tok::Number || peek().kind == Tok::Var)
        throw ParseError("missing '*' between factors", peek().pos);
      break;
    }
    return t;
  }
};

}  // namespace

PolyTuple parse_poly_text(std::string_view src, int n, const std::vector<int>& degrees) {
  if (n <= 0) throw DimensionMismatch("dimension must be positive");
  const auto toks = tokenize(src);
  Parser p{toks};
  std::vector<Polynomial> polys;
  bool integral = true;
  std::size_t pi = 0;
  for (;;) {
    if (pi >= degrees.size())
      throw ParseError("more polynomials than declared degrees", p.peek().pos);
    auto terms = p.parse_poly(n, integral);
    for (const auto& t : terms) {
      const int td = total_degree(t.exp);
      if (td > degrees[pi]) throw DegreeOverflow(int(pi), td, degrees[pi]);
    }
    polys.emplace_back(n, degrees[pi], std::move(terms));
    ++pi;
    if (p.peek().kind == Tok::Semi) {
      p.take();
      continue;
    }
    if (p.peek().kind == Tok::End) break;
    throw ParseError("unexpected token", p.peek().pos);
  }
  if (pi != degrees.size())
    throw ParseError("fewer polynomials than declared degrees", src.size());
  return PolyTuple(n, std::move(polys), integral);
}

PolyTuple parse_poly_auto(std::string_view src) {
  const auto toks = tokenize(src);
  int max_var = -1;
  for (const auto& t : toks)
    if (t.kind == Tok::Var) max_var = std::max(max_var, t.var);
  const int n = std::max(1, max_var + 1);

  // permissive first pass to discover per-polynomial degrees
  Parser p{toks};
  std::vector<int> degrees;
  bool integral = true;
  std::vector<std::vector<Term>> all_terms;
  for (;;) {
    auto terms = p.parse_poly(n, integral);
    int d = 1;
    for (const auto& t : terms) d = std::max(d, total_degree(t.exp));
    degrees.push_back(d);
    all_terms.push_back(std::move(terms));
    if (p.peek().kind == Tok::Semi) {
      p.take();
      continue;
    }
    break;
  }
  std::vector<Polynomial> polys;
  for (std::size_t i = 0; i < all_terms.size(); ++i)
    polys.emplace_back(n, degrees[i], std::move(all_terms[i]));
  return PolyTuple(n, std::move(polys), integral);
}

// --- evaluation ------------------------------------------------------------

Eigen::VectorXd evaluate(const PolyTuple& f, const Eigen::VectorXd& x) {
  if (int(x.size()) != f.n()) throw DimensionMismatch("point dimension does not match tuple");
  Eigen::VectorXd out(f.q());
  for (int i = 0; i < f.q(); ++i) out[i] = f.poly(i).eval(x);
  return out;
}

Eigen::MatrixXd jacobian(const PolyTuple& f, const Eigen::VectorXd& x) {
  if (int(x.size()) != f.n()) throw DimensionMismatch("point dimension does not match tuple");
  Eigen::MatrixXd J(f.q(), f.n());
  MultiIndex beta(std::size_t(f.n()), 0);
  for (int k = 0; k < f.n(); ++k) {
    beta[std::size_t(k)] = 1;
    for (int i = 0; i < f.q(); ++i) J(i, k) = f.poly(i).eval_derivative(beta, x);
    beta[std::size_t(k)] = 0;
  }
  return J;
}

namespace {

void enumerate_betas(int n, int order, MultiIndex& cur, int from, int left,
                     std::vector<MultiIndex>& out) {
  if (left == 0) {
    out.push_back(cur);
    return;
  }
  for (int k = from; k < n; ++k) {
    ++cur[std::size_t(k)];
    enumerate_betas(n, order, cur, k, left - 1, out);
    --cur[std::size_t(k)];
  }
}

}  // namespace

DerivativeTensor derivative_tensor(const PolyTuple& f, const Eigen::VectorXd& x, int order) {
  if (order < 1) throw PreconditionViolated("derivative order must be >= 1");
  if (int(x.size()) != f.n()) throw DimensionMismatch("point dimension does not match tuple");
  DerivativeTensor T;
  T.order = order;
  T.q = f.q();
  T.n = f.n();
  T.x = x;
  if (order > f.max_degree()) {
    T.zero = true;
    return T;
  }

  // evaluate each distinct partial derivative once, then fill all slot orders
  std::vector<MultiIndex> betas;
  MultiIndex cur(std::size_t(f.n()), 0);
  enumerate_betas(f.n(), order, cur, 0, order, betas);

  std::map<MultiIndex, std::size_t> beta_index;
  for (std::size_t b = 0; b < betas.size(); ++b) beta_index[betas[b]] = b;

  std::vector<double> values(std::size_t(f.q()) * betas.size());
  for (int i = 0; i < f.q(); ++i)
    for (std::size_t b = 0; b < betas.size(); ++b)
      values[std::size_t(i) * betas.size() + b] = f.poly(i).eval_derivative(betas[b], x);

  std::size_t slots = 1;
  for (int s = 0; s < order; ++s) slots *= std::size_t(f.n());
  T.entries.assign(std::size_t(f.q()) * slots, 0.0);

  std::vector<int> idx(std::size_t(order), 0);
  for (std::size_t flat = 0; flat < slots; ++flat) {
    std::size_t rem = flat;
    MultiIndex beta(std::size_t(f.n()), 0);
    for (int s = order - 1; s >= 0; --s) {
      idx[std::size_t(s)] = int(rem % std::size_t(f.n()));
      rem /= std::size_t(f.n());
      ++beta[std::size_t(idx[std::size_t(s)])];
    }
    const std::size_t b = beta_index.at(beta);
    for (int i = 0; i < f.q(); ++i)
      T.entries[std::size_t(i) * slots + flat] = values[std::size_t(i) * betas.size() + b];
  }
  return T;
}

double one_norm(const PolyTuple& f) {
  double m = 0.0;
  for (const auto& p : f.polys()) m = std::max(m, p.coef_abs_sum());
  return m;
}

PolyTuple directional_derivative_poly(const PolyTuple& f, const Eigen::VectorXd& v) {
  if (int(v.size()) != f.n()) throw DimensionMismatch("direction dimension does not match tuple");
  std::vector<Polynomial> polys;
  polys.reserve(std::size_t(f.q()));
  for (const auto& p : f.polys()) {
    std::vector<Term> terms;
    for (const auto& t : p.terms()) {
      for (int k = 0; k < f.n(); ++k) {
        const int e = t.exp[std::size_t(k)];
        if (e == 0 || v[k] == 0.0) continue;
        Term nt;
        nt.exp = t.exp;
        --nt.exp[std::size_t(k)];
        nt.coef = t.coef * double(e) * v[k];
        terms.push_back(std::move(nt));
      }
    }
    polys.emplace_back(f.n(), std::max(0, p.degree() - 1), std::move(terms));
  }
  return PolyTuple(f.n(), std::move(polys), false);
}

PolyTuple homogenize(const PolyTuple& f) {
  std::vector<Polynomial> polys;
  polys.reserve(std::size_t(f.q()));
  for (const auto& p : f.polys()) {
    auto lift = [&](const MultiIndex& e) {
      MultiIndex h(std::size_t(f.n() + 1), 0);
      h[0] = p.degree() - total_degree(e);
      for (int k = 0; k < f.n(); ++k) h[std::size_t(k + 1)] = e[std::size_t(k)];
      return h;
    };
    std::vector<Term> terms;
    terms.reserve(p.terms().size());
    for (const auto& t : p.terms()) terms.push_back(Term{lift(t.exp), t.coef});
    std::vector<MultiIndex> support;
    support.reserve(p.support().size());
    for (const auto& s : p.support()) support.push_back(lift(s));
    polys.emplace_back(f.n() + 1, p.degree(), std::move(terms), std::move(support));
  }
  return PolyTuple(f.n() + 1, std::move(polys), f.integer_coeffs());
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * double(n - k + j) / double(j);
  return std::round(r);
}

double binom_delta_norm(const PolyTuple& f, int order) {
  if (order < 0) throw PreconditionViolated("order must be >= 0");
  double m = 0.0;
  for (const auto& p : f.polys()) m = std::max(m, binomial(p.degree(), order) * p.coef_abs_sum());
  return m;
}

// --- serialization ----------------------------------------------------------

std::string to_json(const PolyTuple& f) {
  using json = nlohmann::ordered_json;
  json j;
  j["n"] = f.n();
  j["q"] = f.q();
  j["degrees"] = f.degrees();
  json polys = json::array();
  bool extra_support = false;
  for (const auto& p : f.polys()) {
    json terms = json::array();
    for (const auto& t : p.terms()) terms.push_back({{"exp", t.exp}, {"coef", t.coef}});
    polys.push_back(std::move(terms));
    if (p.support().size() != p.terms().size()) extra_support = true;
  }
  j["polys"] = std::move(polys);
  if (extra_support) {
    json sup = json::array();
    for (const auto& p : f.polys()) sup.push_back(p.support());
    j["supports"] = std::move(sup);
  }
  if (f.integer_coeffs()) j["integer"] = true;
  return j.dump();
}

PolyTuple poly_from_json(const std::string& text) {
  using json = nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
  }
  try {
    const int n = j.at("n").get<int>();
    const auto degrees = j.at("degrees").get<std::vector<int>>();
    const auto& jp = j.at("polys");
    if (jp.size() != degrees.size())
      throw ParseError("polys/degrees length mismatch", 0);
    std::vector<Polynomial> polys;
    for (std::size_t i = 0; i < jp.size(); ++i) {
      std::vector<Term> terms;
      for (const auto& jt : jp[i])
        terms.push_back(Term{jt.at("exp").get<MultiIndex>(), jt.at("coef").get<double>()});
      std::vector<MultiIndex> support;
      if (j.contains("supports")) support = j["supports"][i].get<std::vector<MultiIndex>>();
      polys.emplace_back(n, degrees[i], std::move(terms), std::move(support));
    }
    const bool integer = j.value("integer", false);
    if (j.contains("q") && j["q"].get<int>() != int(polys.size()))
      throw ParseError("declared q does not match polys", 0);
    return PolyTuple(n, std::move(polys), integer);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid polynomial JSON: ") + e.what(), 0);
  }
}

}  // namespace reachbound
