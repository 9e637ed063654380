#include "ostrograd/number.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>

#include "ostrograd/error.hpp"

namespace ostrograd::sym {

namespace {

// Exact q-th root of a non-negative integer, if any.
std::optional<mpz_class> exact_root(const mpz_class& v, unsigned long q) {
  mpz_class r;
  if (mpz_root(r.get_mpz_t(), v.get_mpz_t(), q) != 0) return r;
  return std::nullopt;
}

}  // namespace

Number Number::rational(long num, long den) {
  if (den == 0) throw Error(ErrorKind::Evaluation, "rational with zero denominator");
  Number n;
  n.q_ = mpq_class(num, den);
  n.q_.canonicalize();
  return n;
}

Number Number::rational(const mpq_class& q) {
  Number n;
  n.q_ = q;
  n.q_.canonicalize();
  return n;
}

Number Number::real(double d) {
  Number n;
  n.exact_ = false;
  n.d_ = d;
  return n;
}

double Number::to_double() const { return exact_ ? q_.get_d() : d_; }

long double Number::to_long_double() const {
  if (!exact_) return d_;
  // mpq -> long double without going through double for moderate sizes.
  if (q_.get_num().fits_slong_p() && q_.get_den().fits_slong_p())
    return static_cast<long double>(q_.get_num().get_si()) /
           static_cast<long double>(q_.get_den().get_si());
  return q_.get_d();
}

bool Number::is_zero() const { return exact_ ? sgn(q_) == 0 : d_ == 0.0; }
bool Number::is_one() const { return exact_ ? q_ == 1 : d_ == 1.0; }
bool Number::is_minus_one() const { return exact_ ? q_ == -1 : d_ == -1.0; }
bool Number::is_integer() const { return exact_ && q_.get_den() == 1; }
bool Number::is_negative() const { return sign() < 0; }

int Number::sign() const {
  if (exact_) return sgn(q_);
  return (d_ > 0) - (d_ < 0);
}

long Number::to_long() const {
  if (!is_integer() || !q_.get_num().fits_slong_p())
    throw Error(ErrorKind::Internal, "number is not a machine integer: " + str());
  return q_.get_num().get_si();
}

Number Number::operator-() const {
  if (exact_) return rational(mpq_class(-q_));
  return real(-d_);
}

Number operator+(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) return Number::rational(mpq_class(a.q_ + b.q_));
  return Number::real(a.to_double() + b.to_double());
}

Number operator-(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) return Number::rational(mpq_class(a.q_ - b.q_));
  return Number::real(a.to_double() - b.to_double());
}

Number operator*(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) return Number::rational(mpq_class(a.q_ * b.q_));
  return Number::real(a.to_double() * b.to_double());
}

Number operator/(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    if (b.is_zero()) throw Error(ErrorKind::Evaluation, "exact division by zero");
    return Number::rational(mpq_class(a.q_ / b.q_));
  }
  return Number::real(a.to_double() / b.to_double());
}

std::optional<Number> Number::pow(const Number& base, const Number& exponent) {
  if (!base.exact_ || !exponent.exact_)
    return real(std::pow(base.to_double(), exponent.to_double()));
  const mpz_class& p = exponent.q_.get_num();
  const mpz_class& q = exponent.q_.get_den();
  if (!p.fits_slong_p() || !q.fits_ulong_p()) return std::nullopt;
  long pe = p.get_si();
  unsigned long qe = q.get_ui();
  if (base.is_zero()) {
    if (pe > 0) return Number(0);
    return std::nullopt;
  }
  // Guard against runaway exact powers.
  if (std::labs(pe) > 4096) return std::nullopt;
  mpq_class b = base.q_;
  if (qe != 1) {
    bool neg = sgn(b) < 0;
    if (neg && qe % 2 == 0) return std::nullopt;
    mpz_class num = neg ? mpz_class(-b.get_num()) : b.get_num();
    auto rn = exact_root(num, qe);
    auto rd = exact_root(b.get_den(), qe);
    if (!rn || !rd) return std::nullopt;
    b = mpq_class(neg ? mpz_class(-*rn) : *rn, *rd);
  }
  mpq_class out = 1;
  unsigned long e = static_cast<unsigned long>(std::labs(pe));
  mpz_class n, d;
  mpz_pow_ui(n.get_mpz_t(), b.get_num().get_mpz_t(), e);
  mpz_pow_ui(d.get_mpz_t(), b.get_den().get_mpz_t(), e);
  out = pe >= 0 ? mpq_class(n, d) : mpq_class(d, n);
  out.canonicalize();
  return rational(out);
}

int Number::compare(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) return cmp(a.q_, b.q_) < 0 ? -1 : (cmp(a.q_, b.q_) > 0 ? 1 : 0);
  double x = a.to_double(), y = b.to_double();
  if (x < y) return -1;
  if (x > y) return 1;
  if (a.exact_ != b.exact_) return a.exact_ ? -1 : 1;
  // NaN payloads never appear in normalized trees; treat as equal.
  return 0;
}

std::size_t Number::hash() const {
  if (exact_) {
    std::size_t h = std::hash<std::string>{}(q_.get_str(16));
    return h ^ 0x9e3779b97f4a7c15ULL;
  }
  return std::hash<double>{}(d_);
}

std::string Number::str() const {
  if (exact_) return q_.get_str();
  if (std::isnan(d_)) return "nan";
  if (std::isinf(d_)) return d_ > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, d_);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::optional<Number> Number::parse(std::string_view tok) {
  if (tok.empty()) return std::nullopt;
  if (tok == "nan") return real(std::numeric_limits<double>::quiet_NaN());
  if (tok == "inf") return real(std::numeric_limits<double>::infinity());
  if (tok == "-inf") return real(-std::numeric_limits<double>::infinity());
  bool is_float = tok.find_first_of(".eE") != std::string_view::npos;
  if (is_float) {
    double d = 0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), d);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) return std::nullopt;
    return real(d);
  }
  std::size_t i = (tok[0] == '-' || tok[0] == '+') ? 1 : 0;
  if (i == tok.size()) return std::nullopt;
  bool slash = false;
  for (std::size_t j = i; j < tok.size(); ++j) {
    char c = tok[j];
    if (c == '/') {
      if (slash || j == i || j + 1 == tok.size()) return std::nullopt;
      slash = true;
    } else if (c < '0' || c > '9') {
      return std::nullopt;
    }
  }
  std::string s(tok[0] == '+' ? tok.substr(1) : tok);
  mpq_class q;
  if (q.set_str(s, 10) != 0) return std::nullopt;
  if (q.get_den() == 0) return std::nullopt;
  return rational(q);
}

}  // namespace ostrograd::sym
