#pragma once

#include <gmpxx.h>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace ostrograd::sym {

/// Numeric constant of an expression: an exact rational or an IEEE double.
/// Arithmetic between an exact and a float operand yields a float.
class Number {
 public:
  Number() : exact_(true), q_(0), d_(0.0) {}
  Number(long v) : exact_(true), q_(v), d_(0.0) {}  // NOLINT(implicit)
  static Number rational(long num, long den);
  static Number rational(const mpq_class& q);
  static Number real(double d);

  bool is_exact() const { return exact_; }
  const mpq_class& exact() const { return q_; }
  double to_double() const;
  long double to_long_double() const;

  bool is_zero() const;
  bool is_one() const;
  bool is_minus_one() const;
  bool is_integer() const;  // exact and integral
  bool is_negative() const;
  int sign() const;

  /// Integer value; throws unless is_integer() and it fits in a long.
  long to_long() const;

  Number operator-() const;
  friend Number operator+(const Number& a, const Number& b);
  friend Number operator-(const Number& a, const Number& b);
  friend Number operator*(const Number& a, const Number& b);
  friend Number operator/(const Number& a, const Number& b);

  /// base^exponent when it can be represented exactly (or either side is a
  /// float); nullopt for irrational results such as 2^(1/2).
  static std::optional<Number> pow(const Number& base, const Number& exponent);

  /// Total order: by value, exact before float on ties.
  static int compare(const Number& a, const Number& b);
  friend bool operator==(const Number& a, const Number& b) { return compare(a, b) == 0; }

  std::size_t hash() const;

  /// Token form used by the prefix serializer. Exact values print as "3" or
  /// "-3/4"; floats print in shortest round-trip form and always carry a '.'
  /// or an exponent so that they re-parse as floats.
  std::string str() const;
  static std::optional<Number> parse(std::string_view token);

 private:
  bool exact_;
  mpq_class q_;
  double d_;
};

}  // namespace ostrograd::sym
