#pragma once

// Forward-mode dual numbers. Dual<double> carries one directional derivative;
// Dual<Dual<double>> carries the mixed second derivative needed for Hessians.

#include <cmath>
#include <concepts>
#include <limits>
#include <ostream>
#include <type_traits>

#include <Eigen/Core>

namespace lpr {

template <class T>
struct Dual {
  T v{};  ///< value
  T d{};  ///< derivative along the seeded direction

  Dual() = default;
  Dual(double value) : v(value), d(0.0) {}  // NOLINT: implicit on purpose, constants mix freely
  template <class U>
    requires(!std::same_as<T, double> && std::same_as<U, T>)
  Dual(const U& value) : v(value), d(0.0) {}  // NOLINT
  Dual(const T& value, const T& deriv) : v(value), d(deriv) {}

  static Dual variable(const T& value) { return Dual(value, T(1.0)); }

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { *this = *this * o; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }

  friend Dual operator+(const Dual& a, const Dual& b) { return {a.v + b.v, a.d + b.d}; }
  friend Dual operator-(const Dual& a, const Dual& b) { return {a.v - b.v, a.d - b.d}; }
  friend Dual operator-(const Dual& a) { return {-a.v, -a.d}; }
  friend Dual operator+(const Dual& a) { return a; }
  friend Dual operator*(const Dual& a, const Dual& b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
  friend Dual operator/(const Dual& a, const Dual& b) {
    const T inv = T(1.0) / b.v;
    return {a.v * inv, (a.d - a.v * inv * b.d) * inv};
  }

  friend bool operator==(const Dual& a, const Dual& b) { return a.v == b.v; }
  friend bool operator!=(const Dual& a, const Dual& b) { return a.v != b.v; }
  friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
  friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
  friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
  friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

  friend std::ostream& operator<<(std::ostream& os, const Dual& a) {
    return os << a.v << "+" << a.d << "e";
  }
};

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

/// Innermost floating-point value of a (possibly nested) dual number.
inline double value_of(double x) { return x; }
template <class T>
double value_of(const Dual<T>& x) {
  return value_of(x.v);
}

template <class T>
Dual<T> sin(const Dual<T>& x) {
  using std::cos, std::sin;
  return {sin(x.v), x.d * cos(x.v)};
}
template <class T>
Dual<T> cos(const Dual<T>& x) {
  using std::cos, std::sin;
  return {cos(x.v), -x.d * sin(x.v)};
}
template <class T>
Dual<T> exp(const Dual<T>& x) {
  using std::exp;
  const T e = exp(x.v);
  return {e, x.d * e};
}
template <class T>
Dual<T> log(const Dual<T>& x) {
  using std::log;
  return {log(x.v), x.d / x.v};
}
template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  using std::sqrt;
  const T r = sqrt(x.v);
  return {r, x.d / (T(2.0) * r)};
}
template <class T>
Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  using std::atan2;
  const T den = x.v * x.v + y.v * y.v;
  return {atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / den};
}
template <class T>
Dual<T> atan(const Dual<T>& x) {
  using std::atan;
  return {atan(x.v), x.d / (T(1.0) + x.v * x.v)};
}
template <class T>
Dual<T> pow(const Dual<T>& x, double n) {
  using std::pow;
  return {pow(x.v, n), x.d * T(n) * pow(x.v, n - 1.0)};
}
template <class T>
Dual<T> abs(const Dual<T>& x) {
  return x.v < T(0.0) ? -x : x;
}
template <class T>
bool isfinite(const Dual<T>& x) {
  using std::isfinite;
  return isfinite(x.v) && isfinite(x.d);
}

// Plain-double overloads so generic code inside the namespace can call the
// math functions unqualified for every scalar type.
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double atan2(double y, double x) { return std::atan2(y, x); }
inline double atan(double x) { return std::atan(x); }
inline double pow(double x, double n) { return std::pow(x, n); }
inline double abs(double x) { return std::abs(x); }
inline bool isfinite(double x) { return std::isfinite(x); }

using Dual1 = Dual<double>;
using Dual2 = Dual<Dual<double>>;

/// Branch-free helpers usable from generic model code (double or dual).
template <class T>
T square(const T& x) {
  return x * x;
}

}  // namespace lpr

namespace Eigen {

template <class T>
struct NumTraits<lpr::Dual<T>> : NumTraits<double> {
  using Real = lpr::Dual<T>;
  using NonInteger = lpr::Dual<T>;
  using Nested = lpr::Dual<T>;
  using Literal = lpr::Dual<T>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2 * NumTraits<T>::ReadCost,
    AddCost = 2 * NumTraits<T>::AddCost,
    MulCost = 3 * NumTraits<T>::MulCost,
  };
  static inline Real epsilon() { return Real(std::numeric_limits<double>::epsilon()); }
  static inline Real dummy_precision() { return Real(1e-12); }
  static inline Real highest() { return Real(std::numeric_limits<double>::max()); }
  static inline Real lowest() { return Real(std::numeric_limits<double>::lowest()); }
  static inline int digits10() { return std::numeric_limits<double>::digits10; }
};

}  // namespace Eigen
