#pragma once

// Truncated multivariate Taylor polynomials ("jets") with a fixed number of
// real variables N and total degree D. Arithmetic is exact on the retained
// coefficients, so evaluating a closed-form potential on jets yields all of
// its partial derivatives up to order D at the expansion point.

#include <array>
#include <cmath>
#include <complex>
#include <type_traits>
#include <vector>

namespace trgeom {

namespace detail {

constexpr int binomial(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return static_cast<int>(r);
}

constexpr double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

}  // namespace detail

template <int N, int D>
class MonomialTable {
 public:
  static constexpr int kSize = detail::binomial(N + D, D);
  using Exponent = std::array<int, N>;

  struct Product {
    int lhs, rhs, out;
  };
  struct DerivativeEntry {
    int from, to;
    double factor;
  };

  static const MonomialTable& get() {
    static const MonomialTable table;
    return table;
  }

  const Exponent& exponent(int i) const { return exps_[i]; }
  int degree(int i) const { return degree_[i]; }
  const std::vector<Product>& products() const { return products_; }
  const std::vector<DerivativeEntry>& derivative(int var) const { return deriv_[var]; }

  int index(const Exponent& e) const {
    int code = 0;
    int total = 0;
    for (int v = N - 1; v >= 0; --v) {
      if (e[v] < 0) return -1;
      total += e[v];
      code = code * (D + 1) + e[v];
    }
    if (total > D) return -1;
    return lookup_[code];
  }

 private:
  MonomialTable() {
    int pow = 1;
    for (int v = 0; v < N; ++v) pow *= (D + 1);
    lookup_.assign(pow, -1);
    int count = 0;
    for (int deg = 0; deg <= D; ++deg) {
      Exponent e{};
      enumerate(e, 0, deg, count);
    }
    for (int i = 0; i < kSize; ++i) {
      for (int j = 0; j < kSize; ++j) {
        if (degree_[i] + degree_[j] > D) continue;
        Exponent s{};
        for (int v = 0; v < N; ++v) s[v] = exps_[i][v] + exps_[j][v];
        products_.push_back({i, j, index(s)});
      }
    }
    for (int v = 0; v < N; ++v) {
      for (int i = 0; i < kSize; ++i) {
        if (exps_[i][v] == 0) continue;
        Exponent s = exps_[i];
        s[v] -= 1;
        deriv_[v].push_back({i, index(s), static_cast<double>(exps_[i][v])});
      }
    }
  }

  void enumerate(Exponent& e, int var, int remaining, int& count) {
    if (var == N - 1) {
      e[var] = remaining;
      exps_[count] = e;
      degree_[count] = 0;
      for (int v = 0; v < N; ++v) degree_[count] += e[v];
      int code = 0;
      for (int w = N - 1; w >= 0; --w) code = code * (D + 1) + e[w];
      lookup_[code] = count;
      ++count;
      return;
    }
    for (int k = remaining; k >= 0; --k) {
      e[var] = k;
      enumerate(e, var + 1, remaining - k, count);
    }
  }

  std::array<Exponent, kSize> exps_{};
  std::array<int, kSize> degree_{};
  std::vector<int> lookup_;
  std::vector<Product> products_;
  std::array<std::vector<DerivativeEntry>, N> deriv_;
};

template <class T, int N, int D>
class Jet {
 public:
  using Scalar = T;
  using Table = MonomialTable<N, D>;
  static constexpr int kVars = N;
  static constexpr int kDegree = D;
  static constexpr int kSize = Table::kSize;

  Jet() { c_.fill(T(0)); }
  Jet(T value) {  // NOLINT(google-explicit-constructor)
    c_.fill(T(0));
    c_[0] = value;
  }
  template <class U, class = std::enable_if_t<std::is_arithmetic_v<U> && !std::is_same_v<U, T>>>
  Jet(U value) : Jet(T(value)) {}  // NOLINT(google-explicit-constructor)

  static Jet variable(int var, T value) {
    Jet j(value);
    if constexpr (D >= 1) {
      typename Table::Exponent e{};
      e[var] = 1;
      j.c_[Table::get().index(e)] = T(1);
    }
    return j;
  }

  T value() const { return c_[0]; }
  T& operator[](int i) { return c_[i]; }
  const T& operator[](int i) const { return c_[i]; }

  T coeff(const typename Table::Exponent& e) const {
    int i = Table::get().index(e);
    return i < 0 ? T(0) : c_[i];
  }

  /// Partial derivative d^{|e|} / dx^e at the expansion point.
  T partial(const typename Table::Exponent& e) const {
    double f = 1.0;
    for (int v = 0; v < N; ++v) f *= detail::factorial(e[v]);
    return coeff(e) * f;
  }

  /// Exact on the retained coefficients; the top-degree part is lost.
  Jet derivative(int var) const {
    Jet out;
    for (const auto& d : Table::get().derivative(var)) out.c_[d.to] += d.factor * c_[d.from];
    return out;
  }

  Jet& operator+=(const Jet& o) {
    for (int i = 0; i < kSize; ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (int i = 0; i < kSize; ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    *this = *this * o;
    return *this;
  }
  Jet& operator/=(const Jet& o) {
    *this = *this / o;
    return *this;
  }
  Jet& operator*=(T s) {
    for (auto& x : c_) x *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(Jet a) {
    for (auto& x : a.c_) x = -x;
    return a;
  }
  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet out;
    for (const auto& p : Table::get().products()) out.c_[p.out] += a.c_[p.lhs] * b.c_[p.rhs];
    return out;
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }

  // Scalar overloads avoid a full jet product; U is any type convertible to T.
  template <class U, class = std::enable_if_t<std::is_convertible_v<U, T>>>
  friend Jet operator*(Jet a, U s) {
    return a *= T(s);
  }
  template <class U, class = std::enable_if_t<std::is_convertible_v<U, T>>>
  friend Jet operator*(U s, Jet a) {
    return a *= T(s);
  }
  template <class U, class = std::enable_if_t<std::is_convertible_v<U, T>>>
  friend Jet operator/(Jet a, U s) {
    return a *= (T(1) / T(s));
  }
  template <class U, class = std::enable_if_t<std::is_convertible_v<U, T>>>
  friend Jet operator/(U s, const Jet& b) {
    return reciprocal(b) * T(s);
  }
  template <class U, class = std::enable_if_t<std::is_convertible_v<U, T>>>
  friend Jet operator+(Jet a, U s) {
    a.c_[0] += T(s);
    return a;
  }
  template <class U, class = std::enable_if_t<std::is_convertible_v<U, T>>>
  friend Jet operator+(U s, Jet a) {
    a.c_[0] += T(s);
    return a;
  }
  template <class U, class = std::enable_if_t<std::is_convertible_v<U, T>>>
  friend Jet operator-(Jet a, U s) {
    a.c_[0] -= T(s);
    return a;
  }
  template <class U, class = std::enable_if_t<std::is_convertible_v<U, T>>>
  friend Jet operator-(U s, Jet a) {
    for (auto& x : a.c_) x = -x;
    a.c_[0] += T(s);
    return a;
  }

  /// f(x0 + delta) = sum_k f^(k)(x0) / k! delta^k, delta nilpotent of order D+1.
  static Jet compose(const Jet& x, const std::array<T, D + 1>& derivs) {
    Jet delta = x;
    delta.c_[0] = T(0);
    Jet out(derivs[0]);
    Jet power(T(1));
    for (int k = 1; k <= D; ++k) {
      power = power * delta;
      out += power * (derivs[k] / T(detail::factorial(k)));
    }
    return out;
  }

  friend Jet reciprocal(const Jet& x) {
    std::array<T, D + 1> d{};
    T x0 = x.value();
    T inv = T(1) / x0;
    T p = inv;
    for (int k = 0; k <= D; ++k) {
      d[k] = ((k % 2) ? T(-1) : T(1)) * T(detail::factorial(k)) * p;
      p *= inv;
    }
    return compose(x, d);
  }
  friend Jet exp(const Jet& x) {
    using std::exp;
    std::array<T, D + 1> d{};
    d.fill(exp(x.value()));
    return compose(x, d);
  }
  friend Jet log(const Jet& x) {
    using std::log;
    std::array<T, D + 1> d{};
    T x0 = x.value();
    d[0] = log(x0);
    T p = T(1) / x0;
    for (int k = 1; k <= D; ++k) {
      d[k] = ((k % 2) ? T(1) : T(-1)) * T(detail::factorial(k - 1)) * p;
      p /= x0;
    }
    return compose(x, d);
  }
  friend Jet pow(const Jet& x, double e) {
    using std::pow;
    std::array<T, D + 1> d{};
    T x0 = x.value();
    double coef = 1.0;
    for (int k = 0; k <= D; ++k) {
      d[k] = T(coef) * pow(x0, T(e - k));
      coef *= (e - k);
    }
    return compose(x, d);
  }
  friend Jet sqrt(const Jet& x) { return pow(x, 0.5); }
  friend Jet sin(const Jet& x) {
    using std::cos;
    using std::sin;
    std::array<T, D + 1> d{};
    T s = sin(x.value()), c = cos(x.value());
    const T cyc[4] = {s, c, -s, -c};
    for (int k = 0; k <= D; ++k) d[k] = cyc[k % 4];
    return compose(x, d);
  }
  friend Jet cos(const Jet& x) {
    using std::cos;
    using std::sin;
    std::array<T, D + 1> d{};
    T s = sin(x.value()), c = cos(x.value());
    const T cyc[4] = {c, -s, -c, s};
    for (int k = 0; k <= D; ++k) d[k] = cyc[k % 4];
    return compose(x, d);
  }

 private:
  std::array<T, kSize> c_;
};

// Scalar-type plumbing so the same templated formula runs on doubles and jets.

template <class S>
struct ComplexOf {
  using type = std::complex<S>;
};
template <int N, int D>
struct ComplexOf<Jet<double, N, D>> {
  using type = Jet<std::complex<double>, N, D>;
};
template <class S>
using complex_of_t = typename ComplexOf<S>::type;

inline std::complex<double> make_complex(double re, double im) { return {re, im}; }

template <int N, int D>
Jet<std::complex<double>, N, D> make_complex(const Jet<double, N, D>& re, const Jet<double, N, D>& im) {
  Jet<std::complex<double>, N, D> out;
  for (int i = 0; i < Jet<double, N, D>::kSize; ++i) out[i] = {re[i], im[i]};
  return out;
}

inline double real_part(std::complex<double> z) { return z.real(); }

template <int N, int D>
Jet<double, N, D> real_part(const Jet<std::complex<double>, N, D>& z) {
  Jet<double, N, D> out;
  for (int i = 0; i < Jet<double, N, D>::kSize; ++i) out[i] = z[i].real();
  return out;
}

template <int N, int D>
Jet<std::complex<double>, N, D> to_complex(const Jet<double, N, D>& x) {
  return make_complex(x, Jet<double, N, D>(0.0));
}

inline std::complex<double> to_complex(double x) { return {x, 0.0}; }

}  // namespace trgeom
