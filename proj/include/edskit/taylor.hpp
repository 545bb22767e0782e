#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace edskit {

/// Maximum degree a single variable group may carry.
inline constexpr int kMaxTaylorDegree = 4;

/// A block of variables sharing one total-degree bound.
struct TaylorGroup {
  int vars = 0;
  int degree = 0;
  bool operator==(const TaylorGroup&) const = default;
};

/// Truncation pattern for multivariate Taylor coefficients.
///
/// Variables are split into groups. Inside a group the total degree of a
/// monomial is bounded by the group degree; degrees in different groups are
/// independent. A single group of `n` variables and degree `d` is the usual
/// total-degree truncation with C(n + d, d) coefficients. Appending a
/// one-variable, degree-one group gives a nilpotent direction (eps^2 = 0),
/// which is how nested derivatives stay exact without raising the degree of
/// the other variables.
///
/// Monomials are ordered mixed-radix over the groups with the last group
/// varying fastest, so extending a layout by one group keeps the old
/// coefficients at `index * group_size`. Layouts are interned and never
/// destroyed; pointers to them are stable for the life of the process.
class TaylorLayout {
 public:
  struct Product {
    int other;
    int result;
  };

  static const TaylorLayout* get(const std::vector<TaylorGroup>& groups);
  static const TaylorLayout* scalar();
  static const TaylorLayout* dense(int vars, int degree);

  const TaylorLayout* with_group(TaylorGroup group) const;

  const std::vector<TaylorGroup>& groups() const noexcept { return groups_; }
  int num_vars() const noexcept { return num_vars_; }
  int size() const noexcept { return size_; }
  /// Largest total degree of any monomial (sum of the group degrees).
  int max_degree() const noexcept { return max_degree_; }
  int last_group_size() const noexcept { return last_group_size_; }

  std::span<const std::uint8_t> exponents(int index) const {
    return {exponents_.data() + static_cast<std::size_t>(index) * num_vars_,
            static_cast<std::size_t>(num_vars_)};
  }
  int total_degree(int index) const noexcept { return degrees_[index]; }
  /// Index of the monomial with the given exponents, or -1 when truncated.
  int index_of(std::span<const std::uint8_t> exps) const;
  /// Index of the first-degree monomial of variable `var`.
  int unit_index(int var) const;

  /// For monomial `i`, every (j, k) with m_i * m_j = m_k inside the layout.
  std::span<const Product> products(int i) const {
    return {products_.data() + product_offsets_[i],
            product_offsets_[i + 1] - product_offsets_[i]};
  }

  std::string describe() const;

 private:
  explicit TaylorLayout(std::vector<TaylorGroup> groups);

  std::vector<TaylorGroup> groups_;
  int num_vars_ = 0;
  int size_ = 1;
  int max_degree_ = 0;
  int last_group_size_ = 1;
  std::vector<std::uint8_t> exponents_;
  std::vector<int> degrees_;
  std::vector<int> group_offsets_;   // first variable of each group
  std::vector<int> group_sizes_;     // monomial count of each group
  std::vector<std::vector<std::vector<std::uint8_t>>> group_monomials_;
  std::vector<Product> products_;
  std::vector<std::size_t> product_offsets_;
};

/// Truncated multivariate Taylor expansion of a scalar.
///
/// Coefficients are Taylor coefficients, f = sum c_a z^a, so a partial
/// derivative of multi-index a equals a! * c_a. A value on the scalar layout
/// (no variables) broadcasts against any layout.
class TaylorScalar {
 public:
  TaylorScalar() : layout_(TaylorLayout::scalar()), coeffs_(1, 0.0) {}
  TaylorScalar(double value) : layout_(TaylorLayout::scalar()), coeffs_(1, value) {}  // NOLINT
  TaylorScalar(const TaylorLayout* layout, double value);

  static TaylorScalar variable(const TaylorLayout* layout, int var, double value);

  const TaylorLayout* layout() const noexcept { return layout_; }
  bool is_scalar() const noexcept { return layout_->num_vars() == 0; }
  double value() const noexcept { return coeffs_[0]; }

  std::span<const double> coefficients() const noexcept { return coeffs_; }
  std::span<double> coefficients() noexcept { return coeffs_; }
  double coefficient(int index) const { return coeffs_[index]; }
  double coefficient(std::span<const std::uint8_t> exps) const;
  /// Partial derivative with the given multi-index (a! * c_a).
  double derivative(std::span<const std::uint8_t> exps) const;
  /// First partial derivative with respect to variable `var`.
  double gradient(int var) const;

  /// Same value on `target`; only the scalar layout may be promoted.
  TaylorScalar on(const TaylorLayout* target) const;
  /// Copy with the constant term removed.
  TaylorScalar nilpotent_part() const;

  /// Embeds into `extended`, which must be this layout plus trailing groups.
  TaylorScalar embed(const TaylorLayout* extended) const;
  /// For a layout whose last group is a single variable, the coefficient
  /// polynomial of eps^power as a value on `reduced` (the layout without it).
  TaylorScalar last_variable_slice(const TaylorLayout* reduced, int power) const;

  TaylorScalar& operator+=(const TaylorScalar& rhs);
  TaylorScalar& operator-=(const TaylorScalar& rhs);
  TaylorScalar& operator*=(const TaylorScalar& rhs);
  TaylorScalar& operator/=(const TaylorScalar& rhs);
  TaylorScalar& operator+=(double rhs) {
    coeffs_[0] += rhs;
    return *this;
  }
  TaylorScalar& operator-=(double rhs) {
    coeffs_[0] -= rhs;
    return *this;
  }
  TaylorScalar& operator*=(double rhs);
  TaylorScalar& operator/=(double rhs);

  TaylorScalar operator-() const;

  friend TaylorScalar operator+(TaylorScalar a, const TaylorScalar& b) { return a += b; }
  friend TaylorScalar operator-(TaylorScalar a, const TaylorScalar& b) { return a -= b; }
  friend TaylorScalar operator*(const TaylorScalar& a, const TaylorScalar& b);
  friend TaylorScalar operator/(const TaylorScalar& a, const TaylorScalar& b);
  friend TaylorScalar operator+(TaylorScalar a, double b) { return a += b; }
  friend TaylorScalar operator+(double a, TaylorScalar b) { return b += a; }
  friend TaylorScalar operator-(TaylorScalar a, double b) { return a -= b; }
  friend TaylorScalar operator-(double a, const TaylorScalar& b) { return (-b) += a; }
  friend TaylorScalar operator*(TaylorScalar a, double b) { return a *= b; }
  friend TaylorScalar operator*(double a, TaylorScalar b) { return b *= a; }
  friend TaylorScalar operator/(TaylorScalar a, double b) { return a /= b; }
  friend TaylorScalar operator/(double a, const TaylorScalar& b);

 private:
  const TaylorLayout* layout_;
  std::vector<double> coeffs_;
};

/// Denominators whose constant term is below this magnitude are singular.
inline constexpr double kSingularThreshold = 1e-12;

TaylorScalar reciprocal(const TaylorScalar& a);
TaylorScalar sqrt(const TaylorScalar& a);
TaylorScalar pow(const TaylorScalar& a, double exponent);
TaylorScalar pow(const TaylorScalar& a, int exponent);
TaylorScalar exp(const TaylorScalar& a);
/// Needs a positive value.
TaylorScalar log(const TaylorScalar& a);
TaylorScalar sin(const TaylorScalar& a);
TaylorScalar cos(const TaylorScalar& a);
TaylorScalar abs(const TaylorScalar& a);

/// Applies sum_k series[k] * (a - a0)^k, series.size() <= max_degree + 1.
TaylorScalar compose(const TaylorScalar& a, std::span<const double> series);

}  // namespace edskit
