#include "edskit/taylor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "edskit/errors.hpp"

namespace edskit {

namespace {

using Monomial = std::vector<std::uint8_t>;

// Graded-lex enumeration of the exponent vectors of `vars` variables with
// total degree <= degree. The constant monomial comes first.
std::vector<Monomial> enumerate_group(int vars, int degree) {
  std::vector<Monomial> out;
  Monomial current(vars, 0);
  for (int total = 0; total <= degree; ++total) {
    // exponent vectors with sum == total, lexicographically descending
    auto recurse = [&](auto&& self, int pos, int remaining) -> void {
      if (pos == vars - 1) {
        current[pos] = static_cast<std::uint8_t>(remaining);
        out.push_back(current);
        return;
      }
      for (int e = remaining; e >= 0; --e) {
        current[pos] = static_cast<std::uint8_t>(e);
        self(self, pos + 1, remaining - e);
      }
    };
    if (vars == 0) {
      if (total == 0) out.push_back(current);
      continue;
    }
    recurse(recurse, 0, total);
  }
  return out;
}

struct GroupTables {
  std::vector<Monomial> monomials;
  std::map<Monomial, int> index;
  std::vector<int> product;  // size*size, -1 when truncated
};

GroupTables build_group(const TaylorGroup& g) {
  GroupTables tables;
  tables.monomials = enumerate_group(g.vars, g.degree);
  const int n = static_cast<int>(tables.monomials.size());
  for (int i = 0; i < n; ++i) tables.index.emplace(tables.monomials[i], i);
  tables.product.assign(static_cast<std::size_t>(n) * n, -1);
  Monomial sum(g.vars);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      int deg = 0;
      for (int v = 0; v < g.vars; ++v) {
        sum[v] = static_cast<std::uint8_t>(tables.monomials[i][v] + tables.monomials[j][v]);
        deg += sum[v];
      }
      if (deg > g.degree) continue;
      tables.product[static_cast<std::size_t>(i) * n + j] = tables.index.at(sum);
    }
  }
  return tables;
}

struct Registry {
  std::mutex mutex;
  std::map<std::vector<std::pair<int, int>>, std::unique_ptr<TaylorLayout>> layouts;
};

Registry& registry() {
  static Registry r;
  return r;
}

std::vector<std::pair<int, int>> key_of(const std::vector<TaylorGroup>& groups) {
  std::vector<std::pair<int, int>> key;
  key.reserve(groups.size());
  for (const auto& g : groups) key.emplace_back(g.vars, g.degree);
  return key;
}

// Groups with zero variables or zero degree carry no monomials beyond the
// constant and are dropped so equivalent layouts intern to one object.
std::vector<TaylorGroup> normalized(const std::vector<TaylorGroup>& groups) {
  std::vector<TaylorGroup> out;
  for (const auto& g : groups) {
    if (g.vars < 0 || g.degree < 0) throw ConfigurationError("negative Taylor group size");
    if (g.degree > kMaxTaylorDegree)
      throw ConfigurationError("Taylor degree " + std::to_string(g.degree) +
                               " exceeds the supported maximum " +
                               std::to_string(kMaxTaylorDegree));
    if (g.vars > 0 && g.degree > 0) out.push_back(g);
  }
  return out;
}

const std::vector<double>& factorials() {
  static const std::vector<double> f = [] {
    std::vector<double> v(64, 1.0);
    for (std::size_t i = 1; i < v.size(); ++i) v[i] = v[i - 1] * static_cast<double>(i);
    return v;
  }();
  return f;
}

}  // namespace

TaylorLayout::TaylorLayout(std::vector<TaylorGroup> groups) : groups_(std::move(groups)) {
  std::vector<GroupTables> tables;
  tables.reserve(groups_.size());
  for (const auto& g : groups_) {
    group_offsets_.push_back(num_vars_);
    num_vars_ += g.vars;
    max_degree_ += g.degree;
    tables.push_back(build_group(g));
    group_sizes_.push_back(static_cast<int>(tables.back().monomials.size()));
    size_ *= group_sizes_.back();
  }
  last_group_size_ = groups_.empty() ? 1 : group_sizes_.back();
  for (auto& t : tables) group_monomials_.push_back(t.monomials);

  const std::size_t ng = groups_.size();
  std::vector<std::vector<int>> digits(size_, std::vector<int>(ng, 0));
  exponents_.assign(static_cast<std::size_t>(size_) * num_vars_, 0);
  degrees_.assign(size_, 0);
  for (int idx = 0; idx < size_; ++idx) {
    int rest = idx;
    for (std::size_t g = ng; g-- > 0;) {
      digits[idx][g] = rest % group_sizes_[g];
      rest /= group_sizes_[g];
    }
    for (std::size_t g = 0; g < ng; ++g) {
      const auto& mono = tables[g].monomials[digits[idx][g]];
      for (int v = 0; v < groups_[g].vars; ++v) {
        exponents_[static_cast<std::size_t>(idx) * num_vars_ + group_offsets_[g] + v] = mono[v];
        degrees_[idx] += mono[v];
      }
    }
  }

  product_offsets_.assign(static_cast<std::size_t>(size_) + 1, 0);
  for (int i = 0; i < size_; ++i) {
    for (int j = 0; j < size_; ++j) {
      int k = 0;
      bool ok = true;
      for (std::size_t g = 0; g < ng; ++g) {
        const int gs = group_sizes_[g];
        const int p = tables[g].product[static_cast<std::size_t>(digits[i][g]) * gs + digits[j][g]];
        if (p < 0) {
          ok = false;
          break;
        }
        k = k * gs + p;
      }
      if (ok) products_.push_back({j, k});
    }
    product_offsets_[i + 1] = products_.size();
  }
}

const TaylorLayout* TaylorLayout::get(const std::vector<TaylorGroup>& groups) {
  auto norm = normalized(groups);
  auto key = key_of(norm);
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  auto it = reg.layouts.find(key);
  if (it != reg.layouts.end()) return it->second.get();
  auto* layout = new TaylorLayout(std::move(norm));
  reg.layouts.emplace(std::move(key), std::unique_ptr<TaylorLayout>(layout));
  return layout;
}

const TaylorLayout* TaylorLayout::scalar() {
  static const TaylorLayout* s = get({});
  return s;
}

const TaylorLayout* TaylorLayout::dense(int vars, int degree) { return get({{vars, degree}}); }

const TaylorLayout* TaylorLayout::with_group(TaylorGroup group) const {
  auto groups = groups_;
  groups.push_back(group);
  return get(groups);
}

int TaylorLayout::index_of(std::span<const std::uint8_t> exps) const {
  int idx = 0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const auto& monos = group_monomials_[g];
    const int off = group_offsets_[g];
    int deg = 0;
    for (int v = 0; v < groups_[g].vars; ++v) deg += exps[off + v];
    if (deg > groups_[g].degree) return -1;
    auto it = std::find_if(monos.begin(), monos.end(), [&](const Monomial& m) {
      return std::equal(m.begin(), m.end(), exps.begin() + off);
    });
    idx = idx * group_sizes_[g] + static_cast<int>(it - monos.begin());
  }
  return idx;
}

int TaylorLayout::unit_index(int var) const {
  Monomial e(num_vars_, 0);
  e.at(var) = 1;
  return index_of(e);
}

std::string TaylorLayout::describe() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (g) os << ',';
    os << '(' << groups_[g].vars << ',' << groups_[g].degree << ')';
  }
  os << ']';
  return os.str();
}

TaylorScalar::TaylorScalar(const TaylorLayout* layout, double value)
    : layout_(layout), coeffs_(layout->size(), 0.0) {
  coeffs_[0] = value;
}

TaylorScalar TaylorScalar::variable(const TaylorLayout* layout, int var, double value) {
  TaylorScalar out(layout, value);
  out.coeffs_[layout->unit_index(var)] = 1.0;
  return out;
}

double TaylorScalar::coefficient(std::span<const std::uint8_t> exps) const {
  const int idx = layout_->index_of(exps);
  return idx < 0 ? 0.0 : coeffs_[idx];
}

double TaylorScalar::derivative(std::span<const std::uint8_t> exps) const {
  double scale = 1.0;
  for (auto e : exps) scale *= factorials()[e];
  return scale * coefficient(exps);
}

double TaylorScalar::gradient(int var) const {
  if (var < 0 || var >= layout_->num_vars()) return 0.0;
  return coeffs_[layout_->unit_index(var)];
}

TaylorScalar TaylorScalar::on(const TaylorLayout* target) const {
  if (target == layout_) return *this;
  if (!is_scalar()) throw ConfigurationError("cannot move a Taylor value between layouts");
  return TaylorScalar(target, coeffs_[0]);
}

TaylorScalar TaylorScalar::nilpotent_part() const {
  TaylorScalar out = *this;
  out.coeffs_[0] = 0.0;
  return out;
}

TaylorScalar TaylorScalar::embed(const TaylorLayout* extended) const {
  if (extended == layout_) return *this;
  if (is_scalar()) return TaylorScalar(extended, coeffs_[0]);
  const auto& mine = layout_->groups();
  const auto& theirs = extended->groups();
  if (theirs.size() < mine.size() || !std::equal(mine.begin(), mine.end(), theirs.begin()))
    throw ConfigurationError("embed target does not extend " + layout_->describe());
  const int factor = extended->size() / layout_->size();
  TaylorScalar out(extended, 0.0);
  for (int i = 0; i < layout_->size(); ++i) out.coeffs_[static_cast<std::size_t>(i) * factor] = coeffs_[i];
  return out;
}

TaylorScalar TaylorScalar::last_variable_slice(const TaylorLayout* reduced, int power) const {
  const int gs = layout_->last_group_size();
  if (is_scalar()) return TaylorScalar(reduced, power == 0 ? coeffs_[0] : 0.0);
  if (layout_->groups().back().vars != 1 || reduced->size() * gs != layout_->size())
    throw ConfigurationError("slice layout mismatch");
  TaylorScalar out(reduced, 0.0);
  if (power >= gs) return out;
  for (int i = 0; i < reduced->size(); ++i)
    out.coeffs_[i] = coeffs_[static_cast<std::size_t>(i) * gs + power];
  return out;
}

TaylorScalar& TaylorScalar::operator+=(const TaylorScalar& rhs) {
  if (rhs.layout_ == layout_) {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += rhs.coeffs_[i];
  } else if (rhs.is_scalar()) {
    coeffs_[0] += rhs.coeffs_[0];
  } else if (is_scalar()) {
    const double c = coeffs_[0];
    *this = rhs;
    coeffs_[0] += c;
  } else {
    throw ConfigurationError("Taylor layout mismatch in addition");
  }
  return *this;
}

TaylorScalar& TaylorScalar::operator-=(const TaylorScalar& rhs) {
  if (rhs.layout_ == layout_) {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] -= rhs.coeffs_[i];
  } else if (rhs.is_scalar()) {
    coeffs_[0] -= rhs.coeffs_[0];
  } else if (is_scalar()) {
    const double c = coeffs_[0];
    *this = -rhs;
    coeffs_[0] += c;
  } else {
    throw ConfigurationError("Taylor layout mismatch in subtraction");
  }
  return *this;
}

TaylorScalar& TaylorScalar::operator*=(double rhs) {
  for (auto& c : coeffs_) c *= rhs;
  return *this;
}

TaylorScalar& TaylorScalar::operator/=(double rhs) {
  if (std::abs(rhs) < kSingularThreshold) throw SingularDenominator("division by a vanishing constant");
  for (auto& c : coeffs_) c /= rhs;
  return *this;
}

TaylorScalar TaylorScalar::operator-() const {
  TaylorScalar out = *this;
  for (auto& c : out.coeffs_) c = -c;
  return out;
}

TaylorScalar& TaylorScalar::operator*=(const TaylorScalar& rhs) {
  *this = *this * rhs;
  return *this;
}

TaylorScalar& TaylorScalar::operator/=(const TaylorScalar& rhs) {
  *this = *this / rhs;
  return *this;
}

TaylorScalar operator*(const TaylorScalar& a, const TaylorScalar& b) {
  if (b.is_scalar()) return a * b.coeffs_[0];
  if (a.is_scalar()) return b * a.coeffs_[0];
  if (a.layout_ != b.layout_) throw ConfigurationError("Taylor layout mismatch in product");
  const TaylorLayout* layout = a.layout_;
  const int n = layout->size();
  // iterate over the sparser operand
  int nza = 0, nzb = 0;
  for (int i = 0; i < n; ++i) {
    nza += a.coeffs_[i] != 0.0;
    nzb += b.coeffs_[i] != 0.0;
  }
  const TaylorScalar& outer = nza <= nzb ? a : b;
  const TaylorScalar& inner = nza <= nzb ? b : a;
  TaylorScalar out(layout, 0.0);
  double* dst = out.coeffs_.data();
  const double* src = inner.coeffs_.data();
  for (int i = 0; i < n; ++i) {
    const double ai = outer.coeffs_[i];
    if (ai == 0.0) continue;
    for (const auto& p : layout->products(i)) dst[p.result] += ai * src[p.other];
  }
  return out;
}

TaylorScalar operator/(const TaylorScalar& a, const TaylorScalar& b) {
  if (b.is_scalar()) {
    if (std::abs(b.coeffs_[0]) < kSingularThreshold)
      throw SingularDenominator("division by a vanishing constant");
    return a * (1.0 / b.coeffs_[0]);
  }
  return a * reciprocal(b);
}

TaylorScalar operator/(double a, const TaylorScalar& b) { return reciprocal(b) * a; }

TaylorScalar compose(const TaylorScalar& a, std::span<const double> series) {
  if (series.empty()) return TaylorScalar(a.layout(), 0.0);
  const int k_max = std::min<int>(static_cast<int>(series.size()) - 1, a.layout()->max_degree());
  if (a.is_scalar() || k_max == 0) return TaylorScalar(a.layout(), series[0]);
  const TaylorScalar h = a.nilpotent_part();
  TaylorScalar r(a.layout(), series[k_max]);
  for (int k = k_max - 1; k >= 0; --k) {
    r = r * h;
    r += series[k];
  }
  return r;
}

namespace {

int series_length(const TaylorScalar& a) { return a.layout()->max_degree() + 1; }

// Binomial-series coefficients of x^r about x0 > 0.
std::vector<double> power_series(double x0, double r, int n) {
  std::vector<double> s(n);
  double binom = 1.0;
  for (int k = 0; k < n; ++k) {
    s[k] = binom * std::pow(x0, r - k);
    binom *= (r - k) / (k + 1);
  }
  return s;
}

}  // namespace

TaylorScalar reciprocal(const TaylorScalar& a) {
  const double a0 = a.value();
  if (std::abs(a0) < kSingularThreshold || !std::isfinite(a0))
    throw SingularDenominator("singular denominator (constant term " + std::to_string(a0) + ")");
  const int n = series_length(a);
  std::vector<double> s(n);
  double term = 1.0 / a0;
  for (int k = 0; k < n; ++k) {
    s[k] = term;
    term *= -1.0 / a0;
  }
  return compose(a, s);
}

TaylorScalar sqrt(const TaylorScalar& a) {
  const double a0 = a.value();
  if (a0 < 0.0) throw DomainError("sqrt of a negative value (" + std::to_string(a0) + ")");
  if (a0 == 0.0) {
    if (a.is_scalar()) return TaylorScalar(0.0);
    throw DomainError("sqrt is not differentiable at zero");
  }
  return compose(a, power_series(a0, 0.5, series_length(a)));
}

TaylorScalar pow(const TaylorScalar& a, int exponent) {
  if (exponent < 0) return reciprocal(pow(a, -exponent));
  TaylorScalar result(a.layout(), 1.0);
  TaylorScalar base = a;
  unsigned e = static_cast<unsigned>(exponent);
  while (e) {
    if (e & 1u) result = result * base;
    e >>= 1u;
    if (e) base = base * base;
  }
  return result;
}

TaylorScalar pow(const TaylorScalar& a, double exponent) {
  if (std::nearbyint(exponent) == exponent && std::abs(exponent) <= 64.0)
    return pow(a, static_cast<int>(exponent));
  const double a0 = a.value();
  if (!(a0 > 0.0))
    throw DomainError("non-integer power needs a positive base (got " + std::to_string(a0) + ")");
  return compose(a, power_series(a0, exponent, series_length(a)));
}

TaylorScalar exp(const TaylorScalar& a) {
  const int n = series_length(a);
  std::vector<double> s(n);
  const double e0 = std::exp(a.value());
  for (int k = 0; k < n; ++k) s[k] = e0 / factorials()[k];
  return compose(a, s);
}

TaylorScalar log(const TaylorScalar& a) {
  const double a0 = a.value();
  if (!(a0 > 0.0)) throw DomainError("log needs a positive argument (got " + std::to_string(a0) + ")");
  const int n = series_length(a);
  std::vector<double> s(n);
  s[0] = std::log(a0);
  for (int k = 1; k < n; ++k) s[k] = (k % 2 ? 1.0 : -1.0) / (k * std::pow(a0, k));
  return compose(a, s);
}

TaylorScalar sin(const TaylorScalar& a) {
  const int n = series_length(a);
  const double sv = std::sin(a.value()), cv = std::cos(a.value());
  const double cycle[4] = {sv, cv, -sv, -cv};
  std::vector<double> s(n);
  for (int k = 0; k < n; ++k) s[k] = cycle[k % 4] / factorials()[k];
  return compose(a, s);
}

TaylorScalar cos(const TaylorScalar& a) {
  const int n = series_length(a);
  const double sv = std::sin(a.value()), cv = std::cos(a.value());
  const double cycle[4] = {cv, -sv, -cv, sv};
  std::vector<double> s(n);
  for (int k = 0; k < n; ++k) s[k] = cycle[k % 4] / factorials()[k];
  return compose(a, s);
}

TaylorScalar abs(const TaylorScalar& a) {
  const double a0 = a.value();
  if (a0 > 0.0) return a;
  if (a0 < 0.0) return -a;
  if (a.is_scalar()) return a;
  throw DomainError("abs is not differentiable at zero");
}

}  // namespace edskit
