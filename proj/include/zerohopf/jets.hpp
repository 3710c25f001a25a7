#pragma once

// Truncated multivariate Taylor-polynomial ("jet") arithmetic.
//
// A Jet represents the Taylor polynomial of a smooth germ around a base
// point, stored in Taylor convention: the coefficient of multi-index m is
// d^|m| f / dx^m / m!.  Truncation is governed by a per-variable degree cap
// and a total-degree cap; coefficients beyond either cap are dropped.

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace zerohopf::jets {

struct SpecMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DivisionSingularityError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ElemDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Truncation scheme shared by arithmetic-compatible jets.  Holds the
/// precomputed monomial layout: only multi-indices within every cap are
/// stored ("slots").
class JetSpec {
 public:
  static std::shared_ptr<const JetSpec> make(std::vector<int> per_var_caps,
                                             int total_degree_cap);

  int num_vars() const { return static_cast<int>(caps_.size()); }
  const std::vector<int>& per_var_caps() const { return caps_; }
  int total_degree_cap() const { return total_cap_; }
  int num_slots() const { return static_cast<int>(slot_to_box_.size()); }

  bool same(const JetSpec& other) const {
    return caps_ == other.caps_ && total_cap_ == other.total_cap_;
  }

  // slot <-> multi-index bookkeeping
  std::span<const std::uint8_t> mindex(int slot) const {
    return {mindex_.data() + static_cast<std::size_t>(slot) * num_vars(),
            static_cast<std::size_t>(num_vars())};
  }
  int total_degree(int slot) const { return tdeg_[slot]; }
  /// Slot of a multi-index, or -1 if outside the caps.
  int slot_of(std::span<const int> m) const;
  int box_of_slot(int slot) const { return slot_to_box_[slot]; }
  int slot_of_box(int box) const { return box_to_slot_[box]; }

 private:
  JetSpec() = default;
  std::vector<int> caps_;
  int total_cap_ = 0;
  std::vector<int> strides_;
  int box_size_ = 0;
  std::vector<int> box_to_slot_;   // -1 where masked by the total cap
  std::vector<int> slot_to_box_;
  std::vector<std::uint8_t> mindex_;  // per slot, num_vars entries
  std::vector<int> tdeg_;
};

using SpecPtr = std::shared_ptr<const JetSpec>;

class Jet {
 public:
  Jet() = default;
  explicit Jet(SpecPtr spec) : spec_(std::move(spec)), c_(spec_->num_slots(), 0.0) {}

  static Jet constant(SpecPtr spec, double value);
  /// base_value + the given variable (degree-1 monomial with coefficient 1).
  static Jet variable(SpecPtr spec, int var, double base_value);

  const SpecPtr& spec() const { return spec_; }
  bool valid() const { return spec_ != nullptr; }

  double value() const { return c_.empty() ? 0.0 : c_[0]; }
  double coeff(std::span<const int> m) const;
  void set_coeff(std::span<const int> m, double v);
  std::span<const double> raw() const { return c_; }
  std::span<double> raw() { return c_; }

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator+=(double s) { c_[0] += s; return *this; }
  Jet& operator-=(double s) { c_[0] -= s; return *this; }
  Jet& operator*=(double s);

  friend Jet operator+(Jet a, const Jet& b) { a += b; return a; }
  friend Jet operator-(Jet a, const Jet& b) { a -= b; return a; }
  friend Jet operator+(Jet a, double s) { a += s; return a; }
  friend Jet operator+(double s, Jet a) { a += s; return a; }
  friend Jet operator-(Jet a, double s) { a -= s; return a; }
  friend Jet operator-(double s, Jet a) { a *= -1.0; a += s; return a; }
  friend Jet operator*(Jet a, double s) { a *= s; return a; }
  friend Jet operator*(double s, Jet a) { a *= s; return a; }
  friend Jet operator/(Jet a, double s) { a *= 1.0 / s; return a; }
  friend Jet operator-(Jet a) { a *= -1.0; return a; }

  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator/(const Jet& a, const Jet& b);

  /// Formal derivative with respect to one variable (derivative of the
  /// represented polynomial; top-degree information is lost to truncation).
  Jet derivative(int var) const;

  /// Division by the variable itself.  Requires every coefficient with
  /// zero degree in `var` to vanish (up to `tol`).
  Jet shift_down(int var, double tol = 1e-9) const;

  /// Truncate/embed into another spec over the same variables.
  Jet reshaped(const SpecPtr& target) const;

 private:
  SpecPtr spec_;
  std::vector<double> c_;
};

enum class Elem { Sin, Cos, Sqrt, Reciprocal, Exp };

/// Composition f(a) via the Taylor series of f around a's constant term.
Jet jet_elem(Elem f, const Jet& a);

inline Jet sin(const Jet& a) { return jet_elem(Elem::Sin, a); }
inline Jet cos(const Jet& a) { return jet_elem(Elem::Cos, a); }
inline Jet sqrt(const Jet& a) { return jet_elem(Elem::Sqrt, a); }
inline Jet reciprocal(const Jet& a) { return jet_elem(Elem::Reciprocal, a); }
inline Jet exp(const Jet& a) { return jet_elem(Elem::Exp, a); }

/// Order-l symmetric derivative tensor of the germ at the base point, over
/// the selected variables, in derivative convention (coefficients rescaled
/// by the multinomial factors).  Entry (i1,...,il) = d^l f / dx_{i1}..dx_{il}.
/// Stored dense with size pow(#vars, l).
std::vector<double> extract_tensor(const Jet& j, std::span<const int> vars,
                                   int order);

}  // namespace zerohopf::jets
