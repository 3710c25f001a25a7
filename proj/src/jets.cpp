#include "zerohopf/jets.hpp"

#include <algorithm>
#include <numeric>

namespace zerohopf::jets {

std::shared_ptr<const JetSpec> JetSpec::make(std::vector<int> per_var_caps,
                                             int total_degree_cap) {
  if (per_var_caps.empty()) throw std::invalid_argument("JetSpec: no variables");
  for (int c : per_var_caps)
    if (c < 0) throw std::invalid_argument("JetSpec: negative degree cap");
  if (total_degree_cap < 0)
    throw std::invalid_argument("JetSpec: negative total cap");

  auto spec = std::shared_ptr<JetSpec>(new JetSpec());
  spec->caps_ = std::move(per_var_caps);
  spec->total_cap_ = total_degree_cap;

  const int n = spec->num_vars();
  spec->strides_.assign(n, 1);
  for (int v = 1; v < n; ++v)
    spec->strides_[v] = spec->strides_[v - 1] * (spec->caps_[v - 1] + 1);
  spec->box_size_ = spec->strides_[n - 1] * (spec->caps_[n - 1] + 1);

  spec->box_to_slot_.assign(spec->box_size_, -1);
  std::vector<int> m(n, 0);
  for (int box = 0; box < spec->box_size_; ++box) {
    int rem = box, tdeg = 0;
    for (int v = n - 1; v >= 0; --v) {
      m[v] = rem / spec->strides_[v];
      rem %= spec->strides_[v];
      tdeg += m[v];
    }
    if (tdeg > spec->total_cap_) continue;
    spec->box_to_slot_[box] = static_cast<int>(spec->slot_to_box_.size());
    spec->slot_to_box_.push_back(box);
    spec->tdeg_.push_back(tdeg);
    for (int v = 0; v < n; ++v)
      spec->mindex_.push_back(static_cast<std::uint8_t>(m[v]));
  }
  return spec;
}

int JetSpec::slot_of(std::span<const int> m) const {
  if (static_cast<int>(m.size()) != num_vars())
    throw std::invalid_argument("multi-index arity mismatch");
  int box = 0;
  for (int v = 0; v < num_vars(); ++v) {
    if (m[v] < 0 || m[v] > caps_[v]) return -1;
    box += m[v] * strides_[v];
  }
  return box_to_slot_[box];
}

namespace {
void require_same(const Jet& a, const Jet& b) {
  if (!a.valid() || !b.valid())
    throw SpecMismatchError("operation on default-constructed jet");
  if (a.spec().get() != b.spec().get() && !a.spec()->same(*b.spec()))
    throw SpecMismatchError("incompatible jet specs");
}
}  // namespace

Jet Jet::constant(SpecPtr spec, double value) {
  Jet j(std::move(spec));
  j.c_[0] = value;
  return j;
}

Jet Jet::variable(SpecPtr spec, int var, double base_value) {
  Jet j(spec);
  j.c_[0] = base_value;
  std::vector<int> m(spec->num_vars(), 0);
  m[var] = 1;
  int s = spec->slot_of(m);
  if (s < 0) throw std::invalid_argument("variable exceeds degree caps");
  j.c_[s] = 1.0;
  return j;
}

double Jet::coeff(std::span<const int> m) const {
  int s = spec_->slot_of(m);
  return s < 0 ? 0.0 : c_[s];
}

void Jet::set_coeff(std::span<const int> m, double v) {
  int s = spec_->slot_of(m);
  if (s < 0) throw std::invalid_argument("multi-index outside degree caps");
  c_[s] = v;
}

Jet& Jet::operator+=(const Jet& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  require_same(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& x : c_) x *= s;
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  require_same(a, b);
  const JetSpec& sp = *a.spec_;
  const int n = sp.num_vars();
  const auto& caps = sp.per_var_caps();
  Jet out(a.spec_);
  const int ns = sp.num_slots();
  for (int i = 0; i < ns; ++i) {
    const double ai = a.c_[i];
    if (ai == 0.0) continue;
    const auto mi = sp.mindex(i);
    const int ti = sp.total_degree(i);
    for (int j = 0; j < ns; ++j) {
      const double bj = b.c_[j];
      if (bj == 0.0) continue;
      if (ti + sp.total_degree(j) > sp.total_degree_cap()) continue;
      const auto mj = sp.mindex(j);
      bool ok = true;
      for (int v = 0; v < n; ++v)
        if (mi[v] + mj[v] > caps[v]) { ok = false; break; }
      if (!ok) continue;
      // strides are positional, so box indices add carry-free here
      int slot = sp.slot_of_box(sp.box_of_slot(i) + sp.box_of_slot(j));
      out.c_[slot] += ai * bj;
    }
  }
  return out;
}

Jet operator/(const Jet& a, const Jet& b) {
  if (b.value() == 0.0)
    throw DivisionSingularityError("jet division by zero constant term");
  return a * jet_elem(Elem::Reciprocal, b);
}

Jet Jet::derivative(int var) const {
  const JetSpec& sp = *spec_;
  Jet out(spec_);
  std::vector<int> m(sp.num_vars());
  for (int s = 0; s < sp.num_slots(); ++s) {
    if (c_[s] == 0.0) continue;
    auto ms = sp.mindex(s);
    if (ms[var] == 0) continue;
    for (int v = 0; v < sp.num_vars(); ++v) m[v] = ms[v];
    m[var] -= 1;
    out.c_[sp.slot_of(m)] += c_[s] * static_cast<double>(ms[var]);
  }
  return out;
}

Jet Jet::shift_down(int var, double tol) const {
  const JetSpec& sp = *spec_;
  Jet out(spec_);
  std::vector<int> m(sp.num_vars());
  for (int s = 0; s < sp.num_slots(); ++s) {
    auto ms = sp.mindex(s);
    if (ms[var] == 0) {
      if (std::abs(c_[s]) > tol)
        throw DivisionSingularityError(
            "shift_down: nonzero coefficient at degree 0 in variable");
      continue;
    }
    for (int v = 0; v < sp.num_vars(); ++v) m[v] = ms[v];
    m[var] -= 1;
    out.c_[sp.slot_of(m)] = c_[s];
  }
  return out;
}

Jet Jet::reshaped(const SpecPtr& target) const {
  if (target->num_vars() != spec_->num_vars())
    throw SpecMismatchError("reshape changes variable count");
  Jet out(target);
  std::vector<int> m(spec_->num_vars());
  for (int s = 0; s < spec_->num_slots(); ++s) {
    if (c_[s] == 0.0) continue;
    auto ms = spec_->mindex(s);
    for (int v = 0; v < spec_->num_vars(); ++v) m[v] = ms[v];
    int t = target->slot_of(m);
    if (t >= 0) out.raw()[t] = c_[s];
  }
  return out;
}

Jet jet_elem(Elem f, const Jet& a) {
  const double c0 = a.value();
  const int N = a.spec()->total_degree_cap();

  // Taylor coefficients f^(k)(c0)/k!
  std::vector<double> fk(N + 1);
  switch (f) {
    case Elem::Sin: {
      double kfac = 1.0;
      for (int k = 0; k <= N; ++k) {
        if (k > 0) kfac *= k;
        fk[k] = std::sin(c0 + k * M_PI_2) / kfac;
      }
      break;
    }
    case Elem::Cos: {
      double kfac = 1.0;
      for (int k = 0; k <= N; ++k) {
        if (k > 0) kfac *= k;
        fk[k] = std::cos(c0 + k * M_PI_2) / kfac;
      }
      break;
    }
    case Elem::Sqrt: {
      if (c0 <= 0.0)
        throw ElemDomainError("sqrt of jet with non-positive constant term");
      fk[0] = std::sqrt(c0);
      for (int k = 1; k <= N; ++k)
        fk[k] = fk[k - 1] * (1.5 / k - 1.0) / c0;
      break;
    }
    case Elem::Reciprocal: {
      if (c0 == 0.0)
        throw ElemDomainError("reciprocal of jet with zero constant term");
      fk[0] = 1.0 / c0;
      for (int k = 1; k <= N; ++k) fk[k] = -fk[k - 1] / c0;
      break;
    }
    case Elem::Exp: {
      fk[0] = std::exp(c0);
      for (int k = 1; k <= N; ++k) fk[k] = fk[k - 1] / k;
      break;
    }
  }

  Jet w = a;
  w.raw()[0] = 0.0;  // nilpotent part
  Jet res = Jet::constant(a.spec(), fk[N]);
  for (int k = N - 1; k >= 0; --k) {
    res = res * w;
    res += fk[k];
  }
  return res;
}

std::vector<double> extract_tensor(const Jet& j, std::span<const int> vars,
                                   int order) {
  if (order > j.spec()->total_degree_cap())
    throw std::invalid_argument("extract_tensor: order exceeds total cap");
  const int nv = static_cast<int>(vars.size());
  std::size_t size = 1;
  for (int l = 0; l < order; ++l) size *= nv;
  std::vector<double> out(size, 0.0);

  std::vector<int> m(j.spec()->num_vars());
  std::vector<int> idx(order, 0);
  for (std::size_t flat = 0; flat < size; ++flat) {
    std::size_t rem = flat;
    for (int l = order - 1; l >= 0; --l) {
      idx[l] = static_cast<int>(rem % nv);
      rem /= nv;
    }
    std::fill(m.begin(), m.end(), 0);
    for (int l = 0; l < order; ++l) m[vars[idx[l]]] += 1;
    int maxm = *std::max_element(m.begin(), m.end());
    for (int v = 0; v < j.spec()->num_vars(); ++v)
      if (m[v] > j.spec()->per_var_caps()[v])
        throw std::invalid_argument("extract_tensor: order exceeds degree cap");
    (void)maxm;
    double fac = 1.0;
    for (int v : m)
      for (int k = 2; k <= v; ++k) fac *= k;
    out[flat] = j.coeff(m) * fac;
  }
  return out;
}

}  // namespace zerohopf::jets
