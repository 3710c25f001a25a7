#include "zerohopf/averaging.hpp"

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <mutex>

namespace zerohopf::averaging {

namespace odeint = boost::numeric::odeint;
using jets::SpecPtr;

// ---------------------------------------------------------------------------
// DTensor

DTensor::DTensor(int n_in, int n_out, int order)
    : n_in_(n_in), n_out_(n_out), order_(order) {
  std::size_t sz = n_out_;
  for (int l = 0; l < order_; ++l) sz *= n_in_;
  data_.assign(sz, 0.0);
}

double& DTensor::at(int comp, std::span<const int> idx) {
  std::size_t pos = comp;
  for (int l = 0; l < order_; ++l) pos = pos * n_in_ + idx[l];
  return data_[pos];
}

double DTensor::at(int comp, std::span<const int> idx) const {
  return const_cast<DTensor*>(this)->at(comp, idx);
}

Eigen::VectorXd DTensor::apply(std::span<const Eigen::VectorXd> args) const {
  if (static_cast<int>(args.size()) != order_)
    throw std::invalid_argument("DTensor::apply: argument count != order");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_out_);
  std::vector<int> idx(order_, 0);
  std::size_t block = 1;
  for (int l = 0; l < order_; ++l) block *= n_in_;
  for (int comp = 0; comp < n_out_; ++comp) {
    double acc = 0.0;
    for (std::size_t flat = 0; flat < block; ++flat) {
      std::size_t rem = flat;
      double prod = 1.0;
      for (int l = order_ - 1; l >= 0; --l) {
        idx[l] = static_cast<int>(rem % n_in_);
        rem /= n_in_;
        prod *= args[l](idx[l]);
      }
      acc += data_[comp * block + flat] * prod;
    }
    out(comp) = acc;
  }
  return out;
}

Eigen::MatrixXd DTensor::matrix() const {
  if (order_ != 1) throw std::logic_error("DTensor::matrix requires order 1");
  Eigen::MatrixXd m(n_out_, n_in_);
  for (int i = 0; i < n_out_; ++i)
    for (int j = 0; j < n_in_; ++j) m(i, j) = data_[i * n_in_ + j];
  return m;
}

Eigen::VectorXd DTensor::vector() const {
  if (order_ != 0) throw std::logic_error("DTensor::vector requires order 0");
  Eigen::VectorXd v(n_out_);
  for (int i = 0; i < n_out_; ++i) v(i) = data_[i];
  return v;
}

// ---------------------------------------------------------------------------
// recursion machinery

namespace {

constexpr int kMaxOrder = 5;

// Multilinear application of the order-l state derivative of F (a vector of
// offset jets) to l vectors of offset jets.
std::vector<Jet> frechet(const std::vector<Jet>& F,
                         std::span<const std::vector<Jet>* const> args) {
  const int n = static_cast<int>(F.size());
  const int l = static_cast<int>(args.size());
  std::vector<Jet> out;
  out.reserve(n);
  std::size_t tuples = 1;
  for (int q = 0; q < l; ++q) tuples *= n;
  std::vector<int> idx(l, 0);
  for (int comp = 0; comp < n; ++comp) {
    Jet acc(F[comp].spec());
    for (std::size_t flat = 0; flat < tuples; ++flat) {
      std::size_t rem = flat;
      for (int q = l - 1; q >= 0; --q) {
        idx[q] = static_cast<int>(rem % n);
        rem /= n;
      }
      Jet term = F[comp];
      for (int q = 0; q < l; ++q) term = term.derivative(idx[q]);
      for (int q = 0; q < l; ++q) term = term * (*args[q])[idx[q]];
      acc += term;
    }
    out.push_back(std::move(acc));
  }
  return out;
}

std::vector<Jet> scaled(std::vector<Jet> v, double s) {
  for (auto& j : v) j *= s;
  return v;
}

void add_into(std::vector<Jet>& dst, const std::vector<Jet>& src, double s) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    Jet t = src[i];
    t *= s;
    dst[i] += t;
  }
}

// F_i as offset-only jets, extracted from an ε-expansion evaluation.
std::vector<std::vector<Jet>> extract_orders(const std::vector<Jet>& rhs_jets,
                                             const SpecPtr& uspec) {
  const int n = static_cast<int>(rhs_jets.size());
  std::vector<std::vector<Jet>> F(kMaxOrder + 1);
  for (int i = 1; i <= kMaxOrder; ++i) F[i].assign(n, Jet(uspec));

  const auto& wspec = *rhs_jets[0].spec();
  std::vector<int> mu(uspec->num_vars());
  for (int comp = 0; comp < n; ++comp) {
    auto raw = rhs_jets[comp].raw();
    for (int s = 0; s < wspec.num_slots(); ++s) {
      if (raw[s] == 0.0) continue;
      auto m = wspec.mindex(s);
      const int i = m[0];
      if (i < 1 || i > kMaxOrder) continue;
      for (int v = 0; v < uspec->num_vars(); ++v) mu[v] = m[1 + v];
      int slot = uspec->slot_of(mu);
      if (slot >= 0) F[i][comp].raw()[slot] = raw[s];
    }
  }
  return F;
}

}  // namespace

struct AveragedSet::Cache {
  std::mutex mu;
  // key: (state_deg, z)
  std::map<std::pair<int, std::vector<double>>, std::vector<std::vector<Jet>>>
      period_jets;
};

AveragedSet::AveragedSet(StandardFormSystem sys, QuadratureSpec quad)
    : sys_(std::make_shared<StandardFormSystem>(std::move(sys))),
      quad_(quad),
      cache_(std::make_shared<Cache>()) {}

// The coupled recursion pass: state = coefficients of y_1..y_5 carried as
// offset jets of degree state_deg.
std::vector<std::vector<Jet>> AveragedSet::integrate_recursion(
    double t, const Eigen::VectorXd& z, int state_deg) const {
  const int n = sys_->dim;
  SpecPtr uspec = systems::offset_spec(n, state_deg);
  const int S = uspec->num_slots();
  const std::size_t dim_state = static_cast<std::size_t>(kMaxOrder) * n * S;

  std::vector<double> zz(z.data(), z.data() + z.size());

  auto unpack = [&](const std::vector<double>& st) {
    std::vector<std::vector<Jet>> Y(kMaxOrder + 1);
    for (int i = 1; i <= kMaxOrder; ++i) {
      Y[i].assign(n, Jet(uspec));
      for (int comp = 0; comp < n; ++comp) {
        auto raw = Y[i][comp].raw();
        const double* src = st.data() + ((i - 1) * n + comp) * S;
        std::copy(src, src + S, raw.begin());
      }
    }
    return Y;
  };

  auto rhs = [&](const std::vector<double>& st, std::vector<double>& dst,
                 double tau) {
    std::vector<Jet> rhs_jets = sys_->jet_rhs(tau, zz, state_deg, 6);
    auto F = extract_orders(rhs_jets, uspec);
    auto Y = unpack(st);
    const auto& Y1 = Y[1];
    const auto& Y2 = Y[2];
    const auto& Y3 = Y[3];
    const auto& Y4 = Y[4];

    auto A = [&](const std::vector<Jet>& Fi,
                 std::initializer_list<const std::vector<Jet>*> args) {
      return frechet(Fi, std::span<const std::vector<Jet>* const>(
                             args.begin(), args.size()));
    };

    std::vector<std::vector<Jet>> dy(kMaxOrder + 1);
    dy[1] = F[1];

    dy[2] = scaled(F[2], 2.0);
    add_into(dy[2], A(F[1], {&Y1}), 2.0);

    dy[3] = scaled(F[3], 6.0);
    add_into(dy[3], A(F[2], {&Y1}), 6.0);
    add_into(dy[3], A(F[1], {&Y1, &Y1}), 3.0);
    add_into(dy[3], A(F[1], {&Y2}), 3.0);

    dy[4] = scaled(F[4], 24.0);
    add_into(dy[4], A(F[3], {&Y1}), 24.0);
    add_into(dy[4], A(F[2], {&Y1, &Y1}), 12.0);
    add_into(dy[4], A(F[2], {&Y2}), 12.0);
    add_into(dy[4], A(F[1], {&Y1, &Y2}), 12.0);
    add_into(dy[4], A(F[1], {&Y1, &Y1, &Y1}), 4.0);
    add_into(dy[4], A(F[1], {&Y3}), 4.0);

    dy[5] = scaled(F[5], 120.0);
    add_into(dy[5], A(F[4], {&Y1}), 120.0);
    add_into(dy[5], A(F[3], {&Y1, &Y1}), 60.0);
    add_into(dy[5], A(F[3], {&Y2}), 60.0);
    add_into(dy[5], A(F[2], {&Y1, &Y2}), 60.0);
    add_into(dy[5], A(F[2], {&Y1, &Y1, &Y1}), 20.0);
    add_into(dy[5], A(F[2], {&Y3}), 20.0);
    add_into(dy[5], A(F[1], {&Y1, &Y3}), 20.0);
    add_into(dy[5], A(F[1], {&Y2, &Y2}), 15.0);
    add_into(dy[5], A(F[1], {&Y1, &Y1, &Y2}), 30.0);
    add_into(dy[5], A(F[1], {&Y1, &Y1, &Y1, &Y1}), 5.0);
    add_into(dy[5], A(F[1], {&Y4}), 5.0);

    dst.assign(dim_state, 0.0);
    for (int i = 1; i <= kMaxOrder; ++i)
      for (int comp = 0; comp < n; ++comp) {
        auto raw = dy[i][comp].raw();
        std::copy(raw.begin(), raw.end(),
                  dst.begin() + ((i - 1) * n + comp) * S);
      }
  };

  std::vector<double> state(dim_state, 0.0);
  if (t > 0.0) {
    using stepper_t = odeint::runge_kutta_dopri5<std::vector<double>>;
    auto controlled =
        odeint::make_controlled<stepper_t>(quad_.abs_tol, quad_.rel_tol);
    try {
      odeint::integrate_adaptive(controlled, rhs, state, 0.0, t, t / 64.0);
    } catch (const std::exception& e) {
      throw QuadratureFailure(std::string("recursion integration failed: ") +
                              e.what());
    }
  }
  return unpack(state);
}

const std::vector<std::vector<Jet>>& AveragedSet::y_jets_at_period(
    const Eigen::VectorXd& z, int state_deg) const {
  std::vector<double> key(z.data(), z.data() + z.size());
  std::lock_guard<std::mutex> lock(cache_->mu);
  auto& slot = cache_->period_jets;
  auto it = slot.find({state_deg, key});
  if (it == slot.end()) {
    if (slot.size() >= 512) slot.clear();  // pressure valve for chart sweeps
    auto jets = integrate_recursion(sys_->period, z, state_deg);
    it = slot.emplace(std::make_pair(state_deg, key), std::move(jets)).first;
  }
  return it->second;
}

Eigen::VectorXd AveragedSet::y(double t, const Eigen::VectorXd& z, int i) const {
  if (i < 1 || i > kMaxOrder) throw std::invalid_argument("y: order i in 1..5");
  auto jets = integrate_recursion(t, z, i - 1);
  Eigen::VectorXd out(sys_->dim);
  for (int comp = 0; comp < sys_->dim; ++comp) out(comp) = jets[i][comp].value();
  return out;
}

Eigen::VectorXd AveragedSet::g(const Eigen::VectorXd& z, int i) const {
  if (i < 1 || i > kMaxOrder) throw std::invalid_argument("g: order i in 1..5");
  const auto& jets = y_jets_at_period(z, i - 1);
  double ifac = 1.0;
  for (int k = 2; k <= i; ++k) ifac *= k;
  Eigen::VectorXd out(sys_->dim);
  for (int comp = 0; comp < sys_->dim; ++comp)
    out(comp) = jets[i][comp].value() / ifac;
  return out;
}

DTensor AveragedSet::g_derivatives(const Eigen::VectorXd& z, int i,
                                   int k) const {
  if (i < 1 || i > kMaxOrder)
    throw std::invalid_argument("g_derivatives: i in 1..5");
  if (k < 0 || i + k > kMaxOrder)
    throw std::invalid_argument(
        "g_derivatives: requires i + k <= 5 (expansion grading)");
  const int n = sys_->dim;
  const auto& jets = y_jets_at_period(z, i - 1 + k);
  double ifac = 1.0;
  for (int q = 2; q <= i; ++q) ifac *= q;

  DTensor out(n, n, k);
  std::vector<int> idx(k, 0);
  std::vector<int> m(n);
  std::size_t block = 1;
  for (int l = 0; l < k; ++l) block *= n;
  for (int comp = 0; comp < n; ++comp) {
    for (std::size_t flat = 0; flat < block; ++flat) {
      std::size_t rem = flat;
      for (int l = k - 1; l >= 0; --l) {
        idx[l] = static_cast<int>(rem % n);
        rem /= n;
      }
      std::fill(m.begin(), m.end(), 0);
      for (int l = 0; l < k; ++l) m[idx[l]] += 1;
      double fac = 1.0;
      for (int v = 0; v < n; ++v)
        for (int q = 2; q <= m[v]; ++q) fac *= q;
      out.at(comp, idx) = jets[i][comp].coeff(m) * fac / ifac;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// full-system oracle

Eigen::VectorXd AveragedSet::displacement(const Eigen::VectorXd& z,
                                          double eps) const {
  const int n = sys_->dim;
  std::vector<double> state(z.data(), z.data() + z.size());
  if (eps != 0.0) {
    auto rhs = [&](const std::vector<double>& st, std::vector<double>& dst,
                   double tau) {
      dst = sys_->numeric_rhs(tau, st, eps);
    };
    using stepper_t = odeint::runge_kutta_dopri5<std::vector<double>>;
    auto controlled = odeint::make_controlled<stepper_t>(quad_.oracle_abs_tol,
                                                         quad_.oracle_rel_tol);
    try {
      odeint::integrate_adaptive(controlled, rhs, state, 0.0, sys_->period,
                                 sys_->period / 64.0);
    } catch (const std::exception& e) {
      throw OracleFailure(std::string("displacement integration failed: ") +
                          e.what());
    }
  }
  Eigen::VectorXd out(n);
  for (int c = 0; c < n; ++c) out(c) = state[c] - z(c);
  return out;
}

namespace {

// Interpolating-polynomial coefficients through (s_i, v_i); long double
// elimination keeps the ε⁵ coefficient above the noise floor.
std::vector<long double> vandermonde_solve(const std::vector<long double>& s,
                                           const std::vector<long double>& v) {
  const int N = static_cast<int>(s.size());
  std::vector<std::vector<long double>> A(N, std::vector<long double>(N + 1));
  for (int i = 0; i < N; ++i) {
    long double p = 1.0L;
    for (int j = 0; j < N; ++j) {
      A[i][j] = p;
      p *= s[i];
    }
    A[i][N] = v[i];
  }
  for (int col = 0; col < N; ++col) {
    int piv = col;
    for (int r = col + 1; r < N; ++r)
      if (fabsl(A[r][col]) > fabsl(A[piv][col])) piv = r;
    std::swap(A[col], A[piv]);
    if (A[col][col] == 0.0L) throw OracleFailure("oracle fit: singular system");
    for (int r = 0; r < N; ++r) {
      if (r == col) continue;
      long double f = A[r][col] / A[col][col];
      if (f == 0.0L) continue;
      for (int j = col; j <= N; ++j) A[r][j] -= f * A[col][j];
    }
  }
  std::vector<long double> x(N);
  for (int i = 0; i < N; ++i) x[i] = A[i][N] / A[i][i];
  return x;
}

}  // namespace

std::vector<Eigen::VectorXd> AveragedSet::poincare_expansion_oracle(
    const Eigen::VectorXd& z, std::vector<double> eps_nodes) const {
  if (eps_nodes.empty()) {
    eps_nodes.push_back(0.0);
    double h = quad_.oracle_h0;
    for (int j = 0; j < quad_.oracle_ladder; ++j) {
      eps_nodes.push_back(h);
      eps_nodes.push_back(-h);
      h *= quad_.oracle_ratio;
    }
  } else if (eps_nodes.size() < 7) {
    throw OracleFailure("oracle: need at least 7 distinct eps nodes");
  }

  const int n = sys_->dim;
  const int N = static_cast<int>(eps_nodes.size());
  double hmax = 0.0;
  for (double e : eps_nodes) hmax = std::max(hmax, std::abs(e));
  if (hmax == 0.0) throw OracleFailure("oracle: all eps nodes zero");

  std::vector<std::vector<long double>> vals(n, std::vector<long double>(N));
  std::vector<long double> s(N);
  for (int i = 0; i < N; ++i) {
    s[i] = static_cast<long double>(eps_nodes[i] / hmax);
    Eigen::VectorXd d = displacement(z, eps_nodes[i]);
    for (int c = 0; c < n; ++c) vals[c][i] = static_cast<long double>(d(c));
  }

  std::vector<Eigen::VectorXd> ghat(kMaxOrder, Eigen::VectorXd::Zero(n));
  for (int c = 0; c < n; ++c) {
    auto coef = vandermonde_solve(s, vals[c]);
    long double scale = 1.0L;
    for (int i = 1; i <= kMaxOrder && i < N; ++i) {
      scale *= static_cast<long double>(hmax);
      ghat[i - 1](c) = static_cast<double>(coef[i] / scale);
    }
  }
  return ghat;
}

}  // namespace zerohopf::averaging
