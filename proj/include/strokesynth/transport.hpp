#pragma once

// Entropy-regularized optimal transport solved by log-domain Sinkhorn
// iterations. The plan is
//   P_ij = exp((f_i + g_j - D_ij) / reg)
// with dual potentials f, g. Costs come either as an explicit matrix or as
// a regular grid over [0,1]^2, where the squared-Euclidean kernel factors
// per axis and each soft-min costs O(G^3) instead of O(G^4).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "core.hpp"
#include "parallel.hpp"

namespace strokesynth {

/// Explicit rows x cols cost matrix, row-major.
struct DenseCost {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

/// Cells of a grid x grid lattice (row-major), coordinates (i / (grid-1)).
struct GridCost {
  int grid = 2;
  OtCost kind = OtCost::SqEuclidean;

  std::size_t cells() const noexcept { return std::size_t(grid) * std::size_t(grid); }
  double operator()(std::size_t i, std::size_t j) const {
    const double s = 1.0 / double(grid - 1);
    const double dx = (double(i % std::size_t(grid)) - double(j % std::size_t(grid))) * s;
    const double dy = (double(i / std::size_t(grid)) - double(j / std::size_t(grid))) * s;
    const double d2 = dx * dx + dy * dy;
    return kind == OtCost::SqEuclidean ? d2 : std::sqrt(d2);
  }
};

using CostModel = std::variant<DenseCost, GridCost>;

inline std::size_t cost_rows(const CostModel& c) {
  return std::visit([](const auto& m) -> std::size_t {
    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DenseCost>) return m.rows;
    else return m.cells();
  }, c);
}

inline std::size_t cost_cols(const CostModel& c) {
  return std::visit([](const auto& m) -> std::size_t {
    if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DenseCost>) return m.cols;
    else return m.cells();
  }, c);
}

inline double cost_at(const CostModel& c, std::size_t i, std::size_t j) {
  return std::visit([&](const auto& m) { return m(i, j); }, c);
}

struct TransportProblem {
  std::vector<double> p;  // source marginal
  std::vector<double> q;  // target marginal
  CostModel cost;
  double reg = 0.01;

  void validate() const {
    if (!(reg > 0) || !std::isfinite(reg)) fail("TransportProblem: reg must be a positive finite number");
    if (p.size() != cost_rows(cost) || q.size() != cost_cols(cost))
      fail("TransportProblem: marginal sizes do not match the cost matrix");
    auto check = [](const std::vector<double>& m, const char* name) {
      double sum = 0.0;
      for (double v : m) {
        if (!std::isfinite(v)) fail(std::string("TransportProblem: non-finite entry in ") + name);
        if (v < 0) fail(std::string("TransportProblem: negative entry in ") + name);
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-9) fail(std::string("TransportProblem: ") + name + " does not sum to 1");
    };
    check(p, "p");
    check(q, "q");
    if (const auto* d = std::get_if<DenseCost>(&cost)) {
      if (d->values.size() != d->rows * d->cols) fail("TransportProblem: cost matrix has the wrong size");
      for (double v : d->values)
        if (!std::isfinite(v) || v < 0) fail("TransportProblem: cost entries must be finite and non-negative");
    }
  }
};

struct TransportPlan {
  std::vector<double> f;  // row potentials, cost units
  std::vector<double> g;  // column potentials
  double plan_cost = 0.0;
  double marginal_violation = 0.0;  // L1 gap of the row marginal
  int iterations = 0;
  bool converged = false;
  std::vector<double> dual_trace;  // dual objective after each full iteration
};

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Factored soft-min for the squared-Euclidean grid:
///   out_(iy,ix) = LSE_(jy,jx) [ h_(jy,jx)/reg - ((ix-jx)^2 + (iy-jy)^2) s^2 / reg ].
/// Kernels stay in the linear domain; inputs are shifted by their row or
/// column maximum, so every sum holds at least one term >= exp(-1/reg).
class SeparableGrid {
 public:
  SeparableGrid(int grid, double reg) : n_(std::size_t(grid)), kernel_(n_ * n_), dkernel_(n_ * n_) {
    const double s = 1.0 / double(grid - 1);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) {
        const double d = (double(i) - double(j)) * s;
        kernel_[i * n_ + j] = std::exp(-d * d / reg);
        dkernel_[i * n_ + j] = d * d * kernel_[i * n_ + j];
      }
  }

  /// Whether exp(-max cost / reg) stays representable.
  static bool usable(double reg) { return 1.0 / reg < 600.0; }

  void softmin(const std::vector<double>& h, double reg, std::vector<double>& out) const {
    const std::size_t n = n_;
    std::vector<double> row_shift(n), a(n * n);
    // Pass 1: along x within each source row jy.
    parallel_for(n, [&](std::size_t jy) {
      double m = kNegInf;
      for (std::size_t jx = 0; jx < n; ++jx) m = std::max(m, h[jy * n + jx] / reg);
      row_shift[jy] = m;
      std::vector<double> e(n);
      for (std::size_t jx = 0; jx < n; ++jx) e[jx] = m == kNegInf ? 0.0 : std::exp(h[jy * n + jx] / reg - m);
      for (std::size_t ix = 0; ix < n; ++ix) {
        double t = 0.0;
        const double* k = &kernel_[ix * n];
        for (std::size_t jx = 0; jx < n; ++jx) t += k[jx] * e[jx];
        a[jy * n + ix] = m == kNegInf ? kNegInf : m + std::log(t);
      }
    });
    // Pass 2: along y for each target column ix.
    out.resize(n * n);
    parallel_for(n, [&](std::size_t ix) {
      double m = kNegInf;
      for (std::size_t jy = 0; jy < n; ++jy) m = std::max(m, a[jy * n + ix]);
      std::vector<double> e(n);
      for (std::size_t jy = 0; jy < n; ++jy) e[jy] = m == kNegInf ? 0.0 : std::exp(a[jy * n + ix] - m);
      for (std::size_t iy = 0; iy < n; ++iy) {
        double t = 0.0;
        const double* k = &kernel_[iy * n];
        for (std::size_t jy = 0; jy < n; ++jy) t += k[jy] * e[jy];
        out[iy * n + ix] = m == kNegInf ? kNegInf : m + std::log(t);
      }
    });
  }

  std::size_t size() const noexcept { return n_; }
  const std::vector<double>& kernel() const noexcept { return kernel_; }
  const std::vector<double>& dkernel() const noexcept { return dkernel_; }

 private:
  std::size_t n_;
  std::vector<double> kernel_;   // exp(-d^2/reg) per axis
  std::vector<double> dkernel_;  // d^2 exp(-d^2/reg)
};

/// out_i = LSE_j (h_j - D_ij) / reg over an arbitrary cost model,
/// transposed when `by_column` (then i indexes columns).
inline void dense_softmin(const CostModel& cost, const std::vector<double>& h, double reg, bool by_column,
                          std::vector<double>& out) {
  const std::size_t rows = cost_rows(cost), cols = cost_cols(cost);
  const std::size_t n_out = by_column ? cols : rows;
  const std::size_t n_in = by_column ? rows : cols;
  out.resize(n_out);
  parallel_for(n_out, [&](std::size_t i) {
    double m = kNegInf;
    for (std::size_t j = 0; j < n_in; ++j) {
      if (h[j] == kNegInf) continue;
      const double d = by_column ? cost_at(cost, j, i) : cost_at(cost, i, j);
      m = std::max(m, (h[j] - d) / reg);
    }
    if (m == kNegInf) {
      out[i] = kNegInf;
      return;
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n_in; ++j) {
      if (h[j] == kNegInf) continue;
      const double d = by_column ? cost_at(cost, j, i) : cost_at(cost, i, j);
      s += std::exp((h[j] - d) / reg - m);
    }
    out[i] = m + std::log(s);
  });
}

inline double safe_log(double v) { return v > 0 ? std::log(v) : kNegInf; }

}  // namespace detail

/// Linear action of the plan P = diag(e^{f/reg}) K diag(e^{g/reg}) on vectors,
/// plus its cost-weighted row and column sums. Separable grids factor every
/// product into two O(G^3) passes with per-row and per-column shifts.
class PlanOperator {
 public:
  PlanOperator(const TransportProblem& tp, const TransportPlan& plan) : tp_(&tp), plan_(&plan) {
    const GridCost* grid = std::get_if<GridCost>(&tp.cost);
    if (grid && grid->kind == OtCost::SqEuclidean && detail::SeparableGrid::usable(tp.reg)) {
      sep_.emplace(grid->grid, tp.reg);
      forward_ = scaled(plan.f, plan.g);
      transpose_ = scaled(plan.g, plan.f);
    }
  }

  std::vector<double> apply(const std::vector<double>& v) const {
    return sep_ ? separable(forward_, v, false) : dense(v, false, false);
  }
  std::vector<double> apply_t(const std::vector<double>& u) const {
    return sep_ ? separable(transpose_, u, false) : dense(u, true, false);
  }
  /// (D o P) 1
  std::vector<double> row_cost() const {
    return sep_ ? separable(forward_, ones(plan_->g.size()), true) : dense(ones(plan_->g.size()), false, true);
  }
  /// (D o P)^T 1
  std::vector<double> col_cost() const {
    return sep_ ? separable(transpose_, ones(plan_->f.size()), true) : dense(ones(plan_->f.size()), true, true);
  }

 private:
  struct Scaled {
    std::vector<double> col_exp;    // e^{h_j/reg - shift_row(jy)}
    std::vector<double> cross;      // e^{shift_row(jy) - shift_col(ix)}, indexed (jy, ix)
    std::vector<double> row_scale;  // e^{r_i/reg + shift_col(ix)}
  };

  static std::vector<double> ones(std::size_t n) { return std::vector<double>(n, 1.0); }

  // Rows scaled by e^{r/reg}, columns by e^{h/reg}.
  Scaled scaled(const std::vector<double>& r, const std::vector<double>& h) const {
    const std::size_t n = sep_->size();
    const double reg = tp_->reg;
    const auto& k = sep_->kernel();
    Scaled out;
    out.col_exp.assign(n * n, 0.0);
    out.cross.assign(n * n, 0.0);
    out.row_scale.assign(n * n, 0.0);
    std::vector<double> shift_row(n, detail::kNegInf), shift_col(n, detail::kNegInf);
    for (std::size_t jy = 0; jy < n; ++jy) {
      for (std::size_t jx = 0; jx < n; ++jx) shift_row[jy] = std::max(shift_row[jy], h[jy * n + jx] / reg);
      if (shift_row[jy] == detail::kNegInf) continue;
      for (std::size_t jx = 0; jx < n; ++jx) out.col_exp[jy * n + jx] = std::exp(h[jy * n + jx] / reg - shift_row[jy]);
      for (std::size_t ix = 0; ix < n; ++ix) {
        double t = 0.0;
        for (std::size_t jx = 0; jx < n; ++jx) t += k[ix * n + jx] * out.col_exp[jy * n + jx];
        shift_col[ix] = std::max(shift_col[ix], shift_row[jy] + std::log(t));
      }
    }
    for (std::size_t jy = 0; jy < n; ++jy)
      for (std::size_t ix = 0; ix < n; ++ix)
        if (shift_row[jy] != detail::kNegInf && shift_col[ix] != detail::kNegInf)
          out.cross[jy * n + ix] = std::exp(shift_row[jy] - shift_col[ix]);
    for (std::size_t iy = 0; iy < n; ++iy)
      for (std::size_t ix = 0; ix < n; ++ix) {
        const double ri = r[iy * n + ix] / reg;
        if (ri != detail::kNegInf && shift_col[ix] != detail::kNegInf)
          out.row_scale[iy * n + ix] = std::exp(ri + shift_col[ix]);
      }
    return out;
  }

  std::vector<double> separable(const Scaled& sc, const std::vector<double>& v, bool weighted) const {
    const std::size_t n = sep_->size();
    const auto& k = sep_->kernel();
    const auto& dk = sep_->dkernel();
    std::vector<double> t0(n * n), t1(weighted ? n * n : 0);
    parallel_for(n, [&](std::size_t jy) {
      for (std::size_t ix = 0; ix < n; ++ix) {
        double s0 = 0.0, s1 = 0.0;
        for (std::size_t jx = 0; jx < n; ++jx) {
          const double e = sc.col_exp[jy * n + jx] * v[jy * n + jx];
          s0 += k[ix * n + jx] * e;
          if (weighted) s1 += dk[ix * n + jx] * e;
        }
        t0[jy * n + ix] = s0;
        if (weighted) t1[jy * n + ix] = s1;
      }
    });
    std::vector<double> out(n * n, 0.0);
    parallel_for(n, [&](std::size_t iy) {
      for (std::size_t ix = 0; ix < n; ++ix) {
        const double scale = sc.row_scale[iy * n + ix];
        if (scale == 0.0) continue;
        double s = 0.0;
        for (std::size_t jy = 0; jy < n; ++jy) {
          const double z = sc.cross[jy * n + ix];
          if (z == 0.0) continue;
          s += weighted ? z * (k[iy * n + jy] * t1[jy * n + ix] + dk[iy * n + jy] * t0[jy * n + ix])
                        : z * k[iy * n + jy] * t0[jy * n + ix];
        }
        out[iy * n + ix] = scale * s;
      }
    });
    return out;
  }

  std::vector<double> dense(const std::vector<double>& v, bool transposed, bool weighted) const {
    const auto& f = plan_->f;
    const auto& g = plan_->g;
    const std::size_t n_out = transposed ? g.size() : f.size();
    const std::size_t n_in = transposed ? f.size() : g.size();
    std::vector<double> out(n_out, 0.0);
    parallel_for(n_out, [&](std::size_t a) {
      double s = 0.0;
      for (std::size_t b = 0; b < n_in; ++b) {
        const std::size_t i = transposed ? b : a, j = transposed ? a : b;
        if (f[i] == detail::kNegInf || g[j] == detail::kNegInf) continue;
        const double d = cost_at(tp_->cost, i, j);
        const double pij = std::exp((f[i] + g[j] - d) / tp_->reg);
        s += (weighted ? d : 1.0) * pij * v[b];
      }
      out[a] = s;
    });
    return out;
  }

  const TransportProblem* tp_;
  const TransportPlan* plan_;
  std::optional<detail::SeparableGrid> sep_;
  Scaled forward_, transpose_;
};

/// Log-domain Sinkhorn. Stops when the L1 row-marginal gap drops below
/// cfg.marginal_tol or after cfg.max_iters iterations. `warm_g`, when given,
/// seeds the column potential.
inline TransportPlan sinkhorn(const TransportProblem& tp, const SinkhornConfig& cfg,
                              const std::vector<double>* warm_g = nullptr) {
  tp.validate();
  if (cfg.max_iters < 1) fail("sinkhorn: max_iters must be >= 1");
  if (!(cfg.marginal_tol > 0)) fail("sinkhorn: marginal_tol must be > 0");
  const double reg = tp.reg;
  const std::size_t rows = tp.p.size(), cols = tp.q.size();

  const GridCost* grid = std::get_if<GridCost>(&tp.cost);
  std::optional<detail::SeparableGrid> sep;
  if (grid && grid->kind == OtCost::SqEuclidean && detail::SeparableGrid::usable(reg)) sep.emplace(grid->grid, reg);

  auto softmin = [&](const std::vector<double>& h, bool by_column, std::vector<double>& out) {
    if (sep) sep->softmin(h, reg, out);  // symmetric cost: rows and columns coincide
    else detail::dense_softmin(tp.cost, h, reg, by_column, out);
  };

  std::vector<double> logp(rows), logq(cols);
  for (std::size_t i = 0; i < rows; ++i) logp[i] = detail::safe_log(tp.p[i]);
  for (std::size_t j = 0; j < cols; ++j) logq[j] = detail::safe_log(tp.q[j]);

  TransportPlan plan;
  plan.f.assign(rows, 0.0);
  plan.g.assign(cols, 0.0);
  if (warm_g && warm_g->size() == cols) {
    for (std::size_t j = 0; j < cols; ++j)
      plan.g[j] = tp.q[j] > 0 && std::isfinite((*warm_g)[j]) ? (*warm_g)[j] : (tp.q[j] > 0 ? 0.0 : detail::kNegInf);
  }
  for (std::size_t j = 0; j < cols; ++j)
    if (tp.q[j] == 0) plan.g[j] = detail::kNegInf;

  auto row_violation = [&](const std::vector<double>& s) {
    double v = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double mass = plan.f[i] == detail::kNegInf || s[i] == detail::kNegInf ? 0.0 : std::exp(plan.f[i] / reg + s[i]);
      v += std::abs(mass - tp.p[i]);
    }
    return v;
  };

  std::vector<double> s, t;
  for (int it = 0;; ++it) {
    softmin(plan.g, false, s);
    if (it > 0) {
      plan.marginal_violation = row_violation(s);
      if (plan.marginal_violation < cfg.marginal_tol) {
        plan.converged = true;
        break;
      }
      if (it >= cfg.max_iters) break;
    }
    for (std::size_t i = 0; i < rows; ++i)
      plan.f[i] = logp[i] == detail::kNegInf || s[i] == detail::kNegInf ? detail::kNegInf : reg * (logp[i] - s[i]);
    softmin(plan.f, true, t);
    for (std::size_t j = 0; j < cols; ++j)
      plan.g[j] = logq[j] == detail::kNegInf || t[j] == detail::kNegInf ? detail::kNegInf : reg * (logq[j] - t[j]);
    plan.iterations = it + 1;

    double dual = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
      if (tp.p[i] > 0) dual += plan.f[i] * tp.p[i];
    for (std::size_t j = 0; j < cols; ++j)
      if (tp.q[j] > 0) dual += plan.g[j] * tp.q[j];
    plan.dual_trace.push_back(dual);
  }

  for (double v : plan.f)
    if (std::isnan(v)) fail("sinkhorn: non-finite potentials");
  for (double v : plan.g)
    if (std::isnan(v)) fail("sinkhorn: non-finite potentials");

  const auto row_cost = PlanOperator(tp, plan).row_cost();
  plan.plan_cost = 0.0;
  for (double v : row_cost) plan.plan_cost += v;
  return plan;
}

/// Materialized plan matrix (rows x cols); intended for small problems.
inline std::vector<double> plan_matrix(const TransportProblem& tp, const TransportPlan& plan) {
  const std::size_t rows = tp.p.size(), cols = tp.q.size();
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      if (plan.f[i] == detail::kNegInf || plan.g[j] == detail::kNegInf) continue;
      out[i * cols + j] = std::exp((plan.f[i] + plan.g[j] - cost_at(tp.cost, i, j)) / tp.reg);
    }
  return out;
}

struct PlanCostGradient {
  std::vector<double> d_source;  // d <D, P> / d p, defined up to an additive constant
  int cg_iterations = 0;
  double residual = 0.0;  // relative residual of the adjoint solve
};

/// Exact derivative of the plan cost <D, P> w.r.t. the source marginal,
/// by implicit differentiation of the marginal constraints at the computed
/// plan. Solves the adjoint system
///   [diag(P1)  P        ] [alpha]   [(D o P) 1  ]
///   [P^T       diag(P^T1)] [beta ] = [(D o P)^T 1]
/// with Jacobi-preconditioned conjugate gradients; alpha is the gradient.
/// `warm`, when sized rows + cols, seeds the solve and receives the solution.
inline PlanCostGradient plan_cost_gradient(const TransportProblem& tp, const TransportPlan& plan,
                                           double tol = 1e-10, int max_iters = 2000,
                                           std::vector<double>* warm = nullptr) {
  const PlanOperator op(tp, plan);
  const std::size_t rows = plan.f.size(), cols = plan.g.size();
  const std::vector<double> row_mass = op.apply(std::vector<double>(cols, 1.0));
  const std::vector<double> col_mass = op.apply_t(std::vector<double>(rows, 1.0));
  const std::vector<double> rc = op.row_cost();
  const std::vector<double> cc = op.col_cost();

  // Block vectors are stored as [rows | cols].
  const std::size_t n = rows + cols;
  std::vector<double> b(n), diag(n);
  for (std::size_t i = 0; i < rows; ++i) b[i] = rc[i], diag[i] = row_mass[i];
  for (std::size_t j = 0; j < cols; ++j) b[rows + j] = cc[j], diag[rows + j] = col_mass[j];

  auto apply_m = [&](const std::vector<double>& x) {
    const std::vector<double> xa(x.begin(), x.begin() + std::ptrdiff_t(rows));
    const std::vector<double> xb(x.begin() + std::ptrdiff_t(rows), x.end());
    const std::vector<double> pb = op.apply(xb);
    const std::vector<double> pa = op.apply_t(xa);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < rows; ++i) y[i] = diag[i] * xa[i] + pb[i];
    for (std::size_t j = 0; j < cols; ++j) y[rows + j] = pa[j] + diag[rows + j] * xb[j];
    return y;
  };
  auto dotv = [](const std::vector<double>& a, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * c[i];
    return s;
  };

  std::vector<double> x(n, 0.0), r = b, z(n), p(n);
  if (warm && warm->size() == n) {
    bool finite = true;
    for (double v : *warm) finite = finite && std::isfinite(v);
    if (finite) {
      x = *warm;
      const std::vector<double> mx = apply_m(x);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - mx[i];
    }
  }
  auto precondition = [&] {
    for (std::size_t i = 0; i < n; ++i) z[i] = diag[i] > 0 ? r[i] / diag[i] : 0.0;
  };
  precondition();
  p = z;
  double rz = dotv(r, z);
  const double bnorm = std::sqrt(dotv(b, b));
  PlanCostGradient out;
  out.residual = bnorm > 0 ? std::sqrt(dotv(r, r)) / bnorm : 0.0;
  if (bnorm > 0 && out.residual >= tol) {
    for (int it = 0; it < max_iters; ++it) {
      const std::vector<double> mp = apply_m(p);
      const double pmp = dotv(p, mp);
      if (!(pmp > 0)) break;
      const double step = rz / pmp;
      for (std::size_t i = 0; i < n; ++i) x[i] += step * p[i], r[i] -= step * mp[i];
      out.cg_iterations = it + 1;
      out.residual = std::sqrt(dotv(r, r)) / bnorm;
      if (out.residual < tol) break;
      precondition();
      const double rz_next = dotv(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
  }
  out.d_source.assign(x.begin(), x.begin() + std::ptrdiff_t(rows));
  if (warm) *warm = std::move(x);
  return out;
}

}  // namespace strokesynth
