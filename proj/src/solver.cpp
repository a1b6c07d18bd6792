#include "hscs/solver.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "hscs/errors.hpp"
#include "hscs/parallel.hpp"
#include "hscs/wavelet.hpp"

namespace hscs {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// A = S H^{-1} and its adjoint A^T = H S^T, with reusable workspace.
class CompositeOperator {
 public:
  explicit CompositeOperator(const SamplingOperator& op) : op_(op), signal_(op.n()), scratch_(op.n()) {}

  void apply(std::span<const double> u, std::span<double> y) {
    std::copy(u.begin(), u.end(), signal_.begin());
    haar_inverse_inplace(signal_, scratch_);
    op_.apply(signal_, y);
  }

  void adjoint(std::span<const double> y, std::span<double> u) {
    op_.apply_adjoint(y, u);
    haar_forward_inplace(u, scratch_);
  }

 private:
  const SamplingOperator& op_;
  std::vector<double> signal_;
  std::vector<double> scratch_;
};

}  // namespace

void SolverConfig::validate() const {
  if (!(mu > 0.0) || !(lambda > 0.0)) throw InvalidArgument("mu and lambda must be positive");
  if (max_outer < 1 || max_inner < 1) throw InvalidArgument("iteration limits must be positive");
  if (!(tol_constraint > 0.0 && tol_constraint < 1.0) || !(tol_change > 0.0 && tol_change < 1.0))
    throw InvalidArgument("tolerances must lie in (0, 1)");
}

std::vector<double> shrink(std::span<const double> z, double gamma) {
  std::vector<double> out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double mag = std::abs(z[i]) - gamma;
    out[i] = mag > 0.0 ? std::copysign(mag, z[i]) : 0.0;
  }
  return out;
}

void projected_inverse(std::span<const double> w, std::span<const double> pw, double mu, double lambda,
                       std::span<double> u) noexcept {
  const double c = mu / (lambda + mu);
  for (std::size_t i = 0; i < w.size(); ++i) u[i] = (w[i] - c * pw[i]) / lambda;
}

BandReconstruction reconstruct_band(std::span<const double> y, const SamplingOperator& op,
                                    const SolverConfig& cfg) {
  cfg.validate();
  if (y.size() != op.k())
    throw DimensionMismatch("band has " + std::to_string(y.size()) + " measurements, operator expects " +
                            std::to_string(op.k()));
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = op.n(), k = op.k();
  const double mu = cfg.mu, lambda = cfg.lambda, gamma = 1.0 / lambda;
  CompositeOperator a(op);

  BandReconstruction out;
  out.u.assign(n, 0.0);
  std::vector<double> d(n, 0.0), bvec(n, 0.0), w(n), pw(n), at_yhat(n), prev(n), inner_prev(n);
  std::vector<double> yhat(y.begin(), y.end()), aw(k), resid(k);
  const double ynorm = norm2(y);
  const double yscale = ynorm > 0.0 ? ynorm : 1.0;

  SolverReport& rep = out.report;
  a.adjoint(y, out.u);  // minimum-norm feasible start

  // With k == n the constraint alone determines u = A^T y.
  if (k == n) {
    std::vector<double> check(k);
    a.apply(out.u, check);
    for (std::size_t r = 0; r < k; ++r) resid[r] = y[r] - check[r];
    rep.final_constraint_residual = norm2(resid) / yscale;
    rep.residual_history.push_back(rep.final_constraint_residual);
    rep.converged = rep.final_constraint_residual <= cfg.tol_constraint;
  }

  for (int outer = 0; outer < cfg.max_outer && !rep.converged; ++outer) {
    prev = out.u;
    a.adjoint(yhat, at_yhat);
    for (int inner = 0; inner < cfg.max_inner; ++inner) {
      for (std::size_t i = 0; i < n; ++i) w[i] = lambda * (d[i] - bvec[i]) + mu * at_yhat[i];
      a.apply(w, aw);
      a.adjoint(aw, pw);
      inner_prev = out.u;
      ++rep.inner_iterations;
      projected_inverse(w, pw, mu, lambda, out.u);
      double step = 0.0, size = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double z = out.u[i] + bvec[i];
        const double mag = std::abs(z) - gamma;
        d[i] = mag > 0.0 ? std::copysign(mag, z) : 0.0;
        bvec[i] += out.u[i] - d[i];
        step += (out.u[i] - inner_prev[i]) * (out.u[i] - inner_prev[i]);
        size += out.u[i] * out.u[i];
      }
      // The subproblem is solved once u stops moving.
      if (step <= cfg.tol_change * cfg.tol_change * size) break;
    }
    // A u = A w / (lambda + mu) because A A^T = I.
    for (std::size_t r = 0; r < k; ++r) {
      resid[r] = y[r] - aw[r] / (lambda + mu);
      yhat[r] += resid[r];
    }
    const double residual = norm2(resid) / yscale;
    double change_num = 0.0, change_den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      change_num += (out.u[i] - prev[i]) * (out.u[i] - prev[i]);
      change_den += prev[i] * prev[i];
    }
    const double change = change_den > 0.0 ? std::sqrt(change_num / change_den) : std::sqrt(change_num);
    rep.outer_iterations = outer + 1;
    rep.final_constraint_residual = residual;
    rep.residual_history.push_back(residual);
    if (residual <= cfg.tol_constraint && change <= cfg.tol_change) {
      rep.converged = true;
      break;
    }
  }

  rep.final_l1 = 0.0;
  for (double v : out.u) rep.final_l1 += std::abs(v);
  out.x = out.u;
  std::vector<double> scratch(n);
  haar_inverse_inplace(out.x, scratch);
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

CubeReconstruction reconstruct_cube(const Measurements& y, const SamplingOperator& op,
                                    const SolverConfig& cfg, unsigned threads) {
  cfg.validate();
  if (y.k != op.k())
    throw DimensionMismatch("measurements have k=" + std::to_string(y.k) + " but operator has k=" +
                            std::to_string(op.k()));
  CubeReconstruction out{FlatCube(op.n(), y.b), std::vector<SolverReport>(y.b), 0.0};
  parallel_for(y.b, threads, [&](std::size_t j) {
    auto band = reconstruct_band(y.column(j), op, cfg);
    std::copy(band.x.begin(), band.x.end(), out.flat.column(j).begin());
    out.reports[j] = std::move(band.report);
  });
  for (const auto& r : out.reports) out.total_l1 += r.final_l1;
  return out;
}

}  // namespace hscs
