#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hscs/cube.hpp"
#include "hscs/sampling.hpp"

namespace hscs {

// Parameters of the constrained split Bregman iteration for
//
//   min ||u||_1  subject to  y = S H^{-1} u.
struct SolverConfig {
  double mu = 1.0;      // weight of the (Bregman-updated) data term
  double lambda = 1.0;  // weight of the d = u splitting term; shrink threshold is 1/lambda
  int max_outer = 200;
  int max_inner = 5;  // inner split Bregman sweeps; stops early once u settles
  double tol_constraint = 1e-6;  // ||A u - y|| / ||y||
  double tol_change = 1e-8;      // ||u_t - u_{t-1}|| / ||u_{t-1}||

  // Throws InvalidArgument on non-positive values or tolerances >= 1.
  void validate() const;
};

struct SolverReport {
  int outer_iterations = 0;
  int inner_iterations = 0;  // summed over all outer iterations
  double final_constraint_residual = 0.0;
  double final_l1 = 0.0;
  bool converged = false;
  double seconds = 0.0;
  // Relative constraint residual after each outer iteration.
  std::vector<double> residual_history;
};

struct BandReconstruction {
  std::vector<double> x;  // H^{-1} u*
  std::vector<double> u;  // u*, Haar coefficients
  SolverReport report;
};

// Componentwise soft threshold sign(z) max(|z| - gamma, 0); exactly 0 at |z| == gamma.
std::vector<double> shrink(std::span<const double> z, double gamma);

// Closed-form solution of (lambda I + mu P) u = w for an orthogonal
// projection P, given Pw. Exposed for testing against an iterative solve.
void projected_inverse(std::span<const double> w, std::span<const double> pw, double mu, double lambda,
                       std::span<double> u) noexcept;

// Recovers one band from y = S x. Dimension mismatches throw; running out of
// iterations is reported through report.converged.
BandReconstruction reconstruct_band(std::span<const double> y, const SamplingOperator& op,
                                    const SolverConfig& cfg);

struct CubeReconstruction {
  FlatCube flat;
  std::vector<SolverReport> reports;  // one per band, in band order
  double total_l1 = 0.0;              // sum of per-band ||u*||_1
};

// Bands are independent problems and run on up to `threads` workers
// (0 = hardware concurrency). Output does not depend on the thread count.
CubeReconstruction reconstruct_cube(const Measurements& y, const SamplingOperator& op,
                                    const SolverConfig& cfg, unsigned threads = 0);

}  // namespace hscs
