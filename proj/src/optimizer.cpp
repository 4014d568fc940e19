#include "orpa/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "orpa/errors.hpp"
#include "orpa/kernels.hpp"
#include "orpa/objective.hpp"

namespace orpa {

MiniBatch form_batch(const Problem& problem, const Vector& theta, std::size_t size,
                     OracleMode mode, Rng& triple_rng, Rng& label_rng) {
  const PolicyParams params = problem.at(theta);
  MiniBatch batch;
  batch.triples = sample_triples(problem.env, params, triple_rng, size);
  batch.labels.reserve(size);
  for (const ComparisonTriple& z : batch.triples) {
    batch.labels.push_back(
        sample_label(mode, problem.oracle, problem.hyper.rho, problem.env, params, z, label_rng));
  }
  return batch;
}

namespace {

struct BatchDirections {
  Vector sail;
  Vector penalty;
};

BatchDirections batch_directions(const Problem& problem, const Vector& theta,
                                 const MiniBatch& batch, bool want_sail, bool want_penalty) {
  const auto d = static_cast<Eigen::Index>(problem.dim());
  const PolicyTable table = tabulate_policy(problem.env, theta, false);
  const Vector offset = theta - problem.theta_ref;
  BatchDirections out{Vector::Zero(d), Vector::Zero(d)};
  Vector dpsi(d), score(d);
  for (std::size_t i = 0; i < batch.triples.size(); ++i) {
    const ComparisonTriple& z = batch.triples[i];
    dpsi = problem.env.feature(z.x, z.y1) - problem.env.feature(z.x, z.y2);
    score = problem.env.feature(z.x, z.y1) + problem.env.feature(z.x, z.y2) - 2.0 * table.mean[z.x];
    const double s = offset.dot(dpsi);
    if (want_sail) out.sail += sail_sample_grad(problem.hyper.beta, s, batch.labels[i], dpsi, score);
    if (want_penalty) out.penalty += penalty_sample_subgrad(s, dpsi, score);
  }
  if (!batch.triples.empty()) {
    const double inv = 1.0 / static_cast<double>(batch.triples.size());
    out.sail *= inv;
    out.penalty *= inv;
  }
  return out;
}

void require_labels(const MiniBatch& batch) {
  if (batch.labels.size() != batch.triples.size()) {
    throw InvalidInput("mini-batch has " + std::to_string(batch.triples.size()) + " triples but " +
                       std::to_string(batch.labels.size()) + " labels");
  }
}

}  // namespace

Vector stoch_grad_sail(const Problem& problem, const Vector& theta, const MiniBatch& batch) {
  require_labels(batch);
  return batch_directions(problem, theta, batch, true, false).sail;
}

Vector stoch_subgrad_penalty(const Problem& problem, const Vector& theta, const MiniBatch& batch) {
  return batch_directions(problem, theta, batch, false, true).penalty;
}

Vector composite_direction(const Problem& problem, const Vector& theta, const MiniBatch& batch) {
  require_labels(batch);
  const double lambda = problem.hyper.lambda();
  const BatchDirections g = batch_directions(problem, theta, batch, true, lambda != 0.0);
  if (lambda == 0.0) return g.sail;
  return g.sail + lambda * g.penalty;
}

RunTrace rscgd_run(const Problem& problem, const Vector& theta0, std::uint64_t seed,
                   const RunOptions& options) {
  validate_problem(problem);
  const PolicyParams geometry = problem.at(theta0);
  validate_params(problem.env, geometry);
  if (!is_feasible(geometry)) throw InvalidInput("rscgd: theta0 lies outside the feasible ball");

  const Hyperparams& hyper = problem.hyper;
  Rng triple_rng = make_stream(seed, "triples");
  Rng label_rng = make_stream(seed, "labels");
  Rng output_rng = make_stream(seed, "output");

  RunTrace trace;
  trace.rng_seed = seed;
  trace.mode = options.mode;
  trace.eta = hyper.eta;
  trace.iterates.reserve(hyper.horizon_t + 1);
  trace.wall_ns.assign(hyper.horizon_t + 1, 0);

  const auto start = std::chrono::steady_clock::now();
  const auto stamp = [&](std::size_t t) {
    if (!options.record_wall_time) return;
    trace.wall_ns[t] = std::chrono::duration_cast<std::chrono::nanoseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  };

  Vector theta = theta0;
  trace.iterates.push_back(theta);
  if (options.log_exact_loss) trace.losses.push_back(robust_objective_closed_form(problem, theta));
  stamp(0);

  for (std::size_t t = 0; t < hyper.horizon_t; ++t) {
    const MiniBatch batch =
        form_batch(problem, theta, hyper.batch_b, options.mode, triple_rng, label_rng);
    const Vector direction = composite_direction(problem, theta, batch);
    theta = project_feasible(geometry, theta - hyper.eta * direction);
    if (!theta.allFinite()) {
      std::ostringstream msg;
      msg << "iterate " << t + 1 << " is not finite; the stepsize eta = " << hyper.eta
          << " is likely too large";
      throw NonFiniteIterate(msg.str());
    }
    trace.iterates.push_back(theta);
    if (options.log_exact_loss) trace.losses.push_back(robust_objective_closed_form(problem, theta));
    stamp(t + 1);
  }
  trace.output_index = static_cast<std::size_t>(uniform_index(output_rng, hyper.horizon_t));
  return trace;
}

StepsizeChoice corollary_stepsize(const ConstantsBundle& bundle, std::size_t horizon_t,
                                  double f_env0) {
  check_envelope_param(bundle.kappa, bundle.lambda_env);
  if (horizon_t == 0) throw InvalidInput("corollary_stepsize: horizon must be at least 1");
  if (f_env0 < bundle.f_inf) {
    throw InvalidInput("corollary_stepsize: envelope value at theta0 is below F_inf");
  }
  const double gap = f_env0 - bundle.f_inf;
  const double margin = 1.0 - bundle.kappa * bundle.lambda_env;
  StepsizeChoice choice;
  choice.eta = std::sqrt(2.0 * bundle.lambda_env * margin * gap /
                         (bundle.g_tot2 * static_cast<double>(horizon_t)));
  choice.rate_bound = tuned_rate_bound(bundle, horizon_t, f_env0);
  choice.degenerate = gap == 0.0;
  return choice;
}

double rate_bound_rhs(const ConstantsBundle& bundle, double eta, std::size_t horizon_t,
                        double f_env0) {
  check_envelope_param(bundle.kappa, bundle.lambda_env);
  const double margin = 1.0 - bundle.kappa * bundle.lambda_env;
  return (f_env0 - bundle.f_inf) / (eta * margin * static_cast<double>(horizon_t)) +
         bundle.l_env * eta * bundle.g_tot2 / (2.0 * margin);
}

double tuned_rate_bound(const ConstantsBundle& bundle, std::size_t horizon_t, double f_env0) {
  check_envelope_param(bundle.kappa, bundle.lambda_env);
  const double margin = 1.0 - bundle.kappa * bundle.lambda_env;
  return std::sqrt(2.0 * bundle.g_tot2 * (f_env0 - bundle.f_inf) /
                   (bundle.lambda_env * margin * margin * margin * static_cast<double>(horizon_t)));
}

}  // namespace orpa
