#include "stlab/problem.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "stlab/errors.hpp"

namespace stlab {

int VarStore::add_pose(const Pose3& value) {
  Entry e;
  e.is_pose = true;
  e.pose = value;
  entries_.push_back(std::move(e));
  return int(entries_.size()) - 1;
}

int VarStore::add_vec(const VecX& value) {
  Entry e;
  e.is_pose = false;
  e.vec = value;
  entries_.push_back(std::move(e));
  return int(entries_.size()) - 1;
}

int VarStore::dim(int id) const {
  const Entry& e = entries_[size_t(id)];
  return e.is_pose ? 6 : int(e.vec.size());
}

void VarStore::apply_delta(int id, const VecX& delta) {
  Entry& e = entries_[size_t(id)];
  if (e.is_pose) {
    e.pose = e.pose.boxplus(Vec6(delta));
  } else {
    e.vec += delta;
  }
}

BlockLayout::BlockLayout(const VarStore& x, const std::vector<int>& var_ids)
    : vars_(var_ids),
      offsets_(size_t(x.count()), -1),
      dims_(size_t(x.count()), 0) {
  for (int id : var_ids) {
    offsets_[size_t(id)] = total_;
    dims_[size_t(id)] = x.dim(id);
    total_ += x.dim(id);
  }
}

VecX QuadraticPrior::delta(const VarStore& x) const {
  VecX d(dim());
  int off = 0;
  for (size_t i = 0; i < vars.size(); ++i) {
    if (ref_is_pose[i]) {
      d.segment<6>(off) = local_coordinates(pose_ref[i], x.pose(vars[i]));
      off += 6;
    } else {
      const VecX& ref = vec_ref[i];
      d.segment(off, ref.size()) = x.vec(vars[i]) - ref;
      off += int(ref.size());
    }
  }
  return d;
}

double QuadraticPrior::cost(const VarStore& x) const {
  if (empty()) return 0.0;
  const VecX d = delta(x);
  return 0.5 * d.dot(H * d) + b.dot(d) + c;
}

void QuadraticPrior::shift_to(const VarStore& x) {
  if (empty()) return;
  const VecX d = delta(x);
  c += 0.5 * d.dot(H * d) + b.dot(d);
  b += H * d;
  for (size_t i = 0; i < vars.size(); ++i) {
    if (ref_is_pose[i]) {
      pose_ref[i] = x.pose(vars[i]);
    } else {
      vec_ref[i] = x.vec(vars[i]);
    }
  }
}

double total_cost(const VarStore& x, const std::vector<const Factor*>& factors,
                  const QuadraticPrior* prior) {
  double cost = 0.0;
  for (const Factor* f : factors) {
    const FactorBlocks fb = f->evaluate(x, false);
    cost += 0.5 * fb.r.dot(fb.weight.cwiseProduct(fb.r));
  }
  if (prior && !prior->empty()) cost += prior->cost(x);
  return cost;
}

namespace {

void add_prior_blocks(const VarStore& x, const QuadraticPrior& prior,
                      const BlockLayout& layout, MatX* H, VecX* b,
                      double* cost) {
  const VecX d = prior.delta(x);
  const VecX grad = prior.H * d + prior.b;
  int row = 0;
  for (size_t i = 0; i < prior.vars.size(); ++i) {
    const int di = prior.ref_is_pose[i] ? 6 : int(prior.vec_ref[i].size());
    const int oi = layout.offset(prior.vars[i]);
    if (oi < 0) {
      throw FactorEvaluationFailure("prior variable missing from layout");
    }
    b->segment(oi, di) += grad.segment(row, di);
    int col = 0;
    for (size_t j = 0; j < prior.vars.size(); ++j) {
      const int dj = prior.ref_is_pose[j] ? 6 : int(prior.vec_ref[j].size());
      const int oj = layout.offset(prior.vars[j]);
      H->block(oi, oj, di, dj) += prior.H.block(row, col, di, dj);
      col += dj;
    }
    row += di;
  }
  *cost += 0.5 * d.dot(prior.H * d) + prior.b.dot(d) + prior.c;
}

}  // namespace

void assemble_normal(const VarStore& x,
                     const std::vector<const Factor*>& factors,
                     const QuadraticPrior* prior, const BlockLayout& layout,
                     MatX* H, VecX* b, double* cost) {
  const int n = layout.total_dim();
  H->setZero(n, n);
  b->setZero(n);
  *cost = 0.0;

  for (const Factor* f : factors) {
    const FactorBlocks fb = f->evaluate(x, true);
    const VecX wr = fb.weight.cwiseProduct(fb.r);
    *cost += 0.5 * fb.r.dot(wr);
    const std::vector<int>& ids = f->vars();
    for (size_t i = 0; i < ids.size(); ++i) {
      const int oi = layout.offset(ids[i]);
      if (oi < 0) {
        throw FactorEvaluationFailure("factor variable missing from layout");
      }
      const MatX& ji = fb.jac[i];
      b->segment(oi, ji.cols()) += ji.transpose() * wr;
      for (size_t j = i; j < ids.size(); ++j) {
        const int oj = layout.offset(ids[j]);
        const MatX& jj = fb.jac[j];
        const MatX block =
            ji.transpose() * fb.weight.asDiagonal() * jj;
        H->block(oi, oj, block.rows(), block.cols()) += block;
        if (oi != oj) {
          H->block(oj, oi, block.cols(), block.rows()) += block.transpose();
        }
      }
    }
  }
  if (prior && !prior->empty()) {
    add_prior_blocks(x, *prior, layout, H, b, cost);
  }
}

LmReport lm_solve(VarStore& x, const std::vector<const Factor*>& factors,
                  const QuadraticPrior* prior, const BlockLayout& layout,
                  const LmOptions& options, const PostStepHook& hook) {
  LmReport report;
  MatX H;
  VecX g;
  double cost = 0.0;
  assemble_normal(x, factors, prior, layout, &H, &g, &cost);
  report.initial_cost = cost;

  double lambda = options.lambda_init;
  while (true) {
    MatX damped = H;
    damped.diagonal() += lambda * H.diagonal().cwiseMax(1e-12);
    Eigen::LDLT<MatX> ldlt(damped);
    VecX step = ldlt.solve(-g);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      damped.diagonal().array() += 1e-12;
      ldlt.compute(damped);
      step = ldlt.solve(-g);
      report.rank_deficient = true;
      if (!step.allFinite()) {
        lambda *= options.lambda_up;
        if (lambda > options.lambda_max) {
          report.status = LmStatus::kFailed;
          break;
        }
        continue;
      }
    }

    if (step.norm() < options.step_tol) {
      report.status = LmStatus::kConverged;
      break;
    }

    VarStore trial = x;
    int off = 0;
    for (int id : layout.vars()) {
      trial.apply_delta(id, step.segment(off, layout.dim_of(id)));
      off += layout.dim_of(id);
    }
    if (hook) hook(trial);

    double trial_cost = std::numeric_limits<double>::infinity();
    try {
      trial_cost = total_cost(trial, factors, prior);
      if (!std::isfinite(trial_cost)) {
        trial_cost = std::numeric_limits<double>::infinity();
      }
    } catch (const Error&) {
      // A trial step that breaks evaluation is simply rejected.
    }

    if (trial_cost < cost) {
      x = trial;
      ++report.iterations;
      const double decrease = cost - trial_cost;
      cost = trial_cost;
      lambda = std::max(lambda * options.lambda_down, 1e-12);
      if (decrease < options.rel_cost_tol * std::max(cost, 1.0)) {
        report.status = LmStatus::kConverged;
        break;
      }
      if (report.iterations >= options.max_iterations) {
        report.status = LmStatus::kMaxIterations;
        break;
      }
      assemble_normal(x, factors, prior, layout, &H, &g, &cost);
    } else {
      lambda *= options.lambda_up;
      if (lambda > options.lambda_max) {
        report.status = LmStatus::kFailed;
        break;
      }
    }
  }
  report.final_cost = cost;
  return report;
}

MarginalizeResult marginalize_out(const VarStore& x,
                                  const std::vector<const Factor*>& factors,
                                  const QuadraticPrior* old_prior,
                                  const std::vector<int>& drop_vars) {
  // Joint layout with the departing variables first.
  std::vector<int> ordered = drop_vars;
  std::vector<char> in(size_t(x.count()), 0);
  for (int id : drop_vars) in[size_t(id)] = 1;
  auto append = [&](int id) {
    if (!in[size_t(id)]) {
      in[size_t(id)] = 1;
      ordered.push_back(id);
    }
  };
  for (const Factor* f : factors) {
    for (int id : f->vars()) append(id);
  }
  if (old_prior) {
    for (int id : old_prior->vars) append(id);
  }

  const BlockLayout layout(x, ordered);
  MatX H;
  VecX b;
  double cost = 0.0;
  assemble_normal(x, factors, old_prior, layout, &H, &b, &cost);

  int nd = 0;
  for (int id : drop_vars) nd += x.dim(id);
  const int nk = layout.total_dim() - nd;

  MarginalizeResult out;
  if (nk == 0) {
    return out;  // everything eliminated, nothing to carry forward
  }

  const MatX h_dd = H.topLeftCorner(nd, nd);
  const MatX h_dk = H.topRightCorner(nd, nk);
  const MatX h_kk = H.bottomRightCorner(nk, nk);
  const VecX b_d = b.head(nd);
  const VecX b_k = b.tail(nk);

  Eigen::LDLT<MatX> ldlt(h_dd);
  const bool deficient = ldlt.info() != Eigen::Success ||
                         ldlt.vectorD().minCoeff() < 1e-12;
  if (deficient) {
    MatX reg = h_dd;
    reg.diagonal().array() += 1e-12;
    ldlt.compute(reg);
    out.rank_deficient = true;
  }
  MatX sol_dk = ldlt.solve(h_dk);
  VecX sol_bd = ldlt.solve(b_d);

  MatX h_new = h_kk - h_dk.transpose() * sol_dk;
  h_new = 0.5 * (h_new + h_new.transpose()).eval();
  const VecX b_new = b_k - h_dk.transpose() * sol_bd;
  const double c_new = cost - 0.5 * b_d.dot(sol_bd);

  QuadraticPrior& prior = out.prior;
  prior.H = h_new;
  prior.b = b_new;
  prior.c = c_new;
  for (size_t i = drop_vars.size(); i < ordered.size(); ++i) {
    const int id = ordered[i];
    prior.vars.push_back(id);
    prior.ref_is_pose.push_back(x.is_pose(id));
    if (x.is_pose(id)) {
      prior.pose_ref.push_back(x.pose(id));
      prior.vec_ref.emplace_back();
    } else {
      prior.pose_ref.emplace_back();
      prior.vec_ref.push_back(x.vec(id));
    }
  }
  return out;
}

}  // namespace stlab
