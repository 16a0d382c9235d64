#pragma once

#include <functional>
#include <vector>

#include "stlab/pose.hpp"

namespace stlab {

// Flat container of optimization variables. A variable is either a pose
// (6-dof manifold, right-multiplicative updates) or a plain vector.
class VarStore {
 public:
  int add_pose(const Pose3& value);
  int add_vec(const VecX& value);

  bool is_pose(int id) const { return entries_[size_t(id)].is_pose; }
  const Pose3& pose(int id) const { return entries_[size_t(id)].pose; }
  Pose3& pose(int id) { return entries_[size_t(id)].pose; }
  const VecX& vec(int id) const { return entries_[size_t(id)].vec; }
  VecX& vec(int id) { return entries_[size_t(id)].vec; }

  int dim(int id) const;
  int count() const { return int(entries_.size()); }

  // Manifold update: boxplus for poses, addition for vectors.
  void apply_delta(int id, const VecX& delta);

 private:
  struct Entry {
    bool is_pose = false;
    Pose3 pose;
    VecX vec;
  };
  std::vector<Entry> entries_;
};

// Residual evaluation output. weight holds the per-component information
// diagonal; jac is aligned with the factor's variable list and is filled
// only when jacobians were requested.
struct FactorBlocks {
  VecX r;
  VecX weight;
  std::vector<MatX> jac;
};

class Factor {
 public:
  virtual ~Factor() = default;
  virtual const std::vector<int>& vars() const = 0;
  virtual FactorBlocks evaluate(const VarStore& x, bool with_jac) const = 0;
};

// Maps a subset of variables to contiguous tangent-space columns.
class BlockLayout {
 public:
  BlockLayout() = default;
  BlockLayout(const VarStore& x, const std::vector<int>& var_ids);

  int offset(int id) const {
    return id < int(offsets_.size()) ? offsets_[size_t(id)] : -1;
  }
  int dim_of(int id) const { return dims_[size_t(id)]; }
  int total_dim() const { return total_; }
  const std::vector<int>& vars() const { return vars_; }

 private:
  std::vector<int> vars_;
  std::vector<int> offsets_;  // indexed by variable id, -1 when absent
  std::vector<int> dims_;     // indexed by variable id
  int total_ = 0;
};

// Quadratic form left behind by marginalization, linearized once and frozen:
// cost(x) = 0.5 d'Hd + b'd + c with d the stacked local difference between
// x and the stored reference values.
struct QuadraticPrior {
  std::vector<int> vars;
  std::vector<Pose3> pose_ref;
  std::vector<VecX> vec_ref;
  std::vector<bool> ref_is_pose;
  MatX H;
  VecX b;
  double c = 0.0;

  bool empty() const { return vars.empty(); }
  int dim() const { return int(H.rows()); }
  VecX delta(const VarStore& x) const;
  double cost(const VarStore& x) const;
  // Re-centers the reference on the current values without changing the
  // represented quadratic: b and c absorb the shift.
  void shift_to(const VarStore& x);
};

struct LmOptions {
  int max_iterations = 10;
  double step_tol = 1e-8;
  double rel_cost_tol = 1e-10;
  double lambda_init = 1e-4;
  double lambda_max = 1e10;
  double lambda_up = 10.0;
  double lambda_down = 0.1;
};

enum class LmStatus { kConverged, kMaxIterations, kFailed };

struct LmReport {
  LmStatus status = LmStatus::kConverged;
  int iterations = 0;  // accepted steps
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool rank_deficient = false;
};

// Invoked after every accepted step (used to clamp parameters).
using PostStepHook = std::function<void(VarStore&)>;

double total_cost(const VarStore& x, const std::vector<const Factor*>& factors,
                  const QuadraticPrior* prior);

// Builds the normal equations of the weighted least-squares problem over
// the layout's variables at the current values.
void assemble_normal(const VarStore& x,
                     const std::vector<const Factor*>& factors,
                     const QuadraticPrior* prior, const BlockLayout& layout,
                     MatX* H, VecX* b, double* cost);

// Levenberg-Marquardt with diagonal damping. A trial step whose evaluation
// throws a recoverable error counts as infinite cost and is rejected.
LmReport lm_solve(VarStore& x, const std::vector<const Factor*>& factors,
                  const QuadraticPrior* prior, const BlockLayout& layout,
                  const LmOptions& options, const PostStepHook& hook = {});

struct MarginalizeResult {
  QuadraticPrior prior;
  bool rank_deficient = false;
};

// Folds the given factors and the old prior into a joint quadratic about
// the current values, then eliminates drop_vars by Schur complement. The
// returned prior replaces the old one and references every remaining
// variable that the inputs touched.
MarginalizeResult marginalize_out(const VarStore& x,
                                  const std::vector<const Factor*>& factors,
                                  const QuadraticPrior* old_prior,
                                  const std::vector<int>& drop_vars);

}  // namespace stlab
