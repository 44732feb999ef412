#pragma once

#include <string>

#include "core/matrix.hpp"

namespace frugal {

// Shared hyperparameters. beta1 drives SGDM's momentum and Lion's update
// interpolation; beta2 drives Adam's second moment and Lion's momentum decay.
struct Hyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled

    void validate() const;
};

struct AdamState {
    Matrix m;
    Matrix v;
    long step = 0;

    static AdamState zeros(long rows, long cols) { return AdamState{Matrix(rows, cols), Matrix(rows, cols), 0}; }
};

struct MomentumState {
    Matrix m;

    static MomentumState zeros(long rows, long cols) { return MomentumState{Matrix(rows, cols)}; }
};

inline double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Update kernels: the raw additive update u with new_param = param + u,
// before weight decay. The engine composes these in projected coordinates;
// the *_step functions below apply them in ambient space.
Matrix sgd_update(const Matrix& grad, const Hyper& h);
Matrix signsgd_update(const Matrix& grad, const Hyper& h);
Matrix sgdm_update(MomentumState& state, const Matrix& grad, const Hyper& h);
Matrix adamw_update(AdamState& state, const Matrix& grad, const Hyper& h);
Matrix lion_update(MomentumState& state, const Matrix& grad, const Hyper& h);

// param - lr*grad, then decoupled decay param *= (1 - lr*wd).
Matrix sgd_step(const Matrix& param, const Matrix& grad, const Hyper& h);

// param - lr*sign(grad) with sign(0) = 0, then decoupled decay.
Matrix signsgd_step(const Matrix& param, const Matrix& grad, const Hyper& h);

// Dampened heavy ball: m <- (1-beta1)*grad + beta1*m; param <- param - lr*m.
Matrix sgdm_step(const Matrix& param, MomentumState& state, const Matrix& grad, const Hyper& h);

// AdamW with bias correction; decay term is -lr*wd*param on the incoming
// parameter value.
Matrix adamw_step(const Matrix& param, AdamState& state, const Matrix& grad, const Hyper& h);

// update = -lr*sign(beta1*m + (1-beta1)*grad); m <- beta2*m + (1-beta2)*grad.
Matrix lion_step(const Matrix& param, MomentumState& state, const Matrix& grad, const Hyper& h);

enum class RuleId { none, sgd, signsgd, sgdm, adamw, lion };

RuleId rule_from_string(const std::string& name);
std::string rule_to_string(RuleId id);
bool rule_is_stateful(RuleId id);
// Moment buffers a rule allocates per parameter (AdamW 2, SGDM/Lion 1).
int rule_moment_buffers(RuleId id);

}  // namespace frugal
