#include "core/optim_rules.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace frugal {

void Hyper::validate() const {
    if (!(lr > 0.0)) throw ParameterError("Hyper: lr must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0) throw ParameterError("Hyper: beta1 must be in [0,1)");
    if (beta2 < 0.0 || beta2 >= 1.0) throw ParameterError("Hyper: beta2 must be in [0,1)");
    if (!(eps > 0.0)) throw ParameterError("Hyper: eps must be positive");
    if (weight_decay < 0.0) throw ParameterError("Hyper: weight_decay must be non-negative");
}

namespace {

Matrix apply_decay(Matrix param, const Hyper& h) {
    if (h.weight_decay == 0.0) return param;
    double factor = 1.0 - h.lr * h.weight_decay;
    for (std::size_t i = 0; i < param.size(); ++i) param.at_flat(i) *= factor;
    return param;
}

}  // namespace

Matrix sgd_update(const Matrix& grad, const Hyper& h) {
    Matrix u(grad.rows(), grad.cols());
    for (std::size_t i = 0; i < grad.size(); ++i) u.at_flat(i) = -h.lr * grad.at_flat(i);
    return u;
}

Matrix signsgd_update(const Matrix& grad, const Hyper& h) {
    Matrix u(grad.rows(), grad.cols());
    for (std::size_t i = 0; i < grad.size(); ++i) u.at_flat(i) = -h.lr * sign(grad.at_flat(i));
    return u;
}

Matrix sgdm_update(MomentumState& state, const Matrix& grad, const Hyper& h) {
    require_same_shape(state.m, grad, "sgdm_update");
    Matrix u(grad.rows(), grad.cols());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        double m = (1.0 - h.beta1) * grad.at_flat(i) + h.beta1 * state.m.at_flat(i);
        state.m.at_flat(i) = m;
        u.at_flat(i) = -h.lr * m;
    }
    return u;
}

Matrix adamw_update(AdamState& state, const Matrix& grad, const Hyper& h) {
    require_same_shape(state.m, grad, "adamw_update");
    state.step += 1;
    double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
    double bc2_sqrt = std::sqrt(bc2);
    Matrix u(grad.rows(), grad.cols());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        double g = grad.at_flat(i);
        double m = h.beta1 * state.m.at_flat(i) + (1.0 - h.beta1) * g;
        double v = h.beta2 * state.v.at_flat(i) + (1.0 - h.beta2) * g * g;
        state.m.at_flat(i) = m;
        state.v.at_flat(i) = v;
        double denom = std::sqrt(v) / bc2_sqrt + h.eps;
        u.at_flat(i) = -(h.lr / bc1) * m / denom;
    }
    return u;
}

Matrix lion_update(MomentumState& state, const Matrix& grad, const Hyper& h) {
    require_same_shape(state.m, grad, "lion_update");
    Matrix u(grad.rows(), grad.cols());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        double g = grad.at_flat(i);
        double interp = h.beta1 * state.m.at_flat(i) + (1.0 - h.beta1) * g;
        u.at_flat(i) = -h.lr * sign(interp);
        state.m.at_flat(i) = h.beta2 * state.m.at_flat(i) + (1.0 - h.beta2) * g;
    }
    return u;
}

Matrix sgd_step(const Matrix& param, const Matrix& grad, const Hyper& h) {
    require_same_shape(param, grad, "sgd_step");
    return apply_decay(param + sgd_update(grad, h), h);
}

Matrix signsgd_step(const Matrix& param, const Matrix& grad, const Hyper& h) {
    require_same_shape(param, grad, "signsgd_step");
    return apply_decay(param + signsgd_update(grad, h), h);
}

Matrix sgdm_step(const Matrix& param, MomentumState& state, const Matrix& grad, const Hyper& h) {
    require_same_shape(param, grad, "sgdm_step");
    return apply_decay(param + sgdm_update(state, grad, h), h);
}

Matrix adamw_step(const Matrix& param, AdamState& state, const Matrix& grad, const Hyper& h) {
    require_same_shape(param, grad, "adamw_step");
    Matrix out = param + adamw_update(state, grad, h);
    if (h.weight_decay != 0.0)
        for (std::size_t i = 0; i < out.size(); ++i) out.at_flat(i) -= h.lr * h.weight_decay * param.at_flat(i);
    return out;
}

Matrix lion_step(const Matrix& param, MomentumState& state, const Matrix& grad, const Hyper& h) {
    require_same_shape(param, grad, "lion_step");
    return apply_decay(param + lion_update(state, grad, h), h);
}

RuleId rule_from_string(const std::string& name) {
    if (name == "none") return RuleId::none;
    if (name == "sgd") return RuleId::sgd;
    if (name == "signsgd") return RuleId::signsgd;
    if (name == "sgdm") return RuleId::sgdm;
    if (name == "adamw") return RuleId::adamw;
    if (name == "lion") return RuleId::lion;
    throw ConfigError("unknown optimizer rule: " + name);
}

std::string rule_to_string(RuleId id) {
    switch (id) {
        case RuleId::none: return "none";
        case RuleId::sgd: return "sgd";
        case RuleId::signsgd: return "signsgd";
        case RuleId::sgdm: return "sgdm";
        case RuleId::adamw: return "adamw";
        case RuleId::lion: return "lion";
    }
    return "none";
}

bool rule_is_stateful(RuleId id) { return id == RuleId::sgdm || id == RuleId::adamw || id == RuleId::lion; }

int rule_moment_buffers(RuleId id) {
    switch (id) {
        case RuleId::adamw: return 2;
        case RuleId::sgdm:
        case RuleId::lion: return 1;
        default: return 0;
    }
}

}  // namespace frugal
