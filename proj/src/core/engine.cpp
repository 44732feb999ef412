#include "core/engine.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace frugal {

GroupRole group_role_from_string(const std::string& name) {
    if (name == "projectable") return GroupRole::projectable;
    if (name == "always_full") return GroupRole::always_full;
    if (name == "frozen") return GroupRole::frozen;
    throw ConfigError("unknown group role: " + name);
}

StatePolicy state_policy_from_string(const std::string& name) {
    if (name == "reset") return StatePolicy::reset;
    if (name == "keep") return StatePolicy::keep;
    if (name == "reproject") return StatePolicy::reproject;
    if (name == "reproject_norm_preserving") return StatePolicy::reproject_norm_preserving;
    throw ConfigError("unknown state policy: " + name);
}

std::string state_policy_to_string(StatePolicy policy) {
    switch (policy) {
        case StatePolicy::reset: return "reset";
        case StatePolicy::keep: return "keep";
        case StatePolicy::reproject: return "reproject";
        case StatePolicy::reproject_norm_preserving: return "reproject_norm_preserving";
    }
    return "reset";
}

StatePolicy FrugalConfig::resolved_policy() const {
    if (state_policy) return *state_policy;
    if (projector == ProjectorKind::svd || projector == ProjectorKind::random_ortho) return StatePolicy::reproject;
    return StatePolicy::reset;
}

void FrugalConfig::validate() const {
    if (rho < 0.0 || rho > 1.0) throw ParameterError("FrugalConfig: rho must be in [0,1]");
    if (update_gap < 1) throw ParameterError("FrugalConfig: update_gap must be >= 1");
    if (!(lr_full > 0.0) || !(lr_free > 0.0)) throw ParameterError("FrugalConfig: learning rates must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw ParameterError("FrugalConfig: betas must be in [0,1)");
    if (!(eps > 0.0)) throw ParameterError("FrugalConfig: eps must be positive");
    if (weight_decay < 0.0) throw ParameterError("FrugalConfig: weight_decay must be non-negative");
    if (rule_full == RuleId::none) throw ParameterError("FrugalConfig: rule_full cannot be none");
}

OptimizerState OptimizerState::zeros(RuleId rule, long rows, long cols) {
    OptimizerState s;
    s.rule = rule;
    if (rule == RuleId::adamw) s.adam = AdamState::zeros(rows, cols);
    if (rule == RuleId::sgdm || rule == RuleId::lion) s.momentum = MomentumState::zeros(rows, cols);
    return s;
}

long OptimizerState::float_count() const {
    switch (rule) {
        case RuleId::adamw: return static_cast<long>(adam.m.size() + adam.v.size());
        case RuleId::sgdm:
        case RuleId::lion: return static_cast<long>(momentum.m.size());
        default: return 0;
    }
}

namespace {

Matrix transport(const Matrix& buf, const Projector& old_proj, const Projector& new_proj) {
    return new_proj.down(old_proj.up(buf));
}

}  // namespace

OptimizerState state_transition(const OptimizerState& old_state, const Projector& old_proj, const Projector& new_proj,
                                StatePolicy policy, long ambient_rows, long ambient_cols) {
    auto [new_rows, new_cols] = new_proj.projected_shape(ambient_rows, ambient_cols);
    auto [old_rows, old_cols] = old_proj.projected_shape(ambient_rows, ambient_cols);

    if (policy == StatePolicy::reset) return OptimizerState::zeros(old_state.rule, new_rows, new_cols);
    if (policy == StatePolicy::keep) {
        // Stale buffers survive only while shapes agree (GaLore behaviour);
        // a shape change forces a reset.
        if (old_rows == new_rows && old_cols == new_cols) return old_state;
        return OptimizerState::zeros(old_state.rule, new_rows, new_cols);
    }

    OptimizerState out = OptimizerState::zeros(old_state.rule, new_rows, new_cols);
    switch (old_state.rule) {
        case RuleId::adamw: {
            out.adam.m = transport(old_state.adam.m, old_proj, new_proj);
            out.adam.v = transport(old_state.adam.v, old_proj, new_proj);
            for (std::size_t i = 0; i < out.adam.v.size(); ++i)
                out.adam.v.at_flat(i) = std::max(0.0, out.adam.v.at_flat(i));
            out.adam.step = old_state.adam.step;
            if (policy == StatePolicy::reproject_norm_preserving) {
                double norm_old = frobenius_norm(old_state.adam.m);
                double norm_new = frobenius_norm(out.adam.m);
                if (norm_new > 0.0) out.adam.m = (norm_old / norm_new) * out.adam.m;
            }
            break;
        }
        case RuleId::sgdm:
        case RuleId::lion: {
            out.momentum.m = transport(old_state.momentum.m, old_proj, new_proj);
            if (policy == StatePolicy::reproject_norm_preserving) {
                double norm_old = frobenius_norm(old_state.momentum.m);
                double norm_new = frobenius_norm(out.momentum.m);
                if (norm_new > 0.0) out.momentum.m = (norm_old / norm_new) * out.momentum.m;
            }
            break;
        }
        default: break;
    }
    return out;
}

std::vector<GroupInit> classify_params(const std::vector<GroupSpec>& tensors, std::vector<Matrix> init,
                                       const std::map<std::string, std::string>& role_overrides) {
    if (tensors.size() != init.size()) throw ParameterError("classify_params: tensor/init count mismatch");
    for (const auto& [name, role] : role_overrides) {
        group_role_from_string(role);  // validates the role string
        bool known = false;
        for (const GroupSpec& t : tensors) known = known || t.name == name;
        if (!known) throw ConfigError("role override for unknown tensor: " + name);
    }

    std::vector<GroupInit> out;
    out.reserve(tensors.size());
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        GroupRole role = tensors[i].weight_matrix ? GroupRole::projectable : GroupRole::always_full;
        auto it = role_overrides.find(tensors[i].name);
        if (it != role_overrides.end()) role = group_role_from_string(it->second);
        out.push_back(GroupInit{tensors[i].name, std::move(init[i]), role});
    }
    return out;
}

FrugalEngine::FrugalEngine(std::vector<GroupInit> groups, FrugalConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    policy_ = cfg_.resolved_policy();
    hyper_full_ = Hyper{cfg_.lr_full, cfg_.beta1, cfg_.beta2, cfg_.eps, cfg_.weight_decay};
    hyper_free_ = Hyper{cfg_.lr_free, cfg_.beta1, cfg_.beta2, cfg_.eps, cfg_.weight_decay};

    for (std::size_t i = 0; i < groups.size(); ++i) {
        Group g;
        g.name = std::move(groups[i].name);
        g.param = std::move(groups[i].param);
        g.role = groups[i].role;
        if (g.role == GroupRole::always_full)
            g.state = OptimizerState::zeros(cfg_.rule_full, g.param.rows(), g.param.cols());
        if (g.role == GroupRole::projectable) projectable_ids_.push_back(i);
        groups_.push_back(std::move(g));
    }

    if (cfg_.projector == ProjectorKind::blocks)
        block_schedule_.emplace(cfg_.update_gap, cfg_.strategy, mix_seed(cfg_.seed, 0x626c6f636bULL));
    if (cfg_.projector == ProjectorKind::columns) {
        for (std::size_t pid = 0; pid < projectable_ids_.size(); ++pid) {
            Group& g = groups_[projectable_ids_[pid]];
            g.column_schedule.emplace(cfg_.update_gap, cfg_.strategy, mix_seed(cfg_.seed, 0x636f6cULL + pid));
        }
    }
}

void FrugalEngine::set_param(std::size_t i, Matrix value) {
    require_same_shape(groups_[i].param, value, "FrugalEngine::set_param(" + groups_[i].name + ")");
    groups_[i].param = std::move(value);
}

const Projector& FrugalEngine::projector(std::size_t i) const {
    if (!groups_[i].proj) throw ParameterError("group " + groups_[i].name + " has no projector yet");
    return *groups_[i].proj;
}

long FrugalEngine::state_float_count() const {
    long total = 0;
    for (const Group& g : groups_) {
        total += g.state.float_count();
        if (g.proj) total += g.proj->stored_floats();
    }
    return total;
}

std::string FrugalEngine::selection_string() const {
    if (cfg_.projector == ProjectorKind::blocks) {
        std::string out = "blocks:";
        for (std::size_t i = 0; i < active_blocks_.size(); ++i) {
            if (i) out += '|';
            out += std::to_string(active_blocks_[i]);
        }
        return out;
    }
    return projector_kind_to_string(cfg_.projector) + ":e" + std::to_string(step_ == 0 ? 0 : (step_ - 1) / cfg_.update_gap);
}

void FrugalEngine::refresh_subspaces(const std::vector<Matrix>& grads) {
    const long epoch = step_ / cfg_.update_gap;

    if (cfg_.projector == ProjectorKind::blocks) {
        long pool = static_cast<long>(projectable_ids_.size());
        long count = round_half_even(cfg_.rho * static_cast<double>(pool));
        active_blocks_ = block_schedule_->advance(step_, pool, count, active_blocks_);
    }

    for (std::size_t pid = 0; pid < projectable_ids_.size(); ++pid) {
        Group& g = groups_[projectable_ids_[pid]];
        const Matrix& grad = grads[projectable_ids_[pid]];

        Projector next = [&] {
            switch (cfg_.projector) {
                case ProjectorKind::blocks: {
                    bool active = std::find(active_blocks_.begin(), active_blocks_.end(), static_cast<long>(pid)) !=
                                  active_blocks_.end();
                    return Projector::block(active, g.param.rows(), g.param.cols(), epoch);
                }
                case ProjectorKind::columns: {
                    long count = round_half_even(cfg_.rho * static_cast<double>(g.param.cols()));
                    g.column_selection =
                        g.column_schedule->advance(step_, g.param.cols(), count, g.column_selection);
                    return Projector::columns(g.column_selection, g.param.rows(), g.param.cols(), epoch);
                }
                case ProjectorKind::randk:
                case ProjectorKind::random_ortho:
                    return build_projector(cfg_.projector, grad, cfg_.rho, mix_seed(cfg_.seed, pid), epoch);
                case ProjectorKind::svd:
                default: return build_projector(cfg_.projector, grad, cfg_.rho, cfg_.seed, epoch);
            }
        }();

        // A group whose selection did not change keeps its state untouched
        // (down(up(s)) would be the identity anyway).
        if (!g.proj) {
            auto [rows, cols] = next.projected_shape(g.param.rows(), g.param.cols());
            g.state = OptimizerState::zeros(cfg_.rule_full, rows, cols);
        } else if (!same_selection(*g.proj, next)) {
            g.state = state_transition(g.state, *g.proj, next, policy_, g.param.rows(), g.param.cols());
            if (cfg_.restart_bias_correction) g.state.adam.step = 0;
        }
        g.proj = std::move(next);
    }
}

Matrix FrugalEngine::kernel_update(OptimizerState& state, RuleId rule, const Matrix& grad, const Hyper& h) const {
    switch (rule) {
        case RuleId::sgd: return sgd_update(grad, h);
        case RuleId::signsgd: return signsgd_update(grad, h);
        case RuleId::sgdm: return sgdm_update(state.momentum, grad, h);
        case RuleId::adamw: return adamw_update(state.adam, grad, h);
        case RuleId::lion: return lion_update(state.momentum, grad, h);
        case RuleId::none: return Matrix(grad.rows(), grad.cols());
    }
    return Matrix(grad.rows(), grad.cols());
}

void FrugalEngine::step_group(Group& g, const Matrix& grad) {
    if (g.role == GroupRole::frozen) return;

    if (g.role == GroupRole::always_full) {
        if (rule_is_stateful(cfg_.rule_full) && g.state.rule != cfg_.rule_full)
            throw std::logic_error("missing optimizer state for always_full group " + g.name);
        switch (cfg_.rule_full) {
            case RuleId::sgd: g.param = sgd_step(g.param, grad, hyper_full_); return;
            case RuleId::signsgd: g.param = signsgd_step(g.param, grad, hyper_full_); return;
            case RuleId::sgdm: g.param = sgdm_step(g.param, g.state.momentum, grad, hyper_full_); return;
            case RuleId::adamw: g.param = adamw_step(g.param, g.state.adam, grad, hyper_full_); return;
            case RuleId::lion: g.param = lion_step(g.param, g.state.momentum, grad, hyper_full_); return;
            case RuleId::none: return;
        }
        return;
    }

    const Projector& proj = *g.proj;
    SplitGradient split = split_gradient(proj, grad);

    if (proj.is_empty()) {
        // Pure state-free group this round.
        if (cfg_.rule_free != RuleId::none) {
            OptimizerState none_state;
            g.param = g.param + kernel_update(none_state, cfg_.rule_free, split.free, hyper_free_);
        }
    } else {
        Matrix update = proj.up(kernel_update(g.state, cfg_.rule_full, split.full, hyper_full_));
        if (cfg_.rule_free != RuleId::none) {
            OptimizerState none_state;
            update = update + kernel_update(none_state, cfg_.rule_free, split.free, hyper_free_);
        }
        g.param = g.param + update;
    }

    if (cfg_.weight_decay != 0.0) {
        double factor = 1.0 - hyper_full_.lr * cfg_.weight_decay;
        for (std::size_t i = 0; i < g.param.size(); ++i) g.param.at_flat(i) *= factor;
    }
}

void FrugalEngine::step(const std::vector<Matrix>& grads) {
    if (grads.size() != groups_.size()) throw ParameterError("FrugalEngine::step: wrong gradient count");
    for (std::size_t i = 0; i < groups_.size(); ++i) {
        require_same_shape(grads[i], groups_[i].param, "FrugalEngine::step(" + groups_[i].name + ")");
        if (!grads[i].all_finite()) throw DataError("non-finite gradient for group " + groups_[i].name);
    }

    if (step_ % cfg_.update_gap == 0) refresh_subspaces(grads);
    step_ += 1;

    for (std::size_t i = 0; i < groups_.size(); ++i) step_group(groups_[i], grads[i]);
}

}  // namespace frugal
