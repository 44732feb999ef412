#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/matrix.hpp"
#include "core/optim_rules.hpp"
#include "core/problems.hpp"
#include "core/projection.hpp"

namespace frugal {

enum class GroupRole { projectable, always_full, frozen };
enum class StatePolicy { reset, keep, reproject, reproject_norm_preserving };

GroupRole group_role_from_string(const std::string& name);
StatePolicy state_policy_from_string(const std::string& name);
std::string state_policy_to_string(StatePolicy policy);

struct FrugalConfig {
    double rho = 0.25;
    long update_gap = 200;
    double lr_full = 1e-3;
    double lr_free = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    ProjectorKind projector = ProjectorKind::blocks;
    RuleId rule_full = RuleId::adamw;
    RuleId rule_free = RuleId::signsgd;  // RuleId::none = GaLore-mode (no residual update)
    // Default policy when unset: reset for blocks/randk/columns, reproject
    // for svd/random_ortho.
    std::optional<StatePolicy> state_policy;
    ScheduleStrategy strategy = ScheduleStrategy::random;
    std::uint64_t seed = 0;
    // Restart Adam's bias-correction counter at each projector refresh so
    // correction matches the freshly (re)initialized buffers.
    bool restart_bias_correction = true;

    StatePolicy resolved_policy() const;
    void validate() const;
};

// Moment buffers for one group, shaped for its current projected
// coordinates (ambient for always_full groups).
struct OptimizerState {
    RuleId rule = RuleId::none;
    AdamState adam;
    MomentumState momentum;

    static OptimizerState zeros(RuleId rule, long rows, long cols);
    long float_count() const;
};

// Transports moment buffers through a projector change. reproject maps each
// buffer by new.down(old.up(s)); the second moment is clamped at zero after
// the map; the norm-preserving variant rescales the first moment so its
// norm is preserved (left unchanged when the transported norm is zero).
OptimizerState state_transition(const OptimizerState& old_state, const Projector& old_proj, const Projector& new_proj,
                                StatePolicy policy, long ambient_rows, long ambient_cols);

struct GroupInit {
    std::string name;
    Matrix param;
    GroupRole role = GroupRole::projectable;
};

// Assigns roles: 2-D weight matrices default to projectable, everything
// else to always_full, with per-name overrides ("projectable" |
// "always_full" | "frozen").
std::vector<GroupInit> classify_params(const std::vector<GroupSpec>& tensors, std::vector<Matrix> init,
                                       const std::map<std::string, std::string>& role_overrides);

// Algorithm state for one training run: per-group projectors, optimizer
// state and the subspace schedule. step() consumes one gradient per group
// and applies the combined state-full + state-free update.
class FrugalEngine {
public:
    FrugalEngine(std::vector<GroupInit> groups, FrugalConfig cfg);

    void step(const std::vector<Matrix>& grads);

    long step_count() const { return step_; }
    std::size_t group_count() const { return groups_.size(); }
    const std::string& group_name(std::size_t i) const { return groups_[i].name; }
    GroupRole group_role(std::size_t i) const { return groups_[i].role; }
    const Matrix& param(std::size_t i) const { return groups_[i].param; }
    void set_param(std::size_t i, Matrix value);
    const Projector& projector(std::size_t i) const;

    // Allocated optimizer-state floats: moment buffers plus stored
    // projector bases.
    long state_float_count() const;
    // Active projectable-group ids under blockwise selection.
    const std::vector<long>& active_blocks() const { return active_blocks_; }
    // Compact description of the current subspace selection for metrics.
    std::string selection_string() const;

private:
    struct Group {
        std::string name;
        Matrix param;
        GroupRole role;
        std::optional<Projector> proj;
        OptimizerState state;
        std::optional<Schedule> column_schedule;
        std::vector<long> column_selection;
    };

    void refresh_subspaces(const std::vector<Matrix>& grads);
    void step_group(Group& g, const Matrix& grad);
    Matrix kernel_update(OptimizerState& state, RuleId rule, const Matrix& grad, const Hyper& h) const;

    std::vector<Group> groups_;
    FrugalConfig cfg_;
    StatePolicy policy_;
    Hyper hyper_full_;
    Hyper hyper_free_;
    long step_ = 0;
    std::optional<Schedule> block_schedule_;
    std::vector<long> active_blocks_;
    std::vector<std::size_t> projectable_ids_;
};

}  // namespace frugal
