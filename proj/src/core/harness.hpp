#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "core/engine.hpp"
#include "core/coord.hpp"
#include "core/problems.hpp"
#include "core/projection.hpp"

namespace frugal {

// --- memory accounting ------------------------------------------------

// Optimizer-state floats one projectable group allocates: moment buffers
// on the projected coordinates plus the stored basis for orthonormal
// kinds. `block_active` only matters for blockwise selection.
long predicted_group_floats(ProjectorKind kind, double rho, long rows, long cols, int moment_buffers,
                            bool block_active = true);

// Closed-form floats for one transformer-style layer of 4 h x h and
// 3 h_ff x h matrices: 2*rho*P for coordinate kinds, the 13/12-scaled
// count for basis kinds.
long llama_layer_floats(ProjectorKind kind, double rho, long h, long h_ff);

struct MemoryReport {
    struct PerGroup {
        std::string name;
        long rows = 0;
        long cols = 0;
        long predicted = 0;
    };
    ProjectorKind kind = ProjectorKind::blocks;
    double rho = 0.0;
    int moment_buffers = 2;
    std::vector<PerGroup> groups;
    long total_predicted = 0;
};

// Prediction for a stack of projectable matrices. For blockwise selection
// `active_blocks` lists the active group ids; by default the first
// round(rho*n) groups are taken as active.
MemoryReport memory_floats(ProjectorKind kind, double rho, const std::vector<std::pair<long, long>>& shapes,
                           int moment_buffers = 2, const std::vector<long>* active_blocks = nullptr);

// --- re-projection toy (GaLore-mode SGDM on ||W||^2) --------------------

struct ToyReprojOptions {
    std::vector<long> ranks = {3, 6};
    long update_gap = 10;
    long seeds = 5;
    long steps = 500;
    std::vector<double> learning_rates = {0.01, 0.03, 0.1};
    double beta = 0.9;
    long burn_in = 50;  // checkpoints after this step enter the ordering check
    std::uint64_t base_seed = 1;
};

struct ToyCurve {
    long rank = 0;
    double lr = 0.0;
    StatePolicy policy = StatePolicy::keep;
    std::vector<double> loss_mean;  // per step
    std::vector<double> loss_std;
    bool diverged = false;
};

struct ToyReprojReport {
    ToyReprojOptions options;
    std::vector<ToyCurve> curves;

    // Re-projection mean loss <= stale-state mean loss at every step after
    // burn_in, for the given rank and learning rate.
    bool ordering_holds(long rank, double lr) const;
    // ... for at least one learning rate of the grid.
    bool ordering_holds_any_lr(long rank) const;
};

ToyReprojReport run_reproj_toy(const ToyReprojOptions& opt);

// --- principal-angle analysis -------------------------------------------

struct AngleOptions {
    long rows = 64;
    long cols = 48;
    double rho = 0.25;
    long update_gap = 200;
    long rounds = 21;             // bases built update_gap steps apart
    double noise_scale = 0.1;     // correlated stream: G_fixed + scale*noise
    bool pure_noise = false;      // drop the fixed part entirely
    std::uint64_t seed = 7;
    long histogram_bins = 20;
};

struct AngleReport {
    AngleOptions options;
    std::vector<double> svd_pair_max;    // consecutive-round SVD bases
    std::vector<double> svd_pair_mean;
    std::vector<double> random_pair_max; // independent random bases
    std::vector<double> random_pair_mean;
    std::vector<long> svd_histogram;     // cosine counts over [0,1] bins
    std::vector<long> random_histogram;
    double welch_t = 0.0;
    double welch_p_one_sided = 0.0;      // H1: svd mean cosine > random
};

AngleReport run_angle_analysis(const AngleOptions& opt);

// --- experiment driver ----------------------------------------------------

struct MetricsRow {
    long step = 0;
    double loss = 0.0;
    double grad_norm_sq = 0.0;
    double lr_full = 0.0;
    double lr_free = 0.0;
    std::string selection;
    long elapsed_ms = 0;
};

struct SeedRun {
    std::uint64_t seed = 0;
    std::vector<MetricsRow> rows;
    double final_loss = 0.0;
    bool diverged = false;
    long diverged_step = -1;
};

struct ExperimentResult {
    std::vector<SeedRun> runs;
    double final_loss_mean = 0.0;
    double final_loss_std = 0.0;
    bool any_diverged = false;
};

// Parses a run config (strict: unknown keys rejected), runs every seed and
// returns the collected metrics. seed_override < 0 keeps the config seeds.
ExperimentResult run_experiment_config(const std::string& config_json, long seed_override = -1);

// Convenience wrappers that also write metrics_seed<k>.csv/.json plus
// summary.json under out_dir. Returns the summary JSON text.
std::string run_experiment_to_files(const std::string& config_json, const std::string& out_dir,
                                    const std::string& format, long seed_override = -1);
std::string reproj_toy_to_files(const ToyReprojOptions& opt, const std::string& out_dir, const std::string& format);
std::string angle_analysis_to_files(const AngleOptions& opt, const std::string& out_dir, const std::string& format);
std::string memory_report_json(const std::string& config_json);
std::string rate_check_to_files(const std::string& config_json, const std::string& out_dir, const std::string& format,
                                long seed_override = -1);

// Config-JSON parsers shared by the CLI subcommands and the C API.
AngleOptions parse_angle_options_json(const std::string& config_json);
// Strictly parses an {"type": "frugal", ...} optimizer document.
FrugalConfig parse_frugal_optimizer_json(const std::string& optimizer_json);

// CSV serialization of one metrics table (fixed header, LF endings,
// %.17g floats).
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

}  // namespace frugal
