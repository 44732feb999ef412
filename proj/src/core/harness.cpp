#include "core/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/stats.hpp"

namespace frugal {

using nlohmann::json;

namespace {

std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << content;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory: " + dir);
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
}

void expect_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key())) throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

const json& require_key(const json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(where + ": missing required key '" + key + "'");
    return *it;
}

double get_number(const json& j, const std::string& key, const std::string& where) {
    const json& v = require_key(j, key, where);
    if (!v.is_number()) throw ConfigError(where + ": key '" + key + "' must be a number");
    return v.get<double>();
}

double get_number_or(const json& j, const std::string& key, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) throw ConfigError("key '" + key + "' must be a number");
    return it->get<double>();
}

long get_integer_or(const json& j, const std::string& key, long fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) throw ConfigError("key '" + key + "' must be an integer");
    return it->get<long>();
}

std::string get_string_or(const json& j, const std::string& key, const std::string& fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_string()) throw ConfigError("key '" + key + "' must be a string");
    return it->get<std::string>();
}

bool get_bool_or(const json& j, const std::string& key, bool fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_boolean()) throw ConfigError("key '" + key + "' must be a boolean");
    return it->get<bool>();
}

std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError(where + ": expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

// Vector field that may be written as an array, or as a scalar to repeat,
// or (for curvatures) as {"min":..,"max":..} for a linear ramp.
std::vector<double> vector_field(const json& spec, const std::string& key, long dim, const std::string& where) {
    const json& v = require_key(spec, key, where);
    if (v.is_array()) {
        auto out = number_list(v, where + "." + key);
        if (dim > 0 && static_cast<long>(out.size()) != dim)
            throw ConfigError(where + "." + key + ": expected " + std::to_string(dim) + " entries");
        return out;
    }
    if (v.is_number()) {
        if (dim <= 0) throw ConfigError(where + "." + key + ": scalar form requires 'dim'");
        return std::vector<double>(static_cast<std::size_t>(dim), v.get<double>());
    }
    if (v.is_object()) {
        expect_keys(v, {"min", "max"}, where + "." + key);
        if (dim <= 0) throw ConfigError(where + "." + key + ": ramp form requires 'dim'");
        double lo = get_number(v, "min", where + "." + key);
        double hi = get_number(v, "max", where + "." + key);
        std::vector<double> out(static_cast<std::size_t>(dim));
        for (long i = 0; i < dim; ++i)
            out[static_cast<std::size_t>(i)] =
                dim == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(dim - 1);
        return out;
    }
    throw ConfigError(where + "." + key + ": expected array, number or {min,max}");
}

std::shared_ptr<Problem> make_problem(const json& spec) {
    const std::string where = "problem";
    std::string type = require_key(spec, "type", where).get<std::string>();
    if (type == "tiny_mlp") {
        expect_keys(spec, {"type", "dims", "activation", "dataset_size", "batch", "dataset_seed"}, where);
        TinyMlp::Options opt;
        if (spec.contains("dims")) {
            opt.dims.clear();
            for (double d : number_list(spec["dims"], where + ".dims")) opt.dims.push_back(static_cast<long>(d));
        }
        std::string act = get_string_or(spec, "activation", "tanh");
        if (act == "tanh")
            opt.activation = TinyMlp::Activation::tanh;
        else if (act == "relu")
            opt.activation = TinyMlp::Activation::relu;
        else
            throw ConfigError("problem.activation: unknown activation '" + act + "'");
        opt.dataset_size = get_integer_or(spec, "dataset_size", opt.dataset_size);
        opt.batch = get_integer_or(spec, "batch", opt.batch);
        opt.dataset_seed = static_cast<std::uint64_t>(get_integer_or(spec, "dataset_seed", 12345));
        return std::make_shared<TinyMlp>(opt);
    }
    if (type == "quadratic_frob") {
        expect_keys(spec, {"type", "rows", "cols"}, where);
        return std::make_shared<QuadraticFrob>(get_integer_or(spec, "rows", 10), get_integer_or(spec, "cols", 10));
    }
    if (type == "noisy_quadratic") {
        expect_keys(spec, {"type", "dim", "curvatures", "noise_sigma", "x0"}, where);
        long dim = get_integer_or(spec, "dim", 0);
        auto curv = vector_field(spec, "curvatures", dim, where);
        if (dim == 0) dim = static_cast<long>(curv.size());
        auto sigma = vector_field(spec, "noise_sigma", dim, where);
        auto x0 = vector_field(spec, "x0", dim, where);
        return std::make_shared<NoisyQuadratic>(std::move(curv), std::move(sigma), std::move(x0));
    }
    if (type == "least_squares") {
        expect_keys(spec, {"type", "n", "d", "batch", "data_seed"}, where);
        long n = get_integer_or(spec, "n", 128);
        long d = get_integer_or(spec, "d", 16);
        long batch = get_integer_or(spec, "batch", 16);
        std::uint64_t seed = static_cast<std::uint64_t>(get_integer_or(spec, "data_seed", 99));
        return std::make_shared<LeastSquares>(LeastSquares::synthetic(n, d, batch, seed));
    }
    throw ConfigError("problem.type: unknown problem '" + type + "'");
}

struct ParsedRun {
    std::shared_ptr<Problem> problem;
    FrugalConfig engine_cfg;
    std::map<std::string, std::string> roles;
    bool force_always_full = false;
    long steps = 100;
    std::vector<std::uint64_t> seeds = {1};
    long cadence = 1;
    bool stochastic = true;
    bool wall_timing = false;
};

FrugalConfig parse_frugal_optimizer(const json& spec) {
    const std::string where = "optimizer";
    expect_keys(spec,
                {"type", "rho", "update_gap", "lr_full", "lr_free", "beta1", "beta2", "eps", "weight_decay",
                 "projector", "rule_full", "rule_free", "state_policy", "strategy", "restart_bias_correction"},
                where);
    FrugalConfig cfg;
    cfg.rho = get_number_or(spec, "rho", cfg.rho);
    cfg.update_gap = get_integer_or(spec, "update_gap", cfg.update_gap);
    cfg.lr_full = get_number_or(spec, "lr_full", cfg.lr_full);
    cfg.lr_free = get_number_or(spec, "lr_free", cfg.lr_full);
    cfg.beta1 = get_number_or(spec, "beta1", cfg.beta1);
    cfg.beta2 = get_number_or(spec, "beta2", cfg.beta2);
    cfg.eps = get_number_or(spec, "eps", cfg.eps);
    cfg.weight_decay = get_number_or(spec, "weight_decay", cfg.weight_decay);
    cfg.projector = projector_kind_from_string(get_string_or(spec, "projector", "blocks"));
    cfg.rule_full = rule_from_string(get_string_or(spec, "rule_full", "adamw"));
    cfg.rule_free = rule_from_string(get_string_or(spec, "rule_free", "signsgd"));
    if (spec.contains("state_policy"))
        cfg.state_policy = state_policy_from_string(spec["state_policy"].get<std::string>());
    cfg.strategy = schedule_strategy_from_string(get_string_or(spec, "strategy", "random"));
    cfg.restart_bias_correction = get_bool_or(spec, "restart_bias_correction", true);
    return cfg;
}

ParsedRun parse_run_config(const json& root) {
    expect_keys(root,
                {"problem", "optimizer", "roles", "steps", "seeds", "metric_cadence", "stochastic", "timing"},
                "config");
    ParsedRun run;
    run.problem = make_problem(require_key(root, "problem", "config"));

    const json& opt = require_key(root, "optimizer", "config");
    std::string type = require_key(opt, "type", "optimizer").get<std::string>();
    if (type == "frugal") {
        run.engine_cfg = parse_frugal_optimizer(opt);
    } else {
        // Reference single-rule optimizers: every group is always_full.
        expect_keys(opt, {"type", "lr", "beta1", "beta2", "eps", "weight_decay"}, "optimizer");
        run.engine_cfg.rule_full = rule_from_string(type);
        if (run.engine_cfg.rule_full == RuleId::none) throw ConfigError("optimizer.type: 'none' is not runnable");
        run.engine_cfg.rule_free = RuleId::none;
        run.engine_cfg.lr_full = get_number_or(opt, "lr", 1e-3);
        run.engine_cfg.lr_free = run.engine_cfg.lr_full;
        run.engine_cfg.beta1 = get_number_or(opt, "beta1", 0.9);
        run.engine_cfg.beta2 = get_number_or(opt, "beta2", 0.999);
        run.engine_cfg.eps = get_number_or(opt, "eps", 1e-8);
        run.engine_cfg.weight_decay = get_number_or(opt, "weight_decay", 0.0);
        run.force_always_full = true;
    }

    if (root.contains("roles")) {
        const json& roles = root["roles"];
        if (!roles.is_object()) throw ConfigError("roles: expected an object of name -> role");
        for (const auto& item : roles.items()) {
            if (!item.value().is_string()) throw ConfigError("roles." + item.key() + ": expected a role string");
            run.roles[item.key()] = item.value().get<std::string>();
        }
    }

    run.steps = get_integer_or(root, "steps", 100);
    if (run.steps < 1) throw ConfigError("steps: must be >= 1");
    if (root.contains("seeds")) {
        run.seeds.clear();
        for (double s : number_list(root["seeds"], "seeds")) run.seeds.push_back(static_cast<std::uint64_t>(s));
        if (run.seeds.empty()) throw ConfigError("seeds: must not be empty");
    }
    run.cadence = get_integer_or(root, "metric_cadence", 1);
    if (run.cadence < 1) throw ConfigError("metric_cadence: must be >= 1");
    run.stochastic = get_bool_or(root, "stochastic", true);
    std::string timing = get_string_or(root, "timing", "none");
    if (timing == "wall")
        run.wall_timing = true;
    else if (timing != "none")
        throw ConfigError("timing: expected 'none' or 'wall'");
    return run;
}

SeedRun run_single_seed(const ParsedRun& pr, std::uint64_t seed) {
    std::vector<Matrix> init = pr.problem->initial_params(seed);
    std::map<std::string, std::string> roles = pr.roles;
    if (pr.force_always_full)
        for (const GroupSpec& g : pr.problem->groups()) roles[g.name] = "always_full";
    std::vector<GroupInit> groups = classify_params(pr.problem->groups(), std::move(init), roles);

    FrugalConfig cfg = pr.engine_cfg;
    cfg.seed = mix_seed(seed, 0x5'E1EC7ULL);
    FrugalEngine engine(std::move(groups), cfg);

    Rng eval_rng(mix_seed(seed, 0xE7A1ULL));
    SeedRun out;
    out.seed = seed;

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Matrix> params;
    for (long step = 1; step <= pr.steps; ++step) {
        params.clear();
        for (std::size_t i = 0; i < engine.group_count(); ++i) params.push_back(engine.param(i));
        Evaluation ev = pr.problem->eval(params, pr.stochastic ? &eval_rng : nullptr);

        if (!std::isfinite(ev.loss) || std::abs(ev.loss) > 1e12) {
            out.diverged = true;
            out.diverged_step = step;
            break;
        }

        double grad_sq = 0.0;
        for (const Matrix& g : ev.grads) grad_sq += dot(g, g);

        engine.step(ev.grads);

        if (step % pr.cadence == 0 || step == 1 || step == pr.steps) {
            MetricsRow row;
            row.step = step;
            row.loss = ev.loss;
            row.grad_norm_sq = grad_sq;
            row.lr_full = cfg.lr_full;
            row.lr_free = cfg.lr_free;
            row.selection = engine.selection_string();
            row.elapsed_ms =
                pr.wall_timing
                    ? std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
                          .count()
                    : 0;
            out.rows.push_back(std::move(row));
        }
    }

    if (!out.diverged) {
        params.clear();
        for (std::size_t i = 0; i < engine.group_count(); ++i) params.push_back(engine.param(i));
        out.final_loss = pr.problem->eval(params, nullptr).loss;
    }
    return out;
}

json summary_from_result(const ExperimentResult& result) {
    json summary;
    summary["final_loss_mean"] = result.final_loss_mean;
    summary["final_loss_std"] = result.final_loss_std;
    json losses = json::array();
    json seeds = json::array();
    json diverged = json::array();
    for (const SeedRun& run : result.runs) {
        losses.push_back(run.final_loss);
        seeds.push_back(run.seed);
        if (run.diverged) diverged.push_back(run.diverged_step);
    }
    summary["final_losses"] = losses;
    summary["seeds"] = seeds;
    summary["diverged"] = result.any_diverged;
    summary["diverged_steps"] = diverged;
    return summary;
}

std::string metrics_to_json_text(const std::vector<MetricsRow>& rows) {
    json arr = json::array();
    for (const MetricsRow& r : rows) {
        json o;
        o["step"] = r.step;
        o["loss"] = r.loss;
        o["grad_norm_sq"] = r.grad_norm_sq;
        o["lr_full"] = r.lr_full;
        o["lr_free"] = r.lr_free;
        o["selection"] = r.selection;
        o["elapsed_ms"] = r.elapsed_ms;
        arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
}

void check_format(const std::string& format) {
    if (format != "csv" && format != "json") throw ConfigError("format: expected 'csv' or 'json'");
}

}  // namespace

// --- memory accounting ------------------------------------------------

long predicted_group_floats(ProjectorKind kind, double rho, long rows, long cols, int moment_buffers,
                            bool block_active) {
    if (rho < 0.0 || rho > 1.0) throw ParameterError("predicted_group_floats: rho must be in [0,1]");
    if (rows < 1 || cols < 1) throw ParameterError("predicted_group_floats: shapes must be positive");
    const long mb = moment_buffers;
    switch (kind) {
        case ProjectorKind::randk: return mb * round_half_even(rho * static_cast<double>(rows * cols));
        case ProjectorKind::columns: return mb * rows * round_half_even(rho * static_cast<double>(cols));
        case ProjectorKind::blocks: return block_active ? mb * rows * cols : 0;
        case ProjectorKind::svd:
        case ProjectorKind::random_ortho: {
            long r = round_half_even(rho * static_cast<double>(std::min(rows, cols)));
            return r * std::max(rows, cols) + mb * r * std::min(rows, cols);
        }
    }
    return 0;
}

long llama_layer_floats(ProjectorKind kind, double rho, long h, long h_ff) {
    long total = 0;
    for (int i = 0; i < 4; ++i) total += predicted_group_floats(kind, rho, h, h, 2, true);
    for (int i = 0; i < 3; ++i) total += predicted_group_floats(kind, rho, h_ff, h, 2, true);
    return total;
}

MemoryReport memory_floats(ProjectorKind kind, double rho, const std::vector<std::pair<long, long>>& shapes,
                           int moment_buffers, const std::vector<long>* active_blocks) {
    MemoryReport report;
    report.kind = kind;
    report.rho = rho;
    report.moment_buffers = moment_buffers;

    std::vector<long> active;
    if (kind == ProjectorKind::blocks) {
        if (active_blocks) {
            active = *active_blocks;
        } else {
            long count = round_half_even(rho * static_cast<double>(shapes.size()));
            for (long i = 0; i < count; ++i) active.push_back(i);
        }
    }

    for (std::size_t i = 0; i < shapes.size(); ++i) {
        bool is_active = kind != ProjectorKind::blocks ||
                         std::find(active.begin(), active.end(), static_cast<long>(i)) != active.end();
        MemoryReport::PerGroup g;
        g.name = "group" + std::to_string(i);
        g.rows = shapes[i].first;
        g.cols = shapes[i].second;
        g.predicted = predicted_group_floats(kind, rho, g.rows, g.cols, moment_buffers, is_active);
        report.total_predicted += g.predicted;
        report.groups.push_back(std::move(g));
    }
    return report;
}

// --- re-projection toy ------------------------------------------------

bool ToyReprojReport::ordering_holds(long rank, double lr) const {
    const ToyCurve* reproj = nullptr;
    const ToyCurve* stale = nullptr;
    for (const ToyCurve& c : curves) {
        if (c.rank != rank || c.lr != lr) continue;
        if (c.policy == StatePolicy::reproject_norm_preserving) reproj = &c;
        if (c.policy == StatePolicy::keep) stale = &c;
    }
    if (!reproj || !stale || reproj->diverged || stale->diverged) return false;
    for (std::size_t i = static_cast<std::size_t>(options.burn_in); i < reproj->loss_mean.size(); ++i)
        if (reproj->loss_mean[i] > stale->loss_mean[i]) return false;
    return true;
}

bool ToyReprojReport::ordering_holds_any_lr(long rank) const {
    for (double lr : options.learning_rates)
        if (ordering_holds(rank, lr)) return true;
    return false;
}

ToyReprojReport run_reproj_toy(const ToyReprojOptions& opt) {
    if (opt.seeds < 1) throw ParameterError("run_reproj_toy: seeds must be >= 1");
    if (opt.steps < 1) throw ParameterError("run_reproj_toy: steps must be >= 1");
    const long side = 10;
    QuadraticFrob problem(side, side);

    ToyReprojReport report;
    report.options = opt;

    const StatePolicy policies[2] = {StatePolicy::keep, StatePolicy::reproject_norm_preserving};
    for (long rank : opt.ranks) {
        if (rank < 0 || rank > side) throw ParameterError("run_reproj_toy: rank out of range");
        for (double lr : opt.learning_rates) {
            for (StatePolicy policy : policies) {
                ToyCurve curve;
                curve.rank = rank;
                curve.lr = lr;
                curve.policy = policy;
                curve.loss_mean.assign(static_cast<std::size_t>(opt.steps), 0.0);
                std::vector<std::vector<double>> losses(static_cast<std::size_t>(opt.steps));

                for (long s = 0; s < opt.seeds; ++s) {
                    FrugalConfig cfg;
                    cfg.projector = ProjectorKind::svd;
                    cfg.rho = static_cast<double>(rank) / static_cast<double>(side);
                    cfg.update_gap = opt.update_gap;
                    cfg.rule_full = RuleId::sgdm;
                    cfg.rule_free = RuleId::none;  // GaLore-mode
                    cfg.lr_full = lr;
                    cfg.lr_free = lr;
                    cfg.beta1 = opt.beta;
                    cfg.state_policy = policy;
                    cfg.seed = mix_seed(opt.base_seed, static_cast<std::uint64_t>(s));

                    std::vector<GroupInit> groups = classify_params(
                        problem.groups(), problem.initial_params(mix_seed(opt.base_seed, static_cast<std::uint64_t>(s))),
                        {});
                    FrugalEngine engine(std::move(groups), cfg);

                    double last = 0.0;
                    for (long step = 0; step < opt.steps; ++step) {
                        std::vector<Matrix> params = {engine.param(0)};
                        Evaluation ev = problem.eval(params, nullptr);
                        double loss = ev.loss;
                        if (!std::isfinite(loss) || loss > 1e12) {
                            curve.diverged = true;
                            loss = last;
                        } else {
                            engine.step(ev.grads);
                        }
                        last = loss;
                        losses[static_cast<std::size_t>(step)].push_back(loss);
                    }
                }

                curve.loss_std.assign(static_cast<std::size_t>(opt.steps), 0.0);
                for (long step = 0; step < opt.steps; ++step) {
                    const auto& v = losses[static_cast<std::size_t>(step)];
                    curve.loss_mean[static_cast<std::size_t>(step)] = mean(v);
                    curve.loss_std[static_cast<std::size_t>(step)] =
                        v.size() > 1 ? std::sqrt(sample_variance(v)) : 0.0;
                }
                report.curves.push_back(std::move(curve));
            }
        }
    }
    return report;
}

// --- principal-angle analysis -------------------------------------------

AngleReport run_angle_analysis(const AngleOptions& opt) {
    if (opt.rounds < 2) throw ParameterError("run_angle_analysis: need at least two rounds (stream >= 2T)");
    if (opt.rows < 2 || opt.cols < 2) throw ParameterError("run_angle_analysis: stream matrices too small");
    const long short_dim = std::min(opt.rows, opt.cols);
    const long rank = std::max<long>(1, round_half_even(opt.rho * static_cast<double>(short_dim)));
    const long basis_dim = std::max(opt.rows, opt.cols);

    AngleReport report;
    report.options = opt;
    report.svd_histogram.assign(static_cast<std::size_t>(opt.histogram_bins), 0);
    report.random_histogram.assign(static_cast<std::size_t>(opt.histogram_bins), 0);

    Rng fixed_rng(mix_seed(opt.seed, 1));
    Matrix fixed(opt.rows, opt.cols);
    for (std::size_t i = 0; i < fixed.size(); ++i) fixed.at_flat(i) = fixed_rng.normal();

    std::vector<OrthoBasis> svd_bases;
    std::vector<OrthoBasis> random_bases;
    for (long t = 0; t < opt.rounds; ++t) {
        Rng noise_rng(mix_seed(opt.seed, 100 + static_cast<std::uint64_t>(t)));
        Matrix g(opt.rows, opt.cols);
        for (std::size_t i = 0; i < g.size(); ++i)
            g.at_flat(i) = (opt.pure_noise ? 0.0 : fixed.at_flat(i)) + opt.noise_scale * noise_rng.normal();
        Projector proj = build_projector(ProjectorKind::svd, g, opt.rho, opt.seed, t);
        svd_bases.push_back(proj.basis());
        random_bases.push_back(random_semi_orthogonal(mix_seed(opt.seed, 5000 + static_cast<std::uint64_t>(t)),
                                                      basis_dim, rank));
    }

    auto record = [&](const std::vector<OrthoBasis>& bases, std::vector<double>& maxes, std::vector<double>& means,
                      std::vector<long>& hist) {
        for (std::size_t t = 0; t + 1 < bases.size(); ++t) {
            std::vector<double> cos = principal_angle_cosines(bases[t], bases[t + 1]);
            double mx = 0.0, acc = 0.0;
            for (double c : cos) {
                mx = std::max(mx, c);
                acc += c;
                long bin = static_cast<long>(c * static_cast<double>(opt.histogram_bins));
                bin = std::clamp<long>(bin, 0, opt.histogram_bins - 1);
                hist[static_cast<std::size_t>(bin)] += 1;
            }
            maxes.push_back(mx);
            means.push_back(cos.empty() ? 0.0 : acc / static_cast<double>(cos.size()));
        }
    };
    record(svd_bases, report.svd_pair_max, report.svd_pair_mean, report.svd_histogram);
    record(random_bases, report.random_pair_max, report.random_pair_mean, report.random_histogram);

    TwoSampleTest test = welch_t_test(report.svd_pair_mean, report.random_pair_mean);
    report.welch_t = test.t;
    report.welch_p_one_sided = test.p_one_sided;
    return report;
}

// --- experiment driver ----------------------------------------------------

ExperimentResult run_experiment_config(const std::string& config_json, long seed_override) {
    ParsedRun pr = parse_run_config(parse_json(config_json));
    if (seed_override >= 0) pr.seeds = {static_cast<std::uint64_t>(seed_override)};

    ExperimentResult result;
    std::vector<double> finals;
    for (std::uint64_t seed : pr.seeds) {
        SeedRun run = run_single_seed(pr, seed);
        result.any_diverged = result.any_diverged || run.diverged;
        if (!run.diverged) finals.push_back(run.final_loss);
        result.runs.push_back(std::move(run));
    }
    if (!finals.empty()) {
        result.final_loss_mean = mean(finals);
        result.final_loss_std = finals.size() > 1 ? std::sqrt(sample_variance(finals)) : 0.0;
    }
    return result;
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "step,loss,grad_norm_sq,lr_full,lr_free,selection,elapsed_ms\n";
    for (const MetricsRow& r : rows) {
        out += std::to_string(r.step);
        out += ',';
        out += fmt_double(r.loss);
        out += ',';
        out += fmt_double(r.grad_norm_sq);
        out += ',';
        out += fmt_double(r.lr_full);
        out += ',';
        out += fmt_double(r.lr_free);
        out += ',';
        out += r.selection;
        out += ',';
        out += std::to_string(r.elapsed_ms);
        out += '\n';
    }
    return out;
}

std::string run_experiment_to_files(const std::string& config_json, const std::string& out_dir,
                                    const std::string& format, long seed_override) {
    check_format(format);
    ExperimentResult result = run_experiment_config(config_json, seed_override);
    ensure_dir(out_dir);

    for (const SeedRun& run : result.runs) {
        std::string base = out_dir + "/metrics_seed" + std::to_string(run.seed);
        if (format == "csv")
            write_text_file(base + ".csv", metrics_to_csv(run.rows));
        else
            write_text_file(base + ".json", metrics_to_json_text(run.rows));
    }

    json summary = summary_from_result(result);
    std::string summary_text = summary.dump(2) + "\n";
    write_text_file(out_dir + "/summary.json", summary_text);

    if (result.any_diverged) {
        long step = -1;
        for (const SeedRun& r : result.runs)
            if (r.diverged) step = r.diverged_step;
        throw DivergenceError("training diverged; see " + out_dir + "/summary.json", step);
    }
    return summary_text;
}

std::string reproj_toy_to_files(const ToyReprojOptions& opt, const std::string& out_dir, const std::string& format) {
    check_format(format);
    ToyReprojReport report = run_reproj_toy(opt);
    ensure_dir(out_dir);

    if (format == "csv") {
        std::string csv = "rank,lr,policy,step,loss_mean,loss_std\n";
        for (const ToyCurve& c : report.curves)
            for (std::size_t i = 0; i < c.loss_mean.size(); ++i) {
                csv += std::to_string(c.rank);
                csv += ',';
                csv += fmt_double(c.lr);
                csv += ',';
                csv += state_policy_to_string(c.policy);
                csv += ',';
                csv += std::to_string(i + 1);
                csv += ',';
                csv += fmt_double(c.loss_mean[i]);
                csv += ',';
                csv += fmt_double(c.loss_std[i]);
                csv += '\n';
            }
        write_text_file(out_dir + "/toy_reproj.csv", csv);
    } else {
        json arr = json::array();
        for (const ToyCurve& c : report.curves) {
            json o;
            o["rank"] = c.rank;
            o["lr"] = c.lr;
            o["policy"] = state_policy_to_string(c.policy);
            o["loss_mean"] = c.loss_mean;
            o["loss_std"] = c.loss_std;
            o["diverged"] = c.diverged;
            arr.push_back(std::move(o));
        }
        write_text_file(out_dir + "/toy_reproj.json", arr.dump(2) + "\n");
    }

    json summary;
    summary["update_gap"] = opt.update_gap;
    summary["seeds"] = opt.seeds;
    summary["steps"] = opt.steps;
    summary["beta"] = opt.beta;
    summary["burn_in"] = opt.burn_in;
    json per_rank = json::object();
    for (long rank : opt.ranks) {
        json lr_map = json::object();
        for (double lr : opt.learning_rates) lr_map[fmt_double(lr)] = report.ordering_holds(rank, lr);
        json entry;
        entry["ordering_holds_by_lr"] = lr_map;
        entry["ordering_holds_any_lr"] = report.ordering_holds_any_lr(rank);
        per_rank["rank" + std::to_string(rank)] = entry;
    }
    summary["ranks"] = per_rank;
    std::string text = summary.dump(2) + "\n";
    write_text_file(out_dir + "/toy_reproj_summary.json", text);
    return text;
}

FrugalConfig parse_frugal_optimizer_json(const std::string& optimizer_json) {
    json spec = parse_json(optimizer_json);
    std::string type = require_key(spec, "type", "optimizer").get<std::string>();
    if (type != "frugal") throw ConfigError("optimizer.type: expected 'frugal', got '" + type + "'");
    std::uint64_t seed = static_cast<std::uint64_t>(get_integer_or(spec, "seed", 0));
    spec.erase("seed");  // run configs derive it per seed; standalone engines set it here
    FrugalConfig cfg = parse_frugal_optimizer(spec);
    cfg.seed = seed;
    return cfg;
}

AngleOptions parse_angle_options_json(const std::string& config_json) {
    json root = parse_json(config_json);
    expect_keys(root,
                {"rows", "cols", "rho", "update_gap", "rounds", "noise_scale", "pure_noise", "seed",
                 "histogram_bins"},
                "angles config");
    AngleOptions opt;
    opt.rows = get_integer_or(root, "rows", opt.rows);
    opt.cols = get_integer_or(root, "cols", opt.cols);
    opt.rho = get_number_or(root, "rho", opt.rho);
    opt.update_gap = get_integer_or(root, "update_gap", opt.update_gap);
    opt.rounds = get_integer_or(root, "rounds", opt.rounds);
    opt.noise_scale = get_number_or(root, "noise_scale", opt.noise_scale);
    opt.pure_noise = get_bool_or(root, "pure_noise", opt.pure_noise);
    opt.seed = static_cast<std::uint64_t>(get_integer_or(root, "seed", 7));
    opt.histogram_bins = get_integer_or(root, "histogram_bins", opt.histogram_bins);
    return opt;
}

std::string angle_analysis_to_files(const AngleOptions& opt, const std::string& out_dir, const std::string& format) {
    check_format(format);
    AngleReport report = run_angle_analysis(opt);
    ensure_dir(out_dir);

    if (format == "csv") {
        std::string pairs = "kind,pair,max_cosine,mean_cosine\n";
        for (std::size_t i = 0; i < report.svd_pair_max.size(); ++i)
            pairs += "svd," + std::to_string(i) + ',' + fmt_double(report.svd_pair_max[i]) + ',' +
                     fmt_double(report.svd_pair_mean[i]) + '\n';
        for (std::size_t i = 0; i < report.random_pair_max.size(); ++i)
            pairs += "random," + std::to_string(i) + ',' + fmt_double(report.random_pair_max[i]) + ',' +
                     fmt_double(report.random_pair_mean[i]) + '\n';
        write_text_file(out_dir + "/angles_pairs.csv", pairs);

        std::string hist = "bin_lo,bin_hi,svd_count,random_count\n";
        for (long b = 0; b < opt.histogram_bins; ++b) {
            double lo = static_cast<double>(b) / static_cast<double>(opt.histogram_bins);
            double hi = static_cast<double>(b + 1) / static_cast<double>(opt.histogram_bins);
            hist += fmt_double(lo) + "," + fmt_double(hi) + "," +
                    std::to_string(report.svd_histogram[static_cast<std::size_t>(b)]) + "," +
                    std::to_string(report.random_histogram[static_cast<std::size_t>(b)]) + "\n";
        }
        write_text_file(out_dir + "/angles_hist.csv", hist);
    } else {
        json o;
        o["svd_pair_max"] = report.svd_pair_max;
        o["svd_pair_mean"] = report.svd_pair_mean;
        o["random_pair_max"] = report.random_pair_max;
        o["random_pair_mean"] = report.random_pair_mean;
        o["svd_histogram"] = report.svd_histogram;
        o["random_histogram"] = report.random_histogram;
        write_text_file(out_dir + "/angles.json", o.dump(2) + "\n");
    }

    json summary;
    summary["welch_t"] = report.welch_t;
    summary["welch_p_one_sided"] = report.welch_p_one_sided;
    summary["svd_mean_cosine"] = mean(report.svd_pair_mean);
    summary["random_mean_cosine"] = mean(report.random_pair_mean);
    double min_max = 1.0;
    for (double m : report.svd_pair_max) min_max = std::min(min_max, m);
    summary["svd_min_of_pair_max"] = min_max;
    std::string text = summary.dump(2) + "\n";
    write_text_file(out_dir + "/angles_summary.json", text);
    return text;
}

std::string memory_report_json(const std::string& config_json) {
    json root = parse_json(config_json);
    expect_keys(root, {"projector", "rho", "groups", "llama", "moment_buffers", "active"}, "memory config");
    ProjectorKind kind = projector_kind_from_string(get_string_or(root, "projector", "blocks"));
    double rho = get_number(root, "rho", "memory config");
    int mb = static_cast<int>(get_integer_or(root, "moment_buffers", 2));

    std::vector<std::pair<long, long>> shapes;
    json llama_part = json::object();
    if (root.contains("llama")) {
        const json& ll = root["llama"];
        expect_keys(ll, {"h", "h_ff", "layers"}, "memory config.llama");
        long h = get_integer_or(ll, "h", 768);
        long h_ff = get_integer_or(ll, "h_ff", 2048);
        long layers = get_integer_or(ll, "layers", 1);
        for (long l = 0; l < layers; ++l) {
            for (int i = 0; i < 4; ++i) shapes.emplace_back(h, h);
            for (int i = 0; i < 3; ++i) shapes.emplace_back(h_ff, h);
        }
        llama_part["per_layer_floats"] = llama_layer_floats(kind, rho, h, h_ff);
        llama_part["per_layer_coordinate_kinds"] = llama_layer_floats(ProjectorKind::randk, rho, h, h_ff);
        llama_part["per_layer_basis_kinds"] = llama_layer_floats(ProjectorKind::svd, rho, h, h_ff);
    }
    if (root.contains("groups")) {
        if (!root["groups"].is_array()) throw ConfigError("memory config.groups: expected an array of [rows, cols]");
        for (const auto& entry : root["groups"]) {
            auto pair = number_list(entry, "memory config.groups entry");
            if (pair.size() != 2) throw ConfigError("memory config.groups: entries must be [rows, cols]");
            shapes.emplace_back(static_cast<long>(pair[0]), static_cast<long>(pair[1]));
        }
    }
    if (shapes.empty()) throw ConfigError("memory config: need 'groups' or 'llama'");

    std::vector<long> active;
    const std::vector<long>* active_ptr = nullptr;
    if (root.contains("active")) {
        for (double a : number_list(root["active"], "memory config.active")) active.push_back(static_cast<long>(a));
        active_ptr = &active;
    }

    MemoryReport report = memory_floats(kind, rho, shapes, mb, active_ptr);
    json o;
    o["projector"] = projector_kind_to_string(report.kind);
    o["rho"] = report.rho;
    o["moment_buffers"] = report.moment_buffers;
    o["total_predicted_floats"] = report.total_predicted;
    json groups = json::array();
    for (const auto& g : report.groups) {
        json entry;
        entry["name"] = g.name;
        entry["rows"] = g.rows;
        entry["cols"] = g.cols;
        entry["predicted_floats"] = g.predicted;
        groups.push_back(std::move(entry));
    }
    o["groups"] = groups;
    if (!llama_part.empty()) o["llama"] = llama_part;
    return o.dump(2) + "\n";
}

std::string rate_check_to_files(const std::string& config_json, const std::string& out_dir, const std::string& format,
                                long seed_override) {
    check_format(format);
    json root = parse_json(config_json);
    expect_keys(root, {"problem", "sampler", "alpha", "beta", "steps", "seeds", "seed"}, "rate config");

    const json& pspec = require_key(root, "problem", "rate config");
    std::string ptype = require_key(pspec, "type", "rate config.problem").get<std::string>();
    if (ptype != "noisy_quadratic")
        throw ConfigError("rate config.problem.type: rate-check requires 'noisy_quadratic'");
    expect_keys(pspec, {"type", "dim", "curvatures", "noise_sigma", "x0"}, "rate config.problem");
    long dim = get_integer_or(pspec, "dim", 0);
    auto curv = vector_field(pspec, "curvatures", dim, "rate config.problem");
    if (dim == 0) dim = static_cast<long>(curv.size());
    NoisyQuadratic problem(std::move(curv), vector_field(pspec, "noise_sigma", dim, "rate config.problem"),
                           vector_field(pspec, "x0", dim, "rate config.problem"));

    const json& sspec = require_key(root, "sampler", "rate config");
    std::string stype = require_key(sspec, "type", "rate config.sampler").get<std::string>();
    std::uint64_t sampler_seed = static_cast<std::uint64_t>(get_integer_or(sspec, "seed", 17));
    JSampler sampler = [&] {
        if (stype == "bernoulli") {
            expect_keys(sspec, {"type", "p", "seed"}, "rate config.sampler");
            return JSampler::bernoulli_each(get_number(sspec, "p", "rate config.sampler"), sampler_seed);
        }
        if (stype == "fixed_all") {
            expect_keys(sspec, {"type"}, "rate config.sampler");
            std::vector<long> all(static_cast<std::size_t>(problem.dim()));
            for (long j = 0; j < problem.dim(); ++j) all[static_cast<std::size_t>(j)] = j;
            return JSampler::fixed_set(std::move(all));
        }
        if (stype == "fixed_empty") {
            expect_keys(sspec, {"type"}, "rate config.sampler");
            return JSampler::fixed_set({});
        }
        if (stype == "fixed_set") {
            expect_keys(sspec, {"type", "indices"}, "rate config.sampler");
            std::vector<long> idx;
            for (double v : number_list(require_key(sspec, "indices", "rate config.sampler"), "sampler.indices"))
                idx.push_back(static_cast<long>(v));
            return JSampler::fixed_set(std::move(idx));
        }
        if (stype == "block_cyclic") {
            expect_keys(sspec, {"type", "block_size", "period"}, "rate config.sampler");
            return JSampler::block_cyclic(get_integer_or(sspec, "block_size", 1),
                                          get_integer_or(sspec, "period", 1));
        }
        throw ConfigError("rate config.sampler.type: unknown sampler '" + stype + "'");
    }();

    double alpha = get_number(root, "alpha", "rate config");
    double beta = get_number(root, "beta", "rate config");
    long steps = get_integer_or(root, "steps", 1000);
    long seeds = get_integer_or(root, "seeds", 20);
    std::uint64_t base_seed = seed_override >= 0 ? static_cast<std::uint64_t>(seed_override)
                                                 : static_cast<std::uint64_t>(get_integer_or(root, "seed", 3));

    RateReport report = run_rate_experiment(problem, sampler, alpha, beta, steps, seeds, base_seed);
    ensure_dir(out_dir);

    if (format == "csv") {
        std::string csv = "step,mean_sq_grad,running_average\n";
        for (std::size_t i = 0; i < report.mean_sq_grad.size(); ++i)
            csv += std::to_string(i + 1) + ',' + fmt_double(report.mean_sq_grad[i]) + ',' +
                   fmt_double(i < report.running_average.size() ? report.running_average[i] : 0.0) + '\n';
        write_text_file(out_dir + "/rate_check.csv", csv);
    } else {
        json o;
        o["mean_sq_grad"] = report.mean_sq_grad;
        o["running_average"] = report.running_average;
        write_text_file(out_dir + "/rate_check.json", o.dump(2) + "\n");
    }

    json summary;
    summary["bound_rhs"] = report.bound;
    summary["p_bar_min"] = report.p_bar_min;
    summary["p_hat_max"] = report.p_hat_max;
    summary["final_running_average"] = report.final_average();
    summary["bound_dominates"] = !report.diverged && report.final_average() <= report.bound;
    summary["stepsize_ok"] = report.stepsize_ok;
    summary["diverged"] = report.diverged;
    if (report.diverged) summary["diverged_step"] = report.diverged_step;
    std::string text = summary.dump(2) + "\n";
    write_text_file(out_dir + "/rate_check_summary.json", text);

    if (report.diverged) throw DivergenceError("rate experiment diverged", report.diverged_step);
    return text;
}

}  // namespace frugal
