#include "frugal.h"

#include <cstring>
#include <exception>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/engine.hpp"
#include "core/errors.hpp"
#include "core/harness.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

frugal_status fail(frugal_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

// Translates core exceptions to status codes at the C boundary.
template <typename Fn>
frugal_status guarded(Fn&& fn) {
    try {
        fn();
        return FRUGAL_OK;
    } catch (const frugal::ConfigError& e) {
        return fail(FRUGAL_ERR_CONFIG, e.what());
    } catch (const frugal::DataError& e) {
        return fail(FRUGAL_ERR_DATA, e.what());
    } catch (const frugal::DivergenceError& e) {
        return fail(FRUGAL_ERR_DIVERGED, e.what());
    } catch (const frugal::ParameterError& e) {
        return fail(FRUGAL_ERR_PARAM, e.what());
    } catch (const std::exception& e) {
        return fail(FRUGAL_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(FRUGAL_ERR_INTERNAL, "unknown error");
    }
}

std::vector<double> parse_number_csv(const char* text) {
    std::vector<double> out;
    if (!text) return out;
    std::string s(text);
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t next = s.find(',', pos);
        if (next == std::string::npos) next = s.size();
        std::string token = s.substr(pos, next - pos);
        if (!token.empty()) out.push_back(std::stod(token));
        pos = next + 1;
    }
    return out;
}

void set_out(char** out, const std::string& text) {
    if (out) *out = dup_string(text);
}

}  // namespace

struct frugal_engine {
    frugal::FrugalEngine impl;
    std::vector<std::string> names;
};

extern "C" {

const char* frugal_version(void) { return "1.0.0"; }

const char* frugal_last_error(void) { return g_last_error.c_str(); }

void frugal_string_free(char* s) { std::free(s); }

frugal_status frugal_run_experiment(const char* config_json, const char* out_dir, const char* format,
                                    long seed_override, char** summary_out) {
    if (!config_json || !out_dir) return fail(FRUGAL_ERR_PARAM, "null argument");
    return guarded([&] {
        std::string summary = frugal::run_experiment_to_files(config_json, out_dir, format ? format : "csv",
                                                              seed_override);
        set_out(summary_out, summary);
    });
}

frugal_status frugal_run_reproj_toy(const char* ranks_csv, long update_gap, long seeds, long steps,
                                    const char* lrs_csv, double beta, const char* out_dir, const char* format,
                                    char** summary_out) {
    if (!out_dir) return fail(FRUGAL_ERR_PARAM, "null argument");
    return guarded([&] {
        frugal::ToyReprojOptions opt;
        if (ranks_csv && *ranks_csv) {
            opt.ranks.clear();
            for (double r : parse_number_csv(ranks_csv)) opt.ranks.push_back(static_cast<long>(r));
        }
        if (lrs_csv && *lrs_csv) opt.learning_rates = parse_number_csv(lrs_csv);
        if (update_gap > 0) opt.update_gap = update_gap;
        if (seeds > 0) opt.seeds = seeds;
        if (steps > 0) opt.steps = steps;
        if (beta >= 0.0) opt.beta = beta;
        std::string summary = frugal::reproj_toy_to_files(opt, out_dir, format ? format : "csv");
        set_out(summary_out, summary);
    });
}

frugal_status frugal_run_angle_analysis(const char* config_json, const char* out_dir, const char* format,
                                        char** summary_out) {
    if (!config_json || !out_dir) return fail(FRUGAL_ERR_PARAM, "null argument");
    return guarded([&] {
        frugal::AngleOptions opt = frugal::parse_angle_options_json(config_json);
        std::string summary = frugal::angle_analysis_to_files(opt, out_dir, format ? format : "csv");
        set_out(summary_out, summary);
    });
}

frugal_status frugal_memory_report(const char* config_json, char** report_out) {
    if (!config_json) return fail(FRUGAL_ERR_PARAM, "null argument");
    return guarded([&] { set_out(report_out, frugal::memory_report_json(config_json)); });
}

frugal_status frugal_rate_check(const char* config_json, const char* out_dir, const char* format, long seed_override,
                                char** summary_out) {
    if (!config_json || !out_dir) return fail(FRUGAL_ERR_PARAM, "null argument");
    return guarded([&] {
        std::string summary =
            frugal::rate_check_to_files(config_json, out_dir, format ? format : "csv", seed_override);
        set_out(summary_out, summary);
    });
}

frugal_status frugal_engine_create(const char* config_json, frugal_engine** out) {
    if (!config_json || !out) return fail(FRUGAL_ERR_PARAM, "null argument");
    *out = nullptr;
    return guarded([&] {
        nlohmann::json root;
        try {
            root = nlohmann::json::parse(config_json);
        } catch (const nlohmann::json::parse_error& e) {
            throw frugal::ConfigError(std::string("engine config parse error: ") + e.what());
        }
        if (!root.is_object() || !root.contains("groups") || !root["groups"].is_array())
            throw frugal::ConfigError("engine config: expected object with a 'groups' array");
        for (const auto& item : root.items())
            if (item.key() != "groups" && item.key() != "optimizer")
                throw frugal::ConfigError("engine config: unknown key '" + item.key() + "'");

        std::vector<frugal::GroupInit> groups;
        std::vector<std::string> names;
        for (const auto& g : root["groups"]) {
            for (const auto& item : g.items())
                if (item.key() != "name" && item.key() != "rows" && item.key() != "cols" && item.key() != "role")
                    throw frugal::ConfigError("engine config group: unknown key '" + item.key() + "'");
            if (!g.contains("name") || !g.contains("rows") || !g.contains("cols"))
                throw frugal::ConfigError("engine config group: need name, rows, cols");
            frugal::GroupInit init;
            init.name = g["name"].get<std::string>();
            init.param = frugal::Matrix(g["rows"].get<long>(), g["cols"].get<long>());
            init.role = frugal::group_role_from_string(g.value("role", std::string("projectable")));
            names.push_back(init.name);
            groups.push_back(std::move(init));
        }

        frugal::FrugalConfig cfg;
        if (root.contains("optimizer")) cfg = frugal::parse_frugal_optimizer_json(root["optimizer"].dump());

        auto* handle = new frugal_engine{frugal::FrugalEngine(std::move(groups), cfg), std::move(names)};
        *out = handle;
    });
}

void frugal_engine_destroy(frugal_engine* engine) { delete engine; }

frugal_status frugal_engine_group_count(const frugal_engine* engine, size_t* out) {
    if (!engine || !out) return fail(FRUGAL_ERR_PARAM, "null argument");
    *out = engine->impl.group_count();
    return FRUGAL_OK;
}

frugal_status frugal_engine_group_name(const frugal_engine* engine, size_t group, const char** out) {
    if (!engine || !out) return fail(FRUGAL_ERR_PARAM, "null argument");
    if (group >= engine->names.size()) return fail(FRUGAL_ERR_PARAM, "group index out of range");
    *out = engine->names[group].c_str();
    return FRUGAL_OK;
}

frugal_status frugal_engine_group_shape(const frugal_engine* engine, size_t group, long* rows, long* cols) {
    if (!engine || !rows || !cols) return fail(FRUGAL_ERR_PARAM, "null argument");
    if (group >= engine->impl.group_count()) return fail(FRUGAL_ERR_PARAM, "group index out of range");
    *rows = engine->impl.param(group).rows();
    *cols = engine->impl.param(group).cols();
    return FRUGAL_OK;
}

frugal_status frugal_engine_set_param(frugal_engine* engine, size_t group, const double* buf, size_t len) {
    if (!engine || !buf) return fail(FRUGAL_ERR_PARAM, "null argument");
    if (group >= engine->impl.group_count()) return fail(FRUGAL_ERR_PARAM, "group index out of range");
    return guarded([&] {
        const frugal::Matrix& current = engine->impl.param(group);
        if (len != current.size()) throw frugal::ParameterError("set_param: buffer length mismatch");
        frugal::Matrix m(current.rows(), current.cols(), std::vector<double>(buf, buf + len));
        engine->impl.set_param(group, std::move(m));
    });
}

frugal_status frugal_engine_get_param(const frugal_engine* engine, size_t group, double* buf, size_t len) {
    if (!engine || !buf) return fail(FRUGAL_ERR_PARAM, "null argument");
    if (group >= engine->impl.group_count()) return fail(FRUGAL_ERR_PARAM, "group index out of range");
    const frugal::Matrix& m = engine->impl.param(group);
    if (len != m.size()) return fail(FRUGAL_ERR_PARAM, "get_param: buffer length mismatch");
    std::memcpy(buf, m.data().data(), len * sizeof(double));
    return FRUGAL_OK;
}

frugal_status frugal_engine_step(frugal_engine* engine, const double* const* grads, size_t ngroups) {
    if (!engine || !grads) return fail(FRUGAL_ERR_PARAM, "null argument");
    return guarded([&] {
        if (ngroups != engine->impl.group_count())
            throw frugal::ParameterError("engine_step: wrong gradient count");
        std::vector<frugal::Matrix> g;
        g.reserve(ngroups);
        for (size_t i = 0; i < ngroups; ++i) {
            const frugal::Matrix& p = engine->impl.param(i);
            if (!grads[i]) throw frugal::ParameterError("engine_step: null gradient buffer");
            g.emplace_back(p.rows(), p.cols(), std::vector<double>(grads[i], grads[i] + p.size()));
        }
        engine->impl.step(g);
    });
}

frugal_status frugal_engine_step_count(const frugal_engine* engine, long* out) {
    if (!engine || !out) return fail(FRUGAL_ERR_PARAM, "null argument");
    *out = engine->impl.step_count();
    return FRUGAL_OK;
}

frugal_status frugal_engine_state_floats(const frugal_engine* engine, long* out) {
    if (!engine || !out) return fail(FRUGAL_ERR_PARAM, "null argument");
    *out = engine->impl.state_float_count();
    return FRUGAL_OK;
}

}  // extern "C"
