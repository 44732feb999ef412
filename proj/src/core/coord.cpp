#include "core/coord.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace frugal {

JSampler JSampler::bernoulli_each(double p, std::uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw ParameterError("JSampler: probability must be in [0,1]");
    JSampler s;
    s.kind_ = Kind::bernoulli_each;
    s.p_ = p;
    s.seed_ = seed;
    return s;
}

JSampler JSampler::fixed_set(std::vector<long> indices) {
    std::sort(indices.begin(), indices.end());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0) throw ParameterError("JSampler: negative index");
        if (i > 0 && indices[i] == indices[i - 1]) throw ParameterError("JSampler: duplicate index");
    }
    JSampler s;
    s.kind_ = Kind::fixed_set;
    s.indices_ = std::move(indices);
    return s;
}

JSampler JSampler::block_cyclic(long block_size, long period) {
    if (block_size < 1) throw ParameterError("JSampler: block size must be positive");
    if (period < 1) throw ParameterError("JSampler: period must be positive");
    JSampler s;
    s.kind_ = Kind::block_cyclic;
    s.block_size_ = block_size;
    s.period_ = period;
    return s;
}

JSampler::Sample JSampler::sample(long k, long d) const {
    if (d < 1) throw ParameterError("JSampler::sample: dimension must be positive");
    Sample out;
    out.mask.assign(static_cast<std::size_t>(d), 0);
    switch (kind_) {
        case Kind::bernoulli_each: {
            Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(k)));
            for (long j = 0; j < d; ++j) out.mask[static_cast<std::size_t>(j)] = rng.uniform() < p_ ? 1 : 0;
            out.p_min = out.p_max = p_;
            break;
        }
        case Kind::fixed_set: {
            for (long idx : indices_) {
                if (idx >= d) throw ParameterError("JSampler::sample: fixed index out of range");
                out.mask[static_cast<std::size_t>(idx)] = 1;
            }
            long count = static_cast<long>(indices_.size());
            out.p_min = count == d ? 1.0 : 0.0;
            out.p_max = count > 0 ? 1.0 : 0.0;
            break;
        }
        case Kind::block_cyclic: {
            long n_blocks = (d + block_size_ - 1) / block_size_;
            long active = ((k - 1) / period_) % n_blocks;
            for (long j = 0; j < d; ++j)
                if (j / block_size_ == active) out.mask[static_cast<std::size_t>(j)] = 1;
            out.p_min = block_size_ >= d ? 1.0 : 0.0;
            out.p_max = 1.0;
            break;
        }
    }
    return out;
}

void alg2_step(CoordState& state, const std::vector<double>& grad, const std::vector<std::uint8_t>& j_mask,
               double alpha, double beta) {
    const std::size_t d = state.x.size();
    if (grad.size() != d || state.m.size() != d || j_mask.size() != d)
        throw ParameterError("alg2_step: dimension mismatch");
    if (!(alpha > 0.0)) throw ParameterError("alg2_step: alpha must be positive");
    if (beta < 0.0 || beta >= 1.0) throw ParameterError("alg2_step: beta must be in [0,1)");

    for (std::size_t j = 0; j < d; ++j) {
        double carried = j_mask[j] ? state.m[j] : 0.0;
        double m = (1.0 - beta) * grad[j] + beta * carried;
        state.m[j] = m;
        double u = j_mask[j] ? m : grad[j];
        state.x[j] = state.x[j] - alpha * u;
    }
    state.k += 1;
}

void alg3_step(CoordState& state, const std::vector<double>& grad, const std::vector<std::uint8_t>& j_mask,
               const std::vector<std::uint8_t>& j_next_mask, double alpha, double beta) {
    const std::size_t d = state.x.size();
    if (grad.size() != d || state.m.size() != d || j_mask.size() != d || j_next_mask.size() != d)
        throw ParameterError("alg3_step: dimension mismatch");
    if (!(alpha > 0.0)) throw ParameterError("alg3_step: alpha must be positive");
    if (beta < 0.0 || beta >= 1.0) throw ParameterError("alg3_step: beta must be in [0,1)");

    for (std::size_t j = 0; j < d; ++j) {
        double carried = j_mask[j] ? state.m[j] : 0.0;
        double m = (1.0 - beta) * grad[j] + beta * carried;
        state.m[j] = m;
        double x_old = state.x[j];
        double x_half = x_old - alpha * m;
        state.x[j] = j_next_mask[j] ? x_half : x_half / (1.0 - beta) - beta * x_old / (1.0 - beta);
    }
    state.k += 1;
}

VarianceCheck momentum_variance_mc(double beta, const std::vector<double>& noise_sigma, long horizon, long trials,
                                   std::uint64_t seed) {
    if (trials < 1000) throw ParameterError("momentum_variance_mc: trials must be >= 1000");
    if (horizon < 1) throw ParameterError("momentum_variance_mc: horizon must be >= 1");
    if (beta < 0.0 || beta >= 1.0) throw ParameterError("momentum_variance_mc: beta must be in [0,1)");
    const std::size_t d = noise_sigma.size();

    double sigma_sq = 0.0;
    for (double s : noise_sigma) sigma_sq += s * s;

    // Fixed gradient path; it cancels in m_tilde - m but keeps the
    // simulation honest.
    auto path = [](long step, std::size_t j) { return std::sin(0.1 * static_cast<double>(step) + static_cast<double>(j)); };

    double acc = 0.0;
    std::vector<double> m_tilde(d), m_exact(d);
    for (long t = 0; t < trials; ++t) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
        std::fill(m_tilde.begin(), m_tilde.end(), 0.0);
        std::fill(m_exact.begin(), m_exact.end(), 0.0);
        for (long step = 1; step <= horizon; ++step) {
            for (std::size_t j = 0; j < d; ++j) {
                double g = path(step, j);
                double noise = noise_sigma[j] * rng.normal();
                m_tilde[j] = (1.0 - beta) * (g + noise) + beta * m_tilde[j];
                m_exact[j] = (1.0 - beta) * g + beta * m_exact[j];
            }
        }
        double diff_sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double diff = m_tilde[j] - m_exact[j];
            diff_sq += diff * diff;
        }
        acc += diff_sq;
    }

    VarianceCheck out;
    out.estimate = acc / static_cast<double>(trials);
    out.bound = (1.0 - beta) / (1.0 + beta) * sigma_sq;
    return out;
}

BoundValue bound_rhs(double f1_minus_fstar, long k, double alpha, double beta, double smoothness, double sigma_sq,
                     double p_bar_min, double p_hat_max) {
    if (k < 1) throw ParameterError("bound_rhs: k must be >= 1");
    if (!(alpha > 0.0)) throw ParameterError("bound_rhs: alpha must be positive");
    if (beta < 0.0 || beta >= 1.0) throw ParameterError("bound_rhs: beta must be in [0,1)");
    if (p_bar_min < 0.0 || p_bar_min > 1.0 || p_hat_max < 0.0 || p_hat_max > 1.0)
        throw ParameterError("bound_rhs: probabilities must be in [0,1]");

    BoundValue out;
    out.stepsize_ok = alpha <= (1.0 - beta) / (smoothness * (4.0 - beta + beta * beta));
    double noise_coeff = (2.0 * beta * beta + 8.0 * p_hat_max) / (2.0 * (1.0 + beta)) + 0.5 +
                         p_hat_max * (1.0 - p_bar_min) * beta / (8.0 * (1.0 - beta));
    out.value = 2.0 * f1_minus_fstar / (static_cast<double>(k) * alpha) +
                noise_coeff * smoothness * alpha * sigma_sq;
    return out;
}

RateReport run_rate_experiment(const NoisyQuadratic& problem, const JSampler& sampler, double alpha, double beta,
                               long steps, long seeds, std::uint64_t base_seed) {
    if (steps < 1) throw ParameterError("run_rate_experiment: steps must be >= 1");
    if (seeds < 1) throw ParameterError("run_rate_experiment: seeds must be >= 1");
    const long d = problem.dim();

    RateReport report;
    report.mean_sq_grad.assign(static_cast<std::size_t>(steps), 0.0);

    double p_min_sum = 0.0;
    double p_max_peak = 0.0;
    std::vector<double> grad(static_cast<std::size_t>(d));
    std::vector<double> exact(static_cast<std::size_t>(d));

    for (long s = 0; s < seeds; ++s) {
        Rng noise(mix_seed(base_seed, static_cast<std::uint64_t>(s)));
        CoordState state = CoordState::init(problem.x0());
        for (long step = 1; step <= steps; ++step) {
            JSampler::Sample j = sampler.sample(step, d);
            if (s == 0) {
                p_min_sum += j.p_min;
                p_max_peak = std::max(p_max_peak, j.p_max);
            }
            problem.exact_grad(state.x, exact);
            double sq = 0.0;
            for (double g : exact) sq += g * g;
            report.mean_sq_grad[static_cast<std::size_t>(step - 1)] += sq / static_cast<double>(seeds);

            problem.stochastic_grad(state.x, noise, grad);
            alg2_step(state, grad, j.mask, alpha, beta);

            double xsq = 0.0;
            for (double x : state.x) xsq += x * x;
            if (!(xsq < 1e24)) {
                report.diverged = true;
                report.diverged_step = step;
                return report;
            }
        }
    }

    report.running_average.resize(report.mean_sq_grad.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < report.mean_sq_grad.size(); ++i) {
        acc += report.mean_sq_grad[i];
        report.running_average[i] = acc / static_cast<double>(i + 1);
    }

    report.p_bar_min = p_min_sum / static_cast<double>(steps);
    report.p_hat_max = p_max_peak;
    BoundValue bound = bound_rhs(problem.loss_at(problem.x0()), steps, alpha, beta, problem.smoothness_constant(),
                                 problem.noise_variance_total(), report.p_bar_min, report.p_hat_max);
    report.bound = bound.value;
    report.stepsize_ok = bound.stepsize_ok;
    return report;
}

}  // namespace frugal
