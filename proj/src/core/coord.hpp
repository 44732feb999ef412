#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/problems.hpp"
#include "core/rng.hpp"

namespace frugal {

// Momentum-set sampler: which coordinates keep momentum this step.
class JSampler {
public:
    enum class Kind { bernoulli_each, fixed_set, block_cyclic };

    static JSampler bernoulli_each(double p, std::uint64_t seed);
    static JSampler fixed_set(std::vector<long> indices);
    // Contiguous blocks of `block_size` coordinates, advancing every
    // `period` steps.
    static JSampler block_cyclic(long block_size, long period);

    Kind kind() const { return kind_; }

    struct Sample {
        std::vector<std::uint8_t> mask;  // length d
        double p_min = 0.0;              // min_j Pr[j in J_k]
        double p_max = 0.0;              // max_j Pr[j in J_k]
    };

    // Membership for step k (1-based) over dimension d.
    Sample sample(long k, long d) const;

private:
    Kind kind_ = Kind::fixed_set;
    double p_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<long> indices_;
    long block_size_ = 1;
    long period_ = 1;
};

struct CoordState {
    std::vector<double> x;
    std::vector<double> m;
    long k = 0;  // completed steps

    static CoordState init(std::vector<double> x0) {
        CoordState s;
        s.m.assign(x0.size(), 0.0);
        s.x = std::move(x0);
        return s;
    }
};

// One step of the coordinate-momentum method: coordinates in J update with
// dampened momentum, the rest take a plain gradient step; leaving J
// releases (zeroes) the buffer for the next accumulation.
void alg2_step(CoordState& state, const std::vector<double>& grad, const std::vector<std::uint8_t>& j_mask,
               double alpha, double beta);

// Constant-stepsize reformulation: every coordinate moves by the momentum
// half-step, then coordinates outside the next round's set are corrected by
// x <- x_half/(1-beta) - beta*x_old/(1-beta).
void alg3_step(CoordState& state, const std::vector<double>& grad, const std::vector<std::uint8_t>& j_mask,
               const std::vector<std::uint8_t>& j_next_mask, double alpha, double beta);

struct VarianceCheck {
    double estimate = 0.0;  // Monte-Carlo E||m_tilde - m||^2
    double bound = 0.0;     // (1-beta)/(1+beta) * sigma^2
};

// Simulates the momentum buffer around a fixed gradient path with additive
// noise of per-coordinate variance sigma_j^2; trials >= 1000.
VarianceCheck momentum_variance_mc(double beta, const std::vector<double>& noise_sigma, long horizon, long trials,
                                   std::uint64_t seed);

struct BoundValue {
    double value = 0.0;
    bool stepsize_ok = true;  // alpha <= (1-beta)/(L(4-beta+beta^2))
};

// Explicit right-hand side of the convergence bound:
//   2(f(x1)-f*)/(k*alpha)
//   + ((2b^2+8pmax)/(2(1+b)) + 1/2 + pmax(1-pmin_bar)b/(8(1-b))) * L*alpha*sigma^2.
BoundValue bound_rhs(double f1_minus_fstar, long k, double alpha, double beta, double smoothness, double sigma_sq,
                     double p_bar_min, double p_hat_max);

struct RateReport {
    std::vector<double> mean_sq_grad;    // E||g^i||^2 estimate per step, averaged over seeds
    std::vector<double> running_average; // prefix means of mean_sq_grad
    double p_bar_min = 0.0;
    double p_hat_max = 0.0;
    double bound = 0.0;
    bool stepsize_ok = true;
    bool diverged = false;
    long diverged_step = -1;

    double final_average() const { return running_average.empty() ? 0.0 : running_average.back(); }
};

// Runs alg2 on a noisy quadratic for `steps` iterations and `seeds`
// independent noise streams; records true-gradient norms, the selection
// probability bookkeeping and the bound value.
RateReport run_rate_experiment(const NoisyQuadratic& problem, const JSampler& sampler, double alpha, double beta,
                               long steps, long seeds, std::uint64_t base_seed);

}  // namespace frugal
