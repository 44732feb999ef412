#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/matrix.hpp"
#include "core/rng.hpp"

namespace frugal {

struct GroupSpec {
    std::string name;
    long rows = 0;
    long cols = 0;
    bool weight_matrix = false;  // true for genuinely 2-D tensors (projectable by default)
};

struct Evaluation {
    double loss = 0.0;
    std::vector<Matrix> grads;  // aligned with Problem::groups()
};

// Differentiable objective over named parameter groups. eval with a null
// RNG is the exact deterministic loss/gradient; with an RNG it returns an
// unbiased stochastic gradient.
class Problem {
public:
    virtual ~Problem() = default;

    virtual std::string name() const = 0;
    virtual const std::vector<GroupSpec>& groups() const = 0;
    virtual std::vector<Matrix> initial_params(std::uint64_t seed) const = 0;
    virtual Evaluation eval(const std::vector<Matrix>& params, Rng* rng) const = 0;
    // Gradient Lipschitz constant; throws ParameterError where no global
    // constant is exposed (TinyMLP).
    virtual double smoothness_constant() const;
};

// f(W) = ||W||_F^2 over a single n x m group, gradient 2W, L = 2.
class QuadraticFrob : public Problem {
public:
    QuadraticFrob(long rows, long cols);

    std::string name() const override { return "quadratic_frob"; }
    const std::vector<GroupSpec>& groups() const override { return groups_; }
    std::vector<Matrix> initial_params(std::uint64_t seed) const override;
    Evaluation eval(const std::vector<Matrix>& params, Rng* rng) const override;
    double smoothness_constant() const override { return 2.0; }

private:
    long rows_, cols_;
    std::vector<GroupSpec> groups_;
};

// f(x) = 1/2 sum_j lambda_j x_j^2 with additive per-coordinate Gaussian
// noise of std sigma_j on the stochastic gradient. L = max lambda_j.
class NoisyQuadratic : public Problem {
public:
    NoisyQuadratic(std::vector<double> curvatures, std::vector<double> noise_sigma, std::vector<double> x0);

    std::string name() const override { return "noisy_quadratic"; }
    const std::vector<GroupSpec>& groups() const override { return groups_; }
    std::vector<Matrix> initial_params(std::uint64_t seed) const override;
    Evaluation eval(const std::vector<Matrix>& params, Rng* rng) const override;
    double smoothness_constant() const override;

    long dim() const { return static_cast<long>(curvatures_.size()); }
    const std::vector<double>& curvatures() const { return curvatures_; }
    const std::vector<double>& noise_sigma() const { return noise_sigma_; }
    const std::vector<double>& x0() const { return x0_; }
    double noise_variance_total() const;

    double loss_at(const std::vector<double>& x) const;
    void exact_grad(const std::vector<double>& x, std::vector<double>& out) const;
    void stochastic_grad(const std::vector<double>& x, Rng& rng, std::vector<double>& out) const;

private:
    std::vector<double> curvatures_, noise_sigma_, x0_;
    std::vector<GroupSpec> groups_;
};

// f(w) = 1/n ||Xw - y||^2 with minibatch sampling (with replacement).
class LeastSquares : public Problem {
public:
    LeastSquares(Matrix x, std::vector<double> y, long batch);
    static LeastSquares synthetic(long n, long d, long batch, std::uint64_t seed);

    std::string name() const override { return "least_squares"; }
    const std::vector<GroupSpec>& groups() const override { return groups_; }
    std::vector<Matrix> initial_params(std::uint64_t seed) const override;
    Evaluation eval(const std::vector<Matrix>& params, Rng* rng) const override;
    double smoothness_constant() const override;

private:
    Matrix x_;
    std::vector<double> y_;
    long batch_;
    std::vector<GroupSpec> groups_;
};

// Small dense classifier on a seeded two-class Gaussian blob dataset with
// softmax cross-entropy loss and hand-written backprop. Default 2-16-2,
// tanh, 512 samples.
class TinyMlp : public Problem {
public:
    enum class Activation { tanh, relu };

    struct Options {
        std::vector<long> dims = {2, 16, 2};
        Activation activation = Activation::tanh;
        long dataset_size = 512;
        long batch = 32;
        std::uint64_t dataset_seed = 12345;
    };

    explicit TinyMlp(Options opt);

    std::string name() const override { return "tiny_mlp"; }
    const std::vector<GroupSpec>& groups() const override { return groups_; }
    std::vector<Matrix> initial_params(std::uint64_t seed) const override;
    Evaluation eval(const std::vector<Matrix>& params, Rng* rng) const override;

    const Options& options() const { return opt_; }

private:
    Evaluation eval_batch(const std::vector<Matrix>& params, const std::vector<long>& sample_ids) const;

    Options opt_;
    std::vector<GroupSpec> groups_;
    Matrix features_;           // dataset_size x input_dim
    std::vector<int> labels_;   // 0/1
};

}  // namespace frugal
