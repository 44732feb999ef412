#include "core/problems.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/linalg.hpp"

namespace frugal {

namespace {

void check_param_shapes(const std::vector<GroupSpec>& groups, const std::vector<Matrix>& params,
                        const std::string& who) {
    if (params.size() != groups.size()) throw ParameterError(who + ": wrong number of parameter groups");
    for (std::size_t i = 0; i < groups.size(); ++i)
        if (params[i].rows() != groups[i].rows || params[i].cols() != groups[i].cols)
            throw ParameterError(who + ": shape mismatch for group " + groups[i].name);
}

}  // namespace

double Problem::smoothness_constant() const {
    throw ParameterError("smoothness_constant: not exposed for " + name());
}

QuadraticFrob::QuadraticFrob(long rows, long cols) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) throw ParameterError("QuadraticFrob: dimensions must be positive");
    groups_ = {GroupSpec{"W", rows_, cols_, true}};
}

std::vector<Matrix> QuadraticFrob::initial_params(std::uint64_t seed) const {
    Rng rng(seed);
    Matrix w(rows_, cols_);
    for (std::size_t i = 0; i < w.size(); ++i) w.at_flat(i) = rng.normal();
    return {std::move(w)};
}

Evaluation QuadraticFrob::eval(const std::vector<Matrix>& params, Rng*) const {
    check_param_shapes(groups_, params, "QuadraticFrob::eval");
    const Matrix& w = params[0];
    Evaluation out;
    out.loss = dot(w, w);
    out.grads.push_back(2.0 * w);
    return out;
}

NoisyQuadratic::NoisyQuadratic(std::vector<double> curvatures, std::vector<double> noise_sigma, std::vector<double> x0)
    : curvatures_(std::move(curvatures)), noise_sigma_(std::move(noise_sigma)), x0_(std::move(x0)) {
    if (curvatures_.empty()) throw ParameterError("NoisyQuadratic: empty curvature vector");
    if (noise_sigma_.size() != curvatures_.size() || x0_.size() != curvatures_.size())
        throw ParameterError("NoisyQuadratic: curvatures, noise_sigma and x0 must have equal length");
    for (double l : curvatures_)
        if (!(l > 0.0)) throw ParameterError("NoisyQuadratic: curvatures must be positive");
    for (double s : noise_sigma_)
        if (s < 0.0) throw ParameterError("NoisyQuadratic: noise sigma must be non-negative");
    groups_ = {GroupSpec{"x", dim(), 1, false}};
}

std::vector<Matrix> NoisyQuadratic::initial_params(std::uint64_t) const { return {Matrix::column(x0_)}; }

double NoisyQuadratic::smoothness_constant() const { return *std::max_element(curvatures_.begin(), curvatures_.end()); }

double NoisyQuadratic::noise_variance_total() const {
    double s = 0.0;
    for (double v : noise_sigma_) s += v * v;
    return s;
}

double NoisyQuadratic::loss_at(const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) s += 0.5 * curvatures_[j] * x[j] * x[j];
    return s;
}

void NoisyQuadratic::exact_grad(const std::vector<double>& x, std::vector<double>& out) const {
    out.resize(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = curvatures_[j] * x[j];
}

void NoisyQuadratic::stochastic_grad(const std::vector<double>& x, Rng& rng, std::vector<double>& out) const {
    exact_grad(x, out);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += noise_sigma_[j] * rng.normal();
}

Evaluation NoisyQuadratic::eval(const std::vector<Matrix>& params, Rng* rng) const {
    check_param_shapes(groups_, params, "NoisyQuadratic::eval");
    const std::vector<double>& x = params[0].data();
    Evaluation out;
    out.loss = loss_at(x);
    std::vector<double> g;
    if (rng)
        stochastic_grad(x, *rng, g);
    else
        exact_grad(x, g);
    out.grads.push_back(Matrix::column(g));
    return out;
}

LeastSquares::LeastSquares(Matrix x, std::vector<double> y, long batch) : x_(std::move(x)), y_(std::move(y)), batch_(batch) {
    if (x_.rows() < 1 || x_.cols() < 1) throw ParameterError("LeastSquares: empty data matrix");
    if (static_cast<long>(y_.size()) != x_.rows()) throw ParameterError("LeastSquares: target length mismatch");
    if (batch_ < 1 || batch_ > x_.rows()) throw ParameterError("LeastSquares: batch out of range");
    groups_ = {GroupSpec{"w", x_.cols(), 1, false}};
}

LeastSquares LeastSquares::synthetic(long n, long d, long batch, std::uint64_t seed) {
    Rng rng(seed);
    Matrix x(n, d);
    for (std::size_t i = 0; i < x.size(); ++i) x.at_flat(i) = rng.normal();
    std::vector<double> w_true(static_cast<std::size_t>(d));
    for (auto& w : w_true) w = rng.normal();
    std::vector<double> y(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
        double s = 0.0;
        for (long j = 0; j < d; ++j) s += x(i, j) * w_true[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = s + 0.1 * rng.normal();
    }
    return LeastSquares(std::move(x), std::move(y), batch);
}

std::vector<Matrix> LeastSquares::initial_params(std::uint64_t seed) const {
    Rng rng(seed);
    Matrix w(x_.cols(), 1);
    for (std::size_t i = 0; i < w.size(); ++i) w.at_flat(i) = 0.1 * rng.normal();
    return {std::move(w)};
}

double LeastSquares::smoothness_constant() const {
    std::vector<double> sv = singular_values(x_);
    double smax = sv.empty() ? 0.0 : sv.front();
    return 2.0 * smax * smax / static_cast<double>(x_.rows());
}

Evaluation LeastSquares::eval(const std::vector<Matrix>& params, Rng* rng) const {
    check_param_shapes(groups_, params, "LeastSquares::eval");
    const Matrix& w = params[0];
    std::vector<long> ids;
    if (rng) {
        ids.resize(static_cast<std::size_t>(batch_));
        for (auto& id : ids) id = static_cast<long>(rng->uniform_below(static_cast<std::uint64_t>(x_.rows())));
    } else {
        ids.resize(static_cast<std::size_t>(x_.rows()));
        for (long i = 0; i < x_.rows(); ++i) ids[static_cast<std::size_t>(i)] = i;
    }

    const double inv = 1.0 / static_cast<double>(ids.size());
    Evaluation out;
    Matrix grad(x_.cols(), 1);
    for (long id : ids) {
        double resid = -y_[static_cast<std::size_t>(id)];
        for (long j = 0; j < x_.cols(); ++j) resid += x_(id, j) * w(j, 0);
        out.loss += inv * resid * resid;
        for (long j = 0; j < x_.cols(); ++j) grad(j, 0) += inv * 2.0 * resid * x_(id, j);
    }
    out.grads.push_back(std::move(grad));
    return out;
}

TinyMlp::TinyMlp(Options opt) : opt_(std::move(opt)) {
    if (opt_.dims.size() < 2) throw ParameterError("TinyMlp: need at least input and output dims");
    for (long d : opt_.dims)
        if (d < 1) throw ParameterError("TinyMlp: dims must be positive");
    if (opt_.dims.back() != 2) throw ParameterError("TinyMlp: two-class output expected");
    if (opt_.batch < 1 || opt_.batch > opt_.dataset_size) throw ParameterError("TinyMlp: batch out of range");

    const std::size_t layers = opt_.dims.size() - 1;
    for (std::size_t l = 0; l < layers; ++l) {
        const bool is_head = l + 1 == layers;
        std::string base = is_head ? "output" : "layer" + std::to_string(l);
        groups_.push_back(GroupSpec{base + ".weight", opt_.dims[l + 1], opt_.dims[l], true});
        groups_.push_back(GroupSpec{base + ".bias", opt_.dims[l + 1], 1, false});
    }

    // Two Gaussian blobs around -mu and +mu; overlapping enough that the
    // optimum has nonzero loss.
    Rng rng(opt_.dataset_seed);
    const long input_dim = opt_.dims.front();
    features_ = Matrix(opt_.dataset_size, input_dim);
    labels_.resize(static_cast<std::size_t>(opt_.dataset_size));
    for (long i = 0; i < opt_.dataset_size; ++i) {
        int label = i % 2;
        labels_[static_cast<std::size_t>(i)] = label;
        double center = label == 0 ? -1.0 : 1.0;
        for (long j = 0; j < input_dim; ++j) features_(i, j) = (j == 0 ? center : 0.0) + rng.normal();
    }
}

std::vector<Matrix> TinyMlp::initial_params(std::uint64_t seed) const {
    Rng rng(seed);
    std::vector<Matrix> params;
    for (const GroupSpec& g : groups_) {
        Matrix m(g.rows, g.cols);
        if (g.weight_matrix) {
            double scale = 1.0 / std::sqrt(static_cast<double>(g.cols));
            for (std::size_t i = 0; i < m.size(); ++i) m.at_flat(i) = scale * rng.normal();
        }
        params.push_back(std::move(m));
    }
    return params;
}

Evaluation TinyMlp::eval(const std::vector<Matrix>& params, Rng* rng) const {
    check_param_shapes(groups_, params, "TinyMlp::eval");
    std::vector<long> ids;
    if (rng) {
        ids.resize(static_cast<std::size_t>(opt_.batch));
        for (auto& id : ids) id = static_cast<long>(rng->uniform_below(static_cast<std::uint64_t>(opt_.dataset_size)));
    } else {
        ids.resize(static_cast<std::size_t>(opt_.dataset_size));
        for (long i = 0; i < opt_.dataset_size; ++i) ids[static_cast<std::size_t>(i)] = i;
    }
    return eval_batch(params, ids);
}

Evaluation TinyMlp::eval_batch(const std::vector<Matrix>& params, const std::vector<long>& sample_ids) const {
    const std::size_t layers = opt_.dims.size() - 1;
    const double inv = 1.0 / static_cast<double>(sample_ids.size());

    Evaluation out;
    out.grads.reserve(groups_.size());
    for (const GroupSpec& g : groups_) out.grads.emplace_back(g.rows, g.cols);

    // Per-sample forward/backward; matrices are tiny so simplicity wins.
    std::vector<std::vector<double>> acts(layers + 1);       // post-activation
    std::vector<std::vector<double>> preacts(layers);        // pre-activation
    for (long id : sample_ids) {
        acts[0].resize(static_cast<std::size_t>(opt_.dims[0]));
        for (long j = 0; j < opt_.dims[0]; ++j) acts[0][static_cast<std::size_t>(j)] = features_(id, j);

        for (std::size_t l = 0; l < layers; ++l) {
            const Matrix& w = params[2 * l];
            const Matrix& b = params[2 * l + 1];
            long out_dim = opt_.dims[l + 1];
            long in_dim = opt_.dims[l];
            preacts[l].assign(static_cast<std::size_t>(out_dim), 0.0);
            acts[l + 1].assign(static_cast<std::size_t>(out_dim), 0.0);
            for (long o = 0; o < out_dim; ++o) {
                double z = b(o, 0);
                for (long i = 0; i < in_dim; ++i) z += w(o, i) * acts[l][static_cast<std::size_t>(i)];
                preacts[l][static_cast<std::size_t>(o)] = z;
                if (l + 1 == layers)
                    acts[l + 1][static_cast<std::size_t>(o)] = z;  // logits
                else if (opt_.activation == Activation::tanh)
                    acts[l + 1][static_cast<std::size_t>(o)] = std::tanh(z);
                else
                    acts[l + 1][static_cast<std::size_t>(o)] = z > 0.0 ? z : 0.0;
            }
        }

        // Softmax cross-entropy on two logits.
        const std::vector<double>& logits = acts[layers];
        double zmax = std::max(logits[0], logits[1]);
        double e0 = std::exp(logits[0] - zmax);
        double e1 = std::exp(logits[1] - zmax);
        double zsum = e0 + e1;
        int y = labels_[static_cast<std::size_t>(id)];
        out.loss += inv * (std::log(zsum) - (logits[static_cast<std::size_t>(y)] - zmax));

        std::vector<double> delta = {e0 / zsum, e1 / zsum};
        delta[static_cast<std::size_t>(y)] -= 1.0;

        for (std::size_t l = layers; l-- > 0;) {
            Matrix& gw = out.grads[2 * l];
            Matrix& gb = out.grads[2 * l + 1];
            long out_dim = opt_.dims[l + 1];
            long in_dim = opt_.dims[l];
            for (long o = 0; o < out_dim; ++o) {
                double d = delta[static_cast<std::size_t>(o)] * inv;
                gb(o, 0) += d;
                for (long i = 0; i < in_dim; ++i) gw(o, i) += d * acts[l][static_cast<std::size_t>(i)];
            }
            if (l == 0) break;
            const Matrix& w = params[2 * l];
            std::vector<double> prev(static_cast<std::size_t>(in_dim), 0.0);
            for (long i = 0; i < in_dim; ++i) {
                double s = 0.0;
                for (long o = 0; o < out_dim; ++o) s += w(o, i) * delta[static_cast<std::size_t>(o)];
                double z = preacts[l - 1][static_cast<std::size_t>(i)];
                double dact = opt_.activation == Activation::tanh ? 1.0 - std::tanh(z) * std::tanh(z)
                                                                  : (z > 0.0 ? 1.0 : 0.0);
                prev[static_cast<std::size_t>(i)] = s * dact;
            }
            delta = std::move(prev);
        }
    }
    return out;
}

}  // namespace frugal
