#include "core/projection.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace frugal {

ProjectorKind projector_kind_from_string(const std::string& name) {
    if (name == "svd") return ProjectorKind::svd;
    if (name == "random_ortho") return ProjectorKind::random_ortho;
    if (name == "randk") return ProjectorKind::randk;
    if (name == "columns") return ProjectorKind::columns;
    if (name == "blocks") return ProjectorKind::blocks;
    throw ConfigError("unknown projector kind: " + name);
}

std::string projector_kind_to_string(ProjectorKind kind) {
    switch (kind) {
        case ProjectorKind::svd: return "svd";
        case ProjectorKind::random_ortho: return "random_ortho";
        case ProjectorKind::randk: return "randk";
        case ProjectorKind::columns: return "columns";
        case ProjectorKind::blocks: return "blocks";
    }
    return "blocks";
}

long round_half_even(double x) { return static_cast<long>(std::nearbyint(x)); }

Projector Projector::svd_low_rank(OrthoBasis basis, Side side, long epoch) {
    Projector p;
    p.kind_ = ProjectorKind::svd;
    p.side_ = side;
    p.basis_ = std::move(basis);
    p.epoch_ = epoch;
    return p;
}

Projector Projector::random_ortho(OrthoBasis basis, Side side, long epoch) {
    Projector p;
    p.kind_ = ProjectorKind::random_ortho;
    p.side_ = side;
    p.basis_ = std::move(basis);
    p.epoch_ = epoch;
    return p;
}

Projector Projector::randk(std::uint64_t seed, long k, long rows, long cols, long epoch) {
    if (k < 0 || k > rows * cols) throw ParameterError("randk projector: k out of range");
    Projector p;
    p.kind_ = ProjectorKind::randk;
    p.seed_ = seed;
    p.k_ = k;
    p.rows_ = rows;
    p.cols_ = cols;
    p.epoch_ = epoch;
    return p;
}

Projector Projector::columns(std::vector<long> indices, long rows, long cols, long epoch) {
    std::sort(indices.begin(), indices.end());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= cols) throw ParameterError("columns projector: index out of range");
        if (i > 0 && indices[i] == indices[i - 1]) throw ParameterError("columns projector: duplicate index");
    }
    Projector p;
    p.kind_ = ProjectorKind::columns;
    p.indices_ = std::move(indices);
    p.rows_ = rows;
    p.cols_ = cols;
    p.epoch_ = epoch;
    return p;
}

Projector Projector::block(bool active, long rows, long cols, long epoch) {
    Projector p;
    p.kind_ = ProjectorKind::blocks;
    p.active_ = active;
    p.rows_ = rows;
    p.cols_ = cols;
    p.epoch_ = epoch;
    return p;
}

const OrthoBasis& Projector::basis() const {
    if (!basis_) throw ParameterError("projector has no basis");
    return *basis_;
}

std::vector<long> Projector::randk_indices() const {
    if (kind_ != ProjectorKind::randk) throw ParameterError("randk_indices on non-RandK projector");
    Rng rng(seed_);
    return rng.sample_without_replacement(rows_ * cols_, k_);
}

Matrix Projector::down(const Matrix& g) const {
    switch (kind_) {
        case ProjectorKind::svd:
        case ProjectorKind::random_ortho: {
            const Matrix& b = basis().matrix();
            if (side_ == Side::left) {
                if (g.rows() != b.rows()) throw ParameterError("proj_down: gradient rows do not match basis");
                return matmul_at_b(b, g);
            }
            if (g.cols() != b.rows()) throw ParameterError("proj_down: gradient cols do not match basis");
            return matmul(g, b);
        }
        case ProjectorKind::randk: {
            if (g.rows() != rows_ || g.cols() != cols_) throw ParameterError("proj_down: shape mismatch for RandK");
            auto idx = randk_indices();
            Matrix out(static_cast<long>(idx.size()), idx.empty() ? 0 : 1);
            for (std::size_t i = 0; i < idx.size(); ++i) out.at_flat(i) = g.at_flat(static_cast<std::size_t>(idx[i]));
            return out;
        }
        case ProjectorKind::columns: {
            if (g.rows() != rows_ || g.cols() != cols_) throw ParameterError("proj_down: shape mismatch for columns");
            Matrix out(rows_, static_cast<long>(indices_.size()));
            for (long i = 0; i < rows_; ++i)
                for (std::size_t j = 0; j < indices_.size(); ++j) out(i, static_cast<long>(j)) = g(i, indices_[j]);
            return out;
        }
        case ProjectorKind::blocks: {
            if (g.rows() != rows_ || g.cols() != cols_) throw ParameterError("proj_down: shape mismatch for block");
            return active_ ? g : Matrix();
        }
    }
    return {};
}

Matrix Projector::up(const Matrix& low) const {
    switch (kind_) {
        case ProjectorKind::svd:
        case ProjectorKind::random_ortho: {
            const Matrix& b = basis().matrix();
            if (side_ == Side::left) {
                if (low.rows() != b.cols()) throw ParameterError("proj_up: input rows do not match basis rank");
                return matmul(b, low);
            }
            if (low.cols() != b.cols()) throw ParameterError("proj_up: input cols do not match basis rank");
            return matmul_a_bt(low, b);
        }
        case ProjectorKind::randk: {
            auto idx = randk_indices();
            if (low.size() != idx.size()) throw ParameterError("proj_up: input size does not match k");
            Matrix out(rows_, cols_);
            for (std::size_t i = 0; i < idx.size(); ++i) out.at_flat(static_cast<std::size_t>(idx[i])) = low.at_flat(i);
            return out;
        }
        case ProjectorKind::columns: {
            if (low.rows() != rows_ || low.cols() != static_cast<long>(indices_.size()))
                throw ParameterError("proj_up: shape mismatch for columns");
            Matrix out(rows_, cols_);
            for (long i = 0; i < rows_; ++i)
                for (std::size_t j = 0; j < indices_.size(); ++j) out(i, indices_[j]) = low(i, static_cast<long>(j));
            return out;
        }
        case ProjectorKind::blocks: {
            if (!active_) {
                if (!low.empty()) throw ParameterError("proj_up: inactive block expects empty input");
                return Matrix(rows_, cols_);
            }
            if (low.rows() != rows_ || low.cols() != cols_) throw ParameterError("proj_up: shape mismatch for block");
            return low;
        }
    }
    return {};
}

std::pair<long, long> Projector::projected_shape(long rows, long cols) const {
    switch (kind_) {
        case ProjectorKind::svd:
        case ProjectorKind::random_ortho:
            return side_ == Side::left ? std::pair(basis().rank(), cols) : std::pair(rows, basis().rank());
        case ProjectorKind::randk: return {k_, k_ == 0 ? 0 : 1};
        case ProjectorKind::columns: return {rows, static_cast<long>(indices_.size())};
        case ProjectorKind::blocks: return active_ ? std::pair(rows, cols) : std::pair(0L, 0L);
    }
    return {0, 0};
}

long Projector::stored_floats() const {
    if (kind_ == ProjectorKind::svd || kind_ == ProjectorKind::random_ortho)
        return basis().ambient_dim() * basis().rank();
    return 0;
}

bool Projector::is_empty() const {
    switch (kind_) {
        case ProjectorKind::svd:
        case ProjectorKind::random_ortho: return basis().rank() == 0;
        case ProjectorKind::randk: return k_ == 0;
        case ProjectorKind::columns: return indices_.empty();
        case ProjectorKind::blocks: return !active_;
    }
    return true;
}

Projector build_projector(ProjectorKind kind, const Matrix& grad, double rho, std::uint64_t seed, long epoch) {
    if (rho < 0.0 || rho > 1.0) throw ParameterError("build_projector: rho must be in [0,1]");
    require_finite(grad, "build_projector");
    const long rows = grad.rows();
    const long cols = grad.cols();
    // Basis on the longer side keeps the moment buffers on the shorter one.
    const Projector::Side side = rows > cols ? Projector::Side::left : Projector::Side::right;
    const long short_dim = std::min(rows, cols);

    switch (kind) {
        case ProjectorKind::svd: {
            long r = round_half_even(rho * static_cast<double>(short_dim));
            if (r == 0) {
                OrthoBasis empty(Matrix(side == Projector::Side::left ? rows : cols, 0));
                return Projector::svd_low_rank(std::move(empty), side, epoch);
            }
            SvdTruncation svd = truncated_svd(grad, r);
            return Projector::svd_low_rank(side == Projector::Side::left ? std::move(svd.u) : std::move(svd.v), side,
                                           epoch);
        }
        case ProjectorKind::random_ortho: {
            long r = round_half_even(rho * static_cast<double>(short_dim));
            long dim = side == Projector::Side::left ? rows : cols;
            if (r == 0) return Projector::random_ortho(OrthoBasis(Matrix(dim, 0)), side, epoch);
            return Projector::random_ortho(random_semi_orthogonal(mix_seed(seed, static_cast<std::uint64_t>(epoch)), dim, r),
                                           side, epoch);
        }
        case ProjectorKind::randk: {
            long k = round_half_even(rho * static_cast<double>(rows * cols));
            return Projector::randk(mix_seed(seed, static_cast<std::uint64_t>(epoch)), k, rows, cols, epoch);
        }
        case ProjectorKind::columns: {
            long c = round_half_even(rho * static_cast<double>(cols));
            Rng rng(mix_seed(seed, static_cast<std::uint64_t>(epoch)));
            return Projector::columns(rng.sample_without_replacement(cols, c), rows, cols, epoch);
        }
        case ProjectorKind::blocks:
            throw ParameterError("build_projector: block projectors are selected by the engine schedule");
    }
    throw ParameterError("build_projector: unknown kind");
}

SplitGradient split_gradient(const Projector& p, const Matrix& g) {
    SplitGradient out;
    out.full = p.down(g);
    out.free = g - p.up(out.full);
    return out;
}

bool same_selection(const Projector& a, const Projector& b) {
    if (a.kind() != b.kind()) return false;
    switch (a.kind()) {
        case ProjectorKind::svd:
        case ProjectorKind::random_ortho:
            return a.side() == b.side() && a.basis().matrix().same_shape(b.basis().matrix()) &&
                   a.basis().matrix().data() == b.basis().matrix().data();
        case ProjectorKind::randk: return a.randk_indices() == b.randk_indices();
        case ProjectorKind::columns: return a.column_indices() == b.column_indices();
        case ProjectorKind::blocks: return a.block_active() == b.block_active();
    }
    return false;
}

ScheduleStrategy schedule_strategy_from_string(const std::string& name) {
    if (name == "random") return ScheduleStrategy::random;
    if (name == "ascending") return ScheduleStrategy::ascending;
    if (name == "descending") return ScheduleStrategy::descending;
    throw ConfigError("unknown schedule strategy: " + name);
}

Schedule::Schedule(long update_gap, ScheduleStrategy strategy, std::uint64_t seed)
    : gap_(update_gap), strategy_(strategy), rng_(seed) {
    if (update_gap < 1) throw ParameterError("Schedule: update_gap must be >= 1");
}

std::vector<long> Schedule::advance(long step, long pool_size, long count, const std::vector<long>& prev) {
    if (step < 0) throw ParameterError("Schedule::advance: negative step");
    if (count > 0 && pool_size <= 0) throw ConfigError("Schedule::advance: empty pool with positive selection count");
    if (count > pool_size) count = pool_size;
    if (step % gap_ != 0) return prev;

    std::vector<long> next;
    next.reserve(static_cast<std::size_t>(count));
    switch (strategy_) {
        case ScheduleStrategy::random: next = rng_.sample_without_replacement(pool_size, count); break;
        case ScheduleStrategy::ascending:
            for (long i = 0; i < count; ++i) next.push_back((cursor_ + i) % pool_size);
            cursor_ = pool_size > 0 ? (cursor_ + count) % pool_size : 0;
            std::sort(next.begin(), next.end());
            break;
        case ScheduleStrategy::descending:
            for (long i = 0; i < count; ++i) {
                long id = (pool_size - 1 - ((cursor_ + i) % pool_size) + pool_size) % pool_size;
                next.push_back(id);
            }
            cursor_ = pool_size > 0 ? (cursor_ + count) % pool_size : 0;
            std::sort(next.begin(), next.end());
            break;
    }
    return next;
}

}  // namespace frugal
