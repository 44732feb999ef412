#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/linalg.hpp"
#include "core/matrix.hpp"
#include "core/rng.hpp"

namespace frugal {

enum class ProjectorKind { svd, random_ortho, randk, columns, blocks };

ProjectorKind projector_kind_from_string(const std::string& name);
std::string projector_kind_to_string(ProjectorKind kind);

// round-half-to-even, used for every rho -> rank/count conversion.
long round_half_even(double x);

// Subspace selector with a down map (ambient -> projected coordinates) and
// its adjoint up map. Orthonormal kinds multiply by a basis; coordinate
// kinds gather/scatter. The basis sits on the longer matrix side so moment
// buffers live on the shorter one.
class Projector {
public:
    // side: left => down(G) = B^T G (basis rows x r); right => down(G) = G B
    // (basis cols x r).
    enum class Side { left, right };

    static Projector svd_low_rank(OrthoBasis basis, Side side, long epoch);
    static Projector random_ortho(OrthoBasis basis, Side side, long epoch);
    static Projector randk(std::uint64_t seed, long k, long rows, long cols, long epoch);
    static Projector columns(std::vector<long> indices, long rows, long cols, long epoch);
    static Projector block(bool active, long rows, long cols, long epoch);

    ProjectorKind kind() const { return kind_; }
    long epoch() const { return epoch_; }
    Side side() const { return side_; }
    const OrthoBasis& basis() const;
    bool block_active() const { return active_; }
    // RandK flat indices, recomputed from the stored seed.
    std::vector<long> randk_indices() const;
    const std::vector<long>& column_indices() const { return indices_; }

    Matrix down(const Matrix& g) const;
    Matrix up(const Matrix& low) const;

    // Shape of down(g) for an ambient rows x cols gradient.
    std::pair<long, long> projected_shape(long rows, long cols) const;
    // Floats the projector itself keeps alive (orthonormal bases only;
    // RandK recomputes indices from its seed).
    long stored_floats() const;
    // Selects nothing: every coordinate is state-free.
    bool is_empty() const;

private:
    Projector() = default;

    ProjectorKind kind_ = ProjectorKind::blocks;
    long epoch_ = 0;
    Side side_ = Side::left;
    std::optional<OrthoBasis> basis_;
    std::uint64_t seed_ = 0;
    long k_ = 0;
    long rows_ = 0;
    long cols_ = 0;
    std::vector<long> indices_;
    bool active_ = false;
};

struct SplitGradient {
    Matrix full;  // projected coordinates
    Matrix free;  // ambient coordinates, the residual
};

// Builds a projector of the given kind from the current gradient.
// rank/count = round_half_even(rho * dimension); rho values mapping to zero
// selected coordinates give the empty projector. Block projectors are
// driven by the engine's schedule, not built here.
Projector build_projector(ProjectorKind kind, const Matrix& grad, double rho, std::uint64_t seed, long epoch);

// full = down(g); free = g - up(full).
SplitGradient split_gradient(const Projector& p, const Matrix& g);

// True when both projectors select the same subspace map (same kind and
// identical basis / indices / block activity), ignoring the epoch tag.
bool same_selection(const Projector& a, const Projector& b);

enum class ScheduleStrategy { random, ascending, descending };

ScheduleStrategy schedule_strategy_from_string(const std::string& name);

// Round-robin or random selection of `count` ids out of [0, pool_size),
// re-drawn every `update_gap` steps. Owns a private RNG.
class Schedule {
public:
    Schedule(long update_gap, ScheduleStrategy strategy, std::uint64_t seed);

    long update_gap() const { return gap_; }

    // Returns the previous selection unless step % update_gap == 0, in which
    // case a fresh selection is drawn (sorted ascending ids).
    std::vector<long> advance(long step, long pool_size, long count, const std::vector<long>& prev);

private:
    long gap_;
    ScheduleStrategy strategy_;
    Rng rng_;
    long cursor_ = 0;
};

}  // namespace frugal
