#pragma once

/**
 * @file grid.hpp
 * @brief Uniform time grids and the node-indexed sequences that live on them.
 *
 * A Grid partitions [a, b] into N equal subintervals with nodes
 *     t_k = a + k (b - a) / N,   k = 0..N.
 *
 * Three sequence types share one storage layout (flat, row-major, one
 * d-dimensional entry per node index):
 *   - Trajectory       indices 0..N        (a discrete curve Q)
 *   - ShiftedSequence  indices 0..N-1 (+)  or 1..N (-)
 *   - ResidualField    any contiguous index range chosen by its producer
 *
 * Every entry access is range checked against the declared index set.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <ios>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fracvi {

using Vec = std::vector<double>;
using ConstVec = std::span<const double>;

/// Raised for every violated precondition on user-supplied data.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Orientation of a one-sided discrete operator.
enum class Side { plus, minus };

constexpr int sign(Side s) noexcept { return s == Side::plus ? 1 : -1; }
constexpr Side opposite(Side s) noexcept { return s == Side::plus ? Side::minus : Side::plus; }
inline const char* to_string(Side s) noexcept { return s == Side::plus ? "+" : "-"; }

inline Side parse_side(const std::string& text) {
    if (text == "+" || text == "plus") return Side::plus;
    if (text == "-" || text == "minus") return Side::minus;
    throw DomainError("side must be '+' or '-', got '" + text + "'");
}

/// Closed range of node indices [first, last].
struct IndexRange {
    int first = 0;
    int last = -1;

    constexpr int size() const noexcept { return last >= first ? last - first + 1 : 0; }
    constexpr bool empty() const noexcept { return size() == 0; }
    constexpr bool contains(int k) const noexcept { return k >= first && k <= last; }

    friend constexpr bool operator==(const IndexRange&, const IndexRange&) = default;
};

constexpr IndexRange intersect(IndexRange x, IndexRange y) noexcept {
    return {std::max(x.first, y.first), std::min(x.last, y.last)};
}

class Grid {
public:
    Grid(double a, double b, int intervals) : a_(a), b_(b), n_(intervals) {
        if (!(std::isfinite(a) && std::isfinite(b)) || !(b > a))
            throw DomainError("grid requires finite a < b");
        if (intervals < 2)
            throw DomainError("grid requires at least 2 subintervals");
        h_ = (b - a) / intervals;
    }

    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }
    int intervals() const noexcept { return n_; }
    double step() const noexcept { return h_; }

    // a + k*h rather than running sums; the last node is pinned to b.
    double node(int k) const {
        if (k < 0 || k > n_) throw std::out_of_range("grid node index out of range");
        if (k == n_) return b_;
        return a_ + k * h_;
    }

    std::vector<double> nodes() const {
        std::vector<double> t(static_cast<std::size_t>(n_) + 1);
        for (int k = 0; k <= n_; ++k) t[static_cast<std::size_t>(k)] = node(k);
        return t;
    }

    friend bool operator==(const Grid& x, const Grid& y) noexcept {
        return x.a_ == y.a_ && x.b_ == y.b_ && x.n_ == y.n_;
    }

private:
    double a_;
    double b_;
    int n_;
    double h_;
};

inline Grid make_grid(double a, double b, int intervals) { return Grid(a, b, intervals); }

/// Index set I_sigma: 0..N-1 for plus, 1..N for minus.
inline IndexRange side_range(const Grid& g, Side s) noexcept {
    return s == Side::plus ? IndexRange{0, g.intervals() - 1} : IndexRange{1, g.intervals()};
}

inline IndexRange full_range(const Grid& g) noexcept { return {0, g.intervals()}; }

namespace detail {

// Shared storage for the three sequence types.
class NodeField {
public:
    const Grid& grid() const noexcept { return grid_; }
    int dim() const noexcept { return dim_; }
    IndexRange range() const noexcept { return range_; }
    int first() const noexcept { return range_.first; }
    int last() const noexcept { return range_.last; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(range_.size()); }

    /// Entry at global node index k; throws std::out_of_range outside the declared range.
    ConstVec operator[](int k) const {
        check(k);
        return {values_.data() + offset(k), static_cast<std::size_t>(dim_)};
    }
    ConstVec at(int k) const { return (*this)[k]; }

    double operator()(int k, int component) const {
        check(k);
        if (component < 0 || component >= dim_) throw std::out_of_range("component out of range");
        return values_[offset(k) + static_cast<std::size_t>(component)];
    }

    /// Flat row-major storage, entry for index first() at position 0.
    std::span<const double> flat() const noexcept { return values_; }

protected:
    NodeField(Grid grid, int dim, IndexRange range, Vec values)
        : grid_(std::move(grid)), dim_(dim), range_(range), values_(std::move(values)) {
        if (dim < 1) throw DomainError("dimension must be positive");
        if (range.empty()) throw DomainError("empty index range");
        if (values_.size() != size() * static_cast<std::size_t>(dim))
            throw DomainError("value count does not match index range and dimension");
    }

private:
    void check(int k) const {
        if (!range_.contains(k))
            throw std::out_of_range("index " + std::to_string(k) + " outside [" +
                                    std::to_string(range_.first) + ", " +
                                    std::to_string(range_.last) + "]");
    }
    std::size_t offset(int k) const noexcept {
        return static_cast<std::size_t>(k - range_.first) * static_cast<std::size_t>(dim_);
    }

    Grid grid_;
    int dim_;
    IndexRange range_;
    Vec values_;
};

}  // namespace detail

/// Discrete curve Q_0..Q_N in (R^d)^(N+1).
class Trajectory : public detail::NodeField {
public:
    Trajectory(Grid grid, int dim, Vec values)
        : NodeField(grid, dim, full_range(grid), std::move(values)) {}

    static Trajectory from_points(const Grid& grid, const std::vector<Vec>& points) {
        if (points.empty()) throw DomainError("no points");
        const auto d = points.front().size();
        Vec flat;
        flat.reserve(points.size() * d);
        for (const auto& p : points) {
            if (p.size() != d) throw DomainError("inconsistent point dimension");
            flat.insert(flat.end(), p.begin(), p.end());
        }
        return Trajectory(grid, static_cast<int>(d), std::move(flat));
    }

    /// Scalar trajectory (d = 1).
    static Trajectory scalar(const Grid& grid, Vec values) { return Trajectory(grid, 1, std::move(values)); }

    Trajectory reversed() const {
        const int n = grid().intervals();
        Vec out;
        out.reserve(flat().size());
        for (int k = n; k >= 0; --k) {
            auto q = (*this)[k];
            out.insert(out.end(), q.begin(), q.end());
        }
        return Trajectory(grid(), dim(), std::move(out));
    }
};

/// Sequence indexed over I_sigma (N entries).
class ShiftedSequence : public detail::NodeField {
public:
    ShiftedSequence(Grid grid, int dim, Side side, Vec values)
        : NodeField(grid, dim, side_range(grid, side), std::move(values)), side_(side) {}

    Side side() const noexcept { return side_; }

private:
    Side side_;
};

/// Per-node residual of a discrete Euler-Lagrange scheme over a producer-chosen range.
class ResidualField : public detail::NodeField {
public:
    ResidualField(Grid grid, int dim, IndexRange range, Vec values)
        : NodeField(grid, dim, range, std::move(values)) {}
};

/// Q_k = f(t_k).
inline Trajectory sample(const std::function<Vec(double)>& f, const Grid& grid) {
    Vec flat;
    int dim = -1;
    for (int k = 0; k <= grid.intervals(); ++k) {
        Vec q = f(grid.node(k));
        if (dim < 0) dim = static_cast<int>(q.size());
        if (static_cast<int>(q.size()) != dim) throw DomainError("sampled curve changed dimension");
        flat.insert(flat.end(), q.begin(), q.end());
    }
    return Trajectory(grid, dim, std::move(flat));
}

inline Trajectory sample_scalar(const std::function<double(double)>& f, const Grid& grid) {
    return sample([&](double t) { return Vec{f(t)}; }, grid);
}

inline double inf_norm(std::span<const double> values) {
    if (values.empty()) throw DomainError("inf_norm of empty input");
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

inline double inf_norm(const detail::NodeField& x) { return inf_norm(x.flat()); }

inline void require_same_shape(const detail::NodeField& x, const detail::NodeField& y) {
    if (!(x.grid() == y.grid())) throw DomainError("grid mismatch");
    if (x.dim() != y.dim()) throw DomainError("dimension mismatch");
}

/// Writes `k,t,q0[,q1,...]` rows with 17 significant digits and LF endings.
inline void write_csv(std::ostream& os, const Trajectory& q) {
    std::ostringstream buf;
    buf << std::setprecision(17);
    buf << "k,t";
    for (int c = 0; c < q.dim(); ++c) buf << ",q" << c;
    buf << '\n';
    for (int k = 0; k <= q.grid().intervals(); ++k) {
        buf << k << ',' << q.grid().node(k);
        for (double v : q[k]) buf << ',' << v;
        buf << '\n';
    }
    os << buf.str();
}

}  // namespace fracvi
