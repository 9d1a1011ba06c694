#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gpcmom/errors.hpp"

namespace gpcmom {

using MultiIndex = std::vector<int>;

inline int multi_index_sum(const MultiIndex& idx) {
    return std::accumulate(idx.begin(), idx.end(), 0);
}

/// C(n, k) without overflow for the sizes the guards admit.
inline double binomial(long long n, long long k) {
    if (k < 0 || k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (long long i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

/// All multi-indices over n dimensions with total degree <= d, in graded
/// order: total degree ascending, lexicographic descending within a degree.
/// The zero index comes first; the linear-index bijection is this ordering.
struct GradedIndexSet {
    int dim = 0;
    int degree = 0;
    std::vector<MultiIndex> indices;

    int size() const { return static_cast<int>(indices.size()); }
};

namespace detail {

inline void emit_constant_sum_lexdesc(int slots, int total, MultiIndex& cur,
                                      std::vector<MultiIndex>& out, int pos) {
    if (pos == slots - 1) {
        cur[pos] = total;
        out.push_back(cur);
        return;
    }
    for (int v = total; v >= 0; --v) {
        cur[pos] = v;
        emit_constant_sum_lexdesc(slots, total - v, cur, out, pos + 1);
    }
}

}  // namespace detail

inline GradedIndexSet graded_basis_indices(int n, int d, double size_guard = 1e8) {
    if (n < 1) throw std::invalid_argument("dimension must be >= 1");
    if (d < 0) throw std::invalid_argument("degree must be >= 0");
    const double p = binomial(n + d, d);
    if (p > size_guard) throw CapacityError("graded index set would exceed the size guard");

    GradedIndexSet set;
    set.dim = n;
    set.degree = d;
    set.indices.reserve(static_cast<std::size_t>(p));
    MultiIndex cur(n, 0);
    for (int total = 0; total <= d; ++total)
        detail::emit_constant_sum_lexdesc(n, total, cur, set.indices, 0);
    return set;
}

/// Streaming enumeration of all multi-indices with |i| = m over p slots.
/// Two moves on the item stack: "push" shifts one item from the last slot to
/// its left neighbor; when the last slot is empty, the trailing nonempty slot
/// is "forked" - one item moves left, the rest drop back to the last slot.
/// Starts with all m items in the last slot; O(p) memory.
class ConstantSumIterator {
public:
    ConstantSumIterator(int m, int p) : m_(m), p_(p), state_(p, 0) {
        if (m < 0 || p < 1) throw std::invalid_argument("need m >= 0 and p >= 1");
        state_[p - 1] = m;
    }

    int total() const { return m_; }
    int slots() const { return p_; }

    /// Number of indices the full stream emits: C(m+p-1, m).
    double count() const { return binomial(m_ + p_ - 1, m_); }

    std::optional<MultiIndex> next() {
        if (done_) return std::nullopt;
        if (!started_) {
            started_ = true;
            return state_;
        }
        if (!advance()) {
            done_ = true;
            return std::nullopt;
        }
        return state_;
    }

    /// Advance in place; returns false on exhaustion. `next()` copies the
    /// state; bulk consumers can use this with `current()` instead.
    bool advance() {
        if (p_ == 1 || m_ == 0) return false;
        if (state_[p_ - 1] > 0) {
            // push
            state_[p_ - 1] -= 1;
            state_[p_ - 2] += 1;
            return true;
        }
        // fork the trailing nonempty slot
        int t = p_ - 2;
        while (t >= 0 && state_[t] == 0) --t;
        if (t <= 0) return false;  // all items in the first slot: exhausted
        state_[t - 1] += 1;
        state_[p_ - 1] = state_[t] - 1;
        state_[t] = 0;
        return true;
    }

    const MultiIndex& current() const { return state_; }

private:
    int m_;
    int p_;
    MultiIndex state_;
    bool started_ = false;
    bool done_ = false;
};

/// m! / (i_1! ... i_p!), exact. Requires |i| = m.
inline std::int64_t multinomial_coefficient(int m, const MultiIndex& idx) {
    if (multi_index_sum(idx) != m)
        throw std::invalid_argument("multinomial coefficient requires |i| = m");
    // build up factor by factor: prod over entries of C(running_total, entry)
    std::int64_t result = 1;
    int running = 0;
    for (int e : idx) {
        if (e < 0) throw std::invalid_argument("negative multi-index entry");
        for (int j = 1; j <= e; ++j) {
            ++running;
            result = result * running / j;  // exact: result*running divisible by j
        }
    }
    return result;
}

}  // namespace gpcmom
