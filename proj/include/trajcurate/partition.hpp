#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "trajcurate/errors.hpp"
#include "trajcurate/trajectory.hpp"

namespace trajcurate {

struct SplitPolicy {
    int l_min = 8;
    int l_max = 40;

    void check() const {
        if (l_min < 1) throw ConfigError("partition: l_min must be >= 1");
        if (l_max < l_min) throw ConfigError("partition: l_max must be >= l_min");
    }

    bool operator==(const SplitPolicy&) const = default;
};

/// A contiguous window of steps, 1-based inclusive bounds. `forced` marks
/// boundaries that came from the window cap or the terminal clamp rather
/// than a safe split point.
struct Batch {
    int k = 1; // 1-based batch index
    int start = 1;
    int end = 1;
    bool forced = false;

    int length() const { return end - start + 1; }

    bool operator==(const Batch&) const = default;
};

/// Safe-split predicate at 1-based position i: cutting after step i must
/// not sever an action from its pending observation. Safe when step i
/// closes a tool-observation run, when a fresh user instruction follows,
/// or at the trajectory end; unsafe anywhere else (notably on an
/// assistant step whose tool calls are still pending).
inline int safety(const Trajectory& t, int i) {
    const int n = t.length();
    if (i == n) return 1;
    const Step& s = t.at_pos(i);
    const Step& next = t.at_pos(i + 1);
    if (s.role == Role::Tool && next.role != Role::Tool) return 1;
    if (next.role == Role::User) return 1;
    return 0;
}

/// Partition positions 1..n by repeated boundary selection: the next
/// boundary is the nearest safe position at least l_min away, capped at
/// l_max; candidates past n clamp to n (the final batch may run short).
inline std::vector<Batch> partition_positions(int n, const std::function<bool(int)>& safe,
                                              const SplitPolicy& p) {
    p.check();
    std::vector<Batch> out;
    if (n < 1) return out;
    int prev = 0;
    int k = 1;
    while (prev < n) {
        const long long cap = static_cast<long long>(prev) + p.l_max;
        long long safe_min = std::numeric_limits<long long>::max();
        const long long first = static_cast<long long>(prev) + p.l_min;
        for (int t = first > n ? n + 1 : static_cast<int>(first); t <= n; ++t) {
            if (safe(t)) {
                safe_min = t;
                break;
            }
        }
        const long long raw = std::min(safe_min, cap);
        const int tk = static_cast<int>(std::min<long long>(raw, n));
        const bool forced = cap <= safe_min || raw > n;
        out.push_back({k, prev + 1, tk, forced});
        prev = tk;
        ++k;
    }
    return out;
}

inline std::vector<Batch> partition(const Trajectory& t, const SplitPolicy& p) {
    return partition_positions(t.length(), [&t](int i) { return safety(t, i) == 1; }, p);
}

} // namespace trajcurate
