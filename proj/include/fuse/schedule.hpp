#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fuse {

enum class ScheduleKind { linear, cosine };

ScheduleKind schedule_kind_from_string(const std::string& name);
std::string to_string(ScheduleKind kind);

// Variance schedule for the diffusion process. Holds beta_t for t in [1, T]
// and the cumulative product alpha_bar[t] = prod_{i<=t} (1 - beta_i), with
// alpha_bar[0] = 1 by convention. Immutable after construction.
class Schedule {
public:
    int T() const { return T_; }
    ScheduleKind kind() const { return kind_; }

    // alpha_bar[t] for t in [0, T]; strictly decreasing, in (0, 1].
    double alpha_bar_at(int t) const;

    // beta_t for t in [1, T].
    double beta_at(int t) const;

    const std::vector<double>& alpha_bar() const { return alpha_bar_; }

    // CSV with columns t, beta_t, alpha_bar_t (beta_0 written as 0).
    void dump_csv(std::ostream& out) const;
    void dump_csv(const std::filesystem::path& path) const;

private:
    friend Schedule make_schedule(ScheduleKind kind, int T);
    Schedule() = default;

    ScheduleKind kind_ = ScheduleKind::linear;
    int T_ = 0;
    std::vector<double> beta_;      // beta_[t-1] is beta_t
    std::vector<double> alpha_bar_; // size T+1
};

// linear: beta_t spaced evenly over [1e-4, 0.02] (the standard range for
// pixel-space models). cosine: alpha_bar_t = f(t/T)/f(0) with
// f(u) = cos^2((u + 0.008)/1.008 * pi/2), per-step ratio clamped into (0, 1)
// so alpha_bar stays strictly decreasing and positive.
Schedule make_schedule(ScheduleKind kind, int T);

} // namespace fuse
