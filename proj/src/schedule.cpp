#include "fuse/schedule.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "fuse/error.hpp"
#include "fuse/grid_io.hpp"

namespace fuse {

ScheduleKind schedule_kind_from_string(const std::string& name) {
    if (name == "linear") return ScheduleKind::linear;
    if (name == "cosine") return ScheduleKind::cosine;
    throw ParameterError("unknown schedule kind '" + name +
                         "' (expected 'linear' or 'cosine')");
}

std::string to_string(ScheduleKind kind) {
    return kind == ScheduleKind::linear ? "linear" : "cosine";
}

double Schedule::alpha_bar_at(int t) const {
    if (t < 0 || t > T_) {
        throw ParameterError("timestep " + std::to_string(t) +
                             " outside schedule range [0, " +
                             std::to_string(T_) + "]");
    }
    return alpha_bar_[static_cast<size_t>(t)];
}

double Schedule::beta_at(int t) const {
    if (t < 1 || t > T_) {
        throw ParameterError("timestep " + std::to_string(t) +
                             " outside beta range [1, " + std::to_string(T_) +
                             "]");
    }
    return beta_[static_cast<size_t>(t - 1)];
}

void Schedule::dump_csv(std::ostream& out) const {
    out << "t,beta_t,alpha_bar_t\n";
    out << "0,0,1\n";
    for (int t = 1; t <= T_; ++t) {
        out << t << ',' << format_double(beta_[static_cast<size_t>(t - 1)])
            << ',' << format_double(alpha_bar_[static_cast<size_t>(t)])
            << '\n';
    }
}

void Schedule::dump_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw LoadError("cannot open " + path.string() + " for writing");
    dump_csv(out);
}

namespace {

std::vector<double> linear_betas(int T) {
    constexpr double beta_lo = 1e-4;
    constexpr double beta_hi = 0.02;
    std::vector<double> beta(static_cast<size_t>(T));
    if (T == 1) {
        beta[0] = beta_lo;
        return beta;
    }
    for (int t = 1; t <= T; ++t) {
        const double frac = static_cast<double>(t - 1) / (T - 1);
        beta[static_cast<size_t>(t - 1)] = beta_lo + frac * (beta_hi - beta_lo);
    }
    return beta;
}

std::vector<double> cosine_betas(int T) {
    constexpr double pi = 3.14159265358979323846;
    auto f = [&](double u) {
        const double c = std::cos((u + 0.008) / 1.008 * pi / 2.0);
        return c * c;
    };
    const double f0 = f(0.0);
    std::vector<double> beta(static_cast<size_t>(T));
    double prev = 1.0;
    for (int t = 1; t <= T; ++t) {
        const double a = f(static_cast<double>(t) / T) / f0;
        double ratio = a / prev;
        // Clamp the per-step survival ratio into (0, 1): near t = T the raw
        // cosine curve can hit 0 or produce ratios that round to 1.
        if (ratio > 1.0 - 1e-8) ratio = 1.0 - 1e-8;
        if (ratio < 1e-3) ratio = 1e-3;
        beta[static_cast<size_t>(t - 1)] = 1.0 - ratio;
        prev *= ratio;
    }
    return beta;
}

} // namespace

Schedule make_schedule(ScheduleKind kind, int T) {
    if (T < 1) {
        throw ParameterError("schedule length T must be >= 1, got " +
                             std::to_string(T));
    }
    Schedule s;
    s.kind_ = kind;
    s.T_ = T;
    s.beta_ =
        kind == ScheduleKind::linear ? linear_betas(T) : cosine_betas(T);
    s.alpha_bar_.resize(static_cast<size_t>(T) + 1);
    s.alpha_bar_[0] = 1.0;
    for (int t = 1; t <= T; ++t) {
        s.alpha_bar_[static_cast<size_t>(t)] =
            s.alpha_bar_[static_cast<size_t>(t - 1)] *
            (1.0 - s.beta_[static_cast<size_t>(t - 1)]);
    }
    for (int t = 1; t <= T; ++t) {
        const double a = s.alpha_bar_[static_cast<size_t>(t)];
        if (!(a > 0.0 && a < s.alpha_bar_[static_cast<size_t>(t - 1)])) {
            throw ParameterError("schedule " + to_string(kind) + " T=" +
                                 std::to_string(T) +
                                 " violated monotone decrease at t=" +
                                 std::to_string(t));
        }
    }
    return s;
}

} // namespace fuse
