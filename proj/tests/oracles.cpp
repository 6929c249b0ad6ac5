#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fuse::oracle {

Grid ref_cfg(const Grid& eps_cond, const Grid& eps_uncond, double s) {
    Grid out(eps_cond.shape());
    for (int i = 0; i < out.size(); ++i) {
        const long double c = eps_cond[i];
        const long double u = eps_uncond[i];
        out[i] = static_cast<double>(u + static_cast<long double>(s) * (c - u));
    }
    return out;
}

namespace {

int clampi(int i, int n) { return std::min(std::max(i, 0), n - 1); }

SalienceMap ref_blur(const SalienceMap& m, int radius, double sigma) {
    const int w = 2 * radius + 1;
    std::vector<long double> weights(static_cast<size_t>(w) * w);
    long double wsum = 0.0L;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const long double v = expl(-(dx * dx + dy * dy) /
                                       (2.0L * static_cast<long double>(sigma) *
                                        static_cast<long double>(sigma)));
            weights[static_cast<size_t>((dy + radius) * w + (dx + radius))] = v;
            wsum += v;
        }
    }
    SalienceMap out(m.height(), m.width());
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            long double acc = 0.0L;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int yy = clampi(y + dy, m.height());
                    const int xx = clampi(x + dx, m.width());
                    acc += weights[static_cast<size_t>((dy + radius) * w +
                                                       (dx + radius))] /
                           wsum * m.at(yy, xx);
                }
            }
            out.at(y, x) = static_cast<double>(acc);
        }
    }
    return out;
}

} // namespace

SalienceMap ref_salience(const Grid& eps_cond, const Grid& eps_uncond,
                         const SalienceParams& p) {
    SalienceMap map(eps_cond.height(), eps_cond.width());
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            long double mean = 0.0L;
            long double peak = 0.0L;
            for (int c = 0; c < eps_cond.channels(); ++c) {
                const long double d =
                    fabsl(static_cast<long double>(eps_cond.at(c, y, x)) -
                          static_cast<long double>(eps_uncond.at(c, y, x)));
                mean += d;
                peak = std::max(peak, d);
            }
            map.at(y, x) = static_cast<double>(
                p.channel_agg == ChannelAgg::mean ? mean / eps_cond.channels()
                                                  : peak);
        }
    }
    if (p.blur_enabled) {
        map = ref_blur(map, p.kernel.radius, p.kernel.sigma);
    }
    return map;
}

SalienceMap ref_softmax(const SalienceMap& m, double k) {
    std::vector<long double> e(static_cast<size_t>(m.size()));
    long double z = 0.0L;
    for (int i = 0; i < m.size(); ++i) {
        e[static_cast<size_t>(i)] =
            expl(static_cast<long double>(k) * static_cast<long double>(m[i]));
        z += e[static_cast<size_t>(i)];
    }
    SalienceMap out(m.height(), m.width());
    for (int i = 0; i < m.size(); ++i) {
        out[i] = static_cast<double>(e[static_cast<size_t>(i)] / z);
    }
    return out;
}

BlendMask ref_argmax(const SalienceMap& a, const SalienceMap& b) {
    BlendMask mask(a.height(), a.width());
    for (int i = 0; i < a.size(); ++i) mask[i] = a[i] >= b[i] ? 1 : 0;
    return mask;
}

Grid ref_select(const Grid& a, const Grid& b, const BlendMask& mask) {
    Grid out(a.shape());
    for (int c = 0; c < a.channels(); ++c) {
        for (int y = 0; y < a.height(); ++y) {
            for (int x = 0; x < a.width(); ++x) {
                out.at(c, y, x) = mask.at(y, x) ? a.at(c, y, x) : b.at(c, y, x);
            }
        }
    }
    return out;
}

Grid ref_weighted(const Grid& a, const Grid& b, double w) {
    Grid out(a.shape());
    for (int i = 0; i < out.size(); ++i) {
        out[i] = static_cast<double>(static_cast<long double>(w) * a[i] +
                                     (1.0L - static_cast<long double>(w)) * b[i]);
    }
    return out;
}

Grid ref_ddim(const Grid& x_t, const Grid& eps, double ab_t, double ab_prev) {
    const long double sab_t = sqrtl(static_cast<long double>(ab_t));
    const long double sab_prev = sqrtl(static_cast<long double>(ab_prev));
    const long double s1m_t = sqrtl(1.0L - static_cast<long double>(ab_t));
    const long double s1m_prev = sqrtl(1.0L - static_cast<long double>(ab_prev));
    Grid out(x_t.shape());
    for (int i = 0; i < out.size(); ++i) {
        const long double x0 =
            (static_cast<long double>(x_t[i]) - s1m_t * eps[i]) / sab_t;
        out[i] = static_cast<double>(sab_prev * x0 + s1m_prev * eps[i]);
    }
    return out;
}

Grid ref_snb_step(const Grid& x_t, int t, const NoisePredictor& model_g,
                  const NoisePredictor& model_e, const FusionConfig& fc,
                  const Schedule& sched) {
    const Condition null = Condition::null();
    const Grid eps_g = model_g.predict(x_t, t, fc.c_g);
    const Grid eps_g_null = model_g.predict(x_t, t, null);
    const Grid eps_e = model_e.predict(x_t, t, fc.c_e);
    const Grid eps_e_null = model_e.predict(x_t, t, null);

    const SalienceMap lam_g =
        ref_softmax(ref_salience(eps_g, eps_g_null, fc.salience), fc.k_g);
    const SalienceMap lam_e =
        ref_softmax(ref_salience(eps_e, eps_e_null, fc.salience), fc.k_e);
    const BlendMask mask = ref_argmax(lam_g, lam_e);

    const Grid eps = ref_select(ref_cfg(eps_g, eps_g_null, fc.s_g),
                                ref_cfg(eps_e, eps_e_null, fc.s_e), mask);
    return ref_ddim(x_t, eps, sched.alpha_bar_at(t), sched.alpha_bar_at(t - 1));
}

double quad_posterior_eps(double mu, double sigma, double alpha_bar,
                          double x_t) {
    const long double ab = alpha_bar;
    const long double sab = sqrtl(ab);
    const long double s1m = sqrtl(1.0L - ab);
    const long double sg = sigma;

    // The posterior over x0 is concentrated between the prior mean and the
    // rescaled observation, with spread no wider than either component.
    const long double x_scaled = static_cast<long double>(x_t) / sab;
    const long double like_sd = s1m / sab;
    const long double spread = std::min(sg, like_sd);
    const long double lo = std::min(static_cast<long double>(mu), x_scaled) -
                           12.0L * spread;
    const long double hi = std::max(static_cast<long double>(mu), x_scaled) +
                           12.0L * spread;

    const int n = 100000;
    const long double step = (hi - lo) / n;
    auto log_w = [&](long double v) {
        const long double dp = (v - mu) / sg;
        const long double dl = (static_cast<long double>(x_t) - sab * v) / s1m;
        return -0.5L * dp * dp - 0.5L * dl * dl;
    };
    long double peak = -1e30L;
    for (int i = 0; i <= n; ++i) {
        peak = std::max(peak, log_w(lo + i * step));
    }
    long double zsum = 0.0L, xsum = 0.0L;
    for (int i = 0; i <= n; ++i) {
        const long double v = lo + i * step;
        long double w = expl(log_w(v) - peak);
        if (i == 0 || i == n) w *= 0.5L;
        zsum += w;
        xsum += w * v;
    }
    const long double post_mean = xsum / zsum;
    return static_cast<double>((static_cast<long double>(x_t) -
                                sab * post_mean) / s1m);
}

std::vector<long double> linear_alpha_bar_ld(int T) {
    if (T < 1) throw std::invalid_argument("T must be >= 1");
    const long double lo = 1e-4L, hi = 0.02L;
    std::vector<long double> ab(static_cast<size_t>(T) + 1, 1.0L);
    for (int t = 1; t <= T; ++t) {
        const long double beta =
            T == 1 ? lo : lo + (hi - lo) * (t - 1) / (T - 1);
        ab[static_cast<size_t>(t)] = ab[static_cast<size_t>(t) - 1] * (1.0L - beta);
    }
    return ab;
}

double max_abs_diff(const Grid& a, const Grid& b) {
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

double max_abs_diff(const SalienceMap& a, const SalienceMap& b) {
    double m = 0.0;
    for (int i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

} // namespace fuse::oracle
