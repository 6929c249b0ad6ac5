#include <doctest.h>

#include <cmath>
#include <vector>

#include "fuse/grid.hpp"
#include "fuse/rng.hpp"

using namespace fuse;

namespace {

Grid random_grid(GridShape shape, uint64_t seed, double lo = -2.0,
                 double hi = 2.0) {
    CounterRng rng(seed, 11);
    Grid g(shape);
    for (int i = 0; i < g.size(); ++i) g[i] = lo + (hi - lo) * rng.uniform();
    return g;
}

SalienceMap random_map(int h, int w, uint64_t seed, double lo = 0.0,
                       double hi = 1.0) {
    CounterRng rng(seed, 12);
    SalienceMap m(h, w);
    for (int i = 0; i < m.size(); ++i) m[i] = lo + (hi - lo) * rng.uniform();
    return m;
}

} // namespace

TEST_CASE("grid shape and indexing") {
    GridShape s{3, 4, 5};
    CHECK(s.volume() == 60);
    CHECK(s.str() == "3x4x5");
    CHECK(s == GridShape{3, 4, 5});
    CHECK_FALSE(s == GridShape{3, 5, 4});

    Grid g(s, 0.0);
    CHECK(g.size() == 60);
    g.at(2, 3, 4) = 7.5;
    // Row-major c, y, x layout.
    CHECK(g[(2 * 4 + 3) * 5 + 4] == 7.5);
    g.at(0, 0, 1) = -1.0;
    CHECK(g[1] == -1.0);
}

TEST_CASE("grid constructors validate dimensions") {
    CHECK_THROWS_AS(Grid(GridShape{0, 2, 2}), DimensionError);
    CHECK_THROWS_AS(Grid(GridShape{1, -1, 2}), DimensionError);
    CHECK_THROWS_AS(Grid(GridShape{1, 2, 2}, std::vector<double>(3)),
                    DimensionError);
    CHECK_NOTHROW(Grid(GridShape{1, 2, 2}, std::vector<double>(4)));
    CHECK_THROWS_AS(SalienceMap(0, 3), DimensionError);
    CHECK_THROWS_AS(SalienceMap(2, 2, std::vector<double>(5)), DimensionError);
    CHECK_THROWS_AS(BlendMask(2, 0), DimensionError);
}

TEST_CASE("grid all_finite") {
    Grid g(GridShape{1, 2, 2}, 1.0);
    CHECK(g.all_finite());
    g[3] = std::nan("");
    CHECK_FALSE(g.all_finite());
    g[3] = std::numeric_limits<double>::infinity();
    CHECK_FALSE(g.all_finite());
}

TEST_CASE("elementwise ops match scalar loops") {
    const GridShape s{2, 3, 3};
    const Grid a = random_grid(s, 1);
    const Grid b = random_grid(s, 2);

    const Grid sum = add(a, b);
    const Grid diff = sub(a, b);
    const Grid prod = mul(a, b);
    const Grid scaled = scale(a, -1.5);
    const Grid mag = abs(a);
    for (int i = 0; i < s.volume(); ++i) {
        CHECK(sum[i] == a[i] + b[i]);
        CHECK(diff[i] == a[i] - b[i]);
        CHECK(prod[i] == a[i] * b[i]);
        CHECK(scaled[i] == a[i] * -1.5);
        CHECK(mag[i] == std::fabs(a[i]));
    }

    const Grid c = random_grid(GridShape{2, 3, 4}, 3);
    CHECK_THROWS_AS(add(a, c), DimensionError);
    CHECK_THROWS_AS(sub(a, c), DimensionError);
    CHECK_THROWS_AS(mul(a, c), DimensionError);
}

TEST_CASE("blend mask coverage") {
    BlendMask m(2, 4, 0);
    CHECK(m.coverage() == 0.0);
    m.at(0, 0) = 1;
    m.at(1, 3) = 1;
    CHECK(m.coverage() == doctest::Approx(0.25));
    BlendMask all(3, 3, 1);
    CHECK(all.coverage() == 1.0);
}

TEST_CASE("gaussian kernel is normalized and symmetric") {
    const BlurKernel k = BlurKernel::gaussian(2, 1.0);
    CHECK(k.width() == 5);
    double sum = 0.0;
    for (double w : k.weights) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
            CHECK(k.weight(dy, dx) == k.weight(-dy, -dx));
            CHECK(k.weight(dy, dx) == k.weight(dx, dy));
        }
    }
    // Center weight dominates.
    CHECK(k.weight(0, 0) > k.weight(0, 1));
    CHECK(k.weight(0, 1) > k.weight(2, 2));

    const BlurKernel point = BlurKernel::gaussian(0, 1.0);
    CHECK(point.weights.size() == 1);
    CHECK(point.weights[0] == 1.0);

    CHECK_THROWS_AS(BlurKernel::gaussian(-1, 1.0), ParameterError);
    CHECK_THROWS_AS(BlurKernel::gaussian(2, 0.0), ParameterError);
    CHECK_THROWS_AS(BlurKernel::gaussian(2, -1.0), ParameterError);
}

TEST_CASE("blur preserves constants and is linear") {
    const BlurKernel k = BlurKernel::gaussian(2, 1.0);

    SalienceMap flat(6, 7, 3.25);
    const SalienceMap blurred = gaussian_blur(flat, k);
    for (int i = 0; i < blurred.size(); ++i) {
        CHECK(blurred[i] == doctest::Approx(3.25).epsilon(1e-14));
    }

    // Radius-zero kernel is the identity.
    const SalienceMap m = random_map(5, 5, 4);
    const SalienceMap same = gaussian_blur(m, BlurKernel::gaussian(0, 1.0));
    for (int i = 0; i < m.size(); ++i) CHECK(same[i] == m[i]);

    // Linearity: blur(a + b) == blur(a) + blur(b).
    const GridShape s{2, 6, 6};
    const Grid a = random_grid(s, 5);
    const Grid b = random_grid(s, 6);
    const Grid lhs = gaussian_blur(add(a, b), k);
    const Grid rhs = add(gaussian_blur(a, k), gaussian_blur(b, k));
    for (int i = 0; i < lhs.size(); ++i) {
        CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-13));
    }
}

TEST_CASE("blur impulse response reproduces the kernel footprint") {
    const BlurKernel k = BlurKernel::gaussian(2, 1.0);
    SalienceMap m(9, 9, 0.0);
    m.at(4, 4) = 1.0; // far from every edge
    const SalienceMap out = gaussian_blur(m, k);
    for (int y = 0; y < 9; ++y) {
        for (int x = 0; x < 9; ++x) {
            const int dy = y - 4, dx = x - 4;
            if (std::abs(dy) <= 2 && std::abs(dx) <= 2) {
                CHECK(out.at(y, x) == k.weight(dy, dx));
            } else {
                CHECK(out.at(y, x) == 0.0);
            }
        }
    }
}

TEST_CASE("blur replicates edges") {
    // Columns [1,0,0] repeated down all rows: constant in y, so the stencil
    // collapses to its column sums and the left edge draws its out-of-range
    // taps from column 0.
    const BlurKernel k = BlurKernel::gaussian(1, 1.0);
    Grid g(GridShape{1, 3, 3});
    for (int y = 0; y < 3; ++y) g.at(0, y, 0) = 1.0;
    const Grid out = gaussian_blur(g, k);
    double wl = 0.0, wc = 0.0;
    for (int dy = -1; dy <= 1; ++dy) {
        wl += k.weight(dy, -1);
        wc += k.weight(dy, 0);
    }
    for (int y = 0; y < 3; ++y) {
        CHECK(out.at(0, y, 0) == doctest::Approx(wl + wc).epsilon(1e-14));
        CHECK(out.at(0, y, 1) == doctest::Approx(wl).epsilon(1e-14));
        CHECK(out.at(0, y, 2) == doctest::Approx(0.0));
    }

    CHECK_THROWS_AS(gaussian_blur(g, BlurKernel::gaussian(3, 1.0)),
                    DimensionError);
}

TEST_CASE("spatial softmax normalizes and orders") {
    const SalienceMap m = random_map(6, 8, 7);
    for (double k : {0.0, 1.0, 17.5, 300.0}) {
        const SalienceMap p = spatial_softmax(m, k);
        double sum = 0.0;
        for (int i = 0; i < p.size(); ++i) {
            CHECK(p[i] > 0.0);
            sum += p[i];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        if (k > 0.0) {
            for (int i = 1; i < p.size(); ++i) {
                // Monotone: larger salience, larger weight.
                CHECK((m[i] > m[i - 1]) == (p[i] > p[i - 1]));
            }
        }
    }
}

TEST_CASE("spatial softmax known values") {
    // k = 0 on a power-of-two pixel count is exactly uniform.
    const SalienceMap m = random_map(4, 8, 8);
    const SalienceMap uniform = spatial_softmax(m, 0.0);
    for (int i = 0; i < uniform.size(); ++i) CHECK(uniform[i] == 1.0 / 32.0);

    // Two values 0 and ln 3 at unit temperature give weights 1/4 and 3/4.
    SalienceMap two(1, 2, 0.0);
    two[1] = std::log(3.0);
    const SalienceMap p = spatial_softmax(two, 1.0);
    CHECK(p[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(0.75).epsilon(1e-14));

    // Shift invariance.
    SalienceMap shifted(4, 8);
    const SalienceMap base = random_map(4, 8, 9);
    for (int i = 0; i < base.size(); ++i) shifted[i] = base[i] + 123.456;
    const SalienceMap pa = spatial_softmax(base, 3.0);
    const SalienceMap pb = spatial_softmax(shifted, 3.0);
    for (int i = 0; i < pa.size(); ++i) {
        CHECK(pb[i] == doctest::Approx(pa[i]).epsilon(1e-12));
    }

    // Huge temperature concentrates all mass on the maximum.
    SalienceMap peaky(2, 2, 0.0);
    peaky[2] = 1.0;
    const SalienceMap hard = spatial_softmax(peaky, 5000.0);
    CHECK(hard[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hard[0] < 1e-300);
}

TEST_CASE("argmax mask picks the larger map, ties to the first") {
    SalienceMap a(2, 2, std::vector<double>{0.5, 0.2, 0.7, 0.7});
    SalienceMap b(2, 2, std::vector<double>{0.4, 0.3, 0.7, 0.9});
    const BlendMask m = argmax_mask(a, b);
    CHECK(m[0] == 1);
    CHECK(m[1] == 0);
    CHECK(m[2] == 1); // tie goes to the first argument
    CHECK(m[3] == 0);

    // Complementarity: mask(a, b) and mask(b, a) disagree exactly off ties.
    const SalienceMap ra = random_map(5, 5, 10);
    const SalienceMap rb = random_map(5, 5, 11);
    const BlendMask mab = argmax_mask(ra, rb);
    const BlendMask mba = argmax_mask(rb, ra);
    for (int i = 0; i < mab.size(); ++i) {
        if (ra[i] != rb[i]) CHECK(mab[i] + mba[i] == 1);
    }

    CHECK_THROWS_AS(argmax_mask(ra, SalienceMap(5, 6)), DimensionError);
}
