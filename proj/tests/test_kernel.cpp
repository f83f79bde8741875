#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "vx/kernel.hpp"
#include "vx/rng.hpp"

using namespace vx;

namespace {

const KernelModel& model() {
    static KernelModel m = KernelModel::build(16, 1024);
    return m;
}

const MatrixPotential& potential() {
    static MatrixPotential p = MatrixPotential::build(model());
    return p;
}

Vec2 random_point(uint64_t seed, uint64_t i) {
    RandomBlock b(seed, 0, 0, i);
    return {b.uniform(0) - 0.5, b.uniform(1) - 0.5};
}

}  // namespace

TEST_CASE("build rejects invalid parameters") {
    CHECK_THROWS_AS(KernelModel::build(4, 256), ConfigError);
    CHECK_THROWS_AS(KernelModel::build(16, 200), ConfigError);   // not a power of two
    CHECK_THROWS_AS(KernelModel::build(16, 32), ConfigError);    // too coarse
    CHECK_THROWS_AS(KernelModel::build(600, 1024), ConfigError); // beyond Nyquist
}

TEST_CASE("kernel conventions at special points") {
    const auto& m = model();
    Vec2 z = m.eval({0.0, 0.0});
    CHECK(z.x == 0.0);
    CHECK(z.y == 0.0);

    // half-period points are exact zeros by antisymmetry + periodicity
    for (Vec2 x : {Vec2{0.5, 0.0}, Vec2{0.0, 0.5}, Vec2{0.5, 0.5}, Vec2{-0.5, 0.0}}) {
        Vec2 v = m.eval(x);
        CHECK(v.x == 0.0);
        CHECK(v.y == 0.0);
    }
}

TEST_CASE("near-origin evaluation is dominated by the free-space part") {
    Vec2 v = model().eval({1e-3, 0.0});
    double expect = 1e3 / (2.0 * std::numbers::pi);  // 159.154...
    CHECK(std::abs(v.y - expect) < 0.01 * expect);
    CHECK(std::abs(v.x) < 0.01 * expect);
}

TEST_CASE("agreement with the lattice-sum oracle at a reference point") {
    Vec2 v = model().eval({0.25, 0.25});
    Vec2 o = lattice_sum_oracle({0.25, 0.25}, 30);
    CHECK(std::abs(v.x - o.x) < 1e-6);
    CHECK(std::abs(v.y - o.y) < 1e-6);
}

TEST_CASE("antisymmetry over 1000 random points") {
    const auto& m = model();
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        Vec2 x = random_point(7, i);
        Vec2 a = m.eval(x);
        Vec2 b = m.eval(-x);
        worst = std::max(worst, std::max(std::abs(a.x + b.x), std::abs(a.y + b.y)));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("radial component bounded by the correction") {
    const auto& m = model();
    for (int i = 0; i < 200; ++i) {
        Vec2 x = random_point(13, i);
        if (x.norm() < 1e-3) continue;
        // free-space part is exactly perpendicular to x
        CHECK(dot(x, free_space_kernel(x)) == 0.0);
        Vec2 k = m.eval(x);
        Vec2 gamma = k - free_space_kernel(x);
        CHECK(std::abs(dot(x, k)) <= x.norm() * gamma.norm() + 1e-12);
    }
}

TEST_CASE("spectral representation: zero mean and exact divergence") {
    auto k0 = KernelModel::spectral_coeff(0, 0);
    CHECK(k0[0] == std::complex<double>(0, 0));
    CHECK(k0[1] == std::complex<double>(0, 0));
    for (int k1 = -16; k1 <= 16; ++k1)
        for (int k2 = -16; k2 <= 16; ++k2) {
            auto c = KernelModel::spectral_coeff(k1, k2);
            std::complex<double> div = double(k1) * c[0] + double(k2) * c[1];
            CHECK(div == std::complex<double>(0, 0));  // k . k_perp = 0 in integers
        }

    // tabulated kernel has zero discrete mean (exact antisymmetry pairing)
    const auto& m = model();
    double sx = 0, sy = 0;
    for (std::size_t n = 0; n < m.k_table.size() / 2; ++n) {
        sx += m.k_table[2 * n];
        sy += m.k_table[2 * n + 1];
    }
    CHECK(std::abs(sx) <= 1e-10);
    CHECK(std::abs(sy) <= 1e-10);
}

TEST_CASE("cross-validation against the shell-paired lattice sum") {
    auto rows = kernel_cross_validation(model(), 64, 0.05);
    CHECK(rows.size() > 3000);
    double worst = 0;
    for (const auto& r : rows) worst = std::max(worst, r.abs_error);
    CHECK(worst <= 1e-6);
}

TEST_CASE("gamma stays smooth under table refinement") {
    // max second difference quotient must stay bounded when resolution doubles;
    // seam-crossing stencils excluded (gamma is smooth on the closed fundamental
    // domain, not as a periodic function).
    auto second_diff = [](const KernelModel& m) {
        int res = m.table_resolution;
        double h2 = 1.0 / (double(res) * res);
        double worst = 0;
        for (int i = 1; i < res - 1; ++i)
            for (int j = 1; j < res - 1; ++j)
                for (int c = 0; c < 2; ++c) {
                    double d1 = m.gamma_table[(std::size_t(i + 1) * res + j) * 2 + c] -
                                2 * m.gamma_table[(std::size_t(i) * res + j) * 2 + c] +
                                m.gamma_table[(std::size_t(i - 1) * res + j) * 2 + c];
                    double d2 = m.gamma_table[(std::size_t(i) * res + j + 1) * 2 + c] -
                                2 * m.gamma_table[(std::size_t(i) * res + j) * 2 + c] +
                                m.gamma_table[(std::size_t(i) * res + j - 1) * 2 + c];
                    worst = std::max(worst, std::max(std::abs(d1), std::abs(d2)) / h2);
                }
        return worst;
    };
    KernelModel a = KernelModel::build(8, 128);
    KernelModel b = KernelModel::build(8, 256);
    double da = second_diff(a), db = second_diff(b);
    CHECK(db <= 1.5 * da + 1.0);
}

TEST_CASE("matrix potential: singular part algebra") {
    // x = (a, 0): x_perp = (0, a), x (x_perp)^T = [[0, a^2], [0, 0]]
    double a = 0.3;
    Mat2 s = free_space_potential({a, 0.0});
    double c = 1.0 / (2.0 * std::numbers::pi);
    CHECK(s(0, 0) == doctest::Approx(0.0));
    CHECK(s(0, 1) == doctest::Approx(c));
    CHECK(s(1, 0) == doctest::Approx(0.0));
    CHECK(s(1, 1) == doctest::Approx(0.0));

    // even under sign flip
    for (int i = 0; i < 50; ++i) {
        Vec2 x = random_point(17, i);
        if (x.norm() < 1e-3) continue;
        Mat2 p = free_space_potential(x);
        Mat2 q = free_space_potential(-x);
        for (int e = 0; e < 4; ++e) CHECK(p.a[e] == q.a[e]);
    }
}

TEST_CASE("matrix potential: bounded tables") {
    const auto& p = potential();
    double max_gamma = 0;
    for (double v : p.gamma_matrix_table) {
        CHECK(std::isfinite(v));
        max_gamma = std::max(max_gamma, std::abs(v));
    }
    double bound = 1.0 / (2.0 * std::numbers::pi) + max_gamma + 1e-12;
    for (double v : p.v0_table) {
        CHECK(std::isfinite(v));
        CHECK(std::abs(v) <= bound);
    }
}

TEST_CASE("finite-difference row-divergence of V0 reproduces the kernel") {
    const auto& m = model();

    // node-based centered differences on the tabulated V0 at two resolutions;
    // error ratio per halving of h should be ~4 (second order)
    auto fd_error = [&](const MatrixPotential& p) {
        int res = p.table_resolution;
        double h = 1.0 / res;
        double worst = 0;
        auto at = [&](int i, int j, int c) {
            i = (i % res + res) % res;
            j = (j % res + res) % res;
            return p.v0_table[(std::size_t(i) * res + j) * 4 + c];
        };
        for (int i = 0; i < res; ++i)
            for (int j = 0; j < res; ++j) {
                Vec2 x{-0.5 + double(i) * h, -0.5 + double(j) * h};
                if (x.norm() < 0.1 || std::abs(x.x) > 0.4 || std::abs(x.y) > 0.4) continue;
                // div_j = d_1 V_{1j} + d_2 V_{2j}
                double div0 = (at(i + 1, j, 0) - at(i - 1, j, 0)) / (2 * h) +
                              (at(i, j + 1, 2) - at(i, j - 1, 2)) / (2 * h);
                double div1 = (at(i + 1, j, 1) - at(i - 1, j, 1)) / (2 * h) +
                              (at(i, j + 1, 3) - at(i, j - 1, 3)) / (2 * h);
                Vec2 k = m.eval(x);
                worst = std::max(worst, std::max(std::abs(div0 - k.x), std::abs(div1 - k.y)));
            }
        return worst;
    };

    KernelModel m256 = KernelModel::build(16, 256);
    KernelModel m512 = KernelModel::build(16, 512);
    MatrixPotential p256 = MatrixPotential::build(m256);
    MatrixPotential p512 = MatrixPotential::build(m512);
    double e256 = fd_error(p256);
    double e512 = fd_error(p512);
    CHECK(e512 < e256);
    double ratio = e256 / e512;
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("tensor kernel blocks") {
    const auto& m = model();
    const auto& p = potential();
    TensorKernel tk{&m, &p, 1.0, 1.0};

    PairPoint4 x{{0.1, 0.2}, {-0.3, 0.05}};
    auto v = tk.eval_pair(x, x);
    Vec2 k01 = m.eval(x.plus - x.minus);
    Vec2 k10 = m.eval(x.minus - x.plus);
    CHECK(v[0].x == doctest::Approx(-k01.x));
    CHECK(v[0].y == doctest::Approx(-k01.y));
    CHECK(v[1].x == doctest::Approx(k10.x));
    CHECK(v[1].y == doctest::Approx(k10.y));

    TensorKernel one_species{&m, &p, 0.7, 0.0};
    PairPoint4 y{{0.4, -0.1}, {0.2, 0.3}};
    auto w = one_species.eval_pair(x, y);
    Vec2 e0 = m.eval(x.plus - y.plus) * 0.7;
    Vec2 e1 = m.eval(x.minus - y.plus) * 0.7;
    CHECK(w[0].x == doctest::Approx(e0.x));
    CHECK(w[0].y == doctest::Approx(e0.y));
    CHECK(w[1].x == doctest::Approx(e1.x));
    CHECK(w[1].y == doctest::Approx(e1.y));
}

TEST_CASE("tensor kernel: per-term swap negates each block") {
    const auto& m = model();
    const auto& p = potential();
    TensorKernel tk{&m, &p, 1.3, 0.6};
    for (int i = 0; i < 100; ++i) {
        PairPoint4 x{random_point(23, 2 * i), random_point(23, 2 * i + 1)};
        PairPoint4 y{random_point(29, 2 * i), random_point(29, 2 * i + 1)};
        auto v = tk.eval_pair(x, y);
        // swap arguments inside every kernel difference
        Vec2 b0 = m.eval(y.plus - x.plus) * 1.3 - m.eval(y.minus - x.plus) * 0.6;
        Vec2 b1 = m.eval(y.plus - x.minus) * 1.3 - m.eval(y.minus - x.minus) * 0.6;
        CHECK(std::abs(v[0].x + b0.x) < 1e-12);
        CHECK(std::abs(v[0].y + b0.y) < 1e-12);
        CHECK(std::abs(v[1].x + b1.x) < 1e-12);
        CHECK(std::abs(v[1].y + b1.y) < 1e-12);
    }
}

TEST_CASE("diagonal matrix potential") {
    const auto& m = model();
    const auto& p = potential();

    TensorKernel zero{&m, &p, 0.0, 0.0};
    auto z = zero.eval_diag_potential({{0.1, 0.1}, {0.3, -0.2}});
    CHECK(z[0].max_abs() == 0.0);
    CHECK(z[1].max_abs() == 0.0);

    // coincident pair uses the V0(0) = Gamma(0) convention
    TensorKernel tk{&m, &p, 2.0, 3.0};
    PairPoint4 s{{0.2, -0.1}, {0.2, -0.1}};
    auto v = tk.eval_diag_potential(s);
    Mat2 g0 = p.eval({0, 0});
    for (int e = 0; e < 4; ++e) {
        CHECK(v[0].a[e] == doctest::Approx(-3.0 * g0.a[e]));
        CHECK(v[1].a[e] == doctest::Approx(2.0 * g0.a[e]));
    }
}

TEST_CASE("finite-difference divergence of the diagonal potential matches the pair kernel") {
    const auto& m = model();
    const auto& p = potential();
    TensorKernel tk{&m, &p, 1.0, 0.8};

    double h = 4.0 / m.table_resolution;
    for (int trial = 0; trial < 20; ++trial) {
        PairPoint4 x{random_point(31, 2 * trial), random_point(31, 2 * trial + 1)};
        Vec2 w = wrap(x.plus - x.minus);
        // keep the difference away from the kernel singularity and the seam
        if (w.norm() < 0.1 || std::abs(w.x) > 0.4 || std::abs(w.y) > 0.4) continue;

        // div over the first index of each 2x2 block w.r.t. that block's coordinate
        auto div_block = [&](int block) {
            Vec2 d{0, 0};
            for (int axis = 0; axis < 2; ++axis) {
                PairPoint4 fw = x, bw = x;
                Vec2& f = block == 0 ? fw.plus : fw.minus;
                Vec2& g = block == 0 ? bw.plus : bw.minus;
                (axis == 0 ? f.x : f.y) += h;
                (axis == 0 ? g.x : g.y) -= h;
                Mat2 mf = tk.eval_diag_potential(fw)[block];
                Mat2 mb = tk.eval_diag_potential(bw)[block];
                d.x += (mf(axis, 0) - mb(axis, 0)) / (2 * h);
                d.y += (mf(axis, 1) - mb(axis, 1)) / (2 * h);
            }
            return d;
        };

        auto kbar = tk.eval_pair(x, x);
        Vec2 d0 = div_block(0), d1 = div_block(1);
        double tol = 50.0 * h * h + 1e-8;
        CHECK(std::abs(d0.x - kbar[0].x) < tol);
        CHECK(std::abs(d0.y - kbar[0].y) < tol);
        CHECK(std::abs(d1.x - kbar[1].x) < tol);
        CHECK(std::abs(d1.y - kbar[1].y) < tol);
    }
}

TEST_CASE("fast drift path tracks the reference evaluation") {
    const auto& m = model();
    double worst = 0;
    for (int i = 0; i < 2000; ++i) {
        Vec2 x = random_point(41, i);
        if (x.norm() < 0.05) continue;
        Vec2 a = m.eval(x);
        Vec2 b = m.eval_fast(x);
        worst = std::max(worst, (a - b).norm());
    }
    CHECK(worst < 2e-4);
    CHECK(m.eval_fast({0, 0}).x == 0.0);
    CHECK(m.eval_fast({0, 0}).y == 0.0);
}
