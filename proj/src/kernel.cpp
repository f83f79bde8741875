#include "vx/kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>

namespace vx {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Tail threshold for the split: exp(-42) ~ 5.7e-19.
constexpr double kTailExponent = 42.0;

double split_time_for(int cutoff, int resolution) {
    // Long-part modes must die out below the cutoff, and the short-part
    // length scale sqrt(t0) must stay resolvable by the table.
    double t_spec = kTailExponent / (4.0 * kPi * kPi) / (double(cutoff) * cutoff);
    double h = 1.0 / resolution;
    double t_grid = 36.0 * h * h;
    return std::max(t_spec, t_grid);
}

// Gaussian-screened image term of the kernel: (1/2pi) y_perp/|y|^2 e^{-|y|^2/4t0}.
inline Vec2 screened_image(Vec2 y, double t0) {
    double r2 = y.norm2();
    double s = std::exp(-r2 / (4.0 * t0)) / (2.0 * kPi * r2);
    return y.perp() * s;
}

// Long-range part synthesized on the R x R node grid (nodes at -1/2 + i/R)
// by a complex-to-real FFT of the damped spectral coefficients.
// out has 2 interleaved components.
void synthesize_long_kernel(int res, double t0, int kmax, std::vector<double>& out) {
    int half = res / 2 + 1;
    fftw_complex* in = fftw_alloc_complex(std::size_t(res) * half);
    double* re = fftw_alloc_real(std::size_t(res) * res);
    fftw_plan plan = fftw_plan_dft_c2r_2d(res, res, in, re, FFTW_ESTIMATE);

    out.assign(std::size_t(res) * res * 2, 0.0);
    for (int comp = 0; comp < 2; ++comp) {
        std::memset(in, 0, sizeof(fftw_complex) * std::size_t(res) * half);
        for (int i = 0; i < res; ++i) {
            int k1 = i <= res / 2 ? i : i - res;
            for (int j = 0; j < half; ++j) {
                int k2 = j;
                double kk = double(k1) * k1 + double(k2) * k2;
                if (kk == 0.0 || kk > double(kmax) * kmax) continue;
                double damp = std::exp(-4.0 * kPi * kPi * kk * t0);
                // Khat = -i k_perp/(2 pi |k|^2); node offset -1/2 adds (-1)^{k1+k2}.
                double sign = ((k1 + k2) & 1) ? -1.0 : 1.0;
                double kperp = comp == 0 ? -double(k2) : double(k1);
                double imag = -kperp / (2.0 * kPi * kk) * damp * sign;
                in[std::size_t(i) * half + j][0] = 0.0;
                in[std::size_t(i) * half + j][1] = imag;
            }
        }
        fftw_execute(plan);
        for (std::size_t n = 0; n < std::size_t(res) * res; ++n) out[2 * n + comp] = re[n];
    }
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(re);
}

// Same synthesis for the long part of the matrix potential:
// Vhat_ij = -k_i kperp_j e^{-4pi^2|k|^2 t0} / (4 pi^2 |k|^4)  (real coefficients).
void synthesize_long_potential(int res, double t0, int kmax, std::vector<double>& out) {
    int half = res / 2 + 1;
    fftw_complex* in = fftw_alloc_complex(std::size_t(res) * half);
    double* re = fftw_alloc_real(std::size_t(res) * res);
    fftw_plan plan = fftw_plan_dft_c2r_2d(res, res, in, re, FFTW_ESTIMATE);

    out.assign(std::size_t(res) * res * 4, 0.0);
    for (int ci = 0; ci < 2; ++ci) {
        for (int cj = 0; cj < 2; ++cj) {
            std::memset(in, 0, sizeof(fftw_complex) * std::size_t(res) * half);
            for (int i = 0; i < res; ++i) {
                int k1 = i <= res / 2 ? i : i - res;
                for (int j = 0; j < half; ++j) {
                    int k2 = j;
                    double kk = double(k1) * k1 + double(k2) * k2;
                    if (kk == 0.0 || kk > double(kmax) * kmax) continue;
                    double damp = std::exp(-4.0 * kPi * kPi * kk * t0);
                    double sign = ((k1 + k2) & 1) ? -1.0 : 1.0;
                    double ki = ci == 0 ? double(k1) : double(k2);
                    double kperpj = cj == 0 ? -double(k2) : double(k1);
                    in[std::size_t(i) * half + j][0] =
                        -ki * kperpj * damp * sign / (4.0 * kPi * kPi * kk * kk);
                }
            }
            fftw_execute(plan);
            for (std::size_t n = 0; n < std::size_t(res) * res; ++n)
                out[4 * n + 2 * ci + cj] = re[n];
        }
    }
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(re);
}

// Force K(-x) = -K(x) exactly on the node grid. Self-paired nodes (origin and
// half-period points) become exact zeros.
void antisymmetrize(int res, std::vector<double>& table) {
    for (int i = 0; i < res; ++i) {
        int ri = (res - i) % res;
        for (int j = 0; j < res; ++j) {
            int rj = (res - j) % res;
            if (std::size_t(i) * res + j > std::size_t(ri) * res + rj) continue;
            std::size_t p = (std::size_t(i) * res + j) * 2;
            std::size_t q = (std::size_t(ri) * res + rj) * 2;
            for (int c = 0; c < 2; ++c) {
                double v = 0.5 * (table[p + c] - table[q + c]);
                table[p + c] = v;
                table[q + c] = -v;
            }
        }
    }
}

void build_kernel_tables(int res, double t0, int kmax, std::vector<double>& k_tab,
                         std::vector<double>& gamma_tab) {
    synthesize_long_kernel(res, t0, kmax, k_tab);
    double h = 1.0 / res;
    parallel_for(std::size_t(res), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            for (int j = 0; j < res; ++j) {
                Vec2 x{-0.5 + double(i) * h, -0.5 + double(j) * h};
                Vec2 s{0, 0};
                for (int n1 = -2; n1 <= 2; ++n1)
                    for (int n2 = -2; n2 <= 2; ++n2) {
                        if (n1 == 0 && n2 == 0 && i == res / 2 && j == res / 2) continue;
                        s += screened_image({x.x - n1, x.y - n2}, t0);
                    }
                std::size_t p = (i * res + j) * 2;
                k_tab[p] += s.x;
                k_tab[p + 1] += s.y;
            }
        }
    });
    // origin node carries the K(0) = 0 convention
    std::size_t o = (std::size_t(res / 2) * res + res / 2) * 2;
    k_tab[o] = k_tab[o + 1] = 0.0;
    antisymmetrize(res, k_tab);

    gamma_tab.assign(k_tab.size(), 0.0);
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
            std::size_t p = (std::size_t(i) * res + j) * 2;
            if (i == res / 2 && j == res / 2) continue;  // gamma(0) = 0
            Vec2 x{-0.5 + double(i) * h, -0.5 + double(j) * h};
            Vec2 f = free_space_kernel(x);
            gamma_tab[p] = k_tab[p] - f.x;
            gamma_tab[p + 1] = k_tab[p + 1] - f.y;
        }
}

// 4-point Lagrange weights for the unit interval, nodes at offsets -1..2.
inline void cubic_weights(double s, double w[4]) {
    w[0] = -s * (s - 1.0) * (s - 2.0) / 6.0;
    w[1] = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    w[2] = -(s + 1.0) * s * (s - 2.0) / 2.0;
    w[3] = (s + 1.0) * s * (s - 1.0) / 6.0;
}

// Periodic bicubic interpolation of a table with C interleaved components.
template <int C>
void bicubic(const std::vector<double>& tab, int res, Vec2 x, double out[C]) {
    double u = (x.x + 0.5) * res;
    double v = (x.y + 0.5) * res;
    int i0 = int(std::floor(u));
    int j0 = int(std::floor(v));
    double wu[4], wv[4];
    cubic_weights(u - i0, wu);
    cubic_weights(v - j0, wv);
    for (int c = 0; c < C; ++c) out[c] = 0.0;
    for (int a = 0; a < 4; ++a) {
        int i = (i0 - 1 + a) % res;
        if (i < 0) i += res;
        double row[C] = {};
        for (int b = 0; b < 4; ++b) {
            int j = (j0 - 1 + b) % res;
            if (j < 0) j += res;
            const double* p = &tab[(std::size_t(i) * res + j) * C];
            for (int c = 0; c < C; ++c) row[c] += wv[b] * p[c];
        }
        for (int c = 0; c < C; ++c) out[c] += wu[a] * row[c];
    }
}

}  // namespace

KernelModel KernelModel::build(int spectral_cutoff, int table_resolution) {
    if (spectral_cutoff < 8)
        throw ConfigError("kernel: spectral_cutoff must be >= 8, got " +
                          std::to_string(spectral_cutoff));
    if (table_resolution < 64 || !is_power_of_two(table_resolution))
        throw ConfigError("kernel: table_resolution must be a power of two >= 64, got " +
                          std::to_string(table_resolution));
    if (spectral_cutoff > table_resolution / 2)
        throw ConfigError("kernel: spectral_cutoff " + std::to_string(spectral_cutoff) +
                          " exceeds the table Nyquist " + std::to_string(table_resolution / 2));

    KernelModel m;
    m.spectral_cutoff = spectral_cutoff;
    m.table_resolution = table_resolution;
    m.split_time = split_time_for(spectral_cutoff, table_resolution);
    // 0.05 at production resolutions; widened for coarse tables where the
    // kernel table cannot resolve the near-singular region.
    m.near_field_radius = std::max(0.05, 12.0 / table_resolution);

    // Modes actually needed by the long part (damped far below the cutoff).
    int kmax = std::min(spectral_cutoff,
                        int(std::ceil(std::sqrt(kTailExponent / (4.0 * kPi * kPi * m.split_time)))) + 1);

    build_kernel_tables(table_resolution, m.split_time, kmax, m.k_table, m.gamma_table);

    m.drift_resolution = std::min(table_resolution, 512);
    if (m.drift_resolution == table_resolution) {
        m.drift_k_table = m.k_table;
        m.drift_gamma_table = m.gamma_table;
    } else {
        double t0d = split_time_for(spectral_cutoff, m.drift_resolution);
        int kmaxd = std::min(spectral_cutoff,
                             int(std::ceil(std::sqrt(kTailExponent / (4.0 * kPi * kPi * t0d)))) + 1);
        build_kernel_tables(m.drift_resolution, t0d, kmaxd, m.drift_k_table, m.drift_gamma_table);
    }
    return m;
}

Vec2 KernelModel::eval(Vec2 x) const {
    x = wrap(x);
    double r2 = x.norm2();
    if (r2 == 0.0) return {0.0, 0.0};
    double out[2];
    if (r2 < near_field_radius * near_field_radius) {
        bicubic<2>(gamma_table, table_resolution, x, out);
        Vec2 f = free_space_kernel(x);
        return {f.x + out[0], f.y + out[1]};
    }
    bicubic<2>(k_table, table_resolution, x, out);
    return {out[0], out[1]};
}

Vec2 KernelModel::eval_fast(Vec2 x) const {
    x = wrap(x);
    double r2 = x.norm2();
    int res = drift_resolution;
    if (r2 < near_field_radius * near_field_radius) {
        if (r2 == 0.0) return {0.0, 0.0};
        double u = (x.x + 0.5) * res, v = (x.y + 0.5) * res;
        int i0 = int(u), j0 = int(v);
        double fu = u - i0, fv = v - j0;
        int i1 = i0 + 1 == res ? 0 : i0 + 1;
        int j1 = j0 + 1 == res ? 0 : j0 + 1;
        const double* t = drift_gamma_table.data();
        const double* p00 = t + (std::size_t(i0) * res + j0) * 2;
        const double* p01 = t + (std::size_t(i0) * res + j1) * 2;
        const double* p10 = t + (std::size_t(i1) * res + j0) * 2;
        const double* p11 = t + (std::size_t(i1) * res + j1) * 2;
        double w00 = (1 - fu) * (1 - fv), w01 = (1 - fu) * fv, w10 = fu * (1 - fv), w11 = fu * fv;
        Vec2 g{w00 * p00[0] + w01 * p01[0] + w10 * p10[0] + w11 * p11[0],
               w00 * p00[1] + w01 * p01[1] + w10 * p10[1] + w11 * p11[1]};
        return free_space_kernel(x) + g;
    }
    double u = (x.x + 0.5) * res, v = (x.y + 0.5) * res;
    int i0 = int(u), j0 = int(v);
    double fu = u - i0, fv = v - j0;
    int i1 = i0 + 1 == res ? 0 : i0 + 1;
    int j1 = j0 + 1 == res ? 0 : j0 + 1;
    const double* t = drift_k_table.data();
    const double* p00 = t + (std::size_t(i0) * res + j0) * 2;
    const double* p01 = t + (std::size_t(i0) * res + j1) * 2;
    const double* p10 = t + (std::size_t(i1) * res + j0) * 2;
    const double* p11 = t + (std::size_t(i1) * res + j1) * 2;
    double w00 = (1 - fu) * (1 - fv), w01 = (1 - fu) * fv, w10 = fu * (1 - fv), w11 = fu * fv;
    return {w00 * p00[0] + w01 * p01[0] + w10 * p10[0] + w11 * p11[0],
            w00 * p00[1] + w01 * p01[1] + w10 * p10[1] + w11 * p11[1]};
}

std::array<std::complex<double>, 2> KernelModel::spectral_coeff(int k1, int k2) {
    if (k1 == 0 && k2 == 0) return {std::complex<double>(0, 0), std::complex<double>(0, 0)};
    double kk = double(k1) * k1 + double(k2) * k2;
    // -i k_perp / (2 pi |k|^2), k_perp = (-k2, k1)
    return {std::complex<double>(0.0, k2 / (2.0 * kPi * kk)),
            std::complex<double>(0.0, -k1 / (2.0 * kPi * kk))};
}

Vec2 lattice_sum_oracle(Vec2 x, int radius) {
    x = wrap(x);
    if (x.norm2() == 0.0) return {0.0, 0.0};

    // complete shells of equal |n|^2, cached per radius
    static std::mutex mu;
    static std::map<int, std::vector<std::vector<Vec2>>> cache;
    const std::vector<std::vector<Vec2>>* shells;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(radius);
        if (it == cache.end()) {
            std::map<long, std::vector<Vec2>> by_r2;
            for (int n1 = -radius; n1 <= radius; ++n1)
                for (int n2 = -radius; n2 <= radius; ++n2) {
                    long r2 = long(n1) * n1 + long(n2) * n2;
                    if (r2 == 0 || r2 > long(radius) * radius) continue;
                    by_r2[r2].push_back({double(n1), double(n2)});
                }
            std::vector<std::vector<Vec2>> v;
            v.reserve(by_r2.size());
            for (auto& [r2, pts] : by_r2) v.push_back(std::move(pts));
            it = cache.emplace(radius, std::move(v)).first;
        }
        shells = &it->second;
    }

    Vec2 total = free_space_kernel(x);
    for (const auto& shell : *shells) {
        Vec2 s{0, 0};
        for (Vec2 n : shell) s += free_space_kernel(x - n);
        total += s;
    }
    return total;
}

MatrixPotential MatrixPotential::build(const KernelModel& model) {
    MatrixPotential mp;
    mp.table_resolution = model.table_resolution;
    mp.split_time = model.split_time;
    mp.near_field_radius = model.near_field_radius;

    int res = mp.table_resolution;
    double t0 = mp.split_time;
    int kmax = std::min(model.spectral_cutoff,
                        int(std::ceil(std::sqrt(kTailExponent / (4.0 * kPi * kPi * t0)))) + 1);
    synthesize_long_potential(res, t0, kmax, mp.v0_table);

    // screened image term: (1/2pi) e^{-z} [ y (y_perp)^T / |y|^2 - J^T ], z = |y|^2/4t0
    double h = 1.0 / res;
    auto& tab = mp.v0_table;
    parallel_for(std::size_t(res), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            for (int j = 0; j < res; ++j) {
                Vec2 x{-0.5 + double(i) * h, -0.5 + double(j) * h};
                bool origin = (int(i) == res / 2 && j == res / 2);
                Mat2 s;
                for (int n1 = -2; n1 <= 2; ++n1)
                    for (int n2 = -2; n2 <= 2; ++n2) {
                        Vec2 y{x.x - n1, x.y - n2};
                        double r2 = y.norm2();
                        double ez = std::exp(-r2 / (4.0 * t0));
                        double c = ez / (2.0 * kPi);
                        if (!(n1 == 0 && n2 == 0 && origin)) {
                            Vec2 p = y.perp();
                            double inv = 1.0 / r2;
                            s.a[0] += c * y.x * p.x * inv;
                            s.a[1] += c * y.x * p.y * inv;
                            s.a[2] += c * y.y * p.x * inv;
                            s.a[3] += c * y.y * p.y * inv;
                        }
                        // - e^{-z} J^T / 2pi,  J^T = [[0, 1], [-1, 0]]
                        s.a[1] -= c;
                        s.a[2] += c;
                    }
                std::size_t p = (i * res + j) * 4;
                for (int c = 0; c < 4; ++c) tab[p + c] += s.a[c];
            }
        }
    });

    mp.gamma_matrix_table.assign(tab.size(), 0.0);
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
            std::size_t p = (std::size_t(i) * res + j) * 4;
            if (i == res / 2 && j == res / 2) {
                for (int c = 0; c < 4; ++c) mp.gamma_matrix_table[p + c] = tab[p + c];
                continue;
            }
            Vec2 x{-0.5 + double(i) * h, -0.5 + double(j) * h};
            Mat2 f = free_space_potential(x);
            for (int c = 0; c < 4; ++c) mp.gamma_matrix_table[p + c] = tab[p + c] - f.a[c];
        }
    return mp;
}

Mat2 MatrixPotential::eval(Vec2 x) const {
    x = wrap(x);
    double r2 = x.norm2();
    double out[4];
    if (r2 < near_field_radius * near_field_radius) {
        bicubic<4>(gamma_matrix_table, table_resolution, x, out);
        if (r2 == 0.0) return {{out[0], out[1], out[2], out[3]}};
        Mat2 f = free_space_potential(x);
        return {{f.a[0] + out[0], f.a[1] + out[1], f.a[2] + out[2], f.a[3] + out[3]}};
    }
    bicubic<4>(v0_table, table_resolution, x, out);
    return {{out[0], out[1], out[2], out[3]}};
}

std::array<Vec2, 2> TensorKernel::eval_pair(PairPoint4 x, PairPoint4 y) const {
    const KernelModel& k = *base;
    Vec2 b0 = k.eval(x.plus - y.plus) * alpha_plus - k.eval(x.plus - y.minus) * alpha_minus;
    Vec2 b1 = k.eval(x.minus - y.plus) * alpha_plus - k.eval(x.minus - y.minus) * alpha_minus;
    return {b0, b1};
}

std::array<Mat2, 2> TensorKernel::eval_diag_potential(PairPoint4 x) const {
    Mat2 a = v0->eval(x.plus - x.minus) * (-alpha_minus);
    Mat2 b = v0->eval(x.minus - x.plus) * alpha_plus;
    return {a, b};
}

std::vector<KernelProbe> kernel_cross_validation(const KernelModel& model, int grid,
                                                 double min_radius) {
    std::vector<KernelProbe> rows;
    rows.reserve(std::size_t(grid) * grid);
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            Vec2 x{-0.5 + (i + 0.5) / grid, -0.5 + (j + 0.5) / grid};
            if (x.norm() < min_radius) continue;
            KernelProbe p;
            p.x = x;
            p.table_value = model.eval(x);
            p.oracle_value = lattice_sum_oracle(x, model.lattice_truncation_radius);
            p.abs_error = std::max(std::abs(p.table_value.x - p.oracle_value.x),
                                   std::abs(p.table_value.y - p.oracle_value.y));
            rows.push_back(p);
        }
    }
    return rows;
}

}  // namespace vx
