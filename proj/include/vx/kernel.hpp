#ifndef VX_KERNEL_HPP
#define VX_KERNEL_HPP

#include <array>
#include <complex>
#include <vector>

#include "vx/common.hpp"

namespace vx {

// Periodized Biot-Savart kernel on the unit torus, spectral convention
// e^{2 pi i k.x} with Khat_k = -i k_perp / (2 pi |k|^2) for k != 0, Khat_0 = 0.
//
// Tables are built from a heat-kernel split of the periodic Green function:
// a screened image sum (short range, analytic) plus a Gaussian-damped mode
// sum synthesized by FFT (long range). The split reproduces the kernel to
// round-off at every node, so interpolation error is the only error left.
// Evaluation returns the exact free-space part plus an interpolated smooth
// correction inside the near-field radius, and interpolates the kernel table
// outside it.
struct KernelModel {
    int spectral_cutoff = 0;
    int table_resolution = 0;
    int lattice_truncation_radius = 30;  // used by the direct-sum oracle
    double split_time = 0.0;             // heat-kernel split parameter
    double near_field_radius = 0.05;

    // row-major (x1 slow, x2 fast), 2 components interleaved, nodes at -1/2 + i/R
    std::vector<double> k_table;
    std::vector<double> gamma_table;

    // coarser tables backing the bilinear fast path used by O(N^2) drift sums
    int drift_resolution = 0;
    std::vector<double> drift_k_table;
    std::vector<double> drift_gamma_table;

    static KernelModel build(int spectral_cutoff, int table_resolution);

    // Periodized kernel, K(0) = 0; total after wrapping.
    Vec2 eval(Vec2 x) const;

    // Bilinear fast path for pairwise sums; same near-field split.
    Vec2 eval_fast(Vec2 x) const;

    // Exact spectral coefficient (components of -i k_perp / (2 pi |k|^2)).
    static std::array<std::complex<double>, 2> spectral_coeff(int k1, int k2);
};

// Free-space Biot-Savart kernel (1/2pi) x_perp / |x|^2.
inline Vec2 free_space_kernel(Vec2 x) {
    double r2 = x.norm2();
    return x.perp() * (1.0 / (2.0 * std::numbers::pi * r2));
}

// Direct-sum oracle: free-space kernel plus images over complete lattice
// shells of equal |n|^2 up to the truncation radius. Independent of the
// table construction; this is the cross-validation reference.
Vec2 lattice_sum_oracle(Vec2 x, int radius);

// Matrix potential V0 with first-index divergence equal to K:
// sum_i d_i (V0)_{ij} = K_j. V0 = (1/2pi) x (x_perp)^T / |x|^2 + Gamma with
// Gamma smooth on the closed fundamental domain; V0 itself is periodic and
// bounded by 1/2pi + max|Gamma|.
struct MatrixPotential {
    int table_resolution = 0;
    double split_time = 0.0;
    double near_field_radius = 0.05;

    // row-major, 4 entries per node interleaved (m00 m01 m10 m11)
    std::vector<double> v0_table;
    std::vector<double> gamma_matrix_table;

    static MatrixPotential build(const KernelModel& model);

    // V0(0) = Gamma(0) by convention (singular part set to zero at the origin).
    Mat2 eval(Vec2 x) const;
};

inline Mat2 free_space_potential(Vec2 x) {
    double c = 1.0 / (2.0 * std::numbers::pi * x.norm2());
    Vec2 p = x.perp();
    return {{x.x * p.x * c, x.x * p.y * c, x.y * p.x * c, x.y * p.y * c}};
}

// Weighted tensorized kernel objects for the two-species system.
struct TensorKernel {
    const KernelModel* base = nullptr;
    const MatrixPotential* v0 = nullptr;
    double alpha_plus = 1.0;
    double alpha_minus = 1.0;

    // Block 4-vector ( a+ K(x+-y+) - a- K(x+-y-),  a+ K(x--y+) - a- K(x--y-) ).
    std::array<Vec2, 2> eval_pair(PairPoint4 x, PairPoint4 y) const;

    // Block-diagonal matrix potential ( -a- V0(x+-x-),  a+ V0(x--x+) ).
    std::array<Mat2, 2> eval_diag_potential(PairPoint4 x) const;
};

// Cross-validation row: probe point, table evaluation, oracle, abs error.
struct KernelProbe {
    Vec2 x;
    Vec2 table_value;
    Vec2 oracle_value;
    double abs_error;
};

// Evaluates the model against the lattice-sum oracle on a grid x grid probe
// lattice, skipping |x| < min_radius. Rows in fixed row-major order.
std::vector<KernelProbe> kernel_cross_validation(const KernelModel& model, int grid,
                                                 double min_radius);

}  // namespace vx

#endif
