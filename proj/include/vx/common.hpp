#ifndef VX_COMMON_HPP
#define VX_COMMON_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace vx {

// Error taxonomy mirrored by the CLI exit codes: config -> 2, numerical -> 3, io -> 4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator-() const { return {-x, -y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
    // 90-degree rotation: (x, y) -> (-y, x)
    Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

// Row-major 2x2 matrix.
struct Mat2 {
    double a[4] = {0, 0, 0, 0};  // [ a[0] a[1] ; a[2] a[3] ]

    double& operator()(int i, int j) { return a[2 * i + j]; }
    double operator()(int i, int j) const { return a[2 * i + j]; }
    Mat2 operator+(const Mat2& o) const {
        return {{a[0] + o.a[0], a[1] + o.a[1], a[2] + o.a[2], a[3] + o.a[3]}};
    }
    Mat2 operator*(double s) const { return {{a[0] * s, a[1] * s, a[2] * s, a[3] * s}}; }
    double max_abs() const {
        double m = 0;
        for (double v : a) m = std::max(m, std::abs(v));
        return m;
    }
};

// Wrap a coordinate to the fundamental domain [-1/2, 1/2).
inline double wrap_coord(double u) { return u - std::floor(u + 0.5); }
inline Vec2 wrap(Vec2 v) { return {wrap_coord(v.x), wrap_coord(v.y)}; }

// Point on T^2 x T^2, split into the two species coordinates.
struct PairPoint4 {
    Vec2 plus, minus;
};

// Worker-pool size shared by every data-parallel loop and the replica pool.
// All reductions below this knob are order-fixed, so results do not depend on it.
int worker_count();
void set_worker_count(int n);

// Static-partition parallel loop over [0, n). fn(begin, end) per chunk.
// Chunks are disjoint, so any pointwise writes are deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

// Fixed-shape pairwise (tree) reduction; float result independent of chunking.
double pairwise_sum(const double* v, std::size_t n);
inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

}  // namespace vx

#endif
