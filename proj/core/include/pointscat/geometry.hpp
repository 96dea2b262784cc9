#pragma once

#include <algorithm>
#include <cmath>

namespace pointscat {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
};

inline Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
inline Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator*(const Vec3& a, double s) { return s * a; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(const Vec3& a) { return (1.0 / norm(a)) * a; }

// Right-handed orthonormal frame; spherical angles are measured against e3 (polar) and e1 (azimuth).
struct Frame {
    Vec3 e1{1, 0, 0};
    Vec3 e2{0, 1, 0};
    Vec3 e3{0, 0, 1};

    // Frame with e3 along axis; e1 is chosen deterministically from the coordinate axis least aligned with it.
    static Frame along(const Vec3& axis);

    Vec3 direction(double cos_polar, double azimuth) const;
    Vec3 apply(const Vec3& local) const { return local.x * e1 + local.y * e2 + local.z * e3; }
};

inline Frame Frame::along(const Vec3& axis) {
    Frame f;
    f.e3 = normalized(axis);
    const double ax = std::abs(f.e3.x), ay = std::abs(f.e3.y), az = std::abs(f.e3.z);
    Vec3 helper{0, 0, 1};
    if (ax <= ay && ax <= az) helper = {1, 0, 0};
    else if (ay <= az) helper = {0, 1, 0};
    f.e1 = normalized(helper - dot(helper, f.e3) * f.e3);
    f.e2 = cross(f.e3, f.e1);
    return f;
}

inline Vec3 Frame::direction(double cos_polar, double azimuth) const {
    const double s = std::sqrt(std::max(0.0, 1.0 - cos_polar * cos_polar));
    return (s * std::cos(azimuth)) * e1 + (s * std::sin(azimuth)) * e2 + cos_polar * e3;
}

}  // namespace pointscat
