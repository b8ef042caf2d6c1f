#include "deepboard/math.hpp"

#include <algorithm>

namespace deepboard {

Quat Quat::from_axis_angle(const Vec3& axis, double radians) {
    const Vec3 a = normalize(axis);
    const double s = std::sin(radians * 0.5);
    return {std::cos(radians * 0.5), a.x * s, a.y * s, a.z * s};
}

// Shepperd's method: pick the largest diagonal term to stay well conditioned.
Quat Quat::from_matrix(const Mat3& r) {
    const double trace = r(0, 0) + r(1, 1) + r(2, 2);
    Quat q;
    if (trace > 0) {
        const double s = std::sqrt(trace + 1.0) * 2;
        q = {0.25 * s, (r(2, 1) - r(1, 2)) / s, (r(0, 2) - r(2, 0)) / s, (r(1, 0) - r(0, 1)) / s};
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2;
        q = {(r(2, 1) - r(1, 2)) / s, 0.25 * s, (r(0, 1) + r(1, 0)) / s, (r(0, 2) + r(2, 0)) / s};
    } else if (r(1, 1) > r(2, 2)) {
        const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2;
        q = {(r(0, 2) - r(2, 0)) / s, (r(0, 1) + r(1, 0)) / s, 0.25 * s, (r(1, 2) + r(2, 1)) / s};
    } else {
        const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2;
        q = {(r(1, 0) - r(0, 1)) / s, (r(0, 2) + r(2, 0)) / s, (r(1, 2) + r(2, 1)) / s, 0.25 * s};
    }
    return q.normalized();
}

Mat3 Quat::to_matrix() const {
    Mat3 r;
    r.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
           2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
           2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
    return r;
}

Vec3 Quat::rotate(const Vec3& v) const {
    const Vec3 u{x, y, z};
    const Vec3 t = cross(u, v) * 2.0;
    return v + t * w + cross(u, t);
}

Quat slerp(const Quat& a, const Quat& b_in, double t) {
    Quat b = b_in;
    double cos_theta = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    if (cos_theta < 0) {
        b = {-b.w, -b.x, -b.y, -b.z};
        cos_theta = -cos_theta;
    }
    double wa, wb;
    if (cos_theta > 1.0 - 1e-9) {
        wa = 1.0 - t;
        wb = t;
    } else {
        const double theta = std::acos(std::clamp(cos_theta, -1.0, 1.0));
        const double s = std::sin(theta);
        wa = std::sin((1.0 - t) * theta) / s;
        wb = std::sin(t * theta) / s;
    }
    return Quat{wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.z + wb * b.z}
        .normalized();
}

}  // namespace deepboard
