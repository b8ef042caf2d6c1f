#include "deepboard/camera.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "deepboard/errors.hpp"

namespace deepboard {
namespace {

constexpr double kDegenerateDistance = 1e-9;
constexpr double kPoleTolerance = 1e-6;
constexpr double kAspectTolerance = 0.01;

std::string fmt_vec(const Vec3& v) {
    return "(" + std::to_string(v.x) + ", " + std::to_string(v.y) + ", " + std::to_string(v.z) + ")";
}

}  // namespace

Pose Pose::look_at(const Vec3& eye, const Vec3& target, const Vec3& world_up) {
    // A camera looking at the target has its back axis (+Z) on the billboard normal.
    const BillboardFrame f = billboard_orientation(eye, target, world_up);
    return {eye, Quat::from_matrix(Mat3::from_columns(f.right, f.up, f.normal))};
}

void Camera::validate() const {
    if (!(fov_y > 0 && fov_y < std::numbers::pi))
        throw InvalidArgument("fov_y must lie in (0, pi), got " + std::to_string(fov_y));
    if (width < 1 || height < 1)
        throw InvalidArgument("camera size must be at least 1x1");
    if (!(near_plane > 0 && near_plane < far_plane))
        throw InvalidArgument("need 0 < near < far");
    if (std::abs(pose.orientation.norm() - 1.0) > 1e-6)
        throw InvalidArgument("pose orientation is not a unit quaternion");
}

Ray Camera::ray_through_ndc(double ndc_x, double ndc_y) const {
    const double tan_half = std::tan(fov_y * 0.5);
    const Vec3 body{ndc_x * tan_half * aspect(), ndc_y * tan_half, -1.0};
    return {pose.position, normalize(pose.orientation.rotate(body))};
}

Ray Camera::pixel_ray(int col, int row) const {
    const double ndc_x = (col + 0.5) / width * 2.0 - 1.0;
    const double ndc_y = 1.0 - (row + 0.5) / height * 2.0;
    return ray_through_ndc(ndc_x, ndc_y);
}

std::vector<Ray> generate_rays(const Camera& camera) {
    camera.validate();
    std::vector<Ray> rays;
    rays.reserve(static_cast<size_t>(camera.width) * camera.height);
    for (int row = 0; row < camera.height; ++row)
        for (int col = 0; col < camera.width; ++col) rays.push_back(camera.pixel_ray(col, row));
    return rays;
}

std::array<Vec3, 4> BillboardQuad::corners() const {
    const Vec3 r = right * half_width;
    const Vec3 u = up * half_height;
    return {center - r + u, center + r + u, center + r - u, center - r - u};
}

BillboardFrame billboard_orientation(const Vec3& observer, const Vec3& center,
                                     const Vec3& world_up) {
    const Vec3 offset = observer - center;
    const double dist = length(offset);
    if (dist < kDegenerateDistance)
        throw DegenerateObserver("observer " + fmt_vec(observer) + " coincides with center");
    const Vec3 normal = offset / dist;

    Vec3 up_ref = world_up;
    if (std::abs(dot(up_ref, normal)) > 1.0 - kPoleTolerance) up_ref = kPoleFallbackUp;

    const Vec3 up = normalize(up_ref - normal * dot(up_ref, normal));
    return {normal, up, cross(up, normal)};
}

Camera billboard_camera(const Vec3& observer, const BillboardQuad& quad, int width, int height) {
    if (width < 1 || height < 1) throw InvalidArgument("billboard texture must be at least 1x1");
    const Vec3 offset = observer - quad.center;
    if (dot(quad.normal, offset) <= 0)
        throw BehindBillboard("observer " + fmt_vec(observer) + " is behind the quad");

    const double pixel_aspect = static_cast<double>(width) / height;
    const double quad_aspect = quad.half_width / quad.half_height;
    if (std::abs(pixel_aspect / quad_aspect - 1.0) > kAspectTolerance)
        throw AspectMismatch("pixel aspect " + std::to_string(pixel_aspect) +
                             " vs quad aspect " + std::to_string(quad_aspect));

    const double dist = length(offset);
    const Vec3 back = offset / dist;
    // Orthonormal camera frame with roll taken from the quad's up vector.
    const Vec3 up = normalize(quad.up - back * dot(quad.up, back));
    const Vec3 right = cross(up, back);

    Camera cam;
    cam.pose = {observer, Quat::from_matrix(Mat3::from_columns(right, up, back))};
    cam.fov_y = 2.0 * std::atan(quad.half_height / dist);
    cam.width = width;
    cam.height = height;
    cam.near_plane = std::max(1e-4, dist * 1e-3);
    cam.far_plane = std::max(dist * 1e3, cam.near_plane * 2);
    return cam;
}

BillboardQuad fit_billboard(const Vec3& observer, const Vec3& center, double radius, int width,
                            int height, const Vec3& world_up) {
    if (!(radius > 0)) throw InvalidArgument("billboard radius must be positive");
    const BillboardFrame f = billboard_orientation(observer, center, world_up);
    const double dist = std::max(length(observer - center), radius * 1.01);
    // Tangent cone of the bounding sphere cut by the plane through its center.
    const double half = radius * dist / std::sqrt(dist * dist - radius * radius);

    BillboardQuad q;
    q.center = center;
    q.normal = f.normal;
    q.up = f.up;
    q.right = f.right;
    const double aspect = static_cast<double>(width) / height;
    if (aspect >= 1.0) {
        q.half_height = half;
        q.half_width = half * aspect;
    } else {
        q.half_width = half;
        q.half_height = half / aspect;
    }
    return q;
}

}  // namespace deepboard
