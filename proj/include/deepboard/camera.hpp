#pragma once

#include <vector>

#include "deepboard/math.hpp"

namespace deepboard {

inline constexpr Vec3 kWorldUp{0.0, 1.0, 0.0};
/// Substitute for world_up when the observer sits on the billboard's pole.
inline constexpr Vec3 kPoleFallbackUp{0.0, 0.0, -1.0};

struct Pose {
    Vec3 position;
    Quat orientation;

    /// Camera convention: looks down body -Z, body +Y is up, body +X is right.
    Vec3 forward() const { return orientation.rotate({0, 0, -1}); }
    Vec3 up() const { return orientation.rotate({0, 1, 0}); }
    Vec3 right() const { return orientation.rotate({1, 0, 0}); }

    /// Pose at `eye` looking at `target`. Throws DegenerateObserver if they coincide.
    static Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& world_up = kWorldUp);
};

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length

    Vec3 at(double t) const { return origin + direction * t; }
};

/// Pinhole camera. Image origin is the top-left pixel, rows run downward.
struct Camera {
    Pose pose;
    double fov_y = 1.0;
    int width = 1;
    int height = 1;
    double near_plane = 0.01;
    double far_plane = 1000.0;

    /// Validates the type invariants; throws InvalidArgument.
    void validate() const;

    double aspect() const { return static_cast<double>(width) / height; }

    /// Ray through normalized device coordinates, x right and y up, both in [-1,1].
    Ray ray_through_ndc(double ndc_x, double ndc_y) const;

    /// Ray through the center of pixel (col,row).
    Ray pixel_ray(int col, int row) const;
};

/// Row-major width*height rays through the pixel centers.
std::vector<Ray> generate_rays(const Camera& camera);

struct BillboardQuad {
    Vec3 center;
    double half_width = 1;
    double half_height = 1;
    Vec3 normal{0, 0, 1};
    Vec3 up{0, 1, 0};
    Vec3 right{1, 0, 0};

    /// Corners in the order top-left, top-right, bottom-right, bottom-left.
    std::array<Vec3, 4> corners() const;
};

struct BillboardFrame {
    Vec3 normal;
    Vec3 up;
    Vec3 right;
};

/// Full spherical billboard frame: normal points at the observer, roll is
/// stabilized by world_up. Within 1e-6 of the pole, kPoleFallbackUp replaces world_up.
BillboardFrame billboard_orientation(const Vec3& observer, const Vec3& center,
                                     const Vec3& world_up = kWorldUp);

/// Camera at the observer whose frustum passes exactly through the quad's edges.
/// Rendering with it and pasting the image onto the quad reproduces the direct view.
Camera billboard_camera(const Vec3& observer, const BillboardQuad& quad, int width, int height);

/// Smallest observer-facing quad through `center` that covers the silhouette of a
/// sphere of `radius` seen from `observer`, with pixel aspect width/height.
/// Observers inside 1.01*radius are treated as if they stood at that distance.
BillboardQuad fit_billboard(const Vec3& observer, const Vec3& center, double radius, int width,
                            int height, const Vec3& world_up = kWorldUp);

}  // namespace deepboard
