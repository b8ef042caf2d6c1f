#include <cmath>

#include "deepboard/client.hpp"
#include "deepboard/errors.hpp"

namespace deepboard {

RenderedImage composite_billboard(const RenderedImage& background, const BillboardQuad& quad,
                                  const RenderedImage& texture, const Camera& camera) {
    if (background.width() != camera.width || background.height() != camera.height)
        throw DimensionMismatch("background does not match the camera size");
    RenderedImage out = background;
    if (dot(quad.normal, camera.pose.position - quad.center) <= 0) return out;
    if (texture.width() == 0 || texture.height() == 0) return out;

    const int tw = texture.width(), th = texture.height();
    for (int row = 0; row < camera.height; ++row)
        for (int col = 0; col < camera.width; ++col) {
            const Ray ray = camera.pixel_ray(col, row);
            const double denom = dot(ray.direction, quad.normal);
            if (denom >= 0) continue;
            const double t = dot(quad.center - ray.origin, quad.normal) / denom;
            if (t <= 0) continue;
            const Vec3 local = ray.at(t) - quad.center;
            const double u = dot(local, quad.right) / quad.half_width;
            const double v = dot(local, quad.up) / quad.half_height;
            if (u < -1 || u > 1 || v < -1 || v > 1) continue;
            const int tx = std::min(tw - 1, static_cast<int>(std::floor((u + 1) * 0.5 * tw)));
            const int ty = std::min(th - 1, static_cast<int>(std::floor((1 - v) * 0.5 * th)));
            out.set(col, row, over(texture.at(tx, ty), out.at(col, row)));
        }
    return out;
}

double psnr(const RenderedImage& a, const RenderedImage& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionMismatch(std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                                " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
    const auto pa = a.data(), pb = b.data();
    double sum = 0;
    for (size_t i = 0; i < pa.size(); i += 4)
        for (int c = 0; c < 3; ++c) {
            const double d = double(pa[i + c]) - double(pb[i + c]);
            sum += d * d;
        }
    const size_t n = pa.size() / 4 * 3;
    if (n == 0 || sum == 0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(double(n) / sum));
}

}  // namespace deepboard
