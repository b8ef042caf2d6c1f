#include "deepboard/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "deepboard/errors.hpp"

namespace deepboard {

void RenderSettings::validate() const {
    if (step_size && !(*step_size > 0)) throw InvalidArgument("step_size must be > 0");
    if (!(early_stop_transmittance > 0 && early_stop_transmittance < 1))
        throw InvalidArgument("early_stop_transmittance must lie in (0,1)");
}

Rgba RayAccumulation::over_background(const Rgba& bg) const {
    const double back_weight = bg.a * (1.0 - alpha);
    const double a = alpha + back_weight;
    if (a <= 0) return {0, 0, 0, 0};
    auto ch = [&](int i, float b) {
        return static_cast<float>(std::clamp((premultiplied[i] + b * back_weight) / a, 0.0, 1.0));
    };
    return {ch(0, bg.r), ch(1, bg.g), ch(2, bg.b), static_cast<float>(std::clamp(a, 0.0, 1.0))};
}

Chord clip_ray(const Ray& ray, const Vec3& lo, const Vec3& hi) {
    Chord c{0.0, std::numeric_limits<double>::infinity(), false};
    for (int a = 0; a < 3; ++a) {
        const double o = ray.origin[a];
        const double d = ray.direction[a];
        if (d == 0.0) {
            if (o < lo[a] || o > hi[a]) return c;
            continue;
        }
        double t0 = (lo[a] - o) / d;
        double t1 = (hi[a] - o) / d;
        if (t0 > t1) std::swap(t0, t1);
        c.t_enter = std::max(c.t_enter, t0);
        c.t_exit = std::min(c.t_exit, t1);
    }
    c.valid = c.t_exit > c.t_enter;
    return c;
}

namespace {

/// Fixed-step sample schedule over a chord. Sample k covers
/// [t_enter + k*step, min(t_enter + (k+1)*step, t_exit)] and is evaluated at its midpoint.
struct SampleSchedule {
    double t_enter;
    double t_exit;
    double step;
    long count;

    SampleSchedule(const Chord& chord, double step_)
        : t_enter(chord.t_enter), t_exit(chord.t_exit), step(step_) {
        count = static_cast<long>(std::ceil((t_exit - t_enter) / step));
        while (count > 0 && t_enter + (count - 1) * step >= t_exit) --count;
        while (t_enter + count * step < t_exit) ++count;
    }

    bool is_last(long k) const { return k == count - 1; }

    double midpoint(long k) const {
        const double start = t_enter + k * step;
        return is_last(k) ? 0.5 * (start + t_exit) : start + 0.5 * step;
    }

    double length(long k) const { return is_last(k) ? t_exit - (t_enter + k * step) : step; }
};

/// Front-to-back emission-absorption accumulator shared by every backend.
class Accumulator {
public:
    Accumulator(const ShBasis& basis, double step, double early_stop, TransmittanceTrace* trace)
        : basis_(basis), step_(step), early_stop_(early_stop), trace_(trace) {}

    /// Adds one sample of cell `key`. Returns false once the ray is saturated.
    bool add(std::int64_t key, float sigma, const float* sh, double delta, bool full_step) {
        if (sigma <= 0.0f) return true;
        if (key != cached_key_) {
            cached_key_ = key;
            color_ = sh_color(sh, basis_);
            full_alpha_ = 1.0 - std::exp(-static_cast<double>(sigma) * step_);
        }
        const double alpha =
            full_step ? full_alpha_ : 1.0 - std::exp(-static_cast<double>(sigma) * delta);
        const double w = transmittance_ * alpha;
        for (int c = 0; c < 3; ++c) premult_[c] += w * color_[c];
        transmittance_ *= 1.0 - alpha;
        if (trace_) trace_->push_back(transmittance_);
        return transmittance_ >= early_stop_;
    }

    RayAccumulation result(double t_enter) const {
        return {{premult_[0], premult_[1], premult_[2]}, 1.0 - transmittance_, t_enter, true};
    }

private:
    ShBasis basis_;
    double step_;
    double early_stop_;
    TransmittanceTrace* trace_;
    double transmittance_ = 1.0;
    std::array<double, 3> premult_{0, 0, 0};
    std::int64_t cached_key_ = -1;
    std::array<double, 3> color_{};
    double full_alpha_ = 0;
};

}  // namespace

RayAccumulation accumulate_dense(const DenseVolume& volume, const Ray& ray,
                                 const RenderSettings& settings, TransmittanceTrace* trace) {
    const GridMapping grid = volume.grid();
    const Chord chord = clip_ray(ray, volume.aabb().lo(), volume.aabb().hi());
    if (!chord.valid) return {};

    const SampleSchedule sched(chord, settings.resolve_step(grid));
    Accumulator acc(eval_sh_basis_unchecked(ray.direction), sched.step,
                    settings.early_stop_transmittance, trace);
    for (long k = 0; k < sched.count; ++k) {
        const auto c = grid.cell_of(ray.at(sched.midpoint(k)));
        const size_t cell = volume.index(c[0], c[1], c[2]);
        if (!acc.add(static_cast<std::int64_t>(cell), volume.sigma(cell), volume.sh(cell),
                     sched.length(k), !sched.is_last(k)))
            break;
    }
    return acc.result(chord.t_enter);
}

RayAccumulation accumulate_octree(const SparseOctree& octree, const Ray& ray,
                                  const RenderSettings& settings, TransmittanceTrace* trace) {
    const GridMapping grid = octree.grid();
    const Chord chord = clip_ray(ray, octree.aabb().lo(), octree.aabb().hi());
    if (!chord.valid) return {};

    const SampleSchedule sched(chord, settings.resolve_step(grid));
    Accumulator acc(eval_sh_basis_unchecked(ray.direction), sched.step,
                    settings.early_stop_transmittance, trace);
    const int depth = octree.max_depth();

    long k = 0;
    while (k < sched.count) {
        const auto cell = grid.cell_of(ray.at(sched.midpoint(k)));
        const SparseOctree::Lookup hit = octree.find_leaf(cell);
        const SparseOctree::Node& node = *hit.node;

        if (node.leaf >= 0) {
            if (!acc.add(node.leaf, octree.leaf_sigma(node.leaf), octree.leaf_sh(node.leaf),
                         sched.length(k), !sched.is_last(k)))
                break;
            ++k;
            continue;
        }

        // Empty leaf: jump past its cell range analytically.
        const int shift = depth - hit.level;
        std::array<int, 3> base{};
        double t_leave = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) {
            base[a] = (cell[a] >> shift) << shift;
            const double d = ray.direction[a];
            if (d == 0.0) continue;
            const int boundary = d > 0 ? base[a] + (1 << shift) : base[a];
            const double plane = grid.lo[a] + boundary * grid.voxel[a];
            t_leave = std::min(t_leave, (plane - ray.origin[a]) / d);
        }
        auto inside_leaf = [&](long j) {
            const auto c = grid.cell_of(ray.at(sched.midpoint(j)));
            for (int a = 0; a < 3; ++a)
                if (c[a] < base[a] || c[a] >= base[a] + (1 << shift)) return false;
            return true;
        };

        long next = sched.count;
        if (std::isfinite(t_leave)) {
            const double est = std::ceil((t_leave - sched.t_enter) / sched.step - 0.5);
            if (est < static_cast<double>(sched.count)) next = static_cast<long>(est);
        }
        next = std::max(next, k + 1);
        // Samples inside one leaf form a contiguous run, so walking back from an
        // overshoot until we land in the leaf again is exact.
        while (next - 1 > k && !inside_leaf(next - 1)) --next;
        k = next;
    }
    return acc.result(chord.t_enter);
}

Rgba render_ray_dense(const DenseVolume& volume, const Ray& ray, const RenderSettings& settings) {
    return accumulate_dense(volume, ray, settings).over_background(settings.background);
}

Rgba render_ray_octree(const SparseOctree& octree, const Ray& ray,
                       const RenderSettings& settings) {
    return accumulate_octree(octree, ray, settings).over_background(settings.background);
}

RenderedImage render_frame(VolumeRef backend, const Camera& camera, const RenderSettings& settings,
                           int threads) {
    camera.validate();
    settings.validate();
    RenderedImage image(camera.width, camera.height);

    auto render_rows = [&](int row_begin, int row_end) {
        for (int row = row_begin; row < row_end; ++row)
            for (int col = 0; col < camera.width; ++col) {
                const Ray ray = camera.pixel_ray(col, row);
                const Rgba px = std::visit(
                    [&](auto* vol) {
                        using T = std::decay_t<decltype(*vol)>;
                        if constexpr (std::is_same_v<T, SparseOctree>)
                            return render_ray_octree(*vol, ray, settings);
                        else
                            return render_ray_dense(*vol, ray, settings);
                    },
                    backend);
                image.set(col, row, px);
            }
    };

    threads = std::clamp(threads, 1, camera.height);
    if (threads == 1) {
        render_rows(0, camera.height);
        return image;
    }
    std::vector<std::jthread> workers;
    const int rows_per = (camera.height + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        const int begin = t * rows_per;
        const int end = std::min(camera.height, begin + rows_per);
        if (begin < end) workers.emplace_back(render_rows, begin, end);
    }
    workers.clear();
    return image;
}

RenderedImage render_frame(const SparseOctree& octree, const Camera& camera,
                           const RenderSettings& settings, int threads) {
    return render_frame(VolumeRef{&octree}, camera, settings, threads);
}

RenderedImage render_frame(const DenseVolume& volume, const Camera& camera,
                           const RenderSettings& settings, int threads) {
    return render_frame(VolumeRef{&volume}, camera, settings, threads);
}

}  // namespace deepboard
