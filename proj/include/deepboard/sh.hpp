#pragma once

#include <array>

#include "deepboard/math.hpp"

namespace deepboard {

inline constexpr int kShBasisCount = 9;
inline constexpr int kColorChannels = 3;
inline constexpr int kShPerCell = kShBasisCount * kColorChannels;

// Real SH normalization constants for degrees 0-2.
inline constexpr double kShC0 = 0.28209479177387814;  // 1 / (2 sqrt(pi))
inline constexpr double kShC1 = 0.4886025119029199;
inline constexpr double kShC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                   -1.0925484305920792, 0.5462742152960396};

using ShBasis = std::array<double, kShBasisCount>;

/// Real SH basis, degrees 0-2, ordered (0,0),(1,-1),(1,0),(1,1),(2,-2),(2,-1),(2,0),(2,1),(2,2).
/// Throws NonUnitDirection if |direction| deviates from 1 by more than 1e-4.
ShBasis eval_sh_basis(const Vec3& direction);

/// Same basis without the precondition check.
inline ShBasis eval_sh_basis_unchecked(const Vec3& d) {
    const double xx = d.x * d.x, yy = d.y * d.y, zz = d.z * d.z;
    return {kShC0,
            -kShC1 * d.y,
            kShC1 * d.z,
            -kShC1 * d.x,
            kShC2[0] * d.x * d.y,
            kShC2[1] * d.y * d.z,
            kShC2[2] * (2.0 * zz - xx - yy),
            kShC2[3] * d.x * d.z,
            kShC2[4] * (xx - yy)};
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// View-dependent color of one cell: logistic of the SH expansion, per channel.
/// `coeffs` holds 3 channels x 9 coefficients, channel-major.
inline std::array<double, 3> sh_color(const float* coeffs, const ShBasis& basis) {
    std::array<double, 3> c{};
    for (int ch = 0; ch < kColorChannels; ++ch) {
        const float* k = coeffs + ch * kShBasisCount;
        double s = 0;
        for (int i = 0; i < kShBasisCount; ++i) s += k[i] * basis[i];
        c[ch] = logistic(s);
    }
    return c;
}

}  // namespace deepboard
