#include "deepboard/sh.hpp"

#include <cmath>
#include <string>

#include "deepboard/errors.hpp"

namespace deepboard {

ShBasis eval_sh_basis(const Vec3& direction) {
    const double len = length(direction);
    if (!(std::abs(len - 1.0) <= 1e-4))
        throw NonUnitDirection("|direction| = " + std::to_string(len));
    return eval_sh_basis_unchecked(direction);
}

}  // namespace deepboard
