#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sdmforge/vec3.hpp"

namespace sdmforge {

// Regular isotropic sampling lattice. `origin` is the centre of voxel (0,0,0);
// voxel (i,j,k) is centred at origin + spacing*(i,j,k).
struct GridSpec {
    Vec3 origin{};
    double spacing = 1.0;
    int nx = 2;
    int ny = 2;
    int nz = 2;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }

    // x-fastest linear index.
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(nx) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(ny) * k);
    }

    Vec3 voxel_center(int i, int j, int k) const {
        return {origin.x + spacing * i, origin.y + spacing * j, origin.z + spacing * k};
    }

    void validate() const {
        if (!(spacing > 0.0)) throw std::invalid_argument("GridSpec: spacing must be > 0");
        if (nx < 2 || ny < 2 || nz < 2)
            throw std::invalid_argument("GridSpec: dims must be at least (2,2,2)");
        if (!origin.finite()) throw std::invalid_argument("GridSpec: origin must be finite");
    }

    bool operator==(const GridSpec& o) const {
        return origin == o.origin && spacing == o.spacing && nx == o.nx && ny == o.ny &&
               nz == o.nz;
    }
};

// Scalar field sampled on a GridSpec, x-fastest storage, 32-bit values.
struct ScalarGrid {
    GridSpec spec;
    std::vector<float> values;

    ScalarGrid() = default;
    explicit ScalarGrid(const GridSpec& s, float fill = 0.0f)
        : spec(s), values(s.voxel_count(), fill) {}

    float& at(int i, int j, int k) { return values[spec.index(i, j, k)]; }
    float at(int i, int j, int k) const { return values[spec.index(i, j, k)]; }
};

// Voxel occupancy over a GridSpec, same storage order as ScalarGrid.
struct BinaryGrid {
    GridSpec spec;
    std::vector<uint8_t> values;

    BinaryGrid() = default;
    explicit BinaryGrid(const GridSpec& s, uint8_t fill = 0)
        : spec(s), values(s.voxel_count(), fill) {}

    uint8_t& at(int i, int j, int k) { return values[spec.index(i, j, k)]; }
    uint8_t at(int i, int j, int k) const { return values[spec.index(i, j, k)]; }
};

// Paper-reported SDM range used when preparing surrogate training targets.
inline constexpr double kClampLo = -0.2;
inline constexpr double kClampHi = 1.3;

inline ScalarGrid clamp_grid(const ScalarGrid& g, double lo = kClampLo, double hi = kClampHi) {
    ScalarGrid out = g;
    const float flo = static_cast<float>(lo);
    const float fhi = static_cast<float>(hi);
    for (float& v : out.values) v = std::clamp(v, flo, fhi);
    return out;
}

}  // namespace sdmforge
