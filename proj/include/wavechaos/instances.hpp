#pragma once

// Random kernels and functionals for identity sweeps.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "chaos_algebra.hpp"
#include "malliavin_ops.hpp"

namespace wavechaos {

class InstanceGenerator {
public:
    InstanceGenerator(std::uint64_t seed, std::size_t cells) : rng_(seed), cells_(cells)
    {
        require(cells >= 1, "instance generator needs at least one cell");
    }

    std::mt19937_64& rng() { return rng_; }

    double coeff() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }

    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    // Up to `terms` off-diagonal tuples of order n with N(0,1) coefficients.
    SymmetricKernel kernel(int n, int terms = 4)
    {
        require(static_cast<std::size_t>(n) <= cells_, "kernel order exceeds cell count");
        SymmetricKernel f(n);
        for (int k = 0; k < terms; ++k) f.add(distinct(n), coeff());
        return f;
    }

    // Degree exactly `deg` (unless cancelled), up to `terms` monomials with repeated cells allowed.
    PolynomialFunctional polynomial(int deg, int terms = 4)
    {
        PolynomialFunctional p(coeff());
        for (int k = 0; k < terms; ++k) {
            int dk = k == 0 ? deg : uniform_int(0, deg);
            Monomial m;
            for (int j = 0; j < dk; ++j) m.push_back(cell());
            std::sort(m.begin(), m.end());
            p.add(m, coeff());
        }
        return p;
    }

    HPValuedFunctional hp(int deg, int components = 3)
    {
        HPValuedFunctional u;
        for (int k = 0; k < components; ++k) u.add(cell(), polynomial(deg, 3));
        return u;
    }

    HP2ValuedFunctional hp2(int deg, int components = 3)
    {
        HP2ValuedFunctional U;
        for (int k = 0; k < components; ++k) U.add(cell(), cell(), polynomial(deg, 3));
        return U;
    }

    CellIndex cell() { return static_cast<CellIndex>(std::uniform_int_distribution<std::size_t>(0, cells_ - 1)(rng_)); }

private:
    std::vector<CellIndex> distinct(int n)
    {
        std::vector<CellIndex> all(cells_);
        std::iota(all.begin(), all.end(), 0);
        std::shuffle(all.begin(), all.end(), rng_);
        return {all.begin(), all.begin() + n};
    }

    std::mt19937_64 rng_;
    std::size_t cells_;
};

} // namespace wavechaos
