#pragma once

#include <cstddef>
#include <vector>

#include "nclosure/linalg.hpp"
#include "nclosure/models/burgers.hpp"

namespace ncm {

/// Mean-subtracted proper orthogonal decomposition of a snapshot set.
struct PodBasis {
    Vec mean;
    Mat modes;   // N x m, orthonormal columns
    Vec sigma;   // all singular values of the centered snapshot matrix
    std::size_t m = 0;

    /// Σ_{i<k} σ_i² / Σ σ_i².
    double energy_fraction(std::size_t k) const;
    /// Σ_{i<k} σ_i / Σ σ_i, the measure behind the 60.8% three-mode figure for the advecting shock.
    double singular_value_fraction(std::size_t k) const;
    Vec project(const Vec& u) const;          // Vᵀ(u − ū)
    Vec reconstruct(const Vec& a) const;      // ū + V a
};

/// Snapshots are the columns u(·, T_i). Keeps `m` modes (all when m = 0).
PodBasis compute_pod(const std::vector<Vec>& snapshots, std::size_t m);

/// da_k/dt = b_k + A_ki a_i + N_kij a_i a_j.
struct GalerkinTensors {
    std::size_t m = 0;
    Vec b;  // m
    Mat A;  // m x m
    Vec N;  // m·m·m, index (k·m + i)·m + j
};

/// Projection of the Burgers equation with central first and second differences.
GalerkinTensors galerkin_tensors(const PodBasis& basis, const BurgersConfig& cfg);
Vec rom_rhs(const Vec& a, const GalerkinTensors& g);
/// wᵀ ∂rom_rhs/∂a.
Vec rom_vjp(const Vec& a, const Vec& w, const GalerkinTensors& g);
/// Direct evaluation Vᵀ R(ū + V a) with the same stencils, without the tensors.
Vec rom_rhs_direct(const Vec& a, const PodBasis& basis, const BurgersConfig& cfg);

}  // namespace ncm
