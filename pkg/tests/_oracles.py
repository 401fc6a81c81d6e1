"""Independent oracles the tests trust.

Everything here reaches the tested quantities by a different route than the
package: sideband couplings through the closed associated-Laguerre form, and
the master equation through a dense superoperator exponential assembled
column-by-column from the public right-hand side.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre

# frozen: <0|cos(0.2(a+a^dag) - pi/2)|1> evaluated via the Laguerre form below
FROZEN_RABI_01_OVER_OMEGA0 = 0.19603973466135105


def laguerre_rabi(omega0: float, eta: float, phi: float, n: int, k: int) -> float:
    """omega0 * <n|cos(eta(a+a^dag)+phi)|n+k> in closed form.

    The displacement-operator matrix element gives
    <n|e^{i eta(a+a^dag)}|n+k> = e^{-eta^2/2} (i eta)^k sqrt(n!/(n+k)!) L_n^k(eta^2);
    combining e^{+-i(...)} into the cosine turns i^k into cos(phi + k pi/2).
    """
    ratio = math.exp(0.5 * (math.lgamma(n + 1) - math.lgamma(n + k + 1)))
    radial = math.exp(-0.5 * eta * eta) * eta**k * ratio * eval_genlaguerre(n, k, eta * eta)
    return omega0 * radial * math.cos(phi + 0.5 * math.pi * k)


def liouvillian_matrix(rhs_of_rho, size: int) -> np.ndarray:
    """Dense generator assembled by feeding basis matrices through a linear RHS."""
    gen = np.zeros((size * size, size * size), dtype=complex)
    for j in range(size * size):
        basis = np.zeros((size, size), dtype=complex)
        basis.flat[j] = 1.0
        gen[:, j] = rhs_of_rho(basis).ravel()
    return gen


def propagate_dense(rhs_of_rho, rho0: np.ndarray, t: float) -> np.ndarray:
    gen = liouvillian_matrix(rhs_of_rho, rho0.shape[0])
    return (expm(gen * t) @ rho0.ravel()).reshape(rho0.shape)


def lindblad_rhs_explicit(hamiltonian: np.ndarray, collapse: np.ndarray, kappa: float, rho: np.ndarray) -> np.ndarray:
    """-i[H, rho] - (kappa/2) [A, [A, rho]] spelled out with dense matmuls."""
    comm_h = hamiltonian @ rho - rho @ hamiltonian
    inner = collapse @ rho - rho @ collapse
    double = collapse @ inner - inner @ collapse
    return -1j * comm_h - 0.5 * kappa * double
