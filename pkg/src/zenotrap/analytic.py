"""Closed-form solutions of the measured sideband dynamics.

Everything here follows from the resonant-manifold (single-sideband) model:
each pair {|down, n>, |up, n+k>} evolves independently, and symmetric /
antisymmetric combinations of its four density-matrix elements obey damped
oscillator equations.  Two branched frequencies govern a manifold pair (n, m):

    w_nm = sqrt(((Omega_n + Omega_m) / 2)^2 - kappa^2 / 16)
    u_nm = sqrt(((Omega_n - Omega_m) / 2)^2 - kappa^2 / 16)

with oscillatory, critical, or hyperbolic character depending on the sign of
the radicand.  All time-dependent results share the universal damping factor
exp(-kappa t / 4), independent of the motional level.

Levels beyond the Rabi table (the k truncation-edge levels, which have no
manifold partner in the retained space) are treated as drive-decoupled,
matching what the integrator does on the same truncated space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    MotionalObservable,
    RabiTable,
    position_obs,
    position_sq_obs,
)

OSCILLATORY = "oscillatory"
CRITICAL = "critical"
HYPERBOLIC = "hyperbolic"

#: |v t| below which the sin/sinh terms switch to their two-term series.
_SERIES_CUTOVER = 1e-4


@dataclass(frozen=True)
class BranchedFrequency:
    """sqrt of a signed radicand, remembering which branch it fell on."""

    branch: str   # "oscillatory" | "critical" | "hyperbolic"
    value: float  # sqrt(|radicand|), rad/s
    radicand: float


@dataclass(frozen=True)
class ManifoldFrequencies:
    w: BranchedFrequency  # from the Rabi-sum channel
    u: BranchedFrequency  # from the Rabi-difference channel


def _classify(half_width: float, kappa: float) -> BranchedFrequency:
    q2 = (kappa / 4.0) ** 2
    radicand = half_width * half_width - q2
    scale = half_width * half_width + q2
    if scale == 0.0 or abs(radicand) <= 1e-14 * scale:
        return BranchedFrequency(CRITICAL, 0.0, radicand)
    if radicand > 0.0:
        return BranchedFrequency(OSCILLATORY, math.sqrt(radicand), radicand)
    return BranchedFrequency(HYPERBOLIC, math.sqrt(-radicand), radicand)


def _rabi_at(rabi: RabiTable, n: int) -> float:
    """Table entry, with truncation-edge levels treated as uncoupled."""
    if n < 0:
        raise ValueError(f"level index must be >= 0, got {n}")
    return float(rabi.values[n]) if n < len(rabi.values) else 0.0


def frequencies(rabi: RabiTable, kappa: float, n: int, m: int) -> ManifoldFrequencies:
    """Branched frequencies (w_nm, u_nm) of the manifold pair (n, m)."""
    om_n = _rabi_at(rabi, n)
    om_m = _rabi_at(rabi, m)
    return ManifoldFrequencies(
        w=_classify(0.5 * (om_n + om_m), kappa),
        u=_classify(0.5 * (om_n - om_m), kappa),
    )


def kappa_crit(rabi: RabiTable, n: int) -> float:
    """Measurement coupling at which manifold n turns overdamped: 4 |Omega_n|."""
    if not 0 <= n < len(rabi.values):
        raise ValueError(f"no Rabi entry for level {n} (table has {len(rabi.values)})")
    return 4.0 * abs(float(rabi.values[n]))


def envelope(freq: BranchedFrequency, kappa: float, t) -> np.ndarray:
    """Branch-aware envelope E(t) multiplying exp(-kappa t / 4).

    oscillatory:  cos(vt) + (kappa/4v) sin(vt)
    critical:     1 + (kappa/4) t
    hyperbolic:   cosh(vt) + (kappa/4v) sinh(vt)

    The sin/sinh quotients use a two-term series below |vt| < 1e-4 so the
    branches join continuously through the critical point.
    """
    t = np.asarray(t, dtype=float)
    q = kappa / 4.0
    if freq.branch == CRITICAL:
        return 1.0 + q * t
    v = freq.value
    x = v * t
    if freq.branch == OSCILLATORY:
        quotient = np.where(np.abs(x) < _SERIES_CUTOVER, q * t * (1.0 - x * x / 6.0), (q / v) * np.sin(x))
        return np.cos(x) + quotient
    quotient = np.where(np.abs(x) < _SERIES_CUTOVER, q * t * (1.0 + x * x / 6.0), (q / v) * np.sinh(x))
    return np.cosh(x) + quotient


def damped_envelope(freq: BranchedFrequency, kappa: float, t) -> np.ndarray:
    """exp(-kappa t / 4) * E(t), computed without overflow.

    The hyperbolic branch is evaluated as a sum of two decaying exponentials
    (v < kappa/4 there), so arbitrarily late times are safe.
    """
    t = np.asarray(t, dtype=float)
    q = kappa / 4.0
    if freq.branch == CRITICAL:
        return np.exp(-q * t) * (1.0 + q * t)
    v = freq.value
    x = v * t
    if freq.branch == OSCILLATORY:
        quotient = np.where(np.abs(x) < _SERIES_CUTOVER, q * t * (1.0 - x * x / 6.0), (q / v) * np.sin(x))
        return np.exp(-q * t) * (np.cos(x) + quotient)
    small = np.abs(x) < _SERIES_CUTOVER
    x_ser = np.where(small, x, 0.0)  # keep the discarded side of the where() finite
    series = np.exp(-q * t) * (np.cosh(x_ser) + q * t * (1.0 + x_ser * x_ser / 6.0))
    direct = 0.5 * (1.0 + q / v) * np.exp(-(q - v) * t) + 0.5 * (1.0 - q / v) * np.exp(-(q + v) * t)
    return np.where(small, series, direct)


# ---------------------------------------------------------------------------
# time-dependent closed forms
# ---------------------------------------------------------------------------

def p_down(t, diag0, rabi: RabiTable, kappa: float) -> np.ndarray:
    """Ground-level electronic population for a spin-down initial state.

    P(t) = (1/2) {1 + exp(-kappa t/4) sum_n diag0[n] E(t; w_nn)}.

    ``diag0`` is the initial motional level distribution (sums to 1 on the
    truncated space); only the distribution enters, never the coherences.
    """
    t = np.asarray(t, dtype=float)
    diag0 = np.asarray(diag0, dtype=float)
    total = np.zeros_like(t)
    for n, weight in enumerate(diag0):
        if weight == 0.0:
            continue
        w_nn = _classify(_rabi_at(rabi, n), kappa)
        total = total + weight * damped_envelope(w_nn, kappa, t)
    return 0.5 * (1.0 + total)


def p_down_fock(t, n: int, rabi: RabiTable, kappa: float) -> np.ndarray:
    """P(t) for the pure initial level |down, n>."""
    if n < 0:
        raise ValueError(f"level index must be >= 0, got {n}")
    w_nn = _classify(_rabi_at(rabi, n), kappa)
    return 0.5 * (1.0 + damped_envelope(w_nn, kappa, np.asarray(t, dtype=float)))


def mean_energy(t, diag0, rabi: RabiTable, kappa: float) -> np.ndarray:
    """Motional energy in units of hbar*omega.

    <H>(t) = (nbar + 1/2 + k/2) - (k/2) exp(-kappa t/4) sum_n diag0[n] E(t; w_nn).
    Starts at nbar + 1/2 exactly; for k = 0 it is constant for every kappa.
    """
    t = np.asarray(t, dtype=float)
    diag0 = np.asarray(diag0, dtype=float)
    k = rabi.k_sideband
    nbar = float(np.arange(len(diag0)) @ diag0)
    if k == 0:
        return np.full_like(t, nbar + 0.5)
    total = np.zeros_like(t)
    for n, weight in enumerate(diag0):
        if weight == 0.0:
            continue
        w_nn = _classify(_rabi_at(rabi, n), kappa)
        total = total + weight * damped_envelope(w_nn, kappa, t)
    return (nbar + 0.5 + 0.5 * k) - 0.5 * k * total


def mean_position(t, coherences0, rabi: RabiTable, kappa: float, omega: float) -> np.ndarray:
    """Mean position in x0 units.

    <x>(t) = exp(-kappa t/4) sum_n Re{ exp(i omega t) c_n [
                 (sqrt(n+k+1) + sqrt(n+1)) E(t; u_{n,n+1})
               - (sqrt(n+k+1) - sqrt(n+1)) E(t; w_{n,n+1}) ] }

    where c_n = <n| rho_motional(0) |n+1> is the first superdiagonal of the
    initial motional state.  At t = 0 this reduces to the plain expectation
    2 sum_n sqrt(n+1) Re c_n.  Every coherence entry must belong to a manifold
    pair fully inside the Rabi table; trim tail entries (they are bounded by
    the truncation budget) before calling.
    """
    t = np.asarray(t, dtype=float)
    coherences0 = np.asarray(coherences0, dtype=complex)
    k = rabi.k_sideband
    if len(coherences0) > max(0, len(rabi.values) - 1):
        raise ValueError(
            f"{len(coherences0)} coherence entries need Rabi entries up to level "
            f"{len(coherences0)}, table has {len(rabi.values)}"
        )
    carrier = np.exp(1j * omega * t)
    total = np.zeros_like(t)
    for n, c in enumerate(coherences0):
        if c == 0.0:
            continue
        pair = frequencies(rabi, kappa, n, n + 1)
        plus = math.sqrt(n + k + 1.0) + math.sqrt(n + 1.0)
        minus = math.sqrt(n + k + 1.0) - math.sqrt(n + 1.0)
        payload = plus * damped_envelope(pair.u, kappa, t) - minus * damped_envelope(pair.w, kappa, t)
        total = total + np.real(carrier * c * payload)
    return total


# ---------------------------------------------------------------------------
# asymptotics
# ---------------------------------------------------------------------------

def asymptotic_mean(obs: MotionalObservable, diag0, k_sideband: int) -> float:
    """Long-time limit of a motional observable under kappa > 0 measurement.

    lim <O> = (1/2) sum_n diag0[n] (<n|O|n> + <n+k|O|n+k>): the motional state
    settles into an even mixture of each initial level with its sideband
    partner, losing all coherences.
    """
    diag0 = np.asarray(diag0, dtype=float)
    d = np.real(np.diagonal(obs.matrix))
    if len(d) < len(diag0) + k_sideband:
        raise ValueError(
            f"observable on {len(d)} levels cannot address level "
            f"{len(diag0) - 1 + k_sideband}; enlarge it"
        )
    n = np.arange(len(diag0))
    return float(0.5 * np.sum(diag0 * (d[n] + d[n + k_sideband])))


@dataclass(frozen=True)
class PositionVarianceAsymptote:
    """Both normalizations of the long-time position variance, in x0^2.

    ``equipartition_value`` follows from the asymptotic level mixture and is
    the one consistent with energy equipartition; ``double_value`` is exactly
    twice that and is retained so downstream checks can adjudicate between
    the two conventions.
    """

    equipartition_value: float
    double_value: float


def asymptotic_position_variance(diag0, k_sideband: int) -> PositionVarianceAsymptote:
    diag0 = np.asarray(diag0, dtype=float)
    dim = len(diag0) + k_sideband + 1
    x = position_obs(dim)
    x2 = position_sq_obs(dim)
    mean = asymptotic_mean(x, diag0, k_sideband)
    var = asymptotic_mean(x2, diag0, k_sideband) - mean * mean
    return PositionVarianceAsymptote(equipartition_value=var, double_value=2.0 * var)


# ---------------------------------------------------------------------------
# equipartition diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquipartitionReport:
    stationary: bool          # every channel settled over the tail window
    equipartition: bool       # the three energy shares agree within tol
    max_pairwise_dev: float   # hbar*omega
    tail_drift: dict[str, float]
    tail_means: dict[str, float]
    tail_start_index: int


def equipartition_check(series, tail_fraction: float = 0.25, tol: float = 1e-4) -> EquipartitionReport:
    """Compare E/2, <x^2>/4 and <p^2>/4 (all in hbar*omega) over the run tail.

    ``series`` must provide channels ``mean_energy``, ``position_sq`` and
    ``momentum_sq``.  "Stationary" means each share drifts by less than
    10*tol across the tail window; a kappa = 0 run typically fails that flag.
    """
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError(f"tail_fraction must be in (0, 1], got {tail_fraction}")
    for name in ("mean_energy", "position_sq", "momentum_sq"):
        if name not in series.channels:
            raise ValueError(f"series lacks required channel {name!r}")
    start = int(round(len(series.times) * (1.0 - tail_fraction)))
    start = min(max(start, 0), len(series.times) - 1)
    shares = {
        "energy_half": series.channels["mean_energy"][start:] / 2.0,
        "position_sq_quarter": series.channels["position_sq"][start:] / 4.0,
        "momentum_sq_quarter": series.channels["momentum_sq"][start:] / 4.0,
    }
    drift = {name: float(np.max(vals) - np.min(vals)) for name, vals in shares.items()}
    means = {name: float(np.mean(vals)) for name, vals in shares.items()}
    names = list(shares)
    pair_dev = 0.0
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            pair_dev = max(pair_dev, float(np.max(np.abs(shares[names[i]] - shares[names[j]]))))
    return EquipartitionReport(
        stationary=all(v <= 10.0 * tol for v in drift.values()),
        equipartition=pair_dev <= tol,
        max_pairwise_dev=pair_dev,
        tail_drift=drift,
        tail_means=means,
        tail_start_index=start,
    )
