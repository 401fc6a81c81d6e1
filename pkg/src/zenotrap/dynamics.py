"""Time evolution of the measured, driven ion.

The master equation is

    d rho / dt = -i [H(t), rho] - (kappa / 2) [A, [A, rho]],    A = |down><down|,

whose measurement part damps the electronic coherence blocks at kappa/2 and
leaves populations untouched.  Two drive models are available:

* ``ReducedJCM`` keeps only the resonant sideband couplings
  Omega_n |down, n><up, n+k| + h.c.; each manifold pair evolves independently.
* ``FullCoupling`` keeps every coupling element <n|cos(eta(a+a^dag)+phi)|n+dn>
  with |dn| <= sideband_cutoff, oscillating at (k - dn) * omega relative to
  resonance.

Frames.  The public ``jcm_rhs`` is written in the laser frame: the optical
phases exp(+/- i omega_L t) are absorbed into the electronic coherences, so
the generator is time-independent while mechanical rotations -i omega (n - m)
remain on the state.  The public ``full_rhs`` is written in the interaction
picture of the free Hamiltonian, where those rotations live in the coupling
phases instead.  ``integrate`` always propagates in the interaction picture
(the two differ by a diagonal unitary with phases at multiples of omega t,
reattached exactly at sample times) because resolving omega-scale rotations
in the state would dominate the step count for nothing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import StiffnessError, TruncationError
from .hilbert import (
    RabiTable,
    TrapParams,
    VibronicDensityMatrix,
    coupling_matrix,
    momentum_obs,
    momentum_sq_obs,
    parity_obs,
    position_obs,
    position_sq_obs,
    rabi_table,
)

# ---------------------------------------------------------------------------
# modes and configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReducedJCM:
    """Resonant-manifold drive model (single sideband, time-independent)."""


@dataclass(frozen=True)
class FullCoupling:
    """All sideband couplings with |dn| <= sideband_cutoff.

    ``sideband_cutoff=None`` means the default k + 4; couplings fall off as
    eta^|dn| so a few orders beyond the resonant one capture the physics.
    """

    sideband_cutoff: int | None = None


DynamicsMode = ReducedJCM | FullCoupling

ADAPTIVE = "adaptive"
FIXED_RK4 = "rk4"


@dataclass(frozen=True)
class IntegratorConfig:
    sample_times: np.ndarray
    method: str = ADAPTIVE
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = math.inf
    tail_budget: float = 1e-8
    track_spectrum: bool = True

    def __post_init__(self) -> None:
        times = np.asarray(self.sample_times, dtype=float)
        object.__setattr__(self, "sample_times", times)
        if times.ndim != 1 or len(times) < 1:
            raise ValueError("sample_times must be a non-empty 1-D array")
        if times[0] != 0.0:
            raise ValueError(f"sample_times must start at 0, got {times[0]}")
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("sample_times must be strictly increasing")
        if self.method not in (ADAPTIVE, FIXED_RK4):
            raise ValueError(f"method must be '{ADAPTIVE}' or '{FIXED_RK4}', got {self.method!r}")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step <= 0:
            raise ValueError(f"max_step must be positive, got {self.max_step}")
        if self.method == FIXED_RK4 and not math.isfinite(self.max_step):
            raise ValueError("the fixed-step method needs a finite max_step")


@dataclass
class TimeSeries:
    """Sampled observables of one run; every channel matches ``times`` in length."""

    times: np.ndarray
    channels: dict[str, np.ndarray]
    units: dict[str, str]
    provenance: str  # "numeric-JCM" | "numeric-full" | "analytic"
    metadata: dict = field(default_factory=dict)

    def channel(self, name: str) -> np.ndarray:
        return self.channels[name]


CHANNEL_UNITS = {
    "P_down": "1",
    "mean_position": "x0",
    "mean_momentum": "p0",
    "mean_energy": "hbar*omega",
    "mean_number": "1",
    "position_sq": "x0^2",
    "momentum_sq": "p0^2",
    "position_variance": "x0^2",
    "momentum_variance": "p0^2",
    "uncertainty_product": "hbar",
    "parity": "1",
    "purity": "1",
    "trace_error": "1",
    "herm_error": "1",
    "min_eigenvalue": "1",
    "tail_mass": "1",
}


# ---------------------------------------------------------------------------
# right-hand sides
# ---------------------------------------------------------------------------


def _as_matrix(rho) -> np.ndarray:
    if isinstance(rho, VibronicDensityMatrix):
        return rho.data
    return np.asarray(rho, dtype=complex)


def _frame_phases(dim: int, k: int, omega: float) -> np.ndarray:
    """Interaction-picture phase rates per basis index: omega n - k omega S."""
    n = np.arange(dim, dtype=float)
    return np.concatenate([omega * n, omega * n - k * omega])


def _make_jcm_interaction_rhs(
    dim: int, k: int, values: np.ndarray, kappa: float
) -> Callable[[float, np.ndarray], np.ndarray]:
    """Interaction-picture generator of the resonant-manifold model.

    The drive is the static rung operator b with <down,n|b|up,n+k> = Omega_n/2
    for every complete manifold pair in the Rabi table; truncation-edge levels
    and the dark |up, j<k> populations stay un-driven, while coherences that
    touch a dark level still precess through the level's manifold partner.
    Electronic coherences damp at kappa/2 everywhere.
    """
    r = len(values)
    b = np.zeros((dim, dim))
    rows = np.arange(r)
    b[rows, rows + k] = 0.5 * np.asarray(values, dtype=float)
    bh = b.T
    q = 0.5 * kappa
    size = 2 * dim

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(size, size)
        d_blk = rho[:dim, :dim]
        u_blk = rho[dim:, dim:]
        x_blk = rho[:dim, dim:]
        y_blk = rho[dim:, :dim]
        out = np.empty_like(rho)
        out[:dim, :dim] = -1j * (b @ y_blk - x_blk @ bh)
        out[dim:, dim:] = -1j * (bh @ x_blk - y_blk @ b)
        out[:dim, dim:] = -1j * (b @ u_blk - d_blk @ b) - q * x_blk
        out[dim:, :dim] = -1j * (bh @ d_blk - u_blk @ bh) - q * y_blk
        return out.ravel()

    return rhs


def _make_full_interaction_rhs(
    dim: int, k: int, coupling_cut: np.ndarray, omega: float, omega0: float, kappa: float
) -> Callable[[float, np.ndarray], np.ndarray]:
    """Interaction-picture generator with every retained sideband coupling."""
    half_c = 0.5 * omega0 * coupling_cut
    q = 0.5 * kappa
    n_idx = np.arange(dim, dtype=float)
    size = 2 * dim

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(size, size)
        d = np.exp((1j * omega * t) * n_idx)
        b = (half_c * np.exp(1j * omega * k * t)) * np.outer(d, d.conj())
        bh = b.conj().T
        d_blk = rho[:dim, :dim]
        u_blk = rho[dim:, dim:]
        x_blk = rho[:dim, dim:]
        y_blk = rho[dim:, :dim]
        out = np.empty_like(rho)
        out[:dim, :dim] = -1j * (b @ y_blk - x_blk @ bh)
        out[dim:, dim:] = -1j * (bh @ x_blk - y_blk @ b)
        out[:dim, dim:] = -1j * (b @ u_blk - d_blk @ b) - q * x_blk
        out[dim:, :dim] = -1j * (bh @ d_blk - u_blk @ bh) - q * y_blk
        return out.ravel()

    return rhs


def jcm_rhs(rho, params: TrapParams, rabi: RabiTable) -> np.ndarray:
    """Laser-frame derivative of the resonant-manifold master equation.

    Population blocks carry the +/- (i/2) Omega couplings of their manifold,
    electronic coherences additionally damp at kappa/2, and every element
    rotates at -i omega (n - m) (with the up-manifold offset), i.e. the
    mechanical rotation stays on the state while the generator itself is
    time-independent.
    """
    mat = _as_matrix(rho)
    dim = mat.shape[0] // 2
    k = rabi.k_sideband
    if k != params.k_sideband:
        raise ValueError(f"rabi table is for k={rabi.k_sideband}, params have k={params.k_sideband}")
    if len(rabi.values) < dim - k:
        raise ValueError(
            f"rabi table covers {len(rabi.values)} manifolds, need {dim - k} for dim_fock={dim}"
        )
    base = _make_jcm_interaction_rhs(dim, k, np.asarray(rabi.values[: dim - k], dtype=float), params.kappa)
    out = base(0.0, mat.ravel()).reshape(mat.shape)
    phases = _frame_phases(dim, k, params.omega)
    out -= 1j * (phases[:, None] - phases[None, :]) * mat
    return out


def full_rhs(rho, params: TrapParams, t: float, mode: FullCoupling, coupling: np.ndarray | None = None) -> np.ndarray:
    """Interaction-picture derivative with all retained sideband couplings.

    ``coupling`` may pass a precomputed cos(eta(a+a^dag)+phi) matrix to avoid
    rebuilding it per call; it is masked to |dn| <= sideband_cutoff here.
    """
    mat = _as_matrix(rho)
    dim = mat.shape[0] // 2
    cutoff = mode.sideband_cutoff if mode.sideband_cutoff is not None else params.k_sideband + 4
    if cutoff < params.k_sideband:
        raise ValueError(f"sideband_cutoff ({cutoff}) must be >= k_sideband ({params.k_sideband})")
    if coupling is None:
        coupling = coupling_matrix(params, dim)
    cut = _mask_coupling(np.asarray(coupling, dtype=float), cutoff)
    base = _make_full_interaction_rhs(dim, params.k_sideband, cut, params.omega, params.omega0, params.kappa)
    return base(t, mat.ravel()).reshape(mat.shape)


def _mask_coupling(coupling: np.ndarray, cutoff: int) -> np.ndarray:
    n = np.arange(coupling.shape[0])
    keep = np.abs(n[:, None] - n[None, :]) <= cutoff
    return np.where(keep, coupling, 0.0)


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def _fixed_rk4(rhs, y0: np.ndarray, times: np.ndarray, h_max: float) -> np.ndarray:
    """Classical 4th-order steps, landing exactly on every sample time."""
    out = np.empty((len(times), len(y0)), dtype=complex)
    out[0] = y0
    y = y0.copy()
    for i in range(len(times) - 1):
        t, t_next = times[i], times[i + 1]
        n_sub = max(1, math.ceil((t_next - t) / h_max))
        h = (t_next - t) / n_sub
        for j in range(n_sub):
            tj = t + j * h
            k1 = rhs(tj, y)
            k2 = rhs(tj + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(tj + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(tj + h, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = y
    return out


def integrate(
    rho0: VibronicDensityMatrix,
    params: TrapParams,
    mode: DynamicsMode,
    config: IntegratorConfig,
) -> tuple[TimeSeries, VibronicDensityMatrix]:
    """Propagate ``rho0`` and sample the observable channels.

    Returns the sampled :class:`TimeSeries` (laser frame, so positions carry
    their omega rotation) and the final state.  Raises
    :class:`TruncationError` if population reaches the truncation edge beyond
    the configured budget and :class:`StiffnessError` if the adaptive solver
    stalls.
    """
    dim = rho0.dim_fock
    k = params.k_sideband
    if rho0.trace_error() > 1e-10:
        raise ValueError(f"initial state trace deviates by {rho0.trace_error():.3e}")
    if rho0.herm_defect() > 1e-10:
        raise ValueError(f"initial state hermiticity defect {rho0.herm_defect():.3e}")
    tail0 = rho0.tail_mass(k)
    if tail0 > config.tail_budget:
        raise TruncationError(
            f"initial state holds {tail0:.3e} at the truncation edge (budget {config.tail_budget:.1e})",
        )

    if isinstance(mode, ReducedJCM):
        rabi = rabi_table(params, dim)
        rhs = _make_jcm_interaction_rhs(dim, k, rabi.values, params.kappa)
        provenance = "numeric-JCM"
        mode_label = "jcm"
    elif isinstance(mode, FullCoupling):
        cutoff = mode.sideband_cutoff if mode.sideband_cutoff is not None else k + 4
        if cutoff < k:
            raise ValueError(f"sideband_cutoff ({cutoff}) must be >= k_sideband ({k})")
        cut = _mask_coupling(coupling_matrix(params, dim), cutoff)
        rhs = _make_full_interaction_rhs(dim, k, cut, params.omega, params.omega0, params.kappa)
        provenance = "numeric-full"
        mode_label = f"full(cutoff={cutoff})"
    else:
        raise TypeError(f"unknown dynamics mode: {mode!r}")

    times = config.sample_times
    y0 = rho0.data.astype(complex).ravel()
    if len(times) == 1:
        samples = y0[None, :]
    elif config.method == FIXED_RK4:
        samples = _fixed_rk4(rhs, y0, times, config.max_step)
    else:
        sol = solve_ivp(
            rhs,
            (times[0], times[-1]),
            y0,
            method="RK45",
            t_eval=times,
            rtol=config.rel_tol,
            atol=config.abs_tol,
            max_step=config.max_step,
        )
        if not sol.success:
            reached = float(sol.t[-1]) if len(sol.t) else 0.0
            exc = StiffnessError(f"adaptive integrator stalled at t={reached:.6e} s: {sol.message}", reached)
            if len(sol.t):
                try:
                    exc.partial = _sample_channels(
                        sol.y.T, np.asarray(sol.t), dim, k, params, config, provenance
                    )
                except TruncationError:
                    pass
            raise exc
        samples = sol.y.T

    series = _sample_channels(samples, times, dim, k, params, config, provenance)
    series.metadata.update(
        {
            "dim_fock": dim,
            "mode": mode_label,
            "method": config.method,
            "rel_tol": config.rel_tol,
            "abs_tol": config.abs_tol,
        }
    )
    final = _to_laser_frame(samples[-1].reshape(2 * dim, 2 * dim), times[-1], dim, k, params.omega)
    return series, VibronicDensityMatrix(final, dim_fock=dim)


def _to_laser_frame(rho_hat: np.ndarray, t: float, dim: int, k: int, omega: float) -> np.ndarray:
    phases = _frame_phases(dim, k, omega)
    d = np.exp(-1j * phases * t)
    return (d[:, None] * rho_hat) * d.conj()[None, :]


def _sample_channels(
    samples: np.ndarray,
    times: np.ndarray,
    dim: int,
    k: int,
    params: TrapParams,
    config: IntegratorConfig,
    provenance: str,
) -> TimeSeries:
    x_m = position_obs(dim).matrix
    p_m = momentum_obs(dim).matrix
    x2_m = position_sq_obs(dim).matrix
    p2_m = momentum_sq_obs(dim).matrix
    par_m = np.real(np.diagonal(parity_obs(dim).matrix))
    n_plus_half = np.arange(dim) + 0.5
    n_levels = np.arange(dim, dtype=float)
    edge = max(0, dim - 1 - k)

    names = list(CHANNEL_UNITS)
    data = {name: np.empty(len(times)) for name in names}

    for i, t in enumerate(times):
        rho = _to_laser_frame(samples[i].reshape(2 * dim, 2 * dim), t, dim, k, params.omega)
        d_blk = rho[:dim, :dim]
        u_blk = rho[dim:, dim:]
        rho_cm = d_blk + u_blk
        diag = np.real(np.diagonal(rho_cm))

        data["P_down"][i] = np.real(np.trace(d_blk))
        data["mean_position"][i] = np.real(np.einsum("ij,ji->", rho_cm, x_m))
        data["mean_momentum"][i] = np.real(np.einsum("ij,ji->", rho_cm, p_m))
        data["mean_energy"][i] = n_plus_half @ diag
        data["mean_number"][i] = n_levels @ diag
        x2 = np.real(np.einsum("ij,ji->", rho_cm, x2_m))
        p2 = np.real(np.einsum("ij,ji->", rho_cm, p2_m))
        data["position_sq"][i] = x2
        data["momentum_sq"][i] = p2
        var_x = x2 - data["mean_position"][i] ** 2
        var_p = p2 - data["mean_momentum"][i] ** 2
        data["position_variance"][i] = var_x
        data["momentum_variance"][i] = var_p
        data["uncertainty_product"][i] = 0.5 * math.sqrt(max(0.0, var_x) * max(0.0, var_p))
        data["parity"][i] = par_m @ diag
        data["purity"][i] = float(np.sum(np.abs(rho) ** 2))
        data["trace_error"][i] = abs(np.trace(rho) - 1.0)
        data["herm_error"][i] = float(np.max(np.abs(rho - rho.conj().T)))
        if config.track_spectrum:
            data["min_eigenvalue"][i] = float(np.min(np.linalg.eigvalsh(rho)))
        else:
            data["min_eigenvalue"][i] = math.nan
        full_diag = np.real(np.diagonal(rho))
        tail = float(np.sum(full_diag[edge:dim]) + np.sum(full_diag[dim + edge :]))
        data["tail_mass"][i] = tail
        if tail > config.tail_budget:
            exc = TruncationError(
                f"tail mass {tail:.3e} exceeded budget {config.tail_budget:.1e} at t={t:.6e} s"
            )
            exc.partial = TimeSeries(
                times=times[: i + 1].copy(),
                channels={name: arr[: i + 1].copy() for name, arr in data.items()},
                units=dict(CHANNEL_UNITS),
                provenance=provenance,
            )
            raise exc

    return TimeSeries(
        times=times.copy(),
        channels=data,
        units=dict(CHANNEL_UNITS),
        provenance=provenance,
    )


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateDiagnostics:
    trace_error: float
    herm_defect: float
    min_eigenvalue: float
    tail_mass: float
    trace_ok: bool
    herm_ok: bool
    positive_ok: bool
    tail_ok: bool

    @property
    def passed(self) -> bool:
        return self.trace_ok and self.herm_ok and self.positive_ok and self.tail_ok


def sanity_report(
    rho: VibronicDensityMatrix,
    k_sideband: int = 0,
    tail_budget: float = 1e-8,
) -> StateDiagnostics:
    """Point-in-time health check of a joint density matrix."""
    trace_error = rho.trace_error()
    herm = rho.herm_defect()
    min_eig = rho.min_eigenvalue()
    tail = rho.tail_mass(k_sideband)
    return StateDiagnostics(
        trace_error=trace_error,
        herm_defect=herm,
        min_eigenvalue=min_eig,
        tail_mass=tail,
        trace_ok=trace_error <= 1e-10,
        herm_ok=herm <= 1e-10,
        positive_ok=min_eig >= -1e-8,
        tail_ok=tail <= tail_budget,
    )
