"""Hilbert-space toolbox for a trapped two-level ion.

The joint space is (electronic two-level) x (motional Fock space truncated to
``dim_fock`` levels).  Basis ordering is |S, n> with spin index S (0 = down,
1 = up) major and motional index n minor, i.e. flat index = S * dim_fock + n.

Units: hbar = 1 throughout.  Lengths are expressed in units of
x0 = sqrt(hbar / 2 m omega), momenta in p0 = sqrt(hbar m omega / 2), motional
energies in hbar * omega.  The ion mass therefore never appears.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import TruncationError

SPIN_DOWN = 0
SPIN_UP = 1

#: Default fraction of probability allowed above the retained Fock levels.
DEFAULT_TAIL_BUDGET = 1e-8


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrapParams:
    """Physical parameters of the driven, continuously measured ion.

    Attributes
    ----------
    omega:
        Trap (motional) angular frequency in rad/s.  Must be positive.
    omega21:
        Electronic transition angular frequency in rad/s.  Only fixes the
        resonance condition omega_L = omega21 + k * omega; it drops out of
        every quantity computed here and is carried for bookkeeping.
    omega0:
        Bare coupling strength of the drive in rad/s (>= 0).
    eta:
        Lamb-Dicke parameter (>= 0).
    phi:
        Drive phase at the ion position, in rad.
    k_sideband:
        Resonant sideband order k >= 0; the drive connects |down, n> with
        |up, n + k>.
    kappa:
        Measurement coupling (rate of the double-commutator term) in 1/s.
    """

    omega: float
    omega21: float
    omega0: float
    eta: float
    phi: float
    k_sideband: int
    kappa: float

    def __post_init__(self) -> None:
        for name in ("omega", "omega21", "omega0", "eta", "phi", "kappa"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.omega0 < 0:
            raise ValueError(f"omega0 must be >= 0, got {self.omega0}")
        if self.eta < 0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if self.kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.kappa}")
        if not isinstance(self.k_sideband, (int, np.integer)) or self.k_sideband < 0:
            raise ValueError(f"k_sideband must be a non-negative integer, got {self.k_sideband!r}")
        for message in self.regime_flags():
            warnings.warn(message, stacklevel=2)

    def regime_flags(self) -> list[str]:
        """Validity warnings (never hard errors) for the modelling regime."""
        flags = []
        if self.omega0 > 0.1 * self.omega:
            flags.append(
                f"omega0/omega = {self.omega0 / self.omega:.3g} > 0.1: the resonant "
                "single-manifold picture degrades at this drive strength"
            )
        return flags


# ---------------------------------------------------------------------------
# ladder operators and drive coupling
# ---------------------------------------------------------------------------

def build_ladder(dim: int) -> np.ndarray:
    """Annihilation operator on a ``dim``-level Fock space.

    ``<n-1| a |n> = sqrt(n)``.  The creation operator is the transpose.
    On the truncated space [a, a^dag] equals the identity except for the
    last diagonal entry, which is -(dim - 1); tests pin this artefact.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    return np.diag(np.sqrt(np.arange(1.0, dim)), k=1)


def number_op(dim: int) -> np.ndarray:
    return np.diag(np.arange(float(dim)))


def _cosine_block(eta: float, phi: float, dim: int, eval_dim: int) -> np.ndarray:
    """Top-left ``dim`` block of cos(eta (a + a^dag) + phi) evaluated at ``eval_dim``.

    Functional calculus on the truncated quadrature: a + a^dag is real
    symmetric tridiagonal, so diagonalize and apply the cosine to its
    eigenvalues.
    """
    off = np.sqrt(np.arange(1.0, eval_dim))
    lam, vec = eigh_tridiagonal(np.zeros(eval_dim), off)
    block = (vec * np.cos(eta * lam + phi)) @ vec.T
    return block[:dim, :dim]


def coupling_matrix(params: TrapParams, dim: int, *, eval_dim: int | None = None) -> np.ndarray:
    """Matrix of cos(eta (a + a^dag) + phi) on the retained Fock levels.

    When ``eval_dim`` is None the evaluation dimension grows automatically
    until doubling it moves no retained entry by more than 1e-12; entries are
    bounded by 1 in magnitude so the threshold is effectively relative.
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if eval_dim is not None:
        if eval_dim < dim:
            raise ValueError(f"eval_dim ({eval_dim}) must be >= dim ({dim})")
        return _cosine_block(params.eta, params.phi, dim, eval_dim)

    size = dim + 16
    block = _cosine_block(params.eta, params.phi, dim, size)
    while size <= 8192:
        bigger = _cosine_block(params.eta, params.phi, dim, 2 * size)
        if np.max(np.abs(bigger - block)) <= 1e-12:
            return bigger
        block, size = bigger, 2 * size
    raise RuntimeError("coupling matrix did not stabilize below evaluation dimension 16384")


@dataclass(frozen=True)
class RabiTable:
    """Signed sideband Rabi frequencies Omega[n] for |down, n> <-> |up, n+k>."""

    k_sideband: int
    values: np.ndarray  # shape (dim_fock - k,), rad/s

    def __len__(self) -> int:
        return len(self.values)


def rabi_frequency(params: TrapParams, n: int, k: int | None = None) -> float:
    """Signed Rabi frequency omega0 * <n| cos(eta (a + a^dag) + phi) |n + k>."""
    if k is None:
        k = params.k_sideband
    if n < 0 or k < 0:
        raise ValueError(f"need n >= 0 and k >= 0, got n={n}, k={k}")
    block = coupling_matrix(params, n + k + 1)
    return params.omega0 * block[n, n + k]


def rabi_table(params: TrapParams, dim_fock: int) -> RabiTable:
    """Rabi frequencies for every manifold that fits in ``dim_fock`` levels."""
    k = params.k_sideband
    if dim_fock - k < 1:
        raise ValueError(f"dim_fock={dim_fock} leaves no |down,n> <-> |up,n+{k}> pair")
    block = coupling_matrix(params, dim_fock)
    values = params.omega0 * np.diagonal(block, offset=k).copy()
    return RabiTable(k_sideband=k, values=values)


# ---------------------------------------------------------------------------
# motional state specifications
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FockState:
    n: int


@dataclass(frozen=True)
class CoherentState:
    alpha: complex


@dataclass(frozen=True)
class ThermalState:
    nbar: float


@dataclass(frozen=True)
class ExplicitState:
    matrix: np.ndarray


MotionalStateSpec = FockState | CoherentState | ThermalState | ExplicitState


def _occupancies(state: MotionalStateSpec, dim: int) -> np.ndarray:
    """Untruncated level probabilities p_n for n < dim."""
    n = np.arange(dim)
    if isinstance(state, FockState):
        p = np.zeros(dim)
        if 0 <= state.n < dim:
            p[state.n] = 1.0
        return p
    if isinstance(state, CoherentState):
        mean = abs(state.alpha) ** 2
        if mean == 0.0:
            p = np.zeros(dim)
            p[0] = 1.0
            return p
        log_p = -mean + n * math.log(mean) - np.array([math.lgamma(m + 1) for m in range(dim)])
        return np.exp(log_p)
    if isinstance(state, ThermalState):
        if state.nbar == 0.0:
            p = np.zeros(dim)
            p[0] = 1.0
            return p
        ratio = state.nbar / (1.0 + state.nbar)
        return ratio ** n / (1.0 + state.nbar)
    if isinstance(state, ExplicitState):
        d = np.real(np.diagonal(state.matrix))
        out = np.zeros(dim)
        out[: min(dim, len(d))] = d[:dim]
        return out
    raise TypeError(f"unknown motional state spec: {state!r}")


def mean_occupation(state: MotionalStateSpec) -> float:
    if isinstance(state, FockState):
        return float(state.n)
    if isinstance(state, CoherentState):
        return abs(state.alpha) ** 2
    if isinstance(state, ThermalState):
        return float(state.nbar)
    if isinstance(state, ExplicitState):
        d = np.real(np.diagonal(state.matrix))
        return float(np.arange(len(d)) @ d)
    raise TypeError(f"unknown motional state spec: {state!r}")


def occupation_std(state: MotionalStateSpec) -> float:
    if isinstance(state, FockState):
        return 0.0
    if isinstance(state, CoherentState):
        return abs(state.alpha)
    if isinstance(state, ThermalState):
        return math.sqrt(state.nbar * (state.nbar + 1.0))
    if isinstance(state, ExplicitState):
        d = np.real(np.diagonal(state.matrix))
        n = np.arange(len(d))
        mean = n @ d
        return float(math.sqrt(max(0.0, (n * n) @ d - mean**2)))
    raise TypeError(f"unknown motional state spec: {state!r}")


def default_dim_fock(state: MotionalStateSpec, k_sideband: int) -> int:
    """Default truncation: max(32, ceil(nbar + 8 sigma) + k + 8) levels."""
    if isinstance(state, ExplicitState):
        return state.matrix.shape[0]
    need = math.ceil(mean_occupation(state) + 8.0 * occupation_std(state)) + k_sideband + 8
    return max(32, need)


def captured_probability(state: MotionalStateSpec, dim_fock: int) -> float:
    """Probability the untruncated state leaves inside the retained levels."""
    return float(np.sum(_occupancies(state, dim_fock)))


def required_dimension(state: MotionalStateSpec, tail_budget: float = DEFAULT_TAIL_BUDGET) -> int:
    """Smallest dimension whose truncation deficit is within the budget."""
    if isinstance(state, FockState):
        return state.n + 1
    if isinstance(state, ExplicitState):
        return state.matrix.shape[0]
    dim = 1
    while dim <= 65536:
        if 1.0 - captured_probability(state, dim) <= tail_budget:
            return dim
        dim *= 2
    raise TruncationError(f"no dimension up to 65536 satisfies tail budget {tail_budget}")


def initial_state(
    state: MotionalStateSpec,
    dim_fock: int,
    tail_budget: float = DEFAULT_TAIL_BUDGET,
) -> np.ndarray:
    """Motional density matrix on ``dim_fock`` levels, unit trace.

    The untruncated state is projected onto the retained levels and
    renormalized; the captured probability is available separately through
    :func:`captured_probability`.  If more than ``tail_budget`` of the state
    lives outside the truncation, a :class:`TruncationError` names the
    dimension that would suffice.
    """
    if dim_fock < 1:
        raise ValueError(f"dim_fock must be >= 1, got {dim_fock}")

    if isinstance(state, FockState):
        if state.n < 0:
            raise ValueError(f"Fock index must be >= 0, got {state.n}")
        if state.n >= dim_fock:
            raise TruncationError(
                f"Fock({state.n}) does not fit in {dim_fock} levels; need {state.n + 1}",
                required_dim=state.n + 1,
            )
        rho = np.zeros((dim_fock, dim_fock), dtype=complex)
        rho[state.n, state.n] = 1.0
        return rho

    if isinstance(state, ExplicitState):
        mat = np.asarray(state.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"explicit state must be square, got shape {mat.shape}")
        if mat.shape[0] != dim_fock:
            raise ValueError(f"explicit state has {mat.shape[0]} levels, expected {dim_fock}")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise ValueError("explicit state is not Hermitian (tolerance 1e-12)")
        tr = np.real(np.trace(mat))
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"explicit state trace is {tr!r}, expected 1")
        if np.min(np.linalg.eigvalsh(mat)) < -1e-10:
            raise ValueError("explicit state has a negative eigenvalue beyond -1e-10")
        return mat / tr

    captured = captured_probability(state, dim_fock)
    if 1.0 - captured > tail_budget:
        need = required_dimension(state, tail_budget)
        raise TruncationError(
            f"{state!r} leaves {1.0 - captured:.3e} outside {dim_fock} levels "
            f"(budget {tail_budget:.1e}); use dim_fock >= {need}",
            required_dim=need,
        )

    if isinstance(state, CoherentState):
        alpha = complex(state.alpha)
        mean = abs(alpha) ** 2
        lg = np.array([math.lgamma(m + 1) for m in range(dim_fock)])
        amp = np.exp(-0.5 * mean - 0.5 * lg) * alpha ** np.arange(dim_fock)
        rho = np.outer(amp, amp.conj())
    else:  # ThermalState
        rho = np.diag(_occupancies(state, dim_fock)).astype(complex)
    return rho / np.real(np.trace(rho))


# ---------------------------------------------------------------------------
# joint states
# ---------------------------------------------------------------------------

@dataclass
class VibronicDensityMatrix:
    """Density matrix on the joint electronic x motional space."""

    data: np.ndarray  # (2 dim_fock, 2 dim_fock) complex
    dim_fock: int

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=complex)
        expected = (2 * self.dim_fock, 2 * self.dim_fock)
        if self.data.shape != expected:
            raise ValueError(f"state shape {self.data.shape} does not match dim_fock={self.dim_fock}")

    def block(self, s_row: int, s_col: int) -> np.ndarray:
        d = self.dim_fock
        return self.data[s_row * d : (s_row + 1) * d, s_col * d : (s_col + 1) * d]

    def trace_error(self) -> float:
        return abs(np.trace(self.data) - 1.0)

    def herm_defect(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.data)))

    def tail_mass(self, k_sideband: int) -> float:
        """Population in levels n >= dim_fock - 1 - k, summed over spin."""
        edge = max(0, self.dim_fock - 1 - k_sideband)
        diag = np.real(np.diagonal(self.data))
        return float(np.sum(diag[edge : self.dim_fock]) + np.sum(diag[self.dim_fock + edge :]))


def compose_initial(
    motional: np.ndarray,
    internal: str | np.ndarray = "down",
) -> VibronicDensityMatrix:
    """Tensor an electronic state with a motional density matrix.

    ``internal`` is "down", "up", or an explicit 2x2 density matrix in the
    (down, up) basis.
    """
    motional = np.asarray(motional, dtype=complex)
    dim = motional.shape[0]
    if isinstance(internal, str):
        if internal not in ("down", "up"):
            raise ValueError(f"internal must be 'down', 'up' or a 2x2 matrix, got {internal!r}")
        spin = np.zeros((2, 2), dtype=complex)
        idx = SPIN_DOWN if internal == "down" else SPIN_UP
        spin[idx, idx] = 1.0
    else:
        spin = np.asarray(internal, dtype=complex)
        if spin.shape != (2, 2):
            raise ValueError(f"internal matrix must be 2x2, got {spin.shape}")
        if abs(np.trace(spin) - 1.0) > 1e-10 or np.max(np.abs(spin - spin.conj().T)) > 1e-12:
            raise ValueError("internal matrix must be Hermitian with unit trace")
    return VibronicDensityMatrix(np.kron(spin, motional), dim_fock=dim)


def reduce_internal(rho: VibronicDensityMatrix) -> np.ndarray:
    """2x2 electronic density matrix (trace over motion)."""
    return np.array(
        [
            [np.trace(rho.block(SPIN_DOWN, SPIN_DOWN)), np.trace(rho.block(SPIN_DOWN, SPIN_UP))],
            [np.trace(rho.block(SPIN_UP, SPIN_DOWN)), np.trace(rho.block(SPIN_UP, SPIN_UP))],
        ],
        dtype=complex,
    )


def reduce_motional(rho: VibronicDensityMatrix) -> np.ndarray:
    """Motional density matrix (trace over the electronic doublet)."""
    return rho.block(SPIN_DOWN, SPIN_DOWN) + rho.block(SPIN_UP, SPIN_UP)


def ground_population(rho: VibronicDensityMatrix) -> float:
    return float(np.real(np.trace(rho.block(SPIN_DOWN, SPIN_DOWN))))


# ---------------------------------------------------------------------------
# motional observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MotionalObservable:
    name: str
    unit: str
    matrix: np.ndarray  # Hermitian, (dim, dim)


def position_obs(dim: int) -> MotionalObservable:
    a = build_ladder(dim)
    return MotionalObservable("mean_position", "x0", a + a.T)


def momentum_obs(dim: int) -> MotionalObservable:
    a = build_ladder(dim)
    return MotionalObservable("mean_momentum", "p0", 1j * (a.T - a))


def position_sq_obs(dim: int) -> MotionalObservable:
    x = position_obs(dim).matrix
    return MotionalObservable("position_sq", "x0^2", x @ x)


def momentum_sq_obs(dim: int) -> MotionalObservable:
    p = momentum_obs(dim).matrix
    return MotionalObservable("momentum_sq", "p0^2", p @ p)


def number_obs(dim: int) -> MotionalObservable:
    return MotionalObservable("mean_number", "1", number_op(dim))


def energy_obs(dim: int) -> MotionalObservable:
    """Motional energy (n + 1/2) in units of hbar * omega."""
    return MotionalObservable("mean_energy", "hbar*omega", np.diag(np.arange(dim) + 0.5))


def parity_obs(dim: int) -> MotionalObservable:
    return MotionalObservable("parity", "1", np.diag((-1.0) ** np.arange(dim)))


def expectation(rho_motional: np.ndarray, obs: MotionalObservable) -> float:
    """Real expectation value Tr(rho O) of a Hermitian motional observable."""
    rho_motional = np.asarray(rho_motional)
    if rho_motional.shape != obs.matrix.shape:
        raise ValueError(f"state shape {rho_motional.shape} != observable shape {obs.matrix.shape}")
    return float(np.real(np.einsum("ij,ji->", rho_motional, obs.matrix)))
