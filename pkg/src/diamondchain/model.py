"""Lattice parameters, state container and the coupled-mode operators.

The field obeys ``i dpsi/dz = H psi`` with the flattened site ordering
``(a_{n_min}, b_{n_min}, c_{n_min}, a_{n_min+1}, ...)``.  Propagation
constants are reported as eigenvalues of ``-H`` so that a mode
``exp(i lambda z)`` with ``Im(lambda) > 0`` is amplified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

TWO_PI = 2.0 * math.pi
LAMBDA_CONVENTION = "eigenvalues of -H; Im>0 amplifies"
# Literal form of the mode ansatz, for readers checking signs against the dynamics.
GROWTH_LAW = "modes evolve as exp(i*lambda*z), so |psi|^2 scales as exp(-2*Im(lambda)*z)"
PT_TOLERANCE = 1e-12


def peierls_trig(phi: float) -> tuple[float, float]:
    """``(cos phi, sin phi)``, exact at multiples of ``pi/2``.

    ``math.sin(math.pi)`` is ``1.2e-16``, which would lift the flat band at
    ``phi = pi`` by ``~1e-5`` near triple band touchings.
    """
    quarter = phi / (0.5 * math.pi)
    nearest = round(quarter)
    if abs(quarter - nearest) < 1e-14:
        return ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[nearest % 4]
    return math.cos(phi), math.sin(phi)


def peierls_phase(phi: float) -> complex:
    """``exp(i phi)`` using ``peierls_trig``."""
    c, s = peierls_trig(phi)
    return complex(c, s)


class ModelError(ValueError):
    """Invalid parameters or an operation used outside its domain."""


@dataclass(frozen=True)
class ModelParams:
    """Physical knobs of the diamond chain.

    Parameters
    ----------
    gamma : float
        Gain/loss strength; ``+i gamma`` on the a leg, ``-i gamma`` on the c leg.
    e_par : float
        Longitudinal field, a linear on-site tilt ``e_par * n``.
    e_perp : float
        Transverse field, ``+e_perp`` on a and ``-e_perp`` on c.
    phi : float
        Peierls phase in radians, normalized to ``[0, 2 pi)``.
    n_min, n_max : int
        Inclusive range of unit-cell indices.
    boundary : str
        Only ``"open"``: couplings to cells outside the range are dropped.
    """

    gamma: float = 0.0
    e_par: float = 0.0
    e_perp: float = 0.0
    phi: float = 0.0
    n_min: int = -150
    n_max: int = 150
    boundary: str = "open"

    def __post_init__(self):
        for name in ("gamma", "e_par", "e_perp", "phi"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ModelError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.gamma < 0:
            raise ModelError(f"gamma must be >= 0, got {self.gamma}")
        object.__setattr__(self, "phi", self.phi % TWO_PI)
        if int(self.n_min) != self.n_min or int(self.n_max) != self.n_max:
            raise ModelError("n_min and n_max must be integers")
        object.__setattr__(self, "n_min", int(self.n_min))
        object.__setattr__(self, "n_max", int(self.n_max))
        if self.n_max < self.n_min:
            raise ModelError(f"n_max ({self.n_max}) < n_min ({self.n_min})")
        if self.boundary != "open":
            raise ModelError(f"unsupported boundary {self.boundary!r}; only 'open'")

    @property
    def n_cells(self) -> int:
        return self.n_max - self.n_min + 1

    @property
    def dim(self) -> int:
        return 3 * self.n_cells

    @property
    def cells(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "e_par": self.e_par,
            "e_perp": self.e_perp,
            "phi": self.phi,
            "n_min": self.n_min,
            "n_max": self.n_max,
            "boundary": self.boundary,
        }


@dataclass
class LatticeState:
    """Amplitudes ``(a_n, b_n, c_n)`` for every cell at propagation distance ``z``.

    ``amps`` has shape ``(N, 3)``; row ``j`` belongs to cell ``n_min + j``.
    """

    amps: np.ndarray
    n_min: int = 0
    z: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 2 or amps.shape[1] != 3:
            raise ModelError(f"amps must have shape (N, 3), got {amps.shape}")
        self.amps = amps
        self.n_min = int(self.n_min)
        self.z = float(self.z)

    @classmethod
    def zeros(cls, params: ModelParams, z: float = 0.0) -> "LatticeState":
        return cls(np.zeros((params.n_cells, 3), complex), params.n_min, z)

    @classmethod
    def from_vector(cls, vec, params: ModelParams, z: float = 0.0) -> "LatticeState":
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (params.dim,):
            raise ModelError(f"vector length {vec.shape} does not match dim {params.dim}")
        return cls(vec.reshape(-1, 3).copy(), params.n_min, z)

    @property
    def n_cells(self) -> int:
        return self.amps.shape[0]

    @property
    def cells(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_min + self.n_cells)

    @property
    def a(self) -> np.ndarray:
        return self.amps[:, 0]

    @property
    def b(self) -> np.ndarray:
        return self.amps[:, 1]

    @property
    def c(self) -> np.ndarray:
        return self.amps[:, 2]

    def vector(self) -> np.ndarray:
        """Flattened ``(3N,)`` view in interleaved site order."""
        return self.amps.reshape(-1)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.amps)))

    def cell(self, n: int) -> np.ndarray:
        """Amplitude triple of cell ``n`` (absolute index)."""
        j = n - self.n_min
        if not 0 <= j < self.n_cells:
            raise IndexError(f"cell {n} outside [{self.n_min}, {self.n_min + self.n_cells - 1}]")
        return self.amps[j]

    def check_matches(self, params: ModelParams) -> None:
        if self.n_cells != params.n_cells or self.n_min != params.n_min:
            raise ModelError(
                f"state covers cells [{self.n_min}, {self.n_min + self.n_cells - 1}], "
                f"params expect [{params.n_min}, {params.n_max}]"
            )


def _require_no_tilt(params: ModelParams, what: str) -> None:
    if params.e_par != 0:
        raise ModelError(f"{what} requires e_par == 0 (got {params.e_par}); the tilt breaks Bloch periodicity")


def bloch_operator(params: ModelParams, k: float) -> np.ndarray:
    """3x3 matrix ``M(k)`` whose eigenvalues are the propagation constants at momentum ``k``.

    Rows and columns are ordered ``(A, B, C)``; ``M(k) = -H(k)`` for the
    plane-wave ansatz ``(A, B, C) exp(i lambda z + i k n)``.
    """
    _require_no_tilt(params, "bloch_operator")
    if not math.isfinite(k):
        raise ModelError(f"k must be finite, got {k!r}")
    onsite = params.e_perp + 1j * params.gamma
    ep = peierls_phase(params.phi)
    em = ep.conjugate()
    kp, km = np.exp(1j * k), np.exp(-1j * k)
    return np.array(
        [
            [-onsite, em + km, 0.0],
            [ep + kp, 0.0, em + kp],
            [0.0, ep + km, onsite],
        ],
        dtype=complex,
    )


def bloch_operators(params: ModelParams, ks) -> np.ndarray:
    """Stack of ``bloch_operator`` matrices, shape ``(len(ks), 3, 3)``."""
    _require_no_tilt(params, "bloch_operators")
    ks = np.asarray(ks, dtype=float)
    if not np.all(np.isfinite(ks)):
        raise ModelError("k grid contains non-finite values")
    onsite = params.e_perp + 1j * params.gamma
    ep = peierls_phase(params.phi)
    em = ep.conjugate()
    kp, km = np.exp(1j * ks), np.exp(-1j * ks)
    out = np.zeros((ks.size, 3, 3), dtype=complex)
    out[:, 0, 0] = -onsite
    out[:, 0, 1] = em + km
    out[:, 1, 0] = ep + kp
    out[:, 1, 2] = em + kp
    out[:, 2, 1] = ep + km
    out[:, 2, 2] = onsite
    return out


def real_space_operator(params: ModelParams, sparse: bool = False):
    """Finite ``3N x 3N`` operator ``H`` with ``i dpsi/dz = H psi``.

    Returns a dense array, or a CSR matrix when ``sparse`` is true.
    """
    N = params.n_cells
    n = params.cells.astype(float)
    ia = 3 * np.arange(N)
    ib, ic = ia + 1, ia + 2
    g, ep, et = params.gamma, params.e_par, params.e_perp
    eph = peierls_phase(params.phi)
    emh = eph.conjugate()

    rows, cols, vals = [], [], []

    def put(r, c, v):
        rows.append(r)
        cols.append(c)
        vals.append(np.broadcast_to(np.asarray(v, dtype=complex), np.shape(r)))

    put(ia, ia, ep * n + et + 1j * g)
    put(ib, ib, ep * (n + 0.5))
    put(ic, ic, ep * n - et - 1j * g)
    # intra-cell Peierls bonds
    put(ia, ib, -emh)
    put(ib, ia, -eph)
    put(ic, ib, -eph)
    put(ib, ic, -emh)
    # b_{n-1} <-> a_n, c_n
    put(ia[1:], ib[:-1], -1.0)
    put(ib[:-1], ia[1:], -1.0)
    put(ic[1:], ib[:-1], -1.0)
    put(ib[:-1], ic[1:], -1.0)

    H = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(3 * N, 3 * N),
    ).tocsr()
    return H if sparse else H.toarray()


def parity_matrix(params: ModelParams, sparse: bool = False):
    """Parity map ``a_n -> -c_n, b_n -> -b_n, c_n -> -a_n``; an involution."""
    N = params.n_cells
    ia = 3 * np.arange(N)
    rows = np.concatenate([ia, ia + 1, ia + 2])
    cols = np.concatenate([ia + 2, ia + 1, ia])
    Pm = sp.csr_matrix((-np.ones(3 * N), (rows, cols)), shape=(3 * N, 3 * N))
    return Pm if sparse else Pm.toarray()


class PTCheck(NamedTuple):
    is_pt_symmetric: bool
    residual: float


def pt_check(params: ModelParams) -> PTCheck:
    """Compare ``P H* P^-1`` with ``H``; the residual is their max-abs difference."""
    H = real_space_operator(params, sparse=True)
    Pm = parity_matrix(params, sparse=True)
    # P is its own inverse
    diff = Pm @ H.conj() @ Pm - H
    residual = float(np.abs(diff.data).max()) if diff.nnz else 0.0
    return PTCheck(residual < PT_TOLERANCE, residual)
