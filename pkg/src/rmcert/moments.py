"""Correlation functions and moments of locally randomized measurements.

For a state rho and unit vectors u_1..u_n the correlation function is

    E(u_1, ..., u_n) = < sigma_{u_1} x ... x sigma_{u_n} >_rho,

with sigma_u = u . (sigma_x, sigma_y, sigma_z).  The t-th moment R^(t) is
the uniform average of E^t over all direction tuples.  For t = 2 the
average is a finite sum over the three Pauli axes per site; for t = 4 it
is a sum over the six icosahedron axes per site (antipodal partners can
be dropped for even t because E is odd under u -> -u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ResourceLimitError, ValidationError
from .states import (
    BELL,
    GHZ,
    SINGLE,
    BlockProduct,
    DenseState,
    NoisyGhz,
    StateModel,
    densify,
)

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

DIRECTION_ATOL = 1e-12
DESIGN_ATOL = 1e-10

# admissibility caps for the design sums
MAX_DESIGN_QUBITS = {2: 16, 4: 9}
# the dense full-correlation tensor needs a 4^n intermediate
MAX_DENSE_TENSOR_QUBITS = 12
# analytic paths iterate over L^n settings in chunks
MAX_ANALYTIC_EVALS = 2 * 10 ** 8
_CHUNK = 1 << 16


def direction(theta: float, phi: float) -> np.ndarray:
    """Unit vector from polar angle theta and azimuth phi."""
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def validate_directions(dirs, n: int | None = None) -> np.ndarray:
    arr = np.asarray(dirs, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValidationError(f"directions must be an (n, 3) array, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValidationError(f"expected {n} directions, got {arr.shape[0]}")
    norms = np.einsum("ij,ij->i", arr, arr)
    if np.any(np.abs(norms - 1.0) > 100 * DIRECTION_ATOL):
        raise ValidationError("directions must be unit vectors within 1e-12")
    return arr


@dataclass(frozen=True)
class SphericalDesign:
    """A finite point set whose average reproduces sphere averages of
    polynomials up to the stated order."""

    order: int
    points: np.ndarray  # (L, 3) full antipodally-symmetric set

    def __post_init__(self):
        pts = validate_directions(self.points)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def axes(self) -> np.ndarray:
        """One representative per antipodal pair (first half by construction)."""
        return self.points[: self.size // 2]


def pauli_axes_design() -> SphericalDesign:
    """The octahedron +-e_x, +-e_y, +-e_z: a spherical 3-design."""
    return SphericalDesign(order=3, points=np.vstack([np.eye(3), -np.eye(3)]))


def icosahedron_design() -> SphericalDesign:
    """The 12 icosahedron vertices (golden-ratio construction): a 5-design."""
    g = (1.0 + math.sqrt(5.0)) / 2.0
    half = []
    for s in (1.0, -1.0):
        half.append((0.0, s, g))
        half.append((s, g, 0.0))
        half.append((g, 0.0, s))
    half = np.array(half)
    half /= np.linalg.norm(half, axis=1)[:, None]
    return SphericalDesign(order=5, points=np.vstack([half, -half]))


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def sphere_monomial_average(a: int, b: int, c: int) -> Fraction:
    """Exact sphere average of x^a y^b z^c.

    Zero whenever any exponent is odd; otherwise
    (a-1)!! (b-1)!! (c-1)!! / (a+b+c+1)!!.
    """
    if a % 2 or b % 2 or c % 2:
        return Fraction(0)
    num = _double_factorial(a - 1) * _double_factorial(b - 1) * _double_factorial(c - 1)
    return Fraction(num, _double_factorial(a + b + c + 1))


def design_defect(design: SphericalDesign, order: int | None = None) -> float:
    """Max deviation of point averages from sphere averages over all
    monomials of total degree <= order."""
    order = design.order if order is None else order
    pts = design.points
    worst = 0.0
    for total in range(1, order + 1):
        for a in range(total + 1):
            for b in range(total - a + 1):
                c = total - a - b
                avg = float(np.mean(pts[:, 0] ** a * pts[:, 1] ** b * pts[:, 2] ** c))
                worst = max(worst, abs(avg - float(sphere_monomial_average(a, b, c))))
    return worst


# ---------------------------------------------------------------------------
# correlation functions


def ghz_correlation(dirs: np.ndarray) -> float:
    """Correlation function of the pure n-qubit GHZ state.

    With u = (sin t cos f, sin t sin f, cos t) per site:
    E = prod cos(t_i) [n even] + prod sin(t_i) * cos(sum f_i).
    Validated against dense contraction; see tests.
    """
    n = dirs.shape[0]
    z = np.clip(dirs[:, 2], -1.0, 1.0)
    sin_t = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.arctan2(dirs[:, 1], dirs[:, 0])
    out = float(np.prod(sin_t)) * math.cos(float(np.sum(phi)))
    if n % 2 == 0:
        out += float(np.prod(z))
    return out


def _dense_correlation(state: DenseState, dirs: np.ndarray) -> float:
    n = state.n_qubits
    if state.is_pure:
        v = state.data.reshape((2,) * n)
        for j in range(n):
            s = np.einsum("k,kab->ab", dirs[j], PAULI)
            v = np.moveaxis(np.tensordot(s, v, axes=([1], [j])), 0, j)
        return float(np.real(np.vdot(state.data.reshape((2,) * n), v)))
    m = state.data.reshape((2,) * (2 * n))
    for j in range(n):
        s = np.einsum("k,kab->ab", dirs[j], PAULI)
        m = np.moveaxis(np.tensordot(s, m, axes=([1], [j])), 0, j)
    # trace over matching row/column indices
    m = m.reshape(2 ** n, 2 ** n)
    return float(np.real(np.trace(m)))


def correlation(state: StateModel, dirs) -> float:
    """E(u_1, ..., u_n) for the given state and measurement directions.

    Analytic paths are used for NoisyGhz (the identity part carries no
    full correlation, so E = (1-p) E_ghz) and for block products (the
    correlation factorizes across blocks); dense states are contracted
    explicitly.
    """
    dirs = validate_directions(dirs, n=state.n_qubits)
    if isinstance(state, NoisyGhz):
        return (1.0 - state.p) * ghz_correlation(dirs)
    if isinstance(state, BlockProduct):
        out = 1.0
        pos = 0
        for kind, size in state.blocks:
            block_dirs = dirs[pos : pos + size]
            if kind == SINGLE:
                out *= float(block_dirs[0, 2])  # <0|sigma_u|0> = u_z
            else:
                out *= ghz_correlation(block_dirs)
            pos += size
        return out
    return _dense_correlation(state, dirs)


# ---------------------------------------------------------------------------
# moments


def _correlation_tensor(rho: np.ndarray, axes: np.ndarray) -> np.ndarray:
    """E(i_1..i_n) over all axis tuples, as an L^n tensor.

    Contracts the density matrix site by site against sigma_{axis}; the
    intermediate starts at 4^n entries, hence the dense-tensor cap.
    """
    n = int(round(math.log2(rho.shape[0])))
    sig = np.einsum("lk,kab->lab", axes, PAULI)
    x = rho.reshape((2,) * (2 * n))
    for j in range(n):
        # layout: l_1..l_j, a_{j+1}..a_n, b_{j+1}..b_n
        x = np.tensordot(sig, x, axes=([1, 2], [j, j + (n - j)]))
        x = np.moveaxis(x, 0, j)
    return np.ascontiguousarray(x.real)


def _axes_for_order(t: int) -> np.ndarray:
    if t == 2:
        return pauli_axes_design().axes
    if t == 4:
        return icosahedron_design().axes
    raise ValidationError(f"design moments are implemented for t in {{2, 4}}, got t={t}")


def _ghz_design_sum(n: int, p: float, t: int, axes: np.ndarray) -> float:
    """Chunked analytic design sum for the noisy GHZ family."""
    L = axes.shape[0]
    total_settings = L ** n
    if total_settings * n > MAX_ANALYTIC_EVALS:
        raise ResourceLimitError(
            f"analytic design sum needs {total_settings} settings for n={n}; "
            f"budget is {MAX_ANALYTIC_EVALS // n}"
        )
    z = np.clip(axes[:, 2], -1.0, 1.0)
    sin_t = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.arctan2(axes[:, 1], axes[:, 0])
    even = n % 2 == 0
    scale = (1.0 - p) ** t
    acc = 0.0
    for start in range(0, total_settings, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total_settings), dtype=np.int64)
        digits = np.empty((idx.size, n), dtype=np.int64)
        rem = idx.copy()
        for j in range(n - 1, -1, -1):
            digits[:, j] = rem % L
            rem //= L
        e = np.prod(sin_t[digits], axis=1) * np.cos(np.sum(phi[digits], axis=1))
        if even:
            e = e + np.prod(z[digits], axis=1)
        acc += float(np.sum(e ** t))
    return scale * acc / total_settings


def moment_design(state: StateModel, t: int) -> float:
    """R^(t) via the exact design sum (t = 2 or 4).

    Dense states (and block products, which are densified first) use the
    full-correlation tensor and are capped at 12 qubits; the noisy-GHZ
    family takes the analytic path and is capped only by the number of
    design settings.
    """
    if t not in (2, 4):
        raise ValidationError(f"design moments are implemented for t in {{2, 4}}, got t={t}")
    n = state.n_qubits
    if n > MAX_DESIGN_QUBITS[t]:
        raise ResourceLimitError(
            f"design sum for t={t} is capped at n={MAX_DESIGN_QUBITS[t]}, got n={n}"
        )
    axes = _axes_for_order(t)
    if isinstance(state, NoisyGhz):
        return _ghz_design_sum(n, state.p, t, axes)
    dense = densify(state)
    if n > MAX_DENSE_TENSOR_QUBITS:
        raise ResourceLimitError(
            f"dense design sum is capped at n={MAX_DENSE_TENSOR_QUBITS} "
            f"(4^n intermediate); got n={n}"
        )
    tensor = _correlation_tensor(dense.density_matrix(), axes)
    return float(np.mean(tensor ** t))


def monte_carlo_moment(state: StateModel, t: int, n_samples: int, rng) -> tuple[float, float]:
    """Monte Carlo estimate of R^(t) over uniform directions.

    Returns (mean, standard error).  Uniform directions are sampled as
    cos(theta) ~ U[-1, 1], phi ~ U[0, 2pi); this is the pushforward of
    the Haar measure on U(2) to the Bloch sphere.
    """
    if n_samples < 2:
        raise ValidationError("need at least 2 samples")
    n = state.n_qubits
    vals = np.empty(n_samples)
    for i in range(n_samples):
        z = rng.uniform(-1.0, 1.0, n)
        phi = rng.uniform(0.0, 2.0 * math.pi, n)
        st = np.sqrt(1.0 - z * z)
        dirs = np.stack([st * np.cos(phi), st * np.sin(phi), z], axis=1)
        vals[i] = correlation(state, dirs) ** t
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(n_samples))
    return mean, stderr


def ghz_moment_closed(n: int, t: int) -> Fraction:
    """Closed-form R^(t) of the pure n-qubit GHZ state, t = 2 or 4.

    t=2: 2^(n-1)/3^n for odd n, (2^(n-1)+1)/3^n for even n.
    t=4: 3*8^(n-1)/15^n for odd n, (3*8^(n-1)+3^n+3*2^n)/15^n for even n.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if t == 2:
        return Fraction(2 ** (n - 1) + (1 if n % 2 == 0 else 0), 3 ** n)
    if t == 4:
        if n % 2 == 1:
            return Fraction(3 * 8 ** (n - 1), 15 ** n)
        return Fraction(3 * 8 ** (n - 1) + 3 ** n + 3 * 2 ** n, 15 ** n)
    raise ValidationError(f"closed forms exist for t in {{2, 4}}, got t={t}")


def noisy_ghz_r2(n: int, p: float) -> float:
    """R^(2) of the noisy GHZ family: (1-p)^2 times the pure-GHZ value."""
    if not (0.0 <= p <= 1.0):
        raise ValidationError(f"noise fraction p={p} outside [0, 1]")
    return (1.0 - p) ** 2 * float(ghz_moment_closed(n, 2))


def bell_product_r4(n: int) -> Fraction:
    """R^(4) of an (n/2)-fold Bell-pair product: 1/5^(n/2); n must be even."""
    if n < 2 or n % 2:
        raise ValidationError(f"Bell products need an even qubit count, got n={n}")
    return Fraction(1, 5 ** (n // 2))
