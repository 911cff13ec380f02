"""Coefficient algebra of the quantum stochastic flow.

A differential is carried as its four system-operator coefficients (the
noise factor never materializes); products follow the Ito table, and the
time coefficient generates the vacuum (semigroup) dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import (
    adjoint,
    as_matrix,
    commutator,
    frobenius,
    require_hermitian,
    require_unitary,
)

_SLOTS = ("creation", "conservation", "annihilation", "time")


def _freeze(a: np.ndarray) -> np.ndarray:
    out = a.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModelOperators:
    """System quadruple (X, H, L, S): stock observable, Hamiltonian,
    coupling, and scattering, all of one dimension."""

    X: np.ndarray
    H: np.ndarray
    L: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        x = require_hermitian(self.X, "X")
        h = require_hermitian(self.H, "H")
        l = as_matrix(self.L, "L")
        s = require_unitary(self.S, "S")
        shapes = {a.shape for a in (x, h, l, s)}
        if len(shapes) != 1:
            raise ValueError(f"operator dims differ: {sorted(shapes)}")
        object.__setattr__(self, "X", _freeze(x))
        object.__setattr__(self, "H", _freeze(h))
        object.__setattr__(self, "L", _freeze(l))
        object.__setattr__(self, "S", _freeze(s))

    @property
    def dim(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class QuantumStochasticDifferential:
    """Coefficients of dA+, dLambda, dA, dt, in that slot order."""

    creation: np.ndarray
    conservation: np.ndarray
    annihilation: np.ndarray
    time: np.ndarray

    def __post_init__(self):
        dim = None
        for name in _SLOTS:
            a = as_matrix(getattr(self, name), name)
            if dim is None:
                dim = a.shape[0]
            elif a.shape[0] != dim:
                raise ValueError("differential slots have mixed dimensions")
            object.__setattr__(self, name, _freeze(a))

    @property
    def dim(self) -> int:
        return self.creation.shape[0]

    def slots(self):
        return self.creation, self.conservation, self.annihilation, self.time

    def __add__(self, other):
        if not isinstance(other, QuantumStochasticDifferential):
            return NotImplemented
        return QuantumStochasticDifferential(
            *(a + b for a, b in zip(self.slots(), other.slots()))
        )

    def __sub__(self, other):
        if not isinstance(other, QuantumStochasticDifferential):
            return NotImplemented
        return QuantumStochasticDifferential(
            *(a - b for a, b in zip(self.slots(), other.slots()))
        )

    def __mul__(self, c):
        if not isinstance(c, (int, float, complex)):
            return NotImplemented
        return QuantumStochasticDifferential(*(c * a for a in self.slots()))

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)


@dataclass(frozen=True)
class FlowCoefficients:
    """The quadruple (alpha, alpha_dagger, lam, theta).

    lam is the conservation coefficient (the keyword ``lambda`` is taken
    in Python); theta doubles as the Lindblad generator.
    """

    alpha: np.ndarray
    alpha_dagger: np.ndarray
    lam: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "alpha_dagger", "lam", "theta"):
            object.__setattr__(self, name, _freeze(as_matrix(getattr(self, name), name)))


def flow_coefficients(x, m: ModelOperators) -> FlowCoefficients:
    """Coefficients of the flow differential of a Hermitian observable.

    alpha = [L*, X] S; alpha_dagger = S* [X, L]; lam = S* X S - X;
    theta = i[H, X] - (L*L X + X L*L - 2 L* X L) / 2.
    """
    xh = require_hermitian(x, "X")
    if xh.shape[0] != m.dim:
        raise ValueError(f"X dim {xh.shape[0]} does not match model dim {m.dim}")
    ld = adjoint(m.L)
    sd = adjoint(m.S)
    alpha = (ld @ xh - xh @ ld) @ m.S
    alpha_dagger = sd @ (xh @ m.L - m.L @ xh)
    lam = sd @ xh @ m.S - xh
    ldl = ld @ m.L
    theta = 1j * (m.H @ xh - xh @ m.H) - 0.5 * (ldl @ xh + xh @ ldl - 2.0 * (ld @ xh @ m.L))
    return FlowCoefficients(alpha=alpha, alpha_dagger=alpha_dagger, lam=lam, theta=theta)


def flow_differential(x, m: ModelOperators) -> QuantumStochasticDifferential:
    """Pack flow_coefficients into differential slots: (a+, lam, a, theta)."""
    fc = flow_coefficients(x, m)
    return QuantumStochasticDifferential(
        creation=fc.alpha_dagger,
        conservation=fc.lam,
        annihilation=fc.alpha,
        time=fc.theta,
    )


def ito_product(
    d1: QuantumStochasticDifferential, d2: QuantumStochasticDifferential
) -> QuantumStochasticDifferential:
    """Product of two differentials under the Ito table.

    Nonzero basis products only: dLc.dA+ = dA+, dLc.dLc = dLc,
    dA.dA+ = dt, dA.dLc = dA; every product involving a left dA+ or a
    left dt (and dt on the right against anything but nothing) vanishes.
    Coefficients multiply left-to-right as matrices.
    """
    if d1.dim != d2.dim:
        raise ValueError(f"ito_product: dimension mismatch {d1.dim} vs {d2.dim}")
    return QuantumStochasticDifferential(
        creation=d1.conservation @ d2.creation,
        conservation=d1.conservation @ d2.conservation,
        annihilation=d1.annihilation @ d2.conservation,
        time=d1.annihilation @ d2.creation,
    )


def qsd_power_closed_form(x, m: ModelOperators, k: int) -> QuantumStochasticDifferential:
    """k-th Ito power of the flow differential from the closed formula.

    (creation, conservation, annihilation, time) =
    (lam^(k-1) a+, lam^k, a lam^(k-1), a lam^(k-2) a+), k >= 2.
    """
    if k < 2:
        raise ValueError("closed-form power needs k >= 2")
    fc = flow_coefficients(x, m)
    lam_km2 = np.linalg.matrix_power(fc.lam, k - 2)
    lam_km1 = lam_km2 @ fc.lam
    return QuantumStochasticDifferential(
        creation=lam_km1 @ fc.alpha_dagger,
        conservation=lam_km1 @ fc.lam,
        annihilation=fc.alpha @ lam_km1,
        time=fc.alpha @ lam_km2 @ fc.alpha_dagger,
    )


def qsd_power_iterated(x, m: ModelOperators, k: int) -> QuantumStochasticDifferential:
    """k-th Ito power by repeated left multiplication with the differential."""
    if k < 1:
        raise ValueError("iterated power needs k >= 1")
    d = flow_differential(x, m)
    out = d
    for _ in range(k - 1):
        out = ito_product(d, out)
    return out


@dataclass(frozen=True)
class BrownianReport:
    """Deviations of the S=1 reduction: lam from 0, brackets from alpha."""

    lambda_deviation: float
    alpha_deviation: float
    alpha_dagger_deviation: float
    passed: bool


def brownian_reduction_check(m: ModelOperators, tol: float = 1e-14) -> BrownianReport:
    """With S = I the conservation coefficient dies and the creation and
    annihilation coefficients collapse to plain commutator brackets."""
    d = m.dim
    s_defect = frobenius(m.S - np.eye(d))
    if s_defect > 1e-12 * d:
        raise ValueError(f"scattering is not the identity, defect {s_defect:.6e}")
    fc = flow_coefficients(m.X, m)
    ld = adjoint(m.L)
    lam_dev = float(np.max(np.abs(fc.lam)))
    alpha_dev = float(np.max(np.abs(fc.alpha - commutator(ld, m.X))))
    alpha_dag_dev = float(np.max(np.abs(fc.alpha_dagger - commutator(m.X, m.L))))
    scale = max(1.0, frobenius(m.X))
    passed = max(lam_dev, alpha_dev, alpha_dag_dev) <= tol * scale
    return BrownianReport(
        lambda_deviation=lam_dev,
        alpha_deviation=alpha_dev,
        alpha_dagger_deviation=alpha_dag_dev,
        passed=passed,
    )


@dataclass(frozen=True)
class PoissonReport:
    """How far lam = S*XS - X sits from the identity.

    interior_deviation: max |lam - I| over the masked block.
    wrap_defect: largest |lam| entry in rows/columns outside the mask
    (the truncation boundary; equals d-1 for the shift model).
    full_deviation: max |lam - I| over the whole matrix.
    trace_lambda: always ~0, which is the finite-dimensional obstruction
    to lam = I (trace I = dim).
    """

    interior_deviation: float
    wrap_defect: float
    full_deviation: float
    trace_lambda: float
    dim: int
    passed: bool


def poisson_reduction_check(
    m: ModelOperators, interior_mask, tol: float = 1e-14
) -> PoissonReport:
    """Check the lam = I hypothesis on an interior index set."""
    d = m.dim
    mask = sorted(set(int(i) for i in interior_mask))
    if not mask:
        raise ValueError("interior mask is empty")
    if mask[0] < 0 or mask[-1] >= d:
        raise ValueError(f"mask indices out of range for dim {d}")
    lam = adjoint(m.S) @ m.X @ m.S - m.X
    eye = np.eye(d)
    dev = np.abs(lam - eye)
    interior = float(np.max(dev[np.ix_(mask, mask)]))
    full = float(np.max(dev))
    outside = [i for i in range(d) if i not in mask]
    if outside:
        wrap = max(
            float(np.max(np.abs(lam[outside, :]))),
            float(np.max(np.abs(lam[:, outside]))),
        )
    else:
        wrap = 0.0
    return PoissonReport(
        interior_deviation=interior,
        wrap_defect=wrap,
        full_deviation=full,
        trace_lambda=float(np.trace(lam).real),
        dim=d,
        passed=interior <= tol * max(1.0, frobenius(m.X)),
    )


def lindblad_generator(x, m: ModelOperators) -> np.ndarray:
    """Generator of the vacuum dynamics: i[H,X] - {L*L, X}/2 + L* X L.

    Written independently of flow_coefficients so the two can be
    cross-checked; they agree because theta is exactly this operator.
    """
    xh = require_hermitian(x, "X")
    if xh.shape[0] != m.dim:
        raise ValueError(f"X dim {xh.shape[0]} does not match model dim {m.dim}")
    ld = adjoint(m.L)
    ldl = ld @ m.L
    return 1j * commutator(m.H, xh) - 0.5 * (ldl @ xh + xh @ ldl) + ld @ xh @ m.L


def semigroup_evolve(x0, m: ModelOperators, t: float, steps: int | None = None) -> np.ndarray:
    """Integrate dX/dt = theta(X) with fixed-step classical RK4.

    Default step count is max(1000 t, 100). Hermiticity is preserved by
    the scheme up to roundoff; the output is returned unsymmetrized so
    that drift, if any, stays visible.
    """
    x = require_hermitian(x0, "X0")
    if x.shape[0] != m.dim:
        raise ValueError(f"X0 dim {x.shape[0]} does not match model dim {m.dim}")
    if not t >= 0.0:
        raise ValueError("t must be nonnegative")
    if steps is None:
        steps = max(int(round(1000.0 * t)), 100)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if t == 0.0:
        return x.copy()
    h = m.H
    l = m.L
    ld = adjoint(l)
    ldl = ld @ l

    def rhs(y):
        return 1j * (h @ y - y @ h) - 0.5 * (ldl @ y + y @ ldl) + ld @ y @ l

    dt = t / steps
    for _ in range(steps):
        k1 = rhs(x)
        k2 = rhs(x + 0.5 * dt * k1)
        k3 = rhs(x + 0.5 * dt * k2)
        k4 = rhs(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    return x


def expectation(state, m) -> complex:
    """<state, M state> for a unit vector; real up to roundoff for Hermitian M."""
    u = np.asarray(state, dtype=np.complex128).reshape(-1)
    nrm = float(np.linalg.norm(u))
    if abs(nrm - 1.0) > 1e-12:
        raise ValueError(f"state norm {nrm!r} differs from 1 beyond 1e-12")
    a = as_matrix(m, "M")
    if a.shape[0] != u.size:
        raise ValueError(f"state length {u.size} does not match matrix dim {a.shape[0]}")
    return complex(np.vdot(u, a @ u))
