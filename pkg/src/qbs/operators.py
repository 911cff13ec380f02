"""Dense complex matrix helpers and Hermitian spectral functional calculus.

Operators are plain ``complex128`` numpy arrays. Structural validation is
strict: inputs that miss a tolerance are rejected, never repaired.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

HERMITIAN_RTOL = 1e-12
UNITARY_RTOL = 1e-12
RECONSTRUCT_RTOL = 1e-10

_SQRT1_2 = math.sqrt(0.5)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a square complex128 array; reject empty or non-finite input."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got shape {a.shape}")
    if a.size == 0:
        raise ValueError(f"{name}: empty matrix")
    if not np.isfinite(a).all():
        raise ValueError(f"{name}: non-finite entries")
    return a


def frobenius(m) -> float:
    return float(np.linalg.norm(m))


def hermitian_defect(m) -> float:
    """Frobenius norm of M - M*."""
    a = np.asarray(m)
    return float(np.linalg.norm(a - a.conj().T))


def unitary_defect(m) -> float:
    """Frobenius norm of M*M - I."""
    a = np.asarray(m)
    return float(np.linalg.norm(a.conj().T @ a - np.eye(a.shape[0])))


def require_hermitian(m, name: str = "matrix") -> np.ndarray:
    """Return M after checking ``||M - M*||_F <= 1e-12 * max(1, ||M||_F)``."""
    a = as_matrix(m, name)
    defect = hermitian_defect(a)
    bound = HERMITIAN_RTOL * max(1.0, frobenius(a))
    if defect > bound:
        raise ValueError(f"{name}: not Hermitian, defect {defect:.6e} exceeds {bound:.6e}")
    return a


def require_unitary(m, name: str = "matrix") -> np.ndarray:
    """Return M after checking ``||M*M - I||_F <= 1e-12 * dim``."""
    a = as_matrix(m, name)
    defect = unitary_defect(a)
    bound = UNITARY_RTOL * a.shape[0]
    if defect > bound:
        raise ValueError(f"{name}: not unitary, defect {defect:.6e} exceeds {bound:.6e}")
    return a


def adjoint(m) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(m, dtype=np.complex128).conj().T


def hermitian_part(m) -> np.ndarray:
    """(M + M*)/2, for symmetrizing roundoff on computed products."""
    a = np.asarray(m, dtype=np.complex128)
    return 0.5 * (a + a.conj().T)


def commutator(a, b) -> np.ndarray:
    """[A, B] = AB - BA."""
    am = as_matrix(a, "A")
    bm = as_matrix(b, "B")
    if am.shape != bm.shape:
        raise ValueError(f"commutator: dimension mismatch {am.shape} vs {bm.shape}")
    return am @ bm - bm @ am


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (real, ascending) and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def spectral_decompose(m, name: str = "matrix") -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix with a deterministic phase.

    The largest-modulus component of each eigenvector is made real positive
    so repeated runs on one build produce identical output.
    """
    a = require_hermitian(m, name)
    try:
        vals, vecs = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        digest = hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()[:16]
        raise np.linalg.LinAlgError(f"{name}: eigensolver failed (input sha256 {digest})") from exc
    lead_rows = np.argmax(np.abs(vecs), axis=0)
    lead = vecs[lead_rows, np.arange(vecs.shape[1])]
    mod = np.abs(lead)
    phase = np.where(mod > 0, lead / np.where(mod > 0, mod, 1.0), 1.0)
    vecs = vecs / phase[np.newaxis, :]
    return SpectralDecomposition(eigenvalues=vals, eigenvectors=vecs)


def apply_scalar_function(m, f: Callable[[float], float], name: str = "matrix") -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix spectrally.

    Parameters
    ----------
    m : Hermitian matrix.
    f : real-to-real map defined on the spectrum of ``m``.

    Returns V diag(f(eigenvalues)) V*. Raises if f is undefined or
    non-finite at some eigenvalue.
    """
    dec = spectral_decompose(m, name)
    fvals = np.empty(dec.dim)
    for i, lam in enumerate(dec.eigenvalues):
        try:
            y = float(f(float(lam)))
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise ValueError(f"{name}: function undefined at eigenvalue {lam!r}: {exc}") from None
        if not math.isfinite(y):
            raise ValueError(f"{name}: function non-finite at eigenvalue {lam!r}")
        fvals[i] = y
    v = dec.eigenvectors
    return (v * fvals) @ v.conj().T


def operator_log(h, name: str = "matrix") -> np.ndarray:
    """Spectral logarithm of a positive-definite Hermitian matrix."""
    dec = spectral_decompose(h, name)
    smallest = float(dec.eigenvalues[0])
    if smallest <= 0.0:
        raise ValueError(f"{name}: operator log needs a positive spectrum, found eigenvalue {smallest!r}")
    v = dec.eigenvectors
    return (v * np.log(dec.eigenvalues)) @ v.conj().T


def operator_exp(a, name: str = "matrix") -> np.ndarray:
    """Spectral exponential of a Hermitian matrix; output positive definite."""
    return apply_scalar_function(a, math.exp, name)


def positive_part(m, name: str = "matrix") -> np.ndarray:
    """Spectral max(0, .); satisfies M = positive_part(M) - positive_part(-M)."""
    dec = spectral_decompose(m, name)
    v = dec.eigenvectors
    return (v * np.maximum(dec.eigenvalues, 0.0)) @ v.conj().T


def normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x * _SQRT1_2)


def normal_pdf(x: float) -> float:
    """Standard normal density."""
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def phi_series(x: float, n_max: int) -> float:
    """Partial Maclaurin sum for the normal CDF, valid only on |x| <= 3.

    The series alternates with terms x^(2n+1) / (2^n n! (2n+1)); outside
    the window it cancels catastrophically, so larger arguments are
    rejected instead of silently degrading.
    """
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    if abs(x) > 3.0:
        raise ValueError(f"series argument {x!r} outside validity window |x| <= 3")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    acc = 0.0
    term = x
    for n in range(n_max + 1):
        acc += term / (2 * n + 1)
        term *= -0.5 * x * x / (n + 1)
    return 0.5 + acc * _INV_SQRT_2PI


def phi_operator(m, name: str = "matrix") -> np.ndarray:
    """normal_cdf applied spectrally; spectrum lands in [0, 1]."""
    return apply_scalar_function(m, normal_cdf, name)


def sylvester_L(x, w, gap_tol: float = 1e-10, diag_tol: float = 1e-10) -> np.ndarray:
    """Solve [X, L] = W X for L, given Hermitian X and unitary W.

    Requires distinct nonzero eigenvalues of X and zero diagonal of W in
    X's eigenbasis. In that basis the off-diagonal entries are forced to
    L_ij = W_ij * x_j / (x_i - x_j); the free diagonal is set to zero,
    the minimal-norm completion. The construction then also satisfies
    [L*, X][X, L] = X * X.
    """
    xh = require_hermitian(x, "X")
    wu = require_unitary(w, "W")
    if xh.shape != wu.shape:
        raise ValueError(f"sylvester_L: dimension mismatch {xh.shape} vs {wu.shape}")
    dec = spectral_decompose(xh, "X")
    lam = dec.eigenvalues
    scale = max(1.0, float(np.max(np.abs(lam))))
    for i, v in enumerate(lam):
        if abs(v) <= gap_tol * scale:
            raise ValueError(f"X eigenvalue {float(v)!r} at index {i} is numerically zero")
    for i in range(len(lam) - 1):
        if lam[i + 1] - lam[i] <= gap_tol * scale:
            raise ValueError(
                f"X eigenvalues at indices {i} and {i + 1} coincide "
                f"({float(lam[i])!r}, {float(lam[i + 1])!r})"
            )
    v = dec.eigenvectors
    w_tilde = v.conj().T @ wu @ v
    diag_mags = np.abs(np.diag(w_tilde))
    worst = int(np.argmax(diag_mags))
    if diag_mags[worst] > diag_tol:
        raise ValueError(
            f"W has nonzero diagonal entry {diag_mags[worst]:.6e} at index {worst} in X's eigenbasis"
        )
    denom = lam[:, np.newaxis] - lam[np.newaxis, :]
    np.fill_diagonal(denom, 1.0)
    l_tilde = w_tilde * (lam[np.newaxis, :] / denom)
    np.fill_diagonal(l_tilde, 0.0)
    return v @ l_tilde @ v.conj().T
