"""Quadratic Lyapunov certificates for linear and switching systems.

Everything here is binary64, so every verdict is ``SAMPLED``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .certificates import LyapunovCertificate, CertificateError, verify_lyapunov
from .comparison import Power
from .monovariant import QuadraticForm, sublevel
from .system import DynamicalSystem, LinearMaps
from .verdict import Verdict

SERIES_TOL = 1e-14
SERIES_MAX_TERMS = 100_000
SERIES_PATIENCE = 100


class NonConvergent(ArithmeticError):
    """The Lyapunov series diverges (spectral radius >= 1)."""


def _square(M, name="matrix") -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError(f"{name} must be a nonempty square matrix")
    if not np.isfinite(M).all():
        raise ValueError(f"{name} has non-finite entries")
    return M


def lyapunov_series(A, Q) -> np.ndarray:
    """Sum ``sum_k (A^T)^k Q A^k`` until a term's norm drops below 1e-14.

    Raises :class:`NonConvergent` after 1e5 terms, or once term norms have
    failed to reach a new minimum for 100 consecutive terms.
    """
    A, Q = _square(A, "A"), _square(Q, "Q")
    P = np.zeros_like(Q)
    term = Q.copy()
    best, stale = np.inf, 0
    for _ in range(SERIES_MAX_TERMS):
        P += term
        size = np.abs(term).max()
        if size < SERIES_TOL:
            return P
        if size < best:
            best, stale = size, 0
        else:
            stale += 1
            if stale >= SERIES_PATIENCE or not np.isfinite(size):
                raise NonConvergent("series terms stopped shrinking; spectral radius >= 1")
        term = A.T @ term @ A
    raise NonConvergent(f"no convergence after {SERIES_MAX_TERMS} terms")


def solve_discrete_lyapunov(A, Q, method: str = "series") -> np.ndarray:
    """Solve ``A^T P A - P = -Q`` for ``P``.

    ``method="series"`` sums the convergent series (this also detects
    instability); ``method="direct"`` uses scipy's Schur-based solver after
    checking the spectral radius.
    """
    A, Q = _square(A, "A"), _square(Q, "Q")
    if A.shape != Q.shape:
        raise ValueError("A and Q must have the same shape")
    if not np.allclose(Q, Q.T, atol=1e-12):
        raise ValueError("Q must be symmetric")
    if np.linalg.eigvalsh((Q + Q.T) / 2).min() <= 0:
        raise ValueError("Q must be positive definite")
    if method == "series":
        P = lyapunov_series(A, Q)
    elif method == "direct":
        if np.abs(np.linalg.eigvals(A)).max() >= 1:
            raise NonConvergent("spectral radius >= 1")
        P = scipy.linalg.solve_discrete_lyapunov(A.T, Q)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (P + P.T) / 2


def lyapunov_residual(A, P, Q) -> float:
    A, P, Q = (np.asarray(M, dtype=float) for M in (A, P, Q))
    return float(np.abs(A.T @ P @ A - P + Q).max())


def extreme_eigs(P) -> tuple:
    """``(lambda_min, lambda_max)`` of a symmetric matrix."""
    P = _square(P, "P")
    if not np.allclose(P, P.T, atol=1e-12):
        raise ValueError("extreme_eigs needs a symmetric matrix")
    w = np.linalg.eigvalsh(P)
    return float(w[0]), float(w[-1])


@dataclass(frozen=True)
class QuadraticCertificate:
    P: np.ndarray
    lambda_min: float
    lambda_max: float
    system: DynamicalSystem

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        if not np.allclose(P, P.T, atol=1e-12):
            raise ValueError("P must be symmetric")
        if self.lambda_min <= 0:
            raise ValueError("P must be positive definite")


def quadratic_to_lyapunov(sys: DynamicalSystem, P, grid, *, x_star=None, horizon: int = 8,
                          samples=None, tol: float = 1e-9) -> LyapunovCertificate:
    """Lyapunov certificate for ``V(x) = x^T P x``.

    The ellipsoid ``{V <= eps}`` contains the ball of radius
    ``sqrt(eps / lambda_max)`` and sits inside the ball of radius
    ``sqrt(eps / lambda_min)``; those are the inner and outer comparison
    functions. The certificate is checked on samples before being returned.
    """
    P = _square(P, "P")
    lo, hi = extreme_eigs(P)
    if lo <= 0:
        raise ValueError("P must be positive definite")
    if x_star is None:
        x_star = tuple(0.0 for _ in range(P.shape[0]))
    levels = sublevel(QuadraticForm(P.tolist()), sys.space, grid)
    cert = LyapunovCertificate(x_star, levels, Power(hi ** -0.5, 0.5), Power(lo ** -0.5, 0.5),
                               {"P": P, "lambda_min": lo, "lambda_max": hi})
    verdict = verify_lyapunov(sys, cert, horizon=horizon, samples=samples, tol=tol)
    if not verdict:
        raise CertificateError(f"quadratic certificate fails on samples: {verdict.witness}")
    cert.notes["verdict"] = verdict
    return cert


def check_common_quadratic(sys: DynamicalSystem, P, tol: float = 1e-12) -> Verdict:
    """Every mode must satisfy ``A_i^T P A_i - P <= 0`` (negative semidefinite)."""
    if not isinstance(sys.generators, LinearMaps):
        raise ValueError("common quadratic checks need a linear or switching system")
    P = _square(P, "P")
    if extreme_eigs(P)[0] <= 0:
        raise ValueError("P must be positive definite")
    for i, A in enumerate(sys.generators.matrices):
        A = np.array(A, dtype=float)
        D = A.T @ P @ A - P
        w, v = np.linalg.eigh((D + D.T) / 2)
        if w[-1] > tol:
            return Verdict.fail({"mode": i, "vector": v[:, -1].tolist(), "growth": float(w[-1])},
                                f"mode {i} increases x^T P x")
    return Verdict.ok(False, "x^T P x is nonincreasing under every mode")
