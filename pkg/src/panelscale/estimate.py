"""Localized design matrices and local constant coefficient estimates.

The design matrix M_XKX(u, h) = (1/sqrt(Th)) * sum_t X_t X_t' K((t/T-u)/h)
carries the 1/sqrt(Th) scaling throughout: it cancels in the coefficient
estimate but matters in the multiscale statistic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import SingularDesignError
from .kernels import SmoothingKernel, kernel_weights, weights_matrix
from .panel import CoefficientCurve, Panel

COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class LocalDesign:
    """Kernel-localized moment matrices at one (u, h).

    m_xkx is the D x D design matrix, xky stacks the per-unit covariate
    response sums (N x D), both scaled by 1/sqrt(Th).
    """

    u: float
    h: float
    m_xkx: np.ndarray
    xky: np.ndarray


def local_design(panel: Panel, kernel: SmoothingKernel, u: float, h: float) -> LocalDesign:
    """Compute M_XKX(u, h) and the per-unit response sums at (u, h)."""
    T = panel.n_time
    w = kernel_weights(kernel, T, u, h)
    scale = 1.0 / np.sqrt(T * h)
    xw = panel.x * w[:, None]
    m = (xw.T @ panel.x) * scale
    m = 0.5 * (m + m.T)
    xky = (panel.y @ xw) * scale
    return LocalDesign(u=u, h=h, m_xkx=m, xky=xky)


def _check_spd(m: np.ndarray, u: float, h: float) -> np.ndarray:
    eig = np.linalg.eigvalsh(m)
    if eig[0] <= 0.0 or eig[-1] / eig[0] > COND_LIMIT:
        raise SingularDesignError(
            f"localized design at (u={u}, h={h}) is singular or ill-conditioned "
            f"(eigenvalues {eig.min():.3e}..{eig.max():.3e})"
        )
    return eig


def beta_hat(design: LocalDesign, unit: int) -> np.ndarray:
    """Solve M_XKX beta = xky[unit]; raises SingularDesignError when the
    condition number exceeds 1e12."""
    m = design.m_xkx
    _check_spd(m, design.u, design.h)
    b = design.xky[unit]
    try:
        beta = cho_solve(cho_factor(m, lower=True), b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - guarded by _check_spd
        raise SingularDesignError(
            f"Cholesky failed at (u={design.u}, h={design.h}): {exc}"
        ) from exc
    resid = np.linalg.norm(m @ beta - b)
    scale = np.linalg.norm(m) * max(1.0, np.linalg.norm(beta))
    if resid > 1e-10 * max(scale, 1e-300):
        raise SingularDesignError(
            f"solve at (u={design.u}, h={design.h}) left residual {resid:.3e}"
        )
    return beta


def coefficient_curve(
    panel: Panel,
    kernel: SmoothingKernel,
    unit: int,
    locations,
    h: float,
) -> CoefficientCurve:
    """Batch beta estimates for one unit over several locations at one bandwidth.

    Singular locations become NaN rows recorded in ``gaps``; if every location
    is singular a SingularDesignError is raised instead.
    """
    locations = [float(u) for u in locations]
    values = np.full((len(locations), panel.n_covariates), np.nan)
    gaps: list[tuple[int, str]] = []
    for k, u in enumerate(locations):
        try:
            values[k] = beta_hat(local_design(panel, kernel, u, h), unit)
        except SingularDesignError as exc:
            gaps.append((k, str(exc)))
    if len(gaps) == len(locations):
        raise SingularDesignError(
            f"coefficient curve for unit {unit} is empty: all {len(locations)} "
            "locations have singular designs"
        )
    return CoefficientCurve(
        unit=unit,
        grid_locations=tuple(locations),
        bandwidth=h,
        values=values,
        gaps=tuple(gaps),
    )


def batched_designs(
    panel: Panel, kernel: SmoothingKernel, us: np.ndarray, hs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized designs over many points: M (G, D, D) and sums a (G, N, D).

    Contractions deliberately use non-optimized einsum so the arithmetic is
    identical regardless of BLAS threading.
    """
    T = panel.n_time
    W = weights_matrix(kernel, T, us, hs)
    scale = 1.0 / np.sqrt(T * np.asarray(hs, dtype=float))
    M = np.einsum("gt,td,te->gde", W, panel.x, panel.x) * scale[:, None, None]
    M = 0.5 * (M + np.swapaxes(M, 1, 2))
    a = np.einsum("gt,td,nt->gnd", W, panel.x, panel.y) * scale[:, None, None]
    return M, a


def solve_mask(M: np.ndarray) -> np.ndarray:
    """Boolean mask of gridpoints whose design passes the condition guard."""
    eig = np.linalg.eigvalsh(M)
    lo, hi = eig[:, 0], eig[:, -1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ok = (lo > 0.0) & (hi / np.where(lo > 0.0, lo, 1.0) <= COND_LIMIT)
    return ok
