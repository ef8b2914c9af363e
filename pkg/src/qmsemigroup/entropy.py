"""Entropy, relative entropy, Fisher information and decay trajectories."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import ConditionalExpectation
from .errors import (
    DimensionMismatch,
    InvariantViolation,
    NotStrictlyPositive,
    ValidationError,
)
from .linalg import check_hermitian, eig_hermitian, tau
from .semigroup import SemigroupModel, evolve

ZERO_EIG = 1e-14
SUPPORT_TOL = 1e-10
POSITIVE_FLOOR = 1e-12
MONOTONE_SLACK = 1e-10


def check_density(rho: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Validate ``rho >= 0`` and ``tau(rho) = 1`` and return it as a complex array."""
    rho = check_hermitian(rho)
    w = np.linalg.eigvalsh(rho)
    if w[0] < -tol * max(1.0, w[-1]):
        raise ValidationError(f"density has negative eigenvalue {w[0]:.3g}")
    tr = np.real(tau(rho))
    if abs(tr - 1.0) > 1e-10:
        raise ValidationError(f"normalized trace is {tr:.12g}, expected 1")
    return rho


def _xlogx(w: np.ndarray) -> np.ndarray:
    w = np.where(w < ZERO_EIG, 0.0, w)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(w > 0, w * np.log(np.where(w > 0, w, 1.0)), 0.0)


def entropy(rho: np.ndarray) -> float:
    """``H(rho) = tau(rho log rho)``; eigenvalues below 1e-14 contribute zero."""
    w, _ = eig_hermitian(rho)
    return float(np.mean(_xlogx(w)))


def relative_entropy(rho: np.ndarray, sigma: np.ndarray) -> float:
    """``D(rho || sigma) = tau(rho log rho - rho log sigma)``.

    Returns ``inf`` when the support of ``rho`` is not contained in that of
    ``sigma``.
    """
    if np.shape(rho) != np.shape(sigma):
        raise DimensionMismatch("rho and sigma must have the same shape")
    wr, ur = eig_hermitian(rho)
    ws, us = eig_hermitian(sigma)
    top = max(float(np.max(np.abs(ws))), 1e-300)
    null = ws < SUPPORT_TOL * top
    # overlap of rho with the kernel of sigma
    if np.any(null):
        k = us[:, null]
        leak = np.real(np.trace(k.conj().T @ rho @ k)) / rho.shape[0]
        if leak > SUPPORT_TOL:
            return float("inf")
    # tau(rho log sigma) = (1/n) sum_jk p_j |<u_j, v_k>|^2 log s_k over sigma's support
    ov = np.abs(ur.conj().T @ us) ** 2
    wr_c = np.where(wr < ZERO_EIG, 0.0, wr)
    logs = np.where(null, 0.0, np.log(np.where(null, 1.0, ws)))
    cross = float(wr_c @ ov @ logs) / rho.shape[0]
    return float(np.mean(_xlogx(wr)) - cross)


def relative_entropy_to_algebra(
    rho: np.ndarray, e: ConditionalExpectation, check: bool = True
) -> float:
    """``D(rho || N) = H(rho) - H(E(rho))``, cross-checked against ``D(rho || E rho)``."""
    er = e(rho)
    d = entropy(rho) - entropy(er)
    if check:
        d2 = relative_entropy(rho, er)
        if np.isfinite(d2) and abs(d - d2) > 1e-10 * max(1.0, abs(d)):
            raise InvariantViolation(f"entropy difference {d} disagrees with D(rho||E rho) {d2}")
    if abs(d) < 1e-12:
        d = 0.0
    return float(d)


def fisher_information(model: SemigroupModel, rho: np.ndarray) -> float:
    """``I(rho) = tau(A(rho) log rho)`` for a strictly positive density.

    Raises
    ------
    NotStrictlyPositive
        If the smallest eigenvalue of ``rho`` is below 1e-12.
    """
    w, u = eig_hermitian(rho)
    if w[0] < POSITIVE_FLOOR:
        raise NotStrictlyPositive(f"smallest eigenvalue {w[0]:.3g} is below {POSITIVE_FLOOR}")
    logr = (u * np.log(w)) @ u.conj().T
    val = float(np.real(tau(model.generator(rho) @ logr)))
    if val < -1e-10:
        raise InvariantViolation(f"negative Fisher information {val}")
    return max(val, 0.0)


@dataclass(frozen=True)
class DecayTrajectory:
    """Relative entropy and Fisher information along ``T_t rho``."""

    times: np.ndarray
    relative_entropies: np.ndarray
    fisher_values: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t", "D", "I"])
        for t, d, i in zip(self.times, self.relative_entropies, self.fisher_values):
            wr.writerow([f"{t:.12g}", f"{d:.12g}", f"{i:.12g}"])
        return buf.getvalue()


def decay_trajectory(model: SemigroupModel, rho: np.ndarray, t_grid: Sequence[float]) -> DecayTrajectory:
    """Tabulate ``D(T_t rho || N)`` and ``I(T_t rho)`` over an ascending grid.

    Raises
    ------
    InvariantViolation
        If the relative entropy increases by more than 1e-10.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) < 0) or t[0] < 0:
        raise ValidationError("t_grid must be ascending and nonnegative")
    ds, fs = [], []
    for tk in t:
        r = evolve(model, rho, float(tk))
        ds.append(relative_entropy_to_algebra(r, model.cond_exp))
        fs.append(fisher_information(model, r))
    ds = np.array(ds)
    if np.any(np.diff(ds) > MONOTONE_SLACK):
        raise InvariantViolation("relative entropy increased along the trajectory")
    return DecayTrajectory(t, ds, np.array(fs))
