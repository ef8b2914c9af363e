"""MLSI/CLSI constant pipeline, return times, curvature checks and torus values."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .algebra import cb_index
from .entropy import fisher_information, relative_entropy_to_algebra
from .errors import (
    DegenerateInput,
    NonpositiveTime,
    NotErgodic,
    NotStrictlyPositive,
    ValidationError,
)
from .linalg import (
    Superoperator,
    WeightedForm,
    cb_norm_1_to_inf,
    dagger,
    hermitian_part,
    log_mean,
    logm_pd,
)
from .semigroup import (
    Derivation,
    SemigroupModel,
    VerificationReport,
    random_density,
    random_operator,
    spectral_gap,
    verify_intertwining,
)

KAPPA_SERIES = 1e-6
TCB_TOL = 1e-6
TCB_FLOOR = 1e-6
TORUS_FLOOR = 1.0 / (4.0 * math.log(3.0))
CURVATURE_KINDS = ("intertwining", "gradient-estimate", "assumed")
ROUTES = ("bakry-emery", "kappa-pipeline", "depolarizing-identity", "search", "none")


def kappa(lam: float, t: float) -> float:
    """``lam / (2 (1 - exp(-2 lam t)))``, equal to ``1 / (4 t)`` at ``lam = 0``.

    A three-term series is used when ``|lam t| < 1e-6``.

    Raises
    ------
    NonpositiveTime
        If ``t <= 0``.
    """
    if not t > 0:
        raise NonpositiveTime(f"t = {t} must be positive")
    x = lam * t
    if abs(x) < KAPPA_SERIES:
        return (1.0 + x + x * x / 3.0) / (4.0 * t)
    return lam / (-2.0 * math.expm1(-2.0 * x))


# ---------------------------------------------------------------------------
# certificates and estimates


@dataclass(frozen=True)
class CurvatureCertificate:
    """A curvature lower bound ``lam`` and the check backing it.

    Raises
    ------
    ValidationError
        If an intertwining or gradient-estimate certificate lacks a passing
        report of the matching kind.
    """

    kind: str
    lam: float
    evidence: Optional[VerificationReport] = None

    def __post_init__(self):
        if self.kind not in CURVATURE_KINDS:
            raise ValidationError(f"unknown curvature kind {self.kind!r}")
        if not math.isfinite(self.lam):
            raise ValidationError("curvature constant must be finite")
        need = {"intertwining": "intertwining", "gradient-estimate": "gradient-estimate"}
        if self.kind in need:
            ev = self.evidence
            if ev is None or not ev.passed or ev.name != need[self.kind]:
                raise ValidationError(f"{self.kind} certificate needs a passing {need[self.kind]} report")

    @property
    def verified(self) -> bool:
        return self.kind != "assumed"


@dataclass
class MlsiEstimate:
    """Lower and/or upper estimates of the optimal MLSI constant."""

    lower_bound: Optional[float]
    route: str
    tcb_used: Optional[float] = None
    upper_bound: Optional[float] = None
    witness: Optional[np.ndarray] = None
    candidates: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.route not in ROUTES:
            raise ValidationError(f"unknown route {self.route!r}")
        if (
            self.lower_bound is not None
            and self.upper_bound is not None
            and self.lower_bound > self.upper_bound + 1e-9
        ):
            raise ValidationError("lower bound exceeds upper bound")


def certify(model: SemigroupModel, samples: int = 6, seed: int = 0):
    """Run the check matching the model's curvature claim.

    Returns
    -------
    cert : CurvatureCertificate or None
        ``None`` if the model makes no claim or the check fails.
    report : VerificationReport or None
    """
    if model.curvature_hint is None:
        return None, None
    lam, kind = model.curvature_hint
    if kind == "intertwining":
        if model.transference is not None:
            from .models import transference_defect

            chain = model.transference
            rep = verify_intertwining(
                chain.derivation, chain, chain.extension, lam, samples=samples, seed=seed
            )
            defect = transference_defect(model, seed=seed)
            rep.details["transference_defect"] = defect
            rep.max_deviation = max(rep.max_deviation, defect)
            rep.passed = rep.max_deviation < rep.threshold
        else:
            rep = verify_intertwining(
                model.derivation, model, model.extension, lam, samples=samples, seed=seed
            )
    elif kind == "gradient-estimate":
        rep = ge_numeric_check(model, model.derivation, lam, samples=samples, seed=seed)
    else:
        return CurvatureCertificate("assumed", lam), None
    if not rep.passed:
        return None, rep
    return CurvatureCertificate(kind, lam, rep), rep


# ---------------------------------------------------------------------------
# return times


def _tcb_norm(model: SemigroupModel, t: float) -> float:
    mat = model.generator.semigroup_matrix(t) - model.cond_exp.superop.matrix
    return cb_norm_1_to_inf(Superoperator(model.space, mat))


def tcb_exact_ergodic(model: SemigroupModel, tol: float = TCB_TOL) -> float:
    """First time the cb-norm of ``T_t - E`` drops to 1/2, by bisection.

    Raises
    ------
    NotErgodic
        If the fixed-point algebra is larger than the scalars.
    """
    if not model.is_ergodic:
        raise NotErgodic(f"fixed-point algebra has dimension {model.fixed_algebra.dim}")
    sigma = spectral_gap(model.generator)
    seen = {}

    def g(t):
        v = _tcb_norm(model, t)
        seen[t] = v
        return v

    lo = TCB_FLOOR
    if g(lo) <= 0.5:
        return lo
    hi = 1.0 / sigma
    while g(hi) > 0.5:
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.5:
            lo = mid
        else:
            hi = mid
    ts = sorted(seen)
    vals = np.array([seen[t] for t in ts])
    if np.any(np.diff(vals) > 1e-10 * max(1.0, vals.max())):
        warnings.warn("cb-norm of T_t - E is not monotone on the bisection points")
    return hi


def tcb_bound(model: SemigroupModel, ultracontractive: Optional[tuple] = None) -> float:
    """Upper bound on the return time.

    Uses ``(D_cb + log 2) / sigma`` with the cb-index of the fixed-point
    inclusion, and ``log(2 C) / sigma + t0`` when ``(C, t0)`` is supplied,
    returning the smaller.
    """
    sigma = spectral_gap(model.generator)
    d = cb_index(model.space, model.fixed_algebra).value
    best = (d + math.log(2.0)) / sigma
    if ultracontractive is not None:
        c, t0 = ultracontractive
        best = min(best, math.log(2.0 * c) / sigma + t0)
    return best


def tcb(model: SemigroupModel, method: str = "exact", tol: float = TCB_TOL):
    """Return time and the method used; exact falls back to the bound off ergodicity."""
    if method == "exact" and model.is_ergodic:
        return tcb_exact_ergodic(model, tol), "exact"
    return tcb_bound(model), "bound"


# ---------------------------------------------------------------------------
# MLSI estimates


def mlsi_lower_bound(
    model: SemigroupModel, cert: Optional[CurvatureCertificate], tcb_value: float
) -> MlsiEstimate:
    """Best lower bound from curvature plus return time.

    Candidates are ``kappa(lam, tcb)``, ``lam`` itself when positive, and half
    the rate for depolarizing generators. The largest wins.
    """
    cands = {}
    if cert is not None:
        cands["kappa-pipeline"] = kappa(cert.lam, tcb_value)
        if cert.lam > 0:
            cands["bakry-emery"] = cert.lam
    if model.depolarizing_rate is not None:
        cands["depolarizing-identity"] = model.depolarizing_rate / 2.0
    if not cands:
        return MlsiEstimate(None, "none", tcb_value)
    route = max(cands, key=lambda k: cands[k])
    return MlsiEstimate(cands[route], route, tcb_value, candidates=cands)


def mlsi_ratio(model: SemigroupModel, rho: np.ndarray) -> float:
    """``I(rho) / (2 D(rho || N))``.

    Raises
    ------
    DegenerateInput
        If ``D(rho || N) <= 1e-12``.
    """
    d = relative_entropy_to_algebra(rho, model.cond_exp, check=False)
    if d <= 1e-12:
        raise DegenerateInput(f"D(rho||N) = {d:.3g} is too small")
    return fisher_information(model, rho) / (2.0 * d)


def _state(hb: np.ndarray, theta: np.ndarray) -> np.ndarray:
    h = np.einsum("k,kij->ij", theta, hb)
    h = hermitian_part(h)
    w, u = np.linalg.eigh(h)
    e = np.exp(w - w[-1])
    e = e / e.mean()
    return (u * e) @ dagger(u)


def optimal_mlsi_upper(
    model: SemigroupModel,
    n_starts: int = 4,
    max_iters: int = 2000,
    seed: int = 0,
    initial: Sequence[np.ndarray] = (),
    d_floor: float = 1e-8,
) -> MlsiEstimate:
    """Nelder-Mead search for a small ratio ``I / (2 D)``.

    States are ``e^h / tau(e^h)`` with ``h`` in the Hermitian part of the
    model space. Starts are the supplied ``initial`` densities followed by
    ``n_starts`` Gaussian draws. States with ``D < d_floor`` are penalized.
    The result is an upper bound on the optimal constant, with its witness.
    """
    hb = model.space.hermitian_basis()
    rng = np.random.default_rng(seed)
    penalty = 1e12

    def objective(theta):
        rho = _state(hb, theta)
        if np.linalg.eigvalsh(rho)[0] < 1e-12:
            return penalty
        d = relative_entropy_to_algebra(rho, model.cond_exp, check=False)
        if d < d_floor:
            return penalty
        try:
            return fisher_information(model, rho) / (2.0 * d)
        except NotStrictlyPositive:
            return penalty

    starts = []
    for r in initial:
        lr = logm_pd(r)
        starts.append(np.real(np.einsum("kij,ji->k", hb, lr)) / model.n)
    for _ in range(n_starts):
        starts.append(rng.standard_normal(len(hb)))
    best_val, best_theta = np.inf, None
    for x0 in starts:
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={"maxiter": max_iters, "xatol": 1e-9, "fatol": 1e-13, "adaptive": True},
        )
        val = float(res.fun)
        if val < best_val:
            best_val, best_theta = val, res.x
    if best_theta is None or best_val >= penalty:
        return MlsiEstimate(None, "search")
    witness = _state(hb, best_theta)
    return MlsiEstimate(None, "search", upper_bound=best_val, witness=witness)


# ---------------------------------------------------------------------------
# gradient estimates


def ge_kernel(x, y, alpha: float):
    """``(1 - 1/alpha) J + H = J (J / (x y) - 1 / alpha)`` with ``J`` the log mean."""
    j = log_mean(x, y)
    return j * (j / (x * y) - 1.0 / alpha)


def ge_scalar_check(d: float, alpha: float, grid_resolution: int = 2000, low: float = 1e-6):
    """Scalar gradient-estimate criterion on a log grid over ``(0, d]^2``.

    Returns a dict with the grid minimum of :func:`ge_kernel`, the maximum of
    ``x y / J(x, y)`` and ``passed`` (minimum at least ``-1e-9``).
    """
    g = np.geomspace(low * d, d, grid_resolution)
    g[-1] = d
    x, y = g[:, None], g[None, :]
    j = log_mean(x, y)
    ratio = x * y / j
    vals = j * (j / (x * y) - 1.0 / alpha)
    mn = float(vals.min())
    return {
        "d": d,
        "alpha": alpha,
        "min_value": mn,
        "max_ratio": float(ratio.max()),
        "argmax": tuple(float(v) for v in np.unravel_index(np.argmax(ratio), ratio.shape)),
        "passed": mn >= -1e-9,
    }


def ge_numeric_check(
    model: SemigroupModel,
    delta: Derivation,
    lam: float,
    samples: int = 15,
    t_grid: Sequence[float] = (0.01, 0.05, 0.1, 0.3, 1.0, 3.0),
    seed: int = 0,
    states: Sequence[np.ndarray] = (),
    tol: float = 1e-8,
) -> VerificationReport:
    """Sampled test of ``|delta(T_t x)|_rho^2 <= e^{-2 lam t} |delta(x)|_{T_t rho}^2``.

    For each ``rho`` (the supplied ``states`` and random strictly positive
    densities) two directions are probed: a random ``x`` and ``log rho``,
    both centered so ``E(x) = 0`` and normalized to ``|delta(x)|_1^2 = 1``.
    """
    rng = np.random.default_rng(seed)
    sp = model.space
    flat = WeightedForm(np.eye(sp.n))
    # violations concentrate near equilibrium, so mix sampling scales
    scales = (0.05, 0.1, 0.2, 0.5, 1.0)
    rhos = list(states) + [
        random_density(sp, rng, scales[k % len(scales)]) for k in range(samples)
    ]
    worst = -np.inf
    for rho in rhos:
        crho = sp.coords(rho)
        form_rho = WeightedForm(rho)
        # a random direction and the entropy direction log(rho)
        for x in (random_operator(sp, rng), logm_pd(rho)):
            x = x - model.cond_exp(x)
            nx = delta.weighted_norm_sq(flat, delta(x))
            if nx < 1e-20:
                continue
            x = x / math.sqrt(nx)
            cx = sp.coords(x)
            dx = delta(x)
            for t in t_grid:
                mat = model.generator.semigroup_matrix(t)
                xt = sp.element(mat @ cx)
                rt = hermitian_part(sp.element(mat @ crho))
                lhs = delta.weighted_norm_sq(form_rho, delta(xt))
                rhs = math.exp(-2 * lam * t) * delta.weighted_norm_sq(WeightedForm(rt), dx)
                worst = max(worst, lhs - rhs)
    worst = float(max(worst, 0.0)) if np.isfinite(worst) else 0.0
    return VerificationReport("gradient-estimate", worst < tol, worst, tol, details={"lambda": lam})


# ---------------------------------------------------------------------------
# torus heat semigroup


def torus_f(t: float) -> float:
    """``2 sum_{m >= 1} exp(-m^2 t)``, truncated once a term drops below 1e-16."""
    if not t > 0:
        raise NonpositiveTime(f"t = {t} must be positive")
    s, m = 0.0, 1
    while True:
        term = math.exp(-m * m * t)
        if term < 1e-16:
            break
        s += term
        m += 1
    return 2.0 * s


def torus_bracket(d: int):
    """Analytic bracket ``[(1 + 1/d) ln 2, ln(2^{1+1/d} + 1)]`` for ``t_cb(d)``."""
    return (1.0 + 1.0 / d) * math.log(2.0), math.log(2.0 ** (1.0 + 1.0 / d) + 1.0)


def torus_tcb(d: int, tol: float = TCB_TOL) -> float:
    """Smallest ``t`` with ``f(t) <= 2^{-1/d}``, by bisection to width ``tol``."""
    if d < 1:
        raise ValidationError("d must be at least 1")
    target = 2.0 ** (-1.0 / d)
    lo, hi = torus_bracket(d)
    lo *= 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if torus_f(mid) > target:
            lo = mid
        else:
            hi = mid
    return hi


def torus_clsi(d: int, tol: float = TCB_TOL) -> float:
    return 1.0 / (4.0 * torus_tcb(d, tol))


def torus_sandwich(t: float):
    """``(2 e^{-t}, f(t), 2 e^{-t} / (1 - e^{-t}))``."""
    e = math.exp(-t)
    return 2 * e, torus_f(t), 2 * e / (1 - e)


# ---------------------------------------------------------------------------
# full analysis


@dataclass
class AnalysisReport:
    spectral_gap: float
    fixed_point_dim: int
    tcb: float
    tcb_method: str
    cb_index: float
    cb_index_exact: bool
    certificate: Optional[CurvatureCertificate]
    curvature_report: Optional[VerificationReport]
    estimate: MlsiEstimate


def analyze_model(
    model: SemigroupModel,
    tcb_method: str = "exact",
    search_starts: int = 4,
    seed: int = 0,
    cert: Optional[CurvatureCertificate] = None,
    max_iters: int = 2000,
) -> AnalysisReport:
    """Gap, return time, curvature certificate, lower bound and search upper bound."""
    gap = spectral_gap(model.generator)
    t, method = tcb(model, tcb_method)
    idx = cb_index(model.space, model.fixed_algebra)
    rep = None
    if cert is None:
        cert, rep = certify(model, seed=seed)
    est = mlsi_lower_bound(model, cert, t)
    if search_starts > 0:
        up = optimal_mlsi_upper(model, n_starts=search_starts, seed=seed, max_iters=max_iters)
        est.upper_bound, est.witness = up.upper_bound, up.witness
    return AnalysisReport(gap, model.fixed_algebra.dim, t, method, idx.value, idx.exact, cert, rep, est)


__all__ = [
    "AnalysisReport",
    "CurvatureCertificate",
    "MlsiEstimate",
    "TORUS_FLOOR",
    "analyze_model",
    "certify",
    "ge_kernel",
    "ge_numeric_check",
    "ge_scalar_check",
    "kappa",
    "mlsi_lower_bound",
    "mlsi_ratio",
    "optimal_mlsi_upper",
    "tcb",
    "tcb_bound",
    "tcb_exact_ergodic",
    "torus_bracket",
    "torus_clsi",
    "torus_f",
    "torus_sandwich",
    "torus_tcb",
]
