"""Golden-value checks for the reference examples.

Each check computes one scalar and compares it with an expected value under
its own relation and tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from . import constants as C
from . import models
from .algebra import cb_index, conditional_expectation, diagonal_algebra, scalars
from .entropy import (
    entropy,
    fisher_information,
    relative_entropy,
    relative_entropy_to_algebra,
)
from .linalg import cb_norm_1_to_inf, choi
from .semigroup import (
    Derivation,
    evolve,
    gradient_form,
    random_density,
    spectral_gap,
    verify_derivation,
    verify_intertwining,
)

RELATIONS = ("abs", "le", "ge", "lt", "gt")


@dataclass(frozen=True)
class Check:
    id: str
    group: str
    locus: str
    expected: float
    compute: Callable[[], float]
    tol: float
    relation: str = "abs"


@dataclass
class CheckResult:
    check: Check
    computed: float
    passed: bool

    def row(self) -> dict:
        c = self.check
        return {
            "id": c.id,
            "group": c.group,
            "locus": c.locus,
            "relation": c.relation,
            "expected": c.expected,
            "computed": self.computed,
            "tolerance": c.tol,
            "passed": self.passed,
        }


def compare(relation: str, computed: float, expected: float, tol: float) -> bool:
    if not math.isfinite(computed):
        return False
    if relation == "abs":
        return abs(computed - expected) <= tol
    if relation == "le":
        return computed <= expected + tol
    if relation == "ge":
        return computed >= expected - tol
    if relation == "lt":
        return computed < expected - tol
    if relation == "gt":
        return computed > expected + tol
    raise ValueError(relation)


# ---------------------------------------------------------------------------
# fixtures


WITNESS = np.diag([1.5, 0.75, 0.75]).astype(complex)


def bell_state() -> np.ndarray:
    """``(5/8) phi_1 + (1/8)(phi_2 + phi_3 + phi_4)`` scaled to ``tau = 1`` on ``M_4``."""
    s = 1 / math.sqrt(2)
    vecs = [
        np.array([1, 0, 0, 1]) * s,
        np.array([1, 0, 0, -1]) * s,
        np.array([0, 1, 1, 0]) * s,
        np.array([0, 1, -1, 0]) * s,
    ]
    w = [5 / 8, 1 / 8, 1 / 8, 1 / 8]
    rho = sum(p * np.outer(v, v) for p, v in zip(w, vecs))
    return 4 * rho.astype(complex)


def bell_model():
    return models.depolarizing(2).tensor(2)


def _pauli_xyz_derivation() -> Derivation:
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1.0, -1.0]).astype(complex)
    return Derivation.commutators(np.stack([x, y, z]), 1 / (2 * math.sqrt(2)))


def _schur_gamma_defect() -> float:
    b = models.line_schur_matrix(3)
    m = models.schur_semigroup(b)
    vec = m.extras["gram_vectors"]
    dev = 0.0
    for i in range(3):
        for j in range(3):
            for k in range(3):
                eij = np.zeros((3, 3)); eij[i, j] = 1
                eik = np.zeros((3, 3)); eik[i, k] = 1
                ejk = np.zeros((3, 3)); ejk[j, k] = 1
                want = float((vec[i] - vec[j]) @ (vec[i] - vec[k])) * ejk
                dev = max(dev, float(np.max(np.abs(gradient_form(m.generator, eij, eik) - want))))
    return dev


def _chain_gamma_defect() -> float:
    m = models.group_chain(models.GroupChainSpec(models.symmetric_group(3), models.s3_class_rates()))
    w = m.extras["rate_matrix"]
    dev = 0.0
    for g in range(6):
        for h in range(6):
            if g == h:
                continue
            eg = np.zeros((6, 6)); eg[g, g] = 1
            eh = np.zeros((6, 6)); eh[h, h] = 1
            want = -0.5 * w[g, h] * (eg + eh)
            dev = max(dev, float(np.max(np.abs(gradient_form(m.generator, eg, eh) - want))))
    return dev


def _closed_form_defect() -> float:
    m = models.depolarizing(3)
    rng = np.random.default_rng(0)
    dev = 0.0
    for t in (0.1, 1.0, 3.0):
        r = random_density(m.space, rng)
        closed = math.exp(-t) * r + (1 - math.exp(-t)) * m.E(r)
        dev = max(dev, float(np.max(np.abs(m.generator.semigroup(t)(r) - closed))))
    return dev


def _additivity_defect() -> float:
    m = bell_model()
    rng = np.random.default_rng(1)
    dev = 0.0
    for _ in range(5):
        r = random_density(m.space, rng)
        s = m.E(random_density(m.space, rng))
        lhs = relative_entropy(r, s)
        rhs = relative_entropy(r, m.E(r)) + relative_entropy(m.E(r), s)
        dev = max(dev, abs(lhs - rhs))
    return dev


def _eq11_defect() -> float:
    m = models.depolarizing(3)
    rng = np.random.default_rng(2)
    dev = 0.0
    for _ in range(10):
        r = random_density(m.space, rng)
        er = m.E(r)
        dev = max(dev, abs(fisher_information(m, r) - relative_entropy(r, er) - relative_entropy(er, r)))
    return dev


def _half_decay_excess() -> float:
    m = models.depolarizing(2)
    rng = np.random.default_rng(3)
    worst = -np.inf
    for _ in range(10):
        r = random_density(m.space, rng)
        d0 = relative_entropy_to_algebra(r, m.cond_exp)
        for t in (0.1, 0.5, 1.0, 2.0):
            dt = relative_entropy_to_algebra(evolve(m, r, t), m.cond_exp)
            worst = max(worst, dt - math.exp(-t) * d0)
    return float(worst)


def _sandwich_excess() -> float:
    worst = -np.inf
    for t in np.linspace(1.0, 3.0, 41):
        lo, f, hi = C.torus_sandwich(float(t))
        worst = max(worst, lo - f, f - hi)
    return float(worst)


def _chain_model(key):
    return models.shipped_models()[key]()


def _clsi_pipeline(model) -> float:
    cert, _ = C.certify(model)
    return C.mlsi_lower_bound(model, cert, C.tcb_bound(model)).candidates["kappa-pipeline"]


def build_checks() -> List[Check]:
    ln = math.log
    out = [
        # linalg
        Check("witness-spectrum-min", "linalg", "depolarizing M3 witness state", 0.75,
              lambda: float(np.linalg.eigvalsh(WITNESS)[0]), 1e-12),
        Check("witness-spectrum-max", "linalg", "depolarizing M3 witness state", 1.5,
              lambda: float(np.linalg.eigvalsh(WITNESS)[-1]), 1e-12),
        Check("choi-trace-expectation", "linalg", "Choi kernel of E_tau is 1(x)1", 0.0,
              lambda: float(np.max(np.abs(
                  choi(conditional_expectation(scalars(3)).superop) - np.eye(9)))), 1e-12),
        Check("cbnorm-trace-expectation", "linalg", "Choi kernel of E_tau is 1(x)1", 1.0,
              lambda: cb_norm_1_to_inf(conditional_expectation(scalars(3)).superop), 1e-12),
        Check("bell-reduced-state", "linalg", "Bell example reduced density 1/4 1(x)1", 0.0,
              lambda: float(np.max(np.abs(bell_model().E(bell_state()) / 4 - np.eye(4) / 4))), 1e-12),
        # algebra
        Check("cb-index-scalars", "algebra", "cb-index of C1 in M3", 2 * ln(3),
              lambda: cb_index(3, scalars(3)).value, 1e-12),
        Check("cb-index-diagonal", "algebra", "cb-index of diagonal in M3", ln(3),
              lambda: cb_index(3, diagonal_algebra(3)).value, 1e-12),
        Check("schur-fixed-diagonal", "algebra", "Schur fixed points contain the diagonal", 3.0,
              lambda: float(models.schur_semigroup(models.line_schur_matrix(3)).fixed_algebra.dim), 0.0),
        # semigroup
        Check("depolarizing-closed-form", "semigroup", "depolarizing closed-form evolution", 0.0,
              _closed_form_defect, 1e-10),
        Check("schur-gradient-form", "semigroup", "Schur gradient form on matrix units", 0.0,
              _schur_gamma_defect, 1e-10),
        Check("schur-gap", "semigroup", "Schur gap is min nonzero b_ij", 1.0,
              lambda: spectral_gap(models.schur_semigroup(models.line_schur_matrix(3)).generator), 1e-12),
        Check("pauli-derivation-m2", "semigroup", "Pauli commutator derivation on M2", 0.0,
              lambda: verify_derivation(_pauli_xyz_derivation(),
                                        models.depolarizing(2).generator).max_deviation, 1e-10),
        Check("chain-derivation", "semigroup", "finite-group commutator derivation", 0.0,
              lambda: verify_derivation(_chain_model("chain-S3").derivation,
                                        _chain_model("chain-S3").generator).max_deviation, 1e-10),
        Check("chain-intertwining", "semigroup", "finite-group zero-curvature intertwining", 0.0,
              lambda: _chain_intertwining(), 1e-8),
        # models
        Check("chain-gradient-form", "models", "finite-group gradient form on point masses", 0.0,
              _chain_gamma_defect, 1e-12),
        Check("chain-z2-clsi", "models", "group chain CLSI sigma/(4 log 2|G|), G = Z2", 2 / (4 * ln(4)),
              lambda: _clsi_pipeline(_chain_model("chain-Z2")), 1e-12),
        Check("pauli-clsi", "models", "Pauli channel CLSI sigma/(4 log 2m^2), m = 3, as a ratio",
              1.0, lambda: _pauli_clsi_ratio(), 1e-12),
        Check("schur-clsi", "models", "Schur CLSI sigma/(4(log m + log 2)), m = 3",
              1.0 / (4 * (ln(3) + ln(2))),
              lambda: _clsi_pipeline(models.schur_semigroup(models.line_schur_matrix(3))), 1e-12),
        # entropy
        Check("witness-entropy", "entropy", "D(rho||1) = log(3/(2 sqrt 2))", ln(3 / (2 * math.sqrt(2))),
              lambda: entropy(WITNESS), 1e-12),
        Check("witness-reverse", "entropy", "D(1||rho) = (1/3) log(32/27)", ln(2 ** (5 / 3) / 3),
              lambda: relative_entropy(np.eye(3), WITNESS), 1e-12),
        Check("bell-forward", "entropy", "Bell example D(rho||E rho) ~ 0.313", 0.313,
              lambda: relative_entropy_to_algebra(bell_state(), bell_model().cond_exp), 5e-4),
        Check("bell-reverse", "entropy", "Bell example D(E rho||rho) ~ 0.291", 0.291,
              lambda: relative_entropy(bell_model().E(bell_state()), bell_state()), 5e-4),
        Check("additivity", "entropy", "D(rho||s) = D(rho||E rho) + D(E rho||s)", 0.0,
              _additivity_defect, 1e-10),
        Check("fisher-identity", "entropy", "depolarizing I = D(rho||E rho) + D(E rho||rho)", 0.0,
              _eq11_defect, 1e-10),
        Check("half-decay", "entropy", "depolarizing M2 entropy contraction by e^-t", 0.0,
              _half_decay_excess, 1e-12, "le"),
        # constants
        Check("kappa-circle", "constants", "kappa(0, 1.5) = 1/6", 1 / 6, lambda: C.kappa(0.0, 1.5), 1e-15),
        Check("kappa-141", "constants", "kappa(0, 1.41)", 1 / (4 * 1.41), lambda: C.kappa(0.0, 1.41), 1e-15),
        Check("witness-ratio", "constants", "depolarizing M3 lacks 1-MLSI", 1.0,
              lambda: C.mlsi_ratio(models.depolarizing(3), WITNESS), 1e-6, "lt"),
        Check("ge-fails-at-1", "constants", "depolarizing M3 lacks 1-GE", 0.0,
              lambda: C.ge_numeric_check(models.depolarizing(3), models.depolarizing(3).derivation,
                                         1.0, states=[WITNESS]).max_deviation, 1e-8, "gt"),
        Check("ge-holds-d3", "constants", "depolarizing M3 has (1/2 + 1/(2d))-GE", 0.0,
              lambda: C.ge_numeric_check(models.depolarizing(3), models.depolarizing(3).derivation,
                                         2 / 3, states=[WITNESS]).max_deviation, 1e-8, "le"),
        Check("ge-scalar-max", "constants", "max xy(log x - log y)/(x - y) over S_d = d, d = 3", 3.0,
              lambda: C.ge_scalar_check(3, 3, 400)["max_ratio"], 1e-6),
        Check("bell-ratio", "constants", "MLSI((I - tau_2) (x) id) < 1", 1.0,
              lambda: C.mlsi_ratio(bell_model(), bell_state()), 1e-6, "lt"),
        Check("m2-search", "constants", "MLSI(I - tau_2) = 1", 1.0,
              lambda: C.optimal_mlsi_upper(models.depolarizing(2), n_starts=2, max_iters=800).upper_bound,
              1e-3, "ge"),
        Check("depolarizing-lower", "constants", "depolarizing M3 lower bound >= 1/2 + 1/(2d)", 2 / 3,
              lambda: _depolarizing_lower(3), 1e-12, "ge"),
        # torus
        Check("torus-tcb1-low", "torus", "circle t_cb >= ln 4", ln(4), lambda: C.torus_tcb(1), 0.0, "ge"),
        Check("torus-tcb1-high", "torus", "circle t_cb <= ln 5", ln(5), lambda: C.torus_tcb(1), 0.0, "le"),
        Check("torus-tcb1-141", "torus", "circle t_cb <= 1.41", 1.41, lambda: C.torus_tcb(1), 0.0, "le"),
        Check("torus-clsi1", "torus", "circle has 1/6-CLSI", 1 / 6, lambda: C.torus_clsi(1), 0.0, "ge"),
        Check("torus-tcb2", "torus", "2-torus t_cb <= 1.08", 1.08, lambda: C.torus_tcb(2), 1e-3, "le"),
        Check("torus-tcb3", "torus", "3-torus t_cb <= 0.98", 0.98, lambda: C.torus_tcb(3), 1e-3, "le"),
        Check("torus-tcb2-bound", "torus", "2-torus t_cb <= 1.35", 1.35, lambda: C.torus_tcb(2), 0.0, "le"),
        Check("torus-tcb3-bound", "torus", "3-torus t_cb <= 1.26", 1.26, lambda: C.torus_tcb(3), 0.0, "le"),
        Check("torus-floor", "torus", "dimension-free CLSI (4 ln 3)^-1", C.TORUS_FLOOR,
              lambda: 1 / (4 * C.torus_bracket(10 ** 9)[1]), 1e-9),
        Check("torus-sandwich", "torus", "2e^-t <= f(t) <= 2e^-t/(1 - e^-t) on [1, 3]", 0.0,
              _sandwich_excess, 0.0, "le"),
    ]
    return out


def _pauli_clsi_ratio() -> float:
    m = _chain_model("pauli-3")
    sigma = spectral_gap(m.generator)
    return _clsi_pipeline(m) / (sigma / (4 * math.log(2 * 3 ** 2)))


def _chain_intertwining() -> float:
    m = _chain_model("chain-S3")
    return verify_intertwining(m.derivation, m, m.extension, 0.0).max_deviation


def _depolarizing_lower(d: int) -> float:
    m = models.depolarizing(d)
    cert, _ = C.certify(m)
    return C.mlsi_lower_bound(m, cert, C.tcb(m)[0]).lower_bound


def run_checks(filter: Optional[str] = None, perturb: Optional[str] = None) -> List[CheckResult]:
    """Run the golden checks whose id or group contains ``filter``.

    ``perturb`` names a check whose computed value is pushed away from its
    expected value; it exists to test the harness itself.
    """
    results = []
    for c in build_checks():
        if filter and filter not in c.group and filter not in c.id:
            continue
        val = float(c.compute())
        if perturb == c.id:
            shift = 10.0 * (1.0 + abs(c.expected))
            val = val - shift if c.relation in ("ge", "gt") else val + shift
        results.append(CheckResult(c, val, compare(c.relation, val, c.expected, c.tol)))
    return results
