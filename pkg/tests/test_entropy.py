import math

import numpy as np
import pytest
from scipy.linalg import logm

from conftest import random_pd
from qmsemigroup.algebra import conditional_expectation, diagonal_algebra, scalars
from qmsemigroup.errors import NotStrictlyPositive, ValidationError
from qmsemigroup.entropy import (
    check_density,
    decay_trajectory,
    entropy,
    fisher_information,
    relative_entropy,
    relative_entropy_to_algebra,
)
from qmsemigroup.models import depolarizing, shipped_models
from qmsemigroup.semigroup import evolve, random_density
from qmsemigroup.verify import WITNESS, bell_model, bell_state


def rel_ent_oracle(rho, sigma):
    n = rho.shape[0]
    return float(np.real(np.trace(rho @ (logm(rho) - logm(sigma)))) / n)


class TestEntropy:
    def test_identity_is_zero(self):
        assert entropy(np.eye(4)) == 0

    def test_pure_state(self):
        # tau-normalized pure state n |v><v| has H = log n
        v = np.array([1, 0, 0])
        assert math.isclose(entropy(3 * np.outer(v, v)), math.log(3))

    def test_witness(self):
        want = (1.5 * math.log(1.5) + 2 * 0.75 * math.log(0.75)) / 3
        assert math.isclose(entropy(WITNESS), want, abs_tol=1e-15)


class TestRelativeEntropy:
    def test_oracle(self, rng):
        for n in (2, 3, 4):
            rho, sig = random_pd(rng, n), random_pd(rng, n)
            assert abs(relative_entropy(rho, sig) - rel_ent_oracle(rho, sig)) < 1e-10

    def test_self_is_zero(self, rng):
        rho = random_pd(rng, 3)
        assert abs(relative_entropy(rho, rho)) < 1e-12

    def test_support(self):
        rho = np.diag([1.0, 1.0])
        sig = np.diag([2.0, 0.0])
        assert relative_entropy(rho, sig) == math.inf
        assert math.isclose(relative_entropy(sig, rho), math.log(2) * 2 / 2)

    def test_witness_closed_forms(self):
        assert abs(relative_entropy(WITNESS, np.eye(3)) - math.log(3 / (2 * math.sqrt(2)))) < 1e-12
        assert abs(relative_entropy(np.eye(3), WITNESS) - math.log(2 ** (5 / 3) / 3)) < 1e-12

    def test_to_algebra(self, rng):
        e = conditional_expectation(diagonal_algebra(3))
        rho = random_pd(rng, 3)
        d = relative_entropy_to_algebra(rho, e)
        assert abs(d - rel_ent_oracle(rho, e(rho))) < 1e-10
        assert d >= 0

    def test_additivity(self, rng):
        # D(rho||s) = D(rho||E rho) + D(E rho||s) for s in N
        e = conditional_expectation(diagonal_algebra(4))
        rho = random_pd(rng, 4)
        s = np.diag(rng.uniform(0.5, 1.5, 4))
        s = s / np.trace(s) * 4
        lhs = relative_entropy(rho, s)
        rhs = relative_entropy_to_algebra(rho, e) + relative_entropy(e(rho), s)
        assert abs(lhs - rhs) < 1e-12

    def test_bell(self):
        m = bell_model()
        rho = bell_state()
        er = m.E(rho)
        f = relative_entropy(rho, er)
        r = relative_entropy(er, rho)
        assert round(f, 3) == 0.313 and round(r, 3) == 0.291
        # the reduced state is 1/2 1 (x) 1/2 ... in tau units E(rho) = 1
        assert np.allclose(er, np.eye(4))
        wf = 0.25 * (2.5 * math.log(2.5) + 3 * 0.5 * math.log(0.5))
        wr = -0.25 * (math.log(2.5) + 3 * math.log(0.5))
        assert abs(f - wf) < 1e-12 and abs(r - wr) < 1e-12


class TestDensity:
    def test_rejects(self):
        with pytest.raises(ValidationError):
            check_density(np.diag([2.0, 1.0]))
        with pytest.raises(ValidationError):
            check_density(np.diag([2.5, -0.5]))

    def test_accepts(self):
        assert check_density(np.eye(2)).dtype == complex


class TestFisher:
    def test_strict_positivity(self):
        with pytest.raises(NotStrictlyPositive):
            fisher_information(depolarizing(2), np.diag([2.0, 0.0]))

    def test_depolarizing_identity(self, rng):
        m = depolarizing(3)
        rho = random_pd(rng, 3)
        i = fisher_information(m, rho)
        d1 = relative_entropy(rho, m.E(rho))
        d2 = relative_entropy(m.E(rho), rho)
        assert abs(i - (d1 + d2)) < 1e-10

    @pytest.mark.parametrize("name", ["depolarizing-3", "schur-3", "chain-S3", "pauli-2"])
    def test_entropy_derivative(self, name, rng):
        m = shipped_models()[name]()
        rho = random_density(m.space, rng)
        h = 1e-5
        d0 = relative_entropy_to_algebra(m.evolve(rho, 0.0), m.cond_exp)
        d2 = relative_entropy_to_algebra(m.evolve(rho, 2 * h), m.cond_exp)
        fd = (d0 - d2) / (2 * h)
        i = fisher_information(m, m.evolve(rho, h))
        assert abs(fd - i) <= 1e-5 * max(1.0, i)

    def test_zero_at_fixed_point(self):
        assert fisher_information(depolarizing(3), np.eye(3)) == 0


class TestTrajectory:
    def test_monotone(self, rng):
        m = shipped_models()["pauli-3"]()
        rho = random_density(m.space, rng)
        tr = decay_trajectory(m, rho, np.linspace(0, 3, 31))
        assert np.all(np.diff(tr.relative_entropies) <= 1e-12)
        assert tr.fisher_values[0] > 0

    def test_csv(self):
        m = depolarizing(2)
        tr = decay_trajectory(m, np.diag([1.5, 0.5]), [0.0, 1.0])
        lines = tr.to_csv().splitlines()
        assert lines[0] == "t,D,I" and len(lines) == 3

    def test_half_decay(self):
        # on M_2 the depolarizing entropy contracts at least as e^{-t}
        m = depolarizing(2)
        rho = np.diag([1.8, 0.2])
        tr = decay_trajectory(m, rho, np.linspace(0, 4, 9))
        d0 = tr.relative_entropies[0]
        assert np.all(tr.relative_entropies <= np.exp(-tr.times) * d0 + 1e-12)

    def test_bad_grid(self):
        with pytest.raises(ValidationError):
            decay_trajectory(depolarizing(2), np.eye(2), [1.0, 0.5])

    def test_fixed_point_stays_zero(self):
        tr = decay_trajectory(depolarizing(3), np.eye(3), [0.0, 1.0])
        assert np.all(tr.relative_entropies == 0)
        assert np.allclose(evolve(depolarizing(3), np.eye(3), 1.0), np.eye(3))


def test_scalars_expectation_entropy(rng):
    rho = random_pd(rng, 3)
    e = conditional_expectation(scalars(3))
    assert math.isclose(relative_entropy_to_algebra(rho, e), entropy(rho), abs_tol=1e-12)
