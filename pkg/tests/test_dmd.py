import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmdextrap.dmd import (
    DMD,
    DmdModel,
    apply_propagator,
    eigenvalue_powers,
    fit_dmd,
    load_model,
    predict,
    propagator_matrix,
    save_model,
)
from dmdextrap.exceptions import DegenerateData, PredictionOverflow
from dmdextrap.snapshots import IDENTITY, SnapshotPair, Trajectory, build_snapshot_pair
from oracles import match_sets, random_diagonalizable


def _linear_traj(k, u0, n_states, dt=1.0):
    states = [np.asarray(u0, dtype=float)]
    for _ in range(n_states - 1):
        states.append(k @ states[-1])
    return Trajectory(states=np.array(states), dt=dt)


class TestFit:
    def test_scalar_geometric(self):
        tr = _linear_traj(np.array([[0.5]]), [1.0], 5)
        model = fit_dmd(build_snapshot_pair(tr, 4), rank_eps=1e-10)
        np.testing.assert_allclose(model.lam, [0.5])
        np.testing.assert_allclose(model.phi @ model.b, [1.0])

    def test_diagonal_two_by_two(self):
        k = np.diag([0.9, 0.5])
        model = fit_dmd(build_snapshot_pair(_linear_traj(k, [1.0, 1.0], 5), 4))
        assert match_sets(model.lam, np.linalg.eigvals(k)) < 1e-12
        np.testing.assert_allclose(propagator_matrix(model), k, atol=1e-8)

    @pytest.mark.parametrize("amplitudes", ["shifted", "first"])
    def test_amplitude_modes_agree_on_linear_data(self, amplitudes, rng):
        k, _ = random_diagonalizable(5, rng)
        tr = _linear_traj(k, rng.standard_normal(5), 12)
        model = fit_dmd(build_snapshot_pair(tr, 10), amplitudes=amplitudes)
        np.testing.assert_allclose(predict(model, np.arange(12)).T, tr.states, atol=1e-9)
        assert model.anchor == (0 if amplitudes == "first" else 1)

    def test_heat_decay_rate(self, ref):
        from dmdextrap.solvers import make_problem, solve

        p = make_problem("1a", n_grid=100, ic=lambda x: np.sin(np.pi * x),
                         bc_right=lambda t: 0.0 * t, step_multiple=499)
        tr = solve(p, 500)
        model = fit_dmd(build_snapshot_pair(tr, 100))
        dominant = np.abs(model.lam).max()
        assert dominant == pytest.approx(math.exp(-math.pi**2 * tr.dt), rel=1e-3)

    def test_rejects_zero_data(self):
        pair = SnapshotPair(x=np.zeros((3, 4)), x_prime=np.zeros((3, 4)), dt=1.0, m=4)
        with pytest.raises(DegenerateData):
            fit_dmd(pair)

    def test_bad_amplitude_mode(self):
        tr = _linear_traj(np.eye(1) * 0.5, [1.0], 4)
        with pytest.raises(ValueError):
            fit_dmd(build_snapshot_pair(tr, 3), amplitudes="last")

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**31 - 1))
    def test_exact_recovery_property(self, dim, seed):
        rng = np.random.default_rng(seed)
        k, eigs = random_diagonalizable(dim, rng)
        tr = _linear_traj(k, rng.standard_normal(dim), 2 * dim + 3)
        model = fit_dmd(build_snapshot_pair(tr, 2 * dim + 2), rank_eps=1e-10)
        if model.rank == dim:
            assert match_sets(model.lam, eigs) < 1e-6


class TestPredict:
    def _geometric(self):
        return DmdModel(phi=np.array([[1.0 + 0j]]), lam=np.array([0.5 + 0j]),
                        b=np.array([1.0 + 0j]), m=4, dt=1.0, observable=IDENTITY,
                        phi_pinv=np.array([[1.0 + 0j]]), is_real=True, sigma=np.ones(1))

    def test_geometric_power(self):
        assert predict(self._geometric(), 3)[0] == pytest.approx(0.125)

    def test_zeroth_power(self):
        assert predict(self._geometric(), 0)[0] == pytest.approx(1.0)

    def test_binary_exponentiation_matches_power(self):
        lam = np.array([0.99 * np.exp(0.3j), -0.5, 1.0])
        n = np.array([0, 1, 2, 7, 64, 499])
        np.testing.assert_allclose(eigenvalue_powers(lam, n), lam[:, None] ** n, rtol=1e-13)

    def test_overflow(self):
        with pytest.raises(PredictionOverflow):
            eigenvalue_powers(np.array([10.0]), [400])

    def test_negative_step(self):
        with pytest.raises(ValueError):
            eigenvalue_powers(np.array([0.5]), [-1])

    def test_rank_one_propagator(self):
        np.testing.assert_allclose(propagator_matrix(self._geometric()), [[0.5]])

    def test_projector_for_unit_spectrum(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((5, 2)))
        model = DmdModel(phi=q.astype(complex), lam=np.ones(2, complex), b=np.ones(2, complex),
                         m=2, dt=1.0, observable=IDENTITY, phi_pinv=q.T.astype(complex),
                         is_real=True, sigma=np.ones(2))
        np.testing.assert_allclose(propagator_matrix(model), q @ q.T, atol=1e-14)

    def test_apply_propagator_matches_matrix(self, rng):
        k, _ = random_diagonalizable(4, rng)
        model = fit_dmd(build_snapshot_pair(_linear_traj(k, rng.standard_normal(4), 9), 8))
        y = rng.standard_normal((4, 3))
        np.testing.assert_allclose(apply_propagator(model, y), propagator_matrix(model) @ y,
                                   atol=1e-12)

    def test_test1a_approaches_linear_steady_state(self, ref):
        _, tr = ref("1a")
        model = fit_dmd(build_snapshot_pair(tr, 200))
        x = np.linspace(0.0, 1.0, tr.n_dof)
        # end of the horizon: matches the reference, which is still 0.09 from u = x
        end = predict(model, 499)
        assert np.linalg.norm(end - tr.states[-1]) < 1e-5
        assert np.abs(tr.states[-1] - x).max() > 1e-2
        # far beyond the horizon the prediction settles on u = x
        assert np.abs(predict(model, 20000) - x).max() < 1e-3


class TestSerialization:
    def test_round_trip(self, tmp_path, rng):
        k, _ = random_diagonalizable(3, rng)
        model = fit_dmd(build_snapshot_pair(_linear_traj(k, rng.standard_normal(3), 8), 7),
                        observable="cubic")
        save_model(tmp_path / "m.npz", model)
        back = load_model(tmp_path / "m.npz")
        np.testing.assert_array_equal(back.phi, model.phi)
        np.testing.assert_array_equal(back.lam, model.lam)
        assert back.observable == model.observable
        assert (back.m, back.dt, back.is_real, back.anchor) == (7, 1.0, True, 1)


class TestEstimator:
    def test_docstring_example(self):
        states = 0.5 ** np.arange(6)[None, :]
        est = DMD(rank_eps=1e-10).fit(states)
        np.testing.assert_allclose(est.predict(3), [0.125])
        assert est.rank_ == 1 and est.n_snapshots_ == 5

    def test_params(self):
        est = DMD(observable="cubic", n_snapshots=40)
        assert est.get_params()["observable"] == "cubic"
        assert est.set_params(rank_eps=1e-12).rank_eps == 1e-12

    def test_unfitted(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            DMD().predict(1)

    def test_fit_on_trajectory_uses_n_snapshots(self, ref):
        _, tr = ref("2b")
        est = DMD(observable="cubic", n_snapshots=100).fit(tr)
        assert est.model_.m == 100
        assert est.modes_.shape[0] == 2 * tr.n_dof
