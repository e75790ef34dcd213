import numpy as np
import pytest

from krgraph.errors import KrgraphError
from krgraph.evaluation import (
    BenchScenario,
    CvGrid,
    NMSE_FLOOR_DB,
    cross_validate,
    fold_assignment,
    heat_kernel,
    krr_baseline,
    nmse_db,
    nmse_db_from_energies,
    run_benchmark,
    save_results_csv,
)
from krgraph.graphs import Laplacian, build_laplacian, erdos_renyi
from krgraph.kernels import KernelSpec
from krgraph.synthdata import Dataset, SynthConfig, make_synthetic_dataset
from oracles import random_laplacian_matrix, random_psd


class TestNmse:
    def test_perfect_fit_floored(self):
        T0 = np.ones((3, 3))
        assert nmse_db(T0, T0) == NMSE_FLOOR_DB

    def test_zero_prediction_is_0db(self):
        T0 = np.random.default_rng(0).standard_normal((4, 4))
        assert nmse_db(np.zeros_like(T0), T0) == pytest.approx(0.0)

    def test_minus_20db_case(self):
        rng = np.random.default_rng(1)
        T0 = rng.standard_normal((10, 10))
        e = rng.standard_normal((10, 10))
        e *= np.sqrt(0.01 * np.sum(T0**2) / np.sum(e**2))
        assert nmse_db(T0 + e, T0) == pytest.approx(-20.0, abs=1e-9)

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        Y, T0 = rng.standard_normal((5, 3)), rng.standard_normal((5, 3))
        for c in (0.1, -3.0, 100.0):
            assert nmse_db(c * Y, c * T0) == pytest.approx(nmse_db(Y, T0))

    def test_zero_reference_rejected(self):
        with pytest.raises(KrgraphError):
            nmse_db(np.ones((2, 2)), np.zeros((2, 2)))

    def test_energy_averaging(self):
        assert nmse_db_from_energies(1.0, 100.0) == pytest.approx(-20.0)
        assert nmse_db_from_energies(0.0, 1.0) == NMSE_FLOOR_DB


class TestFoldAssignment:
    def test_partition(self):
        folds = fold_assignment(23, 5, seed=0)
        assert len(folds) == 5
        allidx = np.sort(np.concatenate(folds))
        assert np.array_equal(allidx, np.arange(23))

    def test_deterministic(self):
        a = fold_assignment(10, 3, seed=1)
        b = fold_assignment(10, 3, seed=1)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))

    def test_too_many_folds(self):
        with pytest.raises(KrgraphError):
            fold_assignment(3, 5, seed=0)


def _toy_dataset(seed=0, n=20, M=5):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, 3))
    L = Laplacian(random_laplacian_matrix(rng, M))
    W = rng.standard_normal((3, M))
    T0 = X @ W
    T = T0 + 0.1 * rng.standard_normal((n, M))
    return Dataset(X=X, T=T, T0=T0), L


class TestCrossValidate:
    def test_single_point_grid(self):
        train, L = _toy_dataset()
        grid = CvGrid(alphas=[0.5], betas=[0.7], folds=4)
        best, table = cross_validate(train, L, grid, "LRG", seed=0)
        assert best == {"alpha": 0.5, "beta": 0.7, "sigma_sq": None}
        assert len(table) == 1

    def test_duplicate_points_same_score(self):
        train, L = _toy_dataset(1)
        grid = CvGrid(alphas=[0.5, 0.5], betas=[0.1], folds=4)
        _, table = cross_validate(train, L, grid, "LRG", seed=0)
        assert table[0]["nmse_db"] == table[1]["nmse_db"]

    def test_graph_free_methods_pin_beta(self):
        train, L = _toy_dataset(2)
        grid = CvGrid(alphas=[0.1, 1.0], betas=[0.0, 5.0],
                      sigma_sqs=[1.0], folds=4)
        best, table = cross_validate(train, L, grid, "KR", seed=0)
        assert best["beta"] == 0.0
        assert len(table) == 2  # beta grid collapsed

    def test_tie_break_toward_smaller(self):
        # noiseless targets and a grid whose points all fit perfectly:
        # every score hits the floor, smallest (alpha, beta) must win
        rng = np.random.default_rng(3)
        X = rng.standard_normal((12, 2))
        T0 = X @ rng.standard_normal((2, 3))
        train = Dataset(X=X, T=T0, T0=T0)
        L = Laplacian(np.zeros((3, 3)))
        grid = CvGrid(alphas=[1e-12, 1e-11], betas=[0.0, 1e-12], folds=3)
        best, _ = cross_validate(train, L, grid, "LRG", seed=0)
        assert best["alpha"] == 1e-12
        assert best["beta"] == 0.0

    def test_smooth_data_selects_positive_beta(self):
        # targets generated smooth over a known graph: KRG's in-grid CV
        # should pick beta > 0 most of the time
        wins = 0
        reps = 20
        for seed in range(reps):
            cfg = SynthConfig(num_nodes=15, num_samples=30,
                              graph_model="erdos_renyi", graph_param=0.3,
                              snr_db=0.0, seed=1000 + seed)
            train, _, graph, C_S = make_synthetic_dataset(cfg)
            L = build_laplacian(graph)
            spec = KernelSpec(kind="precomputed", precomputed=C_S)
            grid = CvGrid(alphas=[0.01, 0.1, 1.0], betas=[0.0, 0.1, 1.0],
                          folds=5)
            best, _ = cross_validate(train, L, grid, "KRG", seed=seed,
                                     kernel_spec=spec)
            if best["beta"] > 0:
                wins += 1
        assert wins >= 0.8 * reps


class TestKrrBaseline:
    def test_hand_computed_p4_s2(self):
        K_bar = np.array([
            [2.0, 1.0, 0.5, 0.2],
            [1.0, 2.0, 1.0, 0.5],
            [0.5, 1.0, 2.0, 1.0],
            [0.2, 0.5, 1.0, 2.0],
        ])
        obs = [2, 3]
        x = np.array([1.0, -1.0])
        mu = 0.25
        # direct evaluation with the selection matrix written out
        Phi = np.zeros((2, 4))
        Phi[0, 2] = Phi[1, 3] = 1.0
        inner = Phi @ K_bar @ Phi.T + mu * 2 * np.eye(2)
        expected = K_bar @ Phi.T @ np.linalg.solve(inner, x)
        np.testing.assert_allclose(krr_baseline(K_bar, obs, x, mu), expected,
                                   rtol=1e-12)

    def test_full_observation_interpolation(self):
        rng = np.random.default_rng(4)
        K_bar = random_psd(rng, 5) + np.eye(5)
        x = rng.standard_normal(5)
        est = krr_baseline(K_bar, np.arange(5), x, mu=1e-10)
        np.testing.assert_allclose(est, x, atol=1e-6)

    def test_zero_observation(self):
        K_bar = np.eye(4)
        est = krr_baseline(K_bar, [0, 2], np.zeros(2), mu=0.1)
        assert np.array_equal(est, np.zeros(4))

    def test_bad_indices(self):
        with pytest.raises(KrgraphError):
            krr_baseline(np.eye(3), [0, 0], np.zeros(2), mu=0.1)
        with pytest.raises(KrgraphError):
            krr_baseline(np.eye(3), [0, 5], np.zeros(2), mu=0.1)

    def test_nonpositive_mu(self):
        with pytest.raises(KrgraphError):
            krr_baseline(np.eye(3), [0], np.zeros(1), mu=0.0)

    def test_heat_kernel_psd(self):
        L = build_laplacian(erdos_renyi(8, 0.4, seed=0))
        K = heat_kernel(L, 0.5)
        evals = np.linalg.eigvalsh(K)
        assert evals.min() > 0
        np.testing.assert_allclose(K, K.T, atol=1e-12)


SMALL_GRID = CvGrid(alphas=[0.1, 1.0], betas=[0.0, 1.0], folds=3)


def small_scenario(**overrides):
    base = dict(methods=("KRG",), n_train=(8,), snr_db=(5.0,),
                realizations=2, num_nodes=8, num_samples=20,
                graph_model="erdos_renyi", graph_param=0.4,
                grid=SMALL_GRID, master_seed=7)
    base.update(overrides)
    return BenchScenario(**base)


class TestRunBenchmark:
    def test_single_cell_two_rows(self):
        results, failures = run_benchmark(small_scenario(realizations=1))
        assert not failures
        assert len(results) == 2
        assert {r.split for r in results} == {"train", "test"}
        assert all(np.isfinite(r.nmse_db) for r in results)

    def test_krg_with_zero_beta_grid_equals_kr(self):
        grid0 = CvGrid(alphas=[0.1, 1.0], betas=[0.0], folds=3)
        res_kr, _ = run_benchmark(small_scenario(methods=("KR",), grid=grid0))
        res_krg, _ = run_benchmark(small_scenario(methods=("KRG",), grid=grid0))
        for a, b in zip(res_kr, res_krg):
            assert a.nmse_db == b.nmse_db
            assert a.split == b.split

    def test_deterministic(self):
        a, _ = run_benchmark(small_scenario())
        b, _ = run_benchmark(small_scenario())
        assert a == b

    def test_failed_cell_isolated(self):
        sc = small_scenario(n_train=(8, 500))  # 500 exceeds the pool
        results, failures = run_benchmark(sc)
        assert len(failures) == 1
        assert failures[0]["n_train"] == 500
        assert len(results) == 2  # the valid cell still completed

    def test_krr_rejected_in_scenario(self):
        with pytest.raises(KrgraphError):
            small_scenario(methods=("KRR",))

    def test_results_csv_schema(self, tmp_path):
        results, _ = run_benchmark(small_scenario(realizations=1))
        path = tmp_path / "results.csv"
        save_results_csv(path, results)
        lines = path.read_text().splitlines()
        assert lines[0] == "method,n_train,snr_db,split,nmse_db,realizations,seed"
        assert len(lines) == 3
