import csv
import json
from pathlib import Path

import numpy as np
import pytest

from oversmooth.errors import ParameterError
from oversmooth.graph import (SYNTHETIC_MODELS, EdgeListFile, ErdosRenyi, augmented_laplacian,
                              cycle_graph, generate, write_edge_list)
from oversmooth.perturb import (DROP, REWEIGHT, SUMMARY_COLUMNS, PerturbationSpec, n_selected,
                                perturb, run_experiment, select_edges, signal_energies,
                                summarize, write_summary_csv)
from oversmooth.spectral import eigendecompose, low_eig_mix

BASELINE = Path(__file__).parent / "baselines" / "rgg_fraction_increased.json"


class TestSelection:
    @pytest.mark.parametrize("ratio,m,k", [(0.1, 1022, 102), (0.5, 5, 3), (0.5, 7, 4), (0.25, 10, 3),
                                           (0.0, 10, 0), (1.0, 10, 10), (0.3, 10, 3), (0.15, 10, 2)])
    def test_rounding_half_up(self, ratio, m, k):
        assert n_selected(ratio, m) == k

    def test_distinct_sorted_seeded(self):
        g = cycle_graph(50)
        idx = select_edges(g, 0.4, seed=3)
        assert len(idx) == 20 and len(set(idx)) == 20
        assert np.all(np.diff(idx) > 0)
        np.testing.assert_array_equal(idx, select_edges(g, 0.4, seed=3))

    @pytest.mark.parametrize("kind,ratio", [("cut", 0.1), (DROP, -0.1), (DROP, 1.1)])
    def test_invalid_spec(self, kind, ratio):
        with pytest.raises(ParameterError):
            PerturbationSpec(kind, ratio)

    def test_invalid_weight(self):
        with pytest.raises(ParameterError):
            PerturbationSpec(REWEIGHT, 0.1, new_weight=0.0)


class TestPerturb:
    def test_drop_counts(self):
        g = cycle_graph(40)
        h = perturb(g, PerturbationSpec(DROP, 0.25, seed=1))
        assert h.n_edges == 30 and h.n_nodes == 40
        assert set(h.edges) < set(g.edges)

    def test_reweight_counts(self):
        g = cycle_graph(40)
        h = perturb(g, PerturbationSpec(REWEIGHT, 0.25, new_weight=7.0, seed=1))
        assert h.n_edges == 40
        assert np.sum(h.weight == 7.0) == 10 and np.sum(h.weight == 1.0) == 30

    def test_zero_ratio_is_identity(self):
        g = cycle_graph(10)
        assert perturb(g, PerturbationSpec(DROP, 0.0)) is g

    def test_full_drop(self):
        h = perturb(cycle_graph(10), PerturbationSpec(DROP, 1.0))
        assert h.n_edges == 0 and h.n_nodes == 10


@pytest.fixture(scope="module")
def small():
    return run_experiment(ErdosRenyi(40, 0.2), DROP, ratios=(0.0, 0.3), trials=3, t_mix=5)


class TestExperiment:
    def test_row_layout(self, small):
        assert len(small.rows) == 2 * 3 * 3
        assert small.points_per_ratio() == {0.0: 18, 0.3: 18}
        assert {(r.ratio, r.trial, r.k) for r in small.rows} == \
            {(a, t, k) for a in (0.0, 0.3) for t in range(3) for k in range(3)}

    def test_zero_ratio_rows_unchanged(self, small):
        for r in small.rows_for(0.0):
            assert r.e_pert == r.e_orig
        assert small.fraction_increased(0.0) == 0.0

    def test_energies_match_direct_computation(self, small):
        g = generate(ErdosRenyi(40, 0.2, seed=1))
        x = low_eig_mix(eigendecompose(augmented_laplacian(g)), 5, seed=1)
        want = signal_energies(g, x)
        got = [r.e_orig for r in small.rows_for(0.3) if r.trial == 1]
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_propagation_lowers_energy(self, small):
        for t in range(3):
            e = [r.e_orig for r in small.rows_for(0.3) if r.trial == t]
            assert e[0] >= e[1] >= e[2]

    def test_deterministic_and_workers(self, small):
        again = run_experiment(ErdosRenyi(40, 0.2), DROP, ratios=(0.0, 0.3), trials=3, t_mix=5,
                               workers=3)
        assert again.rows == small.rows

    def test_reuse_mode_keeps_signal(self):
        r = run_experiment(ErdosRenyi(30, 0.3), DROP, ratios=(0.5,), trials=2, t_mix=4, remix=False)
        assert r.metadata["remix"] is False and len(r.rows) == 6

    def test_t_exceeds_nodes(self):
        with pytest.raises(ParameterError):
            run_experiment(ErdosRenyi(10, 0.5), DROP, ratios=(0.1,), trials=1, t_mix=11)

    def test_file_model_loaded_once(self, tmp_path):
        path = tmp_path / "g.edges"
        write_edge_list(generate(ErdosRenyi(30, 0.3, seed=2)), path)
        r = run_experiment(EdgeListFile(str(path)), REWEIGHT, ratios=(0.2,), trials=3, t_mix=4)
        firsts = {r_.e_orig for r_ in r.rows if r_.k == 0}
        assert len(firsts) == 3  # distinct coefficients per trial on one graph
        assert r.metadata["n_edges"] == generate(ErdosRenyi(30, 0.3, seed=2)).n_edges

    def test_csv_outputs(self, small, tmp_path):
        small.to_csv(tmp_path / "e.csv")
        rows = list(csv.reader((tmp_path / "e.csv").open()))
        assert rows[0] == ["ratio", "trial", "k", "e_orig", "e_pert"] and len(rows) == 19
        small.eigenvalues_to_csv(tmp_path / "v.csv")
        rows = list(csv.reader((tmp_path / "v.csv").open()))
        assert rows[0] == ["ratio", "trial", "which", "index", "eigenvalue"]
        assert len(rows) == 1 + 2 * 3 * 2 * 40

    def test_summary(self, small, tmp_path):
        s = summarize(small)
        assert len(s) == 6
        zero = [row for row in s if row["ratio"] == 0.0]
        assert all(row["median_delta"] == 0.0 and row["n"] == 3 for row in zero)
        write_summary_csv(s, tmp_path / "s.csv")
        header = (tmp_path / "s.csv").read_text().splitlines()[0]
        assert header.split(",") == SUMMARY_COLUMNS


class TestBaseline:
    @pytest.mark.slow
    def test_rgg_fractions_match_recorded_baseline(self):
        doc = json.loads(BASELINE.read_text())
        for kind, fractions in doc["fraction_increased"].items():
            r = run_experiment(SYNTHETIC_MODELS["rgg"], kind, trials=doc["trials"],
                               t_mix=doc["t_mix"], base_seed=doc["base_seed"], remix=doc["remix"])
            got = {repr(x): r.fraction_increased(x) for x in r.ratios}
            assert got == pytest.approx(fractions, abs=1e-12)
