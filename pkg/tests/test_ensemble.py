import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from collapse_lab import cq, ensemble, qsd
from collapse_lab.errors import BadParameterError, DegenerateExpectedError, DimensionMismatchError
from collapse_lab.hilbert import harmonic_oscillator, pauli, superposition

H3, _ = harmonic_oscillator(3)
PSI = superposition([1 / 6, 2 / 3, 1 / 6])
MODEL = qsd.make_hamiltonian_model(H3, 0.25)
CFG = qsd.QsdConfig(dt=1e-3, t_max=60.0, record_stride=2000)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 500), min_size=2, max_size=6), st.integers(0, 2**32 - 1))
def test_chi_square_matches_scipy(counts, seed):
    if sum(counts) == 0:
        return
    p = np.random.default_rng(seed).dirichlet(np.ones(len(counts)))
    stat, pval = ensemble.chi_square_born(counts, p)
    ref = stats.chisquare(counts, p * sum(counts))
    assert stat == pytest.approx(ref.statistic, rel=1e-9)
    assert pval == pytest.approx(ref.pvalue, rel=1e-6, abs=1e-300)


def test_chi_square_edge_cases():
    assert ensemble.chi_square_born([3, 0], [1.0, 0.0]) == (0.0, 1.0)
    with pytest.raises(DegenerateExpectedError):
        ensemble.chi_square_born([3, 1], [1.0, 0.0])
    with pytest.raises(DimensionMismatchError):
        ensemble.chi_square_born([1, 2], [1.0])
    with pytest.raises(BadParameterError):
        ensemble.chi_square_born([1, 2], [0.3, 0.3])


def test_chi_square_poisson_accepts_poisson_and_rejects_other():
    rng = np.random.default_rng(0)
    assert ensemble.chi_square_poisson(rng.poisson(5, 5000), 5.0)[1] > 1e-3
    assert ensemble.chi_square_poisson(rng.binomial(10, 0.5, 5000), 5.0)[1] < 1e-6


def test_trace_distance():
    a = np.diag([1.0, 0.0])
    b = np.diag([0.0, 1.0])
    assert ensemble.trace_distance(a, b) == pytest.approx(1.0)
    assert ensemble.trace_distance(a, a) == 0.0
    plus = np.full((2, 2), 0.5)
    assert ensemble.trace_distance(a, plus) == pytest.approx(np.sqrt(0.5))


def test_worker_count_does_not_change_results():
    results = []
    for workers in (1, 3):
        ens = ensemble.EnsembleConfig(150, master_seed=11, workers=workers, keep_trajectories=2,
                                      chunk_size=32)
        results.append(ensemble.run_ensemble(PSI, CFG, ens, model=MODEL))
    a, b = results
    assert np.array_equal(a.mean_density, b.mean_density)
    assert np.array_equal(a.outcomes, b.outcomes)
    assert np.array_equal(a.collapse_times, b.collapse_times, equal_nan=True)
    assert a.stats == b.stats
    assert a.kept == b.kept and len(a.kept) == 2


def test_trajectory_i_uses_stream_i():
    ens = ensemble.EnsembleConfig(5, master_seed=3)
    res = ensemble.run_ensemble(PSI, CFG, ens, model=MODEL)
    from collapse_lab.noise import make_stream
    rec = qsd.run_trajectory(PSI, MODEL, CFG, make_stream(3, 4))
    assert res.outcomes[4] == (-1 if rec.outcome is None else rec.outcome)


def test_stats_bookkeeping():
    ens = ensemble.EnsembleConfig(200, master_seed=1)
    res = ensemble.run_ensemble(PSI, CFG, ens, model=MODEL)
    s = res.stats
    assert s.n_trajectories == 200
    assert s.counts.sum() + s.unresolved_count == 200
    assert np.allclose(s.expected, [1 / 6, 2 / 3, 1 / 6])
    assert s.histogram_counts.sum() == np.isfinite(res.collapse_times).sum()
    assert np.allclose(np.trace(res.mean_density, axis1=1, axis2=2), 1.0)
    d = s.as_dict()
    assert d["counts"] == [int(c) for c in s.counts]


def test_cq_ensemble():
    initial = cq.HybridState(superposition([1 / 3, 2 / 3]))
    ens = ensemble.EnsembleConfig(300, master_seed=5, engine="cq", keep_trajectories=1)
    res = ensemble.run_ensemble(initial, cq.CqToyConfig(), ens)
    assert res.jump_counts.shape == (300,)
    assert res.mean_density.shape == (cq.CqToyConfig().n_steps + 1, 2, 2)
    assert np.allclose(res.mean_populations()[0], [1 / 3, 2 / 3])
    # the ensemble populations are unchanged by Born-weighted projections
    assert np.allclose(res.mean_populations()[-1], [1 / 3, 2 / 3], atol=0.08)


def test_sigma_z_dephasing_small_ensemble_against_oracle():
    from collapse_lab import lindblad
    model = qsd.make_position_model(np.zeros((2, 2)), pauli("z"), 0.5)
    cfg = qsd.QsdConfig(dt=1e-3, t_max=2.0, record_stride=500)
    psi = superposition([0.5, 0.5])
    res = ensemble.run_ensemble(psi, cfg, ensemble.EnsembleConfig(2000, 9), model=model)
    oracle = lindblad.propagate_series(np.outer(psi, psi.conj()),
                                       lindblad.MasterEquationModel.from_collapse_model(model),
                                       res.times)
    dist = [ensemble.trace_distance(a, b) for a, b in zip(res.mean_density, oracle)]
    assert max(dist) < 0.05


def test_config_validation():
    with pytest.raises(BadParameterError):
        ensemble.EnsembleConfig(0)
    with pytest.raises(BadParameterError):
        ensemble.EnsembleConfig(10, workers=0)
    with pytest.raises(BadParameterError):
        ensemble.EnsembleConfig(10, engine="mc")
    with pytest.raises(BadParameterError):
        ensemble.run_ensemble(PSI, CFG, ensemble.EnsembleConfig(2))
