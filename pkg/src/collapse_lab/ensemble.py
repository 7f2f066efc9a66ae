"""Reproducible trajectory ensembles and their statistics.

Trajectory ``i`` always uses stream ``(master_seed, i)`` and trajectories are
grouped into fixed-size chunks whose partial sums are reduced in index
order, so results are bitwise independent of the worker count.
"""

import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import cq as cq_mod
from . import qsd as qsd_mod
from .errors import (
    BadParameterError,
    CollapseLabError,
    DegenerateExpectedError,
    DimensionMismatchError,
    TrajectoryError,
)
from .hilbert import normalize
from .noise import make_stream

ENGINES = ("qsd", "cq")
HISTOGRAM_BINS = 50


@dataclass(frozen=True)
class EnsembleConfig:
    n_trajectories: int
    master_seed: int = 0
    workers: int = 1
    engine: str = "qsd"
    keep_trajectories: int = 0
    chunk_size: int = 64

    def __post_init__(self):
        if self.n_trajectories < 1:
            raise BadParameterError("n_trajectories must be >= 1")
        if self.workers < 1:
            raise BadParameterError("workers must be >= 1")
        if self.engine not in ENGINES:
            raise BadParameterError(f"engine must be one of {ENGINES}")
        if self.chunk_size < 1 or self.keep_trajectories < 0:
            raise BadParameterError("chunk_size must be >= 1 and keep_trajectories >= 0")


@dataclass(frozen=True)
class OutcomeStats:
    counts: np.ndarray
    frequencies: np.ndarray
    unresolved_count: int
    expected: np.ndarray
    chi_square: tuple
    histogram_edges: np.ndarray
    histogram_counts: np.ndarray

    @property
    def n_trajectories(self):
        return int(self.counts.sum()) + self.unresolved_count

    def as_dict(self):
        return {
            "n_trajectories": self.n_trajectories,
            "counts": [int(c) for c in self.counts],
            "frequencies": [float(f) for f in self.frequencies],
            "unresolved_count": int(self.unresolved_count),
            "expected": [float(p) for p in self.expected],
            "chi_square_statistic": float(self.chi_square[0]),
            "chi_square_p_value": float(self.chi_square[1]),
            "collapse_time_histogram": {
                "edges": [float(e) for e in self.histogram_edges],
                "counts": [int(c) for c in self.histogram_counts],
            },
        }

    def __eq__(self, other):
        if not isinstance(other, OutcomeStats):
            return NotImplemented
        return self.as_dict() == other.as_dict()


@dataclass
class EnsembleResult:
    """Ensemble output.

    ``mean_density[t]`` is the average of ``|psi_i><psi_i|`` at ``times[t]``
    (qubit density for the CQ engine).  ``outcomes`` holds -1 for unresolved
    trajectories and ``collapse_times`` NaN.  ``final_populations[i]`` are
    the reference-basis populations of trajectory ``i`` at ``t_max``.
    """

    stats: OutcomeStats
    times: np.ndarray
    mean_density: np.ndarray
    outcomes: np.ndarray
    collapse_times: np.ndarray
    final_populations: np.ndarray
    jump_counts: np.ndarray | None = None
    kept: list = field(default_factory=list)

    def mean_populations(self):
        return np.real(np.einsum("tii->ti", self.mean_density))


def chi_square_born(counts, expected):
    """Pearson chi-square of ``counts`` against ``expected`` probabilities.

    Returns ``(statistic, p_value)`` with ``k - 1`` degrees of freedom, where
    categories with zero expected probability (and zero count) are dropped.
    """
    counts = np.asarray(counts, dtype=float)
    p = np.asarray(expected, dtype=float)
    if counts.shape != p.shape:
        raise DimensionMismatchError("counts and expected differ in length")
    if np.any(counts < 0) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise BadParameterError("counts must be >= 0 and expected a probability vector")
    zero = p == 0
    if np.any(counts[zero] > 0):
        raise DegenerateExpectedError("non-zero count in a category with zero probability")
    n = counts.sum()
    if n == 0:
        return float("nan"), float("nan")
    e = p[~zero] * n
    c = counts[~zero]
    stat = float(np.sum((c - e) ** 2 / e))
    dof = c.size - 1
    pval = float(stats.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return stat, pval


def chi_square_poisson(samples, mean, min_expected=5.0):
    """Goodness of fit of integer ``samples`` to Poisson(``mean``).

    Neighbouring bins are merged from both tails until every bin expects at
    least ``min_expected`` counts.  Returns ``(statistic, p_value)``.
    """
    samples = np.asarray(samples, dtype=int)
    n = samples.size
    kmax = max(int(samples.max()), int(stats.poisson.isf(1e-12, mean)))
    probs = stats.poisson.pmf(np.arange(kmax + 1), mean)
    probs[-1] += stats.poisson.sf(kmax, mean)
    counts = np.bincount(samples, minlength=kmax + 1).astype(float)
    edges_p, edges_c = [], []
    acc_p = acc_c = 0.0
    for pk, ck in zip(probs, counts):
        acc_p += pk
        acc_c += ck
        if acc_p * n >= min_expected:
            edges_p.append(acc_p)
            edges_c.append(acc_c)
            acc_p = acc_c = 0.0
    if acc_p > 0 or acc_c > 0:
        edges_p[-1] += acc_p
        edges_c[-1] += acc_c
    e = np.array(edges_p) * n
    c = np.array(edges_c)
    stat = float(np.sum((c - e) ** 2 / e))
    return stat, float(stats.chi2.sf(stat, c.size - 1))


def trace_distance(rho1, rho2):
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    if rho1.shape != rho2.shape:
        raise DimensionMismatchError(f"shapes {rho1.shape} and {rho2.shape} differ")
    diff = rho1 - rho2
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


# ---------------------------------------------------------------------------
# execution

def _chunk_qsd(initial, model, config, seed, start, stop, keep):
    integ = qsd_mod._Integrator(model, config)
    n_rec = config.record_times().size
    d = model.dim
    acc = np.zeros((n_rec, d, d), dtype=complex)
    outcomes, ctimes, finals, kept = [], [], [], []
    for i in range(start, stop):
        try:
            rec = integ.run(initial, make_stream(seed, i))
        except CollapseLabError as exc:
            raise TrajectoryError(i, exc) from exc
        acc += np.einsum("ti,tj->tij", rec.states, rec.states.conj())
        outcomes.append(-1 if rec.outcome is None else rec.outcome)
        ctimes.append(np.nan if rec.collapse_time is None else rec.collapse_time)
        finals.append(rec.populations[-1])
        if i < keep:
            kept.append(rec)
    return acc, outcomes, ctimes, finals, None, kept


def _chunk_cq(initial, config, seed, start, stop, keep):
    amp0 = normalize(initial.qubit)
    n = config.n_steps + 1
    acc = np.zeros((n, 2, 2), dtype=complex)
    outcomes, ctimes, finals, jumps, kept = [], [], [], [], []
    rho0 = np.outer(amp0, amp0.conj())
    for i in range(start, stop):
        try:
            tr = cq_mod.run_cq_trajectory(amp0, initial.classical, config, make_stream(seed, i))
        except CollapseLabError as exc:
            raise TrajectoryError(i, exc) from exc
        if tr.outcome is None:
            acc += rho0
            ctimes.append(np.nan)
        else:
            first = int(np.argmax(tr.jump_flags))
            acc[:first] += rho0
            acc[first:, tr.outcome, tr.outcome] += 1.0
            ctimes.append(tr.times[first])
        outcomes.append(-1 if tr.outcome is None else tr.outcome)
        jumps.append(tr.n_jumps)
        finals.append(tr.populations[-1])
        if i < keep:
            kept.append(tr)
    return acc, outcomes, ctimes, finals, jumps, kept


def _run_chunk(task):
    engine, initial, model, config, seed, start, stop, keep = task
    if engine == "qsd":
        return _chunk_qsd(initial, model, config, seed, start, stop, keep)
    return _chunk_cq(initial, config, seed, start, stop, keep)


def _outcome_stats(outcomes, ctimes, expected, t_max):
    k = expected.size
    resolved = outcomes[outcomes >= 0]
    counts = np.bincount(resolved, minlength=k)[:k]
    n = outcomes.size
    chi = chi_square_born(counts, expected) if resolved.size else (float("nan"), float("nan"))
    edges = np.linspace(0.0, t_max, HISTOGRAM_BINS + 1)
    hist, _ = np.histogram(ctimes[np.isfinite(ctimes)], bins=edges)
    return OutcomeStats(
        counts=counts,
        frequencies=counts / n,
        unresolved_count=int(n - resolved.size),
        expected=expected,
        chi_square=chi,
        histogram_edges=edges,
        histogram_counts=hist,
    )


def run_ensemble(initial, config, ens, model=None):
    """Run ``ens.n_trajectories`` trajectories and aggregate them.

    For ``engine="qsd"``, ``initial`` is a state vector, ``model`` a
    :class:`~collapse_lab.qsd.CollapseModel` and ``config`` a
    :class:`~collapse_lab.qsd.QsdConfig`.  For ``engine="cq"``, ``initial`` is
    a :class:`~collapse_lab.cq.HybridState` and ``config`` a
    :class:`~collapse_lab.cq.CqToyConfig`.  Chi-square statistics compare the
    resolved outcome counts with the Born probabilities of ``initial``;
    unresolved trajectories are only counted.
    """
    if ens.engine == "qsd":
        if model is None:
            raise BadParameterError("the qsd engine needs a CollapseModel")
        initial = normalize(initial)
        expected = qsd_mod.reference_populations(initial, qsd_mod.reference_basis(model))
        times = config.record_times()
    else:
        expected = np.abs(normalize(initial.qubit)) ** 2
        times = np.arange(config.n_steps + 1) * config.dt
    expected = expected / expected.sum()

    tasks = []
    for start in range(0, ens.n_trajectories, ens.chunk_size):
        stop = min(start + ens.chunk_size, ens.n_trajectories)
        tasks.append((ens.engine, initial, model, config, ens.master_seed, start, stop,
                      ens.keep_trajectories))
    if ens.workers == 1 or len(tasks) == 1:
        parts = [_run_chunk(t) for t in tasks]
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=ens.workers, mp_context=ctx) as pool:
            parts = list(pool.map(_run_chunk, tasks))

    total = None
    outcomes, ctimes, finals, jumps, kept = [], [], [], [], []
    for acc, o, c, f, j, k in parts:
        total = acc if total is None else total + acc
        outcomes.extend(o)
        ctimes.extend(c)
        finals.extend(f)
        if j is not None:
            jumps.extend(j)
        kept.extend(k)
    outcomes = np.array(outcomes, dtype=int)
    ctimes = np.array(ctimes, dtype=float)
    t_max = float(times[-1])
    return EnsembleResult(
        stats=_outcome_stats(outcomes, ctimes, expected, t_max),
        times=times,
        mean_density=total / ens.n_trajectories,
        outcomes=outcomes,
        collapse_times=ctimes,
        final_populations=np.array(finals),
        jump_counts=np.array(jumps, dtype=int) if ens.engine == "cq" else None,
        kept=kept,
    )
