"""``collapse-lab`` command line: parse a run configuration and write CSV/JSON results.

Configuration files are INI-style ``key = value`` text with two sections::

    [run]
    experiment = preset-fig4
    seed = 42
    output_dir = fig4_out

    [parameters]
    eta = 0.25

Preset experiments start from the packaged preset files, and keys given in
``[parameters]`` override them.  Every result file is a pure function of the
configuration and seed, so reruns are byte-identical at any worker count.
"""

import argparse
import configparser
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import cq as cq_mod
from . import ensemble, hilbert, lindblad, qsd, timescales
from .constants import AU_PER_FS
from .errors import CollapseLabError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class ConfigError(CollapseLabError, ValueError):
    pass


class ConfigParseError(ConfigError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConfigValidationError(ConfigError):
    def __init__(self, key, message=""):
        super().__init__(f"{key}: {message}" if message else key)
        self.key = key


# ---------------------------------------------------------------------------
# parameter schemas

REQUIRED = object()


@dataclass(frozen=True)
class Param:
    kind: str                  # float | int | str | floats
    default: object = REQUIRED
    check: object = None       # callable(value) -> error message or None
    unit: str = ""
    choices: tuple = ()


def _positive(v):
    return None if v > 0 else "must be positive"


def _non_negative(v):
    return None if v >= 0 else "must be non-negative"


def _at_least(n):
    return lambda v: None if v >= n else f"must be >= {n}"


def _open_half(v):
    return None if 0 < v < 0.5 else "must lie in (0, 0.5)"


def _weights(v):
    if not v or any(w < 0 for w in v) or sum(v) <= 0:
        return "must be non-negative with a positive sum"
    return None


QSD_PARAMS = {
    "n_levels": Param("int", 3, _at_least(2)),
    "mass": Param("float", 1.0, _positive, "au"),
    "omega": Param("float", 1.0, _positive, "au"),
    "eta": Param("float", REQUIRED, _positive, "au"),
    "weights": Param("floats", REQUIRED, _weights),
    "operator": Param("str", "hamiltonian", choices=("hamiltonian", "position", "number")),
    "dt": Param("float", REQUIRED, _positive, "au"),
    "t_max": Param("float", REQUIRED, _positive, "au"),
    "record_stride": Param("int", 1000, _at_least(1)),
    "collapse_epsilon": Param("float", 1e-3, _open_half),
    "n_trajectories": Param("int", REQUIRED, _at_least(1)),
    "keep_trajectories": Param("int", 3, _non_negative),
}

CQ_PARAMS = {
    "weights": Param("floats", REQUIRED, _weights),
    "coupling": Param("float", REQUIRED, _positive, "J s/m"),
    "mass": Param("float", REQUIRED, _positive, "kg"),
    "omega": Param("float", REQUIRED, _positive, "1/s"),
    "tau": Param("float", REQUIRED, _positive, "s"),
    "dt": Param("float", REQUIRED, _positive, "s"),
    "t_max": Param("float", REQUIRED, _positive, "s"),
    "q0": Param("float", 0.0, unit="m"),
    "p0": Param("float", 0.0, unit="kg m/s"),
    "n_trajectories": Param("int", REQUIRED, _at_least(1)),
    "keep_trajectories": Param("int", 2, _non_negative),
}

LINDBLAD_PARAMS = {
    "n_levels": Param("int", 2, _at_least(2)),
    "mass": Param("float", 1.0, _positive, "au"),
    "omega": Param("float", 1.0, _positive, "au"),
    "eta": Param("float", REQUIRED, _positive, "au"),
    "weights": Param("floats", REQUIRED, _weights),
    "operator": Param("str", "hamiltonian", choices=("hamiltonian", "position", "number")),
    "t_max": Param("float", REQUIRED, _positive, "au"),
    "dt": Param("float", 1e-3, _positive, "au"),
    "record_interval": Param("float", 0.1, _positive, "au"),
}

JZ_PARAMS = {
    "number_density": Param("float", REQUIRED, _positive, "1/m^3"),
    "temperature": Param("float", REQUIRED, _non_negative, "K"),
    "molecular_mass": Param("float", REQUIRED, _positive, "kg"),
    "size": Param("float", REQUIRED, _positive, "m"),
    "displacement": Param("float", REQUIRED, _non_negative, "m"),
    "n_points": Param("int", 101, _at_least(2)),
}

DP_PARAMS = {
    "mass": Param("float", REQUIRED, _positive, "kg"),
    "material_density": Param("float", timescales.CARBON_DENSITY, _positive, "kg/m^3"),
    "displacement": Param("float", REQUIRED, _non_negative, "m"),
    "smear_sigma": Param("float", timescales.DEFAULT_SMEAR_SIGMA, _positive, "m"),
    "lattice_points": Param("int", 1000, _at_least(1)),
}

FIG5_PARAMS = {
    "material_density": Param("float", REQUIRED, _positive, "kg/m^3"),
    "displacement": Param("float", REQUIRED, _positive, "m"),
    "smear_sigma": Param("float", timescales.DEFAULT_SMEAR_SIGMA, _positive, "m"),
    "lattice_points": Param("int", 1000, _at_least(1)),
    "masses": Param("floats", (), lambda v: None if all(m > 0 for m in v) else "must be positive"),
    "mass_min": Param("float", REQUIRED, _positive, "kg"),
    "mass_max": Param("float", REQUIRED, _positive, "kg"),
    "n_masses": Param("int", REQUIRED, _at_least(1)),
}

EXPERIMENTS = {
    "qsd": QSD_PARAMS,
    "cq": CQ_PARAMS,
    "lindblad": LINDBLAD_PARAMS,
    "timescale-jz": JZ_PARAMS,
    "timescale-dp": DP_PARAMS,
    "preset-fig4": QSD_PARAMS,
    "preset-fig5": FIG5_PARAMS,
    "preset-fig6": CQ_PARAMS,
}

PRESET_FILES = {
    "preset-fig4": "fig4.ini",
    "preset-fig5": "fig5.ini",
    "preset-fig6": "fig6.ini",
}

RUN_KEYS = ("experiment", "seed", "output_dir", "workers")


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    parameters: dict
    output_dir: Path | None = None
    master_seed: int = 0
    workers: int = 1
    overrides: tuple = field(default=())


# ---------------------------------------------------------------------------
# parsing

def _read_ini(text):
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=("#",),
        interpolation=None, strict=True, empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigParseError("expected a [section] header", exc.lineno) from exc
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigParseError(f"cannot parse {line.strip()!r}", lineno) from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigParseError(exc.message.split(":", 1)[-1].strip(), exc.lineno) from exc
    unknown = [s for s in parser.sections() if s not in ("run", "parameters")]
    if unknown:
        raise ConfigParseError(f"unknown section [{unknown[0]}]")
    run = dict(parser.items("run")) if parser.has_section("run") else {}
    params = dict(parser.items("parameters")) if parser.has_section("parameters") else {}
    return run, params


def _convert(key, spec, raw):
    raw = raw.strip()
    try:
        if spec.kind == "float":
            value = float(Fraction(raw))
        elif spec.kind == "int":
            value = int(raw)
        elif spec.kind == "floats":
            value = tuple(float(Fraction(x.strip())) for x in raw.split(",") if x.strip())
        else:
            value = raw
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigValidationError(key, f"cannot read {raw!r} as {spec.kind}") from exc
    if spec.kind in ("float", "floats"):
        vals = value if spec.kind == "floats" else (value,)
        if not all(np.isfinite(v) for v in vals):
            raise ConfigValidationError(key, "must be finite")
    if spec.choices and value not in spec.choices:
        raise ConfigValidationError(key, f"must be one of {', '.join(spec.choices)}")
    if spec.check is not None:
        msg = spec.check(value)
        if msg:
            raise ConfigValidationError(key, msg)
    return value


def _cross_check(experiment, p):
    if "dt" in p and "t_max" in p and not p["dt"] < p["t_max"]:
        raise ConfigValidationError("dt", "must be smaller than t_max")
    if experiment in ("qsd", "preset-fig4", "lindblad") and len(p["weights"]) != p["n_levels"]:
        raise ConfigValidationError("weights", f"needs {p['n_levels']} entries")
    if experiment in ("cq", "preset-fig6"):
        if len(p["weights"]) != 2:
            raise ConfigValidationError("weights", "needs 2 entries")
        if p["dt"] > p["tau"] / 10:
            raise ConfigValidationError("dt", "must not exceed tau/10")
    if experiment == "preset-fig5" and p["mass_max"] < p["mass_min"]:
        raise ConfigValidationError("mass_max", "must be >= mass_min")


def preset_text(experiment):
    return resources.files("collapse_lab.presets").joinpath(PRESET_FILES[experiment]).read_text()


def parse_config(text, experiment=None):
    """Parse and validate configuration text into a :class:`RunConfig`.

    ``experiment`` (e.g. from the command line) is used when the text has no
    ``experiment`` key and must agree with it otherwise.
    """
    run, params = _read_ini(text)
    for key in run:
        if key not in RUN_KEYS:
            raise ConfigValidationError(key, "unknown key in [run]")
    exp = run.get("experiment", experiment)
    if exp is None:
        raise ConfigValidationError("experiment", "missing")
    exp = exp.strip()
    if exp not in EXPERIMENTS:
        raise ConfigValidationError("experiment", f"unknown experiment {exp!r}")
    if experiment is not None and exp != experiment:
        raise ConfigValidationError("experiment", f"config is for {exp!r}, not {experiment!r}")
    schema = EXPERIMENTS[exp]

    raw = {}
    preset_run = {}
    if exp in PRESET_FILES:
        preset_run, raw = _read_ini(preset_text(exp))
    for key in params:
        if key not in schema:
            raise ConfigValidationError(key, f"unknown key for {exp}")
    raw.update(params)

    values = {}
    for key, spec in schema.items():
        if key in raw:
            values[key] = _convert(key, spec, raw[key])
        elif spec.default is REQUIRED:
            raise ConfigValidationError(key, "missing")
        else:
            values[key] = spec.default
    _cross_check(exp, values)

    seed_raw = run.get("seed", preset_run.get("seed", "0"))
    try:
        seed = int(seed_raw)
    except ValueError as exc:
        raise ConfigValidationError("seed", f"cannot read {seed_raw!r} as int") from exc
    if seed < 0:
        raise ConfigValidationError("seed", "must be non-negative")
    try:
        workers = int(run.get("workers", "1"))
    except ValueError as exc:
        raise ConfigValidationError("workers", "must be an integer") from exc
    if workers < 1:
        raise ConfigValidationError("workers", "must be >= 1")
    out = run.get("output_dir")
    return RunConfig(exp, values, Path(out) if out else None, seed, workers,
                     tuple(sorted(params)))


# ---------------------------------------------------------------------------
# output helpers

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if np.isnan(x) else repr(x)


def _write_csv(path, header, rows):
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_bytes(buf.getvalue().encode("utf-8"))


def _write_json(path, obj):
    path.write_bytes((json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8"))


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else ("inf" if f > 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


# ---------------------------------------------------------------------------
# experiments

def oscillator_model(p):
    """Collapse model and initial state described by a qsd/lindblad parameter set."""
    h, x = hilbert.harmonic_oscillator(p["n_levels"], p["mass"], p["omega"])
    psi0 = hilbert.superposition(p["weights"])
    if p["operator"] == "hamiltonian":
        model = qsd.make_hamiltonian_model(h, p["eta"])
    elif p["operator"] == "position":
        model = qsd.make_position_model(h, x, p["eta"])
    else:
        number = np.diag(np.arange(p["n_levels"], dtype=float)).astype(complex)
        model = qsd.make_number_model(h, [number], p["eta"])
    return model, psi0


def _run_qsd(cfg, out, workers):
    p = cfg.parameters
    model, psi0 = oscillator_model(p)
    qcfg = qsd.QsdConfig(p["dt"], p["t_max"], p["record_stride"], p["collapse_epsilon"])
    ens = ensemble.EnsembleConfig(p["n_trajectories"], cfg.master_seed, workers, "qsd",
                                  p["keep_trajectories"])
    res = ensemble.run_ensemble(psi0, qcfg, ens, model=model)
    d = model.dim

    rows = []
    for i, rec in enumerate(res.kept):
        for t, pop in zip(rec.times, rec.populations):
            rows.append([i, t, t / AU_PER_FS, *pop])
    _write_csv(out / "trajectories.csv",
               ["trajectory", "t_au", "t_fs"] + [f"pop_{k}" for k in range(d)], rows)

    rows = []
    for i, (o, ct, fin) in enumerate(zip(res.outcomes, res.collapse_times, res.final_populations)):
        rows.append([i, None if o < 0 else o, ct, ct / AU_PER_FS, *fin])
    _write_csv(out / "collapse_times.csv",
               ["trajectory", "outcome", "collapse_time_au", "collapse_time_fs"]
               + [f"final_pop_{k}" for k in range(d)], rows)

    pops = res.mean_populations()
    rows = [[t, *pp, hilbert.purity(rho)] for t, pp, rho in zip(res.times, pops, res.mean_density)]
    _write_csv(out / "ensemble_density.csv",
               ["t_au"] + [f"mean_pop_{k}" for k in range(d)] + ["purity"], rows)

    resolved = res.collapse_times[np.isfinite(res.collapse_times)]
    median = float(np.median(resolved)) if resolved.size else float("nan")
    stats = res.stats.as_dict()
    stats.update({
        "time_unit": "au",
        "unresolved_fraction": res.stats.unresolved_count / p["n_trajectories"],
        "median_collapse_time_au": median,
        "median_collapse_time_fs": median / AU_PER_FS,
        "initial_mean_populations": [float(v) for v in pops[0]],
        "final_mean_populations": [float(v) for v in pops[-1]],
    })
    _write_json(out / "outcome_stats.json", _json_safe(stats))
    return ["trajectories.csv", "collapse_times.csv", "ensemble_density.csv", "outcome_stats.json"]


def _run_cq(cfg, out, workers):
    p = cfg.parameters
    ccfg = cq_mod.CqToyConfig(p["coupling"], p["mass"], p["omega"], p["tau"], p["dt"], p["t_max"])
    initial = cq_mod.HybridState(hilbert.superposition(p["weights"]),
                                 cq_mod.ClassicalState(p["q0"], p["p0"]))
    ens = ensemble.EnsembleConfig(p["n_trajectories"], cfg.master_seed, workers, "cq",
                                  p["keep_trajectories"])
    res = ensemble.run_ensemble(initial, ccfg, ens)

    rows = []
    for i, tr in enumerate(res.kept):
        for t, pop, q, mom, flag in zip(tr.times, tr.populations, tr.q, tr.p, tr.jump_flags):
            rows.append([i, t, pop[0], pop[1], q, mom, int(flag)])
    _write_csv(out / "hybrid_trajectories.csv",
               ["trajectory", "t_s", "pop0", "pop1", "q_m", "p_kgms", "jump_flag"], rows)

    rows = [[i, None if o < 0 else o, n, ct, *fin]
            for i, (o, n, ct, fin) in enumerate(zip(res.outcomes, res.jump_counts,
                                                    res.collapse_times, res.final_populations))]
    _write_csv(out / "jump_counts.csv",
               ["trajectory", "outcome", "n_jumps", "first_jump_s", "final_pop0", "final_pop1"],
               rows)

    stat, pval = ensemble.chi_square_poisson(res.jump_counts, p["t_max"] / p["tau"])
    stats = res.stats.as_dict()
    stats.update({
        "time_unit": "s",
        "mean_jump_count": float(res.jump_counts.mean()),
        "expected_jump_count": p["t_max"] / p["tau"],
        "poisson_chi_square_statistic": stat,
        "poisson_chi_square_p_value": pval,
    })
    _write_json(out / "outcome_stats.json", _json_safe(stats))
    return ["hybrid_trajectories.csv", "jump_counts.csv", "outcome_stats.json"]


def _run_lindblad(cfg, out, workers):
    p = cfg.parameters
    model, psi0 = oscillator_model(p)
    me = lindblad.MasterEquationModel.from_collapse_model(model)
    n = int(round(p["t_max"] / p["record_interval"]))
    times = np.linspace(0.0, n * p["record_interval"], n + 1)
    rhos = lindblad.propagate_series(np.outer(psi0, psi0.conj()), me, times, p["dt"])
    d = model.dim
    pairs = [(i, j) for i in range(d) for j in range(i + 1, d)]
    rows = []
    for t, rho in zip(times, rhos):
        rows.append([t, *np.real(np.diag(rho)), *[abs(rho[i, j]) for i, j in pairs],
                     hilbert.purity(rho)])
    _write_csv(out / "density.csv",
               ["t_au"] + [f"pop_{k}" for k in range(d)]
               + [f"coh_{i}{j}_abs" for i, j in pairs] + ["purity"], rows)
    return ["density.csv"]


def _run_jz(cfg, out, workers):
    p = cfg.parameters
    gas = timescales.GasParameters(p["number_density"], p["temperature"], p["molecular_mass"],
                                   p["size"], p["displacement"])
    tau = timescales.joos_zeh_tau(gas)
    _write_json(out / "joos_zeh.json", _json_safe({"tau_d_s": tau, "rate_per_s": timescales.joos_zeh_rate(gas)}))
    files = ["joos_zeh.json"]
    if np.isfinite(tau):
        ts = np.linspace(0.0, 5.0 * tau, p["n_points"])
        _write_csv(out / "coherence_decay.csv", ["t_s", "coherence_abs"],
                   [[t, abs(timescales.coherence_decay(1.0, t, tau))] for t in ts])
        files.append("coherence_decay.csv")
    return files


def _run_dp(cfg, out, workers):
    p = cfg.parameters
    res = timescales.dp_sphere(p["mass"], p["material_density"], p["displacement"],
                               p["smear_sigma"], p["lattice_points"])
    _write_json(out / "dp_collapse.json", _json_safe({
        "mass_kg": p["mass"], "e_delta_J": res.self_energy, "tau_c_s": res.collapse_time}))
    return ["dp_collapse.json"]


def _run_fig5(cfg, out, workers):
    p = cfg.parameters
    grid = np.geomspace(p["mass_min"], p["mass_max"], p["n_masses"])
    masses = sorted(set(float(m) for m in grid) | set(p["masses"]))
    rows = timescales.dp_mass_sweep(p["material_density"], masses, p["displacement"],
                                    p["smear_sigma"], p["lattice_points"])
    _write_csv(out / "mass_sweep.csv", ["mass_kg", "e_delta_J", "tau_c_s"], rows)
    return ["mass_sweep.csv"]


RUNNERS = {
    "qsd": _run_qsd,
    "preset-fig4": _run_qsd,
    "cq": _run_cq,
    "preset-fig6": _run_cq,
    "lindblad": _run_lindblad,
    "timescale-jz": _run_jz,
    "timescale-dp": _run_dp,
    "preset-fig5": _run_fig5,
}


def _sha256(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def execute(config, output_dir=None, workers=None, stderr=None):
    """Run ``config``, write its artifacts plus ``manifest.json``; return an exit code.

    0 on success, 2 for configuration errors, 3 for numerical failures.
    """
    stderr = sys.stderr if stderr is None else stderr
    out = Path(output_dir or config.output_dir or f"{config.experiment}_out")
    workers = workers or config.workers
    try:
        out.mkdir(parents=True, exist_ok=True)
        files = RUNNERS[config.experiment](config, out, workers)
    except (ConfigError, ValueError) as exc:
        print(f"collapse-lab: configuration error: {exc}", file=stderr)
        return EXIT_CONFIG
    except (CollapseLabError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"collapse-lab: numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL
    manifest = {
        "package_version": __version__,
        "experiment": config.experiment,
        "master_seed": config.master_seed,
        "parameters": _json_safe(dict(config.parameters)),
        "overridden_keys": list(config.overrides),
        "artifacts": {name: _sha256(out / name) for name in files},
    }
    _write_json(out / "manifest.json", manifest)
    return EXIT_OK


def main(argv=None):
    ap = argparse.ArgumentParser(prog="collapse-lab", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=sorted(EXPERIMENTS))
    ap.add_argument("--config", type=Path, help="configuration file (optional for presets)")
    ap.add_argument("--seed", type=int, help="master seed (overrides the config)")
    ap.add_argument("--workers", type=int, help="worker processes")
    ap.add_argument("--out", type=Path, help="output directory")
    args = ap.parse_args(argv)

    try:
        if args.config is not None:
            text = args.config.read_text(encoding="utf-8")
        elif args.experiment in PRESET_FILES:
            text = ""
        else:
            raise ConfigValidationError("config", f"--config is required for {args.experiment}")
        cfg = parse_config(text, experiment=args.experiment)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigValidationError("seed", "must be non-negative")
            cfg = RunConfig(cfg.experiment, cfg.parameters, cfg.output_dir, args.seed,
                            cfg.workers, cfg.overrides)
        if args.workers is not None and args.workers < 1:
            raise ConfigValidationError("workers", "must be >= 1")
    except (ConfigError, OSError, UnicodeDecodeError) as exc:
        print(f"collapse-lab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return execute(cfg, args.out, args.workers)


if __name__ == "__main__":
    sys.exit(main())
