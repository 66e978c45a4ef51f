"""Config-driven scenario runner.

`fockmarket run <config> [--out DIR] [--plots] [--jobs N]` executes one
scenario (or a sweep of them) from a flat INI-style key=value config and
writes deterministic CSV/report files plus a manifest of content hashes;
`fockmarket verify <config>` re-runs and diffs against the existing outputs.
Exit codes: 0 success, 1 runtime/model error, 2 config error.

Config grammar (sections and keys; see configs/ for one example per scenario):

    [scenario]  kind = two-trader-exact | effective-L | meanfield |
                       stochastic-verdict | fpl
                conserved_check = true|false   (two-trader-exact only)
    [model]     scenario-specific numbers (comma lists where noted)
    [initial]   occupation numbers
    [time]      t_max = <float>, samples = <int>
    [output]    basename = <stem for the main CSV>
    [sweep]     key = v1, v2, ...  (cross product over [model] overrides)
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import (FplParams, MeanFieldParams, ModelParams, NumberState,
               build_space, build_two_trader, build_effective_L, commutator,
               conserved_operators, default_cutoffs, effective_labels,
               evolve_expectation, integrate_meanfield_ode, meanfield_n,
               meanfield_portfolio, number_op, portfolio_operator,
               stationarity_verdict, trajectory, two_trader_labels)
from .dynamics import TimeSeries

SCENARIOS = ("two-trader-exact", "effective-L", "meanfield",
             "stochastic-verdict", "fpl")

_SECTIONS = ("scenario", "model", "initial", "time", "output", "sweep")

# keys every scenario accepts, per section
_SCHEMA = {
    "two-trader-exact": {
        "model": {"alpha1", "alpha2", "beta1", "beta2"},
        "initial": {"n1", "n2", "k1", "k2", "o", "m"},
    },
    "effective-L": {
        "model": {"l", "m", "alpha", "beta", "p_offdiag", "gamma"},
        "initial": {"n", "k", "o", "m"},
    },
    "meanfield": {
        "model": {"phi", "nu", "x0", "n0", "k0", "gamma_share"},
        "initial": set(),
    },
    "stochastic-verdict": {
        "model": {"omega_a", "omega_c", "omega_p", "omega_big_a", "omega_big_c",
                  "omega_big_o", "f", "g", "p_mean", "zero_tol"},
        "initial": {"n_res", "k_res", "o_res"},
    },
    "fpl": {
        "model": {"m", "o", "lam", "omega_a", "omega_c", "omega_big_a",
                  "omega_big_c", "n", "k", "n_res", "k_res", "w1", "w2"},
        "initial": set(),
    },
}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class ScenarioConfig:
    scenario: str
    model: dict = field(default_factory=dict)
    initial: dict = field(default_factory=dict)
    t_max: float = 10.0
    samples: int = 201
    out_dir: str = "out"
    basename: str = "series"
    conserved_check: bool = False
    sweep: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.samples)


def _num(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return complex(text)


def _numlist(text):
    return [_num(tok.strip()) for tok in text.split(",") if tok.strip()]


def parse_config(path) -> ScenarioConfig:
    """Parse and validate; raises ConfigError carrying every problem found."""
    errors = []
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError([f"config file not found: {path}"])
    for sec in cp.sections():
        if sec not in _SECTIONS:
            errors.append(f"unknown section [{sec}]")

    scenario = cp.get("scenario", "kind", fallback=None)
    if scenario is None:
        errors.append("missing [scenario] kind")
        raise ConfigError(errors)
    if scenario not in SCENARIOS:
        errors.append(f"unknown scenario {scenario!r}; valid: {', '.join(SCENARIOS)}")
        raise ConfigError(errors)

    cfg = ScenarioConfig(scenario=scenario)
    schema = _SCHEMA[scenario]

    for key, raw in cp.items("scenario"):
        if key == "kind":
            continue
        if key == "conserved_check":
            cfg.conserved_check = raw.strip().lower() in ("1", "true", "yes")
        else:
            errors.append(f"unknown key {key!r} in [scenario]")

    for sec in ("model", "initial"):
        if not cp.has_section(sec):
            continue
        allowed = schema[sec]
        for key, raw in cp.items(sec):
            if key not in allowed:
                errors.append(f"unknown key {key!r} in [{sec}] for scenario {scenario}")
                continue
            try:
                value = _numlist(raw) if "," in raw else _num(raw)
            except ValueError:
                errors.append(f"cannot parse [{sec}] {key} = {raw!r} as a number")
                continue
            getattr(cfg, sec)[key] = value

    if cp.has_section("time"):
        for key, raw in cp.items("time"):
            if key == "t_max":
                try:
                    cfg.t_max = float(raw)
                except ValueError:
                    errors.append(f"t_max must be a number, got {raw!r}")
            elif key == "samples":
                try:
                    cfg.samples = int(raw)
                except ValueError:
                    errors.append(f"samples must be an integer, got {raw!r}")
            else:
                errors.append(f"unknown key {key!r} in [time]")
    if cfg.t_max <= 0:
        errors.append(f"t_max must be positive, got {cfg.t_max}")
    if cfg.samples < 2:
        errors.append(f"samples must be at least 2, got {cfg.samples}")

    if cp.has_section("output"):
        for key, raw in cp.items("output"):
            if key == "directory":
                cfg.out_dir = raw
            elif key == "basename":
                cfg.basename = raw
            else:
                errors.append(f"unknown key {key!r} in [output]")

    if cp.has_section("sweep"):
        for key, raw in cp.items("sweep"):
            if key not in schema["model"]:
                errors.append(f"sweep key {key!r} is not a model key of {scenario}")
                continue
            cfg.sweep[key] = _numlist(raw)

    missing = _missing_keys(cfg)
    errors.extend(missing)
    if errors:
        raise ConfigError(errors)
    return cfg


def _missing_keys(cfg: ScenarioConfig):
    req_model = {
        "two-trader-exact": set(),
        "effective-L": {"l", "m"},
        "meanfield": {"phi", "nu", "x0", "n0", "k0"},
        "stochastic-verdict": {"omega_a", "omega_c", "omega_p", "omega_big_a",
                               "omega_big_c", "omega_big_o", "f", "g", "p_mean"},
        "fpl": {"m", "o", "lam", "omega_a", "omega_c", "omega_big_a",
                "omega_big_c", "n", "k"},
    }[cfg.scenario]
    req_initial = {
        "two-trader-exact": {"n1", "n2", "k1", "k2", "o", "m"},
        "effective-L": {"n", "k", "o", "m"},
        "meanfield": set(),
        "stochastic-verdict": {"n_res", "k_res", "o_res"},
        "fpl": set(),
    }[cfg.scenario]
    out = []
    for key in sorted(req_model - set(cfg.model)):
        out.append(f"missing [model] key {key!r} for scenario {cfg.scenario}")
    for key in sorted(req_initial - set(cfg.initial)):
        out.append(f"missing [initial] key {key!r} for scenario {cfg.scenario}")
    return out


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def _write_report(path: Path, lines: dict):
    with open(path, "w") as fh:
        for key in lines:
            val = lines[key]
            fh.write(f"{key}={val:.12g}\n" if isinstance(val, float) else f"{key}={val}\n")


def _run_two_trader(cfg: ScenarioConfig, out: Path):
    ini = cfg.initial
    state = NumberState((ini["n1"], ini["n2"], ini["k1"], ini["k2"],
                         ini["o"], ini["m"]))
    labels = two_trader_labels()
    space = build_space(default_cutoffs(labels, state), labels)
    params = ModelParams(alpha=(cfg.model.get("alpha1", 0.0), cfg.model.get("alpha2", 0.0)),
                         beta=(cfg.model.get("beta1", 0.0), cfg.model.get("beta2", 0.0)))
    model = build_two_trader(params, space)
    times = cfg.times

    files = []
    m_p = space.mode_index(("price", None))
    m_o = space.mode_index(("supply", None))
    series = {
        "price": evolve_expectation(model, number_op(space, m_p), state, times, "price"),
        "supply": evolve_expectation(model, number_op(space, m_o), state, times, "supply"),
        "shares_1": evolve_expectation(
            model, number_op(space, space.mode_index(("share", 1))), state, times, "shares_1"),
        "cash_1": evolve_expectation(
            model, number_op(space, space.mode_index(("cash", 1))), state, times, "cash_1"),
    }
    series["portfolio_1"] = evolve_expectation(
        model, portfolio_operator(model, 1), state, times, "portfolio_1")
    for name, ts in series.items():
        path = out / f"{name}.csv"
        ts.write_csv(path)
        files.append(path)

    if cfg.conserved_check:
        report = {}
        for name, op in conserved_operators(model).items():
            ts = evolve_expectation(model, op, state, times, name)
            vals = np.real(ts.values)
            report[f"max_drift_{name}"] = float(np.max(np.abs(vals - vals[0])))
        q_like = (number_op(space, m_p) @ number_op(space, space.mode_index(("share", 1)))
                  + number_op(space, space.mode_index(("cash", 1))))
        report["norm_comm_price_weighted_Q1"] = commutator(
            model.hamiltonian, q_like).max_abs()
        path = out / "conserved_report.txt"
        _write_report(path, report)
        files.append(path)
    return files


def _run_effective_L(cfg: ScenarioConfig, out: Path):
    L = int(cfg.model["l"])
    M = int(cfg.model["m"])
    alpha = cfg.model.get("alpha", [0.0] * L)
    beta = cfg.model.get("beta", [0.0] * L)
    alpha = alpha if isinstance(alpha, list) else [alpha] * L
    beta = beta if isinstance(beta, list) else [beta] * L
    p_off = float(cfg.model.get("p_offdiag", 0.1))
    p_mat = np.full((L, L), p_off)
    np.fill_diagonal(p_mat, 0.0)

    ini = cfg.initial
    n = ini["n"] if isinstance(ini["n"], list) else [ini["n"]] * L
    k = ini["k"] if isinstance(ini["k"], list) else [ini["k"]] * L
    state = NumberState(tuple(n) + tuple(k) + (ini["o"], ini["m"]))
    labels = effective_labels(L)
    space = build_space(default_cutoffs(labels, state), labels)
    params = ModelParams(alpha=tuple(float(x) for x in alpha),
                         beta=tuple(float(x) for x in beta), p_matrix=p_mat)
    model = build_effective_L(params, M, space)
    times = cfg.times

    files = []
    for i in (1,):
        ts = evolve_expectation(
            model, number_op(space, space.mode_index(("share", i))), state, times, f"shares_{i}")
        path = out / f"shares_{i}.csv"
        ts.write_csv(path)
        files.append(path)
    gamma = float(cfg.model.get("gamma", M))
    ts = evolve_expectation(model, portfolio_operator(model, 1, gamma=gamma),
                            state, times, "portfolio_1")
    path = out / "portfolio_1.csv"
    ts.write_csv(path)
    files.append(path)

    report = {}
    for name, op in conserved_operators(model).items():
        tser = evolve_expectation(model, op, state, times, name)
        vals = np.real(tser.values)
        report[f"max_drift_{name}"] = float(np.max(np.abs(vals - vals[0])))
    path = out / "conserved_report.txt"
    _write_report(path, report)
    files.append(path)
    return files


def _run_meanfield(cfg: ScenarioConfig, out: Path):
    m = cfg.model
    p = MeanFieldParams(Phi=float(m["phi"]), nu=float(m["nu"]), X0=complex(m["x0"]),
                        n0=float(m["n0"]), k0=float(m["k0"]),
                        gamma_share=float(m.get("gamma_share", 1.0)))
    times = cfg.times
    files = []
    for name, vals in (("n_closed", meanfield_n(times, p)),
                       ("portfolio", meanfield_portfolio(times, p))):
        ts = TimeSeries(times, vals, name)
        path = out / f"{name}.csv"
        ts.write_csv(path)
        files.append(path)
    ode = integrate_meanfield_ode(p, times)
    path = out / "n_ode.csv"
    TimeSeries(times, ode.values.real, "n_ode").write_csv(path)
    files.append(path)
    agree = float(np.max(np.abs(ode.values.real - meanfield_n(times, p))))
    path = out / "meanfield_report.txt"
    _write_report(path, {"max_ode_vs_closed_form": agree,
                         "max_imag_part": float(np.max(np.abs(ode.values.imag)))})
    files.append(path)
    return files


def _run_stochastic(cfg: ScenarioConfig, out: Path):
    m = cfg.model

    def as_map(val):
        vals = val if isinstance(val, list) else [val]
        return {i: v for i, v in enumerate(vals)}

    params = ModelParams(omega_a=float(m["omega_a"]), omega_c=float(m["omega_c"]),
                         omega_p=float(m["omega_p"]),
                         Omega_A=as_map(m["omega_big_a"]),
                         Omega_C=as_map(m["omega_big_c"]),
                         Omega_O=as_map(m["omega_big_o"]),
                         f=as_map(m["f"]), g=as_map(m["g"]))
    ini = cfg.initial
    tup = lambda v: tuple(v) if isinstance(v, list) else (v,)
    res_state = NumberState(tup(ini["n_res"]) + tup(ini["k_res"]) + tup(ini["o_res"]))
    verdict = stationarity_verdict(params, res_state, float(m["p_mean"]),
                                   zero_tol=float(m.get("zero_tol", 1e-12)))
    path = out / "verdict.txt"
    with open(path, "w") as fh:
        fh.write(verdict.to_report())
    return [path]


def _run_fpl(cfg: ScenarioConfig, out: Path):
    m = cfg.model
    p = FplParams(M=int(m["m"]), O=int(m["o"]), lam=float(m["lam"]),
                  omega_a=float(m["omega_a"]), omega_c=float(m["omega_c"]),
                  Omega_A=float(m["omega_big_a"]), Omega_C=float(m["omega_big_c"]),
                  n=int(m["n"]), k=int(m["k"]),
                  n_res=int(m.get("n_res", 1)), k_res=int(m.get("k_res", 1)),
                  w1=(float(m["w1"]) if "w1" in m else None),
                  w2=(float(m["w2"]) if "w2" in m else None))
    traj = trajectory(p, cfg.times)
    path = out / f"{cfg.basename}.csv"
    traj.write_csv(path)
    return [path]


_RUNNERS = {
    "two-trader-exact": _run_two_trader,
    "effective-L": _run_effective_L,
    "meanfield": _run_meanfield,
    "stochastic-verdict": _run_stochastic,
    "fpl": _run_fpl,
}


def _sweep_points(cfg: ScenarioConfig):
    if not cfg.sweep:
        return [None]
    keys = sorted(cfg.sweep)
    points = [{}]
    for key in keys:
        points = [dict(pt, **{key: v}) for pt in points for v in cfg.sweep[key]]
    return points


def _subdir_name(point: dict) -> str:
    return "__".join(f"{k}_{point[k]:g}" if isinstance(point[k], float)
                     else f"{k}_{point[k]}" for k in sorted(point))


def _run_single(cfg: ScenarioConfig, out: Path, point):
    if point:
        cfg = ScenarioConfig(scenario=cfg.scenario, model={**cfg.model, **point},
                             initial=dict(cfg.initial), t_max=cfg.t_max,
                             samples=cfg.samples, out_dir=cfg.out_dir,
                             basename=cfg.basename, conserved_check=cfg.conserved_check)
        out = out / _subdir_name(point)
    out.mkdir(parents=True, exist_ok=True)
    files = _RUNNERS[cfg.scenario](cfg, out)
    manifest = out / "manifest.txt"
    with open(manifest, "w") as fh:
        for path in sorted(files, key=lambda p: p.name):
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            fh.write(f"{path.name}={digest}\n")
    return [*files, manifest]


def run(cfg: ScenarioConfig, out_dir=None, plots: bool = False, jobs: int = 1):
    """Execute the scenario (and its sweep); returns all files written."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    points = _sweep_points(cfg)
    written = []
    if len(points) > 1 and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [pool.submit(_run_single, cfg, out, pt) for pt in points]
            for fut in futs:
                written.extend(fut.result())
    else:
        for pt in points:
            written.extend(_run_single(cfg, out, pt))
    if plots:
        _render_plots(written)
    return written


def _render_plots(files):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for path in files:
        if path.suffix != ".csv":
            continue
        data = np.genfromtxt(path, delimiter=",", names=True)
        names = data.dtype.names
        fig, ax = plt.subplots()
        for col in names[1:]:
            ax.plot(data[names[0]], data[col], label=col)
        ax.set_xlabel("t")
        ax.legend(loc="best", fontsize="small")
        fig.savefig(path.with_suffix(".png"), dpi=120)
        plt.close(fig)


def verify(cfg: ScenarioConfig, config_dir: Path) -> int:
    """Re-run into a scratch directory and diff against existing outputs."""
    expected_root = Path(cfg.out_dir)
    if not expected_root.is_absolute():
        expected_root = config_dir / expected_root
    if not expected_root.exists():
        print(f"nothing to verify: {expected_root} does not exist", file=sys.stderr)
        return 1
    with tempfile.TemporaryDirectory() as tmp:
        fresh = run(cfg, out_dir=tmp)
        bad = []
        for path in fresh:
            rel = Path(path).relative_to(tmp)
            ref = expected_root / rel
            if not ref.exists():
                bad.append(f"missing: {ref}")
            elif ref.read_bytes() != Path(path).read_bytes():
                bad.append(f"differs: {ref}")
        if bad:
            for line in bad:
                print(line, file=sys.stderr)
            return 1
    print("verify: all outputs match")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fockmarket",
                                     description="run market-model scenarios from a config file")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--plots", action="store_true", help="render PNGs from the CSVs")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
    p_ver = sub.add_parser("verify", help="re-run and diff against existing outputs")
    p_ver.add_argument("config")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2

    try:
        if args.command == "run":
            out_dir = args.out
            if out_dir is None:
                base = Path(args.config).resolve().parent
                out_dir = (Path(cfg.out_dir) if Path(cfg.out_dir).is_absolute()
                           else base / cfg.out_dir)
            run(cfg, out_dir=out_dir, plots=args.plots, jobs=args.jobs)
            return 0
        return verify(cfg, Path(args.config).resolve().parent)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
