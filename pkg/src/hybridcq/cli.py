"""Scenario runner.

    hybridcq --scenario wigner --param Omega=1 --param omega=1.01 --param gamma=1 --out runs/fig3

Config files are flat ``key=value`` text (``#`` starts a comment).  Besides
scenario parameters they may hold ``scenario``, ``output`` and ``seed``;
keys prefixed ``meta.`` or ``result.`` are ignored so a run's
``manifest.txt`` can be fed back in as a config.

Exit codes: 0 success, 2 config error, 3 non-finite numerics,
4 failed verification.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, ensemble, sudarshan, verify, wigner
from .core import MomentState, NonFiniteError, expectation_quadratic, flow_matrix, propagators
from .svg import emit_figures

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4
RESERVED_PREFIXES = ("meta.", "result.")
TOP_LEVEL = ("scenario", "output", "seed")


class ConfigError(ValueError):
    pass


class VerificationFailed(RuntimeError):
    pass


@dataclass
class Scenario:
    name: str
    run: Callable
    required: tuple[str, ...] = ()
    optional: dict[str, str] = field(default_factory=dict)
    example: dict[str, str] = field(default_factory=dict)

    @property
    def defaults(self) -> dict[str, str]:
        return {**self.example, **self.optional}

    @property
    def keys(self) -> set[str]:
        return set(self.required) | set(self.optional)


@dataclass
class RunResult:
    columns: dict[str, list] | None
    results: dict[str, object]
    figure: tuple | None = None


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key.startswith(RESERVED_PREFIXES):
            continue
        out[key] = value
    return out


def _num(params, key) -> float:
    try:
        v = float(params[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {params[key]!r}") from None
    if not np.isfinite(v):
        raise ConfigError(f"{key} must be finite")
    return v


def _opt_num(params, key):
    return None if params.get(key, "") == "" else _num(params, key)


def _flag(params, key) -> bool:
    v = params.get(key, "0").lower()
    if v not in ("0", "1", "true", "false", "yes", "no"):
        raise ConfigError(f"{key} must be a boolean, got {v!r}")
    return v in ("1", "true", "yes")


def _pauli(params, key):
    name = params[key]
    if name not in ensemble.PAULI:
        raise ConfigError(f"{key} must be one of {sorted(ensemble.PAULI)}, got {name!r}")
    return ensemble.PAULI[name]


def _hybrid_spec(params) -> sudarshan.HybridSpec:
    return sudarshan.HybridSpec(
        _num(params, "Omega"), _num(params, "omega"), _num(params, "gamma"),
        _opt_num(params, "alpha"), _opt_num(params, "beta"), _num(params, "hbar"),
    )


def _run_wigner(params, seed) -> RunResult:
    cfg = wigner.OscPairConfig(
        _num(params, "Omega"), _num(params, "omega"), _num(params, "gamma"), _num(params, "hbar"),
        _num(params, "q0"), _num(params, "p0"), _num(params, "x0"), _num(params, "k0"),
        _opt_num(params, "sigma_x"), _opt_num(params, "sigma_k"),
    )
    if not cfg.stable:
        print("warning: Omega^2 omega^2 <= gamma^2, the coupled system is unstable", file=sys.stderr)
    s = wigner.dispersion_series(cfg, _num(params, "t_max"), _num(params, "dt"))
    cols = s.columns()
    results = {
        "stable": cfg.stable,
        "min_total": wigner.total_uncertainty_min(s),
        "min_dxdk": float(s.dxdk.min()),
        "max_dqdp": float(s.dqdp.max()),
    }
    fig = (s.times, {"dqdp": s.dqdp, "dxdk": s.dxdk}) if _flag(params, "figure") else None
    return RunResult(cols, results, fig)


def _run_benchmark(params, seed) -> RunResult:
    spec = _hybrid_spec(params)
    first = sudarshan.benchmark_first_moment(spec)
    second = sudarshan.benchmark_second_moment(spec)
    cols = {"benchmark": [], "achievable": [], "residual": [], "reason": [], "min_eigenvalue": []}
    for name, rep in (("first_moment", first), ("second_moment", second)):
        cols["benchmark"].append(name)
        cols["achievable"].append(rep.achievable)
        cols["residual"].append(rep.residual)
        cols["reason"].append(rep.reason)
        cols["min_eigenvalue"].append("" if rep.min_eigenvalue is None else rep.min_eigenvalue)
    results = {
        "achievable": first.achievable,
        "reason": first.reason,
        "second_moment_achievable": second.achievable,
        "min_eigenvalue": second.min_eigenvalue,
    }
    if first.achievable and first.constraints is not None and len(first.constraints):
        for row, name in zip(first.constraints.first_order, ("q_p", "p_q")):
            results[f"constraint_{name}"] = " ".join(_fmt(v) for v in row)
    return RunResult(cols, results)


def _run_evolve(params, seed) -> RunResult:
    spec = _hybrid_spec(params)
    ham, s = sudarshan.build_hybrid(spec)
    A = flow_matrix(ham, s)
    Aqq = flow_matrix(*sudarshan.build_qq_reference(spec))
    obs_mean = [_num(params, k) for k in ("q0", "p0", "x0", "k0")]
    cq0, qq0 = sudarshan.novelty_initial_states(spec)
    m6 = sudarshan.constrained_mean(obs_mean)
    if not _flag(params, "constrained"):
        m6[2], m6[3] = _num(params, "qp0"), _num(params, "pq0")
    cq0 = MomentState(m6, cq0.cov)
    qq0 = MomentState(np.asarray(obs_mean, dtype=float), qq0.cov)
    times = wigner.time_grid(_num(params, "t_max"), _num(params, "dt"))
    Ucq, Uqq = propagators(A, times), propagators(Aqq, times)
    obs = sudarshan.HYBRID_VARS.indices(sudarshan.OBSERVABLES)
    m_cq = np.einsum("tij,j->ti", Ucq, cq0.mean)
    m_qq = np.einsum("tij,j->ti", Uqq, qq0.mean)
    c_cq = np.einsum("tij,jk,tlk->til", Ucq, cq0.cov, Ucq)
    c_qq = np.einsum("tij,jk,tlk->til", Uqq, qq0.cov, Uqq)
    energy = [expectation_quadratic(MomentState(m, c), ham) for m, c in zip(m_cq, c_cq)]
    mean_dev = np.max(np.abs(m_cq[:, obs] - m_qq), axis=1)
    cov_dev = np.max(np.abs(c_cq[:, obs][:, :, obs] - c_qq), axis=(1, 2))
    cols = {"t": times}
    for i, lab in enumerate(sudarshan.OBSERVABLES):
        cols[f"{lab}_cq"] = m_cq[:, obs[i]]
    for i, lab in enumerate(sudarshan.OBSERVABLES):
        cols[f"{lab}_qq"] = m_qq[:, i]
    cols.update(mean_dev=mean_dev, cov_dev=cov_dev, energy_cq=np.array(energy))
    results = {
        "max_mean_dev": float(mean_dev.max()),
        "max_cov_dev": float(cov_dev.max()),
        "energy_drift": float(np.max(np.abs(np.array(energy) - energy[0]))),
    }
    fig = (times, {"mean_dev": mean_dev, "cov_dev": cov_dev}) if _flag(params, "figure") else None
    return RunResult(cols, results, fig)


def _run_divergence(params, seed) -> RunResult:
    spec = ensemble.HybridCouplingSpec(
        Omega=_num(params, "Omega"), H_Q=0.5 * _pauli(params, "hamiltonian"), A=_pauli(params, "coupling"),
        gamma=_num(params, "gamma"), weight=params["weight"],
    )
    q0, p0 = _num(params, "q0"), _num(params, "p0")
    grid = wigner.time_grid(_num(params, "t_max"), _num(params, "sample_dt"))
    s = ensemble.representation_divergence(
        ensemble.z_mixture(q0, p0), ensemble.y_mixture(q0, p0), spec, grid, _num(params, "dt"))
    results = {"max_trace_distance": float(s.trace_distance.max())}
    fig = (s.times, {"trace_distance": s.trace_distance}) if _flag(params, "figure") else None
    return RunResult(s.columns(), results, fig)


def _run_verify(params, seed) -> RunResult:
    checks = verify.run_all(seed=seed, report=lambda line: print(line, file=sys.stderr))
    cols = {
        "criterion": [c.number for c in checks],
        "name": [c.name for c in checks],
        "passed": [c.passed for c in checks],
        "value": [c.value for c in checks],
    }
    failed = [c.number for c in checks if not c.passed]
    return RunResult(cols, {"passed": not failed, "failed": " ".join(map(str, failed))})


_OSC = {"hbar": "1", "q0": "0", "p0": "0", "x0": "0", "k0": "0", "sigma_x": "", "sigma_k": "",
        "t_max": "40", "dt": "0.01", "figure": "1"}
_FIG1 = {"Omega": "3", "omega": "2", "gamma": "1"}

SCENARIOS = {
    "wigner": Scenario("wigner", _run_wigner, ("Omega", "omega", "gamma"), _OSC, _FIG1),
    "sudarshan-benchmark": Scenario(
        "sudarshan-benchmark", _run_benchmark, ("Omega", "omega", "gamma"),
        {"alpha": "", "beta": "", "hbar": "1"}, _FIG1),
    "sudarshan-evolve": Scenario(
        "sudarshan-evolve", _run_evolve, ("Omega", "omega", "gamma"),
        {"alpha": "", "beta": "", "hbar": "1", "q0": "1", "p0": "0", "x0": "0", "k0": "0",
         "constrained": "1", "qp0": "0", "pq0": "0", "t_max": "10", "dt": "0.01", "figure": "1"},
        _FIG1),
    "ensemble-divergence": Scenario(
        "ensemble-divergence", _run_divergence, ("gamma",),
        {"Omega": "1", "hamiltonian": "sigma_x", "coupling": "sigma_z", "weight": "linear",
         "q0": "1", "p0": "0", "t_max": "10", "dt": "0.001", "sample_dt": "0.1", "figure": "1"},
        {"gamma": "1"}),
    "verify": Scenario("verify", _run_verify),
}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path: Path, columns: dict[str, list]) -> None:
    names = list(columns)
    n = len(next(iter(columns.values())))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for i in range(n):
        w.writerow([_fmt(columns[k][i]) for k in names])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _all_finite(columns) -> bool:
    for v in columns.values():
        arr = np.asarray(v)
        if arr.dtype.kind == "f" and not np.all(np.isfinite(arr)):
            return False
    return True


def resolve(scenario: str, params: dict[str, str]) -> dict[str, str]:
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
    scn = SCENARIOS[scenario]
    unknown = sorted(set(params) - scn.keys)
    if unknown:
        raise ConfigError(f"unknown keys for {scenario}: {', '.join(unknown)}")
    missing = [k for k in scn.required if k not in params]
    if missing:
        raise ConfigError(f"missing required keys for {scenario}: {', '.join(missing)}")
    return {**scn.optional, **params}


def run_scenario(scenario: str, params: dict[str, str], out: Path, seed: int = 0) -> RunResult:
    """Resolve parameters, run, and write series.csv, manifest.txt and figure.svg."""
    resolved = resolve(scenario, params)
    result = SCENARIOS[scenario].run(resolved, seed)
    if result.columns is not None and not _all_finite(result.columns):
        raise NonFiniteError(-1)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if result.columns is not None:
        write_csv(out / "series.csv", result.columns)
    if result.figure is not None:
        times, series = result.figure
        emit_figures(times, series, out / "figure.svg")
    lines = [f"scenario={scenario}", f"seed={seed}"]
    lines += [f"{k}={resolved[k]}" for k in sorted(resolved)]
    lines.append(f"meta.version={__version__}")
    lines += [f"result.{k}={_fmt(v)}" for k, v in result.results.items()]
    (out / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return result


def _parse_seed(value: str) -> int:
    try:
        seed = int(value)
    except ValueError:
        raise ConfigError(f"seed must be an unsigned integer, got {value!r}") from None
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must fit in 64 unsigned bits")
    return seed


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridcq", description="Hybrid classical-quantum scenario runner.")
    ap.add_argument("--config", type=Path, help="flat key=value config file")
    ap.add_argument("--scenario", choices=sorted(SCENARIOS))
    ap.add_argument("--out", type=Path, help="output directory")
    ap.add_argument("--seed", help="unsigned 64-bit seed")
    ap.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                    help="scenario parameter; repeatable, overrides the config file")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        conf: dict[str, str] = {}
        if args.config is not None:
            try:
                conf = parse_config_text(args.config.read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
        for item in args.param:
            if "=" not in item:
                raise ConfigError(f"--param expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            conf[k.strip()] = v.strip()
        scenario = args.scenario or conf.pop("scenario", None)
        conf.pop("scenario", None)
        out = args.out or (Path(conf["output"]) if "output" in conf else None)
        conf.pop("output", None)
        seed = _parse_seed(args.seed if args.seed is not None else conf.pop("seed", "0"))
        conf.pop("seed", None)
        if scenario is None:
            raise ConfigError("no scenario given")
        if out is None:
            raise ConfigError("no output directory given")
        result = run_scenario(scenario, conf, out, seed)
        if scenario == "verify" and not result.results["passed"]:
            raise VerificationFailed(f"failed criteria: {result.results['failed']}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
