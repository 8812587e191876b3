"""Config-driven experiment runner.

An Experiment sweeps one variable (N, kappa, ricean_db, epsilon) over a base
scenario and evaluates a set of rate methods at each point.  Results go to a
strictly schema'd CSV, a JSON sidecar holding the resolved experiment (re-run
it with ``run --config`` for a byte-identical CSV, timing column aside), and a
PNG of the sum-rate curves.
"""

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from . import figures
from .monte_carlo import build_bundle, mc_rate_lmmse, mc_rate_los
from .rate_analysis import (
    UNBOUNDED,
    theorem1_sinr,
    theorem2_asymptotic,
    theorem3_power_scaling,
    theorem4_los_sinr,
    theorem5_los_asymptotic,
    theorem6_los_power_scaling,
)
from .scenario import ScenarioConfig, config_from_dict, config_to_dict
from .units import db2pow

THREADS_ENV = "RICEAN_MIMO_THREADS"

SWEEP_VARS = ("N", "kappa", "ricean_db", "epsilon")
METHODS = ("lmmse_mc", "lmmse_thm1", "lmmse_thm2", "lmmse_thm3",
           "los_mc", "los_thm4", "los_thm5", "los_thm6")
# methods whose formulas are stated under p_u = E_u * N^-epsilon
_SCALED_METHODS = frozenset({"lmmse_thm3", "los_thm6"})

CSV_HEADER = "sweep_var,value,method,per_user_rate_or_sum,std_error,seed,wall_time_ms"


class ConfigParseError(Exception):
    """Experiment or scenario configuration is malformed."""


class IoError(Exception):
    """Reading a config or writing a result file failed."""


@dataclass(frozen=True)
class PowerScaling:
    """Tie the uplink power budget to the antenna count: p_u = E_u * N^-epsilon."""

    epsilon: float
    E_u: float

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ConfigParseError("power_scaling.epsilon must be > 0")
        if not self.E_u > 0.0:
            raise ConfigParseError("power_scaling.E_u must be > 0")


@dataclass(frozen=True)
class Experiment:
    name: str
    base: ScenarioConfig
    sweep_var: str
    sweep_values: tuple
    methods: tuple
    output: str
    power_scaling: PowerScaling | None = None
    report: str | None = None

    def __post_init__(self):
        if not self.name:
            raise ConfigParseError("experiment name must be non-empty")
        if self.sweep_var not in SWEEP_VARS:
            raise ConfigParseError(f"sweep_var must be one of {SWEEP_VARS}, "
                                   f"got {self.sweep_var!r}")
        object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        if not self.sweep_values:
            raise ConfigParseError("sweep_values must be non-empty")
        for v in self.sweep_values:
            self._check_value(v)
        object.__setattr__(self, "methods", tuple(self.methods))
        if not self.methods:
            raise ConfigParseError("methods must be non-empty")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigParseError("duplicate method names")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigParseError(f"unknown method {m!r}")
        needs_scaling = self.sweep_var == "epsilon" or _SCALED_METHODS & set(self.methods)
        if needs_scaling and self.power_scaling is None:
            raise ConfigParseError("epsilon sweeps and the power-scaling methods "
                                   "require a power_scaling block")
        if not self.output:
            raise ConfigParseError("output path must be non-empty")
        if self.report not in (None, "crossover"):
            raise ConfigParseError(f"unknown report {self.report!r}")
        if self.report == "crossover":
            have = set(self.methods)
            if not ({"lmmse_mc", "lmmse_thm1"} & have and {"los_mc", "los_thm4"} & have):
                raise ConfigParseError("crossover report needs one lmmse and one "
                                       "los rate method")

    def _check_value(self, v):
        try:
            f = float(v)
        except (TypeError, ValueError):
            raise ConfigParseError(f"sweep value {v!r} is not a number") from None
        if self.sweep_var == "N":
            if f != int(f) or f < 1:
                raise ConfigParseError(f"N sweep values must be positive integers, got {v!r}")
        elif self.sweep_var == "kappa":
            if not 0.0 <= f < 1.0:
                raise ConfigParseError(f"kappa sweep values must lie in [0, 1), got {v!r}")
        elif self.sweep_var == "epsilon":
            if not f > 0.0:
                raise ConfigParseError(f"epsilon sweep values must be > 0, got {v!r}")
        elif not math.isfinite(f):
            raise ConfigParseError("ricean_db sweep values must be finite")


_EXPERIMENT_KEYS = frozenset({"name", "base", "sweep_var", "sweep_values",
                              "methods", "output", "power_scaling", "report"})


def _power_scaling_from_dict(raw):
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigParseError("power_scaling must be an object")
    d = dict(raw)
    if "E_u_db" in d:
        if "E_u" in d:
            raise ConfigParseError("give E_u or E_u_db, not both")
        d["E_u"] = float(db2pow(d.pop("E_u_db")))
    unknown = set(d) - {"epsilon", "E_u"}
    if unknown:
        raise ConfigParseError(f"unknown power_scaling keys: {sorted(unknown)}")
    try:
        return PowerScaling(epsilon=float(d["epsilon"]), E_u=float(d["E_u"]))
    except KeyError as e:
        raise ConfigParseError(f"power_scaling missing key {e.args[0]!r}") from None


def experiment_from_dict(raw):
    """Build an Experiment from a plain JSON-style dict (``*_db`` keys welcome)."""
    if not isinstance(raw, dict):
        raise ConfigParseError("experiment config must be a JSON object")
    unknown = set(raw) - _EXPERIMENT_KEYS
    if unknown:
        raise ConfigParseError(f"unknown experiment keys: {sorted(unknown)}")
    try:
        base = config_from_dict(raw.get("base", {}))
    except (TypeError, ValueError) as e:
        raise ConfigParseError(f"base config: {e}") from None
    name = raw.get("name", "experiment")
    try:
        return Experiment(
            name=str(name),
            base=base,
            sweep_var=raw.get("sweep_var", "N"),
            sweep_values=tuple(raw.get("sweep_values", ())),
            methods=tuple(raw.get("methods", ())),
            output=str(raw.get("output", f"{name}.csv")),
            power_scaling=_power_scaling_from_dict(raw.get("power_scaling")),
            report=raw.get("report"),
        )
    except TypeError as e:
        raise ConfigParseError(str(e)) from None


def experiment_to_dict(experiment):
    """Inverse of experiment_from_dict; all values linear, JSON-serializable."""
    out = {
        "name": experiment.name,
        "base": config_to_dict(experiment.base),
        "sweep_var": experiment.sweep_var,
        "sweep_values": list(experiment.sweep_values),
        "methods": list(experiment.methods),
        "output": experiment.output,
    }
    if experiment.power_scaling is not None:
        out["power_scaling"] = {"epsilon": experiment.power_scaling.epsilon,
                                "E_u": experiment.power_scaling.E_u}
    if experiment.report is not None:
        out["report"] = experiment.report
    return out


def _point_config(experiment, value):
    """Resolve the scenario at one sweep point; returns (config, epsilon)."""
    cfg = experiment.base
    scaling = experiment.power_scaling
    eps = scaling.epsilon if scaling is not None else None
    var = experiment.sweep_var
    if var == "N":
        cfg = replace(cfg, N=int(value))
    elif var == "kappa":
        cfg = replace(cfg, kappa=float(value))
    elif var == "ricean_db":
        cfg = replace(cfg, ricean_factors=float(db2pow(value)))
    else:
        eps = float(value)
    if scaling is not None:
        p_u = scaling.E_u * float(cfg.N) ** -eps
        # pilot energy tracks the data budget: full-frame pilot power K * p_u
        cfg = replace(cfg, p_u=p_u, p_P=cfg.K * p_u)
    return cfg, eps


def _closed_form_rates(experiment, cfg, bundle, eps, method):
    pref = (cfg.T - cfg.K) / cfg.T
    rates = []
    for k in range(cfg.K):
        if method == "lmmse_thm1":
            rates.append(theorem1_sinr(bundle.bank, bundle.spectrum, bundle.steering,
                                       bundle.fading, bundle.ricean, cfg.p_u, k,
                                       rate_prefactor=pref).rate)
            continue
        if method == "lmmse_thm2":
            s, p = theorem2_asymptotic(bundle.bank.delta[k], bundle.fading,
                                       bundle.ricean, k), pref
        elif method == "lmmse_thm3":
            s, p = theorem3_power_scaling(cfg, bundle.fading, bundle.spectrum,
                                          bundle.ricean, k, eps,
                                          experiment.power_scaling.E_u, cfg.N), pref
        elif method == "los_thm4":
            s, p = theorem4_los_sinr(bundle.steering, bundle.spectrum, bundle.fading,
                                     bundle.ricean, bundle.rho, cfg.p_u, k), 1.0
        elif method == "los_thm5":
            s, p = theorem5_los_asymptotic(bundle.steering, bundle.spectrum,
                                           bundle.fading, bundle.ricean,
                                           cfg.p_u, k, cfg.N), 1.0
        else:  # los_thm6
            s, p = theorem6_los_power_scaling(bundle.fading, bundle.ricean, k, eps,
                                              experiment.power_scaling.E_u, cfg.N), 1.0
        s = math.inf if s is UNBOUNDED else float(s)
        rates.append(p * math.log2(1.0 + s))
    return rates


def _value_rows(experiment, idx):
    """All CSV rows for one sweep point, methods in declared order."""
    value = experiment.sweep_values[idx]
    cfg, eps = _point_config(experiment, value)
    bundle = build_bundle(cfg)
    rows = []

    def emit(method, rates, errs, rate_sum, err_sum, ms):
        for k, (r, e) in enumerate(zip(rates, errs)):
            rows.append({"sweep_var": experiment.sweep_var, "value": value,
                         "method": method, "user": k, "rate": r, "std_error": e,
                         "seed": cfg.seed, "wall_ms": ms})
        rows.append({"sweep_var": experiment.sweep_var, "value": value,
                     "method": method, "user": "sum", "rate": rate_sum,
                     "std_error": err_sum, "seed": cfg.seed, "wall_ms": ms})

    for method in experiment.methods:
        t0 = time.perf_counter()
        if method in ("lmmse_mc", "los_mc"):
            fn = mc_rate_lmmse if method == "lmmse_mc" else mc_rate_los
            res = fn(bundle, cfg.mc_trials)
            ms = (time.perf_counter() - t0) * 1e3
            emit(method, [e.mean for e in res.per_user],
                 [e.std_error for e in res.per_user],
                 res.sum_rate.mean, res.sum_rate.std_error, ms)
        else:
            rates = _closed_form_rates(experiment, cfg, bundle, eps, method)
            ms = (time.perf_counter() - t0) * 1e3
            emit(method, rates, [None] * cfg.K, sum(rates), None, ms)
    return rows


def _fmt_value(v):
    f = float(v)
    return str(int(f)) if f == int(f) else repr(f)


def _csv_lines(rows):
    lines = [CSV_HEADER]
    for r in rows:
        err = "" if r["std_error"] is None else f"{r['std_error']:.17e}"
        lines.append(",".join((r["sweep_var"], _fmt_value(r["value"]), r["method"],
                               f"{r['rate']:.17e}", err, str(r["seed"]),
                               f"{r['wall_ms']:.3f}")))
    return lines


def _write_outputs(experiment, rows):
    out = Path(experiment.output)
    try:
        if out.parent != Path(""):
            out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text("\n".join(_csv_lines(rows)) + "\n")
        sidecar = out.with_suffix(".json")
        sidecar.write_text(json.dumps(experiment_to_dict(experiment),
                                      indent=2, sort_keys=True) + "\n")
        figures.render_experiment_figure(experiment, rows, out.with_suffix(".png"))
    except OSError as e:
        raise IoError(str(e)) from None


def run(experiment, threads=1):
    """Evaluate every (sweep value, method) pair and write CSV/JSON/PNG outputs.

    Returns the result table as a list of row dicts in file order.  Row order
    within a sweep point is users 0..K-1 then the sum row, per method.
    """
    if any(m.endswith("_mc") for m in experiment.methods) and experiment.base.mc_trials < 100:
        raise ConfigParseError("Monte-Carlo methods need base.mc_trials >= 100")
    indices = range(len(experiment.sweep_values))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_value = list(pool.map(lambda i: _value_rows(experiment, i), indices))
    else:
        per_value = [_value_rows(experiment, i) for i in indices]
    rows = [r for chunk in per_value for r in chunk]
    _write_outputs(experiment, rows)
    return rows


def crossover_point(experiment, rows):
    """First sweep value where the LOS sum rate beats the LMMSE sum rate.

    Prefers the closed-form pair when both are present, falling back to the
    Monte-Carlo pair; returns None if LOS never wins within the sweep.
    """
    have = set(experiment.methods)
    if {"lmmse_thm1", "los_thm4"} <= have:
        pair = ("lmmse_thm1", "los_thm4")
    else:
        pair = ("lmmse_mc", "los_mc")
    sums = {(r["method"], r["value"]): r["rate"] for r in rows if r["user"] == "sum"}
    for value in experiment.sweep_values:
        if sums[(pair[1], value)] > sums[(pair[0], value)]:
            return value
    return None


# ---------------------------------------------------------------------------
# presets

def _rate_vs_n_lmmse():
    exps = []
    for tag, ric in (("ray", 0.0), ("ric3db", float(db2pow(3.0))),
                     ("ric6db", float(db2pow(6.0)))):
        name = f"fig_rate_vs_N_lmmse_{tag}"
        exps.append(Experiment(
            name=name,
            base=ScenarioConfig(ricean_factors=ric, mc_trials=400),
            sweep_var="N", sweep_values=(32, 64, 128, 256, 512),
            methods=("lmmse_mc", "lmmse_thm1", "lmmse_thm2"),
            output=f"{name}.csv"))
    return exps


def _rate_vs_n_los():
    exps = []
    for tag, ric in (("ric3db", float(db2pow(3.0))), ("ric6db", float(db2pow(6.0)))):
        name = f"fig_rate_vs_N_los_{tag}"
        exps.append(Experiment(
            name=name,
            base=ScenarioConfig(ricean_factors=ric, mc_trials=400),
            sweep_var="N", sweep_values=(32, 64, 128, 256, 512),
            methods=("los_mc", "los_thm4", "los_thm5"),
            output=f"{name}.csv"))
    return exps


def _crossover():
    exps = []
    for tag, ric in (("ric0db", 1.0), ("ric3db", float(db2pow(3.0)))):
        name = f"fig_crossover_{tag}"
        exps.append(Experiment(
            name=name,
            base=ScenarioConfig(ricean_factors=ric, mc_trials=300),
            sweep_var="N", sweep_values=tuple(range(50, 601, 25)),
            methods=("lmmse_mc", "los_mc", "lmmse_thm1", "los_thm4"),
            output=f"{name}.csv", report="crossover"))
    return exps


def _power_scaling():
    exps = []
    for tag, eps in (("eps1", 1.0), ("eps15", 1.5)):
        name = f"fig_power_scaling_{tag}"
        exps.append(Experiment(
            name=name,
            base=ScenarioConfig(ricean_factors=float(db2pow(6.0)), mc_trials=300),
            sweep_var="N", sweep_values=(64, 128, 256, 512, 1024),
            methods=("lmmse_mc", "los_mc", "lmmse_thm3", "los_thm6"),
            output=f"{name}.csv",
            power_scaling=PowerScaling(epsilon=eps, E_u=float(db2pow(20.0)))))
    return exps


def _angle_flip():
    exps = []
    for scheme in ("uniform_half_circle", "quarter_offset"):
        name = f"fig_angle_correlation_flip_{scheme}"
        exps.append(Experiment(
            name=name,
            base=ScenarioConfig(N=256, angle_scheme=scheme),
            sweep_var="kappa", sweep_values=(0.0, 0.1, 0.2, 0.3, 0.4, 0.5),
            methods=("los_thm4",),
            output=f"{name}.csv"))
    return exps


def _rate_vs_ricean():
    name = "fig_rate_vs_ricean"
    return [Experiment(
        name=name,
        base=ScenarioConfig(mc_trials=400),
        sweep_var="ricean_db", sweep_values=(-3.0, 0.0, 3.0, 6.0, 9.0, 12.0),
        methods=("lmmse_mc", "lmmse_thm1", "los_thm4"),
        output=f"{name}.csv")]


def _asymptote_gap():
    name = "fig_asymptote_gap"
    return [Experiment(
        name=name,
        base=ScenarioConfig(),
        sweep_var="N", sweep_values=(64, 128, 256, 512, 1024),
        methods=("lmmse_thm1", "lmmse_thm2", "los_thm4", "los_thm5"),
        output=f"{name}.csv")]


_PRESETS = {
    "fig_rate_vs_N_lmmse": ("pilot-assisted rates vs antenna count at three Ricean "
                            "factors (Rayleigh, 3 dB, 6 dB)", _rate_vs_n_lmmse),
    "fig_rate_vs_N_los": ("LOS-combining rates vs antenna count at 3 dB and 6 dB",
                          _rate_vs_n_los),
    "fig_crossover": ("first antenna count where LOS sum rate overtakes the "
                      "pilot-assisted sum rate, at 0 dB and 3 dB", _crossover),
    "fig_power_scaling": ("sum rate under p_u = E_u * N^-epsilon for epsilon 1 "
                          "and 1.5 at 6 dB", _power_scaling),
    "fig_angle_correlation_flip": ("correlation helping under spread arrival "
                                   "angles and hurting under packed ones", _angle_flip),
    "fig_rate_vs_ricean": ("both acquisition methods across a Ricean-factor "
                           "sweep at N=128", _rate_vs_ricean),
    "fig_asymptote_gap": ("finite-N closed forms against their large-N limits",
                          _asymptote_gap),
}


def list_presets():
    """(name, description) pairs for every built-in preset."""
    return [(name, desc) for name, (desc, _) in _PRESETS.items()]


def preset_experiments(name):
    """Expand a preset into its experiment list; unknown names are config errors."""
    try:
        _, build = _PRESETS[name]
    except KeyError:
        raise ConfigParseError(f"unknown preset {name!r}") from None
    return build()


# ---------------------------------------------------------------------------
# command line

def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise IoError(f"cannot read config {path}: {e}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigParseError(f"{path}: top level must be a JSON object")
    return raw


def _overlay(base, over):
    """Apply overrides, letting a ``*_db`` key displace its linear twin and back."""
    out = dict(base)
    for key, val in over.items():
        if key.endswith("_db"):
            out.pop(key[:-3], None)
        else:
            out.pop(key + "_db", None)
        out[key] = val
    return out


def _apply_overrides(experiment, overrides):
    merged = dict(experiment_to_dict(experiment))
    for key, val in overrides.items():
        if key in ("base", "power_scaling") and isinstance(val, dict):
            merged[key] = _overlay(merged.get(key) or {}, val)
        else:
            merged[key] = val
    return experiment_from_dict(merged)


def _resolve_threads(flag):
    if flag is None:
        env = os.environ.get(THREADS_ENV)
        if env is None:
            return 1
        try:
            flag = int(env)
        except ValueError:
            raise ConfigParseError(f"{THREADS_ENV}={env!r} is not an integer") from None
    if flag < 1:
        raise ConfigParseError("thread count must be >= 1")
    return flag


def _redirect_output(experiment, out, multi):
    path = Path(out)
    if multi or not out.endswith(".csv"):
        path = path / f"{experiment.name}.csv"
    return replace(experiment, output=str(path))


def _seed_arg(text):
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit int")
    return value


def _cmd_run(args):
    if args.config is None and args.preset is None:
        raise ConfigParseError("run needs --config and/or --preset")
    overrides = _load_json(args.config) if args.config is not None else {}
    if args.preset is not None:
        experiments = preset_experiments(args.preset)
        if overrides:
            experiments = [_apply_overrides(e, overrides) for e in experiments]
    else:
        experiments = [experiment_from_dict(overrides)]
    threads = _resolve_threads(args.threads)
    multi = len(experiments) > 1
    for experiment in experiments:
        if args.seed is not None:
            experiment = replace(experiment,
                                 base=replace(experiment.base, seed=args.seed))
        if args.out is not None:
            experiment = _redirect_output(experiment, args.out, multi)
        rows = run(experiment, threads=threads)
        print(f"wrote {experiment.output}")
        if experiment.report == "crossover":
            value = crossover_point(experiment, rows)
            where = (f"{experiment.sweep_var}={_fmt_value(value)}"
                     if value is not None else "not reached in sweep")
            print(f"crossover [{experiment.name}]: {where}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="ricean-mimo",
        description="Uplink rate experiments for correlated Ricean multi-cell MIMO.")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run an experiment from a config file or preset")
    runp.add_argument("--config", metavar="FILE",
                      help="experiment JSON; with --preset, a partial override dict")
    runp.add_argument("--preset", metavar="NAME", help="built-in preset name")
    runp.add_argument("--out", metavar="PATH",
                      help="output CSV path, or directory for multi-part presets")
    runp.add_argument("--threads", metavar="N", type=int,
                      help=f"worker threads (default: ${THREADS_ENV} or 1)")
    runp.add_argument("--seed", metavar="U64", type=_seed_arg,
                      help="override the scenario seed")
    sub.add_parser("list-presets", help="list built-in presets")
    args = parser.parse_args(argv)
    try:
        if args.command == "list-presets":
            for name, desc in list_presets():
                print(f"{name:30s} {desc}")
            return 0
        return _cmd_run(args)
    except ConfigParseError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except IoError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
