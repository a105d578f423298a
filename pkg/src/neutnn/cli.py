"""Command-line flow runner.

``neutnn run <config>`` executes the stages listed in a ``key=value`` config
file.  Stages always run in the order train, eval, prune, sweep, netlist,
forecast, placecell no matter how they are listed.  Each stage writes its
artifacts into the output directory through a temp file and a rename, so a
failing stage never leaves a half-written file behind.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

from .datasets import Dataset, encode_ucr, load_mnist, load_ucr, prototype_series
from .document import dumps_model, load_model
from .engine import StdpParams
from .hwgen.netlist import check_connectivity, iter_netlist, parse_netlist, require_validated
from .hwgen.ppa import Pdk, fit_ppa, fits_csv, forecast
from .learning import evaluate, metrics_csv, train_dataset
from .network import ModelSpec, PruneMode, count_synapses
from .placecells import (build_orientation_model, environment_suite, load_environment, results_csv,
                         run_orientation_task, train_orientation)
from .presets import PRESETS
from .pruning import PruneConfig, Scope, prune, prune_sweep
from .temporal import GammaCycle

__all__ = ["FlowConfig", "ConfigError", "StageError", "parse_config", "run_flow", "main"]

STAGES = ("train", "eval", "prune", "sweep", "netlist", "forecast", "placecell")
NODES = {"nangate45": Pdk.FREEPDK45, "asap7": Pdk.ASAP7, "asap7_tnn7": Pdk.TNN7}
OUTPUT_ENV = "NEUTNN_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    pass


@dataclass
class FlowConfig:
    flow: tuple[str, ...] = ()
    node: str | None = None
    model: str | None = None
    preset: str | None = None
    dataset: str | None = None
    labels: str | None = None
    train_count: int | None = None
    seed: int = 0
    epochs: int = 1
    output: str = "out"
    stdp_capture: int = 1
    stdp_backoff: int = 1
    stdp_search: int = 1
    prune_threshold: int | None = None
    prune_binarize: bool = False
    prune_mode: str = "remove_zero"
    prune_scope: str = "model"
    sweep: tuple[int, ...] | None = None
    fit_method: str = "ols"
    environments: tuple[str, ...] = ()
    grid: tuple[int, int] = (5, 5)
    features: int = 4
    trials: int = 200
    base_dir: str = field(default=".", repr=False)

    def echo(self) -> str:
        lines = []
        for f in fields(self):
            if f.name == "base_dir":
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = str(v).lower()
            lines.append(f"{f.name}={'' if v is None else v}")
        return "\n".join(lines) + "\n"


def _choice(key, value, options, lineno):
    if value not in options:
        raise ConfigError(f"line {lineno}: invalid {key}={value!r}; valid options: {', '.join(options)}")
    return value


def _int(key, value, lineno, low=None):
    try:
        v = int(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} must be an integer, got {value!r}") from None
    if low is not None and v < low:
        raise ConfigError(f"line {lineno}: {key} must be >= {low}, got {v}")
    return v


def _bool(key, value, lineno):
    low = value.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"line {lineno}: {key} must be true or false, got {value!r}")


def parse_config(text: str, base_dir: str = ".") -> FlowConfig:
    cfg = FlowConfig(base_dir=base_dir)
    known = {f.name for f in fields(FlowConfig)} - {"base_dir"}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: {key} already set on line {seen[key]}")
        seen[key] = lineno
        if key == "flow":
            stages = tuple(s.strip() for s in value.split(",") if s.strip())
            for s in stages:
                _choice("flow stage", s, STAGES, lineno)
            value = tuple(s for s in STAGES if s in stages)
        elif key == "node":
            value = _choice(key, value, tuple(NODES), lineno)
        elif key == "preset":
            value = _choice(key, value, tuple(PRESETS), lineno)
        elif key == "prune_mode":
            value = _choice(key, value, tuple(m.value for m in PruneMode), lineno)
        elif key == "prune_scope":
            value = _choice(key, value, tuple(s.value for s in Scope), lineno)
        elif key == "fit_method":
            value = _choice(key, value, ("ols", "minimax"), lineno)
        elif key in ("seed", "epochs", "trials", "features", "stdp_capture", "stdp_backoff", "stdp_search"):
            value = _int(key, value, lineno, 0 if key != "features" else 1)
        elif key in ("train_count", "prune_threshold"):
            value = _int(key, value, lineno, 0)
        elif key == "prune_binarize":
            value = _bool(key, value, lineno)
        elif key == "sweep":
            value = tuple(_int(key, v, lineno, 0) for v in value.split(","))
        elif key == "grid":
            dims = value.lower().split("x")
            if len(dims) != 2:
                raise ConfigError(f"line {lineno}: grid must look like 5x5, got {value!r}")
            value = tuple(_int(key, d, lineno, 1) for d in dims)
        elif key == "environments":
            value = tuple(v.strip() for v in value.split(",") if v.strip())
        setattr(cfg, key, value)
    if not cfg.flow:
        raise ConfigError("missing required field 'flow'")
    if "forecast" in cfg.flow and cfg.node is None:
        raise ConfigError(f"missing required field 'node' (needed by forecast); valid options: {', '.join(NODES)}")
    return cfg


# -- flow execution --------------------------------------------------------

def _atomic(out: Path, name: str, chunks) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.writelines(chunks)
        os.chmod(tmp, 0o644)
        os.replace(tmp, out / name)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return out / name


def _write(out: Path, name: str, text: str) -> Path:
    return _atomic(out, name, [text])


def _write_lines(out: Path, name: str, lines) -> Path:
    return _atomic(out, name, (line + "\n" for line in lines))


class _Flow:
    def __init__(self, cfg: FlowConfig, log):
        self.cfg = cfg
        self.log = log
        self.base = Path(cfg.base_dir)
        self.out = Path(os.environ.get(OUTPUT_ENV) or self.base / cfg.output)
        self.model: ModelSpec | None = None
        self.weights = None
        self._data = None

    def path(self, p: str) -> Path:
        return self.base / p

    def need_model(self):
        if self.model is not None:
            return
        if self.cfg.model:
            self.model, self.weights = load_model(self.path(self.cfg.model))
        elif self.cfg.preset:
            self.model = PRESETS[self.cfg.preset]()
        else:
            raise ValueError("no model: set 'model' (a model document) or 'preset'")

    def data(self) -> tuple[Dataset, Dataset]:
        if self._data is not None:
            return self._data
        c = self.cfg
        gamma = self.model.gamma if self.model is not None else GammaCycle()
        if c.dataset is None:
            raise ValueError("no dataset configured")
        if c.dataset == "synthetic":
            labels, series = prototype_series(seed=c.seed)
            ds = encode_ucr(series, labels, gamma)
        elif c.labels is not None:
            ds = load_mnist(self.path(c.dataset), self.path(c.labels), gamma)
        else:
            labels, series = load_ucr(self.path(c.dataset))
            ds = encode_ucr(series, labels, gamma)
        if c.train_count is not None:
            if not 0 < c.train_count < len(ds):
                raise ValueError(f"train_count must lie in (0, {len(ds)}), got {c.train_count}")
            self._data = (ds.subset(slice(0, c.train_count)), ds.subset(slice(c.train_count, None)))
        else:
            self._data = (ds, ds)
        return self._data

    def save_model(self):
        _write(self.out, "model.json", dumps_model(self.model, self.weights))

    # stages
    def train(self):
        self.need_model()
        train, test = self.data()
        params = StdpParams(self.cfg.stdp_capture, self.cfg.stdp_backoff, self.cfg.stdp_search)
        res = train_dataset(self.model, train, self.cfg.epochs, self.cfg.seed, params,
                            eval_dataset=test, progress=lambda m: self.log(
                                f"train: epoch {m.epoch} {m.metric}={m.value:.4f}"))
        self.weights = res.weights
        self.save_model()
        _write(self.out, "train_metrics.csv", metrics_csv(res.metrics))

    def _trained(self):
        self.need_model()
        if self.weights is None:
            raise ValueError("model has no trained weights")

    def eval(self):
        self._trained()
        _, test = self.data()
        name, value = evaluate(self.model, self.weights, test)
        self.log(f"eval: {name}={value:.4f}")
        _write(self.out, "eval.csv", f"metric,value,samples\n{name},{value:.6f},{len(test)}\n")

    def _prune_cfg(self, threshold=None):
        c = self.cfg
        return PruneConfig(c.prune_threshold if threshold is None else threshold, c.prune_binarize,
                           c.prune_mode, c.prune_scope)

    def prune(self):
        self._trained()
        self.weights, report = prune(self.weights, self._prune_cfg(), self.model)
        for name, r in report.per_scope.items():
            self.log(f"prune: {name} reduced {100 * r:.2f}%")
        self.log(f"prune: total {report.original} -> {report.surviving} ({100 * report.reduction:.2f}% removed)")
        self.save_model()
        _write(self.out, "prune_report.txt", report.to_text())

    def sweep(self):
        self._trained()
        _, test = self.data()
        w_max = self.model.gamma.w_max
        taus = self.cfg.sweep if self.cfg.sweep is not None else tuple(range(w_max + 2))
        rows = prune_sweep(self.model, self.weights, taus, test, self._prune_cfg())
        text = "threshold,surviving,metric,value\n" + "".join(
            f"{r.threshold},{r.surviving},{r.metric},{r.value:.6f}\n" for r in rows)
        _write(self.out, "sweep.csv", text)

    def netlist(self):
        self.need_model()
        mode = self.weights.mode if self.weights is not None and self.weights.mode else PruneMode.KEEP_ZERO
        path = _write_lines(self.out, "netlist.txt", iter_netlist(self.model, self.weights, mode))
        self.log(f"netlist: wrote {path}")

    def forecast(self):
        self.need_model()
        pdk = NODES[self.cfg.node]
        mode = self.weights.mode if self.weights is not None and self.weights.mode else PruneMode.KEEP_ZERO
        s = count_synapses(self.model, mode, self.weights)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            f = forecast(fit_ppa(pdk, method=self.cfg.fit_method), s)
        for w in caught:
            self.log(f"forecast: warning: {w.message}")
        text = ("pdk,method,synapses,leakage,leakage_unit,area,area_unit,extrapolated\n"
                f"{pdk.value},{self.cfg.fit_method},{s},{f.leakage:.6f},{f.leak_unit},"
                f"{f.area:.3f},{f.area_unit},{int(f.extrapolated)}\n")
        _write(self.out, "forecast.csv", text)

    def placecell(self):
        c = self.cfg
        if c.environments:
            envs = [load_environment(self.path(p)) for p in c.environments]
        else:
            envs = environment_suite(c.grid, c.features, seed=c.seed)
        sizes = {(e.locations, e.features) for e in envs}
        if len(sizes) != 1:
            raise ValueError("all environments must share grid size and feature count")
        locs, feats = sizes.pop()
        model = build_orientation_model(locs, feats)
        # recall units start from random weights and must grow into their inputs,
        # so this stage keeps the default steps (search included)
        trained = {e.id: train_orientation(model, e, max(c.epochs, 16), c.seed) for e in envs}
        rows = run_orientation_task(model, trained, envs, c.trials, c.seed)
        rows_off = run_orientation_task(model, trained, envs, c.trials, c.seed, distal=False)
        _write(self.out, "placecells.csv", results_csv(rows))
        _write(self.out, "placecells_no_distal.csv", results_csv(rows_off))
        for (eid, _, r), (_, _, r0) in zip(rows, rows_off):
            self.log(f"placecell: {eid} recall {r:.3f} (distal off {r0:.3f})")


def run_flow(cfg: FlowConfig, log=print) -> int:
    flow = _Flow(cfg, log)
    _write(flow.out, "config.resolved.txt", cfg.echo())
    for stage in cfg.flow:
        try:
            getattr(flow, stage)()
        except Exception as exc:
            raise StageError(f"{stage}: {exc}") from exc
    return 0


# -- entry point -----------------------------------------------------------

def _cmd_run(args) -> int:
    path = Path(args.config)
    cfg = parse_config(path.read_text(), base_dir=str(path.parent))
    print(cfg.echo(), end="")
    return run_flow(cfg)


def _cmd_validate(args) -> int:
    model, weights = load_model(args.model)
    require_validated(model)
    print(f"ok: {len(model.layers)} layer(s), input width {model.input_width}, "
          f"output width {model.output_width}, {model.synapse_sites} synapse sites, "
          f"weights {'present' if weights is not None else 'absent'}")
    return 0


def _cmd_count(args) -> int:
    model, weights = load_model(args.model)
    offsets = model.layer_offsets()
    for i, layer in enumerate(model.layers):
        print(f"{layer.id}: {offsets[i + 1] - offsets[i]} synapses "
              f"({layer.positions} positions x {layer.synapses_per_position})")
    print(f"total keep_zero: {count_synapses(model, PruneMode.KEEP_ZERO)}")
    if weights is not None:
        print(f"total remove_zero: {count_synapses(model, PruneMode.REMOVE_ZERO, weights)}")
    return 0


def _cmd_fit_ppa(args) -> int:
    pdks = [Pdk(args.pdk)] if args.pdk else list(Pdk)
    print(fits_csv([fit_ppa(p, method=args.method) for p in pdks]), end="")
    return 0


def _cmd_netlist_check(args) -> int:
    problems = check_connectivity(parse_netlist(Path(args.netlist).read_text()))
    for p in problems:
        print(p)
    print("ok" if not problems else f"{len(problems)} problem(s)")
    return 1 if problems else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="neutnn", description="Temporal neural network flow runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run the stages listed in a config file")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("validate", help="check a model document")
    p.add_argument("model")
    p.set_defaults(func=_cmd_validate)
    p = sub.add_parser("count", help="print synapse counts of a model document")
    p.add_argument("model")
    p.set_defaults(func=_cmd_count)
    p = sub.add_parser("fit-ppa", help="fit the area/leakage models and print coefficients as CSV")
    p.add_argument("--pdk", choices=[x.value for x in Pdk])
    p.add_argument("--method", choices=("ols", "minimax"), default="ols")
    p.set_defaults(func=_cmd_fit_ppa)
    p = sub.add_parser("check-netlist", help="verify netlist connectivity")
    p.add_argument("netlist")
    p.set_defaults(func=_cmd_netlist_check)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, StageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
