"""Command-line entry point: dataset generation, classifier experiments,
prevention sweeps and figure-data export.

Exit codes
    0  all requested outputs written
    1  unexpected failure (see message)
    2  usage or configuration error
    3  a required input file is missing
    4  an output location is not writable
"""

from __future__ import annotations

import argparse
import ast
import configparser
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import KINDS, ClassifierSpec
from .classifiers.core import DEFAULTS, LOCALIZATION_ANN, ModelError
from .datagen import (
    FEATURE_MODES,
    RATIOS,
    DatasetError,
    GeneratorSettings,
    generate_detection_dataset,
    generate_localization_dataset,
    normalize_feature_mode,
    normalize_ratio,
    read_dataset,
    write_dataset,
)
from .evaluation import EvaluationError, run_experiment, time_model
from .optics import build_reference_chain, chain_from_config
from .prevention import (
    SimParams,
    estimate_probabilities,
    load_nsfnet,
    load_topology,
    reconfiguration_report,
    security_metric,
    simulate,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_MISSING, EXIT_UNWRITABLE = 0, 1, 2, 3, 4
TIMING_FILES = ("fig4.csv", "timing.json")
TIMING_ROWS = 10_000


class UsageError(Exception):
    pass


class MissingInput(Exception):
    pass


class Unwritable(Exception):
    pass


# -- configuration ----------------------------------------------------------------


def _list(value, cast=str):
    if isinstance(value, (list, tuple)):
        return [cast(v) for v in value]
    return [cast(v.strip()) for v in str(value).split(",") if v.strip()]


def _bool(value):
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise UsageError(f"not a boolean: {value!r}")


@dataclass
class DataConfig:
    task: str = "detection"
    ratios: list = field(default_factory=lambda: ["50_50"])
    size: int = 1140
    samples_per_class: int = 46
    feature_mode: str = "power_only"
    sigma_power: float = 0.1
    sigma_osnr: float = 0.2
    jitter: float = 0.0


@dataclass
class TrainConfig:
    task: str = "detection"
    ratios: list = field(default_factory=lambda: list(RATIOS))
    algos: list = field(default_factory=lambda: list(KINDS))
    n_seeds: int = 20
    feature_mode: str | None = None
    timing: bool = False
    repetitions: int = 5
    ann_variant: str = "wide"
    data_dir: str | None = None


@dataclass
class SimConfig:
    tau_r: list = field(default_factory=lambda: [1.0, 2.0, 5.0, 10.0, 20.0])
    pa: list = field(default_factory=lambda: [0.8, 0.9, 1.0])
    pl: float = 0.9
    fig7_pa: list = field(default_factory=lambda: [0.6, 0.7, 0.8, 0.9, 1.0])
    fig7_tau_r: float = 1.0
    figures: list = field(default_factory=lambda: [6, 7])
    unauthorized_fraction: float = 0.01
    arrival_rate: float = 200.0
    holding_mean: float = 10.0
    n_requests: int = 100_000
    warmup: int = 1_000
    attack_radius: int = 1
    topology: str | None = None
    jobs: int = 1


@dataclass
class ExperimentConfig:
    seed: int = 0
    out: str = "results"
    data: DataConfig = field(default_factory=DataConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    classifier_params: dict = field(default_factory=dict)
    parser: configparser.ConfigParser | None = None

    def chain(self):
        p = self.parser
        if p is not None and (p.has_section("chain") or any(s.startswith("segment.") for s in p.sections())):
            try:
                return chain_from_config(p)
            except ValueError as exc:
                raise UsageError(f"chain configuration: {exc}") from exc
        return build_reference_chain()

    def settings(self):
        d = self.data
        return GeneratorSettings(sigma_power=d.sigma_power, sigma_osnr=d.sigma_osnr, jitter=d.jitter)

    def spec(self, kind, task):
        base = ClassifierSpec.default(kind, task, self.train.ann_variant)
        params = {**base.params, **self.classifier_params.get(kind, {})}
        try:
            return ClassifierSpec(kind, params)
        except ModelError as exc:
            raise UsageError(str(exc)) from exc


_SECTION_TYPES = {
    "data": DataConfig,
    "train": TrainConfig,
    "simulate": SimConfig,
}


def _coerce(dc_cls, key, raw):
    default = getattr(dc_cls(), key)
    if key in ("ratios",):
        return [normalize_ratio(r) for r in _list(raw)]
    if key == "algos":
        return _list(raw)
    if key in ("tau_r", "pa", "fig7_pa"):
        return _list(raw, float)
    if key == "figures":
        return _list(raw, int)
    if isinstance(default, bool):
        return _bool(raw)
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw if raw != "" else None


def _literal(text):
    text = text.strip()
    if text in ("", "None"):
        return None
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text  # bare words such as ``tanh``


def load_config(path) -> ExperimentConfig:
    """Read a ``key = value`` file with ``[experiment]``, ``[data]``, ``[train]``,
    ``[simulate]``, ``[classifier.<kind>]`` and optional chain sections."""
    if not Path(path).exists():
        raise MissingInput(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from exc
    cfg = ExperimentConfig(parser=parser)
    try:
        if parser.has_section("experiment"):
            sec = parser["experiment"]
            cfg.seed = sec.getint("seed", cfg.seed)
            cfg.out = sec.get("out", cfg.out)
        for name, dc_cls in _SECTION_TYPES.items():
            if not parser.has_section(name):
                continue
            target = getattr(cfg, "sim" if name == "simulate" else name)
            for key, raw in parser[name].items():
                if not hasattr(target, key):
                    raise UsageError(f"[{name}] unknown key {key!r}")
                setattr(target, key, _coerce(dc_cls, key, raw))
        for sec in parser.sections():
            if sec.startswith("classifier."):
                kind = sec.split(".", 1)[1]
                if kind not in KINDS:
                    raise UsageError(f"[{sec}] unknown classifier kind")
                cfg.classifier_params[kind] = {k: _literal(v) for k, v in parser[sec].items()}
    except (ValueError, SyntaxError) as exc:
        raise UsageError(f"{path}: {exc}") from exc
    return cfg


# -- output helpers ---------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if v != v else f"{float(v):.6f}"
    return "" if v is None else str(v)


def write_csv(path, header, rows):
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for r in rows:
                fh.write(",".join(_fmt(v) for v in r) + "\n")
    except OSError as exc:
        raise Unwritable(f"cannot write {path}: {exc}") from exc


def write_json(path, doc):
    try:
        with open(path, "w", newline="\n") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise Unwritable(f"cannot write {path}: {exc}") from exc


def _prepare_out(out):
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise Unwritable(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise Unwritable(f"output directory {out} is not writable")
    return out


def update_manifest(out: Path, command, settings, completed, status):
    """Merge this command's record into ``manifest.json``."""
    path = out / "manifest.json"
    doc = {"artifacts": [], "commands": {}}
    if path.exists():
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError):
            pass
    doc.setdefault("commands", {})[command] = {
        "settings": settings,
        "completed": sorted(completed),
        "status": status,
    }
    arts = set(doc.get("artifacts", [])) | set(completed)
    doc["artifacts"] = sorted(arts)
    doc["version"] = __version__
    write_json(path, doc)


# -- gen-data ---------------------------------------------------------------------


def dataset_filename(task, ratio=None):
    return f"detection_{ratio}.csv" if task == "detection" else "localization.csv"


def cmd_gen_data(cfg: ExperimentConfig, out: Path, completed: list):
    d = cfg.data
    chain = cfg.chain()
    settings = cfg.settings()
    if d.task == "detection":
        for ratio in d.ratios:
            ds = generate_detection_dataset(ratio, d.size, d.feature_mode, cfg.seed, chain, settings)
            csv_path, json_path = _write_dataset(ds, out / dataset_filename("detection", ratio))
            completed += [csv_path.name, json_path.name]
            print(f"wrote {csv_path} ({len(ds)} rows)")
    else:
        ds = generate_localization_dataset(d.samples_per_class, d.feature_mode, cfg.seed, chain, settings)
        csv_path, json_path = _write_dataset(ds, out / dataset_filename("localization"))
        completed += [csv_path.name, json_path.name]
        print(f"wrote {csv_path} ({len(ds)} rows)")


def _write_dataset(ds, path):
    try:
        return write_dataset(ds, path)
    except OSError as exc:
        raise Unwritable(f"cannot write {path}: {exc}") from exc


# -- train-eval -------------------------------------------------------------------

_BIN_METRICS = ("accuracy", "tp_rate", "tn_rate")


def _load(path: Path):
    if not path.exists():
        raise MissingInput(f"dataset not found: {path}")
    return read_dataset(path)


def _binary_row(res: dict):
    row = []
    for m in _BIN_METRICS:
        row += [res["mean"][m], res["std"][m]]
    return row


def _bin_header():
    cols = []
    for m in _BIN_METRICS:
        cols += [f"{m}_mean", f"{m}_std"]
    return cols


def cmd_train_eval(cfg: ExperimentConfig, out: Path, completed: list):
    t = cfg.train
    data_dir = Path(t.data_dir) if t.data_dir else out
    for a in t.algos:
        if a not in KINDS:
            raise UsageError(f"unknown algorithm {a!r}; choose from {', '.join(KINDS)}")
    summary = {"task": t.task, "master_seed": cfg.seed, "n_seeds": t.n_seeds, "results": {}}
    timing_sets = None

    if t.task == "detection":
        datasets = {r: _load(data_dir / dataset_filename("detection", r)) for r in t.ratios}
        for ratio, ds in datasets.items():
            summary["results"][ratio] = {}
            for a in t.algos:
                res = run_experiment(cfg.spec(a, "detection"), ds, t.n_seeds, cfg.seed, t.feature_mode)
                summary["results"][ratio][a] = res.to_dict()
                print(f"{ratio:>6} {a:>4}  acc {res.mean['accuracy']:.4f}  "
                      f"tp {res.mean['tp_rate']:.4f}  tn {res.mean['tn_rate']:.4f}")
        mode = t.feature_mode or next(iter(datasets.values())).feature_mode
        if "50_50" in datasets:
            rows = [[a, mode] + _binary_row(summary["results"]["50_50"][a]) for a in t.algos]
            write_csv(out / "fig2.csv", ["algorithm", "feature_mode"] + _bin_header(), rows)
            completed.append("fig2.csv")
        rows = [
            [r, a, mode] + _binary_row(summary["results"][r][a]) for r in datasets for a in t.algos
        ]
        write_csv(out / "fig3.csv", ["ratio", "algorithm", "feature_mode"] + _bin_header(), rows)
        completed.append("fig3.csv")
        write_json(out / "summary_detection.json", summary)
        completed.append("summary_detection.json")
        timing_sets = datasets["50_50"] if "50_50" in datasets else next(iter(datasets.values()))
    else:
        ds = _load(data_dir / dataset_filename("localization"))
        labels = [int(c) for c in np.unique(ds.y)]
        rows = []
        for a in t.algos:
            res = run_experiment(cfg.spec(a, "localization"), ds, t.n_seeds, cfg.seed, t.feature_mode)
            summary["results"][a] = res.to_dict()
            worst = min(res.mean[f"tp_class_{c}"] for c in labels)
            print(f"{a:>4}  acc {res.mean['accuracy']:.4f}  worst class tp {worst:.4f}")
            rows.append([a, "accuracy", res.mean["accuracy"], res.std["accuracy"]])
            for c in labels:
                key = f"tp_class_{c}"
                rows.append([a, key, res.mean[key], res.std[key]])
        write_csv(out / "fig5.csv", ["algorithm", "metric", "mean", "std"], rows)
        completed.append("fig5.csv")
        write_json(out / "summary_localization.json", summary)
        completed.append("summary_localization.json")
        timing_sets = ds

    if t.timing:
        _write_timing(cfg, timing_sets, out, completed)


def _write_timing(cfg, ds, out, completed):
    t = cfg.train
    X = ds.features(t.feature_mode)
    Xtr, ytr = X[ds.train_idx], ds.y[ds.train_idx]
    Xte = np.resize(X[ds.test_idx], (TIMING_ROWS, X.shape[1]))
    rows, doc = [], {}
    for a in t.algos:
        rep = time_model(cfg.spec(a, ds.task), Xtr, ytr, Xte, t.repetitions, cfg.seed)
        rows.append([a, rep.train_ms_per_1000, rep.inference_ms_per_1000, rep.inferences_per_second])
        doc[a] = rep.to_dict()
        print(f"{a:>4}  train {rep.train_ms_per_1000:.3f} ms/1000  "
              f"infer {rep.inference_ms_per_1000:.4f} ms/1000  {rep.inferences_per_second:.3g}/s")
    write_csv(
        out / "fig4.csv",
        ["algorithm", "train_ms_per_1000", "inference_ms_per_1000", "inferences_per_second"],
        rows,
    )
    write_json(out / "timing.json", {"task": ds.task, "rows_timed": TIMING_ROWS, "models": doc})
    completed += list(TIMING_FILES)


# -- simulate ---------------------------------------------------------------------


def _sim_params(cfg: ExperimentConfig, tau_r, p_a, p_l):
    s = cfg.sim
    return SimParams(
        arrival_rate=s.arrival_rate,
        holding_mean=s.holding_mean,
        realloc_mean=tau_r,
        unauthorized_fraction=s.unauthorized_fraction,
        p_a=p_a,
        p_l=p_l,
        attack_radius=s.attack_radius,
        seed=cfg.seed,
        n_requests=s.n_requests,
        warmup=s.warmup,
        record_log=False,
    )


def _run_point(args):
    params, topo_path = args
    topo = load_topology(topo_path) if topo_path else load_nsfnet()
    return simulate(params, topo).stats


def _validate_sim(s: SimConfig):
    for name in ("pa", "fig7_pa"):
        for v in getattr(s, name):
            if not 0.0 <= v <= 1.0:
                raise UsageError(f"--{name.replace('_', '-')} values must lie in [0, 1], got {v}")
    if not 0.0 <= s.pl <= 1.0:
        raise UsageError(f"--pl must lie in [0, 1], got {s.pl}")
    if not 0.0 <= s.unauthorized_fraction <= 1.0:
        raise UsageError("--unauthorized-fraction must lie in [0, 1]")
    if any(v <= 0 for v in s.tau_r) or s.fig7_tau_r <= 0:
        raise UsageError("tau_r values must be > 0")
    if not set(s.figures) <= {6, 7}:
        raise UsageError("--figures accepts 6 and/or 7")
    if s.topology and not Path(s.topology).exists():
        raise MissingInput(f"topology file not found: {s.topology}")


def cmd_simulate(cfg: ExperimentConfig, out: Path, completed: list):
    s = cfg.sim
    jobs = []
    if 6 in s.figures:
        jobs += [("fig6", tr, pa, 0.0) for tr in s.tau_r for pa in s.pa]
    if 7 in s.figures:
        for pa in s.fig7_pa:
            jobs += [("fig7", s.fig7_tau_r, pa, 0.0), ("fig7", s.fig7_tau_r, pa, s.pl)]
    try:
        params = [(_sim_params(cfg, tr, pa, pl), s.topology) for _, tr, pa, pl in jobs]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if s.jobs > 1:
        with ProcessPoolExecutor(max_workers=s.jobs) as pool:
            stats = list(pool.map(_run_point, params))
    else:
        stats = [_run_point(p) for p in params]

    summary = {"seed": cfg.seed, "settings": asdict(s), "fig6": [], "fig7": []}
    fig6, fig7 = [], []
    for (fig, tr, pa, pl), st in zip(jobs, stats):
        if fig == "fig6":
            p_j, p_c = estimate_probabilities(st)
            lam = security_metric(p_j, pa, p_c, s.holding_mean, tr)
            fig6.append([tr, pa, p_j, p_c if p_c is not None else float("nan"), lam])
            summary["fig6"].append({
                "tau_r": tr, "p_a": pa, "p_j": p_j, "p_c": p_c, "lambda_j": lam,
                "intervals": st.total_intervals, "jammed": st.total_jammed,
                "reallocation_instances": st.total_instances, "continued": st.total_continued,
            })
            print(f"tau_r {tr:>6g}  p_a {pa:.2f}  p_j {p_j:.4f}  p_c "
                  f"{'n/a' if p_c is None else f'{p_c:.4f}'}  lambda_j {lam:.4f}")
        else:
            policy = "localization" if pl > 0 else "no_localization"
            try:
                rep = reconfiguration_report(st)
            except ValueError:
                rep = None
            per_det = rep["per_detection"] if rep else 0.0
            frac = rep["fraction"] if rep else 0.0
            fig7.append([pa, policy, pl, per_det, frac, rep["executed_events"] if rep else 0])
            summary["fig7"].append({"tau_r": tr, "p_a": pa, "p_l": pl, "policy": policy, "report": rep})
            print(f"p_a {pa:.2f}  {policy:<16} reconfigs/detection {per_det:9.2f}  fraction {frac:.4f}")
    if 6 in s.figures:
        write_csv(out / "fig6.csv", ["tau_r", "p_a", "p_j", "p_c", "lambda_j"], fig6)
        completed.append("fig6.csv")
    if 7 in s.figures:
        write_csv(
            out / "fig7.csv",
            ["p_a", "policy", "p_l", "reconfigs_per_detection", "fraction_reconfigured", "executed_events"],
            fig7,
        )
        completed.append("fig7.csv")
    write_json(out / "summary_simulate.json", summary)
    completed.append("summary_simulate.json")


# -- report -----------------------------------------------------------------------


def _read_csv(path):
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:] if ln]


def cmd_report(cfg: ExperimentConfig, out: Path, completed: list):
    """Collect the figure CSVs in the output directory into ``report.txt``."""
    parts = []
    for name in ("fig2.csv", "fig3.csv", "fig4.csv", "fig5.csv", "fig6.csv", "fig7.csv"):
        path = out / name
        if not path.exists():
            continue
        if name in TIMING_FILES:
            # keep report.txt byte-stable; timings live in their own files
            parts += [f"== {name} ==", "(timing results, see fig4.csv and timing.json)", ""]
            continue
        header, rows = _read_csv(path)
        widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
        parts.append(f"== {name} ==")
        parts.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
        parts += ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
        parts.append("")
    if not parts:
        raise MissingInput(f"no figure CSVs found in {out}")
    text = "\n".join(parts)
    print(text)
    try:
        with open(out / "report.txt", "w", newline="\n") as fh:
            fh.write(text + "\n")
    except OSError as exc:
        raise Unwritable(f"cannot write {out / 'report.txt'}: {exc}") from exc
    completed.append("report.txt")


# -- argument parsing -------------------------------------------------------------


def _u64(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _ratio_list(text):
    try:
        return [normalize_ratio(r) for r in _list(text)]
    except DatasetError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _float_list(text):
    try:
        return _list(text, float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _mode(text):
    try:
        return normalize_feature_mode(text)
    except DatasetError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file (key = value with [sections])")
    common.add_argument("--seed", type=_u64, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", help="output directory (default: results)")

    p = argparse.ArgumentParser(prog="jamguard", description=__doc__.split("\n\n")[0].replace("\n", " "),
                                epilog="exit codes: 0 ok, 1 failure, 2 usage, 3 missing input, 4 unwritable output")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", parents=[common], help="generate labelled telemetry datasets")
    g.add_argument("--task", choices=("detection", "localization"))
    g.add_argument("--ratio", type=_ratio_list, help="50-50, 70-30, 90-10 (comma list allowed)")
    g.add_argument("--size", type=int, help="detection dataset size")
    g.add_argument("--samples-per-class", type=int, help="localization samples per class")
    g.add_argument("--feature-mode", type=_mode, help=" or ".join(FEATURE_MODES))
    g.add_argument("--sigma-power", type=float, help="power measurement noise (dB)")
    g.add_argument("--sigma-osnr", type=float, help="OSNR measurement noise (dB)")
    g.add_argument("--jitter", type=float, help="per-transmitter launch jitter (dB)")

    t = sub.add_parser("train-eval", parents=[common], help="seed-averaged classifier experiments")
    t.add_argument("--task", choices=("detection", "localization"))
    t.add_argument("--ratio", dest="ratios", type=_ratio_list, help="detection ratios to evaluate")
    t.add_argument("--algo", dest="algos", type=_list, help=",".join(KINDS))
    t.add_argument("--n-seeds", type=int)
    t.add_argument("--feature-mode", type=_mode)
    t.add_argument("--timing", action="store_true", default=None, help="also write fig4.csv and timing.json")
    t.add_argument("--repetitions", type=int, help="timing repetitions (>= 3)")
    t.add_argument("--ann-variant", choices=sorted(LOCALIZATION_ANN), help="localization ANN architecture")
    t.add_argument("--data-dir", help="directory holding dataset CSVs (default: --out)")

    s = sub.add_parser("simulate", parents=[common], help="prevention sweeps (fig6, fig7)")
    s.add_argument("--tau-r", type=_float_list, help="mean reallocation periods for fig6")
    s.add_argument("--pa", type=_float_list, help="detection probabilities for fig6")
    s.add_argument("--pl", type=float, help="localization accuracy of the localized policy")
    s.add_argument("--fig7-pa", type=_float_list, help="detection probabilities for fig7")
    s.add_argument("--fig7-tau-r", type=float, help="reallocation period used for fig7")
    s.add_argument("--figures", type=lambda v: _list(v, int), help="6, 7 or 6,7")
    s.add_argument("--unauthorized-fraction", type=float)
    s.add_argument("--arrival-rate", type=float)
    s.add_argument("--holding-mean", type=float)
    s.add_argument("--n-requests", type=int)
    s.add_argument("--warmup", type=int)
    s.add_argument("--attack-radius", type=int)
    s.add_argument("--topology", help="topology file (default: built-in NSFNET)")
    s.add_argument("--jobs", type=int, help="parallel sweep workers")

    sub.add_parser("report", parents=[common], help="collect figure CSVs into report.txt")
    return p


_OVERRIDES = {
    "gen-data": ("data", ["task", "size", "samples_per_class", "feature_mode", "sigma_power",
                          "sigma_osnr", "jitter"]),
    "train-eval": ("train", ["task", "ratios", "algos", "n_seeds", "feature_mode", "timing",
                             "repetitions", "ann_variant", "data_dir"]),
    "simulate": ("sim", ["tau_r", "pa", "pl", "fig7_pa", "fig7_tau_r", "figures",
                         "unauthorized_fraction", "arrival_rate", "holding_mean", "n_requests",
                         "warmup", "attack_radius", "topology", "jobs"]),
}


def resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if args.command in _OVERRIDES:
        attr, keys = _OVERRIDES[args.command]
        target = getattr(cfg, attr)
        for k in keys:
            v = getattr(args, k, None)
            if v is not None:
                setattr(target, k, v)
    if args.command == "gen-data" and args.ratio is not None:
        cfg.data.ratios = args.ratio
    _validate(cfg, args.command)
    return cfg


def _validate(cfg, command):
    d, t = cfg.data, cfg.train
    if command == "gen-data":
        if d.task not in ("detection", "localization"):
            raise UsageError(f"unknown task {d.task!r}")
        if d.size < 1 or d.samples_per_class < 1:
            raise UsageError("--size and --samples-per-class must be >= 1")
        if d.sigma_power < 0 or d.sigma_osnr < 0 or d.jitter < 0:
            raise UsageError("noise and jitter must be >= 0")
        d.feature_mode = normalize_feature_mode(d.feature_mode)
    if command == "train-eval":
        if t.task not in ("detection", "localization"):
            raise UsageError(f"unknown task {t.task!r}")
        if t.n_seeds < 1:
            raise UsageError("--n-seeds must be >= 1")
        if t.timing and t.repetitions < 3:
            raise UsageError("--repetitions must be >= 3")
        if t.ann_variant not in LOCALIZATION_ANN:
            raise UsageError(f"unknown ANN variant {t.ann_variant!r}")
        if t.feature_mode:
            t.feature_mode = normalize_feature_mode(t.feature_mode)
    if command == "simulate":
        if cfg.sim.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        _validate_sim(cfg.sim)
    for kind, params in cfg.classifier_params.items():
        unknown = set(params) - set(DEFAULTS[kind])
        if unknown:
            raise UsageError(f"[classifier.{kind}] unknown keys {sorted(unknown)}")


def _manifest_settings(cfg: ExperimentConfig, command):
    doc = {"seed": cfg.seed}
    if command == "gen-data":
        doc.update(asdict(cfg.data))
    elif command == "train-eval":
        doc.update({k: v for k, v in asdict(cfg.train).items() if k != "data_dir"})
    elif command == "simulate":
        doc.update(asdict(cfg.sim))
    return doc


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train-eval": cmd_train_eval,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with 2 on usage errors
    try:
        cfg = resolve(args)
        out = _prepare_out(cfg.out)
    except UsageError as exc:
        parser.error(str(exc))
    except (MissingInput, DatasetError) as exc:
        code = EXIT_MISSING if isinstance(exc, MissingInput) else EXIT_USAGE
        print(f"jamguard: error: {exc}", file=sys.stderr)
        return code
    except Unwritable as exc:
        print(f"jamguard: error: {exc}", file=sys.stderr)
        return EXIT_UNWRITABLE

    completed: list[str] = []
    code, status = EXIT_OK, "ok"
    try:
        COMMANDS[args.command](cfg, out, completed)
    except UsageError as exc:
        code, status = EXIT_USAGE, f"usage error: {exc}"
    except MissingInput as exc:
        code, status = EXIT_MISSING, f"missing input: {exc}"
    except Unwritable as exc:
        code, status = EXIT_UNWRITABLE, f"unwritable: {exc}"
    except (DatasetError, EvaluationError, ModelError) as exc:
        code, status = EXIT_USAGE, f"invalid input: {exc}"
    except (ValueError, OSError) as exc:
        code, status = EXIT_FAIL, f"failed: {exc}"
    if code != EXIT_OK:
        print(f"jamguard: error: {status}", file=sys.stderr)
    try:
        update_manifest(out, args.command, _manifest_settings(cfg, args.command), completed, status)
    except Unwritable as exc:
        print(f"jamguard: error: {exc}", file=sys.stderr)
        return code or EXIT_UNWRITABLE
    return code


if __name__ == "__main__":
    sys.exit(main())
