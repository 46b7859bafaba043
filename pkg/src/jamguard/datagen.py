"""
Labelled detection and localization datasets built from link-model runs.

Every sample is one network instance: per-transmitter launch powers drawn
from the sweep range, optionally one channel raised by a jammer, then the
monitor-point readings with measurement noise on top.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .optics import (
    LAUNCH_POWER_RANGE,
    Jammer,
    LaunchConfig,
    LinkChain,
    add_measurement_noise,
    build_reference_chain,
    equalizing_offsets,
    propagate,
    readings_to_arrays,
)

RATIOS = {"50_50": 0.5, "70_30": 0.3, "90_10": 0.1}  # unauthorized share
FEATURE_MODES = ("power_only", "power_and_osnr")
TASKS = ("detection", "localization")
DETECTION_CHANNELS = (7, 13, 27)
TRAIN_FRACTION = 0.75


class DatasetError(ValueError):
    pass


def normalize_ratio(ratio: str) -> str:
    r = str(ratio).replace("-", "_")
    if r not in RATIOS:
        raise DatasetError(f"unsupported ratio {ratio!r}; choose from 50-50, 70-30, 90-10")
    return r


def normalize_feature_mode(mode: str) -> str:
    m = str(mode).replace("-", "_")
    if m not in FEATURE_MODES:
        raise DatasetError(f"unsupported feature mode {mode!r}")
    return m


@dataclass(frozen=True)
class GeneratorSettings:
    """Knobs of the synthetic telemetry left implicit by a plain link-budget simulator."""

    sigma_power: float = 0.1  # dB
    sigma_osnr: float = 0.2  # dB
    jitter: float = 0.0  # dB, per-transmitter deviation from the equalised launch plan
    detection_power_range: tuple[float, float] = LAUNCH_POWER_RANGE
    localization_power_range: tuple[float, float] = (-20.0, 0.0)

    def to_dict(self):
        return {
            "sigma_power": self.sigma_power,
            "sigma_osnr": self.sigma_osnr,
            "jitter": self.jitter,
            "detection_power_range": list(self.detection_power_range),
            "localization_power_range": list(self.localization_power_range),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        for key in ("detection_power_range", "localization_power_range"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    task: str
    feature_mode: str
    seed: int
    ratio: str | None = None
    train_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    test_idx: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    jammed_channel: np.ndarray | None = None  # 0 = clean
    epsilon: np.ndarray | None = None
    launch: np.ndarray | None = None  # (n, T) dBm
    settings: GeneratorSettings = field(default_factory=GeneratorSettings)

    def __len__(self):
        return len(self.y)

    @property
    def n_channels(self) -> int:
        return self.X.shape[1] if self.feature_mode == "power_only" else self.X.shape[1] // 2

    def features(self, mode: str | None = None) -> np.ndarray:
        """Feature matrix, optionally narrowed to power-only columns."""
        mode = normalize_feature_mode(mode or self.feature_mode)
        if mode == self.feature_mode:
            return self.X
        if mode == "power_only":
            return self.X[:, : self.n_channels]
        raise DatasetError("dataset has no OSNR columns")

    def resplit(self, seed) -> "Dataset":
        tr, te = split(self, seed)
        return replace(self, train_idx=tr, test_idx=te)

    def train(self):
        return self.X[self.train_idx], self.y[self.train_idx]

    def test(self):
        return self.X[self.test_idx], self.y[self.test_idx]


def _draw_launch(rng, chain, lo, hi, jitter):
    off = equalizing_offsets(chain)
    base = rng.uniform(lo, hi)
    p = base + off
    if jitter > 0:
        p = p + rng.uniform(-jitter, jitter, len(off))
    return tuple(float(v) for v in np.clip(p, *LAUNCH_POWER_RANGE))


def _measure(chain, cfg, feature_mode, settings, rng):
    readings = propagate(chain, cfg)
    noisy = add_measurement_noise(
        readings, settings.sigma_power, settings.sigma_osnr, int(rng.integers(2**63))
    )
    power, osnr = readings_to_arrays(noisy)
    if feature_mode == "power_only":
        return power
    return np.concatenate([power, osnr])


def _assemble(rows, labels, jam, eps, launch, rng, **meta):
    order = rng.permutation(len(rows))
    ds = Dataset(
        X=np.asarray(rows)[order],
        y=np.asarray(labels, dtype=int)[order],
        jammed_channel=np.asarray(jam, dtype=int)[order],
        epsilon=np.asarray(eps, dtype=float)[order],
        launch=np.asarray(launch, dtype=float)[order],
        **meta,
    )
    ds.train_idx, ds.test_idx = split(ds, meta["seed"])
    return ds


def generate_detection_dataset(
    ratio="50_50", size=1140, feature_mode="power_only", seed=0, chain: LinkChain | None = None,
    settings: GeneratorSettings | None = None,
) -> Dataset:
    """Binary dataset: label 1 when a jammer sits on channel 7, 13 or 27."""
    ratio = normalize_ratio(ratio)
    feature_mode = normalize_feature_mode(feature_mode)
    if size <= 0:
        raise DatasetError("size must be > 0")
    chain = chain or build_reference_chain()
    settings = settings or GeneratorSettings()
    rng = np.random.default_rng(seed)
    n_bad = int(round(size * RATIOS[ratio]))
    lo, hi = settings.detection_power_range
    rows, labels, jam, eps, launch = [], [], [], [], []
    for i in range(size):
        powers = _draw_launch(rng, chain, lo, hi, settings.jitter)
        jammer = None
        if i >= size - n_bad:
            jammer = Jammer(int(rng.choice(DETECTION_CHANNELS)), float(rng.uniform(1.0, 3.0)))
        rows.append(_measure(chain, LaunchConfig(powers, jammer), feature_mode, settings, rng))
        labels.append(int(jammer is not None))
        jam.append(0 if jammer is None else jammer.channel)
        eps.append(0.0 if jammer is None else jammer.epsilon)
        launch.append(powers)
    return _assemble(
        rows, labels, jam, eps, launch, rng,
        task="detection", feature_mode=feature_mode, seed=seed, ratio=ratio, settings=settings,
    )


def generate_localization_dataset(
    samples_per_class=46, feature_mode="power_only", seed=0, chain: LinkChain | None = None,
    settings: GeneratorSettings | None = None,
) -> Dataset:
    """33-class dataset: label k for a jammer on channel k, 0 for no attack."""
    feature_mode = normalize_feature_mode(feature_mode)
    if samples_per_class <= 0:
        raise DatasetError("samples_per_class must be > 0")
    chain = chain or build_reference_chain()
    settings = settings or GeneratorSettings()
    rng = np.random.default_rng(seed)
    lo, hi = settings.localization_power_range
    rows, labels, jam, eps, launch = [], [], [], [], []
    for cls in range(chain.plan.n_channels + 1):
        for _ in range(samples_per_class):
            powers = _draw_launch(rng, chain, lo, hi, settings.jitter)
            jammer = None
            if cls > 0:
                jammer = Jammer(cls, float(rng.choice([1.0, 2.0, 3.0])))
            rows.append(_measure(chain, LaunchConfig(powers, jammer), feature_mode, settings, rng))
            labels.append(cls)
            jam.append(cls)
            eps.append(0.0 if jammer is None else jammer.epsilon)
            launch.append(powers)
    return _assemble(
        rows, labels, jam, eps, launch, rng,
        task="localization", feature_mode=feature_mode, seed=seed, settings=settings,
    )


def split(dataset, seed, train_fraction=TRAIN_FRACTION):
    """Stratified train/test index arrays (sorted), deterministic per seed.

    The overall train size is ``round(train_fraction * n)``; it is shared out
    between classes by largest remainder, so every class is within one
    sample of its exact quota.
    """
    y = np.asarray(dataset.y if hasattr(dataset, "y") else dataset)
    if len(y) == 0:
        raise DatasetError("cannot split an empty dataset")
    classes, counts = np.unique(y, return_counts=True)
    if counts.min() < 4:
        raise DatasetError("every class needs at least 4 samples to stratify")
    quota = train_fraction * counts
    n_train = floor = np.floor(quota).astype(int)
    extra = int(round(train_fraction * len(y))) - floor.sum()
    if extra > 0:
        # stable sort: ties go to the lower class label
        order = np.argsort(-(quota - floor), kind="stable")[:extra]
        n_train = floor.copy()
        n_train[order] += 1
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c, k in zip(classes, n_train):
        idx = rng.permutation(np.nonzero(y == c)[0])
        train.append(idx[:k])
        test.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


# -- files -------------------------------------------------------------------------


def csv_header(n_channels, feature_mode):
    cols = [f"ch{k}_power" for k in range(1, n_channels + 1)]
    if feature_mode == "power_and_osnr":
        cols += [f"ch{k}_osnr" for k in range(1, n_channels + 1)]
    return cols + ["label"]


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    buf.write(",".join(csv_header(ds.n_channels, ds.feature_mode)) + "\n")
    for row, label in zip(ds.X, ds.y):
        buf.write(",".join(f"{v:.6f}" for v in row) + f",{int(label)}\n")
    return buf.getvalue()


def sidecar(ds: Dataset) -> dict:
    return {
        "task": ds.task,
        "ratio": ds.ratio,
        "feature_mode": ds.feature_mode,
        "seed": int(ds.seed),
        "size": len(ds),
        "train_indices": [int(i) for i in ds.train_idx],
        "test_indices": [int(i) for i in ds.test_idx],
        "settings": ds.settings.to_dict(),
    }


def write_dataset(ds: Dataset, csv_path) -> tuple[Path, Path]:
    """Write the CSV and its ``.json`` sidecar; return both paths."""
    csv_path = Path(csv_path)
    json_path = csv_path.with_suffix(".json")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(dataset_to_csv(ds))
    with open(json_path, "w", newline="\n") as fh:
        json.dump(sidecar(ds), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def read_dataset(csv_path) -> Dataset:
    """Load a dataset CSV; split metadata comes from the sidecar when present."""
    csv_path = Path(csv_path)
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    if not header or header[-1] != "label":
        raise DatasetError(f"{csv_path}: last column must be 'label'")
    n_feat = len(header) - 1
    has_osnr = any(h.endswith("_osnr") for h in header)
    if n_feat not in (32, 64) and not all(h.startswith("ch") for h in header[:-1]):
        raise DatasetError(f"{csv_path}: unexpected header")
    X = np.array([[float(v) for v in r[:-1]] for r in rows]).reshape(len(rows), n_feat)
    y = np.array([int(r[-1]) for r in rows], dtype=int)
    meta = {}
    json_path = csv_path.with_suffix(".json")
    if json_path.exists():
        with open(json_path) as fh:
            meta = json.load(fh)
    feature_mode = "power_and_osnr" if has_osnr else "power_only"
    task = meta.get("task") or ("detection" if set(np.unique(y)) <= {0, 1} else "localization")
    ds = Dataset(
        X=X,
        y=y,
        task=task,
        feature_mode=feature_mode,
        seed=int(meta.get("seed", 0)),
        ratio=meta.get("ratio"),
        settings=GeneratorSettings.from_dict(meta["settings"]) if "settings" in meta else GeneratorSettings(),
    )
    if "train_indices" in meta:
        ds.train_idx = np.array(meta["train_indices"], dtype=int)
        ds.test_idx = np.array(meta["test_indices"], dtype=int)
    else:
        ds.train_idx, ds.test_idx = split(ds, ds.seed)
    return ds
