"""Deterministic synthetic drift streams and CSV ingestion.

Generators follow the usual MOA definitions (SEA, rotating hyperplane,
random RBF, waveform) plus a label-flip stream with abrupt label
reversals. Every numeric knob lives on :class:`StreamSpec`; a stream is a
pure function of its spec, seed included. Class labels are ``0..M-1``.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

KINDS = (
    "sea",
    "sea_abrupt",
    "hyperplane",
    "rbf",
    "rbf_gradual",
    "waveform",
    "waveform_noisy",
    "label_flip",
    "csv",
)

SEA_THRESHOLDS = (8.0, 9.0, 7.0, 9.5)

# MOA waveform base functions over 21 attributes, and the class-to-pair map.
_WAVE_H = np.array(
    [
        [0, 1, 2, 3, 4, 5, 6, 5, 4, 3, 2, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 2, 3, 4, 5, 6, 5, 4, 3, 2, 1, 0],
        [0, 0, 0, 0, 0, 1, 2, 3, 4, 5, 6, 5, 4, 3, 2, 1, 0, 0, 0, 0, 0],
    ],
    dtype=float,
)
_WAVE_A = (0, 0, 1)
_WAVE_B = (1, 2, 2)


@dataclass(frozen=True)
class StreamSample:
    features: np.ndarray
    label: int

    def __eq__(self, other) -> bool:
        if not isinstance(other, StreamSample):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.features, other.features)

    __hash__ = None  # type: ignore[assignment]


@dataclass
class StreamSpec:
    kind: str
    length: int = 20_000
    seed: int = 0
    noise: float = 0.0
    # sea / sea_abrupt
    threshold: float = 8.0
    thresholds: tuple[float, ...] = SEA_THRESHOLDS
    # hyperplane
    num_features: int = 10
    mag_change: float = 0.001
    sigma_reverse: float = 0.1
    # rbf / rbf_gradual
    num_classes: int = 4
    num_centroids: int = 50
    drift_speed: float = 0.001
    num_drift_centroids: int = 50
    # waveform_noisy
    noise_attributes: int = 19
    # label_flip
    flip_period: int = 2_000
    feature_noise: float = 0.05
    # csv
    path: str | None = None
    label_column: str | None = None
    class_map: dict | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind: unknown stream kind {self.kind!r}")
        if self.length < 1:
            raise ValueError("length: must be >= 1")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise: must lie in [0, 1]")
        if self.kind == "sea_abrupt" and len(self.thresholds) < 1:
            raise ValueError("thresholds: need at least one concept")
        if self.kind in ("hyperplane", "label_flip") and self.num_features < 1:
            raise ValueError("num_features: must be >= 1")
        if self.kind in ("rbf", "rbf_gradual"):
            if self.num_classes < 2:
                raise ValueError("num_classes: must be >= 2")
            if self.num_centroids < 1:
                raise ValueError("num_centroids: must be >= 1")
            if not 0 <= self.num_drift_centroids <= self.num_centroids:
                raise ValueError("num_drift_centroids: must lie in [0, num_centroids]")
        if self.kind == "label_flip":
            if self.flip_period < 1:
                raise ValueError("flip_period: must be >= 1")
            if self.feature_noise < 0:
                raise ValueError("feature_noise: must be >= 0")
        if self.kind == "csv" and (self.path is None or self.label_column is None):
            raise ValueError("path/label_column: required for csv streams")
        self.thresholds = tuple(float(t) for t in self.thresholds)

    @property
    def classes(self) -> int:
        if self.kind in ("rbf", "rbf_gradual"):
            return self.num_classes
        if self.kind in ("waveform", "waveform_noisy"):
            return 3
        if self.kind == "csv":
            if self.class_map:
                return len(set(self.class_map.values()))
            return len({s.label for s in ingest_csv(self.path, self.label_column)})
        return 2

    @property
    def dimension(self) -> int:
        if self.kind in ("sea", "sea_abrupt"):
            return 3
        if self.kind == "waveform":
            return 21
        if self.kind == "waveform_noisy":
            return 21 + self.noise_attributes
        if self.kind == "csv":
            return next(iter(ingest_csv(self.path, self.label_column, self.class_map))).features.size
        return self.num_features

    def change_points(self) -> list[int]:
        """Positions where the concept switches abruptly (empty for gradual kinds)."""
        if self.kind == "sea_abrupt":
            c = len(self.thresholds)
            return [i * self.length // c for i in range(1, c)]
        if self.kind == "label_flip":
            return list(range(self.flip_period, self.length, self.flip_period))
        return []

    def to_dict(self) -> dict:
        d = asdict(self)
        d["thresholds"] = list(self.thresholds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StreamSpec":
        d = dict(d)
        if "thresholds" in d:
            d["thresholds"] = tuple(d["thresholds"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown stream field(s): {sorted(unknown)}")
        return cls(**d)


def _class_noise(rng: np.random.Generator, label: int, num_classes: int, rate: float) -> int:
    if rate > 0.0 and rng.random() < rate:
        other = int(rng.integers(num_classes - 1))
        return other if other < label else other + 1
    return label


def _sea(spec: StreamSpec, rng: np.random.Generator) -> Iterator[StreamSample]:
    changes = spec.change_points() if spec.kind == "sea_abrupt" else []
    thresholds = spec.thresholds if spec.kind == "sea_abrupt" else (spec.threshold,)
    concept = 0
    for t in range(spec.length):
        while concept < len(changes) and t >= changes[concept]:
            concept += 1
        x = rng.uniform(0.0, 10.0, size=3)
        label = int(x[0] + x[1] <= thresholds[concept])
        yield StreamSample(x, _class_noise(rng, label, 2, spec.noise))


def sea_label(features, threshold: float) -> int:
    return int(features[0] + features[1] <= threshold)


def _hyperplane(spec: StreamSpec, rng: np.random.Generator) -> Iterator[StreamSample]:
    d = spec.num_features
    w = rng.random(d)
    sigma = np.ones(d)
    for _ in range(spec.length):
        x = rng.random(d)
        label = int(x @ w >= 0.5 * w.sum())
        yield StreamSample(x, _class_noise(rng, label, 2, spec.noise))
        w = w + sigma * spec.mag_change
        flip = rng.random(d) < spec.sigma_reverse
        sigma = np.where(flip, -sigma, sigma)


def _rbf(spec: StreamSpec, rng: np.random.Generator) -> Iterator[StreamSample]:
    d, c = spec.num_features, spec.num_centroids
    centres = rng.random((c, d))
    labels = rng.integers(spec.num_classes, size=c)
    stds = rng.random(c)
    weights = rng.random(c)
    cdf = np.cumsum(weights) / weights.sum()
    moving = spec.kind == "rbf_gradual" and spec.drift_speed > 0
    if moving:
        m = spec.num_drift_centroids
        directions = rng.normal(size=(m, d))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        velocity = directions * spec.drift_speed
    for _ in range(spec.length):
        i = min(int(np.searchsorted(cdf, rng.random(), side="right")), c - 1)
        direction = rng.normal(size=d)
        direction /= np.linalg.norm(direction)
        x = centres[i] + direction * rng.normal() * stds[i]
        label = _class_noise(rng, int(labels[i]), spec.num_classes, spec.noise)
        yield StreamSample(x, label)
        if moving:
            centres[:m] += velocity
            out = (centres[:m] < 0.0) | (centres[:m] > 1.0)
            velocity = np.where(out, -velocity, velocity)
            centres[:m] = np.clip(centres[:m], 0.0, 1.0)


def _waveform(spec: StreamSpec, rng: np.random.Generator) -> Iterator[StreamSample]:
    extra = spec.noise_attributes if spec.kind == "waveform_noisy" else 0
    for _ in range(spec.length):
        label = int(rng.integers(3))
        u = rng.random()
        base = u * _WAVE_H[_WAVE_A[label]] + (1.0 - u) * _WAVE_H[_WAVE_B[label]]
        x = base + rng.normal(size=21)
        if extra:
            x = np.concatenate([x, rng.normal(size=extra)])
        yield StreamSample(x, _class_noise(rng, label, 3, spec.noise))


def label_flip_label(weights: np.ndarray, clean_features: np.ndarray, t: int, flip_period: int) -> int:
    """Concept of the label-flip stream at step ``t``: a hyperplane, inverted every period."""
    base = int(clean_features @ weights > 0.0)
    return base ^ ((t // flip_period) % 2)


def label_flip_weights(seed: int, num_features: int) -> np.ndarray:
    w = np.random.default_rng([seed, 1]).normal(size=num_features)
    return w / np.linalg.norm(w)


def _label_flip(spec: StreamSpec, rng: np.random.Generator) -> Iterator[StreamSample]:
    d = spec.num_features
    w = label_flip_weights(spec.seed, d)
    for t in range(spec.length):
        clean = rng.uniform(-1.0, 1.0, size=d)
        label = label_flip_label(w, clean, t, spec.flip_period)
        x = clean + rng.normal(scale=spec.feature_noise, size=d) if spec.feature_noise else clean
        yield StreamSample(x, _class_noise(rng, label, 2, spec.noise))


def generate(spec: StreamSpec) -> Iterator[StreamSample]:
    """Iterate the stream described by ``spec``."""
    if spec.kind == "csv":
        yield from itertools.islice(
            ingest_csv(spec.path, spec.label_column, spec.class_map), spec.length
        )
        return
    rng = np.random.default_rng(spec.seed)
    if spec.kind in ("sea", "sea_abrupt"):
        yield from _sea(spec, rng)
    elif spec.kind == "hyperplane":
        yield from _hyperplane(spec, rng)
    elif spec.kind in ("rbf", "rbf_gradual"):
        yield from _rbf(spec, rng)
    elif spec.kind in ("waveform", "waveform_noisy"):
        yield from _waveform(spec, rng)
    else:
        yield from _label_flip(spec, rng)


class CSVFormatError(ValueError):
    pass


def ingest_csv(path, label_column: str, class_map: dict | None = None) -> Iterator[StreamSample]:
    """Read a header-row CSV; every column except ``label_column`` is a numeric feature.

    Without ``class_map`` labels are numbered by first appearance. Row
    numbers in errors count the header as row 1.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such CSV file: {path}")
    mapping = dict(class_map) if class_map else {}
    fixed = bool(class_map)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CSVFormatError(f"{path}: empty file") from None
        if label_column not in header:
            raise CSVFormatError(f"{path}: label column {label_column!r} not in header")
        li = header.index(label_column)
        width = len(header)
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise CSVFormatError(f"{path}: row {rowno} has {len(row)} cells, expected {width}")
            raw = row[li]
            if raw not in mapping:
                if fixed:
                    raise CSVFormatError(f"{path}: row {rowno}: unknown label {raw!r}")
                mapping[raw] = len(mapping)
            try:
                x = np.array([float(v) for i, v in enumerate(row) if i != li])
            except ValueError:
                raise CSVFormatError(f"{path}: row {rowno}: non-numeric feature value") from None
            if not np.all(np.isfinite(x)):
                raise CSVFormatError(f"{path}: row {rowno}: non-finite feature value")
            yield StreamSample(x, int(mapping[raw]))


def export_csv(samples: Iterable[StreamSample], path, label_column: str = "label") -> int:
    """Write samples in the ingestion format; returns the number of rows written.

    Floats are written with ``repr`` so a round trip is exact.
    """
    path = Path(path)
    n = 0
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header_written = False
        for s in samples:
            if not header_written:
                writer.writerow([f"x{i}" for i in range(s.features.size)] + [label_column])
                header_written = True
            writer.writerow([repr(float(v)) for v in s.features] + [s.label])
            n += 1
    return n
