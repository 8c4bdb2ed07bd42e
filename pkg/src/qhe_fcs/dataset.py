"""Sampling of engine parameters, Fano-factor labelling, persistence and
distribution statistics."""
from __future__ import annotations

import dataclasses
import hashlib
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .engine import INPUT_NAMES, EngineParams
from .errors import EmptyDatasetError, QheError
from .fcs import FcsConfig, cumulants

FORMAT_VERSION = 1
SPLITS = ("train", "validation", "test")
COLUMNS = INPUT_NAMES + ("F", "split", "status")
FIXED_NAMES = ("A0", "omega", "E1", "E2", "Eb", "Ea", "r", "g")


@dataclass(frozen=True)
class ParamRanges:
    """Uniform sampling box; ``dT_h`` is the hot-bath offset above ``T_c0``."""

    T_c0: tuple = (0.2, 0.7)
    dT_h: tuple = (0.5, 1.2)
    T_l: tuple = (0.1, 1.0)
    phi: tuple = (0.0, 2 * math.pi)
    p_h: tuple = (0.0, 1.0)
    p_c: tuple = (0.0, 1.0)

    def __post_init__(self):
        for f in dataclasses.fields(self):
            lo, hi = getattr(self, f.name)
            if not lo <= hi:
                raise ValueError(f"range {f.name}=({lo}, {hi}) is empty")

    def contains(self, inputs) -> bool:
        T_c0, T_h0, T_l, phi, p_h, p_c = inputs
        tol = 1e-12
        inside = lambda v, r: r[0] - tol <= v <= r[1] + tol  # noqa: E731
        return (
            inside(T_c0, self.T_c0) and inside(T_h0 - T_c0, self.dT_h) and inside(T_l, self.T_l)
            and inside(phi, self.phi) and inside(p_h, self.p_h) and inside(p_c, self.p_c)
        )


@dataclass
class SampleRecord:
    inputs: tuple
    label: float
    split: str = "none"
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class DatasetManifest:
    seed: int
    count: int
    fractions: tuple = (0.70, 0.15, 0.15)
    fixed: dict = field(default_factory=dict)
    fcs: dict = field(default_factory=dict)
    ranges: dict = field(default_factory=dict)
    digest: str = ""
    version: int = FORMAT_VERSION

    def to_text(self) -> str:
        lines = [f"version={self.version}", f"seed={self.seed}", f"count={self.count}",
                 "fractions=" + ",".join(f"{x:.17g}" for x in self.fractions)]
        lines += [f"fixed.{k}={v:.17g}" for k, v in self.fixed.items()]
        lines += [f"fcs.{k}={v}" for k, v in self.fcs.items()]
        lines += [f"ranges.{k}={lo:.17g},{hi:.17g}" for k, (lo, hi) in self.ranges.items()]
        lines.append(f"digest={self.digest}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "DatasetManifest":
        kv = dict(line.split("=", 1) for line in text.splitlines() if line and not line.startswith("#"))
        fixed = {k[6:]: float(v) for k, v in kv.items() if k.startswith("fixed.")}
        fcs = {k[4:]: v for k, v in kv.items() if k.startswith("fcs.")}
        ranges = {k[7:]: tuple(float(x) for x in v.split(",")) for k, v in kv.items() if k.startswith("ranges.")}
        return cls(
            seed=int(kv["seed"]), count=int(kv["count"]),
            fractions=tuple(float(x) for x in kv["fractions"].split(",")),
            fixed=fixed, fcs=fcs, ranges=ranges, digest=kv["digest"], version=int(kv["version"]),
        )


def sample_params(rng: np.random.Generator, ranges: ParamRanges = ParamRanges(), fixed: dict | None = None) -> EngineParams:
    """One uniform draw; ``T_h0`` is drawn conditionally on the drawn ``T_c0``."""
    T_c0 = rng.uniform(*ranges.T_c0)
    T_h0 = T_c0 + rng.uniform(*ranges.dT_h)
    T_l = rng.uniform(*ranges.T_l)
    phi = rng.uniform(*ranges.phi)
    p_h = rng.uniform(*ranges.p_h)
    p_c = rng.uniform(*ranges.p_c)
    return EngineParams(T_c0, T_h0, T_l, phi, p_h, p_c, **(fixed or {}))


def record_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-keyed stream for record ``index``; independent of worker layout."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0, index))))


def _label(job):
    seed, index, ranges, fixed, cfg = job
    params = sample_params(record_rng(seed, index), ranges, fixed)
    try:
        F = cumulants(params, cfg).fano
        status = "ok"
    except QheError as exc:
        F, status = math.nan, f"flagged:{exc.name}"
    return SampleRecord(params.inputs(), F, "none", status)


def assign_splits(records, seed: int, fractions=(0.70, 0.15, 0.15)) -> None:
    """Seeded shuffle of the ok records into train/validation/test, in place."""
    if abs(sum(fractions) - 1.0) > 1e-12 or min(fractions) < 0:
        raise ValueError("split fractions must be non-negative and sum to 1")
    ok = [i for i, rec in enumerate(records) if rec.ok]
    order = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(1,)))).permutation(len(ok))
    n = len(ok)
    n_train = round(fractions[0] * n)
    n_val = round(fractions[1] * n)
    for rank, j in enumerate(order):
        rec = records[ok[j]]
        rec.split = "train" if rank < n_train else "validation" if rank < n_train + n_val else "test"
    for rec in records:
        if not rec.ok:
            rec.split = "none"


def generate(count: int, seed: int, cfg: FcsConfig = FcsConfig(), ranges: ParamRanges = ParamRanges(),
             fractions=(0.70, 0.15, 0.15), fixed: dict | None = None, threads: int = 1):
    """Sample and label ``count`` parameter points; returns ``(records, manifest)``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    fixed = dict(fixed or {})
    jobs = [(seed, i, ranges, fixed, cfg) for i in range(count)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_label, jobs, chunksize=max(1, count // (8 * threads))))
    else:
        records = [_label(job) for job in jobs]
    assign_splits(records, seed, fractions)

    defaults = EngineParams(0.5, 1.5, 0.5, **fixed)
    manifest = DatasetManifest(
        seed=seed, count=count, fractions=tuple(fractions),
        fixed={k: getattr(defaults, k) for k in FIXED_NAMES},
        fcs=dataclasses.asdict(cfg),
        ranges=dataclasses.asdict(ranges),
    )
    manifest.digest = digest_of(records_to_text(records))
    return records, manifest


def records_to_text(records) -> str:
    buf = io.StringIO()
    buf.write(",".join(COLUMNS) + "\n")
    for rec in records:
        nums = ",".join(f"{x:.17g}" for x in (*rec.inputs, rec.label))
        buf.write(f"{nums},{rec.split},{rec.status}\n")
    return buf.getvalue()


def records_from_text(text: str):
    lines = text.splitlines()
    if tuple(lines[0].split(",")) != COLUMNS:
        raise ValueError("unexpected dataset header")
    out = []
    for line in lines[1:]:
        parts = line.split(",")
        vals = [float(x) for x in parts[:7]]
        out.append(SampleRecord(tuple(vals[:6]), vals[6], parts[7], parts[8]))
    return out


def digest_of(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest")


def save_dataset(path, records, manifest: DatasetManifest) -> None:
    text = records_to_text(records)
    manifest.digest = digest_of(text)
    Path(path).write_text(text)
    manifest_path(path).write_text(manifest.to_text())


def load_dataset(path):
    text = Path(path).read_text()
    manifest = DatasetManifest.from_text(manifest_path(path).read_text())
    if digest_of(text) != manifest.digest:
        raise ValueError(f"{path}: content digest does not match its manifest")
    return records_from_text(text), manifest


def split_arrays(records, split: str):
    """``(X, y)`` arrays of the ok records in one split."""
    rows = [rec for rec in records if rec.ok and rec.split == split]
    X = np.array([rec.inputs for rec in rows], dtype=float).reshape(-1, 6)
    y = np.array([rec.label for rec in rows], dtype=float)
    return X, y


@dataclass(frozen=True)
class DistributionStats:
    count: int
    mean: float
    mode: float
    frac_above: float
    frac_below: float
    frac_near: float
    histogram: tuple  # ((bin centre, density), ...)


def distribution_stats(records, bin_width: float = 0.05, near: float = 0.025) -> DistributionStats:
    """Mean, histogram mode and bunched/antibunched/Poissonian fractions.

    Accepts SampleRecord objects or bare Fano values. The three fractions
    are exclusive: ``|F - 1| < near`` counts as Poissonian.
    """
    F = np.array([rec.label for rec in records if rec.ok] if records and isinstance(records[0], SampleRecord)
                 else list(records), dtype=float)
    F = F[np.isfinite(F)]
    if F.size == 0:
        raise EmptyDatasetError("no usable records")
    lo = math.floor(F.min() / bin_width)
    hi = math.floor(F.max() / bin_width) + 1
    edges = np.arange(lo, hi + 1) * bin_width
    # guard against the extreme values falling outside through rounding
    edges[0], edges[-1] = min(edges[0], F.min()), max(edges[-1], F.max())
    counts, edges = np.histogram(F, bins=edges)
    density = counts / (F.size * bin_width)
    centres = 0.5 * (edges[:-1] + edges[1:])
    is_near = np.abs(F - 1) < near
    return DistributionStats(
        count=int(F.size),
        mean=float(F.mean()),
        mode=float(centres[np.argmax(counts)]),
        frac_above=float(np.mean((F > 1) & ~is_near)),
        frac_below=float(np.mean((F < 1) & ~is_near)),
        frac_near=float(np.mean(is_near)),
        histogram=tuple(zip(centres.tolist(), density.tolist())),
    )
