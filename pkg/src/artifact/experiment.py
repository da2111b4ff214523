"""Noise sweeps over the Bell-pair protocol: configs, CSV rows, Wilson
intervals, worker pools and the pseudo-threshold estimate."""

from __future__ import annotations

import csv
import io
import json
import math
import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.stats import binomtest

from .noise import NoiseSpec
from .protocol import VARIANTS, BellArtifacts, ProtocolConfig, build_c_bell
from .sim import WORD, TrialResult, reference_record, run_trials

NOISE_KINDS = ("none", "iid_depolarizing", "iid_xz", "iid_z", "thermal")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    R: tuple[int, ...] = (8,)
    L: tuple[int, ...] = (0, 1)
    p: tuple[float, ...] = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2)
    trials: int = 2000
    seed: int = 0
    variant: str = "bell_strip"
    noise: str = "iid_depolarizing"
    out: str = "sweep.csv"
    workers: int = 1
    timing: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if any(not 0.0 <= p <= 1.0 for p in self.p):
            raise ConfigError("p values must lie in [0, 1]")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}")
        if self.noise not in NOISE_KINDS:
            raise ConfigError(f"noise must be one of {NOISE_KINDS}")
        if any(r < 3 for r in self.R) or any(l < 0 for l in self.L):
            raise ConfigError("R must be >= 3 and L >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if not (self.R and self.L and self.p):
            raise ConfigError("R, L and p need at least one value each")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        kw = dict(d)
        for k in ("R", "L", "p"):
            if k in kw:
                v = kw[k]
                kw[k] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        try:
            kw = {k: _coerce(k, v) for k, v in kw.items()}
            return cls(**kw)
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e)) from e

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "ExperimentConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)


def _coerce(k: str, v):
    if k == "R" or k == "L":
        return tuple(int(x) for x in v)
    if k == "p":
        return tuple(float(x) for x in v)
    if k in ("trials", "seed", "workers"):
        if isinstance(v, bool) or int(v) != v:
            raise ConfigError(f"{k} must be an integer")
        return int(v)
    if k == "timing":
        return bool(v)
    return v


def noise_spec(kind: str, p: float) -> NoiseSpec:
    if kind == "iid_xz":
        return NoiseSpec(kind, p_x=p, p_z=p)
    if kind == "none":
        return NoiseSpec()
    return NoiseSpec(kind, p=p)


def wilson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class SweepRow:
    R: int
    L: int
    p: float
    trials: int
    successes: int
    success_rate: float
    wilson_lo: float
    wilson_hi: float
    mean_fault_count: float
    wall_time: float

    @classmethod
    def from_results(cls, R: int, L: int, p: float, res: list[TrialResult], wall: float) -> "SweepRow":
        n = len(res)
        k = sum(r.success for r in res)
        lo, hi = wilson(k, n)
        return cls(R, L, p, n, k, k / n, lo, hi, sum(r.faults for r in res) / n, wall)


CSV_FIELDS = tuple(f.name for f in fields(SweepRow))


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def rows_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def read_csv(text: str) -> list[SweepRow]:
    rows = []
    for d in csv.DictReader(io.StringIO(text)):
        rows.append(SweepRow(int(d["R"]), int(d["L"]), float(d["p"]), int(d["trials"]), int(d["successes"]),
                             *(float(d[f]) for f in CSV_FIELDS[5:])))
    return rows


# ---------------------------------------------------------------------------
# parallel execution

_ARTS: dict[tuple, BellArtifacts] = {}


def artifacts(variant: str, R: int, L: int) -> BellArtifacts:
    key = (variant, R, L)
    if key not in _ARTS:
        art = build_c_bell(ProtocolConfig(R=R, L=L, variant=variant))
        reference_record(art)
        _ARTS[key] = art
    return _ARTS[key]


def _chunk_job(args) -> list[TrialResult]:
    key, kind, p, seed, start, count = args
    return run_trials(_ARTS[key], noise_spec(kind, p), seed, start, count)


def chunks(trials: int, workers: int, word: int = WORD) -> list[tuple[int, int]]:
    """Word-aligned (start, count) pieces; results never depend on the split."""
    words = -(-trials // word)
    per = max(1, -(-words // (4 * workers)))
    out = []
    for w in range(0, words, per):
        s = w * word
        out.append((s, min(trials, s + per * word) - s))
    return out


def run_point(cfg: ExperimentConfig, R: int, L: int, p: float, pool=None) -> SweepRow:
    key = (cfg.variant, R, L)
    artifacts(*key)
    t0 = time.perf_counter()
    jobs = [(key, cfg.noise, p, cfg.seed, s, n) for s, n in chunks(cfg.trials, cfg.workers)]
    parts = pool.map(_chunk_job, jobs) if pool is not None else map(_chunk_job, jobs)
    res = [r for part in parts for r in part]
    wall = time.perf_counter() - t0 if cfg.timing else 0.0
    return SweepRow.from_results(R, L, p, res, wall)


def run_sweep(cfg: ExperimentConfig, progress=None) -> list[SweepRow]:
    # artifacts and reference records are built before any fork, so workers share them
    for R in cfg.R:
        for L in cfg.L:
            artifacts(cfg.variant, R, L)
    rows = []
    pool = None
    if cfg.workers > 1:
        pool = ProcessPoolExecutor(cfg.workers, mp_context=mp.get_context("fork"))
    try:
        for R in cfg.R:
            for L in cfg.L:
                for p in cfg.p:
                    row = run_point(cfg, R, L, p, pool)
                    rows.append(row)
                    if progress:
                        progress(row)
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


# ---------------------------------------------------------------------------
# analysis


def crossing_estimate(ps, low_level, high_level) -> float | None:
    """Noise strength where the protected curve crosses the baseline.

    Linear interpolation of the rate difference in log p between the first
    pair of neighbouring grid points where it changes sign (protected above
    the baseline at the smaller p).  None when the curves do not cross.
    """
    order = np.argsort(ps)
    p = np.asarray(ps, float)[order]
    d = np.asarray(high_level, float)[order] - np.asarray(low_level, float)[order]
    for i in range(len(p) - 1):
        if d[i] > 0 and d[i + 1] <= 0:
            if d[i + 1] == 0:
                return float(p[i + 1])
            a, b = math.log(p[i]), math.log(p[i + 1])
            return float(math.exp(a + (b - a) * d[i] / (d[i] - d[i + 1])))
    return None


def monotone_within_ci(rows: list[SweepRow]) -> bool:
    """Success rate non-increasing in p, allowing overlapping Wilson intervals."""
    rs = sorted(rows, key=lambda r: r.p)
    return all(b.success_rate <= a.success_rate or b.wilson_lo <= a.wilson_hi for a, b in zip(rs, rs[1:]))


@dataclass
class CrossingReport:
    R: int
    estimate: float | None
    monotone: dict = field(default_factory=dict)

    def line(self) -> str:
        est = "none in grid" if self.estimate is None else f"{self.estimate:.3g}"
        mono = " ".join(f"L={L}:{'ok' if ok else 'violated'}" for L, ok in sorted(self.monotone.items()))
        return f"R={self.R} crossing={est} monotone {mono}"


def crossing_reports(rows: list[SweepRow]) -> list[CrossingReport]:
    out = []
    for R in sorted({r.R for r in rows}):
        by_L: dict[int, list[SweepRow]] = {}
        for r in rows:
            if r.R == R:
                by_L.setdefault(r.L, []).append(r)
        est = None
        Ls = sorted(by_L)
        if len(Ls) >= 2:
            lo, hi = sorted(by_L[Ls[0]], key=lambda r: r.p), sorted(by_L[Ls[-1]], key=lambda r: r.p)
            if [r.p for r in lo] == [r.p for r in hi]:
                est = crossing_estimate([r.p for r in lo], [r.success_rate for r in lo], [r.success_rate for r in hi])
        out.append(CrossingReport(R, est, {L: monotone_within_ci(v) for L, v in by_L.items()}))
    return out


def config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
