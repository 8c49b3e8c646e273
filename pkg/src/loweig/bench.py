"""Timing grids over the decomposition routes, plus a learner demo.

Cells are timed around the decomposition call only (instance generation and
I/O excluded) with a monotonic clock, run sequentially to avoid interference.
Results go to CSV with per-(algorithm, m) median and 10%/90% quantile
summaries; the normalized column divides wall seconds by m*(n+nx+ny)^2, the
fast path's expected cost, so its curve flattens when the scaling holds.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fast_eigh import (
    LowRankFactor,
    WeightedData,
    dense_fallback,
    fast_eigh,
    svd_route,
)
from .kernels import thin_svd
from .learner import (
    IRREGULAR,
    REGULAR,
    LabeledBatch,
    MetricModel,
    UpdateConfig,
    classify,
    distance,
    update,
)

ALGORITHMS = ("feigh", "svd", "dense")

CSV_HEADER = ["algorithm", "m", "n", "nx", "ny", "repeat", "seconds", "normalized_seconds"]

# Floor for measured wall time; keeps logs and ratios defined on coarse clocks.
_MIN_SECONDS = 1e-9


@dataclass(frozen=True)
class BenchConfig:
    """One grid run: sizes, rank settings, repetition and output policy.

    Rank settings accept a nonnegative int or the token ``"m/3"`` meaning
    floor(m/3) at each grid point. The first repeat is treated as warm-up and
    excluded from summaries whenever repeats >= 3.
    """

    m_grid: tuple[int, ...]
    n: int | str = 1
    nx: int | str = 1
    ny: int | str = 1
    repeats: int = 11
    seed: int = 0
    algorithms: tuple[str, ...] = ("feigh", "svd")
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "m_grid", tuple(int(m) for m in self.m_grid))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if not self.m_grid:
            raise ValueError("m_grid must not be empty")
        if any(b <= a for a, b in zip(self.m_grid, self.m_grid[1:])):
            raise ValueError("m_grid must be strictly ascending")
        if self.m_grid[0] < 1:
            raise ValueError("m_grid entries must be positive")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown or not self.algorithms:
            raise ValueError(f"algorithms must be a nonempty subset of {ALGORITHMS}")
        for setting in (self.n, self.nx, self.ny):
            resolve_rank(setting, self.m_grid[0])  # validates the token early
        for m in self.m_grid:
            total = sum(resolve_rank(s, m) for s in (self.n, self.nx, self.ny))
            if total < 1:
                raise ValueError(f"total rank must be >= 1, got 0 at m={m}")


@dataclass(frozen=True)
class BenchRecord:
    """One timed cell."""

    algorithm: str
    m: int
    n: int
    nx: int
    ny: int
    repeat: int
    seconds: float
    normalized_seconds: float = field(default=0.0)

    def __post_init__(self):
        if self.seconds <= 0.0:
            raise ValueError("seconds must be positive")
        denom = self.m * (self.n + self.nx + self.ny) ** 2
        if denom <= 0:
            raise ValueError("normalization denominator must be positive")
        object.__setattr__(self, "normalized_seconds", self.seconds / denom)


def resolve_rank(setting: int | str, m: int) -> int:
    """Resolve a rank setting (int or the token ``"m/3"``) at one grid point."""
    if isinstance(setting, str):
        if setting.strip() != "m/3":
            raise ValueError(f"unknown rank token {setting!r}; expected an int or 'm/3'")
        return m // 3
    value = int(setting)
    if value < 0:
        raise ValueError(f"rank must be >= 0, got {value}")
    return value


def generate_instance(seed, m: int, n: int, nx: int, ny: int):
    """Deterministic random instance: orthonormalized Gaussian basis,
    symmetrized Gaussian core, Gaussian data blocks, alpha = 1.

    ``seed`` is anything ``numpy.random.default_rng`` accepts.
    """
    if n + nx + ny > m:
        raise ValueError(f"combined rank {n + nx + ny} exceeds dimension {m}")
    rng = np.random.default_rng(seed)
    if n > 0:
        q = thin_svd(rng.standard_normal((m, n))).U
    else:
        q = np.zeros((m, 0))
    g = rng.standard_normal((n, n))
    b = (g + g.T) / 2.0
    x = rng.standard_normal((m, nx))
    y = rng.standard_normal((m, ny))
    return 1.0, LowRankFactor(1.0, q, b), WeightedData(x, y)


def _decompose(algorithm: str, alpha, factor, data):
    if algorithm == "feigh":
        return fast_eigh(alpha, factor, data)
    if algorithm == "svd":
        return svd_route(alpha, data.X)
    return dense_fallback(alpha, factor, data)


def run_grid(cfg: BenchConfig) -> list[BenchRecord]:
    """Time every (algorithm, m, repeat) cell of the grid.

    The svd baseline handles nonnegative weights only, so its instances carry
    the whole combined rank in the positive block (n = ny = 0); records state
    the shapes actually run. Failing cells are reported in the summary file
    with an error tag and the run continues. Returns the successful records
    and, when ``cfg.out`` is set, writes them as CSV plus a quantile summary
    next to it.
    """
    records: list[BenchRecord] = []
    failures: list[tuple[str, int, int, int, int, str]] = []
    # Cell-major order: repeats of one cell run back to back so the allocator
    # and caches warm up, and the discarded first repeat absorbs the cold run.
    for algorithm in cfg.algorithms:
        for m in cfg.m_grid:
            n = resolve_rank(cfg.n, m)
            nx = resolve_rank(cfg.nx, m)
            ny = resolve_rank(cfg.ny, m)
            if algorithm == "svd":
                n, nx, ny = 0, n + nx + ny, 0
            for rep in range(cfg.repeats):
                try:
                    alpha, factor, data = generate_instance(
                        [cfg.seed, m, rep], m, n, nx, ny
                    )
                    start = time.perf_counter()
                    _decompose(algorithm, alpha, factor, data)
                    elapsed = time.perf_counter() - start
                except Exception as exc:  # record the cell failure, keep going
                    failures.append(
                        (algorithm, m, n, nx, ny, f"{type(exc).__name__}: {exc}")
                    )
                    break
                records.append(
                    BenchRecord(algorithm, m, n, nx, ny, rep, max(elapsed, _MIN_SECONDS))
                )
    if cfg.out is not None:
        write_records_csv(cfg.out, records)
        _write_summary(_summary_path(cfg.out), records, failures)
    return records


def write_records_csv(path, records: list[BenchRecord]) -> None:
    rows = sorted(records, key=lambda r: (r.algorithm, r.m, r.repeat))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow(
                [r.algorithm, r.m, r.n, r.nx, r.ny, r.repeat,
                 repr(r.seconds), repr(r.normalized_seconds)]
            )


def read_records_csv(path) -> list[BenchRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(
                BenchRecord(
                    row["algorithm"], int(row["m"]), int(row["n"]), int(row["nx"]),
                    int(row["ny"]), int(row["repeat"]), float(row["seconds"]),
                )
            )
    return records


def _summary_path(out) -> Path:
    p = Path(out)
    suffix = p.suffix if p.suffix else ".csv"
    return p.with_name(p.stem + ".summary" + suffix)


def _grouped_seconds(records: list[BenchRecord]) -> dict[tuple[str, int], list[float]]:
    """Per-(algorithm, m) seconds with the warm-up repeat dropped when possible."""
    cells: dict[tuple[str, int], list[tuple[int, float]]] = {}
    for r in records:
        cells.setdefault((r.algorithm, r.m), []).append((r.repeat, r.seconds))
    out = {}
    for key, pairs in cells.items():
        pairs.sort()
        seconds = [s for _, s in pairs]
        if len(seconds) >= 3:
            seconds = [s for rep, s in pairs if rep != 0]
        out[key] = seconds
    return out


def _write_summary(path, records, failures) -> None:
    grouped = _grouped_seconds(records)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["algorithm", "m", "n", "nx", "ny", "median_seconds",
             "q10_seconds", "q90_seconds", "used_repeats", "error"]
        )
        shapes = {(r.algorithm, r.m): (r.n, r.nx, r.ny) for r in records}
        for (algorithm, m), seconds in sorted(grouped.items()):
            n, nx, ny = shapes[(algorithm, m)]
            q10, med, q90 = np.quantile(seconds, [0.1, 0.5, 0.9])
            writer.writerow(
                [algorithm, m, n, nx, ny, repr(float(med)), repr(float(q10)),
                 repr(float(q90)), len(seconds), ""]
            )
        for algorithm, m, n, nx, ny, message in failures:
            writer.writerow([algorithm, m, n, nx, ny, "", "", "", 0, message])


def _median_curve(records: list[BenchRecord], algorithm: str) -> list[tuple[int, float]]:
    grouped = _grouped_seconds([r for r in records if r.algorithm == algorithm])
    return sorted((m, float(np.median(s))) for (_, m), s in grouped.items())


def fit_scaling(records: list[BenchRecord]) -> dict[str, float]:
    """Log-log slope of median seconds vs m over the top half of the grid,
    per algorithm. Requires at least 4 grid points."""
    slopes = {}
    for algorithm in sorted({r.algorithm for r in records}):
        curve = _median_curve(records, algorithm)
        if len(curve) < 4:
            raise ValueError(
                f"need at least 4 grid points for {algorithm}, got {len(curve)}"
            )
        top = curve[len(curve) // 2:]
        lx = np.log([m for m, _ in top])
        ly = np.log([s for _, s in top])
        slopes[algorithm] = float(np.polyfit(lx, ly, 1)[0])
    return slopes


def normalized_flatness(records: list[BenchRecord]) -> dict[str, float]:
    """Last/first ratio of the normalized median curve over the top half of
    the grid; near 1 when the m*(n+nx+ny)^2 scaling holds."""
    ratios = {}
    for algorithm in sorted({r.algorithm for r in records}):
        denom = {r.m: r.m * (r.n + r.nx + r.ny) ** 2
                 for r in records if r.algorithm == algorithm}
        curve = _median_curve(records, algorithm)
        if len(curve) < 2:
            raise ValueError(f"need at least 2 grid points for {algorithm}")
        top = [(m, s / denom[m]) for m, s in curve[len(curve) // 2:]]
        ratios[algorithm] = top[-1][1] / top[0][1]
    return ratios


def demo_learner(
    m: int,
    rank_cap: int,
    iters: int,
    seed: int,
    out: str | None = None,
    decay: float = 0.9,
    gain: float = 0.25,
    batch_per_class: int = 4,
) -> dict:
    """Train the streaming metric on a seeded two-cluster stream.

    Regular points carry weight +1 along one latent direction, irregular
    points weight -1 along an orthogonal one; both classes have comparable
    Euclidean norms so the untrained metric cannot separate them. After
    training, the threshold is the median training distance and accuracy is
    measured on a fresh test draw. The learning constants are experimental
    knobs with no canonical values; tune them per scenario.
    """
    rng = np.random.default_rng(seed)
    basis = thin_svd(rng.standard_normal((m, 2))).U
    reg_dir, irr_dir = basis[:, 0], basis[:, 1]

    def draw(count: int, direction: np.ndarray) -> np.ndarray:
        # Amplitudes bounded away from zero: a zero-amplitude "irregular"
        # point is indistinguishable from regular noise for any metric.
        signal = rng.uniform(0.7, 2.7, count) * rng.choice((-1.0, 1.0), count)
        noise = 0.1 * rng.standard_normal((count, m))
        return signal[:, None] * direction + noise

    # Fixed probe sets: per-iteration curves track the model, not the draw.
    probe_reg = draw(20, reg_dir)
    probe_irr = draw(20, irr_dir)

    model = MetricModel.identity(m, 1.0)
    cfg = UpdateConfig(decay=decay, gain=gain, rank_cap=rank_cap)
    training: list[np.ndarray] = []
    iterations = []
    for step in range(iters):
        reg = draw(batch_per_class, reg_dir)
        irr = draw(batch_per_class, irr_dir)
        vectors = np.vstack([reg, irr])
        weights = np.concatenate([np.ones(batch_per_class), -np.ones(batch_per_class)])
        model = update(model, LabeledBatch(vectors, weights), cfg)
        training.extend(vectors)
        iterations.append(
            {
                "step": step,
                "regular_distance": float(np.median([distance(model, x) for x in probe_reg])),
                "irregular_distance": float(np.median([distance(model, x) for x in probe_irr])),
            }
        )

    ef = model.eigen
    report = {
        "m": m,
        "rank_cap": rank_cap,
        "iters": iters,
        "seed": seed,
        "decay": decay,
        "gain": gain,
        "model": {
            "alpha": float(ef.alpha),
            "rank": int(ef.rank),
            "min_eigenvalue": float(ef.full_spectrum()[-1]),
            "max_eigenvalue": float(ef.full_spectrum()[0]),
        },
        "iterations": iterations,
        "threshold": None,
        "accuracy": None,
    }
    if iters > 0:
        threshold = float(np.median([distance(model, x) for x in training]))
        test_reg = draw(100, reg_dir)
        test_irr = draw(100, irr_dir)
        hits = sum(classify(model, x, threshold) == REGULAR for x in test_reg)
        hits += sum(classify(model, x, threshold) == IRREGULAR for x in test_irr)
        report["threshold"] = threshold
        report["accuracy"] = hits / 200.0
    if out is not None:
        Path(out).write_text(json.dumps(report, indent=2))
    return report
