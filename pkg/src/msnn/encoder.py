"""Poisson rate coding of binary/grey patterns and presentation schedules."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PATTERN_NAMES = ("square", "cross", "diamond", "triangle")


class PatternFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Pattern:
    width: int
    height: int
    intensities: np.ndarray = field(repr=False)
    label: int = 0
    name: str = ""

    def __post_init__(self):
        arr = np.asarray(self.intensities, dtype=float).reshape(-1)
        if arr.size != self.width * self.height:
            raise PatternFormatError(
                f"{arr.size} intensities for a {self.width}x{self.height} pattern")
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise PatternFormatError("intensities must lie in [0, 1]")
        object.__setattr__(self, "intensities", arr)

    @property
    def size(self) -> int:
        return self.width * self.height

    @property
    def support(self) -> np.ndarray:
        return self.intensities > 0

    def grid(self) -> np.ndarray:
        return self.intensities.reshape(self.height, self.width)


@dataclass(frozen=True)
class PresentationSchedule:
    stim_duration: float
    gap_duration: float
    sequence: tuple[int, ...]

    def __post_init__(self):
        if self.stim_duration <= 0:
            raise ValueError("stim_duration must be positive")
        if self.gap_duration < 0:
            raise ValueError("gap_duration must be non-negative")

    def __len__(self):
        return len(self.sequence)

    @property
    def slot_duration(self) -> float:
        return self.stim_duration + self.gap_duration

    def window(self, index: int) -> tuple[float, float, float]:
        """(start, stimulus end, slot end) of presentation ``index``, relative to schedule start."""
        t0 = index * self.slot_duration
        return t0, t0 + self.stim_duration, t0 + self.slot_duration


def _stroke(mask_fn, size):
    c = (size - 1) / 2
    yy, xx = np.mgrid[0:size, 0:size]
    return mask_fn(xx - c, yy - c).astype(float)


def _seg_dist(px, py, ax, ay, bx, by):
    vx, vy = bx - ax, by - ay
    t = np.clip(((px - ax) * vx + (py - ay) * vy) / (vx * vx + vy * vy), 0, 1)
    return np.hypot(px - ax - t * vx, py - ay - t * vy)


def builtin_patterns(size: int = 32) -> list[Pattern]:
    """Outline glyphs: square, cross (X), diamond, triangle.

    Shapes share a common radius so every pair touches somewhere (square
    corners lie on the X, diamond vertices on the square sides, the triangle
    apex on the diamond's top vertex and its base on the square's bottom).
    """
    if size < 8:
        raise ValueError("pattern size must be at least 8")
    r = 0.4 * size
    half = max(1.0, size / 16) / 2 + 0.01

    def square(x, y):
        m = np.maximum(abs(x), abs(y))
        return abs(m - r) <= half

    def cross(x, y):
        return (abs(abs(x) - abs(y)) <= max(half * np.sqrt(2), 1.0)) & (np.maximum(abs(x), abs(y)) <= r + half)

    def diamond(x, y):
        return abs(abs(x) + abs(y) - r) <= half * np.sqrt(2)

    def triangle(x, y):
        d = np.minimum.reduce([
            _seg_dist(x, y, 0, -r, -r, r),
            _seg_dist(x, y, 0, -r, r, r),
            _seg_dist(x, y, -r, r, r, r),
        ])
        return d <= half

    shapes = [square, cross, diamond, triangle]
    return [Pattern(size, size, _stroke(fn, size), label=i, name=PATTERN_NAMES[i])
            for i, fn in enumerate(shapes)]


def load_pattern(path: str | Path, label: int = 0) -> Pattern:
    """Read a pattern file.

    First line ``<width> <height>``, then ``height`` rows of either ``width``
    whitespace-separated values in [0, 1] or a glyph row of ``.``/``#``.
    """
    path = Path(path)
    try:
        lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise PatternFormatError(f"cannot read pattern file {path}: {exc}") from exc
    if not lines:
        raise PatternFormatError(f"{path}: empty pattern file")
    try:
        width, height = (int(tok) for tok in lines[0].split())
    except ValueError as exc:
        raise PatternFormatError(f"{path}: header must be '<width> <height>'") from exc
    rows = lines[1:]
    if len(rows) != height:
        raise PatternFormatError(f"{path}: expected {height} rows, found {len(rows)}")
    values = []
    for n, row in enumerate(rows, start=2):
        compact = row.replace(" ", "")
        if compact and set(compact) <= {".", "#"}:
            vals = [1.0 if ch == "#" else 0.0 for ch in compact]
        else:
            try:
                vals = [float(tok) for tok in row.split()]
            except ValueError as exc:
                raise PatternFormatError(f"{path}:{n}: unparseable row") from exc
        if len(vals) != width:
            raise PatternFormatError(f"{path}:{n}: expected {width} values, found {len(vals)}")
        values.extend(vals)
    return Pattern(width, height, np.array(values), label=label, name=path.stem)


def save_pattern(pattern: Pattern, path: str | Path) -> None:
    rows = [" ".join(f"{v:g}" for v in row) for row in pattern.grid()]
    Path(path).write_text(f"{pattern.width} {pattern.height}\n" + "\n".join(rows) + "\n")


def stream_rng(seed: int, *counter: int) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, *counter)``; independent of call order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *counter])))


def _check_rate(rate_max: float, dt: float) -> None:
    if rate_max * dt > 0.1:
        raise ValueError(
            f"rate_max*dt={rate_max * dt:g} > 0.1; the per-step Bernoulli approximation breaks down")


def encode_step(pattern: Pattern, rate_max: float, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Indices of the pixels that spike during one step."""
    _check_rate(rate_max, dt)
    p = pattern.intensities * (rate_max * dt)
    return np.flatnonzero(rng.random(pattern.size) < p)


def encode_window(pattern: Pattern, rate_max: float, dt: float, n_steps: int,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Spike raster for ``n_steps`` steps as (step, pixel) arrays sorted by step then pixel.

    Same per-step Bernoulli process as :func:`encode_step`, sampled through
    geometric inter-spike gaps so cost scales with the spike count.
    """
    _check_rate(rate_max, dt)
    steps, pixels = [], []
    for j in np.flatnonzero(pattern.intensities > 0):
        p = pattern.intensities[j] * rate_max * dt
        expected = n_steps * p
        k = int(expected + 6 * np.sqrt(expected) + 10)
        t = np.cumsum(rng.geometric(p, size=k)) - 1
        while t[-1] < n_steps:
            t = np.concatenate([t, t[-1] + np.cumsum(rng.geometric(p, size=k))])
        t = t[t < n_steps]
        steps.append(t)
        pixels.append(np.full(t.size, j))
    if not steps:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    steps = np.concatenate(steps).astype(np.int64)
    pixels = np.concatenate(pixels).astype(np.int64)
    order = np.lexsort((pixels, steps))
    return steps[order], pixels[order]


def build_schedule(patterns: list[Pattern], epochs: int, order: str = "fixed",
                   rng: np.random.Generator | None = None,
                   stim_duration: float = 35e-6, gap_duration: float = 15e-6) -> PresentationSchedule:
    if not patterns:
        raise ValueError("need at least one pattern")
    if order not in ("fixed", "shuffled"):
        raise ValueError(f"unknown order {order!r}")
    base = list(range(len(patterns)))
    seq = []
    for _ in range(epochs):
        if order == "shuffled":
            if rng is None:
                raise ValueError("shuffled order needs an rng")
            seq.extend(int(i) for i in rng.permutation(base))
        else:
            seq.extend(base)
    return PresentationSchedule(stim_duration, gap_duration, tuple(seq))
