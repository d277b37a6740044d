"""Sample plans, per-point aggregation and the JSON report format."""

from __future__ import annotations

import json
import math
import os
from collections.abc import Callable, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dsl import Expr, as_expr, eval_float
from .errors import CurvlabError, EvaluationError

DEFAULT_POINTS = 64
DEFAULT_SEED = 42
DEFAULT_TOL = 1e-8
EXCLUSION_RADIUS = 1e-3


class NoValidPointsError(CurvlabError):
    pass


@dataclass(frozen=True)
class SamplePlan:
    """Deterministic uniform sampling of a coordinate box.

    ``exclusions`` are expressions whose near-zero set (``|value| < 1e-3``) is
    rejected, as are points where any of them fails to evaluate.
    """

    boxes: Mapping[str, tuple[float, float]]
    n_points: int = DEFAULT_POINTS
    seed: int = DEFAULT_SEED
    exclusions: tuple[Expr, ...] = ()
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        boxes = {}
        for k, (lo, hi) in dict(self.boxes).items():
            if not lo <= hi:
                raise ValueError(f"empty interval for {k}: [{lo}, {hi}]")
            boxes[k] = (float(lo), float(hi))
        object.__setattr__(self, "boxes", boxes)
        object.__setattr__(self, "exclusions", tuple(as_expr(e) for e in self.exclusions))
        if self.n_points < 1:
            raise ValueError("n_points must be positive")

    def points(self, coords: Sequence[str]) -> np.ndarray:
        """Points in the order of ``coords``; unlisted coordinates sit at 0."""
        unknown = set(self.boxes) - set(coords)
        if unknown:
            raise ValueError(f"plan boxes for unknown coordinates {sorted(unknown)}")
        rng = np.random.default_rng(self.seed)
        lo = np.array([self.boxes.get(c, (0.0, 0.0))[0] for c in coords])
        hi = np.array([self.boxes.get(c, (0.0, 0.0))[1] for c in coords])
        out = []
        attempts = 0
        while len(out) < self.n_points and attempts < 200 * self.n_points:
            attempts += 1
            p = lo + (hi - lo) * rng.random(len(coords))
            if self._excluded(coords, p):
                continue
            out.append(p)
        if not out:
            raise NoValidPointsError("sample plan produced no admissible points")
        return np.array(out)

    def _excluded(self, coords, p) -> bool:
        values = dict(zip(coords, p))
        for e in self.exclusions:
            try:
                v = eval_float(e, values, self.params)
            except (EvaluationError, ValueError, ZeroDivisionError, OverflowError):
                return True
            if not math.isfinite(v) or abs(v) < EXCLUSION_RADIUS:
                return True
        return False

    def describe(self) -> str:
        box = ", ".join(f"{k}∈[{a:g},{b:g}]" for k, (a, b) in self.boxes.items())
        return f"plan: points={self.n_points} seed={self.seed} {box}"

    @classmethod
    def from_mapping(cls, d: Mapping[str, str], params=None) -> SamplePlan:
        """Build from a ``[plan]`` file section: ``x = lo hi``, ``points``, ``seed``, ``exclude``."""
        boxes = {}
        kwargs = {}
        excl = []
        for k, v in d.items():
            if k == "points":
                kwargs["n_points"] = int(v)
            elif k == "seed":
                kwargs["seed"] = int(v)
            elif k.startswith("exclude"):
                excl.append(as_expr(v))
            else:
                lo, hi = v.split()
                boxes[k] = (float(eval_float(as_expr(lo), {}, params)), float(eval_float(as_expr(hi), {}, params)))
        return cls(boxes, exclusions=tuple(excl), params=dict(params or {}), **kwargs)

    def to_mapping(self) -> dict[str, str]:
        d = {k: f"{a!r} {b!r}" for k, (a, b) in self.boxes.items()}
        d["points"] = str(self.n_points)
        d["seed"] = str(self.seed)
        for i, e in enumerate(self.exclusions):
            d[f"exclude{i + 1}" if i else "exclude"] = str(e)
        return d


def thread_count() -> int:
    try:
        return max(0, int(os.environ.get("CURVLAB_THREADS", "0")))
    except ValueError:
        return 0


def map_points(fn: Callable, points: Iterable) -> list:
    """Apply ``fn`` to each point, in order, optionally on a thread pool."""
    points = list(points)
    n = thread_count()
    if n <= 1:
        return [fn(p) for p in points]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, points))


@dataclass
class Report:
    case: str
    check: str
    tol: float
    per_point: list[float]
    n_points: int
    lam: float | None = None
    lambda_spread: float | None = None
    notes: list[str] = field(default_factory=list)
    skipped: int = 0
    extra: dict = field(default_factory=dict)
    # set when the check fails for a reason other than the residual size
    failure: str | None = None

    @property
    def max_abs_residual(self) -> float:
        return max(self.per_point) if self.per_point else math.inf

    @property
    def mean_abs_residual(self) -> float:
        return float(np.mean(self.per_point)) if self.per_point else math.inf

    @property
    def passed(self) -> bool:
        return bool(self.per_point) and self.failure is None and self.max_abs_residual <= self.tol

    @property
    def verdict(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "check": self.check,
            "lambda": self.lam,
            "lambda_spread": self.lambda_spread,
            "n_points": self.n_points,
            "max_abs_residual": _finite_or_none(self.max_abs_residual),
            "mean_abs_residual": _finite_or_none(self.mean_abs_residual),
            "tol": self.tol,
            "verdict": self.verdict,
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    def to_text(self) -> str:
        head = f"{self.case}: {self.check} -> {self.verdict.upper()}"
        lines = [
            head,
            f"  max|residual| = {self.max_abs_residual:.3e}  mean = {self.mean_abs_residual:.3e}  tol = {self.tol:g}",
        ]
        if self.lam is not None:
            spread = "" if self.lambda_spread is None else f"  spread = {self.lambda_spread:.3e}"
            lines.append(f"  lambda = {self.lam!r}{spread}")
        lines.append(f"  points = {self.n_points}")
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)


def _finite_or_none(x: float):
    return float(x) if math.isfinite(x) else None
