"""Finite-window probability mass functions with a certified tail bound."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from .errors import ParameterError

DEFAULT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TruncatedPmf:
    """A pmf stored on the window ``support_start .. support_start + len(probs) - 1``.

    ``tail_bound`` is an upper bound on the probability mass above the window.
    Two optional decay certificates describe the law beyond the window and are
    propagated by transforms that need them:

    * ``tail_ratio``: for every ``k`` at or past the last window point,
      ``P(k + 1) <= tail_ratio * P(k)`` (geometric envelope, ``< 1``).
    * ``tail_power``: ``P(k) * k**tail_power`` is non-increasing past the last
      window point (polynomial envelope, ``> 1``).
    """

    support_start: int
    probs: np.ndarray
    tail_bound: float = 0.0
    tol: float = DEFAULT_TOL
    meta: dict = field(default_factory=dict)
    tail_ratio: Optional[float] = None
    tail_power: Optional[float] = None

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ParameterError("probs must be a non-empty 1-D vector")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ParameterError("probs must be finite and non-negative")
        if int(self.support_start) != self.support_start or self.support_start < 0:
            raise ParameterError("support_start must be a non-negative integer")
        if not (self.tail_bound >= 0 and math.isfinite(self.tail_bound)):
            raise ParameterError("tail_bound must be finite and non-negative")
        if self.tail_ratio is not None and not 0 <= self.tail_ratio < 1:
            raise ParameterError("tail_ratio must lie in [0, 1)")
        if self.tail_power is not None and not self.tail_power > 0:
            raise ParameterError("tail_power must be positive")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "support_start", int(self.support_start))
        object.__setattr__(self, "tail_bound", float(self.tail_bound))

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.support_start, self.support_start + self.probs.size)

    @property
    def last(self) -> int:
        """Largest support value stored in the window."""
        return self.support_start + self.probs.size - 1

    @property
    def mass(self) -> float:
        return math.fsum(self.probs)

    @property
    def normalization_error(self) -> float:
        return abs(self.mass + self.tail_bound - 1.0)

    def is_normalized(self) -> bool:
        # floor at a few ulps: tol may be far below double resolution
        return self.normalization_error <= max(10 * self.tol, 1e-14)

    def at(self, k) -> np.ndarray | float:
        """P(X = k) for integer ``k`` (scalar or array); zero outside the window."""
        k_arr = np.asarray(k)
        idx = k_arr - self.support_start
        inside = (idx >= 0) & (idx < self.probs.size)
        out = np.where(inside, self.probs[np.clip(idx, 0, self.probs.size - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def padded(self, start: int, stop: int) -> np.ndarray:
        """Window probabilities on ``start .. stop - 1`` with zeros outside."""
        return self.at(np.arange(start, stop))

    def expect(self, f) -> float:
        """Window expectation of ``f`` (vectorised or scalar callable)."""
        return math.fsum(_apply(f, self.support) * self.probs)

    def mean(self) -> float:
        return self.expect(lambda x: x)

    def variance(self) -> float:
        m = self.mean()
        return self.expect(lambda x: (x - m) ** 2)

    def shift(self, offset: int) -> "TruncatedPmf":
        """Law of ``X + offset``."""
        if self.support_start + offset < 0:
            raise ParameterError("shift would move support below zero")
        meta = dict(self.meta, shift=self.meta.get("shift", 0) + offset)
        return replace(self, support_start=self.support_start + offset, meta=meta)

    def trimmed(self) -> "TruncatedPmf":
        """Drop trailing zero masses (e.g. underflow), keeping the tail bound."""
        nz = np.flatnonzero(self.probs)
        if nz.size == 0:
            return self
        end = nz[-1] + 1
        if end == self.probs.size:
            return self
        return replace(self, probs=self.probs[:end], tail_ratio=None, tail_power=None)

    # -- serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "family": self.meta.get("family", "custom"),
            "params": _jsonable(self.meta.get("params", {})),
            "support_start": self.support_start,
            "probs": [float(p) for p in self.probs],
            "tail_bound": self.tail_bound,
            "tol": self.tol,
            "seed": self.meta.get("seed"),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        header = {k: v for k, v in self.to_dict().items() if k != "probs"}
        buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        buf.write("k,prob\n")
        for k, p in zip(self.support, self.probs):
            buf.write(f"{k},{float(p)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_dict(cls, data: dict) -> "TruncatedPmf":
        try:
            meta = {"family": data.get("family", "custom"), "params": data.get("params", {})}
            if data.get("seed") is not None:
                meta["seed"] = data["seed"]
            return cls(
                support_start=int(data["support_start"]),
                probs=np.asarray(data["probs"], dtype=float),
                tail_bound=float(data.get("tail_bound", 0.0)),
                tol=float(data.get("tol", DEFAULT_TOL)),
                meta=meta,
            )
        except (KeyError, TypeError) as exc:
            raise ParameterError(f"malformed pmf document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "TruncatedPmf":
        return cls.from_dict(json.loads(text))


def point_mass(k: int = 0) -> TruncatedPmf:
    return TruncatedPmf(k, np.array([1.0]), 0.0, meta={"family": "point", "params": {"k": k}})


def _apply(f, x: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(f(x), dtype=float)
        if out.shape == x.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([float(f(int(v))) for v in x])


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
