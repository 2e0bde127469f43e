#!/usr/bin/env python3
"""
Trigonometric Basis and Weight Sequences
========================================

Real trigonometric basis on [0, 1] and the weight sequences built on it:
- Basis evaluation (pointwise and as a design matrix)
- Weight sequences (Sobolev, polynomial decay, exponential decay, constant, explicit)
- Weighted norms of coefficient vectors
- Coefficient transform of the s-th weak derivative
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import DimensionError, DomainError

SQRT2 = math.sqrt(2.0)
TWO_PI = 2.0 * math.pi
# Floor for decaying weights; exp(-j^{2a}) underflows to 0.0 for moderate j
MIN_WEIGHT = float(np.finfo(float).tiny)


class WeightKind(Enum):
    """Families of weight sequences"""
    CONSTANT = "constant"
    SOBOLEV = "sobolev"
    POLY_DECAY = "poly"
    EXP_DECAY = "exp"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class WeightSequence:
    """Rule producing w(j) for any index j >= 1

    Values are computed from the formula on demand, so any index up to the
    experiment truncation is valid without storing arrays.
    """
    kind: WeightKind
    param: float = 0.0
    values_list: Tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind == WeightKind.SOBOLEV and self.param < 0:
            raise DomainError(f"Sobolev order p must be nonnegative, got {self.param}")
        if self.kind == WeightKind.POLY_DECAY and self.param <= 0.5:
            raise DomainError(f"PolyDecay requires a > 1/2, got a={self.param}")
        if self.kind == WeightKind.EXP_DECAY and self.param <= 0:
            raise DomainError(f"ExpDecay requires a > 0, got a={self.param}")
        if self.kind == WeightKind.EXPLICIT:
            if not self.values_list:
                raise DomainError("Explicit weights need at least one value")
            if any(not (v > 0 and math.isfinite(v)) for v in self.values_list):
                raise DomainError("Explicit weights must be finite and strictly positive")

    # Constructors

    @classmethod
    def constant(cls) -> "WeightSequence":
        return cls(WeightKind.CONSTANT)

    @classmethod
    def sobolev(cls, p: float) -> "WeightSequence":
        return cls(WeightKind.SOBOLEV, float(p))

    @classmethod
    def poly_decay(cls, a: float) -> "WeightSequence":
        return cls(WeightKind.POLY_DECAY, float(a))

    @classmethod
    def exp_decay(cls, a: float) -> "WeightSequence":
        return cls(WeightKind.EXP_DECAY, float(a))

    @classmethod
    def explicit(cls, values: Sequence[float]) -> "WeightSequence":
        return cls(WeightKind.EXPLICIT, 0.0, tuple(float(v) for v in values))

    def w(self, j: int) -> float:
        """Weight of index j (1-based)"""
        return float(self.values(j)[j - 1])

    def values(self, J: int) -> np.ndarray:
        """Weights w(1), ..., w(J) as an array"""
        if J < 1:
            raise DomainError(f"Index must be >= 1, got {J}")
        j = np.arange(1, J + 1, dtype=float)

        if self.kind == WeightKind.CONSTANT:
            return np.ones(J)

        if self.kind == WeightKind.SOBOLEV:
            out = np.floor(j / 2.0) ** (2.0 * self.param)
            out[0] = 1.0
            return out

        if self.kind == WeightKind.POLY_DECAY:
            out = j ** (-2.0 * self.param)
            out[0] = 1.0
            return out

        if self.kind == WeightKind.EXP_DECAY:
            out = np.maximum(np.exp(-(j ** (2.0 * self.param))), MIN_WEIGHT)
            out[0] = 1.0
            return out

        if J > len(self.values_list):
            raise DimensionError(
                f"Explicit weights defined for {len(self.values_list)} indices, requested {J}")
        return np.asarray(self.values_list[:J], dtype=float)

    def describe(self) -> str:
        if self.kind == WeightKind.CONSTANT:
            return "constant"
        if self.kind == WeightKind.EXPLICIT:
            return f"explicit[{len(self.values_list)}]"
        return f"{self.kind.value}({self.param:g})"


@dataclass(frozen=True)
class CoefficientVector:
    """Function represented by its first J coordinates in the trigonometric basis"""
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float).ravel()
        if arr.size < 1:
            raise DimensionError("Coefficient vector needs truncation J >= 1")
        if not np.all(np.isfinite(arr)):
            raise DomainError("Coefficient vector contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def truncation(self) -> int:
        return int(self.coeffs.size)

    @classmethod
    def zeros(cls, J: int) -> "CoefficientVector":
        return cls(np.zeros(J))

    @classmethod
    def unit(cls, j: int, J: int) -> "CoefficientVector":
        """Unit vector e_j (1-based index)"""
        if not 1 <= j <= J:
            raise DimensionError(f"Unit index {j} outside 1..{J}")
        arr = np.zeros(J)
        arr[j - 1] = 1.0
        return cls(arr)

    def __sub__(self, other: "CoefficientVector") -> "CoefficientVector":
        _check_same_truncation(self, other)
        return CoefficientVector(self.coeffs - other.coeffs)

    def __add__(self, other: "CoefficientVector") -> "CoefficientVector":
        _check_same_truncation(self, other)
        return CoefficientVector(self.coeffs + other.coeffs)

    def to_list(self):
        return self.coeffs.tolist()


def _check_same_truncation(a: CoefficientVector, b: CoefficientVector):
    if a.truncation != b.truncation:
        raise DimensionError(f"Truncation mismatch: {a.truncation} vs {b.truncation}")


def eval_basis(j: int, t: float) -> float:
    """Evaluate psi_j(t) of the real trigonometric basis

    psi_1 = 1, psi_2k = sqrt(2) cos(2 pi k t), psi_2k+1 = sqrt(2) sin(2 pi k t)
    """
    if j < 1:
        raise DomainError(f"Basis index must be >= 1, got {j}")
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"Basis argument must lie in [0, 1], got {t}")
    if j == 1:
        return 1.0
    k = j // 2
    if j % 2 == 0:
        return SQRT2 * math.cos(TWO_PI * k * t)
    return SQRT2 * math.sin(TWO_PI * k * t)


def basis_matrix(t: Union[Sequence[float], np.ndarray], J: int) -> np.ndarray:
    """Design matrix B[i, j-1] = psi_j(t_i) for j = 1..J"""
    t = np.asarray(t, dtype=float).ravel()
    if J < 1:
        raise DomainError(f"Truncation must be >= 1, got {J}")
    if np.any((t < 0.0) | (t > 1.0)):
        raise DomainError("Basis arguments must lie in [0, 1]")

    out = np.empty((t.size, J))
    out[:, 0] = 1.0
    if J > 1:
        j = np.arange(2, J + 1)
        k = j // 2
        phase = TWO_PI * np.outer(t, k)
        even = (j % 2 == 0)
        out[:, 1:][:, even] = SQRT2 * np.cos(phase[:, even])
        out[:, 1:][:, ~even] = SQRT2 * np.sin(phase[:, ~even])
    return out


def evaluate_function(f: CoefficientVector, t: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    """Values of the basis expansion of f at the points t"""
    return basis_matrix(t, f.truncation) @ f.coeffs


def weight(seq: WeightSequence, j: int) -> float:
    """Weight w(j) of a sequence"""
    if j < 1:
        raise DomainError(f"Weight index must be >= 1, got {j}")
    return seq.w(j)


def weighted_norm_sq(f: CoefficientVector, seq: WeightSequence) -> float:
    """sum_j w(j) [f]_j^2 over the truncation of f"""
    w = seq.values(f.truncation)
    return float(np.sum(w * f.coeffs ** 2))


def _derivative_step(c: np.ndarray) -> np.ndarray:
    # One derivative: pair (c, d) of frequency k maps to (2 pi k d, -2 pi k c).
    # A final unpaired cosine has its sine partner beyond the truncation.
    J = c.size
    out = np.zeros(J)
    for cos_idx in range(1, J, 2):
        k = (cos_idx + 1) // 2
        scale = TWO_PI * k
        sin_idx = cos_idx + 1
        d = c[sin_idx] if sin_idx < J else 0.0
        out[cos_idx] = scale * d
        if sin_idx < J:
            out[sin_idx] = -scale * c[cos_idx]
    return out


def derivative_transform(f: CoefficientVector, s: int) -> CoefficientVector:
    """Coefficients of the s-th weak derivative in the same basis"""
    if isinstance(s, bool) or int(s) != s:
        raise DomainError(f"Derivative order must be an integer, got {s!r}")
    s = int(s)
    if s < 0:
        raise DomainError(f"Derivative order must be nonnegative, got {s}")

    coeffs = np.array(f.coeffs)
    for _ in range(s):
        coeffs = _derivative_step(coeffs)
    return CoefficientVector(coeffs)


def check_regularity(b: WeightSequence, omega: WeightSequence, upsilon: WeightSequence,
                     J: int) -> list:
    """List violations of the basic regularity assumption on indices <= J

    b and b/omega nondecreasing, upsilon and upsilon^2/omega nonincreasing,
    all sequences starting at 1.
    """
    bv, wv, uv = b.values(J), omega.values(J), upsilon.values(J)
    problems = []
    for name, vals in (("b", bv), ("omega", wv), ("upsilon", uv)):
        if not math.isclose(vals[0], 1.0):
            problems.append(f"{name}_1 = {vals[0]:g} (expected 1)")
    positive = uv > 0
    if np.any(np.diff(bv) < 0):
        problems.append("b is not nondecreasing")
    if np.any(np.diff(bv / wv) < -1e-12 * (bv / wv)[1:]):
        problems.append("b/omega is not nondecreasing")
    if np.any(np.diff(uv) > 0):
        problems.append("upsilon is not nonincreasing")
    ratio = (uv ** 2 / wv)[positive]
    if np.any(np.diff(ratio) > 1e-12 * ratio[:-1]):
        problems.append("upsilon^2/omega is not nonincreasing")
    return problems
