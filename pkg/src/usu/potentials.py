"""Score potentials: strictly positive, strictly increasing maps of [0, 1] scores.

Only the tensor potential ``exp((s - c) / eps)`` gives a weight ratio for a
score gap that does not depend on where the gap sits; power-law and log-odds
potentials are provided as the contrasting families.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

FAMILIES = ("tensor", "power_law", "log_odds")

DEFAULT_TEMPERATURE = 0.1


@dataclass(frozen=True)
class PotentialSpec:
    """Potential family plus its parameter.

    ``temperature`` is used by the tensor family, ``exponent`` by power-law
    and log-odds.  ``center`` is the tensor shift; it cancels in every
    normalized weight and exists only so that can be checked.
    """

    family: str = "tensor"
    temperature: float = DEFAULT_TEMPERATURE
    exponent: float = 1.0
    center: float = 0.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown potential family {self.family!r}; choose from {FAMILIES}")
        if self.family == "tensor" and not self.temperature > 0:
            raise ValueError("tensor temperature must be > 0")
        if self.family != "tensor" and not self.exponent > 0:
            raise ValueError("exponent must be > 0")


TENSOR = PotentialSpec()


def _check_domain(spec, s):
    s = np.asarray(s, dtype=np.float64)
    if not np.all(np.isfinite(s)):
        raise DomainError("scores must be finite")
    if spec.family == "tensor":
        ok = (s >= 0.0) & (s <= 1.0)
        domain = "[0, 1]"
    elif spec.family == "power_law":
        ok = (s > 0.0) & (s <= 1.0)
        domain = "(0, 1]"
    else:
        ok = (s > 0.0) & (s < 1.0)
        domain = "(0, 1)"
    if not np.all(ok):
        bad = s[~ok].ravel()[0]
        raise DomainError(f"{spec.family} potential undefined at s={bad!r}; domain is {domain}")
    return s


def log_potential(spec, s):
    """Natural log of the potential, evaluated elementwise."""
    s = _check_domain(spec, s)
    if spec.family == "tensor":
        return (s - spec.center) / spec.temperature
    if spec.family == "power_law":
        return spec.exponent * np.log(s)
    return spec.exponent * (np.log(s) - np.log1p(-s))


def evaluate(spec, s):
    """phi(s) for the given family; raises DomainError outside its domain."""
    return np.exp(log_potential(spec, s))


def conditioning_ratio(spec, s, delta):
    """phi(s + delta) / phi(s): the multiplicative effect of a score gap."""
    s = np.asarray(s, dtype=np.float64)
    return evaluate(spec, s + delta) / evaluate(spec, s)
