"""Uniform handles over every upsampling method.

A method is called as ``method(coarse, segments, neighbourhoods)`` and returns
an ``(H, W)`` grid.  Interpolation methods need a block partition (its
``coarse_shape`` fixes the coarse grid layout) and ignore ``segments``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from .interp import KERNELS, KernelSpec, interp_upsample
from .iwmr import DEFAULT_LAMBDA_TEMPERATURE, iwmr_upsample
from .potentials import PotentialSpec
from .redistribute import usu_upsample

METHODS = ("usu", "iwmr") + KERNELS


@dataclass(frozen=True)
class Method:
    name: str
    fn: object
    score_aware: bool

    def __call__(self, coarse, segments, neighbourhoods):
        return self.fn(coarse, segments, neighbourhoods)


def _interp(kernel, coarse, segments, neighbourhoods):
    shape = neighbourhoods.coarse_shape
    if shape is None:
        raise ValueError("interpolation needs a block neighbourhood system")
    coarse = np.asarray(coarse, dtype=np.float64).reshape(shape)
    return interp_upsample(coarse, *neighbourhoods.shape, kernel)


def get_method(name, epsilon=0.1, epsilon_lambda=DEFAULT_LAMBDA_TEMPERATURE,
               alignment="half-pixel-centers"):
    """Look up a method by name with its parameters bound."""
    spec = PotentialSpec("tensor", temperature=epsilon)
    if name == "usu":
        return Method(name, partial(_usu, spec=spec), True)
    if name == "iwmr":
        return Method(name, partial(_iwmr, spec=spec, lam=epsilon_lambda), True)
    if name in KERNELS:
        return Method(name, partial(_interp, KernelSpec(name, alignment)), False)
    raise ValueError(f"unknown method {name!r}; choose from {METHODS}")


def _usu(coarse, segments, neighbourhoods, spec):
    return usu_upsample(coarse, segments, neighbourhoods, spec)


def _iwmr(coarse, segments, neighbourhoods, spec, lam):
    return iwmr_upsample(coarse, segments, neighbourhoods, spec, lam)
