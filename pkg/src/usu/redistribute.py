"""Ratio-form redistribution of neighbourhood mass by segment score.

Every pixel ``x`` in neighbourhood ``k`` receives ``M_k * w_k(x)`` where the
weight is the potential of its segment's score normalized over the
neighbourhood.  Weights sum to one per neighbourhood, so each neighbourhood
keeps exactly its own mass.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    NeighbourhoodSystem,
    coarse_vector,
    group_max,
    group_sums,
    neighbourhood_masses,
)
from .potentials import TENSOR, log_potential


@dataclass(frozen=True, eq=False)
class WeightField:
    """Per-pixel weights, each neighbourhood's weights summing to one."""

    values: np.ndarray
    neighbourhoods: NeighbourhoodSystem

    def sums(self):
        return group_sums(self.values, self.neighbourhoods.labels, self.neighbourhoods.count)


def _check_shapes(segments, neighbourhoods):
    if segments.shape != neighbourhoods.shape:
        raise ValueError(f"segment shape {segments.shape} != neighbourhood shape {neighbourhoods.shape}")


def usu_weights(segments, neighbourhoods, spec=TENSOR, shift=True):
    """Normalized potential weights of every pixel within its neighbourhood.

    With ``shift`` (the default) the per-neighbourhood maximum log-potential is
    subtracted before exponentiating, which keeps small temperatures from
    overflowing and leaves the normalized values unchanged.
    """
    _check_shapes(segments, neighbourhoods)
    labels = neighbourhoods.labels
    logp = log_potential(spec, segments.scores)[segments.labels]
    if shift:
        logp = logp - group_max(logp, labels, neighbourhoods.count)[labels]
    phi = np.exp(logp)
    denom = group_sums(phi, labels, neighbourhoods.count)
    values = phi / denom[labels]
    values.flags.writeable = False
    return WeightField(values, neighbourhoods)


def input_masses(attribution, neighbourhoods):
    """Neighbourhood masses from either a full grid or a coarse map.

    A grid with the lattice's shape is summed per neighbourhood.  Anything
    else is read as one value per neighbourhood and its mass is
    ``value * |N_k|``, matching the piecewise-constant expansion.
    """
    arr = np.asarray(attribution, dtype=np.float64)
    if arr.ndim == 2 and arr.shape == neighbourhoods.shape:
        return neighbourhood_masses(arr, neighbourhoods)
    return coarse_vector(arr, neighbourhoods) * neighbourhoods.sizes


def redistribute(masses, weights):
    """Spread per-neighbourhood masses over pixels with the given weights."""
    masses = np.asarray(masses, dtype=np.float64)
    return masses[weights.neighbourhoods.labels] * weights.values


def usu_upsample(attribution, segments, neighbourhoods, spec=TENSOR):
    """Upsample coarse attribution by score-weighted, mass-conserving redistribution.

    Parameters
    ----------
    attribution : array
        Coarse map (length-K vector or ``coarse_shape`` grid) or a full
        ``(H, W)`` attribution grid.
    segments : SegmentPartition
        Semantic partition with scores in the potential's domain.
    neighbourhoods : NeighbourhoodSystem
        Receptive fields of the coarse values.
    spec : PotentialSpec
        Potential family and temperature; tensor with eps=0.1 by default.

    Returns
    -------
    (H, W) float64 array whose sum over each neighbourhood equals its mass.
    """
    masses = input_masses(attribution, neighbourhoods)
    return redistribute(masses, usu_weights(segments, neighbourhoods, spec))


def verify_linearity_in_mass(segments, neighbourhoods, spec, attribution, c, rtol=1e-10):
    """Check ``U(c * A) == c * U(A)`` to `rtol` relative to the output scale."""
    A = np.asarray(attribution, dtype=np.float64)
    scaled = usu_upsample(c * A, segments, neighbourhoods, spec)
    reference = c * usu_upsample(A, segments, neighbourhoods, spec)
    scale = max(np.max(np.abs(reference)), np.finfo(float).tiny)
    return bool(np.max(np.abs(scaled - reference)) <= rtol * scale)
