"""Soft importance-weighted mass redistribution (IWMR).

The global mass budget is reassigned across neighbourhoods in proportion to
``exp((lambda_k - 0.5) / eps_lambda) * |N_k|`` where ``lambda_k`` is the best
segment score touching the neighbourhood.  Inside each neighbourhood the
reassigned mass is spread with the ordinary USU weights.
"""
from __future__ import annotations

import math

import numpy as np

from .grid import group_max
from .potentials import TENSOR
from .redistribute import input_masses, redistribute, usu_weights

DEFAULT_LAMBDA_TEMPERATURE = 0.1


def neighbourhood_importance(segments, neighbourhoods):
    """Max score over the segments intersecting each neighbourhood."""
    if segments.shape != neighbourhoods.shape:
        raise ValueError(f"segment shape {segments.shape} != neighbourhood shape {neighbourhoods.shape}")
    per_pixel = segments.scores[segments.labels]
    return group_max(per_pixel, neighbourhoods.labels, neighbourhoods.count)


def redistribution_weights(importance, sizes, temperature=DEFAULT_LAMBDA_TEMPERATURE):
    """Share of the global budget each neighbourhood receives; sums to one."""
    lam = np.asarray(importance, dtype=np.float64).ravel()
    sizes = np.asarray(sizes, dtype=np.float64).ravel()
    if lam.shape != sizes.shape:
        raise ValueError("importance and sizes must have the same length")
    if np.any(sizes <= 0):
        raise ValueError("neighbourhood sizes must be positive")
    if not temperature > 0:
        raise ValueError("temperature must be > 0")
    logits = (lam - 0.5) / temperature + np.log(sizes)
    z = np.exp(logits - logits.max())
    return z / math.fsum(z)


def iwmr_masses(attribution, segments, neighbourhoods, temperature=DEFAULT_LAMBDA_TEMPERATURE):
    """Original and reassigned per-neighbourhood masses ``(M, M_tilde)``."""
    masses = input_masses(attribution, neighbourhoods)
    rho = redistribution_weights(
        neighbourhood_importance(segments, neighbourhoods), neighbourhoods.sizes, temperature
    )
    return masses, math.fsum(masses) * rho


def iwmr_upsample(attribution, segments, neighbourhoods, spec=TENSOR,
                  lambda_temperature=DEFAULT_LAMBDA_TEMPERATURE):
    """USU with the neighbourhood masses replaced by importance-reassigned ones.

    Each neighbourhood sums to its reassigned mass and the total mass is
    unchanged; per-neighbourhood masses are not kept.
    """
    _, budget = iwmr_masses(attribution, segments, neighbourhoods, lambda_temperature)
    return redistribute(budget, usu_weights(segments, neighbourhoods, spec))
