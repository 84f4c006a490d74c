"""Neutral mutations and the substitution point process.

Mutations fall on each level line at rate theta/2 (theta = 2 N mu).  A
mutation becomes a substitution exactly when it falls on level 1, so the
substitution process never needs the full graph: between consecutive MRCA
living times B' < B'' the level-1 line accumulates Poisson(theta/2 (B''-B'))
determining mutations, and they surface at the establishment time E''.
Substitution times are therefore a subset of the MRCA change times, and
they cluster (their counts over-disperse relative to Poisson).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import MrcaPointProcess
from .errors import ConfigurationError, SampleSizeError, ValidationError
from .laws import sample_L, sample_S_batch
from .stats import count_dispersion


@dataclass(frozen=True)
class MutationConfig:
    theta: float
    seed: int = 0

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigurationError("theta must be positive")


@dataclass(frozen=True)
class SubstitutionEvent:
    """count determining mutations surfacing at the MRCA change at time."""

    time: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValidationError("emitted substitutions carry count >= 1")


def simulate_substitutions(points: MrcaPointProcess, config: MutationConfig,
                           rng: np.random.Generator) -> list[SubstitutionEvent]:
    """Poisson marks on B-gaps, emitted at the later establishment time.

    The first point has no predecessor gap inside the window and is dropped
    (the same discard edge-correction the point process itself uses).
    """
    e = np.asarray(points.establishment, dtype=np.float64)
    b = np.asarray(points.living, dtype=np.float64)
    if e.size < 2:
        raise ValidationError("need at least two MRCA points")
    if np.any(np.diff(e) <= 0) or np.any(np.diff(b) <= 0) or np.any(b >= e):
        raise ValidationError("points must be sorted with B < E pairwise")
    gaps = np.diff(b)
    counts = rng.poisson(0.5 * config.theta * gaps)
    out = []
    for time, s in zip(e[1:], counts):
        if s > 0:
            out.append(SubstitutionEvent(float(time), int(s)))
    return out


def substitution_mass_rate(events: Sequence[SubstitutionEvent],
                           points: MrcaPointProcess) -> tuple[float, float]:
    """(rate, se): total substitution mass per unit of covered B-span.

    The long-run rate is theta/2; conditionally on the B's the total mass
    is Poisson, so se = sqrt(total)/span.
    """
    b = points.living
    if b.size < 2:
        raise SampleSizeError("need at least two MRCA points")
    span = float(b[-1] - b[0])
    total = float(sum(ev.count for ev in events))
    return total / span, math.sqrt(max(total, 1.0)) / span


def sample_Tc(rng: np.random.Generator) -> float:
    """Pairwise coalescence time of a 2-sample drawn at an MRCA change:
    l with weight 2/((l+1)(l+2)), then S_{l+1}^inf."""
    return float(sample_Tc_many(1, rng)[0])


def sample_Tc_many(n: int, rng: np.random.Generator) -> np.ndarray:
    ls = sample_L(rng, n)
    return sample_S_batch(ls + 1, rng)


def dispersion_of_substitution_times(events: Sequence[SubstitutionEvent] | np.ndarray,
                                     window: float,
                                     weighted: bool = True) -> float:
    """Variance-to-mean ratio of substitution counts in disjoint windows of
    the given width; > 1 signals clustering.

    By default each event contributes its S substitutions (the batch that
    fixed at that MRCA change): several mutations surfacing at one instant
    is exactly the clustering the process exhibits, and the thinned event
    times alone are in fact anti-clustered.  ``weighted=False`` counts
    event times once each (Poisson inputs then give a ratio of 1, and the
    ratio tends to 1 as the window shrinks).

    Reported as a statistic, not a verdict: the clustering claim itself is
    qualitative, and the acceptance suite picks its own significance band.
    """
    if len(events) < 100:
        raise SampleSizeError("need >= 100 substitution events")
    times = np.asarray([ev.time if isinstance(ev, SubstitutionEvent) else ev
                        for ev in events], dtype=np.float64)
    weights = None
    if weighted:
        weights = np.asarray([ev.count if isinstance(ev, SubstitutionEvent) else 1
                              for ev in events], dtype=np.float64)
    ratio, _ = count_dispersion(times, window, weights=weights)
    return ratio


def export_substitutions_csv(events: Sequence[SubstitutionEvent], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["E", "S"])
        for ev in events:
            writer.writerow([format(ev.time, ".17g"), ev.count])
