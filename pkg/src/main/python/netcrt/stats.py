#!/usr/bin/env python
# -*- coding: UTF-8 -*-

# Copyright (c) 2024, Sandflow Consulting LLC
#
# Redistribution and use in source and binary forms, with or without
# modification, are permitted provided that the following conditions are met:
#
# 1. Redistributions of source code must retain the above copyright notice, this
#    list of conditions and the following disclaimer.
# 2. Redistributions in binary form must reproduce the above copyright notice,
#    this list of conditions and the following disclaimer in the documentation
#    and/or other materials provided with the distribution.
#
# THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS" AND
# ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE IMPLIED
# WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE ARE
# DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT OWNER OR CONTRIBUTORS BE LIABLE FOR
# ANY DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR CONSEQUENTIAL DAMAGES
# (INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS OR SERVICES;
# LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION) HOWEVER CAUSED AND
# ON ANY THEORY OF LIABILITY, WHETHER IN CONTRACT, STRICT LIABILITY, OR TORT
# (INCLUDING NEGLIGENCE OR OTHERWISE) ARISING IN ANY WAY OUT OF THE USE OF THIS
# SOFTWARE, EVEN IF ADVISED OF THE POSSIBILITY OF SUCH DAMAGE.

'''Grouping of focal units by exposure and the test statistics computed on the groups'''

from __future__ import annotations

import logging
import math
import typing
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.stats

from netcrt.errors import DegenerateGroupingError
from netcrt.exposure import ExposureValue, HypothesisPair
from netcrt.focal import FocalDesign
from netcrt.graph import Network

LOGGER = logging.getLogger(__name__)

# relative tolerance on the pivots of the rank-revealing decomposition
OLS_RANK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class Grouping:
  '''1-based position of E¹_i(z) within the ordered imputable values of each focal unit'''
  indices: np.ndarray
  kappa: int

  def groups(self) -> typing.List[np.ndarray]:
    '''Returns, for j = 1..kappa, the positions of the focal units in group j'''
    return [np.flatnonzero(self.indices == j) for j in range(1, self.kappa + 1)]

  def occupancy(self) -> np.ndarray:
    '''Returns the number of focal units in each group'''
    return np.bincount(self.indices, minlength=self.kappa + 1)[1:]

  def nonempty_groups(self) -> int:
    '''Returns the number of groups with at least one focal unit'''
    return int(np.count_nonzero(self.occupancy()))


def grouping_from_values(design: FocalDesign, e1_values: typing.Sequence[ExposureValue]) -> Grouping:
  '''Groups the focal units of `design` given their E¹ values'''
  indices = np.empty(design.size, dtype=np.int64)
  for k, (value, positions) in enumerate(zip(e1_values, design.index_maps)):
    j = positions.get(value)
    if j is None:
      raise ValueError(
        f"Exposure {value} of focal unit {design.focals[k]} is not imputable: the assignment is not a focal assignment"
      )
    indices[k] = j
  return Grouping(indices=indices, kappa=design.kappa)


def group_focals(design: FocalDesign, z: np.ndarray, net: typing.Optional[Network] = None) -> Grouping:
  '''Groups the focal units of `design` by the position of E¹_i(z) in their ordered imputable values'''
  net = design.net if net is None else net
  return grouping_from_values(design, design.pair.e1.evaluate_units(np.asarray(z), net, design.focals))


def midranks(values: typing.Sequence[float]) -> np.ndarray:
  '''Ranks `values` from 1 to N, tied values receiving the mean of their positions'''
  values = np.asarray(values, dtype=np.float64)
  if len(values) == 0:
    raise ValueError("Cannot rank an empty list")
  return scipy.stats.rankdata(values, method="average")


def _check_groups(grouping: Grouping, y: np.ndarray):
  if len(grouping.indices) != len(y):
    raise ValueError("Grouping and outcomes must have the same length")
  if grouping.nonempty_groups() < 2:
    raise DegenerateGroupingError("Fewer than two nonempty exposure groups")


def kw_statistic(
  y: typing.Sequence[float],
  grouping: Grouping,
  kappa: typing.Optional[int] = None,
  ranks: typing.Optional[np.ndarray] = None
  ) -> float:
  '''Kruskal-Wallis statistic of the outcomes `y` across the groups of `grouping`, computed
  with midranks and summed over nonempty groups. Precomputed `ranks` of `y` may be given.'''

  y = np.asarray(y, dtype=np.float64)
  _check_groups(grouping, y)

  if ranks is None:
    ranks = midranks(y)

  n = len(y)
  grand_mean = (n + 1) / 2
  counts = np.bincount(grouping.indices, minlength=(kappa or grouping.kappa) + 1)
  sums = np.bincount(grouping.indices, weights=ranks, minlength=len(counts))

  nonempty = counts > 0
  dispersion = np.sum(counts[nonempty] * (sums[nonempty] / counts[nonempty] - grand_mean) ** 2)

  return float(12.0 / (n * (n + 1)) * dispersion)


def acd_statistic(y: typing.Sequence[float], grouping: Grouping, kappa: typing.Optional[int] = None) -> float:
  '''Average absolute difference between the mean outcomes of every pair of nonempty groups'''

  y = np.asarray(y, dtype=np.float64)
  _check_groups(grouping, y)

  counts = np.bincount(grouping.indices, minlength=(kappa or grouping.kappa) + 1)
  sums = np.bincount(grouping.indices, weights=y, minlength=len(counts))

  nonempty = counts > 0
  means = sums[nonempty] / counts[nonempty]

  differences = np.abs(means[:, None] - means[None, :])
  pairs = len(means) * (len(means) - 1) / 2

  return float(np.triu(differences, k=1).sum() / pairs)


def _projection_rss(design_matrix: np.ndarray, y: np.ndarray) -> typing.Tuple[float, int]:
  '''Returns the residual sum of squares of `y` on the columns of `design_matrix` and the
  numerical rank of the latter'''

  if design_matrix.shape[1] == 0:
    return float(y @ y), 0

  q, r, _pivots = scipy.linalg.qr(design_matrix, mode="economic", pivoting=True)

  diagonal = np.abs(np.diag(r))
  if diagonal.size == 0 or diagonal[0] == 0:
    return float(y @ y), 0

  rank = int(np.count_nonzero(diagonal > OLS_RANK_TOLERANCE * diagonal[0]))
  basis = q[:, :rank]
  residuals = y - basis @ (basis.T @ y)

  return float(residuals @ residuals), rank


def ols_f_statistic(
  y: typing.Sequence[float],
  e0_regressors: np.ndarray,
  x_regressors: np.ndarray
  ) -> float:
  '''F statistic for the joint significance of `x_regressors` in the least squares regression
  of `y` on an intercept, `e0_regressors` and `x_regressors`. Collinear columns are dropped.
  Returns `math.inf` when the full model fits exactly but the restricted one does not.'''

  y = np.asarray(y, dtype=np.float64)
  n = len(y)

  e0_regressors = np.asarray(e0_regressors, dtype=np.float64).reshape(n, -1)
  x_regressors = np.asarray(x_regressors, dtype=np.float64).reshape(n, -1)

  restricted = np.column_stack([np.ones(n), e0_regressors])
  full = np.column_stack([restricted, x_regressors])

  rss_restricted, rank_restricted = _projection_rss(restricted, y)
  rss_full, rank_full = _projection_rss(full, y)

  q = rank_full - rank_restricted
  if q == 0:
    raise DegenerateGroupingError("No regressor of interest is left after dropping collinear columns")

  if n <= rank_full:
    raise DegenerateGroupingError(f"{n} observations cannot identify {rank_full} coefficients")

  improvement = max(rss_restricted - rss_full, 0.0)
  tolerance = 1e-12 * (1.0 + float(y @ y))

  if rss_full <= tolerance:
    return math.inf if improvement > tolerance else 0.0

  return float((improvement / q) / (rss_full / (n - rank_full)))


@dataclass(frozen=True)
class SimesDecision:
  '''Simes-corrected decision over several p-values. `threshold_index` is the largest 1-based
  rank i with p_(i) <= i alpha / s, if any; `p_value` is min_i s p_(i) / i.'''
  reject: bool
  threshold_index: typing.Optional[int]
  p_value: float


def simes(p_values: typing.Sequence[float], alpha: float) -> SimesDecision:
  '''Combines the p-values of several statistics with the Simes procedure at level `alpha`'''

  p = np.sort(np.asarray(p_values, dtype=np.float64))

  if len(p) == 0:
    raise ValueError("Simes correction needs at least one p-value")

  if np.any(np.isnan(p)) or np.any(p < 0) or np.any(p > 1):
    raise ValueError("p-values must lie in [0, 1]")

  if not 0 < alpha < 1:
    raise ValueError("alpha must lie in (0, 1)")

  s = len(p)
  ranks = np.arange(1, s + 1)

  below = np.flatnonzero(p <= ranks * alpha / s)
  threshold_index = int(below[-1]) + 1 if len(below) > 0 else None

  return SimesDecision(
    reject=threshold_index is not None,
    threshold_index=threshold_index,
    p_value=float(min(1.0, np.min(s * p / ranks)))
  )


#
# Statistics evaluated by the randomization test
#

_REGRESSOR_COMPONENTS: typing.Dict[typing.Tuple[str, str], typing.Tuple[int, ...]] = {
  ("own", "own_any_peer"): (1,),
  ("any_neighborhood", "own_any_peer"): (0, 1),
  ("own", "own_peer_count"): (1,),
  ("own_any_peer", "own_peer_count"): (1,),
}


def regressor_components(pair: HypothesisPair) -> typing.Optional[typing.Tuple[int, ...]]:
  '''Returns the components of the E¹ values used as regressors of interest X_i(z) by the OLS
  statistic, or `None` when every component is used'''
  return _REGRESSOR_COMPONENTS.get((pair.e0.name, pair.e1.name))


@dataclass(frozen=True, eq=False)
class FocalSample:
  '''Quantities that stay fixed across the focal assignments of a design: the focal outcomes,
  their midranks and the E⁰ regressors'''
  design: FocalDesign
  y: np.ndarray
  ranks: np.ndarray
  e0_regressors: np.ndarray
  components: typing.Optional[typing.Tuple[int, ...]]

  @staticmethod
  def create(design: FocalDesign, Y: typing.Sequence[float]) -> FocalSample:
    '''Collects the data of the focal units of `design` from the outcomes `Y` of all units'''
    Y = np.asarray(Y, dtype=np.float64)
    if len(Y) != design.net.n:
      raise ValueError(f"Expected {design.net.n} outcomes, got {len(Y)}")

    focals = np.asarray(design.focals, dtype=np.int64)
    y = Y[focals]

    null_values = design.pair.e0.evaluate_units(design.observed, design.net, design.focals)

    return FocalSample(
      design=design,
      y=y,
      ranks=midranks(y),
      e0_regressors=np.asarray(null_values, dtype=np.float64).reshape(len(y), -1),
      components=regressor_components(design.pair)
    )

  def x_regressors(self, e1_values: typing.Sequence[ExposureValue]) -> np.ndarray:
    '''Returns X_i(z) of every focal unit given their E¹ values'''
    values = np.asarray(e1_values, dtype=np.float64).reshape(len(self.y), -1)
    if self.components is None:
      return values
    return values[:, list(self.components)]


@dataclass(frozen=True, eq=False)
class Draw:
  '''A focal assignment together with the E¹ values and the grouping it induces'''
  z: np.ndarray
  e1_values: typing.List[ExposureValue]
  grouping: Grouping

  @staticmethod
  def create(design: FocalDesign, z: np.ndarray) -> Draw:
    '''Evaluates E¹ on the focal units of `design` and groups them'''
    e1_values = design.pair.e1.evaluate_units(z, design.net, design.focals)
    return Draw(z=z, e1_values=e1_values, grouping=grouping_from_values(design, e1_values))


class Statistic:
  '''Base class for test statistics. Subclasses that define `NAME` are registered and can be
  retrieved with `get_statistic_by_name()`.'''

  NAME: typing.Optional[str] = None

  _all_statistics: typing.Dict[str, typing.Type[Statistic]] = dict()

  def __init_subclass__(cls, **kwargs):
    super().__init_subclass__(**kwargs)
    if cls.NAME is not None:
      Statistic._all_statistics[cls.NAME] = cls

  @staticmethod
  def get_statistic_by_name(name: str) -> Statistic:
    '''Returns an instance of the statistic called `name`'''
    statistic_class = Statistic._all_statistics.get(name)
    if statistic_class is None:
      raise ValueError(f"Unknown statistic '{name}'. Expect one of: {', '.join(Statistic.names())}.")
    return statistic_class()

  @staticmethod
  def names() -> typing.List[str]:
    '''Returns the names of the registered statistics'''
    return sorted(Statistic._all_statistics)

  @property
  def name(self) -> str:
    '''Name of the statistic'''
    return self.NAME or type(self).__name__

  def compute(self, sample: FocalSample, draw: Draw) -> float:
    '''Returns the value of the statistic; raises `DegenerateGroupingError` when it is undefined'''
    raise NotImplementedError

  def __repr__(self) -> str:
    return self.name


class KruskalWallis(Statistic):
  '''Kruskal-Wallis statistic'''

  NAME = "kw"

  def compute(self, sample, draw):
    return kw_statistic(sample.y, draw.grouping, ranks=sample.ranks)


class AbsoluteContrastDifference(Statistic):
  '''Average absolute difference of group means'''

  NAME = "acd"

  def compute(self, sample, draw):
    return acd_statistic(sample.y, draw.grouping)


class OLSF(Statistic):
  '''F statistic of the regressors of interest'''

  NAME = "olsf"

  def compute(self, sample, draw):
    return ols_f_statistic(sample.y, sample.e0_regressors, sample.x_regressors(draw.e1_values))
