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

'''Conditional randomization test: observed statistics, resampling of focal assignments and
Monte Carlo p-values'''

from __future__ import annotations

import logging
import multiprocessing
import os
import typing
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from netcrt.assignment import as_assignment, derive_rng
from netcrt.config import ModuleConfiguration
from netcrt.errors import DegenerateGroupingError, SpecificationError, SupportViolationError
from netcrt.focal import DEFAULT_ENUMERATION_CAP, FocalDesign
from netcrt.graph import Network
from netcrt.stats import Draw, FocalSample, SimesDecision, Statistic, simes

LOGGER = logging.getLogger(__name__)

NO_MULTIPROC_ENV = "NETCRT_NO_MULTIPROC"

DEFAULT_DRAWS = 500

DEFAULT_ALPHA = 0.05


def multiprocessing_enabled(threads: int) -> bool:
  '''Returns whether work should be spread over `threads` worker processes'''
  return threads > 1 and multiprocessing.cpu_count() > 1 and not os.getenv(NO_MULTIPROC_ENV)


class PValueRule(Enum):
  '''Monte Carlo p-value formulas'''

  # #{T(z_r) >= T_obs} / R
  proportion = "proportion"

  # (1 + #{T(z_r) >= T_obs}) / (R + 1)
  add_one = "add_one"

  def p_value(self, exceed_count: int, draws: int) -> float:
    '''Returns the p-value for `exceed_count` draws at least as extreme as the observation'''
    if self is PValueRule.add_one:
      return (1 + exceed_count) / (draws + 1)
    return exceed_count / draws


@dataclass(frozen=True, eq=False)
class TestSpec:
  '''Everything needed to run a randomization test except the data'''

  design: FocalDesign

  statistics: typing.Tuple[Statistic, ...]

  # number of Monte Carlo draws R
  draws: int = DEFAULT_DRAWS

  # root seed of the per-draw random streams
  seed: int = 1

  p_value_rule: PValueRule = PValueRule.proportion

  # proposals allowed per draw when rejection sampling
  max_attempts: int = 10000

  # keep the statistic value of every draw
  retain_draws: bool = False

  def __post_init__(self):
    if self.draws < 1:
      raise ValueError("The number of draws must be a positive integer")
    if len(self.statistics) == 0:
      raise ValueError("At least one statistic is required")
    names = [s.name for s in self.statistics]
    if len(set(names)) != len(names):
      raise ValueError("Statistics must have distinct names")

  @property
  def pair(self):
    '''Hypothesis pair of the design'''
    return self.design.pair

  @property
  def mech(self):
    '''Assignment mechanism of the design'''
    return self.design.mech

  def with_draws(self, draws: int, seed: int) -> TestSpec:
    '''Returns a copy of the spec with another number of draws and seed'''
    return TestSpec(
      design=self.design,
      statistics=self.statistics,
      draws=draws,
      seed=seed,
      p_value_rule=self.p_value_rule,
      max_attempts=self.max_attempts,
      retain_draws=self.retain_draws
    )


@dataclass(frozen=True)
class StatisticResult:
  '''Outcome of the test for one statistic'''
  name: str
  observed: float
  p_value: float
  exceed_count: int
  degenerate_draws: int
  draw_values: typing.Optional[np.ndarray] = None


@dataclass(frozen=True)
class TestResult:
  '''Outcome of a randomization test'''

  statistics: typing.Tuple[StatisticResult, ...]

  draws: int

  seed: int

  method: str

  focal_size: int

  kappa: int

  # accepted draws over proposals
  acceptance_rate: float

  # number of focal units in group j, summed over the draws
  group_occupancy: np.ndarray

  def get(self, name: str) -> StatisticResult:
    '''Returns the result of the statistic called `name`'''
    for result in self.statistics:
      if result.name == name:
        return result
    raise KeyError(name)

  def p_values(self) -> typing.Dict[str, float]:
    '''Returns the p-value of each statistic'''
    return {r.name: r.p_value for r in self.statistics}

  def simes(self, alpha: float = DEFAULT_ALPHA) -> SimesDecision:
    '''Combines the p-values of the statistics with the Simes procedure'''
    return simes([r.p_value for r in self.statistics], alpha)


def _evaluate(statistic: Statistic, sample: FocalSample, draw: Draw) -> typing.Tuple[float, bool]:
  try:
    return statistic.compute(sample, draw), False
  except DegenerateGroupingError:
    return 0.0, True


@dataclass
class _ChunkResult:
  exceed_counts: np.ndarray
  degenerate_counts: np.ndarray
  attempts: int
  occupancy: np.ndarray
  values: typing.Optional[np.ndarray]


def _run_chunk(task) -> _ChunkResult:
  spec, sample, observed, start, stop = task

  design = spec.design
  statistics = spec.statistics

  exceed_counts = np.zeros(len(statistics), dtype=np.int64)
  degenerate_counts = np.zeros(len(statistics), dtype=np.int64)
  occupancy = np.zeros(design.kappa, dtype=np.int64)
  values = np.empty((stop - start, len(statistics))) if spec.retain_draws else None
  attempts = 0

  for r in range(start, stop):
    conditional_draw = design.sample(derive_rng(spec.seed, r), spec.max_attempts)
    attempts += conditional_draw.attempts

    draw = Draw.create(design, conditional_draw.z)
    occupancy += draw.grouping.occupancy()

    for k, statistic in enumerate(statistics):
      value, degenerate = _evaluate(statistic, sample, draw)
      degenerate_counts[k] += degenerate
      exceed_counts[k] += value >= observed[k]
      if values is not None:
        values[r - start, k] = value

  return _ChunkResult(exceed_counts, degenerate_counts, attempts, occupancy, values)


def _check_observed(design: FocalDesign, Z: np.ndarray, net: Network):
  if net != design.net:
    raise ValueError("The design was built on another network")

  if not design.mech.in_support(Z):
    raise SupportViolationError("Observed assignment is impossible under the declared mechanism")

  if not np.array_equal(Z, design.observed):
    raise ValueError("The design was built for another observed assignment")

  if not design.membership(Z):
    raise SpecificationError("Observed assignment is not a focal assignment of the design")


def run_test(
  spec: TestSpec,
  Y: typing.Sequence[float],
  Z: typing.Iterable[int],
  net: Network,
  threads: int = 1,
  progress_callback=lambda _: None
  ) -> TestResult:
  '''Runs the conditional randomization test of `spec` on outcomes `Y` and observed assignment `Z`.
  Draw r uses the random stream derived from (spec.seed, r) only, so that the result does not
  depend on `threads`. Setting the environment variable "NETCRT_NO_MULTIPROC" disables worker
  processes.'''

  design = spec.design
  Z = as_assignment(Z, net.n)
  _check_observed(design, Z, net)

  sample = FocalSample.create(design, Y)

  observed_draw = Draw.create(design, Z)
  observed = []
  for statistic in spec.statistics:
    value, degenerate = _evaluate(statistic, sample, observed_draw)
    if degenerate:
      LOGGER.warning("%s is undefined at the observed assignment and set to 0", statistic.name)
    observed.append(value)

  chunk_size = max(1, spec.draws // (100 if threads <= 1 else 4 * threads))
  tasks = [
    (spec, sample, observed, start, min(start + chunk_size, spec.draws))
    for start in range(0, spec.draws, chunk_size)
  ]

  chunks: typing.List[_ChunkResult] = []

  progress_callback(0)

  if multiprocessing_enabled(threads) and len(tasks) > 1:
    with multiprocessing.Pool(threads) as pool:
      for chunk in pool.imap(_run_chunk, tasks):
        chunks.append(chunk)
        progress_callback(len(chunks) / len(tasks))
  else:
    for task in tasks:
      chunks.append(_run_chunk(task))
      progress_callback(len(chunks) / len(tasks))

  exceed_counts = sum(c.exceed_counts for c in chunks)
  degenerate_counts = sum(c.degenerate_counts for c in chunks)
  attempts = sum(c.attempts for c in chunks)
  occupancy = sum(c.occupancy for c in chunks)
  values = np.concatenate([c.values for c in chunks]) if spec.retain_draws else None

  for statistic, count in zip(spec.statistics, degenerate_counts):
    if count > 0:
      LOGGER.debug("%s was undefined for %s of %s draws", statistic.name, count, spec.draws)

  results = tuple(
    StatisticResult(
      name=statistic.name,
      observed=observed[k],
      p_value=spec.p_value_rule.p_value(int(exceed_counts[k]), spec.draws),
      exceed_count=int(exceed_counts[k]),
      degenerate_draws=int(degenerate_counts[k]),
      draw_values=None if values is None else values[:, k]
    )
    for k, statistic in enumerate(spec.statistics)
  )

  return TestResult(
    statistics=results,
    draws=spec.draws,
    seed=spec.seed,
    method=design.method.value,
    focal_size=design.size,
    kappa=design.kappa,
    acceptance_rate=spec.draws / attempts,
    group_occupancy=occupancy
  )


def exact_test(
  spec: TestSpec,
  Y: typing.Sequence[float],
  Z: typing.Iterable[int],
  net: Network,
  cap: int = DEFAULT_ENUMERATION_CAP
  ) -> typing.Dict[str, float]:
  '''Returns, for each statistic, the probability under P_Z restricted to the focal assignments
  that the statistic is at least its observed value. Raises `EnumerationLimitError` when the
  design support exceeds `cap`.'''

  design = spec.design
  Z = as_assignment(Z, net.n)
  _check_observed(design, Z, net)

  sample = FocalSample.create(design, Y)

  observed_draw = Draw.create(design, Z)
  observed = [_evaluate(statistic, sample, observed_draw)[0] for statistic in spec.statistics]

  total = 0.0
  exceed = np.zeros(len(spec.statistics))

  for z, weight in design.iter_members(cap):
    draw = Draw.create(design, z)
    total += weight
    for k, statistic in enumerate(spec.statistics):
      if _evaluate(statistic, sample, draw)[0] >= observed[k]:
        exceed[k] += weight

  return {statistic.name: float(exceed[k] / total) for k, statistic in enumerate(spec.statistics)}


def error_scaling_probe(
  spec: TestSpec,
  Y: typing.Sequence[float],
  Z: typing.Iterable[int],
  net: Network,
  draw_grid: typing.Sequence[int],
  reps: int,
  statistic: typing.Optional[str] = None
  ) -> pd.DataFrame:
  '''Runs the test `reps` times for each number of draws R in `draw_grid`, with independent
  seeds, and tabulates the mean and standard deviation of the p-value of `statistic` (the
  first statistic of the spec if `None`)'''

  if list(draw_grid) != sorted(draw_grid):
    raise ValueError("The grid of draws must be ascending")

  if reps < 1:
    raise ValueError("reps must be a positive integer")

  name = statistic or spec.statistics[0].name

  rows = []
  for draws in draw_grid:
    p_values = []
    for rep in range(reps):
      seed = int(np.random.SeedSequence(spec.seed, spawn_key=(int(draws), rep)).generate_state(1)[0])
      result = run_test(spec.with_draws(draws, seed), Y, Z, net)
      p_values.append(result.get(name).p_value)

    p_values = np.asarray(p_values)
    rows.append({
      "draws": int(draws),
      "mean": float(p_values.mean()),
      "sd": float(p_values.std(ddof=1)) if reps > 1 else 0.0
    })

  return pd.DataFrame(rows, columns=["draws", "mean", "sd"])


#
# Configuration
#

def _decode_statistics(value: typing.Sequence[str]) -> typing.List[str]:
  if isinstance(value, str) or not isinstance(value, (list, tuple)) or len(value) == 0:
    raise ValueError("statistics must be a nonempty list of names")
  for name in value:
    Statistic.get_statistic_by_name(name)
  return list(value)


def _decode_draws(value: int) -> int:
  draws = int(value)
  if draws < 1:
    raise ValueError("draws must be a positive integer")
  return draws


def _decode_alpha(value: float) -> float:
  alpha = float(value)
  if not 0 < alpha < 1:
    raise ValueError("alpha must lie in (0, 1)")
  return alpha


def _decode_p_value_rule(value: str) -> PValueRule:
  try:
    return PValueRule(value)
  except ValueError as e:
    raise ValueError(f"Invalid p_value_rule '{value}'. Expect one of: {', '.join(r.value for r in PValueRule)}.") from e


@dataclass
class TestConfiguration(ModuleConfiguration):
  """Randomization test parameters"""

  statistics: typing.List[str] = field(
    default_factory=lambda: ["kw", "acd", "olsf"],
    metadata={"decoder": _decode_statistics}
  )

  # number of Monte Carlo draws R
  draws: int = field(default=DEFAULT_DRAWS, metadata={"decoder": _decode_draws})

  # level of the reported decisions
  alpha: float = field(default=DEFAULT_ALPHA, metadata={"decoder": _decode_alpha})

  seed: int = field(default=1, metadata={"decoder": int})

  p_value_rule: PValueRule = field(default="proportion", metadata={"decoder": _decode_p_value_rule})

  max_attempts: int = field(default=10000, metadata={"decoder": _decode_draws})

  @classmethod
  def name(cls):
    return "test"

  def build(self, design: FocalDesign) -> TestSpec:
    '''Returns the spec of the configured test on `design`'''
    return TestSpec(
      design=design,
      statistics=tuple(Statistic.get_statistic_by_name(s) for s in self.statistics),
      draws=self.draws,
      seed=self.seed,
      p_value_rule=PValueRule(self.p_value_rule),
      max_attempts=self.max_attempts
    )
