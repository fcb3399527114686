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

'''Construction of focal units and focal assignments'''

from __future__ import annotations

import functools
import logging
import math
import typing
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from netcrt.assignment import (AssignmentMechanism, ConditionalDraw, DEFAULT_MAX_ATTEMPTS,
                               as_assignment, sample_conditional)
from netcrt.config import ModuleConfiguration
from netcrt.errors import (DegenerateDesignError, EnumerationLimitError, NoBicliqueError,
                           SpecificationError)
from netcrt.exposure import ExposureValue, HypothesisPair, candidate_focals, tilde_sets
from netcrt.graph import (BicliqueScore, Network, best_biclique, common_friend_graph, greedy_independent_set,
                          improve_independent_set)

LOGGER = logging.getLogger(__name__)

DEFAULT_MIS_SEARCH_ROUNDS = 20

DEFAULT_MIN_ASSIGNMENTS = 50

DEFAULT_ENUMERATION_CAP = 2 ** 20


class FocalMethod(Enum):
  '''Methods used to select focal units'''
  mis = "mis"
  random = "random"
  biclique = "biclique"


@dataclass(frozen=True, eq=False)
class ConstraintRepresentation:
  '''Focal assignments given by the allowed E¹ values of each focal unit. `fixed` is the
  equivalent treatment pattern when one exists, in which case assignments are drawn directly.'''
  allowed: typing.Tuple[typing.FrozenSet[ExposureValue], ...]
  fixed: typing.Optional[typing.Dict[int, int]] = None


@dataclass(frozen=True, eq=False)
class ExplicitRepresentation:
  '''Focal assignments given as a list of distinct assignment vectors, one per row'''
  assignments: np.ndarray


@dataclass(frozen=True, eq=False)
class FocalDesign:
  '''Focal units S, their imputable exposure values and the focal assignments C^S'''

  method: FocalMethod

  kappa: int

  # focal units, in increasing order
  focals: typing.Tuple[int, ...]

  # ordered imputable values of each focal unit
  tilde_sets: typing.Tuple[typing.Tuple[ExposureValue, ...], ...]

  pair: HypothesisPair

  mech: AssignmentMechanism

  net: Network

  observed: np.ndarray

  representation: typing.Union[ConstraintRepresentation, ExplicitRepresentation]

  def __post_init__(self):
    if len(self.focals) < self.kappa:
      raise DegenerateDesignError(
        f"{self.method.value} design has {len(self.focals)} focal units, fewer than kappa={self.kappa}"
      )

    if len(self.tilde_sets) != len(self.focals):
      raise ValueError("There must be one set of imputable values per focal unit")

    for i, values in zip(self.focals, self.tilde_sets):
      if len(values) != self.kappa:
        raise ValueError(f"Focal unit {i} has {len(values)} imputable values, expected {self.kappa}")

  @property
  def size(self) -> int:
    '''Number of focal units'''
    return len(self.focals)

  @functools.cached_property
  def index_maps(self) -> typing.Tuple[typing.Dict[ExposureValue, int], ...]:
    '''For each focal unit, the 1-based position of each imputable value'''
    return tuple({v: j + 1 for j, v in enumerate(values)} for values in self.tilde_sets)

  @functools.cached_property
  def _explicit_rows(self) -> typing.Dict[bytes, int]:
    rows = self.representation.assignments
    return {row.tobytes(): k for k, row in enumerate(rows)}

  @functools.cached_property
  def _explicit_probabilities(self) -> np.ndarray:
    weights = np.asarray([self.mech.probability(z) for z in self.representation.assignments])
    return weights / weights.sum()

  def is_explicit(self) -> bool:
    '''Returns whether the focal assignments are listed explicitly'''
    return isinstance(self.representation, ExplicitRepresentation)

  def uses_fixed_pattern(self) -> bool:
    '''Returns whether focal assignments are drawn directly from a fixed treatment pattern'''
    return isinstance(self.representation, ConstraintRepresentation) and self.representation.fixed is not None

  def _is_member(self, z: np.ndarray) -> bool:
    if isinstance(self.representation, ExplicitRepresentation):
      return z.tobytes() in self._explicit_rows

    if not self.mech.in_support(z):
      return False

    values = self.pair.e1.evaluate_units(z, self.net, self.focals)
    return all(v in allowed for v, allowed in zip(values, self.representation.allowed))

  def membership(self, z: typing.Iterable[int]) -> bool:
    '''Returns whether `z` is a focal assignment'''
    return self._is_member(as_assignment(z, self.net.n))

  def sample(self, rng: np.random.Generator, max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> ConditionalDraw:
    '''Draws from P_Z restricted to the focal assignments'''

    if isinstance(self.representation, ExplicitRepresentation):
      k = rng.choice(len(self.representation.assignments), p=self._explicit_probabilities)
      return ConditionalDraw(z=self.representation.assignments[k].copy(), attempts=1)

    if self.representation.fixed is not None:
      return ConditionalDraw(z=self.mech.sample_fixed(self.representation.fixed, rng), attempts=1)

    return sample_conditional(self.mech, self._is_member, rng, max_attempts)

  def iter_members(self, cap: int = DEFAULT_ENUMERATION_CAP) -> typing.Iterator[typing.Tuple[np.ndarray, float]]:
    '''Iterates over the focal assignments and their probability under P_Z. Raises
    `EnumerationLimitError` if more than `cap` assignments would have to be examined.'''

    if isinstance(self.representation, ExplicitRepresentation):
      for z in self.representation.assignments:
        yield z, self.mech.probability(z)
      return

    support_size = self.mech.support_size()
    if support_size > cap:
      raise EnumerationLimitError(f"Design support has {support_size} assignments, more than the cap of {cap}")

    for z in self.mech.iter_support():
      if self._is_member(z):
        yield z, self.mech.probability(z)


def _constraint_design(
  method: FocalMethod,
  pair: HypothesisPair,
  Z: np.ndarray,
  net: Network,
  mech: AssignmentMechanism,
  kappa: int,
  focals: typing.Sequence[int],
  tilde: typing.Sequence[typing.Tuple[ExposureValue, ...]]
  ) -> FocalDesign:

  focals = tuple(sorted(focals))
  allowed = tuple(frozenset(tilde[i]) for i in focals)

  # C^S reduces to a treatment pattern when the E⁰ level sets do and E¹ ranges are exact
  fixed: typing.Optional[typing.Dict[int, int]] = {}
  null_values = pair.e0.evaluate_units(Z, net, focals)
  for i, value in zip(focals, null_values):
    pattern = pair.e0.fixed_pattern(i, value, net)
    if pattern is None or pair.e1.value_range(i, net, mech) is None:
      fixed = None
      break
    for j, v in pattern.items():
      if fixed.get(j, v) != v:
        raise SpecificationError(f"Conflicting treatment of unit {j} in the focal pattern")
      fixed[j] = v

  if fixed is None:
    LOGGER.debug("Focal assignments of the %s design are drawn by rejection sampling", method.value)

  return FocalDesign(
    method=method,
    kappa=kappa,
    focals=focals,
    tilde_sets=tuple(tilde[i] for i in focals),
    pair=pair,
    mech=mech,
    net=net,
    observed=Z,
    representation=ConstraintRepresentation(allowed=allowed, fixed=fixed)
  )


def _candidates(pair, Z, net, mech, kappa, tilde) -> typing.Tuple[typing.List[int], typing.Sequence]:
  if tilde is None:
    tilde = tilde_sets(pair, Z, net, mech)

  candidates = candidate_focals(pair, Z, net, mech, kappa, tilde)

  if len(candidates) == 0:
    raise DegenerateDesignError(f"No candidate focal unit has exactly {kappa} imputable exposure values")

  return candidates, tilde


def mis_design(
  pair: HypothesisPair,
  Z: typing.Iterable[int],
  net: Network,
  mech: AssignmentMechanism,
  kappa: int,
  rng: np.random.Generator,
  tilde: typing.Optional[typing.Sequence[typing.Tuple[ExposureValue, ...]]] = None,
  search_rounds: int = DEFAULT_MIS_SEARCH_ROUNDS
  ) -> FocalDesign:
  '''Selects as focal units a maximal independent set of the common-friend graph of the
  candidate units, so that no two focal units share a unit their exposures depend on.

  The greedy minimum-degree set is enlarged by a local search with `search_rounds`
  perturbations per candidate unit; 0 keeps the greedy set.'''

  Z = as_assignment(Z, net.n)
  candidates, tilde = _candidates(pair, Z, net, mech, kappa, tilde)

  def neighborhood(i: int) -> typing.FrozenSet[int]:
    return pair.e0.dependence(i, net) | pair.e1.dependence(i, net)

  graph = common_friend_graph(net, candidates, neighborhood)
  if search_rounds < 0:
    raise ValueError("search_rounds must be non-negative")

  focals = greedy_independent_set(graph, rng)
  if search_rounds > 0:
    focals = improve_independent_set(graph, focals, rng, rounds=search_rounds * len(candidates))

  LOGGER.debug("MIS design: %s focal units out of %s candidates", len(focals), len(candidates))

  return _constraint_design(FocalMethod.mis, pair, Z, net, mech, kappa, focals, tilde)


def random_design(
  pair: HypothesisPair,
  Z: typing.Iterable[int],
  net: Network,
  mech: AssignmentMechanism,
  kappa: int,
  rng: np.random.Generator,
  fraction: float = 0.5,
  tilde: typing.Optional[typing.Sequence[typing.Tuple[ExposureValue, ...]]] = None
  ) -> FocalDesign:
  '''Selects as focal units a uniformly random subset of ⌈fraction |N(kappa)|⌉ candidate units'''

  if not 0 < fraction <= 1:
    raise ValueError("fraction must lie in (0, 1]")

  Z = as_assignment(Z, net.n)
  candidates, tilde = _candidates(pair, Z, net, mech, kappa, tilde)

  size = math.ceil(fraction * len(candidates))
  focals = rng.choice(np.asarray(candidates), size=size, replace=False).tolist()

  return _constraint_design(FocalMethod.random, pair, Z, net, mech, kappa, focals, tilde)


@dataclass(frozen=True, eq=False)
class NullExposureGraph:
  '''Bipartite graph between candidate units and candidate assignments: unit i is linked to
  assignment z when coarsen(E¹_i(z)) equals the observed E⁰_i(Z). The observed assignment is
  the first column.'''

  pair: HypothesisPair

  mech: AssignmentMechanism

  net: Network

  observed: np.ndarray

  kappa: int

  units: typing.Tuple[int, ...]

  unit_tilde_sets: typing.Tuple[typing.Tuple[ExposureValue, ...], ...]

  # distinct assignments, one per row
  assignments: np.ndarray

  # adjacency[k, b] links units[k] and assignments[b]
  adjacency: np.ndarray


def build_null_exposure_graph(
  pair: HypothesisPair,
  Z: typing.Iterable[int],
  net: Network,
  mech: AssignmentMechanism,
  kappa: int,
  num_assignments: int,
  rng: np.random.Generator,
  tilde: typing.Optional[typing.Sequence[typing.Tuple[ExposureValue, ...]]] = None
  ) -> NullExposureGraph:
  '''Builds the null exposure graph between the candidate units N(kappa) and
  Z₀ = {Z} ∪ `num_assignments` draws from P_Z'''

  if num_assignments < 1:
    raise ValueError("num_assignments must be a positive integer")

  Z = as_assignment(Z, net.n)
  units, tilde = _candidates(pair, Z, net, mech, kappa, tilde)

  rows: typing.Dict[bytes, int] = {Z.tobytes(): 0}
  assignments = [Z]

  for _ in range(num_assignments):
    z = mech.sample(rng)
    key = z.tobytes()
    if key not in rows:
      rows[key] = len(assignments)
      assignments.append(z)

  null_values = pair.e0.evaluate_units(Z, net, units)

  adjacency = np.zeros((len(units), len(assignments)), dtype=bool)
  for b, z in enumerate(assignments):
    for k, (alt_value, null_value) in enumerate(zip(pair.e1.evaluate_units(z, net, units), null_values)):
      adjacency[k, b] = pair.coarsen(alt_value) == null_value

  LOGGER.debug(
    "Null exposure graph: %s units, %s distinct assignments, %s edges",
    len(units), len(assignments), int(adjacency.sum())
  )

  return NullExposureGraph(
    pair=pair,
    mech=mech,
    net=net,
    observed=Z,
    kappa=kappa,
    units=tuple(units),
    unit_tilde_sets=tuple(tilde[i] for i in units),
    assignments=np.asarray(assignments, dtype=Z.dtype),
    adjacency=adjacency
  )


def biclique_design(
  graph: NullExposureGraph,
  min_units: int = 2,
  min_assignments: int = DEFAULT_MIN_ASSIGNMENTS,
  score: str = "log",
  max_expansions: int = 100000
  ) -> FocalDesign:
  '''Selects an inclusion-maximal biclique (N_b, Z_b) of the null exposure graph with the
  best `score` and uses N_b as focal units and Z_b as focal assignments'''

  biclique = best_biclique(
    graph.adjacency,
    min_rows=max(min_units, graph.kappa),
    min_columns=min_assignments,
    score=BicliqueScore.by_name(score),
    max_expansions=max_expansions
  )

  if biclique is None:
    raise NoBicliqueError(
      f"No biclique with at least {max(min_units, graph.kappa)} units and {min_assignments} assignments"
    )

  focals = tuple(graph.units[k] for k in biclique.rows)

  LOGGER.debug("Biclique design: %s focal units, %s focal assignments", len(focals), len(biclique.columns))

  columns = list(biclique.columns)

  return FocalDesign(
    method=FocalMethod.biclique,
    kappa=graph.kappa,
    focals=focals,
    tilde_sets=tuple(graph.unit_tilde_sets[k] for k in biclique.rows),
    pair=graph.pair,
    mech=graph.mech,
    net=graph.net,
    observed=graph.observed,
    representation=ExplicitRepresentation(assignments=graph.assignments[columns])
  )


#
# Configuration
#

def _decode_method(value: str) -> FocalMethod:
  try:
    return FocalMethod(value)
  except ValueError as e:
    raise ValueError(f"Invalid focal method '{value}'. Expect one of: {', '.join(m.value for m in FocalMethod)}.") from e


def _decode_kappa(value: typing.Optional[int]) -> typing.Optional[int]:
  if value is None:
    return None
  kappa = int(value)
  if kappa < 2:
    raise ValueError("kappa must be at least 2")
  return kappa


def _decode_fraction(value: float) -> float:
  fraction = float(value)
  if not 0 < fraction <= 1:
    raise ValueError("fraction must lie in (0, 1]")
  return fraction


def _decode_positive(value: int) -> int:
  count = int(value)
  if count < 1:
    raise ValueError("Expected a positive integer")
  return count


def _decode_non_negative(value: int) -> int:
  count = int(value)
  if count < 0:
    raise ValueError("Expected a non-negative integer")
  return count


def _decode_score(value: str) -> str:
  BicliqueScore.by_name(value)
  return value


@dataclass
class FocalConfiguration(ModuleConfiguration):
  """Focal unit selection"""

  method: FocalMethod = field(default="mis", metadata={"decoder": _decode_method})

  # number of imputable exposure values of focal units; the kappa with the most focal units if None
  kappa: typing.Optional[int] = field(default=2, metadata={"decoder": _decode_kappa})

  # share of the candidate units selected by the random method
  fraction: float = field(default=0.5, metadata={"decoder": _decode_fraction})

  # local search perturbations per candidate unit of the mis method
  search_rounds: int = field(default=DEFAULT_MIS_SEARCH_ROUNDS, metadata={"decoder": _decode_non_negative})

  @classmethod
  def name(cls):
    return "focal"


@dataclass
class BicliqueConfiguration(ModuleConfiguration):
  """Biclique method parameters"""

  # number of assignments drawn from the design to build Z₀
  z0_draws: int = field(default=10000, metadata={"decoder": _decode_positive})

  min_units: int = field(default=2, metadata={"decoder": _decode_positive})

  # the smallest attainable p-value is 1 / min_assignments
  min_assignments: int = field(default=DEFAULT_MIN_ASSIGNMENTS, metadata={"decoder": _decode_positive})

  score: str = field(default="log", metadata={"decoder": _decode_score})

  max_expansions: int = field(default=100000, metadata={"decoder": _decode_positive})

  @classmethod
  def name(cls):
    return "biclique"


def build_design(
  pair: HypothesisPair,
  Z: typing.Iterable[int],
  net: Network,
  mech: AssignmentMechanism,
  kappa: int,
  rng: np.random.Generator,
  focal_config: typing.Optional[FocalConfiguration] = None,
  biclique_config: typing.Optional[BicliqueConfiguration] = None,
  tilde: typing.Optional[typing.Sequence[typing.Tuple[ExposureValue, ...]]] = None
  ) -> FocalDesign:
  '''Builds the design of the configured method for the given `kappa`'''

  focal_config = focal_config or FocalConfiguration.parse({})
  biclique_config = biclique_config or BicliqueConfiguration.parse({})

  Z = as_assignment(Z, net.n)

  if tilde is None:
    tilde = tilde_sets(pair, Z, net, mech)

  method = FocalMethod(focal_config.method)

  if method is FocalMethod.mis:
    return mis_design(pair, Z, net, mech, kappa, rng, tilde=tilde, search_rounds=focal_config.search_rounds)

  if method is FocalMethod.random:
    return random_design(pair, Z, net, mech, kappa, rng, fraction=focal_config.fraction, tilde=tilde)

  graph = build_null_exposure_graph(pair, Z, net, mech, kappa, biclique_config.z0_draws, rng, tilde=tilde)
  return biclique_design(
    graph,
    min_units=biclique_config.min_units,
    min_assignments=biclique_config.min_assignments,
    score=biclique_config.score,
    max_expansions=biclique_config.max_expansions
  )


def select_kappa(
  pair: HypothesisPair,
  Z: typing.Iterable[int],
  net: Network,
  mech: AssignmentMechanism,
  rng: np.random.Generator,
  focal_config: typing.Optional[FocalConfiguration] = None,
  biclique_config: typing.Optional[BicliqueConfiguration] = None
  ) -> FocalDesign:
  '''Builds a design for every kappa ≥ 2 with candidate units and returns the one with the
  most focal units (the smallest kappa among ties)'''

  Z = as_assignment(Z, net.n)
  tilde = tilde_sets(pair, Z, net, mech)

  kappas = sorted({len(values) for values in tilde if len(values) >= 2})

  best: typing.Optional[FocalDesign] = None
  for kappa in kappas:
    try:
      design = build_design(pair, Z, net, mech, kappa, rng, focal_config, biclique_config, tilde)
    except DegenerateDesignError as e:
      LOGGER.debug("No design for kappa=%s: %s", kappa, e)
      continue

    if best is None or design.size > best.size:
      best = design

  if best is None:
    raise DegenerateDesignError("No kappa yields a focal design")

  LOGGER.info("Selected kappa=%s with %s focal units", best.kappa, best.size)

  return best


def design_from_config(
  pair: HypothesisPair,
  Z: typing.Iterable[int],
  net: Network,
  mech: AssignmentMechanism,
  rng: np.random.Generator,
  focal_config: typing.Optional[FocalConfiguration] = None,
  biclique_config: typing.Optional[BicliqueConfiguration] = None
  ) -> FocalDesign:
  '''Builds the configured design, selecting kappa automatically when it is not configured'''

  focal_config = focal_config or FocalConfiguration.parse({})

  if focal_config.kappa is None:
    return select_kappa(pair, Z, net, mech, rng, focal_config, biclique_config)

  return build_design(pair, Z, net, mech, focal_config.kappa, rng, focal_config, biclique_config)
