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

'''Known experimental designs: sampling, support membership and conditional sampling'''

from __future__ import annotations

import itertools
import logging
import math
import typing
from dataclasses import dataclass, field

import numpy as np

from netcrt.config import ModuleConfiguration
from netcrt.errors import InfeasibleConstraintError, LowAcceptanceError

LOGGER = logging.getLogger(__name__)

ASSIGNMENT_DTYPE = np.int8

DEFAULT_MAX_ATTEMPTS = 10000

ConstraintPredicate = typing.Callable[[np.ndarray], bool]


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
  '''Returns the random stream identified by the root `seed` and the path `keys`, e.g.
  `derive_rng(seed, r)` for the r-th Monte Carlo draw. Streams with distinct paths are
  statistically independent and each one only depends on its own path.'''
  return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)))


def as_assignment(z: typing.Iterable[int], n: typing.Optional[int] = None) -> np.ndarray:
  '''Converts `z` to a binary assignment vector, checking its length against `n` if provided'''
  vector = np.asarray(list(z) if not isinstance(z, np.ndarray) else z)

  if vector.ndim != 1:
    raise ValueError("An assignment must be a one-dimensional vector")

  if n is not None and len(vector) != n:
    raise ValueError(f"Assignment has length {len(vector)}, expected {n}")

  if not np.all((vector == 0) | (vector == 1)):
    raise ValueError("Assignment entries must be 0 or 1")

  return vector.astype(ASSIGNMENT_DTYPE)


class AssignmentMechanism:
  '''Base class for known assignment probabilities P_Z over {0, 1}^n'''

  @property
  def n(self) -> int:
    '''Number of units'''
    raise NotImplementedError

  def sample(self, rng: np.random.Generator) -> np.ndarray:
    '''Draws an assignment from P_Z'''
    raise NotImplementedError

  def in_support(self, z: np.ndarray) -> bool:
    '''Returns whether P_Z(z) > 0'''
    raise NotImplementedError

  def probability(self, z: np.ndarray) -> float:
    '''Returns P_Z(z)'''
    raise NotImplementedError

  def support_size(self) -> int:
    '''Returns the number of assignments with positive probability'''
    raise NotImplementedError

  def iter_support(self) -> typing.Iterator[np.ndarray]:
    '''Iterates over the assignments with positive probability'''
    raise NotImplementedError

  def sample_fixed(self, fixed: typing.Mapping[int, int], rng: np.random.Generator) -> np.ndarray:
    '''Draws from P_Z conditioned on `z_i == fixed[i]` for every key of `fixed`'''
    raise NotImplementedError

  def count_range(
    self,
    units: typing.Iterable[int],
    fixed: typing.Optional[typing.Mapping[int, int]] = None
    ) -> typing.Optional[typing.Tuple[int, int]]:
    '''Returns the smallest and largest number of treated units among `units` over the
    support points that agree with `fixed`, or `None` if no support point agrees with `fixed`.
    Every count between the two bounds is attainable.'''
    raise NotImplementedError

  def _check_fixed(self, fixed: typing.Mapping[int, int]):
    for i, v in fixed.items():
      if not 0 <= i < self.n:
        raise IndexError(f"Fixed unit {i} is outside [0, {self.n})")
      if v not in (0, 1):
        raise ValueError(f"Fixed value of unit {i} must be 0 or 1")


class Bernoulli(AssignmentMechanism):
  '''Independent coin flips, unit `i` being treated with probability `p_i`'''

  def __init__(self, probabilities: typing.Sequence[float]):
    p = np.asarray(probabilities, dtype=np.float64)

    if p.ndim != 1 or len(p) == 0:
      raise ValueError("Bernoulli designs need one probability per unit")

    if np.any(np.isnan(p)) or np.any(p < 0) or np.any(p > 1):
      raise ValueError("Bernoulli probabilities must lie in [0, 1]")

    self._p = p
    self._p.flags.writeable = False

  @staticmethod
  def uniform(n: int, p: float) -> Bernoulli:
    '''Returns the design treating each of `n` units independently with probability `p`'''
    if n < 1:
      raise ValueError("n must be a positive integer")
    return Bernoulli(np.full(n, p, dtype=np.float64))

  @property
  def n(self) -> int:
    return len(self._p)

  @property
  def probabilities(self) -> np.ndarray:
    '''Per-unit treatment probabilities'''
    return self._p

  def _forced(self) -> typing.Dict[int, int]:
    return {
      **{int(i): 1 for i in np.flatnonzero(self._p == 1)},
      **{int(i): 0 for i in np.flatnonzero(self._p == 0)}
    }

  def sample(self, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(self.n) < self._p).astype(ASSIGNMENT_DTYPE)

  def in_support(self, z: np.ndarray) -> bool:
    z = as_assignment(z, self.n)
    return not (np.any((self._p == 1) & (z == 0)) or np.any((self._p == 0) & (z == 1)))

  def probability(self, z: np.ndarray) -> float:
    z = as_assignment(z, self.n)
    return float(np.prod(np.where(z == 1, self._p, 1 - self._p)))

  def support_size(self) -> int:
    return 2 ** int(np.count_nonzero((self._p > 0) & (self._p < 1)))

  def iter_support(self) -> typing.Iterator[np.ndarray]:
    free = np.flatnonzero((self._p > 0) & (self._p < 1))
    base = (self._p == 1).astype(ASSIGNMENT_DTYPE)
    for values in itertools.product((0, 1), repeat=len(free)):
      z = base.copy()
      z[free] = values
      yield z

  def sample_fixed(self, fixed: typing.Mapping[int, int], rng: np.random.Generator) -> np.ndarray:
    self._check_fixed(fixed)

    for i, v in fixed.items():
      if (self._p[i] == 1 and v == 0) or (self._p[i] == 0 and v == 1):
        raise InfeasibleConstraintError(f"Unit {i} cannot be assigned {v} under the design")

    z = self.sample(rng)
    for i, v in fixed.items():
      z[i] = v
    return z

  def count_range(self, units, fixed=None):
    fixed = fixed or {}
    forced = self._forced()

    for i, v in fixed.items():
      if i in forced and forced[i] != v:
        return None

    low = high = 0
    for i in units:
      value = fixed.get(i, forced.get(i))
      if value is None:
        high += 1
      else:
        low += value
        high += value

    return (low, high)

  def __repr__(self) -> str:
    if np.all(self._p == self._p[0]):
      return f"Bernoulli(n={self.n}, p={self._p[0]})"
    return f"Bernoulli(n={self.n})"


class StratifiedComplete(AssignmentMechanism):
  '''Complete randomization within strata: exactly `treated[s]` units of stratum `s` are
  treated, uniformly over the patterns of the stratum and independently across strata'''

  def __init__(self, strata: typing.Sequence[int], treated: typing.Mapping[int, int]):
    labels = np.asarray(strata)

    if labels.ndim != 1 or len(labels) == 0:
      raise ValueError("Strata must be given as one label per unit")

    self._labels = labels
    self._units: typing.Dict[int, np.ndarray] = {}
    for label in sorted(set(labels.tolist())):
      self._units[label] = np.flatnonzero(labels == label)

    unknown = set(treated) - set(self._units)
    if unknown:
      raise ValueError(f"Treated counts given for unknown strata: {sorted(unknown)}")

    self._treated: typing.Dict[int, int] = {}
    for label, units in self._units.items():
      if label not in treated:
        raise ValueError(f"Missing treated count for stratum {label}")
      m = int(treated[label])
      if not 0 <= m <= len(units):
        raise ValueError(f"Treated count {m} of stratum {label} is outside [0, {len(units)}]")
      self._treated[label] = m

  @staticmethod
  def infer(strata: typing.Sequence[int], z: np.ndarray) -> StratifiedComplete:
    '''Returns the stratified design whose treated counts are those of the assignment `z`'''
    labels = np.asarray(strata)
    z = as_assignment(z, len(labels))
    counts = {label: int(z[labels == label].sum()) for label in set(labels.tolist())}
    return StratifiedComplete(labels, counts)

  @property
  def n(self) -> int:
    return len(self._labels)

  @property
  def strata(self) -> typing.Mapping[int, np.ndarray]:
    '''Units of each stratum'''
    return self._units

  @property
  def treated(self) -> typing.Mapping[int, int]:
    '''Number of treated units of each stratum'''
    return self._treated

  def sample(self, rng: np.random.Generator) -> np.ndarray:
    z = np.zeros(self.n, dtype=ASSIGNMENT_DTYPE)
    for label, units in self._units.items():
      z[rng.choice(units, size=self._treated[label], replace=False)] = 1
    return z

  def in_support(self, z: np.ndarray) -> bool:
    z = as_assignment(z, self.n)
    return all(int(z[units].sum()) == self._treated[label] for label, units in self._units.items())

  def probability(self, z: np.ndarray) -> float:
    if not self.in_support(z):
      return 0.0
    return 1.0 / self.support_size()

  def support_size(self) -> int:
    return math.prod(math.comb(len(units), self._treated[label]) for label, units in self._units.items())

  def iter_support(self) -> typing.Iterator[np.ndarray]:
    per_stratum = [
      itertools.combinations(units.tolist(), self._treated[label]) for label, units in self._units.items()
    ]
    for choice in itertools.product(*per_stratum):
      z = np.zeros(self.n, dtype=ASSIGNMENT_DTYPE)
      for treated_units in choice:
        z[list(treated_units)] = 1
      yield z

  def _free_units(self, label: int, fixed: typing.Mapping[int, int]) -> typing.Tuple[np.ndarray, int]:
    '''Returns the units of stratum `label` that are not fixed and the number of treatments
    left to place among them'''
    units = self._units[label]
    ones = sum(1 for i in units.tolist() if fixed.get(i) == 1)
    zeros = sum(1 for i in units.tolist() if fixed.get(i) == 0)
    m = self._treated[label]

    if ones > m or zeros > len(units) - m:
      raise InfeasibleConstraintError(
        f"Fixed pattern assigns {ones} treated and {zeros} control units to stratum {label} "
        f"of size {len(units)} with {m} treated"
      )

    free = np.asarray([i for i in units.tolist() if i not in fixed], dtype=np.int64)
    return free, m - ones

  def sample_fixed(self, fixed: typing.Mapping[int, int], rng: np.random.Generator) -> np.ndarray:
    self._check_fixed(fixed)

    z = np.zeros(self.n, dtype=ASSIGNMENT_DTYPE)
    for i, v in fixed.items():
      z[i] = v

    for label in self._units:
      free, remaining = self._free_units(label, fixed)
      if remaining > 0:
        z[rng.choice(free, size=remaining, replace=False)] = 1

    return z

  def count_range(self, units, fixed=None):
    fixed = fixed or {}
    members = set(units)

    low = high = 0
    for label in self._units:
      try:
        free, remaining = self._free_units(label, fixed)
      except InfeasibleConstraintError:
        return None

      fixed_ones = sum(1 for i in self._units[label].tolist() if i in members and fixed.get(i) == 1)
      inside = sum(1 for i in free.tolist() if i in members)
      outside = len(free) - inside

      low += fixed_ones + max(0, remaining - outside)
      high += fixed_ones + min(inside, remaining)

    return (low, high)

  def __repr__(self) -> str:
    return f"StratifiedComplete(n={self.n}, strata={len(self._units)})"


class CompleteRandomization(StratifiedComplete):
  '''Exactly `m` of `n` units are treated, uniformly over all patterns'''

  def __init__(self, n: int, m: int):
    if n < 2:
      raise ValueError("Complete randomization needs at least two units")
    if not 0 < m < n:
      raise ValueError(f"The number of treated units must lie strictly between 0 and {n}")
    super().__init__(np.zeros(n, dtype=np.int64), {0: m})
    self._m = m

  @property
  def m(self) -> int:
    '''Number of treated units'''
    return self._m

  def sample(self, rng: np.random.Generator) -> np.ndarray:
    z = np.zeros(self.n, dtype=ASSIGNMENT_DTYPE)
    z[rng.permutation(self.n)[:self._m]] = 1
    return z

  def __repr__(self) -> str:
    return f"CompleteRandomization(n={self.n}, m={self._m})"


#
# Operations
#

def sample(mech: AssignmentMechanism, rng: np.random.Generator) -> np.ndarray:
  '''Draws an assignment from `mech`'''
  return mech.sample(rng)


def in_support(mech: AssignmentMechanism, z: typing.Iterable[int]) -> bool:
  '''Returns whether `z` has positive probability under `mech`'''
  return mech.in_support(as_assignment(z, mech.n))


@dataclass(frozen=True)
class ConditionalDraw:
  '''An accepted draw and the number of proposals it took'''
  z: np.ndarray
  attempts: int


def sample_conditional(
  mech: AssignmentMechanism,
  pred: ConstraintPredicate,
  rng: np.random.Generator,
  max_attempts: int = DEFAULT_MAX_ATTEMPTS
  ) -> ConditionalDraw:
  '''Draws from `mech` restricted to `{z : pred(z)}` by rejection sampling. Raises
  `LowAcceptanceError` if no proposal is accepted within `max_attempts`.'''

  if max_attempts < 1:
    raise ValueError("max_attempts must be a positive integer")

  for attempt in range(1, max_attempts + 1):
    z = mech.sample(rng)
    if pred(z):
      return ConditionalDraw(z=z, attempts=attempt)

  raise LowAcceptanceError(max_attempts)


def sample_conditional_fixed_units(
  mech: AssignmentMechanism,
  fixed: typing.Mapping[int, int],
  rng: np.random.Generator
  ) -> np.ndarray:
  '''Draws directly from `mech` conditioned on the units of `fixed` taking the given values'''
  return mech.sample_fixed(fixed, rng)


#
# Configuration
#

MECHANISM_KINDS = ("complete", "bernoulli", "stratified")


def _decode_kind(value: str) -> str:
  if value not in MECHANISM_KINDS:
    raise ValueError(f"Invalid mechanism kind '{value}'. Expect one of: {', '.join(MECHANISM_KINDS)}.")
  return value


def _decode_probability(value: float) -> float:
  p = float(value)
  if not 0 <= p <= 1:
    raise ValueError("mechanism probability must lie in [0, 1]")
  return p


def _decode_optional_count(value: typing.Optional[int]) -> typing.Optional[int]:
  if value is None:
    return None
  count = int(value)
  if count < 0:
    raise ValueError("Treated counts must be non-negative")
  return count


def _decode_strata_treated(value: typing.Optional[typing.Mapping]) -> typing.Optional[typing.Dict[int, int]]:
  if value is None:
    return None
  if not isinstance(value, dict):
    raise ValueError("strata_treated must map stratum labels to treated counts")
  return {int(k): int(v) for k, v in value.items()}


@dataclass
class MechanismConfiguration(ModuleConfiguration):
  """Assignment mechanism configuration"""

  kind: str = field(default="complete", metadata={"decoder": _decode_kind})

  # treatment probability of Bernoulli designs
  probability: float = field(default=0.5, metadata={"decoder": _decode_probability})

  # number of treated units of complete designs, inferred from the data if None
  treated: typing.Optional[int] = field(default=None, metadata={"decoder": _decode_optional_count})

  # number of treated units per stratum, inferred from the data if None
  strata_treated: typing.Optional[typing.Dict[int, int]] = field(
    default=None,
    metadata={"decoder": _decode_strata_treated}
  )

  @classmethod
  def name(cls):
    return "mechanism"

  def build(
    self,
    n: int,
    observed: typing.Optional[np.ndarray] = None,
    strata: typing.Optional[typing.Sequence[int]] = None
    ) -> AssignmentMechanism:
    '''Returns the mechanism described by the configuration for `n` units. Treated counts
    that are not configured are inferred from the `observed` assignment, or set to half
    of the units (per stratum) when no assignment is available.'''

    if self.kind == "bernoulli":
      return Bernoulli.uniform(n, self.probability)

    if self.kind == "complete":
      m = self.treated
      if m is None:
        if observed is not None:
          m = int(np.sum(observed))
          LOGGER.warning("Number of treated units not configured, inferred %s from the data", m)
        else:
          m = n // 2
      return CompleteRandomization(n, m)

    if strata is None:
      raise ValueError("A stratified mechanism requires a stratum for every unit")

    labels = np.asarray(strata)
    if len(labels) != n:
      raise ValueError(f"Expected {n} strata labels, got {len(labels)}")

    if self.strata_treated is not None:
      return StratifiedComplete(labels, self.strata_treated)

    if observed is not None:
      LOGGER.warning("Treated counts per stratum not configured, inferred from the data")
      return StratifiedComplete.infer(labels, observed)

    return StratifiedComplete(labels, {s: int(np.sum(labels == s)) // 2 for s in set(labels.tolist())})
