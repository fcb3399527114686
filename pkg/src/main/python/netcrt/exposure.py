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

'''Exposure mappings, coarsening maps and the sets of imputable exposure values'''

from __future__ import annotations

import logging
import typing
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from netcrt.assignment import AssignmentMechanism, as_assignment, derive_rng
from netcrt.config import ModuleConfiguration
from netcrt.errors import SpecificationError
from netcrt.graph import Network

LOGGER = logging.getLogger(__name__)

ExposureValue = typing.Tuple[int, ...]

# designs with at most this many support points are enumerated when a range has no closed form
RANGE_ENUMERATION_LIMIT = 4096

DEFAULT_RANGE_DRAWS = 2000


class ExposureMapping:
  '''Base class for exposure mappings E: (i, z) -> E_i(z). Subclasses that define `NAME`
  are registered and can be retrieved with `get_exposure_by_name()`.'''

  NAME: typing.Optional[str] = None

  _all_exposures: typing.Dict[str, typing.Type[ExposureMapping]] = dict()

  def __init_subclass__(cls, **kwargs):
    super().__init_subclass__(**kwargs)
    if cls.NAME is not None:
      ExposureMapping._all_exposures[cls.NAME] = cls

  @staticmethod
  def get_exposure_by_name(name: str) -> ExposureMapping:
    '''Returns an instance of the built-in exposure mapping called `name`'''
    exposure_class = ExposureMapping._all_exposures.get(name)
    if exposure_class is None:
      raise ValueError(
        f"Unknown exposure '{name}'. Expect one of: {', '.join(sorted(ExposureMapping._all_exposures))}."
      )
    return exposure_class()

  @staticmethod
  def names() -> typing.List[str]:
    '''Returns the names of the registered exposure mappings'''
    return sorted(ExposureMapping._all_exposures)

  @property
  def name(self) -> str:
    '''Name of the mapping'''
    return self.NAME or type(self).__name__

  def evaluate(self, i: int, z: np.ndarray, net: Network) -> ExposureValue:
    '''Returns E_i(z). Arguments are not validated.'''
    raise NotImplementedError

  def evaluate_units(self, z: np.ndarray, net: Network, units: typing.Optional[typing.Sequence[int]] = None) -> typing.List[ExposureValue]:
    '''Returns E_i(z) for each of `units` (all units if `None`)'''
    units = range(net.n) if units is None else units
    return [self.evaluate(i, z, net) for i in units]

  def dependence(self, i: int, net: Network) -> typing.FrozenSet[int]:
    '''Returns the units whose treatment E_i may depend on'''
    return net.closed_neighborhood(i)

  def value_range(self, i: int, net: Network, mech: AssignmentMechanism) -> typing.Optional[typing.Set[ExposureValue]]:
    '''Returns the values E_i takes over the support of `mech`, or `None` if no closed form is available'''
    return None

  def fixed_pattern(self, i: int, value: ExposureValue, net: Network) -> typing.Optional[typing.Dict[int, int]]:
    '''Returns the treatment pattern `{j: z_j}` such that E_i(z) == value exactly when z agrees
    with the pattern, or `None` if the level set is not of that form'''
    return None

  def __eq__(self, other) -> bool:
    return self is other or (type(self) is type(other) and self.NAME is not None)

  def __hash__(self) -> int:
    return hash(type(self))

  def __repr__(self) -> str:
    return self.name


def _peer_any(counts: np.ndarray) -> np.ndarray:
  return (counts > 0).astype(np.int64)


class ConstantExposure(ExposureMapping):
  '''E_i(z) = 0: no effect of treatment at all'''

  NAME = "constant"

  def evaluate(self, i, z, net):
    return (0,)

  def evaluate_units(self, z, net, units=None):
    count = net.n if units is None else len(units)
    return [(0,)] * count

  def dependence(self, i, net):
    return frozenset()

  def value_range(self, i, net, mech):
    return {(0,)}

  def fixed_pattern(self, i, value, net):
    return {} if value == (0,) else None


class OwnExposure(ExposureMapping):
  '''E_i(z) = z_i: no interference'''

  NAME = "own"

  def evaluate(self, i, z, net):
    return (int(z[i]),)

  def evaluate_units(self, z, net, units=None):
    own = np.asarray(z if units is None else np.asarray(z)[np.asarray(units, dtype=np.int64)])
    return [(v,) for v in own.tolist()]

  def dependence(self, i, net):
    return frozenset((i,))

  def value_range(self, i, net, mech):
    low, high = mech.count_range((i,))
    return {(v,) for v in range(low, high + 1)}

  def fixed_pattern(self, i, value, net):
    return {i: value[0]}


class AnyNeighborhoodExposure(ExposureMapping):
  '''E_i(z) = max of z_j over the closed neighborhood of i'''

  NAME = "any_neighborhood"

  def evaluate(self, i, z, net):
    return (int(z[i] or any(z[j] for j in net.peer_list(i))),)

  def evaluate_units(self, z, net, units=None):
    own = np.asarray(z, dtype=np.int64) if units is None else np.asarray(z, dtype=np.int64)[np.asarray(units, dtype=np.int64)]
    any_peer = _peer_any(net.peer_counts(z, units))
    return [(v,) for v in np.maximum(own, any_peer).tolist()]

  def value_range(self, i, net, mech):
    low, high = mech.count_range(net.closed_neighborhood(i))
    values = set()
    if low == 0:
      values.add((0,))
    if high >= 1:
      values.add((1,))
    return values

  def fixed_pattern(self, i, value, net):
    if value == (0,):
      return {j: 0 for j in net.closed_neighborhood(i)}
    if net.degree(i) == 0:
      return {i: 1}
    return None


class OwnAnyPeerExposure(ExposureMapping):
  '''E_i(z) = (z_i, max of z_j over the peers of i)'''

  NAME = "own_any_peer"

  def evaluate(self, i, z, net):
    return (int(z[i]), int(any(z[j] for j in net.peer_list(i))))

  def evaluate_units(self, z, net, units=None):
    own = np.asarray(z) if units is None else np.asarray(z)[np.asarray(units, dtype=np.int64)]
    any_peer = _peer_any(net.peer_counts(z, units))
    return list(zip(own.astype(np.int64).tolist(), any_peer.tolist()))

  def value_range(self, i, net, mech):
    values = set()
    for own in (0, 1):
      counts = mech.count_range(net.peer_list(i), {i: own})
      if counts is None:
        continue
      low, high = counts
      if low == 0:
        values.add((own, 0))
      if high >= 1:
        values.add((own, 1))
    return values

  def fixed_pattern(self, i, value, net):
    own, any_peer = value
    peers = net.peer_list(i)
    if any_peer == 0:
      return {i: own, **{j: 0 for j in peers}}
    if len(peers) == 1:
      return {i: own, peers[0]: 1}
    return None


class OwnPeerCountExposure(ExposureMapping):
  '''E_i(z) = (z_i, number of treated peers of i)'''

  NAME = "own_peer_count"

  def evaluate(self, i, z, net):
    return (int(z[i]), int(sum(int(z[j]) for j in net.peer_list(i))))

  def evaluate_units(self, z, net, units=None):
    own = np.asarray(z) if units is None else np.asarray(z)[np.asarray(units, dtype=np.int64)]
    return list(zip(own.astype(np.int64).tolist(), net.peer_counts(z, units).tolist()))

  def value_range(self, i, net, mech):
    values = set()
    for own in (0, 1):
      counts = mech.count_range(net.peer_list(i), {i: own})
      if counts is None:
        continue
      values.update((own, k) for k in range(counts[0], counts[1] + 1))
    return values

  def fixed_pattern(self, i, value, net):
    own, count = value
    peers = net.peer_list(i)
    if count == 0:
      return {i: own, **{j: 0 for j in peers}}
    if count == len(peers):
      return {i: own, **{j: 1 for j in peers}}
    return None


class IdentityExposure(ExposureMapping):
  '''E_i(z) = z: arbitrary interference'''

  NAME = "identity"

  def evaluate(self, i, z, net):
    return tuple(int(v) for v in z)

  def evaluate_units(self, z, net, units=None):
    value = tuple(int(v) for v in z)
    count = net.n if units is None else len(units)
    return [value] * count

  def dependence(self, i, net):
    return frozenset(range(net.n))

  def fixed_pattern(self, i, value, net):
    return dict(enumerate(value))


class CustomExposure(ExposureMapping):
  '''Exposure mapping given by a user-supplied `rule(i, z, net)` returning a tuple of integers.
  `dependence(i, net)` must return every unit whose treatment the rule may read. Both must be
  module-level functions for the mapping to be usable by worker processes.'''

  def __init__(
    self,
    rule: typing.Callable[[int, np.ndarray, Network], ExposureValue],
    dependence: typing.Callable[[int, Network], typing.Iterable[int]],
    name: str = "custom"
    ):
    self._rule = rule
    self._dependence = dependence
    self._name = name

  @property
  def name(self) -> str:
    return self._name

  def evaluate(self, i, z, net):
    return tuple(int(v) for v in self._rule(i, z, net))

  def dependence(self, i, net):
    return frozenset(self._dependence(i, net))

  def __eq__(self, other) -> bool:
    return isinstance(other, CustomExposure) and (self._rule, self._dependence) == (other._rule, other._dependence)

  def __hash__(self) -> int:
    return hash((self._rule, self._dependence))


#
# Coarsening maps
#

def identity_map(value: ExposureValue) -> ExposureValue:
  '''Maps a value onto itself'''
  return value


def constant_map(_value: ExposureValue) -> ExposureValue:
  '''Maps every value onto the constant exposure'''
  return (0,)


def first_component(value: ExposureValue) -> ExposureValue:
  '''(a, ...) -> (a,)'''
  return (value[0],)


def max_component(value: ExposureValue) -> ExposureValue:
  '''(a, b) -> (max(a, b),)'''
  return (max(value),)


def any_peer_count(value: ExposureValue) -> ExposureValue:
  '''(a, k) -> (a, 1 if k > 0 else 0)'''
  return (value[0], int(value[1] > 0))


def any_treated_count(value: ExposureValue) -> ExposureValue:
  '''(a, k) -> (1 if a or k > 0 else 0,)'''
  return (int(value[0] > 0 or value[1] > 0),)


class CoarseningMap:
  '''Map from finer exposure values onto coarser ones'''

  def __init__(self, fn: typing.Callable[[ExposureValue], ExposureValue], name: typing.Optional[str] = None):
    self._fn = fn
    self._name = name or getattr(fn, "__name__", "custom")

  @staticmethod
  def identity() -> CoarseningMap:
    '''Returns the identity map'''
    return CoarseningMap(identity_map)

  @property
  def name(self) -> str:
    '''Name of the map'''
    return self._name

  def __call__(self, value: ExposureValue) -> ExposureValue:
    return tuple(self._fn(value))

  def __eq__(self, other) -> bool:
    return isinstance(other, CoarseningMap) and self._fn == other._fn

  def __hash__(self) -> int:
    return hash(self._fn)

  def __repr__(self) -> str:
    return f"CoarseningMap({self._name})"


class OrderRule(Enum):
  '''Orderings of the imputable exposure values of a unit'''

  # tuple order, own treatment first: (0,1) < (1,0) < (1,1) for (own, any peer)
  lexicographic = "lexicographic"

  # tuple order with the components reversed: (1,0) < (0,1) < (1,1)
  peer_first = "peer_first"

  def sort_key(self, value: ExposureValue) -> ExposureValue:
    '''Returns the key used to sort `value`'''
    if self is OrderRule.peer_first:
      return tuple(reversed(value))
    return value


@dataclass(frozen=True)
class HypothesisPair:
  '''Null exposure mapping `e0`, finer exposure mapping `e1` and the map of `e1` values onto `e0` values'''
  e0: ExposureMapping
  e1: ExposureMapping
  coarsen: CoarseningMap
  order: OrderRule = OrderRule.lexicographic

  @property
  def name(self) -> str:
    '''Label of the pair'''
    return f"{self.e0.name}/{self.e1.name}"


_BUILTIN_COARSENINGS: typing.Dict[typing.Tuple[str, str], typing.Callable[[ExposureValue], ExposureValue]] = {
  ("own", "own_any_peer"): first_component,
  ("own", "own_peer_count"): first_component,
  ("any_neighborhood", "own_any_peer"): max_component,
  ("any_neighborhood", "own_peer_count"): any_treated_count,
  ("own_any_peer", "own_peer_count"): any_peer_count,
}


def builtin_pairs() -> typing.List[typing.Tuple[str, str]]:
  '''Returns the (e0, e1) names accepted by `builtin_pair()`'''
  pairs = list(_BUILTIN_COARSENINGS)
  pairs.extend(("constant", e1) for e1 in ExposureMapping.names() if e1 != "constant")
  return sorted(pairs)


def builtin_pair(e0: str, e1: str, order: typing.Union[str, OrderRule] = OrderRule.lexicographic) -> HypothesisPair:
  '''Returns the hypothesis pair of built-in exposures called `e0` and `e1`'''

  null_exposure = ExposureMapping.get_exposure_by_name(e0)
  alt_exposure = ExposureMapping.get_exposure_by_name(e1)

  if e0 == "constant" and e1 != "constant":
    coarsen = constant_map
  else:
    coarsen = _BUILTIN_COARSENINGS.get((e0, e1))

  if coarsen is None:
    valid = ", ".join(f"{a}/{b}" for a, b in builtin_pairs())
    raise ValueError(f"No built-in coarsening from '{e1}' to '{e0}'. Expect one of: {valid}.")

  try:
    order = OrderRule(order)
  except ValueError as e:
    raise ValueError(f"Invalid order '{order}'. Expect one of: {', '.join(r.value for r in OrderRule)}.") from e

  return HypothesisPair(null_exposure, alt_exposure, CoarseningMap(coarsen), order)


#
# Operations
#

def _check_unit(i: int, net: Network):
  if not 0 <= i < net.n:
    raise IndexError(f"Unit {i} is outside [0, {net.n})")


def eval_exposure(exposure: ExposureMapping, i: int, z: typing.Iterable[int], net: Network) -> ExposureValue:
  '''Returns E_i(z)'''
  _check_unit(i, net)
  return exposure.evaluate(i, as_assignment(z, net.n), net)


@dataclass(frozen=True)
class ValueRange:
  '''Values attained by an exposure mapping at a unit. `exact` is `False` when the values
  were collected from random draws and may miss rare values.'''
  values: typing.FrozenSet[ExposureValue]
  exact: bool = True

  def __contains__(self, value) -> bool:
    return value in self.values

  def __len__(self) -> int:
    return len(self.values)


def _enumerated_or_sampled(
  exposure: ExposureMapping,
  units: typing.Sequence[int],
  net: Network,
  mech: AssignmentMechanism,
  rng: typing.Optional[np.random.Generator],
  draws: int
  ) -> typing.Dict[int, ValueRange]:

  exact = mech.support_size() <= RANGE_ENUMERATION_LIMIT

  if exact:
    assignments = mech.iter_support()
  else:
    rng = rng if rng is not None else derive_rng(0)
    assignments = (mech.sample(rng) for _ in range(draws))
    LOGGER.debug("Approximating the range of %s from %s draws", exposure.name, draws)

  values: typing.Dict[int, typing.Set[ExposureValue]] = {i: set() for i in units}
  for z in assignments:
    for i, v in zip(units, exposure.evaluate_units(z, net, units)):
      values[i].add(v)

  return {i: ValueRange(frozenset(v), exact) for i, v in values.items()}


def realizable_range(
  exposure: ExposureMapping,
  i: int,
  net: Network,
  mech: AssignmentMechanism,
  rng: typing.Optional[np.random.Generator] = None,
  draws: int = DEFAULT_RANGE_DRAWS
  ) -> ValueRange:
  '''Returns the values E_i takes over the support of `mech`. Mappings without a closed form
  are handled by enumerating small supports, and by drawing `draws` assignments otherwise.'''
  _check_unit(i, net)
  values = exposure.value_range(i, net, mech)
  if values is not None:
    return ValueRange(frozenset(values))
  return _enumerated_or_sampled(exposure, [i], net, mech, rng, draws)[i]


def _realizable_ranges(pair_e1: ExposureMapping, net: Network, mech: AssignmentMechanism, rng, draws) -> typing.List[ValueRange]:
  closed_form = [pair_e1.value_range(i, net, mech) for i in range(net.n)]
  missing = [i for i, v in enumerate(closed_form) if v is None]
  sampled = _enumerated_or_sampled(pair_e1, missing, net, mech, rng, draws) if missing else {}
  return [ValueRange(frozenset(v)) if v is not None else sampled[i] for i, v in enumerate(closed_form)]


def _tilde_from_range(pair: HypothesisPair, i: int, Z: np.ndarray, net: Network, value_range: ValueRange) -> typing.Tuple[ExposureValue, ...]:
  null_value = pair.e0.evaluate(i, Z, net)
  observed = pair.e1.evaluate(i, Z, net)

  if pair.coarsen(observed) != null_value:
    raise SpecificationError(
      f"Coarsening of {pair.e1.name} value {observed} is {pair.coarsen(observed)} "
      f"but {pair.e0.name} value of unit {i} is {null_value}"
    )

  values = {v for v in value_range.values if pair.coarsen(v) == null_value}

  if observed not in values:
    if value_range.exact:
      raise SpecificationError(f"Observed exposure {observed} of unit {i} is outside the range of {pair.e1.name}")
    values.add(observed)

  return tuple(sorted(values, key=pair.order.sort_key))


def tilde_set(
  pair: HypothesisPair,
  i: int,
  Z: typing.Iterable[int],
  net: Network,
  mech: AssignmentMechanism,
  rng: typing.Optional[np.random.Generator] = None
  ) -> typing.Tuple[ExposureValue, ...]:
  '''Returns the ordered values of E¹_i that map onto the observed null exposure E⁰_i(Z),
  i.e. the exposures under which the outcome of unit i is imputable'''
  _check_unit(i, net)
  Z = as_assignment(Z, net.n)
  return _tilde_from_range(pair, i, Z, net, realizable_range(pair.e1, i, net, mech, rng))


def tilde_sets(
  pair: HypothesisPair,
  Z: typing.Iterable[int],
  net: Network,
  mech: AssignmentMechanism,
  rng: typing.Optional[np.random.Generator] = None,
  draws: int = DEFAULT_RANGE_DRAWS
  ) -> typing.List[typing.Tuple[ExposureValue, ...]]:
  '''Returns `tilde_set()` for every unit, sharing the draws used for ranges without a closed form'''
  Z = as_assignment(Z, net.n)
  ranges = _realizable_ranges(pair.e1, net, mech, rng, draws)
  return [_tilde_from_range(pair, i, Z, net, ranges[i]) for i in range(net.n)]


def candidate_focals(
  pair: HypothesisPair,
  Z: typing.Iterable[int],
  net: Network,
  mech: AssignmentMechanism,
  kappa: int,
  tilde: typing.Optional[typing.Sequence[typing.Tuple[ExposureValue, ...]]] = None
  ) -> typing.List[int]:
  '''Returns, in increasing order, the units with exactly `kappa` imputable exposure values.
  Precomputed `tilde_sets()` may be passed as `tilde`.'''
  if kappa < 2:
    raise ValueError("kappa must be at least 2")
  if tilde is None:
    tilde = tilde_sets(pair, Z, net, mech)
  return [i for i, values in enumerate(tilde) if len(values) == kappa]


@dataclass(frozen=True)
class CoarsenessCheck:
  '''Outcome of `check_coarseness()`: the first violation found, if any'''
  passed: bool
  unit: typing.Optional[int] = None
  assignment: typing.Optional[np.ndarray] = None

  def __bool__(self) -> bool:
    return self.passed


def check_coarseness(
  pair: HypothesisPair,
  net: Network,
  mech: AssignmentMechanism,
  trials: int,
  rng: np.random.Generator
  ) -> CoarsenessCheck:
  '''Checks that coarsen(E¹_i(z)) == E⁰_i(z) for every unit over `trials` draws from `mech`'''

  if trials < 1:
    raise ValueError("trials must be a positive integer")

  for _ in range(trials):
    z = mech.sample(rng)
    null_values = pair.e0.evaluate_units(z, net)
    alt_values = pair.e1.evaluate_units(z, net)
    for i, (e0_value, e1_value) in enumerate(zip(null_values, alt_values)):
      if pair.coarsen(e1_value) != e0_value:
        LOGGER.debug("Coarseness violated at unit %s", i)
        return CoarsenessCheck(False, i, z)

  return CoarsenessCheck(True)


#
# Configuration
#

def _decode_exposure(value: str) -> str:
  ExposureMapping.get_exposure_by_name(value)
  return value


def _decode_order(value: str) -> OrderRule:
  try:
    return OrderRule(value)
  except ValueError as e:
    raise ValueError(f"Invalid order '{value}'. Expect one of: {', '.join(r.value for r in OrderRule)}.") from e


@dataclass
class HypothesisConfiguration(ModuleConfiguration):
  """Exposure mappings of the null hypothesis"""

  # null exposure mapping
  e0: str = field(default="own", metadata={"decoder": _decode_exposure})

  # finer exposure mapping
  e1: str = field(default="own_any_peer", metadata={"decoder": _decode_exposure})

  # ordering of the imputable values of each unit
  order: OrderRule = field(default="lexicographic", metadata={"decoder": _decode_order})

  @classmethod
  def name(cls):
    return "hypothesis"

  def build(self) -> HypothesisPair:
    '''Returns the configured hypothesis pair'''
    return builtin_pair(self.e0, self.e1, self.order)
