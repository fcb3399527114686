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

'''Monte Carlo study of the size and power of the randomization test on simulated networks'''

from __future__ import annotations

import logging
import multiprocessing
import typing
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from netcrt.assignment import AssignmentMechanism, derive_rng
from netcrt.config import ModuleConfiguration
from netcrt.engine import TestSpec, multiprocessing_enabled, run_test
from netcrt.errors import DegenerateDesignError, LowAcceptanceError
from netcrt.exposure import HypothesisPair
from netcrt.focal import BicliqueConfiguration, FocalConfiguration, FocalMethod, design_from_config
from netcrt.graph import Network, erdos_renyi
from netcrt.stats import Statistic, simes

LOGGER = logging.getLogger(__name__)

SIMES_LABEL = "simes"

RESULT_COLUMNS = [
  "tau",
  "statistic",
  "method",
  "exposure_pair",
  "rejection_rate",
  "mean_focal_size",
  "mean_acceptance_rate",
  "degenerate_reps"
]

# substreams of a replication
_NETWORK_STREAM = 0
_ASSIGNMENT_STREAM = 1
_COMPLIANCE_STREAM = 2
_DESIGN_STREAM = 3
_NOISE_STREAM = 4
_TEST_STREAM = 5


class DgpKind(Enum):
  '''Outcome models'''

  # Y_i = D_i + tau sum_{j in P_i} D_j + noise
  dgp1 = "dgp1"

  # Y_i = D_i + tau g(sum_{j in P_i} D_j) + noise
  dgp2 = "dgp2"


@dataclass(frozen=True)
class DgpConfig:
  '''Outcome model and its spillover strength `tau`'''
  kind: DgpKind
  tau: float
  noise_sd: float = 1.0

  def __post_init__(self):
    if self.tau < 0:
      raise ValueError("tau must be non-negative")
    if self.noise_sd < 0:
      raise ValueError("noise_sd must be non-negative")


class ComplianceKind(Enum):
  '''Treatment take-up models'''
  perfect = "perfect"
  one_sided = "one_sided"


@dataclass(frozen=True)
class ComplianceModel:
  '''Take-up model: perfect compliance, or one-sided compliance where assigned units take
  up the treatment with probability `take_up` and others never do'''
  kind: ComplianceKind = ComplianceKind.perfect
  take_up: float = 1.0

  def __post_init__(self):
    if not 0 <= self.take_up <= 1:
      raise ValueError("take_up must lie in [0, 1]")

  @staticmethod
  def perfect() -> ComplianceModel:
    '''D = Z'''
    return ComplianceModel(ComplianceKind.perfect, 1.0)

  @staticmethod
  def one_sided(take_up: float) -> ComplianceModel:
    '''D_i = Z_i B_i with B_i ~ Bernoulli(take_up)'''
    return ComplianceModel(ComplianceKind.one_sided, take_up)


def g_dgp2(a: int) -> float:
  '''a for a <= 2, 1/a for a >= 3'''
  if a < 0:
    raise ValueError("g is defined on non-negative integers")
  return float(a) if a <= 2 else 1.0 / a


def _g_vector(counts: np.ndarray) -> np.ndarray:
  counts = np.asarray(counts, dtype=np.float64)
  return np.where(counts <= 2, counts, 1.0 / np.maximum(counts, 1.0))


def gen_outcomes(dgp: DgpConfig, D: typing.Sequence[int], net: Network, rng: np.random.Generator) -> np.ndarray:
  '''Generates outcomes from the take-up vector `D`'''

  D = np.asarray(D)
  if len(D) != net.n:
    raise ValueError(f"Expected {net.n} take-up values, got {len(D)}")

  treated_peers = net.peer_counts(D)

  if dgp.kind is DgpKind.dgp1:
    spillover = treated_peers.astype(np.float64)
  else:
    spillover = _g_vector(treated_peers)

  noise = rng.normal(0.0, dgp.noise_sd, net.n) if dgp.noise_sd > 0 else np.zeros(net.n)

  return D.astype(np.float64) + dgp.tau * spillover + noise


def apply_compliance(Z: typing.Sequence[int], model: ComplianceModel, rng: np.random.Generator) -> np.ndarray:
  '''Returns the take-up vector D of the assignment `Z`'''
  Z = np.asarray(Z)
  if model.kind is ComplianceKind.perfect:
    return Z.copy()
  return (Z * (rng.random(len(Z)) < model.take_up)).astype(Z.dtype)


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
  '''Parameters shared by every replication of a rejection frequency experiment'''
  n: int
  network_p: float
  mech: AssignmentMechanism
  pair: HypothesisPair
  focal_config: FocalConfiguration
  biclique_config: BicliqueConfiguration
  statistics: typing.Tuple[Statistic, ...]
  tau_grid: typing.Tuple[float, ...]
  dgp_kind: DgpKind
  noise_sd: float
  compliance: ComplianceModel
  draws: int
  alpha: float
  seed: int
  max_attempts: int = 10000


@dataclass
class _Replication:
  # rejected[t][k]: decision at tau_grid[t] for statistic k, the last one being Simes
  rejected: np.ndarray
  degenerate: np.ndarray
  focal_size: typing.Optional[int]
  acceptance_rates: np.ndarray


def _run_replication(task) -> _Replication:
  spec, rep = task

  labels = len(spec.statistics) + 1
  rejected = np.zeros((len(spec.tau_grid), labels), dtype=bool)
  degenerate = np.zeros(len(spec.tau_grid), dtype=bool)
  acceptance_rates = np.full(len(spec.tau_grid), np.nan)

  net = erdos_renyi(spec.n, spec.network_p, derive_rng(spec.seed, rep, _NETWORK_STREAM))
  Z = spec.mech.sample(derive_rng(spec.seed, rep, _ASSIGNMENT_STREAM))
  D = apply_compliance(Z, spec.compliance, derive_rng(spec.seed, rep, _COMPLIANCE_STREAM))

  try:
    design = design_from_config(
      spec.pair, Z, net, spec.mech, derive_rng(spec.seed, rep, _DESIGN_STREAM),
      spec.focal_config, spec.biclique_config
    )
  except DegenerateDesignError as e:
    LOGGER.warning("Replication %s has no usable focal design: %s", rep, e)
    degenerate[:] = True
    return _Replication(rejected, degenerate, None, acceptance_rates)

  test_seed = int(np.random.SeedSequence(spec.seed, spawn_key=(rep, _TEST_STREAM)).generate_state(1)[0])
  test_spec = TestSpec(
    design=design,
    statistics=spec.statistics,
    draws=spec.draws,
    seed=test_seed,
    max_attempts=spec.max_attempts
  )

  for t, tau in enumerate(spec.tau_grid):
    # identical noise across the tau grid
    Y = gen_outcomes(DgpConfig(spec.dgp_kind, tau, spec.noise_sd), D, net, derive_rng(spec.seed, rep, _NOISE_STREAM))

    try:
      result = run_test(test_spec, Y, Z, net)
    except LowAcceptanceError as e:
      LOGGER.warning("Replication %s at tau=%s: %s", rep, tau, e)
      degenerate[t] = True
      continue

    p_values = [r.p_value for r in result.statistics]
    rejected[t, :-1] = [p <= spec.alpha for p in p_values]
    rejected[t, -1] = simes(p_values, spec.alpha).reject
    acceptance_rates[t] = result.acceptance_rate

  return _Replication(rejected, degenerate, design.size, acceptance_rates)


def rejection_frequency_experiment(
  spec: ExperimentSpec,
  reps: int,
  threads: int = 1,
  progress_callback=lambda _: None
  ) -> pd.DataFrame:
  '''Estimates, for each tau of the grid and each statistic (and their Simes combination), the
  frequency with which the test rejects at level alpha over `reps` replications, each with a
  fresh network, assignment, take-up and outcomes. Replications without a usable design count
  as non-rejections and are reported in `degenerate_reps`.'''

  if reps < 1:
    raise ValueError("reps must be a positive integer")

  tasks = [(spec, rep) for rep in range(reps)]
  replications: typing.List[_Replication] = []

  progress_callback(0)

  if multiprocessing_enabled(threads) and reps > 1:
    with multiprocessing.Pool(threads) as pool:
      for replication in pool.imap(_run_replication, tasks):
        replications.append(replication)
        progress_callback(len(replications) / reps)
  else:
    for task in tasks:
      replications.append(_run_replication(task))
      progress_callback(len(replications) / reps)

  rejected = np.stack([r.rejected for r in replications])
  degenerate = np.stack([r.degenerate for r in replications])
  acceptance = np.stack([r.acceptance_rates for r in replications])
  focal_sizes = np.asarray([np.nan if r.focal_size is None else r.focal_size for r in replications], dtype=np.float64)

  labels = [s.name for s in spec.statistics] + [SIMES_LABEL]

  rows = []
  for t, tau in enumerate(spec.tau_grid):
    valid = ~degenerate[:, t]
    for k, label in enumerate(labels):
      rows.append({
        "tau": tau,
        "statistic": label,
        "method": FocalMethod(spec.focal_config.method).value,
        "exposure_pair": spec.pair.name,
        "rejection_rate": float(rejected[:, t, k].mean()),
        "mean_focal_size": float(focal_sizes[valid].mean()) if valid.any() else np.nan,
        "mean_acceptance_rate": float(acceptance[valid, t].mean()) if valid.any() else np.nan,
        "degenerate_reps": int(degenerate[:, t].sum())
      })

  return pd.DataFrame(rows, columns=RESULT_COLUMNS)


#
# Configuration
#

def _decode_dgp(value: str) -> DgpKind:
  try:
    return DgpKind(value)
  except ValueError as e:
    raise ValueError(f"Invalid dgp '{value}'. Expect one of: {', '.join(k.value for k in DgpKind)}.") from e


def _decode_tau_grid(value: typing.Sequence[float]) -> typing.List[float]:
  if isinstance(value, str) or not isinstance(value, (list, tuple)) or len(value) == 0:
    raise ValueError("tau_grid must be a nonempty list of numbers")
  grid = [float(v) for v in value]
  if any(tau < 0 for tau in grid):
    raise ValueError("tau values must be non-negative")
  return grid


def _decode_non_negative(value: float) -> float:
  number = float(value)
  if number < 0:
    raise ValueError("Expected a non-negative number")
  return number


def _decode_compliance(value: str) -> ComplianceKind:
  try:
    return ComplianceKind(value)
  except ValueError as e:
    raise ValueError(f"Invalid compliance '{value}'. Expect one of: {', '.join(k.value for k in ComplianceKind)}.") from e


def _decode_take_up(value: float) -> float:
  take_up = float(value)
  if not 0 <= take_up <= 1:
    raise ValueError("take_up must lie in [0, 1]")
  return take_up


def _decode_reps(value: int) -> int:
  reps = int(value)
  if reps < 1:
    raise ValueError("reps must be a positive integer")
  return reps


@dataclass
class SimulationConfiguration(ModuleConfiguration):
  """Simulation parameters"""

  dgp: DgpKind = field(default="dgp1", metadata={"decoder": _decode_dgp})

  tau_grid: typing.List[float] = field(default_factory=lambda: [0.0, 1.0, 2.0], metadata={"decoder": _decode_tau_grid})

  noise_sd: float = field(default=1.0, metadata={"decoder": _decode_non_negative})

  compliance: ComplianceKind = field(default="perfect", metadata={"decoder": _decode_compliance})

  # take-up probability of assigned units under one-sided compliance
  take_up: float = field(default=0.8, metadata={"decoder": _decode_take_up})

  reps: int = field(default=200, metadata={"decoder": _decode_reps})

  @classmethod
  def name(cls):
    return "simulation"

  def compliance_model(self) -> ComplianceModel:
    '''Returns the configured take-up model'''
    if ComplianceKind(self.compliance) is ComplianceKind.perfect:
      return ComplianceModel.perfect()
    return ComplianceModel.one_sided(self.take_up)
