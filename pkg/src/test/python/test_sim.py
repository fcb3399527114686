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

"""Unit tests for the simulation harness"""

# pylint: disable=R0201,C0115,C0116,W0212

import math
import multiprocessing
import os
import unittest

import numpy as np
import pandas as pd

from netcrt.assignment import CompleteRandomization, derive_rng
from netcrt.exposure import builtin_pair
from netcrt.focal import BicliqueConfiguration, FocalConfiguration, mis_design
from netcrt.graph import Network, erdos_renyi
from netcrt.sim import (RESULT_COLUMNS, ComplianceKind, ComplianceModel, DgpConfig, DgpKind, ExperimentSpec,
                        SimulationConfiguration, apply_compliance, g_dgp2, gen_outcomes,
                        rejection_frequency_experiment)
from netcrt.stats import Statistic

ACCEPTANCE = os.getenv("NETCRT_ACCEPTANCE")


def _experiment(n=40, tau_grid=(0.0, 4.0), compliance=None, draws=40, statistics=("kw", "acd"), seed=1):
  return ExperimentSpec(
    n=n,
    network_p=3 / n,
    mech=CompleteRandomization(n, n // 2),
    pair=builtin_pair("own", "own_any_peer"),
    focal_config=FocalConfiguration.parse({}),
    biclique_config=BicliqueConfiguration.parse({}),
    statistics=tuple(Statistic.get_statistic_by_name(s) for s in statistics),
    tau_grid=tuple(tau_grid),
    dgp_kind=DgpKind.dgp1,
    noise_sd=1.0,
    compliance=compliance or ComplianceModel.perfect(),
    draws=draws,
    alpha=0.05,
    seed=seed
  )


class OutcomeModelTest(unittest.TestCase):

  def test_g(self):
    self.assertEqual(g_dgp2(0), 0.0)
    self.assertEqual(g_dgp2(2), 2.0)
    self.assertAlmostEqual(g_dgp2(3), 1 / 3)
    self.assertAlmostEqual(g_dgp2(5), 1 / 5)
    with self.assertRaises(ValueError):
      g_dgp2(-1)

  def test_noiseless_outcomes(self):
    net = Network.from_edges(4, [(0, 1), (0, 2), (0, 3)], undirected=True)
    d = np.array([0, 1, 1, 1])

    y = gen_outcomes(DgpConfig(DgpKind.dgp1, 2.0, 0.0), d, net, derive_rng(1))
    self.assertListEqual(y.tolist(), [6.0, 1.0, 1.0, 1.0])

    y = gen_outcomes(DgpConfig(DgpKind.dgp2, 2.0, 0.0), d, net, derive_rng(1))
    self.assertAlmostEqual(y[0], 2 / 3)

  def test_noise(self):
    net = Network.empty(2000)
    y = gen_outcomes(DgpConfig(DgpKind.dgp1, 1.0, 2.0), np.zeros(2000, dtype=np.int8), net, derive_rng(4))
    self.assertAlmostEqual(float(np.std(y)), 2.0, delta=0.15)

  def test_bad_config(self):
    with self.assertRaises(ValueError):
      DgpConfig(DgpKind.dgp1, -1.0)
    with self.assertRaises(ValueError):
      gen_outcomes(DgpConfig(DgpKind.dgp1, 1.0), [0, 1], Network.empty(3), derive_rng(1))


class ComplianceTest(unittest.TestCase):

  def test_perfect(self):
    z = np.array([1, 0, 1], dtype=np.int8)
    self.assertListEqual(apply_compliance(z, ComplianceModel.perfect(), derive_rng(1)).tolist(), [1, 0, 1])

  def test_one_sided(self):
    z = np.ones(5000, dtype=np.int8)
    z[:1000] = 0
    d = apply_compliance(z, ComplianceModel.one_sided(0.8), derive_rng(2))

    self.assertFalse(np.any(d[:1000]))
    self.assertAlmostEqual(float(d[1000:].mean()), 0.8, delta=0.03)

  def test_take_up(self):
    with self.assertRaises(ValueError):
      ComplianceModel.one_sided(1.2)


class RejectionFrequencyTest(unittest.TestCase):

  def test_table(self):
    table = rejection_frequency_experiment(_experiment(), reps=4)

    self.assertListEqual(list(table.columns), RESULT_COLUMNS)
    self.assertEqual(len(table), 2 * 3)
    self.assertListEqual(sorted(set(table["statistic"])), ["acd", "kw", "simes"])
    self.assertTrue(((table["rejection_rate"] >= 0) & (table["rejection_rate"] <= 1)).all())
    self.assertTrue((table["method"] == "mis").all())
    self.assertTrue((table["exposure_pair"] == "own/own_any_peer").all())

  def test_reproducible(self):
    a = rejection_frequency_experiment(_experiment(seed=9), reps=3)
    b = rejection_frequency_experiment(_experiment(seed=9), reps=3)
    pd.testing.assert_frame_equal(a, b)

  def test_threads(self):
    a = rejection_frequency_experiment(_experiment(seed=4), reps=4, threads=1)
    b = rejection_frequency_experiment(_experiment(seed=4), reps=4, threads=2)
    pd.testing.assert_frame_equal(a, b)

  def test_progress(self):
    progress = []
    rejection_frequency_experiment(_experiment(), reps=3, progress_callback=progress.append)
    self.assertEqual(progress[0], 0)
    self.assertEqual(progress[-1], 1)

  def test_bad_reps(self):
    with self.assertRaises(ValueError):
      rejection_frequency_experiment(_experiment(), reps=0)

  @unittest.skipUnless(ACCEPTANCE, "long-running acceptance check")
  def test_size_and_power(self):
    spec = _experiment(n=200, tau_grid=(0.0, 2.0), draws=500, statistics=("kw", "acd", "olsf"))
    table = rejection_frequency_experiment(spec, reps=200, threads=multiprocessing.cpu_count())

    bound = 0.05 + 3 * math.sqrt(0.05 * 0.95 / 200)
    for row in table[(table["tau"] == 0.0) & (table["statistic"] != "simes")].itertuples():
      self.assertLessEqual(row.rejection_rate, bound)
      self.assertGreaterEqual(row.rejection_rate, 0.01)

    size = table[(table["tau"] == 0.0) & (table["statistic"] == "kw")]["rejection_rate"].iloc[0]
    power = table[(table["tau"] == 2.0) & (table["statistic"] == "kw")]["rejection_rate"].iloc[0]
    self.assertGreaterEqual(power, 0.55)
    self.assertGreaterEqual(power - size, 0.5)

  @unittest.skipUnless(ACCEPTANCE, "long-running acceptance check")
  def test_one_sided_compliance(self):
    spec = _experiment(
      n=200, tau_grid=(0.0, 2.0), draws=500, statistics=("kw",), compliance=ComplianceModel.one_sided(0.8)
    )
    table = rejection_frequency_experiment(spec, reps=200, threads=multiprocessing.cpu_count())

    kw = table[table["statistic"] == "kw"].set_index("tau")["rejection_rate"]
    self.assertLessEqual(kw[0.0], 0.05 + 3 * math.sqrt(0.05 * 0.95 / 200))
    self.assertGreaterEqual(kw[2.0], 0.4)

  @unittest.skipUnless(ACCEPTANCE, "long-running acceptance check")
  def test_focal_sizes(self):
    n = 200
    mech = CompleteRandomization(n, n // 2)
    first, second = [], []

    for rep in range(200):
      net = erdos_renyi(n, 3 / n, derive_rng(rep, 0))
      z = mech.sample(derive_rng(rep, 1))
      first.append(mis_design(builtin_pair("own", "own_any_peer"), z, net, mech, 2, derive_rng(rep, 2)).size)
      second.append(mis_design(builtin_pair("own", "own_peer_count"), z, net, mech, 4, derive_rng(rep, 3)).size)

    self.assertTrue(56 <= np.mean(first) <= 104)
    self.assertTrue(21 <= np.mean(second) <= 39)


class SimulationConfigurationTest(unittest.TestCase):

  def test_defaults(self):
    config = SimulationConfiguration.parse({})
    self.assertIs(config.dgp, DgpKind.dgp1)
    self.assertListEqual(config.tau_grid, [0.0, 1.0, 2.0])
    self.assertEqual(config.reps, 200)
    self.assertEqual(config.compliance_model(), ComplianceModel.perfect())

  def test_one_sided(self):
    config = SimulationConfiguration.parse({"compliance": "one_sided", "take_up": 0.6})
    model = config.compliance_model()
    self.assertIs(model.kind, ComplianceKind.one_sided)
    self.assertEqual(model.take_up, 0.6)

  def test_invalid(self):
    with self.assertRaises(ValueError):
      SimulationConfiguration.parse({"dgp": "dgp3"})
    with self.assertRaises(ValueError):
      SimulationConfiguration.parse({"tau_grid": []})
    with self.assertRaises(ValueError):
      SimulationConfiguration.parse({"reps": 0})


if __name__ == '__main__':
  unittest.main()
