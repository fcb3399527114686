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

'''Unit tests for the command line'''

# pylint: disable=R0201,C0115,C0116

import io
import json
import os
import unittest
from contextlib import redirect_stdout

import pandas as pd

import netcrt.crt as crt
from netcrt.assignment import derive_rng
from netcrt.graph import erdos_renyi, read_edge_list
from netcrt.sim import RESULT_COLUMNS

EDGES = "src/test/resources/data/example_edges.csv"
UNITS = "src/test/resources/data/example_units.csv"
STRATIFIED_UNITS = "src/test/resources/data/stratified_units.csv"
NO_EDGES = "src/test/resources/data/no_edges.csv"
CONFIG_FILE = "src/test/resources/config_files/unit_test_cfg.json"
SIMULATION_CONFIG_FILE = "src/test/resources/config_files/simulation_cfg.json"


class CrtAppTest(unittest.TestCase):

  def setUp(self):
    if not os.path.exists('build'):
      os.makedirs('build')

  def test_test(self):
    code = crt.main([
      "test",
      "--edges", EDGES,
      "--units", UNITS,
      "--out", "build/example_test.csv",
      "--config_file", CONFIG_FILE
    ])
    self.assertEqual(code, 0)

    table = pd.read_csv("build/example_test.csv")
    self.assertListEqual(list(table.columns), crt.TEST_RESULT_COLUMNS)
    self.assertListEqual(table["statistic"].tolist(), ["kw", "acd", "olsf", "simes"])
    self.assertTrue((table["draws"] == 100).all())
    self.assertTrue((table["seed"] == 7).all())
    self.assertTrue((table["method"] == "mis").all())
    self.assertTrue(((table["p_hat"] >= 0) & (table["p_hat"] <= 1)).all())

  def test_test_reproducible(self):
    outputs = []
    for _ in range(2):
      buffer = io.StringIO()
      with redirect_stdout(buffer):
        code = crt.main(["test", "--edges", EDGES, "--units", UNITS, "--config_file", CONFIG_FILE])
      self.assertEqual(code, 0)
      outputs.append(buffer.getvalue())

    self.assertEqual(outputs[0], outputs[1])
    self.assertTrue(outputs[0].startswith(",".join(crt.TEST_RESULT_COLUMNS)))

  def test_seed_override(self):
    buffer = io.StringIO()
    with redirect_stdout(buffer):
      code = crt.main(["test", "--edges", EDGES, "--units", UNITS, "--seed", "3", "--config_file", CONFIG_FILE])
    self.assertEqual(code, 0)

    table = pd.read_csv(io.StringIO(buffer.getvalue()))
    self.assertTrue((table["seed"] == 3).all())

  def test_config_string(self):
    config = json.dumps({
      "general": {"progress_bar": False},
      "hypothesis": {"e0": "any_neighborhood", "e1": "own_any_peer"},
      "focal": {"method": "random", "kappa": 3},
      "test": {"statistics": ["kw", "acd"], "draws": 50}
    })
    code = crt.main([
      "test", "--edges", EDGES, "--units", UNITS, "--out", "build/example_random.csv", "--config", config
    ])
    self.assertEqual(code, 0)

    table = pd.read_csv("build/example_random.csv")
    self.assertTrue((table["kappa"] == 3).all())
    self.assertTrue((table["focal_size"] == 4).all())

  def test_stratified(self):
    config = json.dumps({"general": {"progress_bar": False}, "mechanism": {"kind": "stratified"}, "test": {"draws": 20}})
    code = crt.main([
      "test", "--edges", EDGES, "--units", STRATIFIED_UNITS, "--out", "build/stratified.csv", "--config", config
    ])
    self.assertEqual(code, 0)

  def test_validation_errors(self):
    self.assertEqual(crt.main(["test", "--edges", EDGES, "--units", UNITS, "--config", "{not json"]), 2)

    self.assertEqual(
      crt.main(["test", "--edges", EDGES, "--units", UNITS, "--config", '{"test": {"draws": 0}}']),
      2
    )

    self.assertEqual(
      crt.main(["test", "--edges", EDGES, "--units", UNITS, "--config", '{"focal": {"depth": 2}}']),
      2
    )

    self.assertEqual(
      crt.main(["test", "--edges", EDGES, "--units", "src/test/resources/data/missing.csv"]),
      2
    )

  def test_support_violation(self):
    config = json.dumps({"general": {"progress_bar": False}, "mechanism": {"treated": 3}})
    self.assertEqual(crt.main(["test", "--edges", EDGES, "--units", UNITS, "--config", config]), 2)

  def test_degenerate_design(self):
    config = json.dumps({"general": {"progress_bar": False}})
    self.assertEqual(crt.main(["test", "--edges", NO_EDGES, "--units", UNITS, "--config", config]), 3)

  def test_sampling_failure(self):
    config = json.dumps({
      "general": {"progress_bar": False},
      "hypothesis": {"e0": "any_neighborhood", "e1": "own_any_peer"},
      "focal": {"method": "random", "kappa": 3},
      "test": {"draws": 100, "max_attempts": 1}
    })
    self.assertEqual(crt.main(["test", "--edges", EDGES, "--units", UNITS, "--config", config]), 4)

  def test_simulate(self):
    code = crt.main([
      "simulate", "--out", "build/simulation.csv", "--seed", "5", "--config_file", SIMULATION_CONFIG_FILE
    ])
    self.assertEqual(code, 0)

    table = pd.read_csv("build/simulation.csv")
    self.assertListEqual(list(table.columns), RESULT_COLUMNS)
    self.assertEqual(len(table), 2 * 3)

  def test_gen_network(self):
    code = crt.main(["gen-network", "--n", "30", "--p", "0.1", "--seed", "2", "--out", "build/network.csv"])
    self.assertEqual(code, 0)
    self.assertEqual(read_edge_list("build/network.csv", 30), erdos_renyi(30, 0.1, derive_rng(2)))

  def test_help(self):
    buffer = io.StringIO()
    with redirect_stdout(buffer), self.assertRaises(SystemExit):
      crt.main(["simulate", "--help"])
    self.assertIn('"simulation": dgp=', buffer.getvalue())
    self.assertIn('"biclique": z0_draws=10000', buffer.getvalue())

    text = " ".join(buffer.getvalue().split())
    self.assertIn("Configuration as an inline JSON string.", text)
    self.assertIn("Path to a JSON configuration file.", text)

  def test_no_subcommand(self):
    buffer = io.StringIO()
    with redirect_stdout(buffer):
      self.assertEqual(crt.main([]), 0)
    self.assertIn("gen-network", buffer.getvalue())


if __name__ == '__main__':
  unittest.main()
