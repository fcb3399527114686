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

"""Unit tests for unit table ingestion"""

# pylint: disable=R0201,C0115,C0116,W0212

import io
import unittest

from netcrt.units import read_unit_table


class UnitTableTest(unittest.TestCase):

  def test_example(self):
    units = read_unit_table("src/test/resources/data/example_units.csv")
    self.assertEqual(units.n, 8)
    self.assertListEqual(units.Z.tolist(), [1, 0, 1, 1, 0, 0, 1, 0])
    self.assertListEqual(units.Y.tolist(), [4, 3, 7, 8, 2, 3, 5, 1])
    self.assertIsNone(units.D)
    self.assertIsNone(units.stratum)

  def test_optional_columns(self):
    units = read_unit_table("src/test/resources/data/stratified_units.csv")
    self.assertListEqual(units.D.tolist(), [1, 0, 0, 1, 0, 0, 1, 0])
    self.assertListEqual(units.stratum.tolist(), [1, 1, 1, 2, 2, 2, 2, 1])
    self.assertEqual(units.Y[1], 3.25)

  def test_any_order(self):
    units = read_unit_table(io.StringIO("id,Y,Z\n2,5.0,1\n1,3.0,0\n"))
    self.assertListEqual(units.Y.tolist(), [3.0, 5.0])
    self.assertListEqual(units.Z.tolist(), [0, 1])

  def test_missing_column(self):
    with self.assertRaisesRegex(ValueError, "'Z'"):
      read_unit_table(io.StringIO("id,Y\n1,3\n"))

  def test_unknown_column(self):
    with self.assertRaises(ValueError):
      read_unit_table(io.StringIO("id,Y,Z,cluster\n1,3,0,2\n"))

  def test_duplicate_id(self):
    with self.assertRaisesRegex(ValueError, "line 3"):
      read_unit_table(io.StringIO("id,Y,Z\n1,3,0\n1,4,1\n"))

  def test_id_range(self):
    with self.assertRaisesRegex(ValueError, "line 2"):
      read_unit_table(io.StringIO("id,Y,Z\n3,3,0\n1,4,1\n"))

  def test_bad_values(self):
    with self.assertRaisesRegex(ValueError, "line 2"):
      read_unit_table(io.StringIO("id,Y,Z\n1,3,2\n"))

    with self.assertRaisesRegex(ValueError, "line 3"):
      read_unit_table(io.StringIO("id,Y,Z\n1,3,0\n2,abc,1\n"))

    with self.assertRaises(ValueError):
      read_unit_table(io.StringIO("id,Y,Z\n1,nan,0\n"))

  def test_empty(self):
    with self.assertRaises(ValueError):
      read_unit_table(io.StringIO(""))

    with self.assertRaises(ValueError):
      read_unit_table(io.StringIO("id,Y,Z\n"))


if __name__ == '__main__':
  unittest.main()
