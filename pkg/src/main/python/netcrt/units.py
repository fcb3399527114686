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

'''Unit tables: outcomes, assignments, take-up and strata of the units of an experiment'''

from __future__ import annotations

import logging
import typing
from dataclasses import dataclass

import numpy as np
import pandas as pd

LOGGER = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("id", "Y", "Z")

OPTIONAL_COLUMNS = ("D", "stratum")


@dataclass(frozen=True, eq=False)
class UnitTable:
  '''Per-unit data, indexed by 0-based unit index (file ids are 1-based)'''
  Y: np.ndarray
  Z: np.ndarray
  D: typing.Optional[np.ndarray] = None
  stratum: typing.Optional[np.ndarray] = None

  @property
  def n(self) -> int:
    '''Number of units'''
    return len(self.Y)


def _integer(value: str, column: str, line: int) -> int:
  try:
    number = float(value)
  except (TypeError, ValueError) as e:
    raise ValueError(f"Invalid {column} value '{value}' at line {line}") from e
  if not number.is_integer():
    raise ValueError(f"Invalid {column} value '{value}' at line {line}: expected an integer")
  return int(number)


def _binary(value: str, column: str, line: int) -> int:
  number = _integer(value, column, line)
  if number not in (0, 1):
    raise ValueError(f"Invalid {column} value '{value}' at line {line}: expected 0 or 1")
  return number


def _real(value: str, column: str, line: int) -> float:
  try:
    number = float(value)
  except (TypeError, ValueError) as e:
    raise ValueError(f"Invalid {column} value '{value}' at line {line}") from e
  if not np.isfinite(number):
    raise ValueError(f"Invalid {column} value '{value}' at line {line}: expected a finite number")
  return number


def read_unit_table(source: typing.Union[str, typing.IO]) -> UnitTable:
  '''Reads a CSV unit table with columns `id`, `Y`, `Z` and optionally `D` and `stratum`.
  Ids must be exactly 1..n, in any order.'''

  try:
    table = pd.read_csv(source, dtype=str, skipinitialspace=True, keep_default_na=False)
  except pd.errors.EmptyDataError as e:
    raise ValueError("Unit table is empty") from e
  except pd.errors.ParserError as e:
    raise ValueError(f"Malformed unit table: {e}") from e

  table.columns = [c.strip() for c in table.columns]

  for column in REQUIRED_COLUMNS:
    if column not in table.columns:
      raise ValueError(f"Unit table is missing column '{column}'")

  unknown = set(table.columns) - set(REQUIRED_COLUMNS) - set(OPTIONAL_COLUMNS)
  if unknown:
    raise ValueError(f"Unknown unit table columns: {', '.join(sorted(unknown))}")

  n = len(table)
  if n == 0:
    raise ValueError("Unit table has no units")

  has_d = "D" in table.columns
  has_stratum = "stratum" in table.columns

  Y = np.empty(n, dtype=np.float64)
  Z = np.empty(n, dtype=np.int8)
  D = np.empty(n, dtype=np.int8) if has_d else None
  stratum = np.empty(n, dtype=np.int64) if has_stratum else None
  seen = np.zeros(n, dtype=bool)

  for row_index, row in enumerate(table.to_dict("records")):
    line = row_index + 2

    unit_id = _integer(row["id"], "id", line)
    if not 1 <= unit_id <= n:
      raise ValueError(f"Unit id {unit_id} at line {line} is outside [1, {n}]")
    if seen[unit_id - 1]:
      raise ValueError(f"Duplicate unit id {unit_id} at line {line}")
    seen[unit_id - 1] = True

    i = unit_id - 1
    Y[i] = _real(row["Y"], "Y", line)
    Z[i] = _binary(row["Z"], "Z", line)
    if D is not None:
      D[i] = _binary(row["D"], "D", line)
    if stratum is not None:
      stratum[i] = _integer(row["stratum"], "stratum", line)

  LOGGER.debug("Read %s units", n)

  return UnitTable(Y=Y, Z=Z, D=D, stratum=stratum)
