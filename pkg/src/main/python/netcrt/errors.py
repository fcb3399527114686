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

"""Exceptions raised by the randomization test machinery"""

from __future__ import annotations


class SpecificationError(ValueError):
  """The null and alternative exposure mappings are inconsistent with the
  declared coarsening map."""


class SupportViolationError(ValueError):
  """An assignment has zero probability under the declared mechanism."""


class InfeasibleConstraintError(ValueError):
  """A fixed treatment pattern cannot be completed into a support point."""


class DegenerateDesignError(ValueError):
  """No usable focal design exists (empty candidate pool or fewer focal units
  than exposure groups)."""


class NoBicliqueError(DegenerateDesignError):
  """No biclique of the null exposure graph meets the requested minima."""


class DegenerateGroupingError(ValueError):
  """A statistic is undefined for the grouping of focal units it was given."""


class LowAcceptanceError(RuntimeError):
  """Rejection sampling reached its maximum number of attempts."""

  def __init__(self, attempts: int):
    super().__init__(
      f"Low acceptance rate: no focal assignment accepted after {attempts} attempts"
    )
    self.attempts = attempts


class EnumerationLimitError(RuntimeError):
  """The support of the design is too large to enumerate."""
