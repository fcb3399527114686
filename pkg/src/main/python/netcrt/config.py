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

"""netcrt configuration"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional, Dict, List, Any


class ModuleConfiguration:
  """Base class for module configurations"""

  @classmethod
  def get_fields(cls) -> List[dataclasses.Field]:
    """Returns data class fields"""
    return list(dataclasses.fields(cls))

  @classmethod
  def validate(cls, config_dict: Dict):
    """Validates configuration dictionary"""
    if not isinstance(config_dict, dict):
      raise ValueError(f"Configuration section '{cls.name()}' must be a JSON object")

    known = {f.name for f in cls.get_fields()}
    for key in config_dict:
      if key not in known:
        raise ValueError(f"Unknown key '{key}' in section '{cls.name()}'. Expect one of: {', '.join(sorted(known))}.")

    for config_field in cls.get_fields():
      optional_field = "Optional" in str(config_field.type) or cls.get_field_default(config_field) is not None

      config_value = config_dict.get(config_field.name)
      if not optional_field and config_value is None:
        raise ValueError(f"Compulsory configuration field missing: {config_field.name}")

  @classmethod
  def parse(cls, config_dict: Dict) -> ModuleConfiguration:
    """Parses configuration dictionary"""
    cls.validate(config_dict)

    kwargs = {}
    for config_field in cls.get_fields():

      field_value = config_dict.get(config_field.name, cls.get_field_default(config_field))

      decoder = config_field.metadata.get("decoder")
      if decoder is not None:
        field_value = decoder.__call__(field_value)

      kwargs[config_field.name] = field_value

    instance = cls(**kwargs)

    return instance

  @staticmethod
  def get_field_default(config_field: dataclasses.Field) -> Optional[Any]:
    """Returns the default field value if any, None otherwise"""
    if config_field.default is not dataclasses.MISSING:
      return config_field.default
    if config_field.default_factory is not dataclasses.MISSING:
      return config_field.default_factory()
    return None

  @classmethod
  def describe(cls) -> str:
    """Returns a one-line summary of the section keys and their defaults"""
    items = ", ".join(
      f"{f.name}={cls.get_field_default(f)!r}" for f in cls.get_fields()
    )
    return f'"{cls.name()}": {items}'

  @classmethod
  def name(cls):
    """Returns the configuration name"""
    raise NotImplementedError


def decode_bool(value: bool) -> bool:
  """Accepts JSON booleans only"""
  if not isinstance(value, bool):
    raise ValueError(f"Expected true or false, got {value!r}")
  return value


def _decode_log_level(value: str) -> str:
  levels = ("DEBUG", "INFO", "WARN", "WARNING", "ERROR")
  if str(value).upper() not in levels:
    raise ValueError(f"Invalid log_level '{value}' value. Expect one of: {', '.join(levels)}.")
  return "WARNING" if str(value).upper() == "WARN" else str(value).upper()


def _decode_threads(value: int) -> int:
  threads = int(value)
  if threads < 1:
    raise ValueError("threads must be a positive integer")
  return threads


@dataclass
class GeneralConfiguration(ModuleConfiguration):
  """General configuration"""
  log_level: Optional[str] = field(default="INFO", metadata={"decoder": _decode_log_level})
  progress_bar: Optional[bool] = field(default=True, metadata={"decoder": decode_bool})
  threads: int = field(default=1, metadata={"decoder": _decode_threads})

  @classmethod
  def name(cls):
    return "general"


@dataclass
class NetworkConfiguration(ModuleConfiguration):
  """Network configuration: how edge lists are read and, for simulations, how
  networks are generated"""

  # edge lists describe undirected networks and are symmetrized on load
  undirected: bool = field(default=True, metadata={"decoder": decode_bool})

  # number of units of generated networks
  size: int = field(default=200, metadata={"decoder": int})

  # edge probability of generated networks, 3/size if None
  probability: Optional[float] = field(
    default=None,
    metadata={"decoder": lambda v: None if v is None else float(v)}
  )

  @classmethod
  def name(cls):
    return "network"
