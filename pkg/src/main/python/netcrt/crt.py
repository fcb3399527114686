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

'''netcrt command line'''

import json
import logging
import sys
import typing
from argparse import ArgumentParser, RawDescriptionHelpFormatter
from enum import Enum

import numpy as np
import pandas as pd

from netcrt.assignment import MechanismConfiguration, derive_rng
from netcrt.config import GeneralConfiguration, ModuleConfiguration, NetworkConfiguration
from netcrt.engine import TestConfiguration, run_test
from netcrt.errors import (DegenerateDesignError, InfeasibleConstraintError, LowAcceptanceError,
                           SupportViolationError)
from netcrt.exposure import HypothesisConfiguration
from netcrt.focal import BicliqueConfiguration, FocalConfiguration, FocalMethod, design_from_config
from netcrt.graph import erdos_renyi, read_edge_list, write_edge_list
from netcrt.sim import ExperimentSpec, SimulationConfiguration, rejection_frequency_experiment
from netcrt.stats import Statistic
from netcrt.units import read_unit_table

LOGGER = logging.getLogger("netcrt")

TEST_CONFIGURATIONS = [
  GeneralConfiguration,
  NetworkConfiguration,
  MechanismConfiguration,
  HypothesisConfiguration,
  FocalConfiguration,
  BicliqueConfiguration,
  TestConfiguration
]

CONFIGURATIONS = TEST_CONFIGURATIONS + [SimulationConfiguration]

TEST_RESULT_COLUMNS = [
  "statistic",
  "t_obs",
  "p_hat",
  "draws",
  "focal_size",
  "kappa",
  "method",
  "acceptance_rate",
  "seed",
  "alpha",
  "reject"
]


class ExitCode(Enum):
  '''Process exit statuses'''
  success = 0
  validation_error = 2
  degenerate_design = 3
  sampling_failure = 4


class ProgressConsoleHandler(logging.StreamHandler):
  """
  A handler class which allows the cursor to stay on
  one line for selected messages
  """

  class ProgressType(Enum):
    '''Whether the progress is for Monte Carlo draws or simulation replications
    '''
    draws = 1
    replications = 2

  def __init__(self):
    self.is_writing_progress_bar = False
    self.last_progress_msg = ""
    self.display_progress_bar = True
    super().__init__()

  def emit(self, record):

    def progress_str(progress_type: ProgressConsoleHandler.ProgressType, percent_progress: float) -> str:
      '''Formats the progress string.'''

      prefix = "Sampling:" if progress_type is ProgressConsoleHandler.ProgressType.draws else "Simulating:"
      suffix = 'Complete'
      length = 50
      fill = '█'
      filled_length = int(length * percent_progress)
      bar_val = fill * filled_length + '-' * (length - filled_length)

      return f'\r{prefix} |{bar_val}| {100 * percent_progress:3.0f}% {suffix}'

    try:
      msg = self.format(record)

      stream = self.stream

      is_progress_bar_record = hasattr(record, 'progress_bar')
      percent_progress = None

      if not self.display_progress_bar and is_progress_bar_record:
        return

      if is_progress_bar_record:
        percent_progress = getattr(record, 'percent_progress')
        msg = progress_str(
          getattr(record, 'progress_bar'),
          min(1.0, abs(float(percent_progress)))
        )
        self.last_progress_msg = msg

      if self.is_writing_progress_bar and not is_progress_bar_record:
        # erase and over write the progress bar
        stream.write('\r')
        stream.write(' ' * len(self.last_progress_msg))

        # go to beginning of the line and write the new messages
        stream.write('\r')
        stream.write(msg)
        stream.write(self.terminator)

        # write the old progress information
        stream.write(self.last_progress_msg)
      elif is_progress_bar_record:
        stream.write(msg)
      else:
        stream.write(msg)
        stream.write(self.terminator)

      if is_progress_bar_record:
        self.is_writing_progress_bar = True
        if percent_progress is not None and float(percent_progress) >= 1.0:
          stream.write(self.terminator)
          self.is_writing_progress_bar = False

      self.flush()

    except (KeyboardInterrupt, SystemExit):
      raise
    except:  # pylint: disable=bare-except
      self.handleError(record)


def progress_callback_draws(percent_progress: float):
  '''Callback handler used by the test engine.'''
  LOGGER.info(
    "%d%%",
    100 * percent_progress,
    extra={
      'progress_bar': ProgressConsoleHandler.ProgressType.draws,
      'percent_progress': percent_progress,
    }
  )


def progress_callback_replications(percent_progress: float):
  '''Callback handler used by the simulation harness.'''
  LOGGER.info(
    "%d%%",
    100 * percent_progress,
    extra={
      'progress_bar': ProgressConsoleHandler.ProgressType.replications,
      'percent_progress': percent_progress,
    }
  )


def read_config_from_json(config_class, json_data) -> typing.Optional[ModuleConfiguration]:
  """Returns a requested configuration from json data, with defaults for a missing section"""
  if config_class is None:
    return None

  json_config = {} if json_data is None else json_data.get(config_class.name(), {})

  return config_class.parse(json_config)


def read_json_config(args) -> typing.Dict:
  """Returns the configuration passed on the command line"""

  # Note - Loading config data from a file takes priority over
  # data passed in as a json string
  json_config_data = None

  if args.config is not None:
    json_config_data = json.loads(args.config)
  if args.config_file is not None:
    with open(args.config_file, encoding="utf-8") as json_file:
      json_config_data = json.load(json_file)

  if json_config_data is None:
    return {}

  if not isinstance(json_config_data, dict):
    raise ValueError("The configuration must be a JSON object")

  return json_config_data


def apply_general_config(general_config: GeneralConfiguration):
  """Applies the logging settings"""
  if general_config.progress_bar is not None:
    progress.display_progress_bar = general_config.progress_bar

  if general_config.log_level is not None:
    LOGGER.setLevel(general_config.log_level)


def describe_configurations(configurations) -> str:
  """Returns the configuration sections, keys and defaults"""
  return "configuration sections (defaults):\n" + "\n".join(f"  {c.describe()}" for c in configurations)


def write_table(table: pd.DataFrame, out: typing.Optional[str]):
  """Writes a CSV table to `out`, or to the standard output if `out` is None"""
  if out is None:
    table.to_csv(sys.stdout, index=False, lineterminator="\n")
  else:
    table.to_csv(out, index=False, lineterminator="\n")


# Argument parsing setup
#
cli = ArgumentParser(prog="crt", description="Conditional randomization tests under network interference")
subparsers = cli.add_subparsers(dest="subcommand")


def argument(*name_or_flags, **kwargs):
  """Convenience function to properly format arguments to pass to the
  subcommand decorator."""

  return (list(name_or_flags), kwargs)


def subcommand(args=None, parent=subparsers, epilog=None):
  """Decorator to define a new subcommand in a sanity-preserving way.
  The function will be stored in the ``func`` variable when the parser
  parses arguments so that it can be called directly like so::

      args = cli.parse_args()
      args.func(args)

  Underscores in the function name become dashes in the subcommand name.
  """

  def decorator(func):
    parser = parent.add_parser(
      func.__name__.replace("_", "-"),
      description=func.__doc__,
      epilog=epilog,
      formatter_class=RawDescriptionHelpFormatter
    )
    for arg in args:
      parser.add_argument(*arg[0], **arg[1])
    parser.set_defaults(func=func)

  if args is None:
    args = []
  return decorator


_CONFIG_ARGUMENTS = [
  argument("--config", help="Configuration as an inline JSON string. Overridden by --config_file.", required=False),
  argument("--config_file", help="Path to a JSON configuration file. Overrides --config.", required=False),
]


@subcommand([
  argument("--edges", help="Edge list file path", required=True),
  argument("--units", help="Unit table file path", required=True),
  argument("--out", help="Output CSV file path (standard output if absent)", required=False),
  argument("--seed", help="Root seed. Overrides test.seed.", type=int, required=False),
  argument("--threads", help="Worker processes. Overrides general.threads.", type=int, required=False),
  *_CONFIG_ARGUMENTS
], epilog=describe_configurations(TEST_CONFIGURATIONS))
def test(args):
  '''Runs a conditional randomization test of the configured exposure hypothesis'''

  json_config_data = read_json_config(args)

  general_config: GeneralConfiguration = read_config_from_json(GeneralConfiguration, json_config_data)
  apply_general_config(general_config)

  network_config: NetworkConfiguration = read_config_from_json(NetworkConfiguration, json_config_data)
  mechanism_config: MechanismConfiguration = read_config_from_json(MechanismConfiguration, json_config_data)
  hypothesis_config: HypothesisConfiguration = read_config_from_json(HypothesisConfiguration, json_config_data)
  focal_config: FocalConfiguration = read_config_from_json(FocalConfiguration, json_config_data)
  biclique_config: BicliqueConfiguration = read_config_from_json(BicliqueConfiguration, json_config_data)
  test_config: TestConfiguration = read_config_from_json(TestConfiguration, json_config_data)

  if args.seed is not None:
    test_config.seed = args.seed

  threads = args.threads if args.threads is not None else general_config.threads
  if threads < 1:
    raise ValueError("threads must be a positive integer")

  LOGGER.info("Unit table is %s", args.units)
  LOGGER.info("Edge list is %s", args.edges)

  #
  # Read the data
  #
  units = read_unit_table(args.units)
  net = read_edge_list(args.edges, units.n, undirected=network_config.undirected)

  if units.D is not None:
    LOGGER.info("Exposures are computed from the assignment Z; take-up D is not used")

  #
  # Declared design
  #
  mech = mechanism_config.build(units.n, observed=units.Z, strata=units.stratum)

  if not mech.in_support(units.Z):
    raise SupportViolationError(f"Observed Z impossible under declared mechanism {mech!r}")

  pair = hypothesis_config.build()

  #
  # Focal units and focal assignments
  #
  design = design_from_config(pair, units.Z, net, mech, derive_rng(test_config.seed), focal_config, biclique_config)

  LOGGER.info("%s design with %s focal units and kappa=%s", design.method.value, design.size, design.kappa)

  #
  # Randomization test
  #
  spec = test_config.build(design)
  result = run_test(spec, units.Y, units.Z, net, threads, progress_callback_draws)

  rows = []
  for statistic in result.statistics:
    rows.append({
      "statistic": statistic.name,
      "t_obs": statistic.observed,
      "p_hat": statistic.p_value,
      "draws": result.draws,
      "focal_size": result.focal_size,
      "kappa": result.kappa,
      "method": result.method,
      "acceptance_rate": result.acceptance_rate,
      "seed": result.seed,
      "alpha": test_config.alpha,
      "reject": int(statistic.p_value <= test_config.alpha)
    })

  decision = result.simes(test_config.alpha)
  rows.append({
    "statistic": "simes",
    "t_obs": np.nan,
    "p_hat": decision.p_value,
    "draws": result.draws,
    "focal_size": result.focal_size,
    "kappa": result.kappa,
    "method": result.method,
    "acceptance_rate": result.acceptance_rate,
    "seed": result.seed,
    "alpha": test_config.alpha,
    "reject": int(decision.reject)
  })

  write_table(pd.DataFrame(rows, columns=TEST_RESULT_COLUMNS), args.out)


@subcommand([
  argument("--out", help="Output CSV file path (standard output if absent)", required=False),
  argument("--seed", help="Root seed. Overrides test.seed.", type=int, required=False),
  argument("--threads", help="Worker processes. Overrides general.threads.", type=int, required=False),
  *_CONFIG_ARGUMENTS
], epilog=describe_configurations(CONFIGURATIONS))
def simulate(args):
  '''Estimates rejection frequencies over a grid of spillover strengths on simulated networks'''

  json_config_data = read_json_config(args)

  general_config: GeneralConfiguration = read_config_from_json(GeneralConfiguration, json_config_data)
  apply_general_config(general_config)

  network_config: NetworkConfiguration = read_config_from_json(NetworkConfiguration, json_config_data)
  mechanism_config: MechanismConfiguration = read_config_from_json(MechanismConfiguration, json_config_data)
  hypothesis_config: HypothesisConfiguration = read_config_from_json(HypothesisConfiguration, json_config_data)
  focal_config: FocalConfiguration = read_config_from_json(FocalConfiguration, json_config_data)
  biclique_config: BicliqueConfiguration = read_config_from_json(BicliqueConfiguration, json_config_data)
  test_config: TestConfiguration = read_config_from_json(TestConfiguration, json_config_data)
  simulation_config: SimulationConfiguration = read_config_from_json(SimulationConfiguration, json_config_data)

  seed = args.seed if args.seed is not None else test_config.seed
  threads = args.threads if args.threads is not None else general_config.threads
  if threads < 1:
    raise ValueError("threads must be a positive integer")

  n = network_config.size
  network_p = network_config.probability if network_config.probability is not None else min(1.0, 3 / n)

  spec = ExperimentSpec(
    n=n,
    network_p=network_p,
    mech=mechanism_config.build(n),
    pair=hypothesis_config.build(),
    focal_config=focal_config,
    biclique_config=biclique_config,
    statistics=tuple(Statistic.get_statistic_by_name(s) for s in test_config.statistics),
    tau_grid=tuple(simulation_config.tau_grid),
    dgp_kind=simulation_config.dgp,
    noise_sd=simulation_config.noise_sd,
    compliance=simulation_config.compliance_model(),
    draws=test_config.draws,
    alpha=test_config.alpha,
    seed=seed,
    max_attempts=test_config.max_attempts
  )

  LOGGER.info(
    "Simulating %s replications of %s on %s units with the %s method",
    simulation_config.reps, spec.pair.name, n, FocalMethod(focal_config.method).value
  )

  table = rejection_frequency_experiment(spec, simulation_config.reps, threads, progress_callback_replications)

  write_table(table, args.out)


@subcommand([
  argument("--n", help="Number of units", type=int, required=True),
  argument("--p", help="Edge probability", type=float, required=True),
  argument("--seed", help="Seed", type=int, required=False, default=1),
  argument("--out", help="Output edge list file path", required=True),
])
def gen_network(args):
  '''Generates an undirected Erdos-Renyi network and writes it as an edge list'''

  net = erdos_renyi(args.n, args.p, derive_rng(args.seed))

  LOGGER.info("Generated network with %s units and %s edges", net.n, net.edge_count() // 2)

  write_edge_list(net, args.out)


# Ensure that the handler is added only once/globally
# Otherwise the handler will be called multiple times
progress = ProgressConsoleHandler()
LOGGER.addHandler(progress)
LOGGER.setLevel(logging.INFO)


def main(argv=None) -> int:
  '''Main application processing'''

  args = cli.parse_args(argv if argv is not None else sys.argv[1:])

  if args.subcommand is None:
    cli.print_help()
    return ExitCode.success.value

  try:
    args.func(args)
  except (LowAcceptanceError, InfeasibleConstraintError) as e:
    LOGGER.error("Sampling failure: %s", e)
    return ExitCode.sampling_failure.value
  except DegenerateDesignError as e:
    LOGGER.error("Degenerate design: %s", e)
    return ExitCode.degenerate_design.value
  except (ValueError, OSError) as e:
    LOGGER.error("Error: %s", e)
    return ExitCode.validation_error.value

  return ExitCode.success.value


if __name__ == "__main__":
  sys.exit(main())
