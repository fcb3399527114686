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

'''Unit tests for logging and progress bar'''

import io
import logging
import unittest

import netcrt.crt as crt

LOGGER = logging.getLogger("netcrt")

# pylint: disable=R0201,C0115,C0116

class CrtLoggingProgressBarTest(unittest.TestCase):

  def test_logging_info(self):

    with self.assertLogs('netcrt', level='INFO') as cm:
      unitsfile = "units"
      edgesfile = "edges"
      LOGGER.info("Unit table is %s", unitsfile)
      LOGGER.info("Edge list is %s", edgesfile)
      LOGGER.info('test 1')
      LOGGER.info('test 2')

    self.assertEqual(cm.output, [
                                'INFO:netcrt:Unit table is units',
                                'INFO:netcrt:Edge list is edges',
                                'INFO:netcrt:test 1',
                                'INFO:netcrt:test 2'
                                ])

  def test_library_loggers_propagate(self):

    with self.assertLogs('netcrt', level='DEBUG') as cm:
      logging.getLogger("netcrt.engine").debug("draw %s", 3)

    self.assertEqual(cm.output, ['DEBUG:netcrt.engine:draw 3'])

  def test_logging_progress_bar(self):

    LOGGER.info('test 1')

    crt.progress_callback_draws(0)
    LOGGER.info('test 2')
    LOGGER.info('test 3')
    crt.progress_callback_draws(0.1)
    crt.progress_callback_draws(1)
    LOGGER.info('test 4')
    crt.progress_callback_replications(0.3)
    LOGGER.info('test 5')
    crt.LOGGER.info('test 6')
    crt.progress_callback_replications(1)
    LOGGER.info('test 7')

  def test_progress_bar_rendering(self):

    handler = crt.ProgressConsoleHandler()
    handler.stream = io.StringIO()

    logger = logging.getLogger("netcrt.test_progress_bar_rendering")
    logger.propagate = False
    logger.addHandler(handler)
    logger.setLevel(logging.INFO)

    try:
      logger.info("%d%%", 50, extra={
        'progress_bar': crt.ProgressConsoleHandler.ProgressType.draws,
        'percent_progress': 0.5
      })
      logger.info("message")
      logger.info("%d%%", 100, extra={
        'progress_bar': crt.ProgressConsoleHandler.ProgressType.draws,
        'percent_progress': 1.0
      })
    finally:
      logger.removeHandler(handler)

    output = handler.stream.getvalue()
    self.assertIn("Sampling: |" + "█" * 25 + "-" * 25 + "|  50% Complete", output)
    self.assertIn("\rmessage\n", output)
    self.assertIn("| 100% Complete\n", output)
    self.assertFalse(handler.is_writing_progress_bar)

  def test_progress_bar_disabled(self):

    handler = crt.ProgressConsoleHandler()
    handler.stream = io.StringIO()
    handler.display_progress_bar = False

    record = logging.LogRecord("netcrt", logging.INFO, __file__, 0, "%d%%", (10,), None)
    record.progress_bar = crt.ProgressConsoleHandler.ProgressType.replications
    record.percent_progress = 0.1
    handler.emit(record)

    self.assertEqual(handler.stream.getvalue(), "")

if __name__ == '__main__':
  unittest.main()
