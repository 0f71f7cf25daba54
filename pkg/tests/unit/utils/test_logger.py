# Copyright (c) 2025, hypocoerce contributors.  All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
import json
import logging
import os
from unittest.mock import patch

import pytest

from hypocoerce.utils.logger import (
    JsonlLogger,
    Logger,
    flatten_dict,
    get_next_experiment_dir,
)


def test_flatten_dict():
    nested = {"kappa": "2", "check": {"lhs": 0.5, "rows": [{"t": 0.1}, 3]}}
    assert flatten_dict(nested) == {
        "kappa": "2",
        "check.lhs": 0.5,
        "check.rows.0.t": 0.1,
        "check.rows.1": 3,
    }
    assert flatten_dict({"a": {"b": 1}}, sep="/") == {"a/b": 1}


class TestJsonlLogger:
    def test_metrics_are_appended(self, tmp_path):
        logger = JsonlLogger(str(tmp_path))
        logger.log_metrics({"lhs": 1.0, "fit": {"rate": 2.0}}, step=0)
        logger.log_metrics({"lhs": float("nan")}, step=1, prefix="grad")
        lines = (tmp_path / "metrics.jsonl").read_text().splitlines()
        assert [json.loads(line) for line in lines] == [
            {"step": 0, "lhs": 1.0, "fit.rate": 2.0},
            {"step": 1, "grad/lhs": None},
        ]

    def test_hyperparams(self, tmp_path):
        JsonlLogger(str(tmp_path)).log_hyperparams({"model": {"beta": 3}})
        record = json.loads((tmp_path / "metrics.jsonl").read_text())
        assert record == {"hyperparams": True, "model.beta": 3}


class TestLogger:
    @pytest.fixture
    def logger_config(self, tmp_path):
        return {
            "log_dir": str(tmp_path / "logs"),
            "wandb_enabled": False,
            "wandb": {"project": "hypocoerce-tests", "name": "unit"},
        }

    def test_jsonl_only(self, logger_config):
        logger = Logger(logger_config)
        assert len(logger.loggers) == 1
        logger.log_metrics({"kappa": 2.0}, step=0)
        logger.finish()
        assert os.path.exists(os.path.join(logger_config["log_dir"], "metrics.jsonl"))

    @patch("hypocoerce.utils.logger.wandb")
    def test_wandb_backend(self, mock_wandb, logger_config):
        logger_config["wandb_enabled"] = True
        logger = Logger(logger_config)
        mock_wandb.init.assert_called_once_with(
            project="hypocoerce-tests",
            name="unit",
            dir=os.path.join(logger_config["log_dir"], "wandb"),
        )
        run = mock_wandb.init.return_value
        logger.log_metrics({"check": {"lhs": 1.5}}, step=4, prefix="poincare")
        run.log.assert_called_once_with({"poincare/check.lhs": 1.5}, step=4)
        logger.log_hyperparams({"seed": 7})
        run.config.update.assert_called_once_with({"seed": 7})
        logger.finish()
        run.finish.assert_called_once()


def test_next_experiment_dir(tmp_path):
    base = str(tmp_path)
    first = get_next_experiment_dir(base)
    assert os.path.basename(first) == "exp_001"
    os.makedirs(os.path.join(base, "exp_007"))
    assert os.path.basename(get_next_experiment_dir(base)) == "exp_008"


def test_rich_logging_installs_once():
    from hypocoerce.utils import logger as logger_module

    root = logging.getLogger()
    level, handlers = root.level, list(root.handlers)
    try:
        with patch.object(logger_module, "_rich_logging_configured", False):
            logger_module.configure_rich_logging("WARNING")
            assert root.level == logging.WARNING
            assert logger_module._rich_logging_configured
            # a second call leaves the first configuration alone
            logger_module.configure_rich_logging("DEBUG")
            assert root.level == logging.WARNING
    finally:
        root.handlers[:] = handlers
        root.setLevel(level)
