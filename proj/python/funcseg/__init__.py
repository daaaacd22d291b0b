# Copyright 2026 The funcseg Authors.
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

"""Training-free 3D functionality segmentation."""

import json

from ._core import (
    DEFAULT_LIFT_RADIUS,
    DEFAULT_TAU,
    ConfigError,
    ContractError,
    Error,
    FixtureMissError,
    MissingArtifactError,
    ParseError,
    TransportError,
    ValidationError,
    build_point_query,
    build_prompt,
    combine_scores,
    distribution_scores,
    score_mask,
    select_views,
    set_log_level,
    task_iou,
)
from . import _core

__all__ = [
    "DEFAULT_LIFT_RADIUS",
    "DEFAULT_TAU",
    "ConfigError",
    "ContractError",
    "Error",
    "FixtureMissError",
    "MissingArtifactError",
    "ParseError",
    "TransportError",
    "ValidationError",
    "aggregate_ious",
    "build_point_query",
    "build_prompt",
    "combine_scores",
    "distribution_scores",
    "lift",
    "parse_llm_response",
    "run",
    "score_mask",
    "select_views",
    "set_log_level",
    "task_iou",
]


def parse_llm_response(text):
    """Functional object, contextual object, actions and hierarchy of a reply."""
    return json.loads(_core._parse_llm_response(text))


def aggregate_ious(ious):
    return json.loads(_core._aggregate_ious(list(ious)))


def lift(scene_dir, masks, radius=DEFAULT_LIFT_RADIUS, tau=DEFAULT_TAU, jobs=1):
    """Lifts per-view boolean masks (depth resolution, keyed by view id) onto
    the scene's point cloud.

    Returns ``{"heatmap": {...}, "mask": {...}}``.
    """
    return json.loads(_core._lift(str(scene_dir), dict(masks), radius, tau, jobs))


def run(config_path, task_file=None, cache_dir=None, jobs=None, offline=False):
    """Runs every task of a dataset; returns ``{"tasks": [...], "metrics": {...}}``."""
    return json.loads(
        _core._run(
            str(config_path),
            None if task_file is None else str(task_file),
            None if cache_dir is None else str(cache_dir),
            jobs,
            offline,
        )
    )
