# Copyright 2026 The tsqa Authors.
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

"""Python front end for the tsqa core: sensor timeline question answering."""

from __future__ import annotations

import json
from typing import Any, Optional

from ._core import TsqaError, build_store, parse_datetime, rouge_l, rouge_n, short_match
from . import _core

__all__ = [
    "Pipeline",
    "Service",
    "TsqaError",
    "build_store",
    "gradcheck",
    "parse_datetime",
    "pretrain",
    "rouge_l",
    "rouge_n",
    "short_match",
    "synth",
    "train_similarity",
]


def gradcheck(configs: int = 20, seed: int = 0) -> dict:
    return json.loads(_core._gradcheck(configs, seed))


def pretrain(csv: str, schema: str, out: str, *, encoder: Optional[dict] = None,
             train: Optional[dict] = None, stride: int = 1) -> dict:
    """Trains encoders and writes them to `out`. Keys follow the JSON configs."""
    return json.loads(_core._pretrain(csv, schema, out, json.dumps(encoder or {}),
                                      json.dumps(train or {}), stride))


def train_similarity(csv: str, schema: str, params: str, out: str, **config: Any) -> None:
    _core._train_similarity(csv, schema, params, out, json.dumps(config))


def synth(out: str, *, users: int = 1, days: int = 7, seed: int = 0, noise: float = 0.3,
          per_category: int = 50) -> dict:
    """Writes schema.json, timeline.csv and qa.jsonl under `out`."""
    return json.loads(_core._synth(out, users, days, seed, noise, per_category))


class Pipeline:
    def __init__(self, handle: "_core._Pipeline"):
        self._p = handle

    @classmethod
    def from_config(cls, path: str) -> "Pipeline":
        return cls(_core._Pipeline.from_config(path))

    @classmethod
    def from_files(cls, params: str, store: str, similarity: str, **options: Any) -> "Pipeline":
        return cls(_core._Pipeline.from_files(params, store, similarity, json.dumps(options)))

    @classmethod
    def oracle(cls, csv: str, schema: str, **options: Any) -> "Pipeline":
        return cls(_core._Pipeline.oracle(csv, schema, json.dumps(options)))

    def answer(self, question: str, now: int, user: Optional[str] = None) -> dict:
        return json.loads(self._p.answer(question, user, now))

    def decompose(self, question: str) -> dict:
        return json.loads(self._p.decompose(question))

    def run_queries(self, specs: list, now: int, user: Optional[str] = None) -> list:
        return json.loads(self._p.run_queries(json.dumps(specs), user, now))

    def evaluate(self, qa_path: str) -> dict:
        return json.loads(self._p.evaluate(qa_path))

    @property
    def labels(self) -> list:
        return self._p.labels()

    @property
    def users(self) -> list:
        return self._p.users()


class Service:
    """HTTP handler set without a socket. Methods return (status, body dict)."""

    def __init__(self, pipeline: Pipeline):
        self._s = _core._Service(pipeline._p)

    @staticmethod
    def _wrap(pair):
        status, body = pair
        return status, json.loads(body)

    def chat(self, body: dict):
        return self._wrap(self._s.chat(json.dumps(body)))

    def labels(self):
        return self._wrap(self._s.labels())

    def health(self):
        return self._wrap(self._s.health())
