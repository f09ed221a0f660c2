"""Versioned JSON run configuration.

One run is one JSON file.  Relative dataset paths resolve against the
config file's directory; the echoed config in every report carries the
resolved absolute path so it can be re-run as is.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError

SCHEMA = "semival-config/1"


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DatasetConfig(_Strict):
    path: str
    label_column: str
    test_fraction: float = Field(0.2, gt=0.0, lt=1.0)
    seed: int = 0
    task: Literal["regression", "classification"] = "regression"


class RidgeConfig(_Strict):
    kind: Literal["ridge"] = "ridge"
    lam: float = Field(1.0, ge=0.0)


class LogisticConfig(_Strict):
    kind: Literal["logistic"] = "logistic"
    steps: int = Field(200, ge=0)
    lr: float = Field(0.5, gt=0.0)
    l2: float = Field(0.01, ge=0.0)


class UntrainedConfig(_Strict):
    kind: Literal["untrained"] = "untrained"


LearnerConfig = Union[RidgeConfig, LogisticConfig, UntrainedConfig]


class MetricConfig(_Strict):
    kind: Literal["neg-mse", "neg-rmse", "accuracy", "tpr", "fpr", "net-benefit"] = "neg-mse"
    p_t: Optional[float] = Field(None, gt=0.0, lt=1.0)
    transform: str = "identity"
    clip: Union[Literal["default"], Tuple[float, float], None] = None


class MemberConfig(_Strict):
    learner: LearnerConfig = Field(discriminator="kind")
    metric: MetricConfig


class FamilyConfig(_Strict):
    kind: Literal["single", "u0", "mono", "cost", "behaviors", "custom"] = "single"
    k_star: Optional[int] = Field(None, ge=0)
    transforms: List[str] = ["identity", "neg-sqrt"]
    a: float = Field(0.5, gt=0.0, lt=1.0)
    b: float = Field(0.6, gt=0.0, lt=1.0)
    grid: int = Field(100, ge=2)
    options: List[List[LearnerConfig]] = []
    members: List[MemberConfig] = []

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "cost" and not self.a < self.b:
            raise ValueError("cost family needs a < b")
        if self.kind == "behaviors" and not self.options:
            raise ValueError("behaviors family needs per-cardinality options")
        if self.kind == "custom" and not self.members:
            raise ValueError("custom family needs members")
        return self


class FavorabilityConfig(_Strict):
    kind: Literal["agg", "rank", "filt", "payout", "scaled-rank"] = "agg"
    alpha: Optional[float] = Field(None, gt=0.0, lt=1.0)


class RandomGroups(_Strict):
    count: int = Field(100, ge=1)
    fraction: float = Field(0.1, gt=0.0, le=1.0)
    seed: int = 0


class TargetConfig(_Strict):
    indices: Optional[List[int]] = None
    random_groups: Optional[RandomGroups] = None


class RunConfig(_Strict):
    schema_: Literal["semival-config/1"] = Field(SCHEMA, alias="schema")
    dataset: DatasetConfig
    learner: LearnerConfig = Field(RidgeConfig(), discriminator="kind")
    metric: MetricConfig = MetricConfig()
    family: FamilyConfig = FamilyConfig()
    weights: Literal["shapley", "banzhaf", "loo"] = "shapley"
    mode: Literal["exact", "sampled"] = "exact"
    budget: int = Field(50, ge=1)
    seed: int = 0
    shared_draws: bool = False
    exact_cap: int = Field(20, ge=1)
    favorability: List[FavorabilityConfig] = [FavorabilityConfig(kind="payout"),
                                              FavorabilityConfig(kind="scaled-rank")]
    target: TargetConfig = TargetConfig()
    alpha: float = Field(0.1, gt=0.0, lt=1.0)

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def _consistent(self):
        classification = self.dataset.task == "classification"
        learner_cls = self.learner.kind == "logistic"
        if self.learner.kind != "untrained" and classification != learner_cls:
            raise ValueError(f"learner {self.learner.kind!r} does not fit task {self.dataset.task!r}")
        if self.family.kind == "cost" and not classification:
            raise ValueError("the cost family needs a classification task")
        if self.family.kind == "mono" and classification:
            raise ValueError("the mono family is defined for regression scores")
        return self

    def echo(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)


def _format(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(raw: dict, base_dir: str | Path | None = None) -> RunConfig:
    """Validate a config mapping, resolving the dataset path against ``base_dir``."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format(exc)) from None
    path = Path(cfg.dataset.path)
    if base_dir is not None and not path.is_absolute():
        path = (Path(base_dir) / path).resolve()
        cfg = cfg.model_copy(update={"dataset": cfg.dataset.model_copy(update={"path": str(path)})})
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", path=str(path)) from None
    return parse_config(raw, base_dir=path.parent)


def random_groups(n: int, count: int, fraction: float, seed: int) -> list[list[int]]:
    """``count`` independent groups of ``floor(fraction * n)`` indices (at least one)."""
    size = max(1, math.floor(fraction * n))
    rng = np.random.default_rng(seed)
    return [sorted(int(i) for i in rng.choice(n, size=size, replace=False)) for _ in range(count)]
