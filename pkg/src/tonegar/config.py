"""Run configuration: one JSON file, flag overrides, reproducible resolution."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .midas import MidasConfig

OUTPUT_ROOT_ENV = "TONEGAR_OUT"

INPUT_PATH_FIELDS = (
    "metadata",
    "text_root",
    "lexicon",
    "caps_daily",
    "caps_quarterly",
    "gdp",
    "benchmark",
    "recession_flags",
)


@dataclass
class PipelineConfig:
    metadata: Path
    text_root: Path
    lexicon: Path
    caps_daily: Path
    caps_quarterly: Path
    gdp: Path
    benchmark: Path
    recession_flags: Path
    output_dir: Path
    weekly_index: Path | None = None  # defaults to the index stage's output
    seed: int = 1234
    word_floor: int = 610
    window: int = 80
    tau: float = 0.05
    headline: str = "gar"
    benchmark_name: str = "benchmark"
    predictor_name: str = "tone"
    grid_lag_orders: tuple[int, ...] = (2, 4, 6, 8)
    grid_windows: tuple[int, ...] = (40, 60, 80, 100)
    midas: MidasConfig = field(default_factory=MidasConfig)

    def __post_init__(self) -> None:
        for name in (*INPUT_PATH_FIELDS, "output_dir"):
            setattr(self, name, Path(getattr(self, name)))
        if self.weekly_index is not None:
            self.weekly_index = Path(self.weekly_index)
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root:
            self.output_dir = Path(root) / self.output_dir.name

    @classmethod
    def from_dict(cls, data: dict) -> PipelineConfig:
        data = dict(data)
        midas = data.pop("midas", None)
        if midas is not None:
            midas = MidasConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in midas.items()})
        else:
            midas = MidasConfig()
        for key in ("grid_lag_orders", "grid_windows"):
            if key in data:
                data[key] = tuple(data[key])
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        return cls(midas=midas, **data)

    @classmethod
    def from_file(cls, path: str | Path) -> PipelineConfig:
        with Path(path).open(encoding="utf-8") as handle:
            return cls.from_dict(json.load(handle))

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        for key, value in data.items():
            if isinstance(value, Path):
                data[key] = str(value)
        data["midas"] = {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self.midas).items()}
        data["grid_lag_orders"] = list(self.grid_lag_orders)
        data["grid_windows"] = list(self.grid_windows)
        return data

    def validate_inputs(self) -> list[str]:
        """Names of configured input paths that do not exist."""
        missing = []
        for name in INPUT_PATH_FIELDS:
            if not Path(getattr(self, name)).exists():
                missing.append(f"{name}: {getattr(self, name)}")
        return missing

    def write_resolved(self, outdir: Path) -> None:
        outdir.mkdir(parents=True, exist_ok=True)
        payload = json.dumps(self.to_dict(), indent=1, sort_keys=True)
        (outdir / "resolved_config.json").write_text(payload + "\n", encoding="utf-8")

    def weekly_index_path(self) -> Path:
        if self.weekly_index is not None:
            return self.weekly_index
        return self.output_dir / "index" / "weekly_tone.csv"
