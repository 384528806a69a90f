"""Run configuration: one JSON file plus CLI overrides, hashed into every output."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from src import __version__


class RunConfig(BaseModel):
    """Everything a pipeline run depends on."""

    data_dir: Path
    output_dir: Path = Path("out")
    session_index: Optional[Path] = None
    survey_path: Optional[Path] = None

    window_seconds: int = Field(default=60, gt=0)
    scaling: Literal["pooled", "per-series"] = "pooled"
    drop_partial_window: bool = False

    k_range: tuple[int, int] = (2, 10)
    k: Optional[int] = Field(default=None, gt=0)
    seed: int = 0
    n_restarts: int = Field(default=10, gt=0)
    max_iter: int = Field(default=50, gt=0)
    dba_max_iter: int = Field(default=30, gt=0)
    barycenter_length: Optional[int] = Field(default=None, ge=2)
    dump_distance_matrix: bool = False

    similarity_provider: Literal["lexical", "http"] = "lexical"
    embed_url: Optional[str] = Field(default_factory=lambda: os.environ.get("EMBED_URL"))
    similarity_cache: Optional[Path] = None
    max_in_flight: int = Field(default=4, gt=0)

    holm: bool = False
    jobs: int = 1

    @model_validator(mode="after")
    def _check_ranges(self) -> "RunConfig":
        k_min, k_max = self.k_range
        if k_min < 2 or k_max < k_min:
            raise ValueError(f"k_range must satisfy 2 <= kMin <= kMax, got {self.k_range}")
        if self.similarity_provider == "http" and not self.embed_url:
            raise ValueError("similarity_provider 'http' needs embed_url or EMBED_URL")
        return self

    @classmethod
    def load(cls, path: Path | None = None, **overrides) -> "RunConfig":
        data: dict = {}
        if path is not None:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.model_validate(data)

    def resolve(self) -> "RunConfig":
        """Resolve paths and check they are readable/writable."""
        data_dir = self.data_dir.resolve()
        if not data_dir.is_dir():
            raise FileNotFoundError(f"data directory not found: {data_dir}")
        for p in (self.session_index, self.survey_path):
            if p is not None and not p.resolve().is_file():
                raise FileNotFoundError(f"input file not found: {p}")
        output_dir = self.output_dir.resolve()
        output_dir.mkdir(parents=True, exist_ok=True)
        if not os.access(output_dir, os.W_OK):
            raise PermissionError(f"output directory not writable: {output_dir}")
        return self.model_copy(
            update={
                "data_dir": data_dir,
                "output_dir": output_dir,
                "session_index": self.session_index.resolve() if self.session_index else None,
                "survey_path": self.survey_path.resolve() if self.survey_path else None,
                "similarity_cache": (
                    self.similarity_cache.resolve()
                    if self.similarity_cache
                    else output_dir / "similarity_cache.json"
                ),
            }
        )

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()[:16]

    def provenance(self) -> dict[str, str]:
        return {"config_hash": self.config_hash(), "version": __version__}
