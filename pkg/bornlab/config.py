# bornlab/config.py - Run-wide defaults and output-directory resolution
import os
from pathlib import Path
from typing import Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, field_validator

from .exceptions import BornLabError

VERSION = "1.0.0"
OUTPUT_ENV_VAR = "BORNLAB_OUT"
DEFAULT_OUTPUT_DIR = "bornlab-out"


class LabSettings(BaseModel):
    """Defaults applied when a scenario or call does not override them"""
    model_config = ConfigDict(frozen=True)

    trials: int = 200
    dims: Tuple[int, ...] = (2, 3, 4, 5)
    tag_policy: str = "rational-sector"
    tolerance: float = 1e-9
    continuity_tolerance: float = 0.1
    fit_threshold: float = 1e-6
    jobs: int = 1

    @field_validator("trials", "jobs")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 1:
            raise BornLabError(f"expected a positive integer, got {v}")
        return v

    @field_validator("tolerance", "continuity_tolerance", "fit_threshold")
    @classmethod
    def _positive_tolerance(cls, v: float) -> float:
        if not v > 0:
            raise BornLabError(f"tolerances must be positive, got {v}")
        return v


def resolve_output_dir(flag: Optional[Union[str, Path]] = None) -> Path:
    """--out flag, then $BORNLAB_OUT, then ./bornlab-out"""
    if flag:
        return Path(flag)
    env = os.environ.get(OUTPUT_ENV_VAR)
    if env:
        return Path(env)
    return Path.cwd() / DEFAULT_OUTPUT_DIR
