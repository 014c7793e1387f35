# bornlab/scenario.py - Scenario file format: parsing, validation, bundled scenarios
import math
import re
from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Tuple, TypeVar, Union

from pydantic import BaseModel, Field

from .assignments import CATALOG
from .exact import parse_quad, parse_rational
from .exceptions import BornLabError, ScenarioError
from .properties import (
    CONTINUITY_PATHS,
    CONTINUITY_TOL,
    DEFAULT_DIMS,
    DEFAULT_TAG_POLICY,
    DEFAULT_TOL,
    DEFAULT_TRIALS,
    NONNEGATIVITY_TOL,
    NORMALIZATION_TOL,
    PROPERTY_NAMES,
    TAG_POLICIES,
)

SCENARIO_DIR = Path(__file__).parent / "scenarios"
SCENARIO_SUFFIX = ".scn"
VERDICTS = ("holds", "fails", "n/a")

_SECTION_RE = re.compile(r"^\[([a-z]+)\]$")
_EXPECT_RE = re.compile(r"^expect\s+(\S+)\s+(\S+)\s*=\s*(\S+)$")
_KEY_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_.\-]*)\s*=\s*(.*)$")

T = TypeVar("T")


# ===== SCENARIO MODELS =====
class Expectation(BaseModel):
    assignment: str
    property: str
    expected: Literal["holds", "fails", "n/a"]
    line: int = 0


class GleasonBlock(BaseModel):
    kind: Literal["gleason"] = "gleason"
    line: int = 0
    assignment: str = "born"
    d: int = 3
    frames: int = 20
    subspaces: List[int] = Field(default_factory=list)
    threshold: float = 1e-6


class EnvarianceBlock(BaseModel):
    kind: Literal["envariance"] = "envariance"
    line: int = 0
    n: List[int] = Field(default_factory=lambda: [2, 3, 4])


class FinegrainBlock(BaseModel):
    kind: Literal["finegrain"] = "finegrain"
    line: int = 0
    pairs: List[Tuple[int, int]] = Field(default_factory=list)


class HartleBlock(BaseModel):
    kind: Literal["hartle"] = "hartle"
    line: int = 0
    p: List[str] = Field(default_factory=lambda: ["1/2", "1/2"])
    k: int = 0
    N: List[int] = Field(default_factory=lambda: [100, 1000, 10000, 100000])


class MixtureBlock(BaseModel):
    kind: Literal["mixture"] = "mixture"
    line: int = 0
    weights: List[str] = Field(default_factory=list)
    q: List[str] = Field(default_factory=list)
    k: int = 0
    N: List[int] = Field(default_factory=lambda: [100, 1000, 10000, 100000])


class ContinuityBlock(BaseModel):
    kind: Literal["continuity"] = "continuity"
    line: int = 0
    assignment: str
    path: str
    grid: List[str]
    tolerance: float = CONTINUITY_TOL


class BuschBlock(BaseModel):
    kind: Literal["busch"] = "busch"
    line: int = 0
    assignment: str = "born"
    rationals: List[str] = Field(default_factory=list)
    reals: List[str] = Field(default_factory=list)
    depth: int = 20
    tag: Optional[str] = None


class PathologyBlock(BaseModel):
    kind: Literal["pathology"] = "pathology"
    line: int = 0
    c1: str = "1"
    c2: str = "10000"
    pairs: int = 10000
    within: float = 1e-6


HarnessBlock = Union[
    GleasonBlock, EnvarianceBlock, FinegrainBlock, HartleBlock, MixtureBlock, ContinuityBlock, BuschBlock, PathologyBlock
]


class ScenarioSpec(BaseModel):
    """Parsed and validated scenario"""
    name: str
    seed: int
    dims: List[int] = Field(default_factory=lambda: list(DEFAULT_DIMS))
    assignments: List[str] = Field(default_factory=list)
    properties: List[str] = Field(default_factory=lambda: list(PROPERTY_NAMES))
    trials: int = DEFAULT_TRIALS
    tolerances: Dict[str, float] = Field(default_factory=dict)
    tag_policy: Optional[str] = DEFAULT_TAG_POLICY
    lemma1: bool = False
    expectations: List[Expectation] = Field(default_factory=list)
    blocks: List[HarnessBlock] = Field(default_factory=list)
    path: str = "<scenario>"

    def tolerance_for(self, prop: str) -> float:
        if prop in self.tolerances:
            return self.tolerances[prop]
        if "default" in self.tolerances:
            return self.tolerances["default"]
        if prop == "normalization":
            return NORMALIZATION_TOL
        if prop == "non-negativity":
            return NONNEGATIVITY_TOL
        return DEFAULT_TOL

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return self.model_copy(update={"seed": seed})

    def echo(self) -> Dict[str, object]:
        """Scenario fields for the report, without the source path."""
        return self.model_dump(mode="json", exclude={"path"})


# ===== VALUE PARSERS =====
def _items(text: str) -> List[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _convert(text: str, convert: Callable[[str], T], what: str, line: int, path: str) -> T:
    try:
        return convert(text)
    except (ValueError, BornLabError):
        raise ScenarioError(f"invalid {what}: {text!r}", line, path) from None


def _int(text: str, line: int, path: str) -> int:
    return _convert(text.strip(), int, "integer", line, path)


def _ints(text: str, line: int, path: str) -> List[int]:
    return [_int(t, line, path) for t in _items(text)]


def _positive_ints(text: str, line: int, path: str) -> List[int]:
    values = _ints(text, line, path)
    if not values or any(v < 1 for v in values):
        raise ScenarioError(f"expected positive integers, got {text.strip()!r}", line, path)
    return values


def _positive_float(text: str, line: int, path: str, what: str = "tolerance") -> float:
    value = _convert(text.strip(), float, what, line, path)
    if not value > 0 or math.isinf(value):
        raise ScenarioError(f"{what} must be positive and finite, got {text.strip()}", line, path)
    return value


def _bool(text: str, line: int, path: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ScenarioError(f"invalid boolean: {text!r}", line, path)


def _rationals(text: str, line: int, path: str) -> List[str]:
    items = _items(text)
    for t in items:
        _convert(t, parse_rational, "rational literal", line, path)
    return items


def _quads(text: str, line: int, path: str) -> List[str]:
    items = _items(text)
    for t in items:
        _convert(t, parse_quad, "Q(sqrt2) literal", line, path)
    return items


def _pairs(text: str, line: int, path: str) -> List[Tuple[int, int]]:
    pairs = []
    for item in _items(text):
        m, sep, n = item.partition(":")
        if not sep:
            raise ScenarioError(f"expected m:n, got {item!r}", line, path)
        pairs.append((_int(m, line, path), _int(n, line, path)))
    return pairs


def _assignment(text: str, line: int, path: str) -> str:
    name = text.strip()
    if name not in CATALOG:
        raise ScenarioError(f"unknown assignment '{name}'", line, path)
    return name


# ===== BLOCK SCHEMAS =====
Parser = Callable[[str, int, str], object]

_BLOCK_KEYS: Dict[str, Tuple[type, Dict[str, Parser]]] = {
    "gleason": (GleasonBlock, {
        "assignment": _assignment,
        "d": _int,
        "frames": _int,
        "subspaces": _ints,
        "threshold": _positive_float,
    }),
    "envariance": (EnvarianceBlock, {"n": _positive_ints}),
    "finegrain": (FinegrainBlock, {"pairs": _pairs}),
    "hartle": (HartleBlock, {"p": _rationals, "k": _int, "N": _ints}),
    "mixture": (MixtureBlock, {"weights": _rationals, "q": _rationals, "k": _int, "N": _ints}),
    "continuity": (ContinuityBlock, {
        "assignment": _assignment,
        "path": lambda t, line, path: _choice(t, CONTINUITY_PATHS, "continuity path", line, path),
        "grid": _quads,
        "tolerance": _positive_float,
    }),
    "busch": (BuschBlock, {
        "assignment": _assignment,
        "rationals": _rationals,
        "reals": _quads,
        "depth": _int,
        "tag": lambda t, line, path: _quads(t, line, path)[0],
    }),
    "pathology": (PathologyBlock, {
        "c1": lambda t, line, path: _rationals(t, line, path)[0],
        "c2": lambda t, line, path: _rationals(t, line, path)[0],
        "pairs": _int,
        "within": lambda t, line, path: _positive_float(t, line, path, "distance"),
    }),
}

_REQUIRED_KEYS = {"continuity": ("assignment", "path", "grid")}


def _choice(text: str, allowed: Tuple[str, ...], what: str, line: int, path: str) -> str:
    value = text.strip()
    if value not in allowed:
        raise ScenarioError(f"unknown {what} '{value}' (expected one of {', '.join(allowed)})", line, path)
    return value


# ===== PARSER =====
class _Section:
    def __init__(self, kind: str, line: int):
        self.kind = kind
        self.line = line
        self.values: Dict[str, object] = {}


def parse_scenario(text: str, path: str = "<scenario>") -> ScenarioSpec:
    """
    Parse the line-oriented scenario format.

    Top-level ``key = value`` lines configure the property matrix, ``expect``
    lines declare verdicts, and ``[block]`` headers open harness blocks whose
    keys run until the next header. ``#`` starts a comment.
    """
    top: Dict[str, object] = {}
    seen: Dict[str, int] = {}
    tolerances: Dict[str, float] = {}
    expectations: List[Expectation] = []
    sections: List[_Section] = []
    current: Optional[_Section] = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        header = _SECTION_RE.match(line)
        if header:
            kind = header.group(1)
            if kind not in _BLOCK_KEYS:
                raise ScenarioError(f"unknown block [{kind}]", lineno, path)
            current = _Section(kind, lineno)
            sections.append(current)
            continue

        expect = _EXPECT_RE.match(line)
        if expect:
            if current is not None:
                raise ScenarioError("expect lines belong before the first block", lineno, path)
            a, prop, verdict = expect.groups()
            _assignment(a, lineno, path)
            _choice(prop, PROPERTY_NAMES, "property", lineno, path)
            _choice(verdict, VERDICTS, "verdict", lineno, path)
            expectations.append(Expectation(assignment=a, property=prop, expected=verdict, line=lineno))
            continue

        kv = _KEY_RE.match(line)
        if not kv:
            raise ScenarioError(f"cannot parse line: {line!r}", lineno, path)
        key, value = kv.group(1), kv.group(2)

        if current is not None:
            _, schema = _BLOCK_KEYS[current.kind]
            if key not in schema:
                raise ScenarioError(f"unknown key '{key}' in [{current.kind}]", lineno, path)
            if key in current.values:
                raise ScenarioError(f"duplicate key '{key}' in [{current.kind}]", lineno, path)
            current.values[key] = schema[key](value, lineno, path)
            continue

        if key == "tolerance" or key.startswith("tolerance."):
            prop = key.partition(".")[2] or "default"
            if prop != "default":
                _choice(prop, PROPERTY_NAMES, "property", lineno, path)
            if prop in tolerances:
                raise ScenarioError(f"duplicate key '{key}'", lineno, path)
            tolerances[prop] = _positive_float(value, lineno, path)
            continue

        if key in seen:
            raise ScenarioError(f"duplicate key '{key}' (first set on line {seen[key]})", lineno, path)
        seen[key] = lineno
        top[key] = _top_level(key, value, lineno, path)

    if "seed" not in top:
        raise ScenarioError("'seed' is mandatory", 0, path)

    blocks = []
    for section in sections:
        model, _ = _BLOCK_KEYS[section.kind]
        missing = [k for k in _REQUIRED_KEYS.get(section.kind, ()) if k not in section.values]
        if missing:
            raise ScenarioError(f"[{section.kind}] is missing {', '.join(missing)}", section.line, path)
        blocks.append(model(line=section.line, **section.values))

    return ScenarioSpec(
        name=str(top.get("name", Path(path).stem)),
        tolerances=tolerances,
        expectations=expectations,
        blocks=blocks,
        path=path,
        **{k: v for k, v in top.items() if k != "name"},
    )


def _top_level(key: str, value: str, line: int, path: str) -> object:
    if key == "name":
        return value.strip()
    if key == "seed":
        return _int(value, line, path)
    if key == "trials":
        trials = _int(value, line, path)
        if trials < 1:
            raise ScenarioError(f"trials must be positive, got {trials}", line, path)
        return trials
    if key == "dims":
        dims = _ints(value, line, path)
        if any(d < 1 for d in dims):
            raise ScenarioError(f"dimensions must be positive, got {dims}", line, path)
        return dims
    if key == "assignments":
        return [_assignment(a, line, path) for a in _items(value)]
    if key == "properties":
        return [_choice(p, PROPERTY_NAMES, "property", line, path) for p in _items(value)]
    if key == "tag_policy":
        return _choice(value, TAG_POLICIES, "tag policy", line, path)
    if key == "lemma1":
        return _bool(value, line, path)
    raise ScenarioError(f"unknown key '{key}'", line, path)


def resolve_scenario_path(name_or_path: Union[str, Path]) -> Path:
    """Existing file paths win; bare names resolve to bundled scenarios."""
    candidate = Path(name_or_path)
    if candidate.is_file():
        return candidate
    bundled = SCENARIO_DIR / f"{name_or_path}{SCENARIO_SUFFIX}"
    if bundled.is_file():
        return bundled
    raise ScenarioError(f"no scenario file or bundled scenario named '{name_or_path}'", 0, str(name_or_path))


def load_scenario(name_or_path: Union[str, Path]) -> ScenarioSpec:
    path = resolve_scenario_path(name_or_path)
    return parse_scenario(path.read_text(encoding="utf-8"), str(path))


def bundled_scenarios() -> List[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob(f"*{SCENARIO_SUFFIX}"))
