# bornlab/lab.py - BornLab facade: checks, harnesses, scenario runs and report files
import csv
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np

from .assignments import CATALOG, get_assignment
from .config import VERSION, LabSettings, resolve_output_dir
from .derivations import (
    BipartiteState,
    additive_pathology,
    busch_homogeneity_probe,
    dyadic_tail_check,
    envariance_check,
    fine_grain,
    swap_derivation,
    swap_pair,
    zurek_chain,
)
from .exact import ProbabilityTag, QuadRational, parse_quad, parse_rational
from .exceptions import InvalidSpecError, InvalidSplitError
from .frequency import (
    FrequencySpec,
    closed_form_deviation,
    hartle_convergence_study,
    mixed_variance_gap,
    mixture_bruteforce,
    mixture_from_q,
)
from .gleason import fit_density, regularity_verdict
from .linalg import HermitianOperator, derive_seed, random_density_matrix
from .models import (
    ContinuityResult,
    ExpectationOutcome,
    Lemma1Record,
    PropertyMatrix,
    PropertyVerdict,
    Report,
    operator_payload,
)
from .properties import (
    CONTINUITY_PATHS,
    PROPERTY_NAMES,
    TAG_POLICIES,
    GridPoint,
    build_property_matrix,
    cell_seed,
    continuity_probe,
    frame_weight_check,
    lemma1_crosscheck,
    run_check,
)
from .scenario import (
    BuschBlock,
    ContinuityBlock,
    EnvarianceBlock,
    FinegrainBlock,
    GleasonBlock,
    HartleBlock,
    MixtureBlock,
    PathologyBlock,
    ScenarioSpec,
    load_scenario,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INVALID_INPUT = 2

BRUTEFORCE_MIXTURE_COPIES = 8
UNEQUAL_CONTROL = (math.sqrt(0.7), math.sqrt(0.3))

PROPERTY_ANCHORS = {
    "additivity": "mu(A + B) = mu(A) + mu(B) for co-measured A, B",
    "anc": "additive value of a sum does not depend on the splitting context",
    "onc": "mu(A) does not depend on the compatible measurements accompanying A",
    "normalization": "mu(I) = 1",
    "strong-normalization": "sum_i mu(A_i) = 1 for every complete context",
    "non-negativity": "mu(A) >= 0",
    "state-affinity": "mu(sum_j p_j rho_j, A) = sum_j p_j mu(rho_j, A)",
}

HARNESS_ANCHORS = {
    "busch": "homogeneity on rational and real coefficients, dyadic tail sums",
    "continuity": "jumps along amplitude, scaling and frame-rotation paths",
    "envariance": "swap residuals and the exact swap-symmetry derivation p_i = 1/n",
    "finegrain": "equal-amplitude fine graining against the conditional chain m/n",
    "gleason": "least-squares density fit of a frame function, regular vs non-regular",
    "hartle": "finite-N frequency deviation norm and its log-log slope",
    "mixture": "frequency variance under rho^(x)N vs a mixture of product states",
    "pathology": "exact Cauchy checks and a discontinuity witness for two-slope",
}

PATH_ANCHORS = {
    "amplitude-sweep": "state |0> weight swept over [0, 1] in d=2",
    "frame-rotation": "rank-1 projector rotated through angle theta in d=2",
    "scaling-sweep": "effect c * |0><0| for c in [0, 1]",
}


def grid_point(text: str) -> GridPoint:
    x = parse_quad(text)
    return x.a if x.is_rational else x


def _exact_str(x: Union[Fraction, QuadRational]) -> str:
    return str(x)


class BornLab:
    """
    Entry point for property checks and derivation harnesses.

    Args:
        seed: Base seed; every check and block derives its own seed from it
        jobs: Worker threads for the property matrix
        settings: Defaults for dims, trials, tolerances and tag policy
    """

    def __init__(self, seed: int = 0, jobs: int = 1, settings: Optional[LabSettings] = None):
        if jobs < 1:
            raise InvalidSpecError(f"jobs must be at least 1, got {jobs}")
        self.seed = seed
        self.settings = settings or LabSettings(jobs=jobs)
        self.jobs = jobs
        self._executor = ThreadPoolExecutor(max_workers=jobs, thread_name_prefix="bornlab")
        self.timings: Dict[str, float] = {}

    def _timed(self, key: str, fn: Callable[[], T]) -> T:
        started = time.perf_counter()
        result = fn()
        self.timings[key] = time.perf_counter() - started
        logger.info("%s finished in %.2fs", key, self.timings[key])
        return result

    # ===== PROPERTY CHECKS =====
    def check(
        self,
        assignment: str,
        prop: str,
        dims: Optional[Sequence[int]] = None,
        trials: Optional[int] = None,
        tol: Optional[float] = None,
        tag_policy: Optional[str] = None,
    ) -> PropertyVerdict:
        """Run one property check with the same per-cell seed a matrix run would use."""
        if tol is not None and not tol > 0:
            raise InvalidSpecError(f"tolerances must be positive, got {tol}")
        a = get_assignment(assignment)
        return run_check(
            a,
            prop,
            list(dims) if dims is not None else list(self.settings.dims),
            trials if trials is not None else self.settings.trials,
            tol if tol is not None else self.settings.tolerance,
            cell_seed(self.seed, a.name, prop),
            tag_policy or self.settings.tag_policy,
        )

    def matrix(self, spec: ScenarioSpec) -> PropertyMatrix:
        return build_property_matrix(spec.assignments, spec.properties, spec, self._executor, self.timings)

    def lemma1(self, spec: ScenarioSpec, matrix: Optional[PropertyMatrix] = None) -> List[Lemma1Record]:
        records = []
        for name in spec.assignments:
            verdicts = dict(matrix.cells.get(name, {})) if matrix is not None else {}
            records.append(
                self._timed(
                    f"lemma1:{name}",
                    lambda name=name, verdicts=verdicts: lemma1_crosscheck(
                        get_assignment(name),
                        spec.dims,
                        spec.trials,
                        spec.tolerance_for("strong-normalization"),
                        spec.seed,
                        spec.tag_policy,
                        verdicts,
                    ),
                )
            )
        return records

    # ===== HARNESSES =====
    def gleason_fit(
        self,
        assignment: str,
        d: int,
        frames: int,
        subspaces: Sequence[int] = (),
        threshold: Optional[float] = None,
    ) -> Dict[str, Any]:
        """Fit a density to the assignment's frame function and classify it."""
        a = get_assignment(assignment)
        seed = derive_seed(self.seed, "gleason", a.name, d)
        hidden = random_density_matrix(d, derive_seed(seed, "hidden-state")) if a.uses_state else None
        fit = fit_density(a, d, frames, seed, hidden)
        result: Dict[str, Any] = {
            "assignment": a.name,
            "d": d,
            "frames": frames,
            "residual_rms": fit.residual_rms,
            "condition": fit.condition,
            "rank": fit.rank,
            "sample_count": fit.sample_count,
            "weight": fit.weight,
            "verdict": regularity_verdict(fit, threshold or self.settings.fit_threshold),
            "rho_hat": operator_payload(fit.rho_hat.entries),
        }
        if hidden is not None:
            result["hidden_state_error"] = fit.rho_hat.distance(hidden)
        if subspaces:
            result["frame_weight"] = frame_weight_check(
                a, d, subspaces, trials=frames, seed=derive_seed(seed, "frame-weight"), state=hidden
            ).model_dump(mode="json")
        return result

    def envariance(self, ns: Sequence[int]) -> Dict[str, Any]:
        """Swap residuals on equal-amplitude Schmidt states, the exact 1/n solution, and an unequal control."""
        if any(n < 1 for n in ns):
            raise InvalidSplitError(f"envariance needs at least one branch, got n={list(ns)}")
        swaps = []
        for n in ns:
            psi = BipartiteState.from_schmidt([1.0 / math.sqrt(n)] * n)
            if n >= 2:
                u_s, u_e = swap_pair(psi, 0, 1)
                residual = envariance_check(psi, u_s, u_e)
            else:
                residual = envariance_check(psi, np.eye(1), np.eye(1))
            swaps.append({
                "n": n,
                "residual": residual,
                "probabilities": [_exact_str(p) for p in swap_derivation(n)],
            })
        control = BipartiteState.from_schmidt(UNEQUAL_CONTROL)
        u_s, u_e = swap_pair(control, 0, 1)
        return {"swaps": swaps, "unequal_control": envariance_check(control, u_s, u_e)}

    def finegrain(self, pairs: Sequence[Tuple[int, int]]) -> List[Dict[str, Any]]:
        results = []
        for m, n in pairs:
            first, second = fine_grain(m, n)
            chain = zurek_chain(m, n)
            results.append({
                "m": m,
                "n": n,
                "fine_grained": [_exact_str(first), _exact_str(second)],
                "chain": _exact_str(chain),
                "agree": first == chain,
            })
        return results

    def hartle(self, probabilities: Sequence[Any], k: int, grid: Sequence[int]) -> Dict[str, Any]:
        spec = FrequencySpec(probabilities=list(probabilities), k=k)
        series = hartle_convergence_study(spec, grid)
        result = series.model_dump(mode="json")
        result["p"] = spec.p
        result["closed_form"] = [(n, closed_form_deviation(spec.p, n)) for n in grid]
        return result

    def mixture(self, weights: Sequence[Any], qs: Sequence[Any], k: int, grid: Sequence[int]) -> Dict[str, Any]:
        mix = mixture_from_q(weights, qs)
        gap = mixed_variance_gap(mix, k, grid)
        result = gap.model_dump(mode="json")
        copies = BRUTEFORCE_MIXTURE_COPIES
        result["bruteforce"] = {"N": copies, **mixture_bruteforce(mix, k, copies).model_dump()}
        return result

    def continuity(
        self, assignment: str, path: str, grid: Sequence[GridPoint], tol: Optional[float] = None
    ) -> ContinuityResult:
        a = get_assignment(assignment)
        return continuity_probe(a, path, grid, tol if tol is not None else self.settings.continuity_tolerance)

    def busch(
        self,
        assignment: str,
        rationals: Sequence[Fraction],
        reals: Sequence[GridPoint],
        depth: int = 20,
        tag: Optional[ProbabilityTag] = None,
    ) -> Dict[str, Any]:
        """Homogeneity and dyadic-tail probes on the effect |0><0| in d=2."""
        a = get_assignment(assignment)
        op = HermitianOperator(entries=np.diag([1.0, 0.0]))
        if tag is None and a.uses_tags:
            tag = ProbabilityTag.rational(1)
        homogeneity = busch_homogeneity_probe(a, op, rationals, reals, self.settings.tolerance, tag=tag)
        dyadic = dyadic_tail_check(a, op, depth, tag=tag)
        return {
            "assignment": a.name,
            "homogeneity": homogeneity.model_dump(mode="json"),
            "dyadic": dyadic.model_dump(mode="json"),
        }

    def pathology(self, c1: Any = 1, c2: Any = 10000, pairs: int = 10000, within: float = 1e-6) -> Dict[str, Any]:
        return additive_pathology(c1, c2, pairs, within, seed=derive_seed(self.seed, "pathology")).model_dump()

    # ===== SCENARIOS =====
    def run_scenario(self, spec: ScenarioSpec, expect_strict: bool = False) -> Tuple[Report, int]:
        """Execute every matrix cell and harness block of a scenario."""
        self.seed = spec.seed
        self.timings = {}
        matrix = self.matrix(spec) if spec.assignments else PropertyMatrix()
        lemma1 = self.lemma1(spec, matrix) if spec.lemma1 else []

        harness: Dict[str, List[Dict[str, Any]]] = {}
        series: Dict[str, List[Tuple[float, float]]] = {}
        for i, block in enumerate(spec.blocks):
            key = f"harness:{block.kind}:{i}"
            result = self._timed(key, lambda block=block: self._run_block(block))
            result["line"] = block.line
            harness.setdefault(block.kind, []).append(result)
            series.update(_block_series(block.kind, i, result))

        expectations = [self._expectation(spec, matrix, e) for e in spec.expectations]
        mismatches = []
        for outcome in expectations:
            if outcome.agrees:
                continue
            message = (
                f"line {outcome.line}: expected {outcome.assignment} {outcome.property} "
                f"{outcome.expected}, got {outcome.actual}"
            )
            if outcome.actual == "n/a" and not expect_strict:
                logger.warning("%s (not applicable, ignored without --expect-strict)", message)
                continue
            mismatches.append(message)
        for record in lemma1:
            if record.consistent is False:
                mismatches.append(f"lemma1: {record.assignment} strong={record.strong} "
                                  f"additive={record.additive} normalized={record.normalized}")

        report = Report(
            version=VERSION,
            scenario=spec.echo(),
            seed=spec.seed,
            matrix=matrix,
            lemma1=lemma1,
            harness=harness,
            expectations=expectations,
            mismatches=mismatches,
            series=series,
            timings=dict(self.timings),
        )
        for m in mismatches:
            logger.error("mismatch: %s", m)
        return report, EXIT_MISMATCH if mismatches else EXIT_OK

    def _expectation(self, spec: ScenarioSpec, matrix: PropertyMatrix, e: Any) -> ExpectationOutcome:
        if e.property in matrix.cells.get(e.assignment, {}):
            verdict = matrix.cell(e.assignment, e.property)
        else:
            verdict = run_check(
                get_assignment(e.assignment),
                e.property,
                spec.dims,
                spec.trials,
                spec.tolerance_for(e.property),
                cell_seed(spec.seed, e.assignment, e.property),
                spec.tag_policy,
            )
        return ExpectationOutcome(
            assignment=e.assignment, property=e.property, expected=e.expected, actual=verdict.status, line=e.line
        )

    def _run_block(self, block: Any) -> Dict[str, Any]:
        if isinstance(block, GleasonBlock):
            return self.gleason_fit(block.assignment, block.d, block.frames, block.subspaces, block.threshold)
        if isinstance(block, EnvarianceBlock):
            return self.envariance(block.n)
        if isinstance(block, FinegrainBlock):
            return {"pairs": self.finegrain(block.pairs)}
        if isinstance(block, HartleBlock):
            return self.hartle(block.p, block.k, block.N)
        if isinstance(block, MixtureBlock):
            return self.mixture(block.weights, block.q, block.k, block.N)
        if isinstance(block, ContinuityBlock):
            grid = [grid_point(g) for g in block.grid]
            return self.continuity(block.assignment, block.path, grid, block.tolerance).model_dump(mode="json")
        if isinstance(block, BuschBlock):
            tag = ProbabilityTag(parse_quad(block.tag)) if block.tag else None
            rationals = [parse_rational(q) for q in block.rationals]
            reals = [grid_point(r) for r in block.reals]
            return self.busch(block.assignment, rationals, reals, block.depth, tag)
        if isinstance(block, PathologyBlock):
            return self.pathology(parse_rational(block.c1), parse_rational(block.c2), block.pairs, block.within)
        raise TypeError(f"unhandled block {type(block).__name__}")

    def close(self) -> None:
        self._executor.shutdown(wait=True)

    def __enter__(self) -> "BornLab":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


def _block_series(kind: str, index: int, result: Dict[str, Any]) -> Dict[str, List[Tuple[float, float]]]:
    prefix = f"{kind}-{index}"
    if kind == "hartle":
        return {prefix: [(float(n), float(v)) for n, v in result["points"]]}
    if kind == "mixture":
        return {
            f"{prefix}-iid": [(float(n), float(v)) for n, v in result["iid"]["points"]],
            f"{prefix}-mixture": [(float(n), float(v)) for n, v in result["mixture"]["points"]],
        }
    if kind == "continuity":
        return {
            f"{prefix}-{result['assignment']}-{result['path']}": [
                (p["parameter"], p["value"]) for p in result["series"]
            ]
        }
    if kind == "busch":
        h = result["homogeneity"]
        return {
            f"{prefix}-rational": [tuple(p) for p in h["rational_series"]],
            f"{prefix}-real": [tuple(p) for p in h["real_series"]],
            f"{prefix}-dyadic": [(float(i), float(s)) for i, s in result["dyadic"]["partial_sums"]],
        }
    return {}


# ===== REPORT FILES =====
def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def write_report(report: Report, out_dir: Path) -> List[Path]:
    """report.json, matrix.csv and one (parameter, value) CSV per series."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
    written.append(report_path)

    statuses = report.matrix.statuses()
    path = out_dir / "matrix.csv"
    _write_csv(path, ["assignment", *report.matrix.columns],
               [[row, *(statuses[row][c] for c in report.matrix.columns)] for row in report.matrix.rows])
    written.append(path)

    for name, points in report.series.items():
        path = out_dir / f"{name}.csv"
        _write_csv(path, ["parameter", "value"], [(float(x), float(y)) for x, y in points])
        written.append(path)
    return written


def run_scenario(
    path: Union[str, Path],
    out: Optional[Union[str, Path]] = None,
    seed: Optional[int] = None,
    jobs: int = 1,
    expect_strict: bool = False,
) -> Tuple[Report, int]:
    """
    Load, run and write a scenario.

    Returns the report and the exit code (0 clean, 1 on expectation or Lemma 1
    mismatches). Invalid input raises; the CLI maps it to exit code 2.
    """
    spec = load_scenario(path)
    if seed is not None:
        spec = spec.with_seed(seed)
    with BornLab(seed=spec.seed, jobs=jobs) as lab:
        report, code = lab.run_scenario(spec, expect_strict=expect_strict)
    written = write_report(report, resolve_output_dir(out))
    logger.info("wrote %d files to %s", len(written), written[0].parent)
    return report, code


def list_catalog() -> str:
    """Alphabetized listing of assignments, properties, paths, tag policies and harness blocks."""
    sections = [
        ("assignments", {name: a.anchor for name, a in CATALOG.items()}),
        ("properties", {p: PROPERTY_ANCHORS[p] for p in PROPERTY_NAMES}),
        ("continuity paths", {p: PATH_ANCHORS[p] for p in CONTINUITY_PATHS}),
        ("tag policies", {p: "exact rational tags from a sampled basis" for p in TAG_POLICIES}),
        ("harnesses", HARNESS_ANCHORS),
    ]
    lines = []
    for title, entries in sections:
        lines.append(f"{title}:")
        width = max(len(name) for name in entries)
        for name in sorted(entries):
            lines.append(f"  {name.ljust(width)}  {entries[name]}")
    return "\n".join(lines) + "\n"
