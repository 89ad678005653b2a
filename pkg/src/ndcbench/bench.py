"""Benchmark orchestration: configs, result rows, the N_NDC metric and counts ingestion."""

from __future__ import annotations

import ast
import csv
import io
import json
import math
import operator
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import yaml

from .builders import MethodKind
from .errors import ParseError, ResourceError, SchemaError
from .noise import NoiseModel
from .protocol import ENGINES, LAYOUTS, NdcEstimate, OutcomeMap, estimate_violation, run_point
from .statevector import OutcomeCounts

NDC_THETA = math.pi / 4
CD_THETA = math.pi
GAUSSIAN_CAVEAT = (
    "N_NDC is the largest N whose violation exceeds the classical disturbance by three combined "
    "standard deviations; the 3-sigma separation is a significance statement only "
    "under the assumption of Gaussian noise."
)

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_NAMES = {"pi": math.pi, "tau": math.tau}


def parse_theta(text: str | float | int) -> float:
    """Evaluate an angle such as ``0.3``, ``pi/4`` or ``3*pi/4``."""
    if isinstance(text, (int, float)):
        return float(text)

    def ev(node: ast.AST) -> float:
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ParseError("unsupported angle expression", token=str(text))

    try:
        tree = ast.parse(str(text).strip(), mode="eval")
    except SyntaxError as exc:
        raise ParseError("malformed angle expression", token=str(text)) from exc
    return ev(tree.body)


@dataclass(frozen=True)
class ExperimentConfig:
    methods: tuple[str, ...] = ("H", "M")
    n_min: int = 2
    n_max: int = 20
    thetas: tuple[str, ...] = ("pi/4", "pi")
    noise: NoiseModel = field(default_factory=NoiseModel.default)
    n_runs: int = 20
    n_shots: int = 4000
    seed: int = 0
    output: str = "results"
    engine: str = "auto"
    layout: str = "lnn"
    workers: int = 1
    require_contiguous: bool = False

    def __post_init__(self) -> None:
        if not self.methods:
            raise SchemaError("at least one method is required")
        try:
            object.__setattr__(self, "methods", tuple(MethodKind.parse(m).value for m in self.methods))
        except ValueError as exc:
            raise SchemaError(str(exc)) from exc
        object.__setattr__(self, "thetas", tuple(str(t) for t in self.thetas))
        if self.n_min < 1 or self.n_max < self.n_min:
            raise SchemaError(f"empty N range {self.n_min}..{self.n_max}")
        if not self.thetas:
            raise SchemaError("theta list is empty")
        for t in self.thetas:
            parse_theta(t)
        if self.n_runs < 1 or self.n_shots < 1 or self.workers < 1:
            raise SchemaError("n_runs, n_shots and workers must be positive")
        if self.engine not in ENGINES:
            raise SchemaError(f"engine must be one of {ENGINES}")
        if self.layout not in LAYOUTS:
            raise SchemaError(f"layout must be one of {LAYOUTS}")

    @property
    def n_values(self) -> range:
        return range(self.n_min, self.n_max + 1)

    @property
    def theta_values(self) -> tuple[float, ...]:
        return tuple(parse_theta(t) for t in self.thetas)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["methods"] = list(self.methods)
        d["thetas"] = list(self.thetas)
        d["noise"] = self.noise.to_dict()
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        if not isinstance(data, Mapping):
            raise SchemaError("config must be a mapping")
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise SchemaError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(data)
        if "methods" in kw:
            kw["methods"] = tuple([kw["methods"]] if isinstance(kw["methods"], str) else kw["methods"])
        if "thetas" in kw:
            kw["thetas"] = tuple(str(t) for t in ([kw["thetas"]] if isinstance(kw["thetas"], (str, int, float)) else kw["thetas"]))
        if "noise" in kw:
            noise = kw["noise"]
            if noise is None or noise == "none":
                kw["noise"] = NoiseModel()
            elif noise == "default":
                kw["noise"] = NoiseModel.default()
            else:
                try:
                    kw["noise"] = NoiseModel.from_dict(dict(noise))
                except (TypeError, ValueError) as exc:
                    raise SchemaError(f"bad noise block: {exc}") from exc
        for key in ("n_min", "n_max", "n_runs", "n_shots", "seed", "workers"):
            if key in kw:
                kw[key] = int(kw[key])
        return cls(**kw)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise ParseError(str(getattr(exc, "problem", exc)), line=mark.line + 1 if mark else 0) from exc
        return cls.from_dict(data or {})

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


RESULT_COLUMNS = ("method", "n", "theta", "v_mean", "v_sigma", "n_runs", "n_shots", "seed", "noise_fingerprint")


@dataclass(frozen=True)
class ResultRow:
    method: str
    n: int
    theta: float
    v_mean: float
    v_sigma: float
    n_runs: int
    n_shots: int
    seed: int
    noise_fingerprint: str

    @classmethod
    def from_estimate(cls, method: str, n: int, theta: float, est: NdcEstimate, seed: int, fingerprint: str) -> "ResultRow":
        return cls(MethodKind.parse(method).value, n, float(theta), est.v, est.sigma,
                   est.n_runs, est.n_shots_per_run, seed, fingerprint)

    def to_record(self) -> list[str]:
        return [self.method, str(self.n), repr(self.theta), repr(self.v_mean), repr(self.v_sigma),
                str(self.n_runs), str(self.n_shots), str(self.seed), self.noise_fingerprint]


def write_rows(rows: Iterable[ResultRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        w.writerow(r.to_record())
    return buf.getvalue()


def read_rows(text: str) -> list[ResultRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != RESULT_COLUMNS:
        raise SchemaError(f"result CSV header must be {','.join(RESULT_COLUMNS)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(RESULT_COLUMNS):
            raise ParseError(f"expected {len(RESULT_COLUMNS)} fields, got {len(rec)}", line=lineno)
        try:
            rows.append(ResultRow(rec[0], int(rec[1]), float(rec[2]), float(rec[3]), float(rec[4]),
                                  int(rec[5]), int(rec[6]), int(rec[7]), rec[8]))
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
    return rows


@dataclass(frozen=True)
class MetricRow:
    n: int
    v_ndc: float
    sigma_ndc: float
    v_cd: float
    sigma_cd: float

    @property
    def discriminant(self) -> float:
        return self.v_ndc - abs(self.v_cd) - 3.0 * math.sqrt(self.sigma_ndc**2 + self.sigma_cd**2)

    @property
    def passes(self) -> bool:
        return self.discriminant >= 0


METRIC_COLUMNS = ("method", "n", "v_ndc", "sigma_ndc", "v_cd", "sigma_cd", "discriminant", "passes")


@dataclass(frozen=True)
class MetricReport:
    method: str
    rows: tuple[MetricRow, ...]
    require_contiguous: bool = False
    device: str = ""
    reference_device: str = ""
    reference_n_ndc: int | None = None
    notes: tuple[str, ...] = ()

    @property
    def n_ndc_literal(self) -> int | None:
        passing = [r.n for r in self.rows if r.passes]
        return max(passing) if passing else None

    @property
    def n_ndc_contiguous(self) -> int | None:
        best = None
        for r in self.rows:
            if not r.passes:
                break
            best = r.n
        return best

    @property
    def n_ndc(self) -> int | None:
        return self.n_ndc_contiguous if self.require_contiguous else self.n_ndc_literal

    @property
    def ratio(self) -> float | None:
        """This device's N_NDC over the reference device's, for the same method."""
        if self.n_ndc is None or not self.reference_n_ndc:
            return None
        return self.n_ndc / self.reference_n_ndc

    def compared_with(self, other: "MetricReport") -> "MetricReport":
        if other.method != self.method:
            raise SchemaError(f"cannot compare method {self.method} against {other.method}")
        return replace(self, reference_device=other.device, reference_n_ndc=other.n_ndc)

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(METRIC_COLUMNS)
        for r in self.rows:
            w.writerow([self.method, r.n, repr(r.v_ndc), repr(r.sigma_ndc), repr(r.v_cd),
                        repr(r.sigma_cd), repr(r.discriminant), int(r.passes)])
        return buf.getvalue()

    def summary(self) -> str:
        fmt = lambda v: "none" if v is None else str(v)
        name = f"{self.method}" + (f" on {self.device}" if self.device else "")
        lines = [f"method {name}: N_NDC = {fmt(self.n_ndc)}"
                 + (" (contiguous)" if self.require_contiguous else "")]
        if not self.require_contiguous and self.n_ndc_contiguous != self.n_ndc_literal:
            lines.append(f"  contiguous-prefix N_NDC = {fmt(self.n_ndc_contiguous)}")
        lines.append(f"  {'N':>3} {'V_NDC':>9} {'s_NDC':>8} {'V_CD':>9} {'s_CD':>8} {'disc':>9}")
        for r in self.rows:
            lines.append(f"  {r.n:>3} {r.v_ndc:>9.4f} {r.sigma_ndc:>8.4f} {r.v_cd:>9.4f} "
                         f"{r.sigma_cd:>8.4f} {r.discriminant:>9.4f}{'' if r.passes else '  x'}")
        if self.reference_n_ndc is not None:
            ref = self.reference_device or "reference"
            ratio = "undefined" if self.ratio is None else f"{self.ratio:.2f}"
            lines.append(f"  R = N_NDC / N_NDC({ref}) = {fmt(self.n_ndc)}/{self.reference_n_ndc} = {ratio}")
        lines.extend(f"  note: {n}" for n in self.notes)
        lines.append(GAUSSIAN_CAVEAT)
        return "\n".join(lines)


def _theta_is(value: float, target: float) -> bool:
    return math.isclose(value, target, rel_tol=0.0, abs_tol=1e-12)


def compute_n_ndc(
    rows: Sequence[ResultRow],
    method: str | None = None,
    require_contiguous: bool = False,
    ndc_theta: float = NDC_THETA,
    cd_theta: float = CD_THETA,
    device: str = "",
    notes: Sequence[str] = (),
) -> MetricReport:
    """Apply the three-sigma discriminant to per-N violation and control rows.

    Every N between the smallest and largest present must carry both the
    violation row and the control row; gaps are a schema error.
    """
    if method is not None:
        method = MethodKind.parse(method).value
        rows = [r for r in rows if r.method == method]
    methods = {r.method for r in rows}
    if len(methods) != 1:
        raise SchemaError(f"expected rows for exactly one method, got {sorted(methods) or 'none'}")
    method = methods.pop()
    ndc = {r.n: r for r in rows if _theta_is(r.theta, ndc_theta)}
    cd = {r.n: r for r in rows if _theta_is(r.theta, cd_theta)}
    if not ndc:
        raise SchemaError(f"no violation rows at theta={ndc_theta!r} for method {method}")
    ns = sorted(ndc)
    expected = list(range(ns[0], ns[-1] + 1))
    if ns != expected:
        missing = sorted(set(expected) - set(ns))
        raise SchemaError(f"method {method}: N range has gaps at {missing}")
    missing_cd = [n for n in ns if n not in cd]
    if missing_cd:
        raise SchemaError(f"method {method}: missing control row at theta={cd_theta!r} for N={missing_cd}")
    metric_rows = tuple(MetricRow(n, ndc[n].v_mean, ndc[n].v_sigma, cd[n].v_mean, cd[n].v_sigma) for n in ns)
    return MetricReport(method, metric_rows, require_contiguous, device, notes=tuple(notes))


@dataclass(frozen=True)
class BenchmarkResult:
    rows: tuple[ResultRow, ...]
    reports: tuple[MetricReport, ...]
    notes: tuple[str, ...]
    resource_limited: bool

    def results_csv(self) -> str:
        return write_rows(self.rows)

    def metric_csv(self) -> str:
        return "".join(r.to_csv(header=(i == 0)) for i, r in enumerate(self.reports)) or ",".join(METRIC_COLUMNS) + "\n"

    def summary(self) -> str:
        parts = [r.summary() for r in self.reports]
        parts.extend(f"note: {n}" for n in self.notes)
        return "\n\n".join(parts) + "\n"

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"results": out / "results.csv", "metric": out / "metric.csv", "summary": out / "summary.txt"}
        paths["results"].write_text(self.results_csv(), encoding="utf-8")
        paths["metric"].write_text(self.metric_csv(), encoding="utf-8")
        paths["summary"].write_text(self.summary(), encoding="utf-8")
        return paths


def _point(args: tuple) -> NdcEstimate:
    method, n, theta, noise, n_runs, n_shots, seed, engine, layout = args
    return run_point(method, n, theta, noise, n_runs, n_shots, seed, engine, layout)


def run_benchmark(config: ExperimentConfig, progress=None) -> BenchmarkResult:
    """Run every (method, N, theta) point of ``config``.

    Points are independent and keyed to their own random streams, so the
    worker budget never changes the output. A resource ceiling at some N
    records a note and skips the remaining N for that method.
    """
    fp = config.noise.fingerprint()
    thetas = list(zip(config.thetas, config.theta_values))
    rows: list[ResultRow] = []
    notes: list[str] = []
    limited = False
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for method in config.methods:
            for n in config.n_values:
                jobs = [(method, n, th, config.noise, config.n_runs, config.n_shots, config.seed,
                         config.engine, config.layout) for _, th in thetas]
                try:
                    ests = list(pool.map(_point, jobs)) if pool else [_point(j) for j in jobs]
                except ResourceError as exc:
                    limited = True
                    notes.append(f"method {method}: N={n} failed ({exc}); N={n}..{config.n_max} skipped")
                    break
                for (label, th), est in zip(thetas, ests):
                    rows.append(ResultRow.from_estimate(method, n, th, est, config.seed, fp))
                    if progress:
                        progress(method, n, label, est)
    finally:
        if pool:
            pool.shutdown()

    reports = []
    has_pair = any(_theta_is(t, NDC_THETA) for t in config.theta_values) and any(
        _theta_is(t, CD_THETA) for t in config.theta_values)
    for method in config.methods:
        mrows = [r for r in rows if r.method == method]
        if not mrows:
            continue
        if not has_pair:
            notes.append(f"method {method}: metric needs both theta=pi/4 and theta=pi; not computed")
            continue
        mnotes = [n for n in notes if n.startswith(f"method {method}:")]
        reports.append(compute_n_ndc(mrows, method, config.require_contiguous, notes=mnotes))
    return BenchmarkResult(tuple(rows), tuple(reports), tuple(notes), limited)


# Counts files
#
#   {
#     "metadata": {"method": "H", "n": 4, "theta": "pi/4", "seed": 0,
#                  "device": "sim", "bit_order": "clbit",
#                  "outcome_map": {"first_bit": 0, "final_bit": 1, "plus_value": 1}},
#     "runs": [{"single": {"010": 3000, ...}, "double": {"110": 1000, ...}}, ...]
#   }
#
# Keys are bitstrings; with bit_order "clbit" character i is clbit i, with
# "msb" the rightmost character is clbit 0. Every metadata key but method, n
# and theta is optional.

COUNTS_SCHEMA_VERSION = 1


def export_counts(
    method: str,
    n: int,
    theta: float | str,
    runs: Sequence[tuple[OutcomeCounts, OutcomeCounts]],
    seed: int = 0,
    device: str = "",
    outcome_map: OutcomeMap = OutcomeMap(),
) -> str:
    meta = {"schema": COUNTS_SCHEMA_VERSION, "method": MethodKind.parse(method).value, "n": n,
            "theta": theta if isinstance(theta, str) else repr(float(theta)), "seed": seed,
            "device": device, "bit_order": "clbit", "outcome_map": asdict(outcome_map)}
    body = [{"single": dict(sorted(s.counts.items())), "double": dict(sorted(d.counts.items()))} for s, d in runs]
    return json.dumps({"metadata": meta, "runs": body}, indent=1) + "\n"


def _counts(obj, where: str, bit_order: str) -> OutcomeCounts:
    if not isinstance(obj, Mapping) or not obj:
        raise SchemaError(f"{where}: empty or non-mapping counts")
    out: dict[str, int] = {}
    width = None
    for key, v in obj.items():
        if not isinstance(key, str) or not key or set(key) - {"0", "1"}:
            raise SchemaError(f"{where}: bad bitstring {key!r}")
        if width is not None and len(key) != width:
            raise SchemaError(f"{where}: bitstring {key!r} has width {len(key)}, expected {width}")
        width = len(key)
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise SchemaError(f"{where}[{key!r}]: count must be a non-negative integer")
        k = key[::-1] if bit_order == "msb" else key
        out[k] = out.get(k, 0) + v
    if sum(out.values()) == 0:
        raise SchemaError(f"{where}: zero total shots")
    return OutcomeCounts(out)


def parse_counts(text: str, source: str = "<counts>") -> tuple[dict, list[tuple[OutcomeCounts, OutcomeCounts]]]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: {exc.msg} (column {exc.colno})", line=exc.lineno,
                         token=exc.doc[exc.pos:exc.pos + 10]) from exc
    if not isinstance(data, Mapping) or "metadata" not in data or "runs" not in data:
        raise SchemaError(f"{source}: top level needs 'metadata' and 'runs'")
    meta = data["metadata"]
    if not isinstance(meta, Mapping):
        raise SchemaError(f"{source}: metadata must be a mapping")
    for key in ("method", "n", "theta"):
        if key not in meta:
            raise SchemaError(f"{source}: metadata.{key} is required")
    bit_order = meta.get("bit_order", "clbit")
    if bit_order not in ("clbit", "msb"):
        raise SchemaError(f"{source}: metadata.bit_order must be 'clbit' or 'msb'")
    runs = data["runs"]
    if not isinstance(runs, list) or not runs:
        raise SchemaError(f"{source}: runs must be a nonempty list")
    out = []
    for i, run in enumerate(runs):
        if not isinstance(run, Mapping) or "single" not in run or "double" not in run:
            raise SchemaError(f"{source}: runs[{i}] needs 'single' and 'double'")
        out.append((_counts(run["single"], f"{source}: runs[{i}].single", bit_order),
                    _counts(run["double"], f"{source}: runs[{i}].double", bit_order)))
    return dict(meta), out


def ingest_counts(files: Iterable[str | Path]) -> list[ResultRow]:
    """One ResultRow per counts file, through the same estimator as simulation.

    ``n_shots`` records the smallest per-run shot total of the file.
    """
    rows = []
    for f in files:
        path = Path(f)
        meta, runs = parse_counts(path.read_text(encoding="utf-8"), str(path))
        try:
            om = OutcomeMap(**meta.get("outcome_map", {}))
            method = MethodKind.parse(meta["method"]).value
            n, theta, seed = int(meta["n"]), parse_theta(meta["theta"]), int(meta.get("seed", 0))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: bad metadata: {exc}") from exc
        est = NdcEstimate.from_runs([estimate_violation(s, d, om) for s, d in runs],
                                    min(min(s.total_shots, d.total_shots) for s, d in runs))
        rows.append(ResultRow.from_estimate(method, n, theta, est, seed, str(meta.get("device") or "ingested")))
    rows.sort(key=lambda r: (r.method, r.n, r.theta))
    return rows
