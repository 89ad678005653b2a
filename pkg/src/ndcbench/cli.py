"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 resource ceiling.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .builders import MethodKind, build_lnn, build_reference
from .circuit import count_cnots, count_lnn_cnots, depth, parse, serialize, validate_lnn
from .equivalence import check_equivalence
from .errors import NdcError, ResourceError
from .noise import NoiseModel
from .passes import h_pipeline, m_pipeline, normal_form, run_pipeline
from .protocol import ideal_violation, run_point

log = logging.getLogger("ndcbench")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RESOURCE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _branch(text: str) -> bool | None:
    return {"single": False, "double": True, "both": None}[text]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _stats(c) -> str:
    bad = validate_lnn(c)
    return (f"wires={c.n_wires} cnots={count_cnots(c)} lnn_cnots={count_lnn_cnots(c)} "
            f"depth={depth(c)} lnn={'yes' if not bad else f'no ({len(bad)} violations)'}")


def cmd_build(a) -> int:
    build = build_lnn if a.layout == "lnn" else build_reference
    c = build(a.method, a.n, bench.parse_theta(a.theta), _branch(a.branch))
    _emit(serialize(c), a.output)
    log.info("%s", _stats(c))
    return EXIT_OK


def cmd_transpile(a) -> int:
    if a.input:
        ref = parse(Path(a.input).read_text(encoding="utf-8"))
        fam = MethodKind.parse(a.method).family
        c = h_pipeline(ref, a.keep_first_readout) if fam == "H" else m_pipeline(ref)
    else:
        c = run_pipeline(a.method, a.n, bench.parse_theta(a.theta), _branch(a.branch), a.keep_first_readout)
    _emit(serialize(c), a.output)
    log.info("%s", _stats(c))
    return EXIT_OK


def cmd_verify(a) -> int:
    if a.left and a.right:
        left = parse(Path(a.left).read_text(encoding="utf-8"))
        right = parse(Path(a.right).read_text(encoding="utf-8"))
        verdict = check_equivalence(left, right, tol=a.tol)
        print(verdict.summary())
        return EXIT_OK if verdict.passed else EXIT_INVALID
    if a.left or a.right:
        return _usage("verify needs two circuit files or none")
    method = MethodKind.parse(a.method)
    settings = (True,) if method is MethodKind.NAIVE_H else (True, False)
    ok = True
    ref = lambda t, m: build_reference(method, a.n, t, m)
    pipe = lambda t, m: run_pipeline(method, a.n, t, m)
    gen = lambda t, m: build_lnn(method, a.n, t, m)
    for name, x, y in (("reference vs pipeline", ref, pipe), ("reference vs generator", ref, gen)):
        v = check_equivalence(x, y, a.settings, a.tol, measured_settings=settings, seed=a.seed)
        print(f"{method.value} N={a.n} {name}: {v.summary()}")
        ok &= v.passed
    for m in settings:
        same = normal_form(run_pipeline(method, a.n, 0.3, m)) == normal_form(build_lnn(method, a.n, 0.3, m))
        print(f"{method.value} N={a.n} measured={m} pipeline == generator up to commutation: {same}")
        ok &= same
    return EXIT_OK if ok else EXIT_INVALID


def _usage(msg: str) -> int:
    print(f"ndcbench: error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def _noise(a) -> NoiseModel:
    if a.noise == "none":
        return NoiseModel()
    if a.noise == "default":
        return NoiseModel.default()
    return NoiseModel.from_dict(json.loads(Path(a.noise).read_text(encoding="utf-8")))


def cmd_run(a) -> int:
    theta = bench.parse_theta(a.theta)
    est = run_point(a.method, a.n, theta, _noise(a), a.runs, a.shots, a.seed, a.engine)
    print(f"{MethodKind.parse(a.method).value} N={a.n} theta={theta:.6g}: "
          f"V = {est.v:.5f} +/- {est.sigma:.5f} (ideal {ideal_violation(theta, a.n):.5f}, "
          f"{est.n_runs} runs x {est.n_shots_per_run} shots)")
    return EXIT_OK


def _config(a) -> bench.ExperimentConfig:
    cfg = bench.ExperimentConfig.load(a.config) if a.config else bench.ExperimentConfig()
    over = dict(n_min=a.n_min, n_max=a.n_max, n_runs=a.runs, n_shots=a.shots, seed=a.seed,
                output=a.output, engine=a.engine, workers=a.workers)
    if a.methods:
        over["methods"] = tuple(a.methods)
    if a.thetas:
        over["thetas"] = tuple(a.thetas)
    if a.noise:
        over["noise"] = _noise(a)
    if a.contiguous:
        over["require_contiguous"] = True
    return cfg.with_overrides(**over)


def cmd_sweep(a) -> int:
    cfg = _config(a)
    if a.dump_config:
        sys.stdout.write(cfg.dumps())
        return EXIT_OK

    def progress(method, n, label, est):
        log.info("%s N=%d theta=%s V=%.5f +/- %.5f", method, n, label, est.v, est.sigma)

    result = bench.run_benchmark(cfg, progress)
    paths = result.write(cfg.output)
    (Path(cfg.output) / "config.yaml").write_text(cfg.dumps(), encoding="utf-8")
    sys.stdout.write(result.summary())
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return EXIT_RESOURCE if result.resource_limited else EXIT_OK


def _reports(path: str, contiguous: bool, device: str) -> list[bench.MetricReport]:
    rows = bench.read_rows(Path(path).read_text(encoding="utf-8"))
    methods = sorted({r.method for r in rows})
    return [bench.compute_n_ndc(rows, m, contiguous, device=device) for m in methods]


def cmd_metric(a) -> int:
    reports = _reports(a.results, a.contiguous, a.device or Path(a.results).stem)
    if a.compare:
        refs = {r.method: r for r in _reports(a.compare, a.contiguous, a.compare_device or Path(a.compare).stem)}
        reports = [r.compared_with(refs[r.method]) if r.method in refs else r for r in reports]
    if a.output:
        Path(a.output).write_text("".join(r.to_csv(i == 0) for i, r in enumerate(reports)), encoding="utf-8")
    print("\n\n".join(r.summary() for r in reports))
    return EXIT_OK


def cmd_ingest(a) -> int:
    rows = bench.ingest_counts(a.files)
    _emit(bench.write_rows(rows), a.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ndcbench", description="No-disturbance-condition benchmark on simulated LNN hardware.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def point(sp, branch=True):
        sp.add_argument("--method", default="H", help="H, M, NaiveH or NaiveM")
        sp.add_argument("--n", type=int, default=4)
        sp.add_argument("--theta", default="pi/4")
        if branch:
            sp.add_argument("--branch", choices=("single", "double", "both"), default="both")

    sp = sub.add_parser("build", help="emit a protocol circuit")
    point(sp)
    sp.add_argument("--layout", choices=("lnn", "reference"), default="lnn")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_build)

    sp = sub.add_parser("transpile", help="run the rewrite pipeline on a reference circuit")
    point(sp)
    sp.add_argument("--input", help="reference circuit file; generated from --method/--n/--theta if absent")
    sp.add_argument("--keep-first-readout", action="store_true")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_transpile)

    sp = sub.add_parser("verify", help="check distributional equivalence")
    point(sp, branch=False)
    sp.add_argument("left", nargs="?")
    sp.add_argument("right", nargs="?")
    sp.add_argument("--settings", type=int, default=10)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("run", help="estimate V at one point")
    point(sp, branch=False)
    sp.add_argument("--noise", default="default", help="none, default or a JSON file")
    sp.add_argument("--runs", type=int, default=20)
    sp.add_argument("--shots", type=int, default=4000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--engine", choices=("auto", "frame", "statevector"), default="auto")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run the N sweep benchmark from a config")
    sp.add_argument("--config")
    sp.add_argument("--methods", nargs="+")
    sp.add_argument("--n-min", type=int)
    sp.add_argument("--n-max", type=int)
    sp.add_argument("--thetas", nargs="+")
    sp.add_argument("--noise", help="none, default or a JSON file")
    sp.add_argument("--runs", type=int)
    sp.add_argument("--shots", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--engine", choices=("auto", "frame", "statevector"))
    sp.add_argument("--workers", type=int)
    sp.add_argument("--contiguous", action="store_true")
    sp.add_argument("-o", "--output", help="output directory")
    sp.add_argument("--dump-config", action="store_true", help="print the resolved config and exit")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("metric", help="compute N_NDC from a results CSV")
    sp.add_argument("results")
    sp.add_argument("--compare", help="results CSV of a reference device for the ratio")
    sp.add_argument("--device")
    sp.add_argument("--compare-device")
    sp.add_argument("--contiguous", action="store_true")
    sp.add_argument("-o", "--output", help="metric CSV path")
    sp.set_defaults(func=cmd_metric)

    sp = sub.add_parser("ingest", help="convert counts files into result rows")
    sp.add_argument("files", nargs="+")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_ingest)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ResourceError as exc:
        print(f"ndcbench: resource ceiling: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (NdcError, ValueError, KeyError, OSError) as exc:
        print(f"ndcbench: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
