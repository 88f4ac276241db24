"""Command-line harness: precision sweeps, QQ-map export and kernel timing.

    quantile-recycling precision --kernel q77 --grid 1e-6:37:100000:log --out q77.csv
    quantile-recycling qqmap --base exponential --target hyperbolic --params alpha=1,beta=0,delta=1
    quantile-recycling bench --kernel icnd_double,q77 --samples 100000000

Exit codes: 0 on success, 1 when a documented error bound is exceeded (or an
ODE solve fails), 2 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import statistics
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import normal, oracle, student
from .distributions import (
    Hyperbolic,
    HyperbolicParams,
    VarianceGamma,
    VGParams,
)
from .errors import DomainError, MonotonicityError, SolverOverflowError, UnsupportedError
from .rode import (
    DEFAULT_STEP,
    build_hyperbolic_problems,
    build_vg_problems,
    exponential_to_normal_problem,
    gaussian_to_student_problems,
    solve_rode,
    solve_two_sided,
)

__all__ = [
    "SweepSpec",
    "PrecisionReport",
    "KernelSpec",
    "PRECISION_KERNELS",
    "BENCH_KERNELS",
    "parse_grid",
    "parse_params",
    "cmd_precision",
    "cmd_qqmap",
    "cmd_bench",
    "main",
]

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2
BOUND_SLACK = 1.2


# ---------------------------------------------------------------------------
# Argument parsing helpers


@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    count: int
    log: bool = False

    def __post_init__(self):
        if self.count < 2:
            raise DomainError("grid needs at least two points")
        if not self.lo < self.hi:
            raise DomainError("grid bounds must satisfy lo < hi")
        if self.log and not self.lo > 0.0:
            raise DomainError("log grids need a positive lower bound")

    def points(self) -> np.ndarray:
        if self.log:
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


def parse_grid(text: str) -> Grid:
    """``lo:hi:n`` or ``lo:hi:n:log``."""
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
        raise DomainError(f"grid must look like lo:hi:n[:log], got {text!r}")
    try:
        return Grid(float(parts[0]), float(parts[1]), int(float(parts[2])), len(parts) == 4)
    except ValueError as exc:
        raise DomainError(f"bad grid {text!r}: {exc}") from exc


def parse_params(text: str | None) -> dict[str, float | str]:
    """``k=v,k=v`` into a dict; numeric values become floats."""
    out: dict[str, float | str] = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise DomainError(f"parameter must be key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        try:
            out[key] = float(value)
        except ValueError:
            out[key] = value
    return out


# ---------------------------------------------------------------------------
# Precision sweeps


@dataclass(frozen=True)
class KernelSpec:
    """A kernel under test, its reference and its documented error bound.

    ``bound`` is a maximum relative error, or None when no bound is documented
    (the sweep is then informational and always exits 0).  The bound may
    depend on the grid, since some kernels degrade outside their fitted range.
    """

    input_name: str
    default_grid: str
    approx: Callable[[np.ndarray, dict], np.ndarray]
    exact: Callable[[np.ndarray, dict], np.ndarray]
    bound: Callable[[dict, "Grid"], float | None]


def _student_n(params) -> float:
    return float(params.get("n", 4.0))


def _q77_bound(grid: "Grid") -> float | None:
    """Fitted range, then the documented degradation out to v = 74."""
    for hi, bound in ((37.0, normal.KERNEL_77.error_bound), (50.0, 1e-6), (74.0, 2e-5)):
        if grid.hi <= hi:
            return bound
    return None


PRECISION_KERNELS: dict[str, KernelSpec] = {
    "q77": KernelSpec(
        "v", "1e-6:37:100000:log",
        lambda x, p: normal.q77(x),
        lambda x, p: oracle.oracle_exp_normal(x),
        lambda p, g: _q77_bound(g),
    ),
    "icnd_f1": KernelSpec(
        "u", "1e-8:0.99999999:100000",
        lambda x, p: normal.icnd_single(x, "f1"),
        lambda x, p: oracle.oracle_normal_quantile(x),
        lambda p, g: normal.KERNEL_77.error_bound,
    ),
    "icnd_f2": KernelSpec(
        "u", "1e-8:0.99999999:100000",
        lambda x, p: normal.icnd_single(x, "f2"),
        lambda x, p: oracle.oracle_normal_quantile(x),
        lambda p, g: normal.KERNEL_55.error_bound,
    ),
    "icnd_double": KernelSpec(
        "u", "1e-30:0.5:100000:log",
        lambda x, p: normal.icnd_double(x),
        lambda x, p: oracle.oracle_normal_quantile(x),
        lambda p, g: normal.KERNEL_DOUBLE.error_bound,
    ),
    "tail": KernelSpec(
        "v", "37:200:1000",
        lambda x, p: normal.tail_supplement(x, str(p.get("reading", "linear"))),
        lambda x, p: oracle.oracle_exp_normal(x),
        lambda p, g: normal.KERNEL_77.error_bound if p.get("reading", "linear") == "linear" else None,
    ),
    "series": KernelSpec(
        "v", "1e-6:0.1:1000",
        lambda x, p: normal.normal_series_origin(x, int(p.get("terms", 10))),
        lambda x, p: oracle.oracle_exp_normal(x),
        lambda p, g: 2e-10 if int(p.get("terms", 10)) == 10 else None,
    ),
    "student": KernelSpec(
        "v", "-8:8:100001",
        lambda x, p: student.student_quantile_from_gaussian(x, _student_n(p)),
        lambda x, p: oracle.oracle_student_from_gaussian(x, _student_n(p)),
        lambda p, g: 1.4e-5 if _student_n(p) == 4.0 else None,
    ),
}


@dataclass(frozen=True)
class SweepSpec:
    kernel: str
    grid: Grid
    output_path: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kernel not in PRECISION_KERNELS:
            raise DomainError(f"unknown kernel {self.kernel!r}; choose from {sorted(PRECISION_KERNELS)}")


@dataclass(frozen=True)
class PrecisionReport:
    inputs: np.ndarray
    approx: np.ndarray
    exact: np.ndarray
    rel_error: np.ndarray
    bound: float | None

    @property
    def max_error(self) -> float:
        return float(np.max(self.rel_error))

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.rel_error))

    @property
    def passed(self) -> bool:
        return self.bound is None or self.max_error <= self.bound * BOUND_SLACK


def relative_error(approx, exact) -> np.ndarray:
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    return np.abs(approx - exact) / np.maximum(np.abs(exact), 1e-30)


def _write_csv(path: str | None, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow(["%.17g" % x for x in row])
    if path is None or path == "-":
        sys.stdout.write(buf.getvalue())
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def cmd_precision(spec: SweepSpec) -> PrecisionReport:
    """Evaluate a kernel and its reference over the grid and write the CSV."""
    k = PRECISION_KERNELS[spec.kernel]
    x = spec.grid.points()
    approx = np.asarray(k.approx(x, spec.params), dtype=float)
    exact = np.asarray(k.exact(x, spec.params), dtype=float)
    report = PrecisionReport(x, approx, exact, relative_error(approx, exact), k.bound(spec.params, spec.grid))
    if spec.output_path is not None:
        _write_csv(spec.output_path, ("input", "approx", "oracle", "rel_error"),
                   (x, approx, exact, report.rel_error))
    return report


# ---------------------------------------------------------------------------
# QQ maps

QQ_PAIRS = {
    ("exponential", "hyperbolic"),
    ("exponential", "vg"),
    ("exponential", "normal"),
    ("gaussian", "student"),
}


def cmd_qqmap(base: str, target: str, params: dict, grid: Grid, step: float = DEFAULT_STEP,
              out: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Solve the recycling ODE for a supported pair and export ``v,q,identity``."""
    if (base, target) not in QQ_PAIRS:
        raise DomainError(f"unsupported pair {base}->{target}; choose from {sorted(QQ_PAIRS)}")
    v = grid.points()
    extent = max(abs(grid.lo), abs(grid.hi))
    if target == "hyperbolic":
        hp = HyperbolicParams(float(params.get("alpha", 1.0)), float(params.get("beta", 0.0)),
                              float(params.get("delta", 1.0)))
        left, right = build_hyperbolic_problems(hp, Hyperbolic(hp).split(), v_max=extent)
        qmap = solve_two_sided(left, right, step)
    elif target == "vg":
        vp = VGParams(float(params.get("lam", 2.0)), float(params.get("alpha", 1.0)), float(params.get("beta", 0.0)))
        left, right = build_vg_problems(vp, VarianceGamma(vp).split(), v_max=extent)
        qmap = solve_two_sided(left, right, step)
    elif target == "normal":
        if grid.lo < 0.0:
            raise DomainError("exponential->normal map is defined for v >= 0")
        qmap = solve_rode(exponential_to_normal_problem(v_max=grid.hi), step)
    else:
        left, right = gaussian_to_student_problems(float(params.get("n", 4.0)), v_max=extent)
        qmap = solve_two_sided(left, right, step)
    q = np.asarray(qmap(v), dtype=float)
    if out is not None:
        _write_csv(out, ("v", "q", "identity"), (v, q, v))
    return v, q


# ---------------------------------------------------------------------------
# Benchmarks


def _identity(u):
    return u


BENCH_KERNELS: dict[str, tuple[Callable[[np.ndarray], np.ndarray], type]] = {
    "identity": (_identity, np.float64),
    "icnd_f1": (normal.BULK_KERNELS["icnd_f1"], np.float64),
    "icnd_f2": (normal.BULK_KERNELS["icnd_f2"], np.float64),
    "icnd_f1_single": (normal.BULK_KERNELS["icnd_f1_single"], np.float32),
    "icnd_f2_single": (normal.BULK_KERNELS["icnd_f2_single"], np.float32),
    "icnd_double": (normal.BULK_KERNELS["icnd_double"], np.float64),
    "q77": (normal.BULK_KERNELS["q77"], np.float64),
}
CHUNK = 1 << 20


def _uniforms(rng: np.random.Generator, n: int, dtype) -> np.ndarray:
    """Uniforms strictly inside (0, 1), exactly representable in ``dtype``."""
    bits = 53 if dtype == np.float64 else 24
    k = rng.integers(1, 1 << bits, n, dtype=np.int64)
    return (k.astype(np.float64) * 2.0 ** -bits).astype(dtype)


def _time_pass(rng, samples: int, dtype, fn) -> float:
    t0 = time.perf_counter()
    left = samples
    while left > 0:
        n = min(CHUNK, left)
        u = _uniforms(rng, n, dtype)
        if fn is not None:
            fn(u)
        left -= n
    return time.perf_counter() - t0


@dataclass(frozen=True)
class BenchRow:
    kernel: str
    ns_per_call: float
    baseline_ns: float
    cv: float
    relative_throughput: float


def cmd_bench(kernels: Sequence[str], samples: int, repetitions: int = 3, seed: int = 0,
              out: str | None = None, warn=None) -> list[BenchRow]:
    """Median overhead-subtracted ns/call per kernel.

    Each repetition times an RNG-only pass and a pass that also maps the
    uniforms through the kernel, with identical seeds; the difference is the
    kernel's cost.  The CV is that of the full (kernel plus RNG) pass times.
    Throughput is relative to icnd_double (or the first kernel with positive
    cost); kernels with no measurable cost get NaN.
    """
    if samples < 10**6:
        raise DomainError("benchmarks need at least 1e6 samples")
    if repetitions < 1:
        raise DomainError("repetitions must be positive")
    warn = warn or (lambda msg: print(msg, file=sys.stderr))
    rows: list[BenchRow] = []
    for name in kernels:
        if name not in BENCH_KERNELS:
            raise DomainError(f"unknown kernel {name!r}; choose from {sorted(BENCH_KERNELS)}")
        fn, dtype = BENCH_KERNELS[name]
        gross, base = [], []
        for rep in range(repetitions):
            base.append(_time_pass(np.random.default_rng([seed, rep]), samples, dtype, None))
            gross.append(_time_pass(np.random.default_rng([seed, rep]), samples, dtype, fn))
        net = [t - b for t, b in zip(gross, base)]
        cv = statistics.pstdev(gross) / statistics.fmean(gross) if repetitions > 1 else 0.0
        if cv > 0.10:
            warn(f"warning: {name}: timing CV {cv:.1%} over {repetitions} repetitions")
        rows.append(BenchRow(name, 1e9 * statistics.median(net) / samples,
                             1e9 * statistics.median(base) / samples, cv, math.nan))
    costs = {r.kernel: r.ns_per_call for r in rows if r.ns_per_call > 0.0}
    ref = costs.get("icnd_double", next(iter(costs.values()), math.nan))
    rows = [BenchRow(r.kernel, r.ns_per_call, r.baseline_ns, r.cv,
                     ref / r.ns_per_call if r.ns_per_call > 0.0 else math.nan) for r in rows]
    if out is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("kernel", "ns_per_call", "baseline_ns", "cv", "relative_throughput"))
        for r in rows:
            w.writerow((r.kernel, "%.6g" % r.ns_per_call, "%.6g" % r.baseline_ns, "%.4f" % r.cv,
                        "%.4g" % r.relative_throughput))
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    return rows


def format_bench(rows: Sequence[BenchRow]) -> str:
    lines = [f"{'kernel':<16}{'ns/call':>10}{'baseline':>10}{'cv':>8}{'rel':>8}"]
    for r in rows:
        lines.append(f"{r.kernel:<16}{r.ns_per_call:>10.3f}{r.baseline_ns:>10.3f}{r.cv:>8.3f}{r.relative_throughput:>8.3f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Entry point


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", default=None, help="comma-separated key=value pairs")
    common.add_argument("--grid", default=None, help="lo:hi:n[:log]")
    common.add_argument("--out", default=None, help="output CSV path ('-' for stdout)")
    common.add_argument("--seed", type=int, default=0)

    p = argparse.ArgumentParser(prog="quantile-recycling", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("precision", parents=[common], help="relative error sweep against the oracle")
    pr.add_argument("--kernel", required=True, choices=sorted(PRECISION_KERNELS))

    qq = sub.add_parser("qqmap", parents=[common], help="solve and export a QQ map")
    qq.add_argument("--base", required=True, choices=["exponential", "gaussian"])
    qq.add_argument("--target", required=True, choices=["hyperbolic", "vg", "normal", "student"])
    qq.add_argument("--step", type=float, default=DEFAULT_STEP)

    be = sub.add_parser("bench", parents=[common], help="time kernels with overhead subtraction")
    be.add_argument("--kernel", default=",".join(BENCH_KERNELS),
                    help="comma-separated kernel ids (default: all)")
    be.add_argument("--samples", type=float, default=1e7)
    be.add_argument("--repeats", type=int, default=3)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        params = parse_params(args.params)
        if args.command == "precision":
            grid = parse_grid(args.grid or PRECISION_KERNELS[args.kernel].default_grid)
            report = cmd_precision(SweepSpec(args.kernel, grid, args.out, params))
            bound = "none" if report.bound is None else f"{report.bound:.3g} x {BOUND_SLACK}"
            verdict = "REPORT" if report.bound is None else ("PASS" if report.passed else "FAIL")
            print(f"{args.kernel}: max rel error {report.max_error:.3e}, mean {report.mean_error:.3e}, "
                  f"bound {bound}: {verdict}", file=sys.stderr if args.out in (None, "-") else sys.stdout)
            return EXIT_OK if report.passed else EXIT_FAIL
        if args.command == "qqmap":
            grid = parse_grid(args.grid or ("0:10:1001" if args.target == "normal" else "-5:5:1001"))
            cmd_qqmap(args.base, args.target, params, grid, args.step, args.out or "-")
            return EXIT_OK
        kernels = [k.strip() for k in args.kernel.split(",") if k.strip()]
        rows = cmd_bench(kernels, int(args.samples), args.repeats, args.seed, args.out)
        print(format_bench(rows))
        return EXIT_OK
    except (MonotonicityError, SolverOverflowError, UnsupportedError) as exc:
        print(f"error: ODE solve failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
