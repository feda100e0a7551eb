"""Command-line experiment runner.

Subcommands::

    analyze             one model: divergences, CAM summary, AUC by both methods
    sweep-order         1 - AUC against n for fixed orders p
    sweep-proportional  1 - AUC against n with p = ceil(n / kappa)
    divergence-map      (KL, reverse KL, AUC) per family and order at fixed n

Sweeps write CSV (stdout unless ``--out``). Settings may come from a flat
``key = value`` file given by ``--config``; flags on the command line win.
Vertex numbering in all output is 1-based.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from . import detect, models
from .errors import CovselError, InvalidArgument

HEADER = [
    "family", "n", "p", "rho", "kl", "reverse_kl", "auc", "auc_stderr",
    "auc_method", "auc_upper_bound", "one_minus_auc",
]
FAMILIES = ("star", "chain")
AUTO_QUADRATURE_MAX_N = 64
DEFAULT_SAMPLES = 1_000_000
DEFAULT_SEED = 42

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


class UsageError(InvalidArgument):
    code = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- settings ----------------------------------------------------------------

def parse_int_list(text: str) -> list[int]:
    """``"1,3,5"`` or a range ``"10:200:5"`` (inclusive stop), or a mix."""
    values: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            if len(bits) not in (2, 3) or (len(bits) == 3 and bits[2] <= 0):
                raise UsageError(f"bad range {part!r}; use start:stop[:step]")
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) == 3 else 1
            values.extend(range(start, stop + 1, step))
        else:
            values.append(int(part))
    return values


def parse_float_list(text: str) -> list[float]:
    return [float(part) for part in str(text).split(",") if part.strip()]


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    settings: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            settings[key.replace("-", "_")] = value
    return settings


@dataclass(frozen=True)
class AucSettings:
    method: str = "quadrature"  # quadrature | mc | auto
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED

    def resolve(self, n: int) -> str:
        if self.method == "auto":
            return "quadrature" if n <= AUTO_QUADRATURE_MAX_N else "mc"
        return self.method


@dataclass(frozen=True)
class GridPoint:
    family: str
    n: int
    p: int
    rho: float


# -- evaluation --------------------------------------------------------------

def model_quantities(family: str, n: int, p: int, rho: float):
    spec = models.ToeplitzSpec(n, rho)
    source = models.toeplitz_source(spec)
    model = models.build_model(spec, family, p)
    c = detect.cam(source, model)
    return c, detect.llrt_weights(c)


def compute_auc(weights: detect.LlrtWeights, method: str, samples: int, seed: int) -> detect.AucResult:
    if method == "mc":
        return detect.auc_monte_carlo(weights, samples, seed)
    return detect.auc_quadrature(weights)


def evaluate_point(point: GridPoint, auc: AucSettings) -> dict:
    c, weights = model_quantities(point.family, point.n, point.p, point.rho)
    kl = detect.kl_divergence(c)
    result = compute_auc(weights, auc.resolve(point.n), auc.samples, auc.seed)
    return {
        "family": point.family,
        "n": point.n,
        "p": point.p,
        "rho": point.rho,
        "kl": kl,
        "reverse_kl": detect.reverse_kl(c),
        "auc": result.value,
        "auc_stderr": result.std_error,
        "auc_method": result.method.value,
        "auc_upper_bound": detect.auc_upper_bound(kl),
        "one_minus_auc": 1.0 - result.value,
    }


def _evaluate(args):
    return evaluate_point(*args)


def run_grid(points: Sequence[GridPoint], auc: AucSettings, workers: int = 1) -> list[dict]:
    """Evaluate every grid point; rows come back in grid order."""
    jobs = [(pt, auc) for pt in points]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate, jobs))
    return [_evaluate(job) for job in jobs]


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    return format(float(value), ".12g")


def write_csv(rows: list[dict], header: Sequence[str], out: Optional[str]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(row[k]) for k in header])
    data = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(data)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)


def _families(text: str) -> list[str]:
    names = [f.strip() for f in str(text).split(",") if f.strip()]
    if names == ["both"]:
        return list(FAMILIES)
    for name in names:
        if name not in FAMILIES:
            raise UsageError(f"unknown family {name!r}; expected star, chain or both")
    return names


def _warn_regime(rhos) -> None:
    for rho in rhos:
        if rho < 0:
            print(f"WARNING outside_validated_regime: rho={rho} is negative", file=sys.stderr)


# -- commands ----------------------------------------------------------------

def order_grid(families, n_values, p_values, rhos) -> list[GridPoint]:
    """Grid ordered by (family, p, n, rho)."""
    for n in n_values:
        if n < 2:
            raise UsageError(f"every n must be at least 2, got {n}")
    if n_values:
        for p in p_values:
            models.check_order(min(n_values), p)
    return [GridPoint(f, n, p, rho) for f in families for p in p_values
            for n in n_values for rho in rhos]


def proportional_grid(families, n_values, kappa, rhos) -> list[GridPoint]:
    """Grid ordered by (family, rho, n) with ``p = ceil(n / kappa)``."""
    detect.asymptotic_kl_bound(kappa)
    return [GridPoint(f, n, detect.proportional_order(n, kappa), rho)
            for f in families for rho in rhos for n in n_values]


def cmd_analyze(family: str, n: int, p: int, rho: float, samples: int = DEFAULT_SAMPLES,
                seed: int = DEFAULT_SEED) -> dict:
    c, weights = model_quantities(family, n, p, rho)
    kl = detect.kl_divergence(c)
    quad = detect.auc_quadrature(weights)
    mc = detect.auc_monte_carlo(weights, samples, seed)
    return {
        "family": family, "n": n, "p": p, "rho": rho,
        "kl": kl,
        "kl_closed_form": detect.kl_closed_form(n, p, rho),
        "reverse_kl": detect.reverse_kl(c),
        "cam_trace": c.trace,
        "cam_log_det": c.log_det,
        "auc_quadrature": quad.value,
        "auc_monte_carlo": mc.value,
        "auc_monte_carlo_stderr": mc.std_error,
        "auc_monte_carlo_samples": mc.samples_or_nodes,
        "auc_upper_bound": detect.auc_upper_bound(kl),
    }


def cmd_sweep_order(families, n_values, p_values, rhos, auc: AucSettings,
                    out: Optional[str] = None, workers: int = 1) -> list[dict]:
    rows = run_grid(order_grid(families, n_values, p_values, rhos), auc, workers)
    write_csv(rows, HEADER, out)
    return rows


def cmd_sweep_proportional(families, n_values, kappa, rhos, auc: AucSettings,
                           out: Optional[str] = None, workers: int = 1) -> list[dict]:
    rows = run_grid(proportional_grid(families, n_values, kappa, rhos), auc, workers)
    bound = detect.asymptotic_kl_bound(kappa)
    for row in rows:
        row["asymptotic_kl_bound"] = bound
    write_csv(rows, HEADER + ["asymptotic_kl_bound"], out)
    return rows


def cmd_divergence_map(families, n: int, p_values, rho: float, auc: AucSettings,
                       out: Optional[str] = None, workers: int = 1) -> list[dict]:
    for p in p_values:
        models.check_order(n, p)
    points = [GridPoint(f, n, p, rho) for f in families for p in p_values]
    rows = run_grid(points, auc, workers)
    write_csv(rows, HEADER, out)
    return rows


# -- entry point -------------------------------------------------------------

DEFAULTS = {
    "analyze": {"n": "3", "p": "1", "rho": "0.5", "family": "star"},
    "sweep-order": {"n": "10:200:5", "p": "1,3,5,7", "rho": "0.9", "family": "both"},
    "sweep-proportional": {"n": "10:200:5", "kappa": "10", "rho": "0.1,0.9", "family": "both"},
    "divergence-map": {"n": "15", "p": "1,3", "rho": "0.9", "family": "both"},
}
COMMON = {"auc_method": "quadrature", "samples": str(DEFAULT_SAMPLES),
          "seed": str(DEFAULT_SEED), "workers": "1", "out": None}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="covselauc", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in DEFAULTS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", help="flat key = value settings file")
        cmd.add_argument("--n", help="dimension(s): list '10,20' or range '10:200:5'")
        cmd.add_argument("--p", help="model order(s)")
        cmd.add_argument("--kappa", help="n / p ratio for sweep-proportional")
        cmd.add_argument("--rho", help="correlation coefficient(s)")
        cmd.add_argument("--family", help="star, chain or both")
        cmd.add_argument("--auc-method", dest="auc_method", choices=["quadrature", "mc", "auto"])
        cmd.add_argument("--samples", help="Monte Carlo sample count")
        cmd.add_argument("--seed", help="Monte Carlo seed")
        cmd.add_argument("--workers", help="parallel grid workers")
        cmd.add_argument("--out", help="output CSV path (default stdout)")
    return parser


def resolve_settings(args: argparse.Namespace) -> dict:
    settings = dict(COMMON)
    settings.update(DEFAULTS[args.command])
    if args.config:
        settings.update(read_config(args.config))
    for key in ("n", "p", "kappa", "rho", "family", "auc_method", "samples", "seed",
                "workers", "out"):
        value = getattr(args, key)
        if value is not None:
            settings[key] = value
    return settings


def run(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    st = resolve_settings(args)
    try:
        samples, seed, workers = int(st["samples"]), int(st["seed"]), int(st["workers"])
        families = _families(st["family"])
        rhos = parse_float_list(st["rho"])
        n_values = parse_int_list(st["n"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if st["auc_method"] not in ("quadrature", "mc", "auto"):
        raise UsageError(f"unknown auc method {st['auc_method']!r}")
    auc = AucSettings(st["auc_method"], samples, seed)
    _warn_regime(rhos)

    if args.command == "analyze":
        if len(families) != 1 or len(n_values) != 1 or len(rhos) != 1:
            raise UsageError("analyze takes a single family, n and rho")
        record = cmd_analyze(families[0], n_values[0], int(st["p"]), rhos[0], samples, seed)
        text = json.dumps(record, indent=2) + "\n"
        if st["out"] in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(st["out"], "w", encoding="utf-8") as fh:
                fh.write(text)
    elif args.command == "sweep-order":
        cmd_sweep_order(families, n_values, parse_int_list(st["p"]), rhos, auc, st["out"], workers)
    elif args.command == "sweep-proportional":
        cmd_sweep_proportional(families, n_values, float(st["kappa"]), rhos, auc, st["out"], workers)
    else:
        if len(n_values) != 1 or len(rhos) != 1:
            raise UsageError("divergence-map takes a single n and rho")
        cmd_divergence_map(families, n_values[0], parse_int_list(st["p"]), rhos[0], auc,
                           st["out"], workers)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        return run(argv)
    except CovselError as exc:
        code, status = exc.code, exc.exit_code
        detail = str(exc)
    except ValueError as exc:
        code, status, detail = "invalid_argument", EXIT_USAGE, str(exc)
    except OSError as exc:
        code, status, detail = "io", EXIT_IO, str(exc)
    except ArithmeticError as exc:
        code, status, detail = "numerical_failure", EXIT_NUMERIC, str(exc)
    detail = " ".join(detail.split())
    print(f"ERROR {code}: {detail}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
