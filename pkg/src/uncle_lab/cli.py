"""Command-line front end: ``uncle-lab {inspect,uncle,spectrum,sweep,demo}``.

Exit codes: 0 success, 2 input error, 3 violated mathematical
precondition, 4 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import experiments, io
from .chain import assemble
from .errors import InputError, UncleLabError, UncleUndefinedError
from .models import (
    duality_sector_check,
    ghz_tensor,
    injective_uncle_check,
    sandwich_check,
    xy_identity_check,
    zero_doubled_tensor,
    zero_state,
    w_state,
)
from .mps import BlockMps, MpsTensor, fixed_points, injectivity_index, is_injective, spectral_radius, transfer_operator
from .spectra import kernel_basis, kernel_overlap, low_spectrum
from .uncle import (
    Perturbation,
    limit_convergence_probe,
    random_injective_perturbation,
    uncle_local_term,
)

log = logging.getLogger("uncle_lab")

DEFAULT_EPS = (1e-1, 1e-2, 1e-3, 1e-4)


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    seed: int = 0
    n_range: list | None = None
    eps_list: list | None = None
    tol: float | None = None
    out: str | None = None
    format: str | None = None
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def parse_n_range(text: str) -> list[int]:
    """``"6..12"`` -> ``[6, 12]``; a single integer gives a one-point range."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad --n-range {text!r}; expected a..b") from exc
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad --n-range {text!r}")
    return [lo, hi]


def parse_eps(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad --eps {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("--eps needs at least one value")
    return vals


def _report(cfg: RunConfig, payload: dict) -> dict:
    return {"format_version": io.FORMAT_VERSION, "config": cfg.to_dict(), **payload}


def _emit(cfg: RunConfig, payload: dict, name: str) -> None:
    doc = _report(cfg, payload)
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_json(out / name, doc)
    if cfg.format == "json":
        sys.stdout.write(io.dumps(doc))


# inspect


def _inspect_tensor(t: MpsTensor) -> dict:
    inj = is_injective(t)
    rep = {"d": t.d, "D": t.D, "injective": inj}
    idx = injectivity_index(t)
    rep["injectivity_index"] = idx
    rep["spectral_radius"] = spectral_radius(transfer_operator(t, t))
    if idx is None:
        rep["note"] = "block-diagonal span"
        return rep
    cd = fixed_points(t)
    rep.update(
        leading_eigenvalue=[cd.leading_eigenvalue.real, cd.leading_eigenvalue.imag],
        second_modulus=cd.second_modulus,
        trace_lambda=cd.trace_lambda,
        lambda_eigenvalues=np.linalg.eigvalsh(cd.lam).tolist(),
    )
    return rep


def cmd_inspect(args, cfg: RunConfig) -> int:
    obj = io.load_tensor_file(args.tensor)
    if isinstance(obj, BlockMps):
        blocks = [_inspect_tensor(b) for b in obj.blocks]
        whole = obj.tensor
        payload = {
            "blocks": blocks,
            "combined": {"d": whole.d, "D": whole.D, "injective": is_injective(whole),
                         "injectivity_index": injectivity_index(whole)},
        }
        if len(obj.blocks) == 2:
            a, b = obj.blocks
            payload["mixed_spectral_radius"] = spectral_radius(transfer_operator(a, b))
    else:
        payload = {"tensor": _inspect_tensor(obj)}
    if cfg.format != "json":
        rows = payload.get("blocks") or [payload["tensor"]]
        for i, r in enumerate(rows):
            line = f"block {i}: injective: {str(r['injective']).lower()}"
            if "spectral_radius" in r and r.get("injectivity_index") is not None:
                line += f", rho={r['spectral_radius']:.6f}, tr Lambda={r['trace_lambda']:.6g}"
            else:
                line += f" ({r.get('note', 'no standard form')})"
            print(line)
        if "combined" in payload:
            comb = payload["combined"]
            note = "" if comb["injective"] else " (block-diagonal span)"
            print(f"combined: injective: {str(comb['injective']).lower()}{note}")
    _emit(cfg, payload, "inspect.json")
    return 0


# uncle


def cmd_uncle(args, cfg: RunConfig) -> int:
    c = io.load_tensor_file(args.tensor)
    if not isinstance(c, BlockMps):
        raise InputError("uncle needs a block file with two blocks")
    if args.perturbation:
        p = io.perturbation_from_json(io.read_json(args.perturbation))
    else:
        p = random_injective_perturbation(c, cfg.seed, sites=args.sites)
    term = uncle_local_term(c, p, args.sites)
    eps = cfg.eps_list or list(DEFAULT_EPS)
    table = limit_convergence_probe(c, p, args.sites, eps)
    rank = int(round(np.trace(term.matrix).real))
    payload = {
        "sites": args.sites,
        "projector_rank": rank,
        "convergence": [{"eps": e, "distance": d} for e, d in table.rows()],
        "slope": table.slope,
    }
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        io.write_json(out / "uncle_projector.json", io.term_to_json(term))
        io.write_json(out / "perturbation.json", io.perturbation_to_json(p))
        io.write_csv(out / "convergence.csv", ["eps", "distance"], table.rows())
    if cfg.format != "json":
        print(f"uncle term on {args.sites} sites, rank {rank}")
        for e, d in table.rows():
            print(f"  eps={e:.3g}  distance={d:.6g}")
        if table.slope is not None:
            print(f"convergence slope {table.slope:.4f}")
    log.info("convergence slope %s", table.slope)
    _emit(cfg, payload, "uncle.json")
    return 0


# spectrum


def _cache_path(term, n: int, boundary: str, count: int):
    root = os.environ.get("UNCLE_LAB_CACHE")
    if not root:
        return None
    h = hashlib.sha256(np.ascontiguousarray(term.matrix).tobytes())
    h.update(f"{term.support}|{term.local_dim}|{n}|{boundary}|{count}".encode())
    Path(root).mkdir(parents=True, exist_ok=True)
    return Path(root) / f"{h.hexdigest()[:32]}.json"


def cached_spectrum(term, n: int, boundary: str, count: int) -> dict:
    path = _cache_path(term, n, boundary, count)
    if path is not None and path.exists():
        return json.loads(path.read_text())
    h = assemble(term, n, boundary)
    rep = low_spectrum(h, count).to_dict()
    rep["gap"] = next((x for x in rep["eigenvalues"] if x >= rep["tol"]), None)
    if path is not None:
        path.write_text(io.dumps(rep))
    return rep


def cmd_spectrum(args, cfg: RunConfig) -> int:
    term = io.term_from_json(io.read_json(args.projector))
    lo, hi = cfg.n_range or [term.support, term.support + 6]
    reports = []
    for n in range(max(lo, term.support), hi + 1):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rep = cached_spectrum(term, n, args.boundary, args.count)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        reports.append(rep)
    rows = [(r["n"], i, x) for r in reports for i, x in enumerate(r["eigenvalues"])]
    summary = [(r["n"], r["kernel_dim"], r["gap"] if r["gap"] is not None else "", r["method"]) for r in reports]
    if cfg.format != "json":
        text = io.csv_text(["n", "index", "eigenvalue"], rows)
        if cfg.out:
            out = Path(cfg.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "spectrum.csv").write_text(text)
            io.write_csv(out / "summary.csv", ["n", "kernel_dim", "gap", "method"], summary)
        sys.stdout.write(io.csv_text(["n", "kernel_dim", "gap", "method"], summary))
        return 0
    _emit(cfg, {"boundary": args.boundary, "spectra": reports}, "spectrum.json")
    return 0


# sweep


def bundled_config(name: str) -> dict:
    res = resources.files("uncle_lab").joinpath("configs", f"{name}.json")
    if not res.is_file():
        raise InputError(f"no bundled config named {name!r}")
    return json.loads(res.read_text())


def _run_job(job: dict) -> tuple[str, dict]:
    kind = job["kind"]
    seed = job.get("seed", 0)
    if kind == "gap_scaling":
        lo, hi = job["n_range"]
        return job["key"], experiments.gap_scaling(range(lo, hi + 1), seed)
    if kind == "ghz_walls":
        return job["key"], {"rows": experiments.ghz_wall_diagnostics(job["N"], seed)}
    if kind == "momentum":
        return job["key"], experiments.momentum_scaling(job["N"], job.get("k", [1, 2]), seed)
    if kind == "window_scan":
        lo, hi = job["n_range"]
        return job["key"], experiments.window_experiment(
            range(lo, hi + 1), job.get("base_N", 8), job.get("k", 1), job.get("j_max", 4), seed
        )
    raise InputError(f"unknown sweep job kind {kind!r}")


def load_sweep_config(source: str) -> dict:
    path = Path(source)
    doc = io.read_json(path) if path.exists() else bundled_config(source)
    if not isinstance(doc, dict) or not isinstance(doc.get("jobs"), list):
        raise InputError("sweep config needs a 'jobs' list")
    for i, job in enumerate(doc["jobs"]):
        job.setdefault("key", f"{i:02d}-{job.get('kind', 'job')}")
    return doc


def cmd_sweep(args, cfg: RunConfig) -> int:
    doc = load_sweep_config(args.config)
    jobs = []
    for job in doc["jobs"]:
        job = dict(job)
        job.setdefault("seed", cfg.seed)
        if cfg.n_range and "n_range" in job:
            job["n_range"] = cfg.n_range
        jobs.append(job)
    cfg.options["sweep"] = doc.get("name", args.config)
    cfg.options["jobs"] = jobs
    workers = args.workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = dict(pool.map(_run_job, jobs))
    else:
        results = dict(_run_job(j) for j in jobs)
    out = Path(cfg.out or f"sweep-{doc.get('name', 'run')}")
    out.mkdir(parents=True, exist_ok=True)
    for key in sorted(results):
        io.write_json(out / f"{key}.json", _report(cfg, {"job": key, "result": results[key]}))
        res = results[key]
        if "uncle_gap" in res:
            io.write_csv(out / f"{key}.csv", ["n", "uncle_gap", "parent_gap"],
                         zip(res["n"], res["uncle_gap"], res["parent_gap"]))
    summary = {key: _headline(results[key]) for key in sorted(results)}
    io.write_json(out / "summary.json", _report(cfg, {"summary": summary}))
    for key, line in summary.items():
        print(f"{key}: {json.dumps(line, sort_keys=True)}")
    return 0


def _headline(res: dict) -> dict:
    keys = ("uncle_slope", "parent_variation", "uncle_monotone", "c", "spread", "n0", "lambda_hat")
    return {k: res[k] for k in keys if k in res}


# demos


def demo_ghz(cfg: RunConfig) -> dict:
    c = ghz_tensor()
    p = random_injective_perturbation(c, cfg.seed, sites=3)
    term = uncle_local_term(c, p, 3)
    lo, hi = cfg.n_range or [4, 10]
    rows = []
    for n in range(lo, hi + 1):
        basis, dim = kernel_basis(assemble(term, n, "periodic"))
        rows.append({"n": n, "kernel_dim": dim})
    table = limit_convergence_probe(c, p, 3, cfg.eps_list or list(DEFAULT_EPS))
    return {"kernel": rows, "probe_slope": table.slope}


def demo_zero(cfg: RunConfig) -> dict:
    c = zero_doubled_tensor()
    rng = np.random.default_rng(cfg.seed)
    r = rng.standard_normal((2, 1, 1))
    term = uncle_local_term(c, Perturbation.symmetric(rng.standard_normal((2, 1, 1)), r), 3)
    lo, hi = cfg.n_range or [4, 10]
    rows = []
    for n in range(lo, hi + 1):
        basis, dim = kernel_basis(assemble(term, n, "periodic"))
        rows.append({"n": n, "kernel_dim": dim, "overlap": kernel_overlap(basis, [zero_state(n), w_state(n)])})
    return {"kernel": rows}


def demo_injective(cfg: RunConfig) -> dict:
    a, r = experiments.injective_instance(cfg.seed)
    lo, hi = cfg.n_range or [6, 9]
    rows = []
    for n in range(lo, hi + 1):
        rep = injective_uncle_check(a, r, n)
        rows.append({"n": n, "kernel_dim": rep.kernel_dim, "overlap": rep.overlap,
                     "frustration": rep.frustration})
    return {"kernel": rows}


def demo_xy(cfg: RunConfig) -> dict:
    n_lo, n_hi = cfg.n_range or [8, 8]
    duality = [asdict(duality_sector_check(n)) for n in range(n_lo, n_hi + 1, 2) if n % 2 == 0]
    sandwich = [asdict(sandwich_check(n)) for n in (6, 8, 10)]
    return {"identity_deviation": xy_identity_check(), "duality": duality, "sandwich": sandwich}


DEMOS = {"ghz": demo_ghz, "zero": demo_zero, "injective": demo_injective, "xy": demo_xy}


def cmd_demo(args, cfg: RunConfig) -> int:
    payload = DEMOS[args.which](cfg)
    if cfg.format != "json":
        print(io.dumps(payload), end="")
    _emit(cfg, {"demo": args.which, **payload}, f"demo-{args.which}.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--n-range", type=parse_n_range, default=None, metavar="A..B")
    common.add_argument("--eps", type=parse_eps, default=None, metavar="E1,E2,...")
    common.add_argument("--boundary", choices=["open", "periodic"], default="periodic")
    common.add_argument("--out", default=None, metavar="DIR")
    common.add_argument("--format", choices=["csv", "json"], default=None,
                        help="machine-readable stdout (default: human-readable)")
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="uncle-lab", description="Parent and uncle Hamiltonians of MPS.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", parents=[common], help="standard-form report of a tensor file")
    p.add_argument("tensor")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("uncle", parents=[common], help="uncle projector and convergence table")
    p.add_argument("tensor")
    p.add_argument("--perturbation", default=None)
    p.add_argument("--sites", type=int, choices=[2, 3], default=2)
    p.set_defaults(func=cmd_uncle)

    p = sub.add_parser("spectrum", parents=[common], help="low spectra of a local term over chain lengths")
    p.add_argument("projector")
    p.add_argument("--count", type=int, default=8)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("sweep", parents=[common], help="run a bundled or custom experiment config")
    p.add_argument("config", help="path to a config file or a bundled name (ghz-gapless, dense-windows)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("demo", parents=[common], help="closed-form demonstrations")
    p.add_argument("which", choices=sorted(DEMOS))
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    inputs = [getattr(args, k) for k in ("tensor", "perturbation", "projector", "config") if getattr(args, k, None)]
    cfg = RunConfig(
        command=args.command if args.command != "demo" else f"demo {args.which}",
        inputs=inputs,
        seed=args.seed,
        n_range=args.n_range,
        eps_list=args.eps,
        tol=args.tol,
        out=args.out,
        format=args.format,
        options={k: getattr(args, k) for k in ("sites", "count", "boundary") if hasattr(args, k)},
    )
    try:
        return args.func(args, cfg)
    except UncleUndefinedError as exc:
        print(f"error: uncle undefined: {exc}", file=sys.stderr)
        return exc.exit_code
    except UncleLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
