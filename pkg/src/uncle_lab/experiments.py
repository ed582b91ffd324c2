"""Reusable experiment drivers shared by the CLI sweeps and the test suite."""

from __future__ import annotations

import numpy as np

from .chain import assemble
from .models import doubled_uncle_term, ghz_tensor, ising_parent_term
from .mps import random_block_mps, random_tensor
from .spectra import (
    KERNEL_TOL,
    dense_window_scan,
    domain_wall_state,
    fit_exponential,
    fit_power,
    fit_quadratic,
    gap_series,
    ghz_domain_wall_state,
    momentum_state,
)
from .uncle import Perturbation, random_injective_perturbation, uncle_local_term


def ghz_uncle(seed: int = 0):
    c = ghz_tensor()
    return uncle_local_term(c, random_injective_perturbation(c, seed, sites=3), sites=3)


def gap_scaling(ns, seed: int = 0) -> dict:
    """Uncle and parent gaps of the GHZ chain and the log-log uncle slope."""
    ns = list(ns)
    uncle = gap_series(ghz_uncle(seed), ns)
    parent = gap_series(ising_parent_term(), ns)
    ug = np.array([uncle[n] for n in ns])
    pg = np.array([parent[n] for n in ns])
    slope, coeff = fit_power(ns, ug)
    return {
        "n": ns,
        "uncle_gap": ug.tolist(),
        "parent_gap": pg.tolist(),
        "uncle_slope": slope,
        "uncle_coeff": coeff,
        "uncle_monotone": bool(np.all(np.diff(ug) < 0)),
        "parent_variation": float((pg.max() - pg.min()) / pg.mean()),
    }


def ghz_wall_diagnostics(Ns, seed: int = 0) -> list[dict]:
    term = ghz_uncle(seed)
    rows = []
    for N in Ns:
        f = ghz_domain_wall_state(N, term)
        rows.append({"N": N, "sites": f.chain_length, "norm2": f.norm2, "energy": f.energy,
                     "residual": f.residual})
    return rows


def momentum_scaling(Ns, ks=(1, 2), seed: int = 0) -> dict:
    """GHZ momentum energies and their spread around ``c k^2 / N^2``."""
    term = ghz_uncle(seed)
    rows = []
    for k in ks:
        for N in Ns:
            f = momentum_state("ghz", N, k, term)
            rows.append({"N": N, "k": k, "energy": f.energy, "residual": f.residual,
                         "scaled": f.energy * N * N / (k * k)})
    scaled = np.array([r["scaled"] for r in rows])
    c = float(np.sqrt(scaled.min() * scaled.max()))
    spread = float(max(scaled.max() / c, c / scaled.min()))
    return {"rows": rows, "c": c, "spread": spread}


def random_wall_diagnostics(seed: int = 3, Ns=(1, 2, 3)) -> dict:
    """Two-wall trial states for a random two-block product MPS (d=2)."""
    c = random_block_mps(2, (1, 1), seed)
    p = random_injective_perturbation(c, seed, sites=3)
    rows = []
    for N in Ns:
        f = domain_wall_state(c, p, N, sites=3)
        rows.append({"N": N, "sites": f.chain_length, "norm2": f.norm2, "energy": f.energy,
                     "overlap_a": f.overlaps[0], "overlap_b": f.overlaps[1]})
    Ns = np.array(Ns, dtype=float)
    a2, b2 = fit_quadratic(Ns, [r["norm2"] for r in rows])
    rate_a, _ = fit_exponential(Ns, [r["overlap_a"] for r in rows])
    rate_b, _ = fit_exponential(Ns, [r["overlap_b"] for r in rows])
    en = np.array([r["energy"] for r in rows])
    return {
        "rows": rows,
        "norm2_quadratic": a2,
        "norm2_offset": b2,
        "overlap_rate_a": rate_a,
        "overlap_rate_b": rate_b,
        "energy_c": float(np.max(en * Ns)),
        "energy_slope": fit_power(Ns, en)[0],
    }


def injective_instance(seed: int = 0, d: int = 2):
    """Random bond-dimension-one injective tensor and defect for the doubled route."""
    rng = np.random.default_rng(seed)
    a = random_tensor(d, 1, rng)
    r = rng.standard_normal((d, 1, 1)) + 1j * rng.standard_normal((d, 1, 1))
    return a, r


def injective_momentum(Ns, k: int = 1, seed: int = 0) -> dict:
    a, r = injective_instance(seed)
    term = doubled_uncle_term(a, Perturbation.symmetric(np.zeros_like(r), r))
    rows = []
    for N in Ns:
        f = momentum_state("injective", N, k, term, a=a, r=r)
        rows.append({"N": N, "norm2": f.norm2, "energy": f.energy})
    norm_slope, _ = fit_power(Ns, [x["norm2"] for x in rows])
    en_slope, _ = fit_power(Ns, [x["energy"] for x in rows])
    return {"rows": rows, "norm2_slope": norm_slope, "energy_slope": en_slope}


def window_experiment(ns, base_N: int = 8, k: int = 1, j_max: int = 4, seed: int = 0,
                      min_halfwidth: float = 0.05) -> dict:
    """Window scan around multiples of a momentum trial energy.

    Windows are ``(j lam, max(j delta', min_halfwidth))``; the parent
    control window sits at half its gap with a quarter-gap halfwidth.
    """
    term = ghz_uncle(seed)
    base = momentum_state("ghz", base_N, k, term)
    lam, delta = base.energy, base.residual
    windows = [(j * lam, max(j * delta, min_halfwidth)) for j in range(1, j_max + 1)]
    ns = list(ns)
    scan = dense_window_scan(lambda n: assemble(term, n, "periodic"), ns, windows)
    parent = ising_parent_term()
    gamma = gap_series(parent, [ns[0]])[ns[0]]
    pscan = dense_window_scan(lambda n: assemble(parent, n, "periodic"), ns, [(gamma / 2, gamma / 4)])
    return {
        "lambda_hat": lam,
        "delta_prime": delta,
        "windows": [list(w) for w in windows],
        "hits": {str(n): list(h) for n, h in scan.hits.items()},
        "n0": scan.n0,
        "parent_gap": gamma,
        "parent_window": [gamma / 2, gamma / 4],
        "parent_hits": {str(n): list(h) for n, h in pscan.hits.items()},
        "kernel_tol": KERNEL_TOL,
    }


def random_two_block(seed: int = 1, d: int = 4):
    """Random two-block MPS with ``D_A = D_B = 1`` and an injective perturbation."""
    c = random_block_mps(d, (1, 1), seed)
    return c, random_injective_perturbation(c, seed, sites=2)
