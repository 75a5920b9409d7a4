"""Sweep points: one configuration in, one CSV-ready record out.

Records are ordered dicts whose first fields echo the configuration, so every CSV row
is self-describing. Sweeps fan out over a process pool and are collected in input
order, so output does not depend on the worker count.
"""
from __future__ import annotations

import os
from collections import OrderedDict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Optional

import numpy as np

from .assembly import QuadratureSpec, assemble_stiffness
from .errors import ParameterError
from .grid import BOUNDARY_CONDITIONS, LAYOUTS, build_grid
from .kernel import NORMS, make_kernel
from .spectrum import extreme_eigenvalues
from .substructure import (partition_two_domain, schur_complement, solve_monolithic,
                           solve_substructured, split_blocks, verify_two_domain_residuals)

TARGETS = ("stiffness", "schur")


@dataclass(frozen=True)
class ExperimentConfig:
    dim: int = 1
    n: tuple = (20,)
    delta: tuple = (0.3,)
    bc: str = "neumann"
    kernel: str = "canonical"
    quadrature: str = "exact"
    norm: str = "euclidean"
    layout: str = "vertex"
    target: str = "stiffness"
    seed: int = 0
    workers: int = 1
    trials: int = 10
    out: Optional[str] = None
    export_matrix: Optional[str] = None

    def validate(self):
        if self.dim not in (1, 2, 3):
            raise ParameterError("dim", f"must be 1, 2 or 3, got {self.dim!r}")
        if not self.n or any((not isinstance(n, (int, np.integer))) or n < 2 for n in self.n):
            raise ParameterError("n", f"every n must be an integer >= 2, got {self.n!r}")
        if not self.delta or any(not (0 < d < 1) for d in self.delta):
            raise ParameterError("delta", f"every delta must lie in (0, 1), got {self.delta!r}")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ParameterError("bc", f"expected neumann or dirichlet, got {self.bc!r}")
        make_kernel(self.kernel, 0.5)
        QuadratureSpec.parse(self.quadrature)
        if self.norm not in NORMS:
            raise ParameterError("norm", f"expected euclidean or max, got {self.norm!r}")
        if self.layout not in LAYOUTS:
            raise ParameterError("layout", f"expected cell or vertex, got {self.layout!r}")
        if self.target not in TARGETS:
            raise ParameterError("target", f"expected stiffness or schur, got {self.target!r}")
        if self.workers < 1:
            raise ParameterError("workers", f"must be >= 1, got {self.workers}")
        if self.trials < 1:
            raise ParameterError("trials", f"must be >= 1, got {self.trials}")
        return self

    def points(self):
        return [(n, d) for n in self.n for d in self.delta]


def build_problem(cfg, n, delta):
    grid = build_grid(cfg.dim, n, delta, cfg.bc, cfg.layout)
    kernel = make_kernel(cfg.kernel, delta, cfg.norm)
    K = assemble_stiffness(grid, kernel, QuadratureSpec.parse(cfg.quadrature), workers=1)
    return grid, K


def _echo(cfg, n, delta):
    return OrderedDict(dim=cfg.dim, n=n, h=1.0 / n, delta=delta, bc=cfg.bc, kernel=cfg.kernel,
                       quadrature=QuadratureSpec.parse(cfg.quadrature).label, norm=cfg.norm,
                       layout=cfg.layout)


def _spectrum_fields(rec, report):
    rec.update(lambda_min=report.lambda_min_nonzero, lambda_max=report.lambda_max,
               kappa=report.kappa_eff, null_dim=report.null_dim, method=report.method)
    return rec


def stiffness_record(cfg, n, delta):
    grid, K = build_problem(cfg, n, delta)
    rec = _echo(cfg, n, delta)
    rec["order"] = K.shape[0]
    return _spectrum_fields(rec, extreme_eigenvalues(K, seed=cfg.seed))


def schur_record(cfg, n, delta):
    grid, K = build_problem(cfg, n, delta)
    p = partition_two_domain(grid, delta)
    S, _, _ = schur_complement(split_blocks(K, p))
    rec = _echo(cfg, n, delta)
    rec.update(w_actual=p.w_actual, n_gamma=p.n_gamma)
    return _spectrum_fields(rec, extreme_eigenvalues(S, seed=cfg.seed))


def equivalence_record(cfg, n, delta):
    """Substructured versus monolithic solves for random compatible right-hand sides."""
    grid, K = build_problem(cfg, n, delta)
    p = partition_two_domain(grid, delta)
    blocks = split_blocks(K, p)
    rng = np.random.default_rng(cfg.seed)
    worst = dict(diff=0.0, r1=0.0, r2=0.0, r_gamma=0.0, r_trace=0.0, rel=0.0)
    ok = True
    for _ in range(cfg.trials):
        f = K @ rng.standard_normal(K.shape[0])
        u_sub = solve_substructured(K, f, p, blocks)
        u_mono = solve_monolithic(K, f)
        a, b = u_sub - u_sub.mean(), u_mono - u_mono.mean()
        diff = float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), np.finfo(float).tiny))
        rep = verify_two_domain_residuals(K, p, f, u_sub)
        fn = max(rep.f_norm, np.finfo(float).tiny)
        worst["diff"] = max(worst["diff"], diff)
        for key in ("r1", "r2", "r_gamma", "r_trace"):
            worst[key] = max(worst[key], getattr(rep, key) / fn)
        ok = ok and diff <= 1e-8 and rep.passed(1e-8)
    rec = _echo(cfg, n, delta)
    rec.update(w_actual=p.w_actual, n_gamma=p.n_gamma, trials=cfg.trials,
               max_rel_diff=worst["diff"], r1_rel=worst["r1"], r2_rel=worst["r2"],
               r_gamma_rel=worst["r_gamma"], r_trace_rel=worst["r_trace"], passed=int(ok))
    return rec


RUNNERS = {"stiffness": stiffness_record, "schur": schur_record, "equivalence": equivalence_record}


def _run_point(args):
    kind, cfg_dict, n, delta = args
    return RUNNERS[kind](ExperimentConfig(**cfg_dict), n, delta)


def run_sweep(cfg, kind=None):
    """Evaluate every ``(n, delta)`` point; rows come back in input order."""
    kind = kind or cfg.target
    jobs = [(kind, asdict(cfg), n, d) for n, d in cfg.points()]
    workers = min(cfg.workers, len(jobs))
    if workers <= 1:
        return [_run_point(job) for job in jobs]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_run_point, jobs))


def default_workers():
    env = os.environ.get("NONLOCAL_WORKERS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ParameterError("NONLOCAL_WORKERS", f"not an integer: {env!r}") from None
    return os.cpu_count() or 1


def with_overrides(cfg, **kw):
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
