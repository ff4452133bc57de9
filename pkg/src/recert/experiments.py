"""Experiment runners behind the command line.

Each runner turns an :class:`ExperimentConfig` into a :class:`RunReport`:
one record per trial (or per reported quantity) and an ordered summary
that can be recomputed from the records. Trials are pure functions of
``(config, seed, trial index)`` and are reduced in index order, so the
records do not depend on the number of workers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import __version__
from . import bounds as bd
from . import certify as ct
from .config import ConfigError, ExperimentConfig, bound_params
from .core import ConeSpecMatrix, ConeSpecVector, InvalidInputError, SupportCollection
from .design import (ContaminationSpec, CovarianceSpec, sample_design, sample_response,
                     sigma_s, spectral_term, stream, varrho)
from .formats import csv_text, fmt, read_matrix
from . import solvers as sv


@dataclass
class RunReport:
    kind: str
    columns: tuple[str, ...]
    records: list[tuple]
    summary: list[tuple[str, Any]]
    passed: bool
    seed: int
    config_echo: list[str] = field(default_factory=list)
    version: str = __version__
    wall_clock: float = 0.0

    def csv(self) -> str:
        return csv_text(self.columns, self.records)

    def summary_text(self) -> str:
        lines = [f"# recert {self.version}", f"kind = {self.kind}", f"seed = {self.seed}",
                 f"records = {len(self.records)}"]
        lines += [f"{k} = {fmt(v)}" for k, v in self.summary]
        lines.append(f"passed = {fmt(self.passed)}")
        lines += [f"config.{e}" for e in self.config_echo]
        lines.append(f"wall_clock_seconds = {self.wall_clock:.3f}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{self.kind}.csv"
        sum_path = out / f"{self.kind}_summary.txt"
        csv_path.write_text(self.csv(), encoding="utf-8")
        sum_path.write_text(self.summary_text(), encoding="utf-8")
        return csv_path, sum_path


def _map(fn: Callable[[int], Any], n: int, workers: int) -> list:
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n), chunksize=max(1, n // (4 * workers))))


# --------------------------------------------------------------- config helpers


def _covariance(cfg: ExperimentConfig, p: int, section: str = "covariance", prefix: str = "") -> Optional[CovarianceSpec]:
    kind_key = "kind" if not prefix else "random"
    kind = cfg.get(section, kind_key, "identity" if not prefix else "none")
    if kind == "none":
        return None
    try:
        if kind == "identity":
            return CovarianceSpec.identity(p)
        if kind == "diagonal":
            key = prefix + "diag"
            d = cfg.require(section, key)
            if len(d) != p:
                raise cfg.error(section, key, f"needs {p} entries, got {len(d)}")
            return CovarianceSpec.diagonal(np.array(d))
        if kind == "ar1":
            key = prefix + "phi"
            return CovarianceSpec.ar1(p, cfg.require(section, key))
        key = prefix + "file"
        M = read_matrix(cfg.path(section, key))
        if M.shape != (p, p):
            raise cfg.error(section, key, f"matrix must be {p}x{p}, got {M.shape}")
        return CovarianceSpec.dense(M)
    except InvalidInputError as exc:
        raise ConfigError(f"[{section}] {exc}")


def _contamination(cfg: ExperimentConfig, n: int, p: int) -> ContaminationSpec:
    sec = "contamination"
    O = cfg.get(sec, "outliers", ())
    if any(i < 1 or i > n for i in O):
        raise cfg.error(sec, "outliers", f"indices must lie in 1..{n}")
    det = cfg.get(sec, "deterministic", "none")
    mu = E_D = None
    if det == "constant_row":
        mu = np.array(cfg.require(sec, "mu"))
        if mu.shape != (p,):
            raise cfg.error(sec, "mu", f"needs {p} entries")
    elif det == "explicit":
        E_D = read_matrix(cfg.path(sec, "file"))
        if E_D.shape != (n, p):
            raise cfg.error(sec, "file", f"matrix must be {n}x{p}")
    random_cov = _covariance(cfg, p, sec, prefix="random_")
    return ContaminationSpec(O=frozenset(O), deterministic=det, mu=mu, E_D=E_D, random_cov=random_cov)


def _dims(cfg: ExperimentConfig) -> tuple[int, int]:
    return cfg.require("experiment", "p"), cfg.require("experiment", "n")


def _as_written(values: Sequence[float]) -> np.ndarray:
    """Values rounded exactly as they appear in the CSV."""
    return np.array([float(fmt(v)) for v in values])


def _summary_stats(prefix: str, values: Sequence[float]) -> list[tuple[str, float]]:
    """Min, max and mean of the values as written to the records file."""
    v = _as_written(values)
    return [(f"{prefix}_min", float(v.min())), (f"{prefix}_max", float(v.max())),
            (f"{prefix}_mean", float(v.mean()))]


# ------------------------------------------------------------------ audit / bounds


def run_audit(cfg: ExperimentConfig, seed: int, workers: int) -> RunReport:
    rows = bd.constants_audit(bound_params(cfg))
    records = [(r.name, r.computed, r.paper_value, r.direction_ok, r.note or "-") for r in rows]
    ok = all(r.direction_ok for r in rows)
    summary = [("rows", len(rows)), ("all_directions_ok", ok),
               ("discrepancies", sum(1 for r in rows if r.note == "discrepancy"))]
    return RunReport("audit", ("name", "computed", "paper_value", "direction_ok", "note"),
                     records, summary, ok, seed)


def run_bounds(cfg: ExperimentConfig, seed: int, workers: int) -> RunReport:
    p, n = _dims(cfg)
    params = bound_params(cfg)
    smax = cfg.get("bounds", "sigma_max_a", 0.0)
    rep = bd.bound_report(params, n, smax)
    rec: list[tuple[str, Any]] = [
        ("mu_epsilon", rep.mu_epsilon), ("rho", rep.rho), ("lead_constant", rep.lead_constant),
        ("l1_coefficient", rep.l1_coefficient), ("theta_coefficient", rep.theta_coefficient),
        ("n_min", rep.n_min), ("n_min_real", rep.n_min_real),
        ("failure_probability", rep.failure_probability), ("sample_size_ok", rep.sample_size_ok),
        ("special_lead", bd.SPECIAL_LEAD - smax / math.sqrt(n)),
        ("special_failure_probability", bd.special_failure_probability(n)),
        ("special_sample_size_ok", n >= bd.SPECIAL_N_MIN)]
    passed = True
    if "corollary" in cfg.sections:
        cov = _covariance(cfg, p)
        cov_E = _covariance(cfg, p, "contamination", prefix="random_")
        try:
            v = bd.corollary_check(cfg.require("corollary", "s"), cfg.require("corollary", "o"),
                                   cfg.require("corollary", "c"), cfg.require("corollary", "gamma"),
                                   cfg.require("corollary", "c0"), n, p, cov, cov_E, smax)
        except InvalidInputError as exc:
            raise ConfigError(f"[corollary] {exc}")
        rec += [("corollary_gamma_min", v.gamma_min), ("corollary_gamma_ok", v.gamma_ok),
                ("corollary_condition_value", v.condition_value),
                ("corollary_condition_ok", v.condition_n_ok),
                ("corollary_alternate_branch", v.alternate_branch_used),
                ("corollary_c_n", v.c_n), ("corollary_kappa", v.kappa),
                ("corollary_re_constant", v.re_constant if v.re_constant is not None else math.nan),
                ("corollary_pass", v.passed)]
        passed = v.passed
    summary = [("quantities", len(rec))]
    return RunReport("bounds", ("name", "value"), rec, summary, passed, seed)


# ----------------------------------------------------------------------- certify


@dataclass(frozen=True)
class _CertifyCtx:
    p: int
    n: int
    cov: CovarianceSpec
    contamination: ContaminationSpec
    cone: Any
    K: int
    iters: int
    seed: int
    params: Optional[bd.BoundParams]


def _certify_trial(ctx: _CertifyCtx, trial: int) -> tuple:
    sample = sample_design(ctx.p, ctx.n, ctx.cov, ctx.contamination, ctx.seed, trial)
    if isinstance(ctx.cone, ConeSpecVector):
        cert = ct.certify_vector(sample, ctx.cone, ctx.K, ctx.iters, seed=_sub_seed(ctx.seed, trial),
                                 params=ctx.params)
    else:
        sig = sample.sigma_s
        spec: ConeSpecMatrix = ctx.cone
        bound = bd.matrix_cone_re_bound(
            spec.collection.size, len(spec.O), spec.c, spec.gamma, ctx.n, ctx.p, varrho(sig),
            float(np.linalg.eigvalsh(sig).min()), spectral_term(sample.E_D, sig), ctx.params)
        cert = ct.empirical_re_matrix(sample.X_norm, spec, ctx.K, ctx.iters,
                                      seed=_sub_seed(ctx.seed, trial), bound=bound)
    return (trial, cert.kappa_hat, cert.bound, cert.margin, cert.num_points,
            cert.num_refinements, cert.violations)


def _sub_seed(seed: int, trial: int) -> int:
    return int(stream(seed, "cone-sampler", trial).integers(0, 2 ** 63))


def _cone(cfg: ExperimentConfig, p: int, n: int):
    sec = "cone"
    c = cfg.get(sec, "c", 2.0)
    gamma = cfg.get(sec, "gamma", 1.0)
    try:
        if cfg.get(sec, "type", "vector") == "vector":
            S = cfg.get(sec, "S", ())
            O = cfg.get(sec, "O", ())
            return ConeSpecVector.build(S, O, p, n, c, gamma)
        J = cfg.require(sec, "J")
        if len(J) != p:
            raise cfg.error(sec, "J", f"needs {p} index sets separated by '|', got {len(J)}")
        return ConeSpecMatrix(SupportCollection(J), cfg.get(sec, "O", ()), n, c, gamma)
    except InvalidInputError as exc:
        raise ConfigError(f"[cone] {exc}")


def _params_for_mode(cfg: ExperimentConfig) -> Optional[bd.BoundParams]:
    return None if cfg.get("experiment", "mode", "special") == "special" else bound_params(cfg)


def run_certify(cfg: ExperimentConfig, seed: int, workers: int) -> RunReport:
    p, n = _dims(cfg)
    ctx = _CertifyCtx(p, n, _covariance(cfg, p), _contamination(cfg, n, p), _cone(cfg, p, n),
                      cfg.get("experiment", "points", 256), cfg.get("experiment", "refine_iters", 200),
                      seed, _params_for_mode(cfg))
    trials = cfg.get("experiment", "trials", 1)
    records = _map(partial(_certify_trial, ctx), trials, workers)
    kappas = [r[1] for r in records]
    margins = [r[3] for r in records]
    viol = sum(r[6] for r in records)
    suspicious = sum(1 for r in records if r[3] < 0 and r[6] == 0)
    summary = _summary_stats("kappa_hat", kappas) + _summary_stats("margin", margins) + [
        ("total_violations", viol), ("negative_margin_without_violation", suspicious)]
    return RunReport("certify", ("trial", "kappa_hat", "bound", "margin", "num_points",
                                 "num_refinements", "violations"),
                     records, summary, suspicious == 0, seed)


# ------------------------------------------------------------------------ lemmas


@dataclass(frozen=True)
class _LemmaCtx:
    p: int
    n: int
    cov: CovarianceSpec
    sig: np.ndarray
    t: float
    r1: float
    r2: float
    K: int
    seed: int


def _aux1(ctx: _LemmaCtx, trial: int) -> float:
    return ct.aux1_trial(ctx.p, ctx.n, ctx.cov, ctx.sig, ctx.r1, ctx.K, ctx.seed, trial)


def _aux2(ctx: _LemmaCtx, trial: int) -> float:
    return ct.aux2_trial(ctx.p, ctx.n, ctx.cov, ctx.sig, ctx.r1, ctx.r2, ctx.K, ctx.seed, trial)


@dataclass(frozen=True)
class _SplitCtx:
    p: int
    n: int
    cov: CovarianceSpec
    contamination: ContaminationSpec
    r1: float
    r2: float
    K: int
    seed: int


def _split(ctx: _SplitCtx, trial: int) -> tuple:
    sample = sample_design(ctx.p, ctx.n, ctx.cov, ctx.contamination, ctx.seed, trial)
    d = ct.splitting_diagnostics(sample, ctx.r1, ctx.r2, ctx.K, _sub_seed(ctx.seed, trial))
    return (trial, d.I1_hat, d.I2_hat, d.spectral, d.rhs)


def run_lemmas(cfg: ExperimentConfig, seed: int, workers: int) -> RunReport:
    p, n = _dims(cfg)
    which = cfg.get("lemmas", "which", "both")
    trials = cfg.get("experiment", "trials", 100)
    K = cfg.get("experiment", "points", 64 if which != "aux2" else 32)
    cov = _covariance(cfg, p)
    sig = cov.to_matrix()
    r1 = cfg.get("lemmas", "r1", 1.0)
    r2 = cfg.get("lemmas", "r2", 1.0)
    rho_s = varrho(sig)
    if which == "splitting":
        ctx = _SplitCtx(p, n, cov, _contamination(cfg, n, p), r1, r2, K, seed)
        try:
            ct._check_v(sigma_s(cov, ctx.contamination.random_cov), r1, r2)
        except InvalidInputError as exc:
            raise ConfigError(f"[lemmas] {exc}")
        records = _map(partial(_split, ctx), trials, workers)
        summary = (_summary_stats("I1_hat", [r[1] for r in records])
                   + _summary_stats("I2_hat", [r[2] for r in records])
                   + _summary_stats("rhs", [r[4] for r in records]))
        return RunReport("verify-lemmas", ("trial", "I1_hat", "I2_hat", "spectral", "rhs"),
                         records, summary, True, seed)
    if n < 10:
        raise ConfigError("[experiment] n must be >= 10 for the lemma checks")
    t = cfg.get("lemmas", "t", 0.3)
    ctx = _LemmaCtx(p, n, cov, sig, t, r1, r2, K, seed)
    records: list[tuple] = []
    summary: list[tuple[str, Any]] = []
    passed = True
    try:
        if which in ("aux1", "both"):
            ct._check_v1(sig, r1)
            vals = _map(partial(_aux1, ctx), trials, workers)
            res = ct.summarize_aux1(vals, n, p, t, r1, rho_s)
            records += [("aux1", i, v, res.bound) for i, v in enumerate(vals)]
            summary += [("aux1_bound", res.bound), ("aux1_violations", res.violations),
                        ("aux1_frequency", res.frequency), ("aux1_probability_bound", res.probability_bound),
                        ("aux1_slack", res.slack), ("aux1_pass", res.passed)]
            passed &= res.passed
        if which in ("aux2", "both"):
            ct._check_v(sig, r1, r2)
            vals = _map(partial(_aux2, ctx), trials, workers)
            res = ct.summarize_aux2(vals, n, p, r1, r2, rho_s)
            records += [("aux2", i, v, res.bound) for i, v in enumerate(vals)]
            summary += [("aux2_bound", res.bound), ("aux2_mean", res.mean),
                        ("aux2_std_error", res.std_error), ("aux2_pass", res.passed)]
            passed &= res.passed
    except InvalidInputError as exc:
        raise ConfigError(f"[lemmas] {exc}")
    return RunReport("verify-lemmas", ("lemma", "trial", "value", "bound"), records, summary, passed, seed)


# -------------------------------------------------------------------- theorem-mc


@dataclass(frozen=True)
class _TheoremCtx:
    p: int
    n: int
    cov: CovarianceSpec
    contamination: ContaminationSpec
    K: int
    seed: int
    params: Optional[bd.BoundParams]


def _theorem_trial(ctx: _TheoremCtx, trial: int) -> tuple:
    sample = sample_design(ctx.p, ctx.n, ctx.cov, ctx.contamination, ctx.seed, trial)
    b, t = ct.theorem_test_points(sample.X_norm, ctx.K, stream(ctx.seed, "cone-sampler", trial))
    rep = ct.check_theorem_pointwise(sample, (b, t), "special" if ctx.params is None else ctx.params)
    return (trial, rep.violations, rep.num_points, rep.max_gap, rep.positive_rhs)


def theorem_summary(records: Sequence[tuple], n: int, params: Optional[bd.BoundParams]):
    T = len(records)
    bad = sum(1 for r in records if r[1] > 0)
    q = bd.special_failure_probability(n) if params is None else bd.failure_probability(params, n)
    slack = 3.0 * math.sqrt(q * (1.0 - q) / T)
    frac = bad / T
    summary = [("designs", T), ("designs_with_violation", bad), ("violation_fraction", frac),
               ("probability_bound", q), ("slack", slack),
               ("total_points", sum(r[2] for r in records)),
               ("positive_rhs_points", sum(r[4] for r in records)),
               ("max_gap", float(_as_written([r[3] for r in records]).max()))]
    return summary, frac <= q + slack


def run_theorem(cfg: ExperimentConfig, seed: int, workers: int) -> RunReport:
    p, n = _dims(cfg)
    params = _params_for_mode(cfg)
    ctx = _TheoremCtx(p, n, _covariance(cfg, p), _contamination(cfg, n, p),
                      cfg.get("experiment", "points", 1000), seed, params)
    trials = cfg.get("experiment", "trials", 500)
    records = _map(partial(_theorem_trial, ctx), trials, workers)
    summary, ok = theorem_summary(records, n, params)
    return RunReport("theorem-mc", ("trial", "violations", "num_points", "max_gap", "positive_rhs"),
                     records, summary, ok, seed)


# ------------------------------------------------------------------------- solve


def _solver_cfg(cfg: ExperimentConfig, n: int, p: int) -> tuple[sv.SolverConfig, float]:
    lam_b_d, lam_t_d, gamma = sv.default_penalties(n, p) if n > 1 and p > 1 else (0.0, 0.0, 1.0)
    lam_b = cfg.get("solver", "lambda_b", "default")
    lam_t = cfg.get("solver", "lambda_theta", "default")
    return sv.SolverConfig(lam_b_d if lam_b == "default" else lam_b,
                           lam_t_d if lam_t == "default" else lam_t,
                           cfg.get("solver", "max_iters", 10_000), cfg.get("solver", "tol", 1e-8)), gamma


@dataclass(frozen=True)
class _SolveCtx:
    p: int
    n: int
    cov: CovarianceSpec
    contamination: ContaminationSpec
    scfg: sv.SolverConfig
    s_star: int
    o_star: int
    magnitude: float
    noise_sd: float
    c: float
    gamma: float
    seed: int
    multitask: bool


def _solve_trial(ctx: _SolveCtx, trial: int) -> tuple:
    sample = sample_design(ctx.p, ctx.n, ctx.cov, ctx.contamination, ctx.seed, trial)
    X = sample.X_norm
    rng = stream(ctx.seed, "noise", trial, 1)
    S = np.sort(rng.choice(ctx.p, size=ctx.s_star, replace=False))
    O = np.sort(rng.choice(ctx.n, size=ctx.o_star, replace=False))
    if not ctx.multitask:
        b_star = np.zeros(ctx.p)
        b_star[S] = rng.choice([-1.0, 1.0], size=ctx.s_star)
        th_star = np.zeros(ctx.n)
        th_star[O] = ctx.magnitude * rng.choice([-1.0, 1.0], size=ctx.o_star)
        y = sample_response(X, b_star, th_star, ctx.noise_sd, ctx.seed, trial)
        res = sv.solve_robust_lasso(y, X, ctx.scfg)
        spec = ConeSpecVector.build(S + 1, O + 1, ctx.p, ctx.n, ctx.c, ctx.gamma)
        chk = sv.error_in_cone_check(res, (b_star, th_star), spec)
        return (trial, float(np.linalg.norm(res.b_hat - b_star)),
                float(np.linalg.norm(res.theta_hat - th_star)), res.converged, res.iterations,
                res.kkt_residual, res.objective_trace[-1], chk.margin, chk.member)
    B_star = np.zeros((ctx.p, ctx.p))
    B_star[S, :] = rng.choice([-1.0, 1.0], size=(ctx.s_star, ctx.p))
    T_star = np.zeros((ctx.n, ctx.p))
    T_star[O] = ctx.magnitude * rng.standard_normal((ctx.o_star, ctx.p))
    W = ctx.noise_sd * rng.standard_normal((ctx.n, ctx.p))
    Mr = X @ B_star - T_star + W
    res = sv.solve_multitask_robust(Mr, X, ctx.scfg)
    rows = np.flatnonzero(np.sqrt((res.theta_hat ** 2).sum(axis=1)) > 0)
    return (trial, float(np.linalg.norm(res.b_hat - B_star)), float(np.linalg.norm(res.theta_hat - T_star)),
            res.converged, res.iterations, res.kkt_residual, res.objective_trace[-1],
            bool(np.array_equal(rows, O)))


def run_solve(cfg: ExperimentConfig, seed: int, workers: int) -> RunReport:
    multitask = cfg.get("solver", "problem", "lasso") == "multitask"
    if cfg.get("solver", "simulate", False):
        p, n = _dims(cfg)
        scfg, gamma = _solver_cfg(cfg, n, p)
        s_star = cfg.get("solver", "s_star", min(3, p))
        o_star = cfg.get("solver", "o_star", min(2, n))
        if s_star > p:
            raise cfg.error("solver", "s_star", f"must be <= p = {p}")
        if o_star > n:
            raise cfg.error("solver", "o_star", f"must be <= n = {n}")
        ctx = _SolveCtx(p, n, _covariance(cfg, p), _contamination(cfg, n, p), scfg, s_star, o_star,
                        cfg.get("solver", "magnitude", 5.0), cfg.get("solver", "noise_sd", 0.1),
                        cfg.get("solver", "c", 3.0), gamma, seed, multitask)
        trials = cfg.get("experiment", "trials", 1)
        records = _map(partial(_solve_trial, ctx), trials, workers)
        summary = (_summary_stats("param_error", [r[1] for r in records])
                   + _summary_stats("corruption_error", [r[2] for r in records])
                   + [("converged", sum(1 for r in records if r[3]))])
        if multitask:
            cols = ("trial", "B_error", "Theta_error", "converged", "iterations", "kkt_residual",
                    "objective", "row_support_exact")
            summary.append(("row_support_exact", sum(1 for r in records if r[7])))
        else:
            cols = ("trial", "b_error", "theta_error", "converged", "iterations", "kkt_residual",
                    "objective", "cone_margin", "cone_member")
            summary.append(("cone_member_frequency", sum(1 for r in records if r[8]) / len(records)))
        return RunReport("solve", cols, records, summary, True, seed)
    X = read_matrix(cfg.path("solver", "design"))
    Y = read_matrix(cfg.path("solver", "response"))
    n, p = X.shape
    if Y.shape[0] != n:
        raise cfg.error("solver", "response", f"needs {n} rows to match the design")
    scfg, _ = _solver_cfg(cfg, n, p)
    try:
        if multitask:
            res = sv.solve_multitask_robust(Y, X, scfg)
        else:
            if Y.shape[1] != 1:
                raise cfg.error("solver", "response", "the lasso problem needs a single column")
            res = sv.solve_robust_lasso(Y[:, 0], X, scfg)
    except InvalidInputError as exc:
        raise ConfigError(f"[solver] {exc}")
    bh = res.b_hat.reshape(res.b_hat.shape[0], -1)
    th = res.theta_hat.reshape(res.theta_hat.shape[0], -1)
    records = [("b", i + 1, j + 1, float(bh[i, j])) for i in range(bh.shape[0]) for j in range(bh.shape[1])]
    records += [("theta", i + 1, j + 1, float(th[i, j])) for i in range(th.shape[0]) for j in range(th.shape[1])]
    summary = [("objective", res.objective_trace[-1]), ("converged", res.converged),
               ("iterations", res.iterations), ("kkt_residual", res.kkt_residual),
               ("lambda_b", scfg.lambda_b), ("lambda_theta", scfg.lambda_theta),
               ("non_unique", res.non_unique)]
    return RunReport("solve", ("block", "row", "col", "value"), records, summary, True, seed)


RUNNERS = {"audit": run_audit, "bounds": run_bounds, "certify": run_certify,
           "verify-lemmas": run_lemmas, "theorem-mc": run_theorem, "solve": run_solve}


def run_experiment(cfg: ExperimentConfig, kind: str | None = None, seed: int | None = None,
                   workers: int | None = None) -> RunReport:
    """Run the experiment described by ``cfg`` (``kind`` overrides ``cfg.kind``)."""
    kind = kind or cfg.kind
    if kind not in RUNNERS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    if cfg.kind is not None and cfg.kind != kind:
        raise cfg.error("experiment", "kind", f"config is for '{cfg.kind}', not '{kind}'")
    seed = cfg.get("experiment", "seed", 0) if seed is None else seed
    workers = cfg.get("experiment", "workers", 1) if workers is None else workers
    t0 = time.perf_counter()
    report = RUNNERS[kind](cfg, seed, workers)
    report.wall_clock = time.perf_counter() - t0
    report.config_echo = cfg.echo()
    return report
