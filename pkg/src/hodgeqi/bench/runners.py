"""Experiment drivers behind the command line.

Each sweep maps one worker per spacing h; ``HODGEQI_THREADS`` caps the number
of worker processes (default 1, i.e. in-process).  Results are assembled in
h order, so outputs do not depend on the worker count.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..bounded_scheme import BoundedConfig, build_leray_qi, eval_mesh, leray_decompose, sample_box
from ..hodge_oracle import fft_project, smooth_window
from ..lattice_qi import GridField, Truncation, evaluate_qi, make_qi, read_field_csv, write_field_csv
from ..matrix_kernel import CURL_SIGNS, KernelSpec, build_kernel, check_strang_fix, kernel_hat
from .config import ExperimentConfig
from .fields import builtin_field, part_of
from .plot import emit_plot
from .report import ConvergenceReport, rmse

ORACLE_WINDOW_RADIUS = 4.0
ORACLE_POINTS = 16


def thread_count() -> int:
    raw = os.environ.get("HODGEQI_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"HODGEQI_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValueError("HODGEQI_THREADS must be at least 1")
    return n


def _map(fn, items):
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------------
# whole space


def _tapered(f, lo, hi):
    center = 0.5 * (np.asarray(lo) + np.asarray(hi))
    R = 0.5 * float(np.min(np.subtract(hi, lo)))
    return lambda x: f(x) * smooth_window(x, center, R)[..., None]


def _wholespace_row(args):
    cfg, h = args
    f = builtin_field(cfg.field)
    lo, hi = cfg.sample_box
    sampler = _tapered(f, lo, hi) if cfg.taper else f
    data = GridField.on_box(sampler, lo, hi, h)
    pts = eval_mesh(*cfg.eval_box, cfg.eval_mesh).reshape(-1, len(lo))
    kc = cfg.kernel
    trunc = Truncation(**cfg.truncation)
    d = len(lo)
    qd = evaluate_qi(make_qi(data, KernelSpec.div(kc.ell, kc.k, d), trunc), pts, cfg.alpha)
    qc = evaluate_qi(make_qi(data, KernelSpec.curl(kc.ell, kc.k, d), trunc), pts, cfg.alpha)
    ed = part_of(f, "div", cfg.alpha)(pts)
    ec = part_of(f, "curl", cfg.alpha)(pts)
    ef = f.derivative(cfg.alpha)(pts)
    return h, rmse(qd, ed), rmse(qc, ec), rmse(qd + qc, ef)


def run_wholespace(cfg: ExperimentConfig) -> ConvergenceReport:
    rep = ConvergenceReport("wholespace", window=cfg.window,
                            meta={"field": cfg.field, "ell": cfg.kernel.ell, "k": cfg.kernel.k, "alpha": cfg.alpha})
    for row in _map(_wholespace_row, [(cfg, h) for h in cfg.h]):
        rep.add(*row)
    return rep


# ----------------------------------------------------------------------------
# bounded domain


def bounded_config(cfg: ExperimentConfig, h: float) -> BoundedConfig:
    b = cfg.bounded
    return BoundedConfig(tuple(b.omega[0]), tuple(b.omega[1]), tuple(b.V[0]), tuple(b.V[1]), h,
                         cfg.kernel.ell, cfg.kernel.k, b.C, b.eps, b.matern_shape)


def _bounded_row(args):
    cfg, h = args
    f = builtin_field(cfg.field)
    bc = bounded_config(cfg, h)
    data = sample_box(f, bc)
    pts = eval_mesh(bc.omega_lo, bc.omega_hi, cfg.eval_mesh, cfg.bounded.margin).reshape(-1, bc.dim)
    errs = {"div": np.nan, "curl": np.nan}
    qi = None
    for part in cfg.bounded.parts:
        qi = build_leray_qi(data, bc, part) if qi is None else _switch(qi, part)
        errs[part] = rmse(qi(pts, cfg.alpha), part_of(f, part, cfg.alpha)(pts))
    full = np.nan
    if not np.isnan(errs["div"]) and not np.isnan(errs["curl"]):
        dd = _switch(qi, "div")(pts, cfg.alpha)
        cc = _switch(qi, "curl")(pts, cfg.alpha)
        full = rmse(dd + cc, f.derivative(cfg.alpha)(pts))
    return h, errs["div"], errs["curl"], full


def _switch(qi, part):
    # the interpolant and residual do not depend on the projected part
    from ..bounded_scheme import LerayQI
    return LerayQI(qi.cfg, part, qi.H, qi.interp, qi.nodes, qi.residual, info=dict(qi.info))


def run_bounded(cfg: ExperimentConfig) -> ConvergenceReport:
    b = cfg.bounded
    rep = ConvergenceReport("bounded", window=cfg.window,
                            meta={"field": cfg.field, "ell": cfg.kernel.ell, "k": cfg.kernel.k,
                                  "C": b.C, "eps": b.eps, "matern_shape": b.matern_shape})
    for row in _map(_bounded_row, [(cfg, h) for h in cfg.h]):
        rep.add(*row)
    return rep


# ----------------------------------------------------------------------------
# validation suites


@dataclass
class Check:
    suite: str
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.threshold)


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("suite", "check", "value", "threshold", "status"))
            for c in self.checks:
                w.writerow((c.suite, c.name, "%.12e" % c.value, "%.12e" % c.threshold,
                            "PASS" if c.passed else "FAIL"))


def strangfix_checks(ell: int, k: int, dim: int = 2) -> list:
    r = check_strang_fix(ell, k, dim)
    tag = f"({ell},{k})"
    t = r.thresholds
    return [Check("strangfix", f"origin {tag}", r.origin_error, t["origin"]),
            Check("strangfix", f"lattice {tag}", r.lattice_max, t["lattice"]),
            Check("strangfix", f"derivatives {tag}", r.derivative_max, t["derivative"])]


def _fd4_gradient(ev, pts, step):
    """4th-order central differences of every kernel entry, shape (d, n, d, d)."""
    d = pts.shape[-1]
    out = []
    for s in range(d):
        e = np.zeros(d)
        e[s] = step
        out.append((ev(pts - 2 * e) - 8 * ev(pts - e) + 8 * ev(pts + e) - ev(pts + 2 * e)) / (12 * step))
    return np.array(out)


def off_lattice_points(rng, n: int, dim: int = 2, spread: float = 3.0, clearance: float = 0.1) -> np.ndarray:
    out = []
    while len(out) < n:
        p = rng.uniform(-spread, spread, dim)
        if np.linalg.norm(p - np.round(p)) >= clearance:
            out.append(p)
    return np.array(out)


def identity_checks(ell: int, k: int, dim: int = 2, n_points: int = 100, n_freq: int = 20,
                    seed: int = 0, step: float = 1e-3) -> list:
    rng = np.random.default_rng(seed)
    pts = off_lattice_points(rng, n_points, dim)
    checks = []
    ev_div = build_kernel(KernelSpec.div(ell, k, dim))
    ev_curl = build_kernel(KernelSpec.curl(ell, k, dim))

    g = _fd4_gradient(ev_div, pts, step)  # g[s, p, i, j] = d_s Psi_ij
    div = sum(g[s, :, s, :] for s in range(dim))
    scale = np.max(np.abs(g), axis=(0, 2, 3))
    checks.append(Check("identities", "divergence of div-kernel columns (relative)",
                        float(np.max(np.max(np.abs(div), axis=1) / scale)), 1e-6))

    g = _fd4_gradient(ev_curl, pts, step)
    if dim == 2:
        curl = (g[0, :, 1, :] - g[1, :, 0, :])[:, None, :]
    else:
        curl = np.stack([g[a, :, b, :] - g[b, :, a, :] for a in range(dim) for b in range(a + 1, dim)], axis=1)
    scale = np.max(np.abs(g), axis=(0, 2, 3))
    checks.append(Check("identities", "curl of curl-kernel columns (relative)",
                        float(np.max(np.max(np.abs(curl), axis=(1, 2)) / scale)), 1e-6))

    for name, ev in (("div", ev_div), ("curl", ev_curl)):
        sym = float(np.max(np.abs(ev(pts) - ev(-pts))))
        checks.append(Check("identities", f"{name} kernel even symmetry", sym, 1e-12))

    omega = rng.uniform(-4 * np.pi, 4 * np.pi, (n_freq, dim))
    hats = [kernel_hat(KernelSpec.curl(ell, k, dim, combo), omega) for combo in sorted(CURL_SIGNS)]
    spread = max(float(np.max(np.abs(h - hats[0]))) for h in hats[1:])
    checks.append(Check("identities", "curl variants agree in Fourier space", spread, 1e-10))
    return checks


def oracle_discrepancy(ell: int, k: int, h: float, field_name: str = "bd_full", seed: int = 0,
                       radius: float = ORACLE_WINDOW_RADIUS, n_points: int = ORACLE_POINTS) -> dict:
    """project_div against fft_project for a 1-periodic builtin field on [0, 1]^2.

    The lattice projection sees the field tapered by a smooth window of half
    width ``radius`` about the box centre, so truncation leakage is negligible
    against the approximation error.
    """
    f = builtin_field(field_name)
    n = int(round(f.period / h))
    if abs(n * h - f.period) > 1e-12:
        raise ValueError("h must divide the field period")
    periodic = GridField.sample(f, np.zeros(2), h, (n, n))
    ref = fft_project(periodic, "div")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_points, 2))
    pts = idx * h
    center = np.full(2, 0.5 * f.period)
    wide = GridField.sample(lambda x: f(x) * smooth_window(x, center, radius)[..., None], center - radius, h,
                            (int(round(2 * radius / h)) + 1,) * 2)
    approx = evaluate_qi(make_qi(wide, KernelSpec.div(ell, k, 2)), pts)
    nodes = periodic.nodes()
    return {
        "discrepancy": rmse(approx, ref.values[idx[:, 0], idx[:, 1]]),
        "fft_div_error": rmse(ref.values, part_of(f, "div")(nodes)),
        "fft_curl_error": rmse(fft_project(periodic, "curl").values, part_of(f, "curl")(nodes)),
        "budget": 10.0 * rmse(periodic.values, 0.0) * (h * f.max_wavenumber) ** (2 * k),
    }


def oracle_checks(ell: int, k: int, h: float = 1.0 / 64) -> list:
    r = oracle_discrepancy(ell, k, h)
    return [Check("oracle", "fft div part vs exact", r["fft_div_error"], 1e-10),
            Check("oracle", "fft curl part vs exact", r["fft_curl_error"], 1e-10),
            Check("oracle", f"project_div vs fft_project at h={h:.6g}", r["discrepancy"], r["budget"])]


def run_validate(cfg: ExperimentConfig) -> ValidationReport:
    ell, k = cfg.kernel.ell, cfg.kernel.k
    rep = ValidationReport()
    for suite in cfg.suites:
        if suite == "strangfix":
            rep.checks += strangfix_checks(ell, k)
        elif suite == "identities":
            rep.checks += identity_checks(ell, k)
        elif suite == "oracle":
            rep.checks += oracle_checks(ell, k)
    return rep


# ----------------------------------------------------------------------------
# decomposition and kernel dump


def load_field_data(cfg: ExperimentConfig) -> tuple:
    """(GridField, exact callable or None) from a builtin name or a CSV lattice."""
    if cfg.field_csv is not None:
        return read_field_csv(cfg.field_csv), None
    if not cfg.h:
        raise ValueError("decompose with a builtin field needs one h value")
    f = builtin_field(cfg.field)
    lo, hi = cfg.bounded.omega
    return GridField.on_box(f, lo, hi, cfg.h[0]), f


def run_decompose(cfg: ExperimentConfig, out: Path) -> dict:
    data, _ = load_field_data(cfg)
    ext = np.array(data.extents) - 1
    lo = data.origin
    hi = lo + data.spacing * ext
    b = cfg.bounded
    bc = BoundedConfig(tuple(lo), tuple(hi), tuple(b.V[0]), tuple(b.V[1]), data.spacing,
                       cfg.kernel.ell, cfg.kernel.k, b.C if b.C is not None else 0.05, b.eps, b.matern_shape)
    pts = eval_mesh(lo, hi, cfg.eval_mesh, b.margin).reshape(-1, data.dim)
    dec = leray_decompose(data, bc, pts)
    stem = cfg.output("fields", "fields")
    paths = {}
    for name, vals in (("div", dec.div), ("curl", dec.curl), ("reconstruction", dec.reconstruction)):
        p = out / f"{stem}_{name}.csv"
        write_field_csv(p, pts, vals)
        paths[name] = p
    return paths


def run_kernel_dump(cfg: ExperimentConfig, out: Path) -> Path:
    pts = np.array(cfg.dump_points, dtype=float)
    d = pts.shape[1]
    kc = cfg.kernel
    spec = KernelSpec.div(kc.ell, kc.k, d) if kc.variant == "div" else KernelSpec.curl(kc.ell, kc.k, d)
    vals = build_kernel(spec)(pts).reshape(len(pts), -1)
    path = out / cfg.output("dump", "kernel_dump.csv")
    header = [f"x{s + 1}" for s in range(d)] + [f"Psi{i + 1}{j + 1}" for i in range(d) for j in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p, v in zip(pts, vals):
            w.writerow(["%.16e" % t for t in p] + ["%.16e" % t for t in v])
    return path


def write_report(rep: ConvergenceReport, cfg: ExperimentConfig, out: Path) -> list:
    paths = [out / cfg.output("report", "report.csv")]
    rep.write_csv(paths[0])
    if "plot" in cfg.outputs:
        paths.append(out / cfg.outputs["plot"])
        emit_plot(rep, paths[1], title=rep.experiment)
    return paths
