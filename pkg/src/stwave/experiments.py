"""Experiment configurations and their runners.

Each runner returns an :class:`ExperimentResult` holding CSV tables, a JSON
summary and a list of numerical checks. A failed fatal check maps to exit
code 2 in the CLI; non-fatal checks are reported as warnings.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import spacetime as st
from . import temporal as tc
from .errors import ConfigError, InvalidArgumentError
from .io import CsvTable, read_json, write_csv, write_json
from .mesh import gauss_rule, make_uniform_mesh, quadrature_points
from .rhs import parse_rhs_spec

log = logging.getLogger(__name__)

KIND_ALIASES = {
    "isometry": "ode-isometry",
    "theorem1": "wave-theorem1",
    "convergence": "ode-convergence",
}


@dataclass
class ExperimentConfig:
    kind: str
    mu: float | None = None
    L: float = 1.0
    T: float = 1.0
    nt: list | None = None
    nx: list | None = None
    rhs: str | None = None
    refine: int = tc.DEFAULT_REFINEMENT
    tol: float = 1e-8
    slack: float = 0.05
    out: str = "out"
    deterministic: bool = False
    seed: int = 42
    k: list | None = None
    q: list | None = None
    mus: list | None = None
    levels: int = 3
    cases: int | None = None
    inputs: list | None = None

    def __post_init__(self):
        self.kind = KIND_ALIASES.get(self.kind, self.kind)
        if self.kind not in RUNNERS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}", "kind")
        for key in ("L", "T"):
            v = getattr(self, key)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{key} must be a positive number, got {v!r}", key)
        if self.mu is not None and (isinstance(self.mu, bool) or not isinstance(self.mu, (int, float)) or not (math.isfinite(self.mu) and self.mu > 0)):
            raise ConfigError(f"mu must be a positive number, got {self.mu!r}", "mu")
        for key in ("nt", "nx"):
            v = getattr(self, key)
            if v is None:
                continue
            if isinstance(v, int) and not isinstance(v, bool):
                v = [v]
                setattr(self, key, v)
            _check_sizes(v, key)
        for key in ("tol", "slack"):
            v = getattr(self, key)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{key} must be positive, got {v!r}", key)
        for key, lo in (("refine", 1), ("levels", 1), ("cases", 1)):
            v = getattr(self, key)
            if v is None:
                continue
            if isinstance(v, bool) or not isinstance(v, int) or v < lo:
                raise ConfigError(f"{key} must be an integer >= {lo}, got {v!r}", key)
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}", "seed")
        if not isinstance(self.deterministic, bool):
            raise ConfigError("deterministic must be true or false", "deterministic")
        if self.rhs is not None and not isinstance(self.rhs, (str, list)):
            raise ConfigError("rhs must be a spec string or a list of them", "rhs")
        if self.k is not None:
            if not isinstance(self.k, list) or not self.k or any(isinstance(x, bool) or not isinstance(x, int) or x < 1 for x in self.k):
                raise ConfigError("k must be a list of positive integers", "k")
        for key in ("q", "mus"):
            v = getattr(self, key)
            if v is not None and (
                not isinstance(v, list) or not v or any(isinstance(x, bool) or not isinstance(x, (int, float)) or not x > 0 for x in v)
            ):
                raise ConfigError(f"{key} must be a list of positive numbers", key)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        names = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}", key)
        if "kind" not in data:
            raise ConfigError("missing config key 'kind'", "kind")
        return cls(**data)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with Path(path).open(encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}", "config") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}", "config") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _check_sizes(v, key):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{key} must be a non-empty list of integers", key)
    if any(isinstance(n, bool) or not isinstance(n, int) for n in v):
        raise ConfigError(f"{key} entries must be integers", key)
    if any(n < 2 for n in v):
        raise ConfigError(f"{key} entries must be >= 2", key)
    if any(b <= a for a, b in zip(v, v[1:])):
        raise ConfigError(f"{key} must be strictly increasing", key)


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    fatal: bool = True

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "fatal": self.fatal}


@dataclass
class ExperimentResult:
    kind: str
    summary: dict
    tables: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    extra_files: dict = field(default_factory=dict)  # name -> JSON-able object or CsvTable

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.fatal)

    @property
    def warnings(self) -> list:
        return [c for c in self.checks if not c.passed and not c.fatal]


def _parse(cfg: ExperimentConfig, default: str):
    text = cfg.rhs if cfg.rhs is not None else default
    if isinstance(text, list):
        raise ConfigError("this experiment takes a single rhs", "rhs")
    return parse_rhs_spec(text)


def _rhs_list(cfg: ExperimentConfig, default: list) -> list:
    texts = default if cfg.rhs is None else (cfg.rhs if isinstance(cfg.rhs, list) else [cfg.rhs])
    return [(t, parse_rhs_spec(t)) for t in texts]


def _mu(cfg, default=math.pi**2):
    return float(cfg.mu) if cfg.mu is not None else default


def _sizes(cfg, default):
    return list(cfg.nt) if cfg.nt is not None else list(default)


def _temporal_spec(spec, what="temporal experiment"):
    if not isinstance(spec, (tc.Density, tc.PointMass, tc.Samples)):
        raise InvalidArgumentError(f"{what} needs a temporal rhs (const, sine, cosine, poly, pointmass, samples)")
    return spec


def _rates(errors, hs):
    out = [None]
    for i in range(1, len(errors)):
        if errors[i] > 0 and errors[i - 1] > 0:
            out.append(math.log(errors[i - 1] / errors[i]) / math.log(hs[i - 1] / hs[i]))
        else:
            out.append(None)
    return out


# --------------------------------------------------------------------------
# ODE experiments
# --------------------------------------------------------------------------


def _oracle(params, spec):
    if isinstance(spec, tc.PointMass):
        return (
            lambda t: tc.point_mass_solution(params, spec.weight, t),
            lambda t: tc.point_mass_solution(params, spec.weight, t, derivative=True),
        )
    return (
        lambda t: tc.duhamel_oracle(params, spec, t),
        lambda t: tc.duhamel_oracle(params, spec, t, derivative=True),
    )


def ode_errors(params, mesh, spec, n_points: int = 5):
    """L2 and H1-seminorm errors of the discrete solution against the oracle."""
    u = tc.solve_modal(params, mesh, spec)
    rule = gauss_rule(n_points)
    pts, wts = quadrature_points(mesh, rule)
    f0, f1 = _oracle(params, spec)
    e0 = math.sqrt(float(np.sum(wts * (u(pts) - f0(pts)) ** 2)))
    e1 = math.sqrt(float(np.sum(wts * (u.derivative()[:, None] - f1(pts)) ** 2)))
    return u, e0, e1


def run_ode_solve(cfg):
    params = tc.ModalParams(_mu(cfg), cfg.T)
    spec = _temporal_spec(_parse(cfg, "const:1.0"))
    table = CsvTable(["n", "h", "u_T", "err_l2", "err_h1"])
    u = None
    for n in _sizes(cfg, [128]):
        mesh = make_uniform_mesh(n, 0.0, params.T)
        u, e0, e1 = ode_errors(params, mesh, spec)
        table.append([n, mesh.h, float(u.nodal_values()[-1]), e0, e1])
    sol = CsvTable(["t", "u"], [[t, v] for t, v in zip(u.mesh.nodes, u.nodal_values())])
    summary = {"mu": params.mu, "T": params.T, "u_T": float(u.nodal_values()[-1]), "rhs": spec.to_dict()}
    return ExperimentResult(cfg.kind, summary, {"solve.csv": table, "solution.csv": sol})


def run_ode_convergence(cfg):
    params = tc.ModalParams(_mu(cfg), cfg.T)
    spec = _temporal_spec(_parse(cfg, "const:1.0"))
    sizes = _sizes(cfg, [16, 32, 64, 128])
    if len(sizes) < 2:
        raise ConfigError("convergence needs at least two mesh sizes", "nt")
    hs, e0s, e1s = [], [], []
    for n in sizes:
        mesh = make_uniform_mesh(n, 0.0, params.T)
        _, e0, e1 = ode_errors(params, mesh, spec)
        hs.append(mesh.h)
        e0s.append(e0)
        e1s.append(e1)
    r0, r1 = _rates(e0s, hs), _rates(e1s, hs)
    table = CsvTable(["level", "n", "h", "err_l2", "err_h1", "rate_l2", "rate_h1"])
    for i, n in enumerate(sizes):
        table.append([i, n, hs[i], e0s[i], e1s[i], "" if r0[i] is None else r0[i], "" if r1[i] is None else r1[i]])
    rates = [r for r in r0[1:] if r is not None]
    checks = [
        Check("l2_rate_in_[1.8,2.2]", bool(rates) and all(1.8 <= r <= 2.2 for r in rates), f"rates {rates}"),
        Check("final_l2_error<=1e-4", e0s[-1] <= 1e-4, f"{e0s[-1]:.3e}"),
    ]
    summary = {"mu": params.mu, "T": params.T, "rates_l2": rates, "final_err_l2": e0s[-1], "rhs": spec.to_dict()}
    return ExperimentResult(cfg.kind, summary, {"convergence.csv": table}, checks)


def run_ode_dualnorm(cfg):
    T = cfg.T
    n = _sizes(cfg, [256])[-1]
    mesh = make_uniform_mesh(n, 0.0, T)
    ext = mesh.mirror()
    entries, files, rows = [], {}, []
    checks = []
    for text, spec in _rhs_list(cfg, ["const:1.0", "pointmass:w=1.0"]):
        spec = _temporal_spec(spec, "dualnorm")
        F = tc.assemble_rhs(mesh, spec)
        reports = [tc.dual_norm_test(mesh, F), tc.extended_dual_norm(tc.restriction_adjoint(ext, F))]
        for rep in reports:
            name = f"representer_{len(entries)}.csv"
            nodes = mesh.nodes[:-1] if rep.which == tc.NormKind.TEST_DUAL else ext.nodes[1:-1]
            files[name] = CsvTable(["t", "w"], [[t, w] for t, w in zip(nodes, rep.representer)])
            entries.append({"which": rep.which.value, "value": rep.value, "refinement": rep.refinement, "representer_path": name, "rhs": text})
        rows.append((text, spec, reports[0].value, reports[1].value))
    summary = {"T": T, "n": n, "norms": entries}
    for text, spec, td, ed in rows:
        exp = _dual_closed_forms(spec, T)
        if exp is None:
            continue
        e_td, e_ed, exact_td = exp
        tol_td = 1e-12 if exact_td else 0.01
        checks.append(Check(f"{text}:test_dual", abs(td - e_td) <= tol_td * e_td, f"{td!r} vs {e_td!r}"))
        checks.append(Check(f"{text}:extended_dual", abs(ed - e_ed) <= 0.01 * e_ed, f"{ed!r} vs {e_ed!r}"))
        if isinstance(spec, tc.PointMass):
            ratio = td / ed
            summary["dirac_ratio"] = ratio
            checks.append(Check(f"{text}:ratio=sqrt2", abs(ratio - math.sqrt(2)) <= 0.01 * math.sqrt(2), f"{ratio!r}"))
    return ExperimentResult(cfg.kind, summary, {}, checks, {"dualnorm.json": entries, **files})


def _dual_closed_forms(spec, T):
    """(test-dual, extended-dual, test-dual exact?) for the closed-form cases."""
    if isinstance(spec, tc.PointMass):
        w = abs(spec.weight)
        return w * math.sqrt(T), w * math.sqrt(T / 2.0), True
    if isinstance(spec, tc.Density) and spec.kind == "const":
        c = abs(spec.params[0])
        return c * math.sqrt(T**3 / 3.0), c * math.sqrt(5.0 * T**3 / 24.0), False
    return None


def run_ode_infsup(cfg):
    mu, T = _mu(cfg, 4.0), cfg.T
    table = CsvTable(["mu", "T", "n", "beta_h", "bound_infsup", "const_continuity"])
    reps = []
    for n in _sizes(cfg, [64, 128, 256]):
        rep = tc.infsup_modal(make_uniform_mesh(n, 0.0, T), mu, T, tol=cfg.tol, seed=cfg.seed)
        reps.append(rep)
        table.append([mu, T, n, rep.beta_h, rep.bound_infsup, rep.const_continuity])
    betas = [r.beta_h for r in reps]
    spread = max(betas) / min(betas) - 1.0
    checks = [
        Check("bound_closed_form", reps[0].bound_infsup == 2.0 / (2.0 + math.sqrt(mu) * T)),
        Check("continuity_closed_form", reps[0].const_continuity == 1.0 + 4.0 * mu * T**2 / math.pi**2),
        Check("beta_h_stable_within_5%", spread <= 0.05, f"spread {spread:.3e}"),
    ]
    if mu * T**2 <= 100:
        checks.append(Check("beta_h>=0.25", min(betas) >= 0.25, f"min {min(betas)!r}"))
    summary = {"mu": mu, "T": T, "reports": [r.to_dict() for r in reps]}
    return ExperimentResult(cfg.kind, summary, {"infsup.csv": table}, checks)


def run_ode_isometry(cfg):
    params = tc.ModalParams(_mu(cfg), cfg.T)
    n = _sizes(cfg, [256])[-1]
    mesh = make_uniform_mesh(n, 0.0, params.T)
    default = ["const:1.0", f"pointmass:w={math.sqrt(params.mu)!r}"]
    records, checks = [], []
    for text, spec in _rhs_list(cfg, default):
        spec = _temporal_spec(spec, "isometry")
        rec_r = tc.isometry_check(params, mesh, spec, cfg.refine)
        rec_1 = tc.isometry_check(params, mesh, spec, 1)
        records.append({"rhs": text, "refined": rec_r.to_dict(), "r1": rec_1.to_dict()})
        checks.append(Check(f"{text}:ratio_r{cfg.refine}_in_[0.98,1.02]", 0.98 <= rec_r.ratio <= 1.02, f"{rec_r.ratio!r}"))
        checks.append(Check(f"{text}:ratio_r1=1", abs(rec_1.ratio - 1.0) <= 1e-10, f"{rec_1.ratio!r}"))
    summary = {"mu": params.mu, "T": params.T, "n": n, "refinement": cfg.refine, "records": records}
    if len(records) == 1:
        summary["ratio"] = records[0]["refined"]["ratio"]
    return ExperimentResult(cfg.kind, summary, {}, checks)


def random_ansatz(mesh, rng) -> tc.FeFunction1d:
    return tc.FeFunction1d(mesh, rng.standard_normal(mesh.n_elements), tc.BC.ANSATZ)


def run_ode_equivalence(cfg):
    """Norm equivalence, Friedrichs bound and extension band on random ansatz functions."""
    T = cfg.T
    n = _sizes(cfg, [32])[-1]
    mesh = make_uniform_mesh(n, 0.0, T)
    mus = cfg.mus or ([cfg.mu] if cfg.mu is not None else [1.0, math.pi**2, 100.0])
    cases = cfg.cases or 100
    rng = np.random.default_rng(cfg.seed)
    table = CsvTable(["mu", "case", "dt_norm", "graph_norm", "ext_norm", "l2_norm", "lower_holds", "upper_holds", "friedrichs_holds", "band_holds"])
    counts = {"equivalence": 0, "friedrichs": 0, "band": 0}
    for mu in mus:
        for i in range(cases):
            u = random_ansatz(mesh, rng)
            rec = tc.equivalence_check(u, mu, cfg.refine, cfg.slack)
            graph = rec.graph_norm
            ext_mesh = mesh.refine(cfg.refine).mirror()
            ext = tc.extended_dual_norm(tc.box_functional(u, mu, ext_mesh)).value
            l2 = u.l2_norm()
            fr = graph >= math.sqrt(2.0) / T * l2 * 0.95
            band = ext * 0.98 <= graph <= math.sqrt(2.0) * ext * 1.02
            counts["equivalence"] += not rec.holds
            counts["friedrichs"] += not fr
            counts["band"] += not band
            table.append([mu, i, rec.dt_norm, graph, ext, l2, rec.lower_holds, rec.upper_holds, fr, band])
    # Dirac case: discrete solution for the point mass sqrt(mu)
    dirac = []
    for mu in mus:
        params = tc.ModalParams(mu, T)
        u = tc.solve_modal(params, mesh, tc.PointMass(math.sqrt(mu)))
        g = tc.graph_norm(u, mu, 1).value
        e = tc.extended_dual_norm(tc.box_functional(u, mu)).value
        dirac.append({"mu": mu, "graph_norm": g, "ext_norm": e, "ratio": g / e})
    checks = [
        Check("equivalence_violations=0", counts["equivalence"] == 0, str(counts["equivalence"])),
        Check("friedrichs_violations=0", counts["friedrichs"] == 0, str(counts["friedrichs"])),
        Check("extension_band_violations=0", counts["band"] == 0, str(counts["band"])),
        Check(
            "dirac_attains_sqrt2",
            all(abs(d["ratio"] - math.sqrt(2.0)) <= 0.01 * math.sqrt(2.0) for d in dirac),
            str([d["ratio"] for d in dirac]),
        ),
    ]
    summary = {"T": T, "n": n, "mus": mus, "cases": cases, "violations": counts, "dirac": dirac}
    return ExperimentResult(cfg.kind, summary, {"equivalence.csv": table}, checks)


# --------------------------------------------------------------------------
# wave experiments
# --------------------------------------------------------------------------


def _wave_spec(cfg, default):
    spec = _parse(cfg, default)
    if isinstance(spec, (tc.PointMass, tc.Samples)):
        raise InvalidArgumentError("wave experiments need initvel, modal or griddensity data")
    if isinstance(spec, tc.Density):
        # a purely temporal profile acts on the first spatial mode
        spec = st.ModalDensity(1, spec)
    return spec


def _grid(cfg, default_n):
    nt = _sizes(cfg, [default_n])[-1]
    nx = (cfg.nx or [nt])[-1]
    return st.WaveDomain(cfg.L, cfg.T).grid(nt, nx)


ENERGY_GROWTH_FLAG = 1.2
GRAPH_STABLE_TOL = 0.05


def energy_diverges_graph_stable(energy, graph) -> bool:
    """Heuristic flag over a refinement sequence: the energy norm still grows
    by ENERGY_GROWTH_FLAG per level while the graph norm has settled."""
    if len(energy) < 3:
        return False
    grows = all(b >= ENERGY_GROWTH_FLAG * a for a, b in zip(energy[-3:], energy[-2:]))
    settled = abs(graph[-1] / graph[-2] - 1.0) <= GRAPH_STABLE_TOL
    return bool(grows and settled)


def run_wave_solve(cfg):
    spec = _wave_spec(cfg, "initvel:k=1;amp=3.141592653589793")
    sizes = _sizes(cfg, [32])
    dom = st.WaveDomain(cfg.L, cfg.T)
    norms = CsvTable(["n_t", "n_x", "energy_norm", "graph_norm", "l2_norm"])
    checks, energy, graphs = [], [], []
    for i, nt in enumerate(sizes):
        nx = nt if cfg.nx is None else cfg.nx[min(i, len(cfg.nx) - 1)]
        grid = dom.grid(nt, nx)
        system = st.assemble_spacetime(grid)
        F = st.assemble_wave_rhs(grid, spec)
        u = st.solve_wave(system, F)
        graph = st.wave_graph_norm(u, 1).value
        fd = st.test_dual_norm(system, F).value
        energy.append(st.energy_norm(u))
        graphs.append(graph)
        norms.append([nt, nx, energy[-1], graph, st.l2_norm(u)])
        checks.append(Check(f"isometry_r1_n{nt}", abs(graph - fd) <= 1e-8 * max(fd, 1e-300), f"{graph!r} vs {fd!r}"))
    summary = {
        "n_t": grid.time_mesh.n_elements,
        "n_x": grid.space_mesh.n_elements,
        "energy_norm": energy[-1],
        "l2_norm": st.l2_norm(u),
        "graph_norm": graphs[-1],
        "load_test_dual": fd,
        "rhs": spec.to_dict(),
        # informational only: no classification is asserted
        "energy_diverges_graph_stable": energy_diverges_graph_stable(energy, graphs),
    }
    U = u.nodal_values()
    sol = CsvTable([f"{x!r}" for x in grid.space_mesh.nodes], [list(r) for r in U])
    return ExperimentResult(cfg.kind, summary, {"solution.csv": sol, "norms.csv": norms}, checks)


def run_wave_infsup_decay(cfg):
    table = CsvTable(["mu", "T", "n", "beta_h", "bound_infsup", "const_continuity"])
    betas, sizes = [], _sizes(cfg, [8, 16, 32, 64])
    reps = []
    for n in sizes:
        nx = n if cfg.nx is None else cfg.nx[min(len(cfg.nx) - 1, len(reps))]
        rep = st.infsup_wave(st.WaveDomain(cfg.L, cfg.T).grid(n, nx), tol=cfg.tol, seed=cfg.seed)
        reps.append(rep)
        betas.append(rep.beta_h)
        table.append(["", cfg.T, n, rep.beta_h, "", rep.const_continuity])
    slope = float(np.polyfit(np.log(sizes), np.log(betas), 1)[0]) if len(sizes) > 1 else float("nan")
    checks = [
        Check("beta_h>0", all(b > 0 for b in betas)),
        Check("beta_h_decreasing", all(b2 < b1 for b1, b2 in zip(betas, betas[1:])), str(betas)),
        Check("loglog_slope<0", slope < 0, f"{slope!r}"),
    ]
    return ExperimentResult(cfg.kind, {"sizes": sizes, "beta_h": betas, "slope": slope, "reports": reps}, {"infsup.csv": table}, checks)


def run_wave_theorem1(cfg):
    ks = cfg.k or [2, 4, 8, 16, 32]
    n = None if cfg.nt is None else cfg.nt[-1]
    rows = st.theorem1_demo(cfg.L, cfg.T, ks, n=n, refinement=cfg.refine)
    table = CsvTable(["k", "mu_k", "r_k", "r_k_over_sqrt_mu"], [[r.k, r.mu_k, r.r_k, r.r_k_over_sqrt_mu] for r in rows])
    growth = rows[-1].r_k / rows[0].r_k
    band = [r.r_k_over_sqrt_mu for r in rows if r.k >= 4] or [rows[0].r_k_over_sqrt_mu]
    checks = [
        Check("r_k_positive", all(r.r_k > 0 and math.isfinite(r.r_k) for r in rows)),
        Check("band_factor<=2", max(band) / min(band) <= 2.0, f"{max(band) / min(band)!r}"),
    ]
    if ks[-1] / ks[0] >= 16:
        checks.append(Check("r_last/r_first>=10", growth >= 10.0, f"{growth!r}"))
    summary = {"L": cfg.L, "T": cfg.T, "growth": growth, "rows": [r.to_dict() for r in rows], "resolution_factor": st.RESOLUTION_FACTOR}
    return ExperimentResult(cfg.kind, summary, {"ratios.csv": table}, checks)


def random_smooth_density(rng, T: float, J: int = 5) -> tc.Density:
    a = rng.standard_normal(J)
    b = rng.standard_normal(J)
    j = np.arange(J)

    def f(t):
        t = np.asarray(t)[..., None]
        return np.sum(a * np.cos(j * math.pi * t / T) + b * np.sin((j + 1) * math.pi * t / T), axis=-1)

    return tc.Density.from_callable(f)


def ode_energy(u: tc.FeFunction1d, mu: float) -> float:
    return math.sqrt(u.h1_seminorm() ** 2 + mu * u.l2_norm() ** 2)


def density_l2(mesh, f) -> float:
    pts, wts = quadrature_points(mesh, gauss_rule(tc.RHS_QUAD_POINTS))
    return math.sqrt(float(np.sum(wts * f(pts) ** 2)))


def run_wave_stability_sweep(cfg):
    """Random-data sweep: energy stability (ODE and wave), Friedrichs and extension band (wave)."""
    rng = np.random.default_rng(cfg.seed)
    cases = cfg.cases or 50
    T = cfg.T
    slack = 1.0 + cfg.slack
    table = CsvTable(["case", "norm_h11", "norm_f_l2", "bound", "satisfied"])
    # ODE: mu log-uniform in [1, 100]
    n_ode = _sizes(cfg, [128])[-1]
    mesh = make_uniform_mesh(n_ode, 0.0, T)
    ode_fail = 0
    for i in range(cases):
        mu = float(10 ** rng.uniform(0, 2))
        f = random_smooth_density(rng, T)
        u = tc.solve_modal(tc.ModalParams(mu, T), mesh, f)
        rep = st.StabilityReport.build(ode_energy(u, mu), density_l2(mesh, f), T, slack, f"ode-{i}")
        ode_fail += not rep.satisfied
        table.append([rep.case, rep.norm_h11, rep.norm_f_l2, rep.bound, rep.satisfied])
    # wave on a q=1 grid
    nx = (cfg.nx or [32])[-1]
    grid = st.WaveDomain(cfg.L, T).grid(int(round(nx * T / cfg.L)), nx)
    system = st.assemble_spacetime(grid)
    wave_fail = 0
    for i in range(cases):
        spec = st.random_band_limited_density(grid, rng)
        u = st.solve_wave(system, st.assemble_wave_rhs(grid, spec))
        rep = st.StabilityReport.build(st.energy_norm(u), st.density_l2_norm(grid, spec), T, slack, f"wave-{i}")
        wave_fail += not rep.satisfied
        table.append([rep.case, rep.norm_h11, rep.norm_f_l2, rep.bound, rep.satisfied])
    # random ansatz fields: Friedrichs bound and extension band
    small = st.WaveDomain(cfg.L, T).grid(8, 8)
    fr_fail = band_fail = 0
    pairs = CsvTable(["case", "graph_norm", "ext_norm", "l2_norm", "friedrichs_holds", "band_holds"])
    for i in range(cfg.cases or 100):
        u = st.random_ansatz_field(small, rng)
        g = st.wave_graph_norm(u, 1).value
        e = st.wave_extended_dual_norm(u, 1).value
        l2 = st.l2_norm(u)
        fr = g >= math.sqrt(2.0) / T * l2 * 0.95
        band = e * 0.98 <= g <= math.sqrt(2.0) * e * 1.02
        fr_fail += not fr
        band_fail += not band
        pairs.append([i, g, e, l2, fr, band])
    u = st.solve_wave(st.assemble_spacetime(small), st.assemble_wave_rhs(small, st.InitialVelocity(1, math.pi)))
    dirac_ratio = st.wave_graph_norm(u, 1).value / st.wave_extended_dual_norm(u, 1).value
    checks = [
        Check("ode_stability_violations=0", ode_fail == 0, str(ode_fail)),
        Check("wave_stability_violations=0", wave_fail == 0, str(wave_fail)),
        Check("wave_friedrichs_violations=0", fr_fail == 0, str(fr_fail)),
        Check("wave_extension_band_violations=0", band_fail == 0, str(band_fail)),
        Check("wave_dirac_attains_sqrt2", abs(dirac_ratio - math.sqrt(2)) <= 0.01 * math.sqrt(2), f"{dirac_ratio!r}"),
    ]
    summary = {
        "cases": cases,
        "violations": {"ode": ode_fail, "wave": wave_fail, "friedrichs": fr_fail, "band": band_fail},
        "wave_grid": list(grid.shape),
        "dirac_ratio": dirac_ratio,
    }
    return ExperimentResult(cfg.kind, summary, {"stability.csv": table, "ansatz_fields.csv": pairs}, checks)


def run_wave_cfl_demo(cfg):
    qs = cfg.q or [1.0, 2.0]
    dom = st.WaveDomain(cfg.L, cfg.T)
    nx0 = (cfg.nx or [8])[0]
    table = CsvTable(["case", "norm_h11", "norm_f_l2", "bound", "satisfied"])
    levels_out, checks = {}, []
    for q in qs:
        levels = st.cfl_demo(q, cfg.levels, dom, nx0)
        factors = [lv.violation_factor for lv in levels]
        levels_out[f"{q:g}"] = [lv.to_dict() for lv in levels]
        for lv in levels:
            r = lv.report
            table.append([r.case, r.norm_h11, r.norm_f_l2, r.bound, r.satisfied])
        if q <= 1:
            checks.append(Check(f"q={q:g}:satisfied", all(lv.report.satisfied for lv in levels), str(factors)))
        else:
            grows = len(factors) >= 3 and all(b >= a for a, b in zip(factors, factors[1:]))
            checks.append(Check(f"q={q:g}:violation_non_decreasing", grows, str(factors), fatal=False))
    summary = {"levels": levels_out}
    return ExperimentResult(cfg.kind, summary, {"stability.csv": table}, checks)


def run_wave_example_sine(cfg):
    n = _sizes(cfg, [64])[-1]
    rep = st.example_sine(n)
    checks = [
        Check("rel_l2_error<=2%", rep.rel_l2_error <= 0.02, f"{rep.rel_l2_error!r}"),
        Check("energy_norm=pi/sqrt2_within_1%", abs(rep.energy_norm / rep.energy_norm_exact - 1) <= 0.01, f"{rep.energy_norm!r}"),
        Check("graph_norm_interpolant>0", rep.graph_norm_interpolant > 0, f"{rep.graph_norm_interpolant!r}"),
        Check("interior_residual<=1e-2", rep.interior_residual <= 1e-2, f"{rep.interior_residual!r}"),
    ]
    return ExperimentResult(cfg.kind, rep.to_dict(), {}, checks)


def run_report_merge(cfg):
    if not cfg.inputs:
        raise ConfigError("report merge needs input summary files", "inputs")
    merged = {}
    for path in cfg.inputs:
        data = read_json(path)
        key = data.get("kind", Path(path).parent.name) if isinstance(data, dict) else Path(path).stem
        merged[str(key) if key not in merged else f"{key}:{path}"] = data
    ok = all(d.get("passed", True) for d in merged.values() if isinstance(d, dict))
    return ExperimentResult(cfg.kind, {"reports": merged, "all_passed": ok}, {}, [])


RUNNERS: dict[str, Callable] = {
    "ode-solve": run_ode_solve,
    "ode-dualnorm": run_ode_dualnorm,
    "ode-infsup": run_ode_infsup,
    "ode-isometry": run_ode_isometry,
    "ode-equivalence": run_ode_equivalence,
    "ode-convergence": run_ode_convergence,
    "wave-solve": run_wave_solve,
    "wave-infsup-decay": run_wave_infsup_decay,
    "wave-theorem1": run_wave_theorem1,
    "wave-stability-sweep": run_wave_stability_sweep,
    "wave-cfl-demo": run_wave_cfl_demo,
    "wave-example-sine": run_wave_example_sine,
    "report-merge": run_report_merge,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    start = time.perf_counter()
    result = RUNNERS[cfg.kind](cfg)
    for c in result.warnings:
        log.warning("check %s did not pass: %s", c.name, c.detail)
    result.summary = {
        "kind": cfg.kind,
        "passed": result.passed,
        "checks": [c.to_dict() for c in result.checks],
        "result": result.summary,
        "config": cfg.to_dict(),
    }
    if not cfg.deterministic:
        result.summary["elapsed_s"] = time.perf_counter() - start
    return result


def write_outputs(result: ExperimentResult, out) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in result.tables.items():
        written.append(write_csv(table, out / name))
    for name, obj in result.extra_files.items():
        if isinstance(obj, CsvTable):
            written.append(write_csv(obj, out / name))
        else:
            written.append(write_json(obj, out / name))
    written.append(write_json(result.summary, out / "summary.json"))
    return written
