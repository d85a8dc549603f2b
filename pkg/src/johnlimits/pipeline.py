"""Configured end-to-end runs: domain, cubes, curves, shadows, traces, gauges, content.

Every stage returns a JSON-ready section and a list of invariant
violations; a run succeeds iff no stage reports a violation.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import render
from .errors import GeometryError
from .generators import GENERATORS, make_domain
from .john import (
    JohnProfile,
    construct_john_curve,
    fit_quasihyperbolic_constant,
    quasihyperbolic_distance,
    verify_john_curve,
)
from .maps import MAPS, make_map
from .metric import parse_length, save_domain
from .trace import (
    GaugeFunction,
    analytic_cells,
    boundary_limit,
    compute_shadows,
    default_ahlfors,
    discrete_length,
    exceptional_content,
    gauge_closed_form,
    gauge_integral,
    max_level_counts,
    profile_for,
    shadow_measure_sums,
    uniqueness_check,
)
from .whitney import WhitneyParams, overlap_counts, whitney_decomposition

OUT_ENV = "JOHNLIMITS_OUT"
CONTINUOUS_MAPS = ("constant", "identity", "square-z", "radial-log")


@dataclass
class RunConfig:
    domain: str = "square"
    domain_params: dict = field(default_factory=dict)
    eps: str = "1/128"
    whitney: dict = field(default_factory=lambda: {"delta": "1/12", "c1": "1/3", "C1": 2, "a": 4})
    john: dict | None = None
    map: str = "identity"
    map_params: dict = field(default_factory=dict)
    gauge: dict = field(default_factory=lambda: {"kind": "power", "alpha": 1.0})
    thresholds: list = field(default_factory=lambda: [0.25, 0.5, 1, 2, 4, 8, 16, 32])
    limit_tol: float = 0.25
    uniqueness: dict | None = None
    qh_pairs: int = 20
    out: str | None = None
    seed: int = 0

    @classmethod
    def from_dict(cls, data):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise GeometryError("bad-config", f"unknown keys: {sorted(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)

    @property
    def epsilon(self):
        return parse_length(self.eps)

    def whitney_params(self):
        w = {k: parse_length(v) for k, v in self.whitney.items()}
        return WhitneyParams(w.get("delta", 1 / 12), w.get("c1", 1 / 3), w.get("C1", 2.0), w.get("a", 4.0))

    def out_dir(self):
        return Path(self.out or os.environ.get(OUT_ENV) or "johnlimits_out")

    def validate(self):
        """Check every parameter before any expensive build."""
        if self.domain not in GENERATORS:
            raise GeometryError("unknown-generator", self.domain)
        if self.map not in MAPS:
            raise GeometryError("unknown-map", self.map)
        if not self.epsilon > 0:
            raise GeometryError("bad-parameter", "eps must be positive")
        self.whitney_params()
        if self.john is not None:
            JohnProfile.from_dict(self.john)
        GaugeFunction.from_dict(self.gauge)
        if self.limit_tol <= 0:
            raise GeometryError("bad-parameter", "limit_tol must be positive")
        return self


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_csv(rows, path, columns=None):
    rows = [_clean(r) for r in rows]
    columns = columns or (sorted(rows[0]) if rows else [])
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


class Pipeline:
    """Lazily built stages for one :class:`RunConfig`."""

    def __init__(self, config):
        self.config = config.validate()
        self.violations = []

    def _violate(self, stage, what, witness=None):
        self.violations.append({"stage": stage, "invariant": what, "witness": witness})

    # -- stages ----------------------------------------------------------------------

    @cached_property
    def domain(self):
        c = self.config
        params = {k: parse_length(v) if isinstance(v, str) else v for k, v in c.domain_params.items()}
        d = make_domain(c.domain, c.epsilon, **params)
        d.meta["epsilon_text"] = str(c.eps)
        for v in d.validate():
            self._violate("domain", v)
        return d

    @cached_property
    def profile(self):
        spec = self.config.john or self.domain.meta.get("john") or {"phi": "identity", "c": 2}
        return JohnProfile.from_dict(spec)

    @cached_property
    def decomp(self):
        return whitney_decomposition(self.domain, self.config.whitney_params())

    @cached_property
    def fmap(self):
        return make_map(self.config.map, self.domain, **self.config.map_params)

    @cached_property
    def curves(self):
        out = {}
        for xi in self.domain.boundary:
            try:
                out[int(xi)] = construct_john_curve(self.domain, xi, self.profile)
            except GeometryError:
                self._violate("curves", "no-john-curve", int(xi))
        return out

    def decompose_section(self):
        w = self.decomp
        dy = w.cubes.check()
        wc = w.check()
        for k, v in list(dy.items()) + list(wc.items()):
            if v:
                self._violate("decompose", k, v)
        levels = {}
        for k in w.levels_present():
            js = w.by_level(k)
            levels[str(k)] = {"cubes": int(len(js)), "members": int(w.sizes[js].sum())}
        ov = overlap_counts(w)
        return {
            "dyadic_check": dy,
            "whitney_check": wc,
            "levels": levels,
            "n_cubes": len(w),
            "max_overlap": int(ov.max()),
            "params": self.config.whitney,
            "b": {"value": w.params.b, "formula": "a*C1/(c1*delta)"},
        }

    def curves_section(self):
        curves = self.curves
        margins = []
        for xi, cv in curves.items():
            cert = verify_john_curve(self.domain, cv, self.profile)
            margins.append(cert.margin)
            if not cert.passed:
                self._violate("curves", "john-margin", xi)
        return {
            "profile": self.profile.to_dict(),
            "n_boundary": int(len(self.domain.boundary)),
            "n_curves": len(curves),
            "min_margin": float(min(margins)) if margins else None,
            "max_length": float(max(cv.length for cv in curves.values())) if curves else None,
        }

    @cached_property
    def shadows(self):
        return compute_shadows(self.decomp, self.domain, self.profile, self.curves)

    @cached_property
    def ahlfors(self):
        return default_ahlfors(self.domain, seed=self.config.seed)

    def shadows_section(self):
        sh = self.shadows
        diam = sh.check_diameters()
        if diam["violations"]:
            self._violate("shadows", "shadow-diameter", diam["witness"])
        counts = max_level_counts(sh, self.ahlfors)
        sums = shadow_measure_sums(sh, self.domain.boundary, self.ahlfors)
        for r in counts:
            if not r["holds"]:
                self._violate("shadows", "level-count", r["level"])
        for r in sums:
            if not r["holds"]:
                self._violate("shadows", "level-sum", r["level"])
        return {
            "constants": sh.constants,
            "ahlfors": {"q": self.ahlfors.q, "C_q": self.ahlfors.C_q},
            "diameter_check": diam,
            "level_counts": counts,
            "level_sums": sums,
        }

    @cached_property
    def lengths(self):
        f, w = self.fmap, self.decomp
        return {xi: discrete_length(f, w, cv) for xi, cv in self.curves.items()}

    def trace_section(self):
        f, w, dom = self.fmap, self.decomp, self.domain
        tol = self.config.limit_tol
        rows = []
        converged = 0
        for xi, cv in self.curves.items():
            rep = self.lengths[xi]
            lim = boundary_limit(f, w, cv, tol, report=rep)
            if not lim.cauchy_ok:
                self._violate("trace", "cauchy-tail", xi)
            err = None
            if lim.converged and f.name in CONTINUOUS_MAPS:
                err = float(np.sqrt(np.sum((np.asarray(lim.value) - f([xi])[0]) ** 2)))
                if err > lim.error_radius + 2 * dom.epsilon:
                    self._violate("trace", "limit-error", xi)
            converged += lim.converged
            rows.append(
                {
                    "xi": xi,
                    "l_d_members": rep.columns["members"]["total"],
                    "l_d_crossing": rep.columns["crossing"]["total"],
                    "l_d_outer_ball": rep.columns["outer-ball"]["total"],
                    "converged": lim.converged,
                    "level": lim.level,
                    "error_radius": lim.error_radius,
                    "limit_error": err,
                }
            )
        return {"map": f.to_dict(), "tol": tol, "converged": converged, "n": len(rows)}, rows

    def gauges_section(self):
        q = self.domain.q
        rows = []
        if q <= 1:
            return rows
        for variant, phi_kind, h_kind, params in analytic_cells(q):
            prof = profile_for(phi_kind)
            for p in params:
                h = GaugeFunction(h_kind, alpha=p) if h_kind == "power" else GaugeFunction(h_kind, beta=p)
                v = gauge_integral(prof, h, q, variant)
                cf = gauge_closed_form(phi_kind, h_kind, p, q, variant)
                agree = v.finite == (cf is not None) and (cf is None or abs(v.value - cf) <= 0.01 * abs(cf))
                if not agree:
                    self._violate("gauges", "closed-form", f"{variant}/{phi_kind}/{h_kind}/{p}")
                rows.append(
                    {
                        "variant": variant,
                        "phi": phi_kind,
                        "h": h_kind,
                        "param": p,
                        "q": q,
                        "finite": v.finite,
                        "value": v.value,
                        "closed_form": cf,
                        "rate": v.rate,
                        "power": v.power,
                        "agrees": agree,
                    }
                )
        return rows

    def content_section(self):
        h = GaugeFunction.from_dict(self.config.gauge)
        lengths = {xi: r.columns["crossing"]["total"] for xi, r in self.lengths.items()}
        reps = exceptional_content(
            self.fmap, self.domain, self.decomp, self.curves, h, self.config.thresholds, lengths=lengths
        )
        bounds = [r.content_bound for r in reps]
        if any(b2 > b1 for b1, b2 in zip(bounds, bounds[1:])):
            self._violate("content", "monotone")
        return [
            {"threshold": r.threshold, "count": len(r.ids), "content_bound": r.content_bound, "n_sets": r.n_sets}
            for r in reps
        ]

    def uniqueness_section(self):
        u = self.config.uniqueness
        if not u:
            return None
        dom = self.domain
        co = dom.space.coords
        pt = np.asarray(u.get("point", [1.0, 0.0]), dtype=float)
        xi = int(dom.boundary[np.argmin(np.hypot(*(co[dom.boundary] - pt).T))])
        axis = co[dom.center] - co[xi]
        rel = co[dom.interior] - co[xi]
        side = axis[0] * rel[:, 1] - axis[1] * rel[:, 0]
        gamma = construct_john_curve(dom, xi, self.profile, side >= -1e-12)
        eta = construct_john_curve(dom, xi, self.profile, side <= 1e-12)
        scales = [parse_length(s) for s in u.get("scales", ["1/8", "1/16", "1/32", "1/64"])]
        return uniqueness_check(
            self.fmap, dom, self.decomp, xi, gamma, eta, scales, self.profile, tol=u.get("tol", 1e-2),
            limit_tol=self.config.limit_tol,
        )

    def qh_section(self):
        n = self.config.qh_pairs
        if not n:
            return None
        dom = self.domain
        rng = np.random.default_rng(self.config.seed)
        pairs = rng.choice(dom.interior, size=(n, 2))
        ks, ratios = [], []
        for x, y in pairs:
            ks.append(quasihyperbolic_distance(dom, x, y).value)
            cl = dom.clearance[dom.position([x, y])]
            ratios.append(dom.space.dist(int(x), int(y)) / cl.min())
        C = fit_quasihyperbolic_constant(ks, ratios)
        return {"pairs": n, "C": C, "formula": "k <= C*log+(C*d/min d_b) + 2"}

    # -- full run -----------------------------------------------------------------------

    def run(self, write=True):
        # The output location is left out so the same run reproduces the same bytes anywhere.
        config = self.config.to_dict()
        config.pop("out", None)
        report = {"config": config}
        report["domain"] = {
            "name": self.domain.name,
            "epsilon": self.config.eps,
            "interior": int(len(self.domain.interior)),
            "boundary": int(len(self.domain.boundary)),
            "q": self.domain.q,
        }
        report["decompose"] = self.decompose_section()
        report["curves"] = self.curves_section()
        report["shadows"] = self.shadows_section()
        trace, rows = self.trace_section()
        report["trace"] = trace
        report["gauges"] = self.gauges_section()
        report["content"] = self.content_section()
        report["uniqueness"] = self.uniqueness_section()
        report["quasihyperbolic"] = self.qh_section()
        report["violations"] = self.violations
        report["ok"] = not self.violations
        if write:
            self.write_bundle(report, rows)
        return report

    def write_bundle(self, report, trace_rows):
        out = self.config.out_dir()
        out.mkdir(parents=True, exist_ok=True)
        dump_json(report, out / "report.json")
        save_domain(self.domain, out, "domain")
        self.decomp.write_jsonl(out / "whitney.jsonl")
        dump_json({str(k): v.to_dict() for k, v in self.curves.items()}, out / "curves.json")
        write_csv(report["shadows"]["level_sums"], out / "level_sums.csv", ["level", "lhs", "rhs", "ratio", "holds"])
        write_csv(trace_rows, out / "traces.csv")
        write_csv(report["gauges"], out / "gauges.csv")
        write_csv(report["content"], out / "content.csv")
        if self.domain.space.coords is not None and self.domain.space.coords.shape[1] == 2:
            render.write_all(out, self.domain, self.decomp, self.curves, self.shadows)
        return out


def run_pipeline(config, write=True):
    """Run every stage; returns ``(report, exit_code)``."""
    p = Pipeline(config)
    report = p.run(write=write)
    return report, 0 if report["ok"] else 1
