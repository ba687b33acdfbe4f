"""Experiment configs, trial runners, aggregation with Wilson intervals, reports and threshold checks."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from itertools import combinations

import numpy as np
from scipy import stats

from . import __version__
from .condprob import CliqueConditioning, NoAcceptances, exact_conditional_prob, mc_conditional_prob
from .factorsolve import BudgetExceeded, clique_factor, perfect_matching
from .hypercore import (UniformHypergraph, bad_events, clique_expansion, cliques, edge_nullity,
                        find_avoidable_configuration, is_connected)
from .procgen import (child_seed, edge_rank, g_default, hitting_time_clique_cover,
                      hitting_time_min_degree, seed_label, standard_process, substream, trial_seed,
                      window_params)
from .staticcoupling import (EXACT_BUDGET, UNEXPLAINED, classify_extra_cliques, modified_couple_r3, pi_star,
                             riordan_couple)
from .sunify import suniform_chain, verify_all
from .timecoupling import (CHAIN_EXACT_BUDGET, VERDICT_FIELDS, build_random_set, chain_coupling,
                           hitting_trial, thin_process)

WORKERS_ENV = "CLIQUEHIT_WORKERS"


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion, clamped to [0, 1]."""
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError(f"need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    z = float(stats.norm.ppf(0.5 + confidence / 2))
    ph = successes / trials
    denom = 1 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / denom
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


# ---------------------------------------------------------------------------
# configs


@dataclass
class ExperimentConfig:
    kind: str
    n: list
    r: int = 3
    s: int = 2
    trials: int = 100
    master_seed: int = 0
    delta: float = 0.1
    c_I: float | None = None
    c_R: float | None = None
    g: float | None = None  # overrides g_default(n)
    p: float | None = None  # coupling density; default p_+
    pi_R: float | None = None  # thinning probability; default c_R g / n
    exact_budget: int | None = None
    metric: str | None = None  # boolean row field aggregated per n
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if isinstance(self.n, int):
            self.n = [self.n]
        self.n = [int(x) for x in self.n]
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; choose from {sorted(KINDS)}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.n or min(self.n) < 2:
            raise ValueError("n must list sizes of at least 2")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        for name in ("c_I", "c_R", "g", "p", "pi_R"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")
        if self.p is not None and self.p > 1:
            raise ValueError("p must lie in (0, 1]")
        if self.pi_R is not None and self.pi_R >= 1:
            raise ValueError("pi_R must lie in (0, 1)")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be csv or json")
        if self.kind in ("factor_hit", "matching_hit") and any(n % self.r for n in self.n):
            raise ValueError(f"every n must be divisible by r={self.r} for {self.kind}")
        if self.metric is None:
            self.metric = KINDS[self.kind][1]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def g_value(self, n: int) -> float:
        return self.g if self.g is not None else g_default(n)


# ---------------------------------------------------------------------------
# trial runners: (config, n, index, seed) -> row dict


def _need_divisible(n, r):
    if n % r:
        raise ValueError(f"n={n} is not divisible by r={r}")


def _t_factor_hit(cfg, n, seed):
    _need_divisible(n, cfg.r)
    trace = standard_process(n, 2, seed)
    T = hitting_time_clique_cover(trace, cfg.r)
    try:
        f = clique_factor(trace.prefix(T), cfg.r)
    except BudgetExceeded:
        return {"T_G": T, "factor": None, "stage": "solver_budget"}
    return {"T_G": T, "factor": f is not None, "stage": "ok"}


def _t_matching_hit(cfg, n, seed):
    _need_divisible(n, cfg.r)
    trace = standard_process(n, cfg.r, seed)
    T = hitting_time_min_degree(trace)
    try:
        m = perfect_matching(trace.prefix(T))
    except BudgetExceeded:
        return {"T_H": T, "matching": None, "stage": "solver_budget"}
    return {"T_H": T, "matching": m is not None, "stage": "ok"}


def _coupling_p(cfg, n):
    if cfg.p is not None:
        return cfg.p
    return window_params(n, cfg.r, cfg.s, cfg.delta, g=cfg.g_value(n)).p_plus


def _t_riordan(cfg, n, seed):
    budget = cfg.exact_budget or EXACT_BUDGET
    out = riordan_couple(n, cfg.r, _coupling_p(cfg, n), seed, cfg.delta, cfg.s,
                         allow_clean_cycles=cfg.s == 2 and cfg.r == 3, exact_budget=budget)
    cl = cliques(out.G, cfg.r).edge_set
    ranks = " ".join(str(edge_rank(n, cfg.r, h)) for h in out.H.edges)
    return {"failed": out.failed, "failure_reason": out.failure_reason,
            "contained": all(h in cl for h in out.H.edges), "H_size": len(out.H),
            "approx_steps": out.approximate_steps, "pi": out.pi, "hyperedges": ranks, "stage": "ok"}


def _t_modified(cfg, n, seed):
    out = modified_couple_r3(n, _coupling_p(cfg, n), seed, cfg.delta)
    cl = cliques(out.G, 3).edge_set
    ranks = " ".join(str(edge_rank(n, 3, h)) for h in out.H.edges)
    return {"failed": out.failed, "failure_reason": out.failure_reason,
            "contained": all(h in cl for h in out.H.edges), "H_size": len(out.H),
            "approx_steps": out.approximate_steps, "pi": out.pi, "hyperedges": ranks, "stage": "ok"}


def _t_thinning(cfg, n, seed):
    pi_R = cfg.pi_R if cfg.pi_R is not None else (cfg.c_R or 10.0 * cfg.r ** 4) * cfg.g_value(n) / n
    if pi_R >= 1:
        raise ValueError(f"pi_R = {pi_R:.4g} >= 1")
    trace = standard_process(n, cfg.r, child_seed(seed, 0))
    T = hitting_time_min_degree(trace)
    res = thin_process(trace, pi_R, child_seed(seed, 1), T_H=T)
    return {"T_H": T, "t0": res.t0, "min_degree_ok": res.min_degree_ok, "stage": "ok"}


def _budget(cfg):
    return cfg.exact_budget or CHAIN_EXACT_BUDGET


def _t_time_orders(cfg, n, seed):
    return hitting_trial(n, cfg.r, seed, cfg.s, cfg.delta, _budget(cfg))


def _t_chain(cfg, n, seed):
    return chain_coupling(n, cfg.r, seed, cfg.c_I, cfg.c_R, cfg.delta, _budget(cfg))


def _t_suniform(cfg, n, seed):
    return suniform_chain(n, cfg.r, cfg.s, seed, c_I=cfg.c_I, c_R=cfg.c_R, delta=cfg.delta,
                          exact_budget=_budget(cfg))


def _t_badevents(cfg, n, seed):
    w = window_params(n, cfg.r, 2, cfg.delta, g=cfg.g_value(n))
    H = standard_process(n, cfg.r, seed).prefix_at(w.pi_plus)
    flags = bad_events(H, w.pi_plus, w.g_value)
    row = {f"B{i}": getattr(flags, f"b{i}") for i in range(1, 6)}
    row.update(any_bad=flags.any, none_bad=not flags.any, H_size=len(H), stage="ok")
    return row


def _t_random_set(cfg, n, seed):
    trace = standard_process(n, cfg.r, child_seed(seed, 0))
    b = build_random_set(trace, cfg.r, cfg.g_value(n), cfg.c_I, cfg.c_R, child_seed(seed, 1))
    return {"T_H": b.T_H, "I_size": len(b.I), "R_size": len(b.R), "F_size": len(b.F),
            "F_in_R": b.F_in_R, "pi_I": b.pi_I, "pi_R": b.pi_R, "stage": "ok"}


def random_conditioning(n: int, rng, r: int = 3) -> tuple[CliqueConditioning, tuple]:
    """A random consistent clique conditioning on n vertices and a free target r-set."""
    rsets = [tuple(c) for c in combinations(range(1, n + 1), r)]
    while True:
        idx = rng.permutation(len(rsets))
        target = rsets[idx[0]]
        k_pos, k_neg = int(rng.integers(0, 3)), int(rng.integers(1, 5))
        pos = [rsets[i] for i in idx[1:1 + k_pos]]
        neg = [rsets[i] for i in idx[1 + k_pos:1 + k_pos + k_neg]]
        p = float(rng.uniform(0.3, 0.7))
        try:
            cond = CliqueConditioning(n, p, positives=pos, negatives=neg)
        except ValueError:
            continue
        if exact_conditional_prob(cond, target) > 0:
            return cond, target


def _t_oracle_equivalence(cfg, n, seed):
    """Exact vs Monte Carlo on a random conditioning at n, and pi_star vs the
    exact engine on a random positive-only conditioning at n + 1."""
    rng = substream(seed, 0)
    cond, target = random_conditioning(n, rng)
    exact = exact_conditional_prob(cond, target)
    try:
        est, hw = mc_conditional_prob(cond, target, 20_000, child_seed(seed, 1))
        mc_ok = abs(est - exact) <= 3 * max(hw, 1e-12)
    except NoAcceptances:
        est, hw, mc_ok = None, None, False
    m = n + 1
    rsets = [tuple(c) for c in combinations(range(1, m + 1), 3)]
    idx = rng.permutation(len(rsets))
    H0 = UniformHypergraph.from_edges(m, 3, [rsets[i] for i in idx[1:1 + int(rng.integers(1, 4))]])
    p = float(rng.uniform(0.2, 0.8))
    ps = pi_star(H0, rsets[idx[0]], p)
    ex = exact_conditional_prob(CliqueConditioning(m, p, positives=H0.edges), rsets[idx[0]])
    ps_ok = abs(ps - ex) <= 1e-12
    return {"exact": exact, "mc": est, "mc_half_width": hw, "mc_ok": mc_ok, "pi_star": ps,
            "pi_star_exact": ex, "pi_star_ok": ps_ok, "ok": mc_ok and ps_ok, "stage": "ok"}


def brute_force_avoidable(H: UniformHypergraph, max_edges: int | None = None) -> bool:
    """Reference detector: try every edge subset of size 2..max_edges."""
    cap = 2 ** (H.arity + 1) if max_edges is None else max_edges
    E = H.edges
    for k in range(2, min(cap, len(E)) + 1):
        for sub in combinations(E, k):
            if is_connected(sub) and edge_nullity(sub, H.arity) >= 2:
                return True
    return False


def random_small_hypergraph(rng, max_edges: int = 8) -> UniformHypergraph:
    r = int(rng.integers(3, 5))
    n = int(rng.integers(r + 1, r + 6))
    rsets = [tuple(c) for c in combinations(range(1, n + 1), r)]
    k = int(rng.integers(1, min(max_edges, len(rsets)) + 1))
    pick = rng.choice(len(rsets), size=k, replace=False)
    return UniformHypergraph.from_edges(n, r, [rsets[i] for i in pick])


def _t_detector_oracle(cfg, n, seed):
    H = random_small_hypergraph(substream(seed, 0))
    found = find_avoidable_configuration(H) is not None
    ref = brute_force_avoidable(H)
    return {"arity": H.arity, "edges": len(H), "detector": found, "brute_force": ref,
            "ok": found == ref, "stage": "ok"}


def _t_extra_cliques(cfg, n, seed):
    rng = substream(seed, 0)
    r = int(rng.integers(3, 5))
    m = int(rng.integers(r + 2, r + 7))
    rsets = [tuple(c) for c in combinations(range(1, m + 1), r)]
    k = int(rng.integers(2, 9))
    H = UniformHypergraph.from_edges(m, r, [rsets[i] for i in rng.choice(len(rsets), size=k, replace=False)])
    labels = classify_extra_cliques(clique_expansion(H), H)
    bad = sum(1 for _, lab in labels if lab == UNEXPLAINED)
    return {"arity": r, "edges": k, "extra": len(labels), "unexplained": bad, "ok": bad == 0, "stage": "ok"}


def _t_analytic(cfg, n, seed):
    if cfg.r < 4:
        raise ValueError("analytic checks need r >= 4 (the largest r to verify)")
    res = verify_all(cfg.r)
    return {"rows": len(res["partition"]) + len(res["w"]), "seconds": res["seconds"],
            "passed": res["passed"], "ok": res["passed"] and res["seconds"] < 5.0, "stage": "ok"}


# kind -> (runner, default metric, row fields)
KINDS = {
    "factor_hit": (_t_factor_hit, "factor", ["T_G", "factor"]),
    "matching_hit": (_t_matching_hit, "matching", ["T_H", "matching"]),
    "riordan": (_t_riordan, "contained", ["failed", "failure_reason", "contained", "H_size", "approx_steps", "pi", "hyperedges"]),
    "modified_r3": (_t_modified, "contained", ["failed", "failure_reason", "contained", "H_size", "approx_steps", "pi", "hyperedges"]),
    "thinning": (_t_thinning, "min_degree_ok", ["T_H", "t0", "min_degree_ok"]),
    "time_orders": (_t_time_orders, "t_eq", [f for f in VERDICT_FIELDS if f not in ("seed", "n", "r", "s", "stage")]),
    "chain": (_t_chain, "containment", [f for f in VERDICT_FIELDS if f not in ("seed", "n", "r", "s", "stage")]),
    "suniform": (_t_suniform, "containment", [f for f in VERDICT_FIELDS if f not in ("seed", "n", "r", "s", "stage")]),
    "badevents": (_t_badevents, "none_bad", ["B1", "B2", "B3", "B4", "B5", "any_bad", "none_bad", "H_size"]),
    "random_set": (_t_random_set, "F_in_R", ["T_H", "I_size", "R_size", "F_size", "F_in_R", "pi_I", "pi_R"]),
    "oracle_equivalence": (_t_oracle_equivalence, "ok", ["exact", "mc", "mc_half_width", "mc_ok", "pi_star", "pi_star_exact", "pi_star_ok", "ok"]),
    "detector_oracle": (_t_detector_oracle, "ok", ["arity", "edges", "detector", "brute_force", "ok"]),
    "extra_cliques": (_t_extra_cliques, "ok", ["arity", "edges", "extra", "unexplained", "ok"]),
    "analytic": (_t_analytic, "ok", ["rows", "seconds", "passed", "ok"]),
}

BASE_FIELDS = ["kind", "n", "index", "seed", "stage", "error"]
TIMING_FIELDS = {"runtime_couple", "runtime_orders", "runtime_chain", "runtime_solve", "seconds"}


def row_fields(kind: str, timing: bool = False) -> list[str]:
    """Documented CSV column order for a kind; timing columns only on request."""
    cols = BASE_FIELDS + KINDS[kind][2]
    return cols if timing else [c for c in cols if c not in TIMING_FIELDS]


def run_trial(cfg: ExperimentConfig, n: int, index: int) -> dict:
    """One trial; validation problems become row-level outcomes."""
    seed = trial_seed(cfg.master_seed, index)
    row = {"kind": cfg.kind, "n": n, "index": index, "seed": seed_label(seed), "stage": "ok", "error": None}
    try:
        out = KINDS[cfg.kind][0](cfg, n, seed)
    except (ValueError, RuntimeError) as exc:
        row.update(stage="rejected", error=f"{type(exc).__name__}: {exc}")
        return row
    out = dict(out)
    out.pop("seed", None)
    for k in ("n", "r", "s"):
        out.pop(k, None)
    if out.get("stage") not in (None, "ok"):
        row["error"] = out["stage"]
        row["stage"] = out["stage"].split(":")[0]
    out.pop("stage", None)
    row.update(out)
    return row


def _run_trial_packed(args):
    cfg_dict, n, index = args
    return run_trial(ExperimentConfig.from_dict(cfg_dict), n, index)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}")


# ---------------------------------------------------------------------------
# reports


@dataclass
class Aggregate:
    n: int
    trials: int
    successes: int
    rejected: int
    estimate: float
    lo: float
    hi: float


@dataclass
class ExperimentReport:
    config: dict
    rows: list
    aggregates: list = field(default_factory=list)
    wall_clock: float = 0.0
    version: str = __version__

    def aggregate_for(self, n: int) -> Aggregate:
        for a in self.aggregates:
            if a.n == n:
                return a
        raise KeyError(n)

    def to_dict(self) -> dict:
        return {"config": self.config, "rows": self.rows,
                "aggregates": [asdict(a) for a in self.aggregates],
                "wall_clock": self.wall_clock, "version": self.version}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(d["config"], d["rows"], [Aggregate(**a) for a in d["aggregates"]],
                   d["wall_clock"], d["version"])


def aggregate(rows: list, metric: str, ns: list) -> list[Aggregate]:
    """Per-n success counts of a boolean row field; rejected or undefined rows count as failures."""
    out = []
    for n in ns:
        sel = [r for r in rows if r["n"] == n]
        if not sel:
            continue
        succ = sum(1 for r in sel if r.get(metric) is True)
        rej = sum(1 for r in sel if r["stage"] != "ok")
        lo, hi = wilson_interval(succ, len(sel))
        out.append(Aggregate(n, len(sel), succ, rej, succ / len(sel), lo, hi))
    return out


def run_experiment(config: ExperimentConfig | dict) -> ExperimentReport:
    """Run every (n, index) trial, in parallel when CLIQUEHIT_WORKERS > 1.

    Each trial draws from its own stream (master_seed, index), so results do
    not depend on the worker count; rows are sorted by (n, index).
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    t0 = time.perf_counter()
    jobs = [(cfg.to_dict(), n, i) for n in cfg.n for i in range(cfg.trials)]
    workers = worker_count()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_run_trial_packed, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [run_trial(cfg, n, i) for _, n, i in jobs]
    rows.sort(key=lambda r: (cfg.n.index(r["n"]), r["index"]))
    return ExperimentReport(cfg.to_dict(), rows, aggregate(rows, cfg.metric, cfg.n),
                            time.perf_counter() - t0)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def report_csv(report: ExperimentReport, timing: bool = False) -> str:
    cols = row_fields(report.config["kind"], timing)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in report.rows:
        w.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


def summary_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "metric", "n", "trials", "successes", "rejected", "estimate", "wilson_lo", "wilson_hi"])
    for a in report.aggregates:
        w.writerow([report.config["kind"], report.config["metric"], a.n, a.trials, a.successes,
                    a.rejected, repr(a.estimate), repr(a.lo), repr(a.hi)])
    return buf.getvalue()


def emit_report(report: ExperimentReport, format: str = "csv", path=None, timing: bool = False) -> str:
    """Serialise to CSV (one row per trial, fixed column order) or JSON; write to
    ``path`` when given and return the text."""
    if format == "csv":
        text = report_csv(report, timing)
    elif format == "json":
        text = json.dumps(report.to_dict(), indent=1, sort_keys=True, default=_json_default)
    else:
        raise ValueError("format must be csv or json")
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
    return text


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    raise TypeError(f"not serialisable: {type(o).__name__}")


# ---------------------------------------------------------------------------
# presets and threshold checks


def preset_names() -> list[str]:
    root = resources.files("cliquehit") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> dict:
    """A preset: {"name", "description", "experiments": [{"config": ..., "checks": [...]}, ...]}."""
    path = resources.files("cliquehit") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ValueError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return json.loads(path.read_text(encoding="utf-8"))


@dataclass
class CheckResult:
    passed: bool
    message: str


def _rows_where(rows, where):
    if not where:
        return rows
    out = []
    for r in rows:
        ok = True
        for k, cond in where.items():
            v = r.get(k)
            if isinstance(cond, dict):
                if "gt" in cond and not (v is not None and v > cond["gt"]):
                    ok = False
                if "is" in cond and v is not cond["is"]:
                    ok = False
                if "defined" in cond and (v is not None) != cond["defined"]:
                    ok = False
            elif v != cond:
                ok = False
        if ok:
            out.append(r)
    return out


def evaluate_check(report: ExperimentReport, check: dict) -> CheckResult:
    """Evaluate one threshold check against a report.

    Types: ``min_rate`` (metric rate at one n), ``monotone_min`` (rates
    non-decreasing within Wilson slack plus a floor at the last n),
    ``all_true`` (every selected row), ``rate_where`` (rate among rows
    matching ``where``), ``failure_rate_max``, ``chi_square`` (per-hyperedge
    inclusion counts against pi).
    """
    kind = check["type"]
    rows = report.rows
    metric = check.get("metric", report.config["metric"])
    if kind == "min_rate":
        n = check.get("n", report.config["n"][-1])
        sel = [r for r in rows if r["n"] == n]
        k = sum(1 for r in sel if r.get(metric) is True)
        rate = k / len(sel)
        return CheckResult(rate >= check["min"], f"{metric} at n={n}: {k}/{len(sel)} = {rate:.4f} (need >= {check['min']})")
    if kind == "monotone_min":
        aggs = aggregate(rows, metric, report.config["n"])
        mono = all(b.hi >= a.lo for a, b in zip(aggs, aggs[1:]))
        last = aggs[-1]
        desc = ", ".join(f"n={a.n}: {a.estimate:.4f} [{a.lo:.4f}, {a.hi:.4f}]" for a in aggs)
        ok = mono and last.estimate >= check["min"]
        return CheckResult(ok, f"{metric} {desc}; non-decreasing within CI: {mono}; "
                               f"need >= {check['min']} at n={last.n}")
    if kind == "all_true":
        sel = _rows_where(rows, check.get("where"))
        k = sum(1 for r in sel if r.get(metric) is True)
        if not sel:
            return CheckResult(False, f"{metric}: no evaluable rows out of {len(rows)}")
        return CheckResult(k == len(sel), f"{metric}: {k}/{len(sel)} evaluable rows (of {len(rows)}) hold")
    if kind == "rate_where":
        sel = _rows_where(rows, check.get("where"))
        if not sel:
            return CheckResult(False, f"{metric}: no rows match {check.get('where')} out of {len(rows)}")
        k = sum(1 for r in sel if r.get(metric) is True)
        rate = k / len(sel)
        return CheckResult(rate >= check["min"], f"{metric} among {len(sel)} selected rows: {rate:.4f} (need >= {check['min']})")
    if kind == "failure_rate_max":
        k = sum(1 for r in rows if r.get("failed") is True)
        rate = k / len(rows)
        return CheckResult(rate <= check["max"], f"failure rate {k}/{len(rows)} = {rate:.4f} (need <= {check['max']})")
    if kind == "chi_square":
        cfg = report.config
        n, r = cfg["n"][0], cfg["r"]
        sel = [row for row in rows if row["n"] == n and row["stage"] == "ok"]
        pi = sel[0]["pi"]
        M = math.comb(n, r)
        counts = np.zeros(M)
        for row in sel:
            if row["hyperedges"]:
                counts[[int(x) for x in row["hyperedges"].split()]] += 1
        N = len(sel)
        stat = float(((counts - N * pi) ** 2 / (N * pi * (1 - pi))).sum())
        pval = float(stats.chi2.sf(stat, M))
        alpha = check.get("alpha", 0.05)
        return CheckResult(pval >= alpha, f"inclusion chi-square {stat:.1f} on {M} df over {N} runs, "
                                          f"p = {pval:.4f} (need >= {alpha})")
    raise ValueError(f"unknown check type {kind!r}")


def run_preset(name: str, trials: int | None = None, cache: dict | None = None) -> tuple[list, list[CheckResult]]:
    """Run every experiment of a preset and evaluate its checks.

    ``cache`` maps a config's JSON to an earlier report, so presets sharing
    an experiment run it once.
    """
    preset = load_preset(name)
    reports, results = [], []
    for exp in preset["experiments"]:
        cfgd = dict(exp["config"])
        if trials is not None:
            cfgd["trials"] = trials
        cfg = ExperimentConfig.from_dict(cfgd)
        key = json.dumps(cfg.to_dict(), sort_keys=True)
        if cache is not None and key in cache:
            rep = cache[key]
        else:
            rep = run_experiment(cfg)
            if cache is not None:
                cache[key] = rep
        reports.append(rep)
        results.extend(evaluate_check(rep, c) for c in exp.get("checks", []))
    return reports, results
