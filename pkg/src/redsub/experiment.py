"""Prime scans over an elliptic curve and the algebra verification suite.

Every run produces a list of JSON-serializable records (one per prime or per
check) followed by a summary record.  Output is deterministic given the
config and seed: records are ordered by prime, keys are sorted, and nothing
time-dependent is written.
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .arith import factorint, is_prime
from .elliptic import (
    MAX_PRIME,
    FormalPoint,
    MWPresentation,
    group_structure,
    point_order,
    subgroup_membership,
)
from .errors import ConfigError, ContradictionError, RedsubError
from .fixtures import load_curve, module_from_json, resolve_order
from .lattice import Lattice, membership_localized, snf
from .module import crt_maps, evil_grid, prebasis_construct
from .order import exponent_decomposition, verify_inclusions

CONSISTENT = "CONSISTENT"
INCONCLUSIVE = "INCONCLUSIVE"
CONTRADICTION = "CONTRADICTION"
PASS = "PASS"
FAIL = "FAIL"

TABLE_ROWS = 20

EXIT_CODES = {CONSISTENT: 0, PASS: 0, INCONCLUSIVE: 2, CONTRADICTION: 1, FAIL: 1}


@dataclass
class ExperimentConfig:
    mode: str
    seed: int = 0
    output_path: str | None = None
    mw: MWPresentation | None = None
    sigma_generators: list[FormalPoint] = field(default_factory=list)
    sigma_contains_torsion: bool = False
    x: FormalPoint | None = None
    y: FormalPoint | None = None
    prime_min: int = 5
    prime_max: int = 1000
    algebra: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        mode = data.get("mode")
        if mode not in ("gajda", "support", "algebra"):
            raise ConfigError(f"mode must be gajda, support or algebra, not {mode!r}")
        cfg = cls(mode=mode, seed=int(data.get("seed", 0)), output_path=data.get("output_path"))
        if mode == "algebra":
            cfg.algebra = data
            return cfg
        try:
            mw = data["mw"] if "mw" in data else {"curve": data["curve"]}
            cfg.mw = load_curve(mw) if isinstance(mw, str) else MWPresentation.from_json(mw)
            cfg.prime_min = int(data.get("prime_min", 5))
            cfg.prime_max = int(data["prime_max"])
            cfg.x = FormalPoint.from_json(data["x"])
            if mode == "gajda":
                cfg.sigma_generators = [FormalPoint.from_json(s) for s in data["sigma_generators"]]
                cfg.sigma_contains_torsion = bool(data.get("sigma_contains_torsion", False))
            else:
                cfg.y = FormalPoint.from_json(data["y"])
        except KeyError as exc:
            raise ConfigError(f"missing config field {exc.args[0]!r}") from None
        if not 0 <= cfg.prime_min <= cfg.prime_max <= MAX_PRIME:
            raise ConfigError(f"need 0 <= prime_min <= prime_max <= {MAX_PRIME}")
        for pt in [cfg.x, cfg.y, *cfg.sigma_generators]:
            if pt is not None:
                cfg.mw.check_point(pt)
        return cfg

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                return cls.from_json(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None


@dataclass
class Report:
    records: list[dict]
    summary: dict

    @property
    def verdict(self) -> str:
        return self.summary["verdict"]

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def dumps(self) -> str:
        lines = [json.dumps(r, sort_keys=True) for r in self.records]
        lines.append(json.dumps({"type": "summary", **self.summary}, sort_keys=True))
        return "\n".join(lines) + "\n"

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.dumps())


def _parallel_map(fn: Callable, items: list, threads: int) -> list:
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _classify(mw: MWPresentation, p: int) -> str | None:
    if not is_prime(p):
        return None
    if p <= 3:
        return "skipped"
    return "good" if mw.curve.has_good_reduction(p) else "bad"


# -- membership scan ------------------------------------------------------------------------------


def lattice_verdict(mw: MWPresentation, sigma: list[FormalPoint], x: FormalPoint) -> dict:
    """Decide x in Sigma + torsion and x in Sigma tensor Z_(p) on coefficient vectors."""
    r = mw.rank
    L = Lattice.from_generators([s.coeffs for s in sigma], r)
    member = tuple(x.coeffs) in L
    candidates = set(factorint(mw.torsion_order))
    if L.rank:
        for d in snf(L.basis).diagonal:
            candidates |= set(factorint(d))
    failures = sorted(
        q for q in candidates if not membership_localized(x.coeffs, L, mw.torsion_order, q)
    )
    rational = Lattice.from_generators(list(L.vectors) + [x.coeffs], r).rank == L.rank
    out = {
        "in_sigma_plus_torsion": member,
        "in_sigma_tensor_q": rational,
        "local_failures": failures,
        "sigma_rank": L.rank,
    }
    if not rational:
        # outside Sigma tensor Q, so every localization fails
        out["local_failures_all"] = True
    return out


def run_gajda_scan(cfg: ExperimentConfig, threads: int = 1) -> Report:
    mw = cfg.mw
    sigma = list(cfg.sigma_generators)
    verdict = lattice_verdict(mw, sigma, cfg.x)

    def scan(p: int) -> dict:
        status = _classify(mw, p)
        rec = {"p": p, "status": status}
        if status != "good":
            return rec
        try:
            Ep, gens, tors = mw.reduce(p)
            G = group_structure(Ep, cfg.seed)
            sig = [mw.reduce_formal(s, Ep, gens, tors) for s in sigma] + [T for T in tors if T is not None]
            xp = mw.reduce_formal(cfg.x, Ep, gens, tors)
            rec.update(good_reduction=True, d1=G.d1, d2=G.d2, member=subgroup_membership(xp, sig, G))
        except RedsubError as exc:
            rec.update(status="error", error=f"{type(exc).__name__}: {exc}")
        return rec

    primes = [p for p in range(cfg.prime_min, cfg.prime_max + 1) if is_prime(p)]
    records = _parallel_map(scan, primes, threads)
    witnesses = [r["p"] for r in records if r.get("member") is False]
    if verdict["in_sigma_plus_torsion"]:
        if witnesses:
            raise ContradictionError(
                f"x lies in Sigma + torsion but reduces outside red Sigma at p = {witnesses[0]}; "
                "reduction is a homomorphism, so the implementation is wrong"
            )
        result = CONSISTENT
    else:
        result = CONSISTENT if witnesses else INCONCLUSIVE
    summary = {
        "mode": "gajda",
        "statement": "x in Sigma" if cfg.sigma_contains_torsion else "x in Sigma + torsion",
        "curve": mw.curve.to_json(),
        "prime_range": [cfg.prime_min, cfg.prime_max],
        "seed": cfg.seed,
        "lattice_verdict": verdict,
        "witnesses": witnesses,
        "smallest_witness": witnesses[0] if witnesses else None,
        "counts": _status_counts(records),
        "verdict": result,
    }
    return Report(records, summary)


def _status_counts(records: Iterable[dict]) -> dict:
    counts: dict[str, int] = {}
    for r in records:
        counts[r["status"]] = counts.get(r["status"], 0) + 1
    return counts


# -- support scan ------------------------------------------------------------------------------


def run_support_scan(cfg: ExperimentConfig, threads: int = 1) -> Report:
    mw = cfg.mw

    def scan(p: int) -> dict:
        status = _classify(mw, p)
        rec = {"p": p, "status": status}
        if status != "good":
            return rec
        try:
            Ep, gens, tors = mw.reduce(p)
            G = group_structure(Ep, cfg.seed)
            ox = point_order(mw.reduce_formal(cfg.x, Ep, gens, tors), G)
            oy = point_order(mw.reduce_formal(cfg.y, Ep, gens, tors), G)
            rec.update(good_reduction=True, d1=G.d1, d2=G.d2, ord_x=ox, ord_y=oy, divides=oy % ox == 0)
        except RedsubError as exc:
            rec.update(status="error", error=f"{type(exc).__name__}: {exc}")
        return rec

    primes = [p for p in range(cfg.prime_min, cfg.prime_max + 1) if is_prime(p)]
    records = _parallel_map(scan, primes, threads)
    failures = [r["p"] for r in records if r.get("divides") is False]
    summary = {
        "mode": "support",
        "curve": mw.curve.to_json(),
        "prime_range": [cfg.prime_min, cfg.prime_max],
        "seed": cfg.seed,
        "failures": failures,
        "failure_count": len(failures),
        "good_primes": sum(1 for r in records if "divides" in r),
        "counts": _status_counts(records),
        "verdict": CONSISTENT,
    }
    return Report(records, summary)


# -- algebra suite ------------------------------------------------------------------------------


def _random_elements(N, count: int, rng: random.Random, bound: int = 20) -> list[tuple[int, ...]]:
    return [N.reduce([rng.randint(-bound, bound) for _ in range(N.ngens)]) for _ in range(count)]


def run_algebra_suite(cfg: ExperimentConfig, threads: int = 1) -> Report:
    data = cfg.algebra
    primes = data.get("primes", [2, 3, 5])
    n_max = int(data.get("n_max", 6))
    random_count = int(data.get("random_elements", 100))
    max_size = int(data.get("max_module_size", 10**4))
    grid = data.get("evil_grid", {})
    records: list[dict] = []

    def add(check: str, passed: bool, **info):
        records.append({"check": check, "passed": bool(passed), **info})

    orders = {}
    for spec in data.get("orders", []):
        name = spec if isinstance(spec, str) else spec.get("name", "")
        orders[name] = resolve_order(spec)
        add("order_valid", True, order=name)

    for name, (O, nrm) in orders.items():
        for p in primes:
            d = exponent_decomposition(O, nrm, p).d
            for n in range(d, n_max + 1):
                rep = verify_inclusions(O, nrm, p, n)
                add("inclusions", rep.passed, order=name, p=p, n=n)

    rng = random.Random(cfg.seed)
    for mdata in data.get("modules", []):
        O, nrm = orders.get(mdata["order"]) if isinstance(mdata["order"], str) and mdata["order"] in orders \
            else resolve_order(mdata["order"])
        N = module_from_json(mdata, O, nrm)
        label = mdata.get("name", "")
        if N.free_rank:
            pb = prebasis_construct(N)
            elems = [N.generator(k) for k in range(N.ngens)] + _random_elements(N, random_count, rng)
            bad = sum(1 for v in elems if not pb.check_identity(v))
            add("eta_identity", bad == 0, module=label, eta=pb.eta, checked=len(elems), failures=bad)
            continue
        if N.size > max_size:
            add("skipped", True, module=label, reason="module too large")
            continue
        for p in primes:
            if any(t % p for t in N.torsion):
                continue
            d = exponent_decomposition(O, nrm, p).d
            for n in range(d, n_max + 1):
                res = crt_maps(N, nrm, p, n).verify()
                ok = all(v for k, v in res.items() if isinstance(v, bool))
                add("crt_scalar", ok, module=label, p=p, n=n, **{k: v for k, v in res.items() if not isinstance(v, bool)})
            res = evil_grid(N, nrm, p, a_max=int(grid.get("a_max", 2)), b_max=int(grid.get("b_max", 2)),
                            alpha_bound=int(grid.get("alpha_bound", 1)),
                            x_samples=int(grid.get("x_samples", 64)), seed=cfg.seed)
            add("evil_grid", res["counterexamples"] == 0, module=label, p=p, **res)

    failed = [r for r in records if not r["passed"]]
    summary = {
        "mode": "algebra",
        "seed": cfg.seed,
        "checks": len(records),
        "failures": len(failed),
        "verdict": PASS if not failed else FAIL,
    }
    return Report(records, summary)


RUNNERS = {"gajda": run_gajda_scan, "support": run_support_scan, "algebra": run_algebra_suite}


def run(cfg: ExperimentConfig, threads: int = 1) -> Report:
    return RUNNERS[cfg.mode](cfg, threads)


def human_table(report: Report) -> str:
    s = report.summary
    lines = []
    mode = s["mode"]
    if mode == "gajda":
        lines.append(f"{'p':>8} {'d1':>6} {'d2':>8}  member")
        rows = [r for r in report.records if r.get("member") is False]
        for r in rows[:TABLE_ROWS]:
            lines.append(f"{r['p']:>8} {r['d1']:>6} {r['d2']:>8}  no")
        if len(rows) > TABLE_ROWS:
            lines.append(f"... {len(rows) - TABLE_ROWS} more witnesses in the report")
        lv = s["lattice_verdict"]
        lines.append(f"statement tested: {s['statement']}")
        lines.append(f"lattice: in_sigma_plus_torsion={lv['in_sigma_plus_torsion']} local_failures={lv['local_failures']}")
        lines.append(f"witnesses: {len(s['witnesses'])}  smallest: {s['smallest_witness']}")
    elif mode == "support":
        lines.append(f"{'p':>8} {'ord x':>8} {'ord y':>8}")
        rows = [r for r in report.records if r.get("divides") is False]
        for r in rows[:TABLE_ROWS]:
            lines.append(f"{r['p']:>8} {r['ord_x']:>8} {r['ord_y']:>8}")
        if len(rows) > TABLE_ROWS:
            lines.append(f"... {len(rows) - TABLE_ROWS} more in the report")
        lines.append(f"divisibility fails at {s['failure_count']} of {s['good_primes']} good primes")
    else:
        for r in report.records:
            if not r["passed"]:
                lines.append("FAIL " + json.dumps(r, sort_keys=True))
        lines.append(f"{s['checks']} checks, {s['failures']} failures")
    lines.append(f"counts: {s.get('counts', {})}" if "counts" in s else "")
    lines.append(f"verdict: {s['verdict']}")
    return "\n".join(l for l in lines if l)
