"""Batch experiment harness: ``disttest <command> ...`` writes CSV rows.

Exit status: 0 on success, 1 when a verification check fails, 2 on bad
arguments, 3 when an instance or tree file cannot be loaded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, instances, isoperimetry, tester
from .distributions import (Distribution, ExplicitDistribution, ProductDistribution,
                            SparseDistribution, load_instance, save_instance)
from .errors import ArgumentError, DistTestError, LoadError
from .streams import make_rng, spawn_rngs

HEADER = ["run_id", "command", "kind", "n", "eps", "K", "q", "seed",
          "verdict_or_value", "queries", "elapsed_ms"]


class CheckFailed(DistTestError):
    pass


@dataclass
class ExperimentSpec:
    command: str
    instance: str | None = None
    trials: int = 1
    seed: int | None = None
    params: dict = field(default_factory=dict)
    out: str | None = None


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(rows: list[dict], path=None) -> str:
    """CSV text (header plus rows); also written to ``path`` when given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for row in rows:
        writer.writerow([_fmt(row.get(k)) for k in HEADER])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    return text


# -- instances -----------------------------------------------------------------

_SHORTHAND = re.compile(r"^(uniform|pointmass-bottom):n=(\d+)$")


def resolve_instance(source: str) -> tuple[str, Distribution]:
    """A shorthand ``uniform:n=K`` / ``pointmass-bottom:n=K`` or an instance file."""
    m = _SHORTHAND.match(source)
    if m:
        kind, n = m.group(1), int(m.group(2))
        if n < 1:
            raise ArgumentError("shorthand dimension must be positive")
        if kind == "uniform":
            return kind, ProductDistribution(np.zeros(n))
        if n <= 20:
            return kind, ExplicitDistribution.point_mass((-1,) * n)
        return kind, SparseDistribution.point_mass((-1,) * n)
    path = Path(source)
    meta = Path(str(path) + ".meta.json")
    kind = "file"
    if meta.exists():
        try:
            kind = json.loads(meta.read_text(encoding="utf-8")).get("kind", kind)
        except (OSError, json.JSONDecodeError) as exc:
            raise LoadError(f"cannot read metadata {meta}: {exc}") from exc
    return kind, load_instance(path)


# -- pipelines -------------------------------------------------------------------

def _tester_trial(args):
    target, cfg, rng = args
    start = time.perf_counter()
    verdict = tester.run_tester(target, cfg, rng)
    return verdict.outcome, verdict.ledger.total_queries, (time.perf_counter() - start) * 1e3


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DISTTEST_THREADS", "1")))
    except ValueError:
        raise ArgumentError("DISTTEST_THREADS must be an integer")


def _need_seed(spec: ExperimentSpec) -> int:
    if spec.seed is None:
        raise ArgumentError(f"{spec.command} is stochastic and needs --seed")
    return spec.seed


def _test_monotonicity(spec: ExperimentSpec) -> list[dict]:
    seed = _need_seed(spec)
    kind, target = resolve_instance(spec.instance)
    p = spec.params
    cfg = tester.TesterConfig(eps=p["eps"], c0=p.get("c0", 0.1), C_t=p.get("C_t", 4.0),
                              C_m=p.get("C_m", 32.0), w_max_slack=p.get("w_max_slack", 4))
    jobs = [(target, cfg, rng) for rng in spawn_rngs(seed, spec.trials)]
    workers = min(_threads(), spec.trials)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_tester_trial, jobs))
    else:
        results = [_tester_trial(job) for job in jobs]
    return [{"run_id": k, "command": spec.command, "kind": kind, "n": target.n, "eps": cfg.eps,
             "seed": seed, "verdict_or_value": outcome, "queries": queries,
             "elapsed_ms": round(ms, 3)}
            for k, (outcome, queries, ms) in enumerate(results)]


def _gen(spec: ExperimentSpec) -> list[dict]:
    seed = _need_seed(spec)
    p = spec.params
    kind, n, eps = p["kind"], p["n"], p["eps"]
    rng = make_rng(seed)
    start = time.perf_counter()
    meta = {"kind": kind, "n": n, "eps": eps, "seed": seed}
    K = None
    if kind == "uniformity-hard":
        dist = instances.uniformity_hard_instance(n, eps, rng)
    elif kind in ("yes", "no"):
        K = p.get("K") or instances.default_K(n)
        pair = instances.build_moment_matched(K)
        dist = instances.draw_instance(kind, n, eps, pair, rng)
        meta.update(K=K, z=[str(v) for v in pair.z], z_norm=str(pair.z_norm))
    else:
        raise ArgumentError(f"unknown kind {kind!r}")
    if spec.out is None:
        raise ArgumentError("gen needs --out")
    save_instance(dist, spec.out)
    Path(spec.out + ".meta.json").write_text(json.dumps(meta) + "\n", encoding="utf-8")
    return [{"run_id": 0, "command": "gen", "kind": kind, "n": n, "eps": eps, "K": K,
             "seed": seed, "verdict_or_value": spec.out,
             "elapsed_ms": round((time.perf_counter() - start) * 1e3, 3)}]


def _verify_isoperimetry(spec: ExperimentSpec) -> list[dict]:
    seed = _need_seed(spec)
    n = spec.params["n"]
    if not 1 <= n <= isoperimetry.MAX_LP_DIM:
        raise ArgumentError(f"--n must lie in [1, {isoperimetry.MAX_LP_DIM}]")
    rows, failed = [], []
    for k, rng in enumerate(spawn_rngs(seed, spec.trials)):
        start = time.perf_counter()
        f = isoperimetry.RealFunction(rng.random(1 << n))
        worst = isoperimetry.identity_violations(f, rng.uniform(0.1, 10.0), rng.uniform(-5, 5))
        bad = [name for name, v in worst.items() if v > isoperimetry.IDENTITY_TOLERANCES[name]]
        failed += [(k, name) for name in bad]
        rows.append({"run_id": k, "command": spec.command, "kind": "random-function", "n": n,
                     "seed": seed, "verdict_or_value": "fail:" + "+".join(bad) if bad else "pass",
                     "elapsed_ms": round((time.perf_counter() - start) * 1e3, 3)})
    if failed:
        spec.params["_failed"] = failed
    return rows


def _moment_match(spec: ExperimentSpec) -> list[dict]:
    K = spec.params["K"]
    start = time.perf_counter()
    pair = instances.build_moment_matched(K)
    lines = [f"K = {K}", "z = (" + ", ".join(str(v) for v in pair.z) + ")",
             f"|z|_1 = {pair.z_norm} ~ {float(pair.z_norm):.6f}",
             "A = {" + ", ".join(f"{v}: {w}" for v, w in pair.A.items()) + "}",
             "B = {" + ", ".join(f"{v}: {w}" for v, w in pair.B.items()) + "}",
             "k  E_A[X^k]  E_B[X^k]"]
    for k in range(1, K + 2):
        lines.append(f"{k}  {instances.moment(pair.A, k)}  {instances.moment(pair.B, k)}")
    spec.params["_text"] = "\n".join(lines) + "\n"
    return [{"run_id": 0, "command": spec.command, "kind": "moment-match", "K": K,
             "verdict_or_value": str(pair.z_norm),
             "elapsed_ms": round((time.perf_counter() - start) * 1e3, 3)}]


def _analyze(spec: ExperimentSpec) -> list[dict]:
    p = spec.params
    what = p["what"]
    if what == "count-tv":
        pair = instances.build_moment_matched(p["K"])
        n, q, eps = p["n"], p["q"], p["eps"]
        start = time.perf_counter()
        yes = analysis.scaled_law(pair, "yes", eps, n)
        no = analysis.scaled_law(pair, "no", eps, n)
        mode = {"exact": "exact", "bound": "subadditive"}[p["mode"]]
        value = analysis.count_tv(n, q, yes, no, mode)
        return [{"run_id": 0, "command": "analyze count-tv", "kind": p["mode"], "n": n,
                 "eps": eps, "K": p["K"], "q": q, "verdict_or_value": value,
                 "elapsed_ms": round((time.perf_counter() - start) * 1e3, 3)}]
    seed = _need_seed(spec)
    n, q, eps = p["n"], p["q"], p["eps"]
    rows = []
    for k, rng in enumerate(spawn_rngs(seed, spec.trials)):
        start = time.perf_counter()
        value = analysis.likelihood_ratio_log(rng.standard_normal((q, n)), eps)
        rows.append({"run_id": k, "command": "analyze likelihood", "kind": "standard",
                     "n": n, "eps": eps, "q": q, "seed": seed, "verdict_or_value": value,
                     "elapsed_ms": round((time.perf_counter() - start) * 1e3, 3)})
    return rows


def _certify_far(spec: ExperimentSpec) -> list[dict]:
    kind, target = resolve_instance(spec.instance)
    p = spec.params
    start = time.perf_counter()
    cert = tester.far_certificate(target, p["eps"], c0=p.get("c0", 0.1),
                                  distance=p.get("distance"))
    value = "none" if cert is None else \
        f"gamma={cert.gamma};ell={cert.ell};eta={cert.eta!r};prob={cert.probability!r}"
    if cert is None:
        spec.params["_failed"] = [(0, "no certificate")]
    return [{"run_id": 0, "command": spec.command, "kind": kind, "n": target.n,
             "eps": p["eps"], "verdict_or_value": value,
             "elapsed_ms": round((time.perf_counter() - start) * 1e3, 3)}]


PIPELINES = {
    "test-monotonicity": _test_monotonicity,
    "gen": _gen,
    "verify-isoperimetry": _verify_isoperimetry,
    "moment-match": _moment_match,
    "analyze": _analyze,
    "certify-far": _certify_far,
}


def run_experiment(spec: ExperimentSpec) -> list[dict]:
    if spec.command not in PIPELINES:
        raise ArgumentError(f"unknown command {spec.command!r}")
    if spec.trials < 1:
        raise ArgumentError("--trials must be positive")
    return PIPELINES[spec.command](spec)


# -- argument parsing --------------------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="disttest", description=__doc__,
                                 formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    def common(p, seed=True, out=True):
        if seed:
            p.add_argument("--seed", type=int, help="master seed (required)")
        if out:
            p.add_argument("--out", help="CSV report path (stdout when omitted)")

    t = sub.add_parser("test-monotonicity", formatter_class=fmt,
                       help="run the edge tester on an instance")
    t.add_argument("--instance", required=True,
                   help="instance file, or uniform:n=K / pointmass-bottom:n=K")
    t.add_argument("--eps", type=float, required=True, help="distance parameter in (0, 1)")
    t.add_argument("--trials", type=_positive_int, default=1)
    t.add_argument("--c0", type=float, default=0.1, help="scale constant in eta")
    t.add_argument("--Ct", type=float, default=4.0, help="repetitions constant")
    t.add_argument("--Cm", type=float, default=32.0, help="probe-length constant")
    t.add_argument("--w-max-slack", type=int, default=4, help="extra scales beyond the base range")
    common(t)

    g = sub.add_parser("gen", formatter_class=fmt, help="draw an instance and save it")
    g.add_argument("--kind", choices=["yes", "no", "uniformity-hard"], required=True)
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--eps", type=float, required=True)
    g.add_argument("--K", type=int, default=None,
                   help="matched moments (default: max(1, floor(ln n / ln ln max(n, 16))))")
    g.add_argument("--seed", type=int, help="seed (required)")
    g.add_argument("--out", required=True, help="instance path; metadata goes to OUT.meta.json")
    g.add_argument("--report", help="CSV report path (stdout when omitted)")

    v = sub.add_parser("verify-isoperimetry", formatter_class=fmt,
                       help="check the threshold identities on random functions")
    v.add_argument("--n", type=_positive_int, required=True)
    v.add_argument("--trials", type=_positive_int, default=200)
    common(v)

    mm = sub.add_parser("moment-match", formatter_class=fmt,
                        help="print an exact moment-matched pair")
    mm.add_argument("--K", type=int, required=True)
    common(mm, seed=False)

    an = sub.add_parser("analyze", formatter_class=fmt, help="indistinguishability computations")
    an_sub = an.add_subparsers(dest="what", required=True)
    ct = an_sub.add_parser("count-tv", formatter_class=fmt,
                           help="TV between yes/no count-vector laws")
    ct.add_argument("--n", type=_positive_int, required=True)
    ct.add_argument("--q", type=_positive_int, required=True)
    ct.add_argument("--K", type=int, required=True)
    ct.add_argument("--eps", type=float, required=True)
    ct.add_argument("--mode", choices=["exact", "bound"], default="exact")
    common(ct, seed=False)
    lk = an_sub.add_parser("likelihood", formatter_class=fmt,
                           help="Gaussian log-likelihood ratio on standard draws")
    lk.add_argument("--n", type=_positive_int, required=True)
    lk.add_argument("--q", type=_positive_int, required=True)
    lk.add_argument("--eps", type=float, required=True)
    lk.add_argument("--trials", type=_positive_int, default=200)
    common(lk)

    cf = sub.add_parser("certify-far", formatter_class=fmt,
                        help="find the bucket certificate for an explicit far instance")
    cf.add_argument("--instance", required=True)
    cf.add_argument("--eps", type=float, required=True)
    cf.add_argument("--c0", type=float, default=0.1)
    cf.add_argument("--distance", type=float, default=None,
                    help="known distance to monotonicity (skips the LP)")
    common(cf, seed=False)
    return ap


def spec_from_args(a: argparse.Namespace) -> ExperimentSpec:
    cmd = a.command
    if cmd == "test-monotonicity":
        return ExperimentSpec(cmd, a.instance, a.trials, a.seed,
                              {"eps": a.eps, "c0": a.c0, "C_t": a.Ct, "C_m": a.Cm,
                               "w_max_slack": a.w_max_slack}, a.out)
    if cmd == "gen":
        return ExperimentSpec(cmd, None, 1, a.seed,
                              {"kind": a.kind, "n": a.n, "eps": a.eps, "K": a.K}, a.out)
    if cmd == "verify-isoperimetry":
        return ExperimentSpec(cmd, None, a.trials, a.seed, {"n": a.n}, a.out)
    if cmd == "moment-match":
        return ExperimentSpec(cmd, None, 1, None, {"K": a.K}, a.out)
    if cmd == "analyze":
        params = {"what": a.what, "n": a.n, "q": a.q, "eps": a.eps}
        if a.what == "count-tv":
            params.update(K=a.K, mode=a.mode)
            return ExperimentSpec(cmd, None, 1, None, params, a.out)
        return ExperimentSpec(cmd, None, a.trials, a.seed, params, a.out)
    return ExperimentSpec(cmd, a.instance, 1, None,
                          {"eps": a.eps, "c0": a.c0, "distance": a.distance}, a.out)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = spec_from_args(args)
    try:
        rows = run_experiment(spec)
    except LoadError as exc:
        print(f"disttest: {exc}", file=sys.stderr)
        return 3
    except (DistTestError, ValueError) as exc:
        print(f"disttest: {exc}", file=sys.stderr)
        return 2
    if "_text" in spec.params:
        sys.stdout.write(spec.params["_text"])
    report = args.report if spec.command == "gen" else spec.out
    text = emit_report(rows, report)
    if report is None and "_text" not in spec.params:
        sys.stdout.write(text)
    failed = spec.params.get("_failed")
    if failed:
        for run, name in failed:
            print(f"disttest: check failed in run {run}: {name}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
