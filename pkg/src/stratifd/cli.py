"""Command-line front end.

Four subcommands: `solve` runs one `.ite` query and prints the answer,
`bench` measures the constraint families across operator
implementations and writes CSV, `oracle-check` cross-checks solver
results against brute-force enumeration, and `maximal-k` finds the
smallest depth budget whose pruning has stopped improving.

Exit codes: 0 solved or suspended, 1 unsatisfiable (or a failed
cross-check), 2 parse or usage error, 3 timeout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from random import Random

from . import lang
from .bench import (
    CSV_HEADER,
    FAMILIES,
    BenchCase,
    build_instance,
    parse_impl,
    record_row,
    run_case,
)
from .constructive import post, spec_depth
from .domain import FULL, IntDomain
from .engine import DeadlineExceeded, Env, Status, Store, UNBOUNDED
from .oracle import box_size, iter_box, projections, random_csp, solution_set
from .search import SearchError, label, maximal_k

KS = (0, 1, 2, 3, UNBOUNDED)


def _k_text(k) -> str:
    return "inf" if k is UNBOUNDED else str(k)


def _env_seed() -> int:
    try:
        return int(os.environ.get("ITE_SEED", "0"))
    except ValueError:
        return 0


def _read_query(path: str):
    """-> (text, Query); raises SystemExit(2) with a diagnostic."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror}", file=sys.stderr)
        raise SystemExit(2)
    try:
        return text, lang.parse(text)
    except lang.ParseError as exc:
        line = text.splitlines()[exc.line - 1] if text.splitlines() else ""
        detail = exc.message
        if exc.expected:
            detail += " (expected " + " or ".join(exc.expected) + ")"
        print(f"{path}:{exc.line}:{exc.col}: {detail}", file=sys.stderr)
        print(f"    {line}", file=sys.stderr)
        print(f"    {' ' * (exc.col - 1)}^", file=sys.stderr)
        raise SystemExit(2)


def _post_query(query, env: Env) -> tuple[Store, bool]:
    """Fresh store with the query posted; -> (store, failed?)."""
    store = Store()
    for _ in query.names:
        store.new_var(FULL)
    for c in query.conjuncts:
        if post(store, c, env) is Status.FAIL:
            return store, True
    return store, False


def _parse_k(text: str) -> "int | float":
    if text == "inf":
        return UNBOUNDED
    k = int(text)
    if k < 0:
        raise ValueError("k must be >= 0")
    return k


# -- solve ---------------------------------------------------------------


def cmd_solve(args) -> int:
    _, query = _read_query(args.file)
    if args.k is not None:
        k = args.k
    elif query.k is not None:
        k = query.k
    else:
        k = UNBOUNDED
    deadline = None
    if args.timeout is not None:
        deadline = time.monotonic() + args.timeout
    env = Env(k=k, deadline=deadline)
    try:
        store, failed = _post_query(query, env)
        status = "unsat" if failed else "suspended"
        if not failed:
            regs = [e[1] for e in store.trail if e[0] == "reg"]
            if not any(p.alive for p in regs):
                status = "solved"
        if not failed and args.label == "vars":
            vids = list(range(len(query.names)))
            try:
                sol = next(label(store, vids, env=env), None)
            except SearchError as exc:
                print(f"error: cannot label: {exc}", file=sys.stderr)
                return 2
            if sol is None:
                failed, status = True, "unsat"
                store.failed = True
            else:
                status = "solved"
                for vid, value in zip(vids, sol):
                    store.set_domain(vid, IntDomain.point(value))
    except DeadlineExceeded:
        if args.fmt == "json":
            print(json.dumps({"status": "timeout"}))
        else:
            print(f"timeout after {args.timeout}s", file=sys.stderr)
        return 3
    answer = lang.print_answer(store, query)
    if args.fmt == "json":
        domains = {}
        if not failed:
            domains = {
                name: lang.range_text(store.dom(vid))
                for vid, name in enumerate(query.names)
            }
        print(json.dumps({"status": status, "answer": answer, "domains": domains}))
    else:
        print(answer)
    return 1 if failed else 0


# -- bench ---------------------------------------------------------------


def _parse_nspec(text: str) -> list[int]:
    """"lo..hi:step", "lo..hi", or a single integer."""
    spec, _, step_text = text.partition(":")
    step = int(step_text) if step_text else 1
    if step < 1:
        raise ValueError("step must be >= 1")
    lo, dots, hi = spec.partition("..")
    if not dots:
        return [int(spec)]
    lo, hi = int(lo), int(hi)
    if lo < 1 or hi < lo:
        raise ValueError("need 1 <= lo <= hi")
    return list(range(lo, hi + 1, step))


def _render_figures(csv_path: str) -> list[str]:
    """Line charts of duration and effort per implementation, from CSV."""
    import csv as csvmod

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csvmod.DictReader(fh))
    stem = csv_path[:-4] if csv_path.endswith(".csv") else csv_path
    out = []
    for column, title in (("duration_ms", "wall-clock ms"), ("prop_runs", "propagator runs")):
        fig, ax = plt.subplots(figsize=(6, 4))
        impls = sorted({r["impl"] for r in rows})
        for impl in impls:
            pts = [(int(r["n"]), int(r[column])) for r in rows if r["impl"] == impl]
            pts.sort()
            ax.plot(
                [p[0] for p in pts],
                [max(p[1], 1) for p in pts],
                marker="o",
                label=impl,
            )
        ax.set_xlabel("n")
        ax.set_ylabel(title)
        ax.set_yscale("log")
        ax.legend()
        fam = rows[0]["family"] if rows else ""
        ax.set_title(f"{fam}: {title}")
        fig.tight_layout()
        path = f"{stem}.{column}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        out.append(path)
    return out


def cmd_bench(args, parser) -> int:
    try:
        ns = _parse_nspec(args.n)
    except ValueError as exc:
        parser.error(f"bad --n: {exc}")
    impls = [i.strip() for i in args.impls.split(",") if i.strip()]
    if not impls:
        parser.error("no implementations given")
    for impl in impls:
        try:
            parse_impl(impl)
        except ValueError as exc:
            parser.error(str(exc))
    seed = args.seed if args.seed is not None else _env_seed()
    rows = []
    for n in ns:
        for impl in impls:
            case = BenchCase(args.family, n, impl, args.timeout, seed)
            row = record_row(run_case(case))
            rows.append(row)
            print(row)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row + "\n")
    if args.figures:
        for path in _render_figures(args.out):
            print(f"wrote {path}")
    return 0


# -- oracle-check --------------------------------------------------------

BOX_LIMIT = 10**6


def _doms_ctrs(args):
    """The instance set to check: list of (name, doms, ctrs, names|None)."""
    if args.family == "random":
        rng = Random(args.seed if args.seed is not None else _env_seed())
        out = []
        for i in range(args.cases):
            doms, ctrs = random_csp(rng, max_vars=min(args.n, 4))
            out.append((f"case{i}", doms, ctrs, None))
        return out
    if args.family in FAMILIES:
        inst = build_instance(args.family, args.n)
        doms = [inst.store.dom(v) for v in range(len(inst.store.domains))]
        if all(d.is_finite() for d in doms) and box_size(doms) > BOX_LIMIT:
            print(
                f"error: {args.family}({args.n}) has more than {BOX_LIMIT} "
                "assignments; pick a smaller n",
                file=sys.stderr,
            )
            raise SystemExit(2)
        return [(f"{args.family}({args.n})", doms, inst.ctrs, None)]
    # otherwise a .ite query file
    _, query = _read_query(args.family)
    doms = [
        query.declared.get(vid, FULL) for vid in range(len(query.names))
    ]
    return [(args.family, doms, list(query.conjuncts), query.names)]


def _check_instance(name, doms, ctrs, names) -> tuple[int, int, dict]:
    """-> (soundness violations, labeling mismatches, gaps per k)."""
    finite = all(d.is_finite() for d in doms)
    enumerable = finite and box_size(doms) <= BOX_LIMIT
    sols = solution_set(ctrs, doms) if enumerable else None
    proj = projections(sols, len(doms)) if enumerable else None
    violations = mismatches = 0
    gaps = {}
    report = []
    for k in KS:
        env = Env(k=k)
        store = Store()
        for d in doms:
            store.new_var(d)
        failed = any(post(store, c, env) is Status.FAIL for c in ctrs)
        if names is not None:
            doms_text = ", ".join(
                f"{nm} in {lang.range_text(store.dom(vid))}"
                for vid, nm in enumerate(names)
            )
            report.append(f"  k={_k_text(k)}: {'false' if failed else doms_text}")
        if sols is None:
            continue
        if failed:
            if sols:
                violations += 1
            continue
        gap = 0
        for vid, want in enumerate(proj):
            have = set(store.dom(vid).values())
            if not want <= have:
                violations += 1
            elif have > want:
                gap += 1
        gaps[_k_text(k)] = gap
        # posting may have added helper variables; label the lot and
        # project the answers back onto the declared prefix
        nall = len(store.domains)
        try:
            found = {
                sol[: len(doms)] for sol in label(store, range(nall), env=env)
            }
        except SearchError:
            continue
        if found != sols:
            mismatches += 1
    for line in report:
        print(line)
    return violations, mismatches, gaps


def cmd_oracle_check(args, parser) -> int:
    del parser
    instances = _doms_ctrs(args)
    total_v = total_m = 0
    gap_totals: dict[str, int] = {}
    for name, doms, ctrs, names in instances:
        if names is not None:
            print(f"{name}:")
        v, m, gaps = _check_instance(name, doms, ctrs, names)
        total_v += v
        total_m += m
        for kt, g in gaps.items():
            gap_totals[kt] = gap_totals.get(kt, 0) + g
    print(f"checked {len(instances)} instance(s) at k in 0,1,2,3,inf")
    print(f"soundness violations: {total_v}")
    print(f"labeling mismatches: {total_m}")
    if gap_totals:
        gap_text = ", ".join(f"k={kt}: {g}" for kt, g in gap_totals.items())
        print(f"filtering gaps (domain strictly wider than projection): {gap_text}")
    return 1 if total_v or total_m else 0


# -- maximal-k -----------------------------------------------------------


def cmd_maximal_k(args) -> int:
    _, query = _read_query(args.file)

    def build(env: Env) -> Store:
        store = Store()
        for _ in query.names:
            store.new_var(FULL)
        for c in query.conjuncts:
            if post(store, c, env) is Status.FAIL:
                break
        return store

    k = maximal_k(build, args.kmax)
    heuristic = spec_depth(query.body())
    note = f"depth heuristic suggests {heuristic} (not guaranteed)"
    if k is None:
        print(f"maximal k >= {args.kmax}; {note}")
    else:
        print(f"maximal k = {k}; {note}")
    return 0


# -- entry ---------------------------------------------------------------


def main(argv=None) -> int:
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))
    parser = argparse.ArgumentParser(
        prog="stratifd",
        description="Finite-domain solving with constructive logical operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one .ite query and print the answer")
    p.add_argument("file", help="query file")
    p.add_argument(
        "--k",
        type=_parse_k,
        default=None,
        metavar="N|inf",
        help="depth budget; overrides the file's kflag",
    )
    p.add_argument("--timeout", type=float, default=None, metavar="SECONDS")
    p.add_argument(
        "--label",
        choices=("vars", "none"),
        default="none",
        help="label the variables and print the first solution",
    )
    p.add_argument("--format", dest="fmt", choices=("text", "json"), default="text")

    p = sub.add_parser("bench", help="run benchmark families, write CSV")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--n", required=True, metavar="LO..HI:STEP", help="sizes to run")
    p.add_argument(
        "--impls",
        default="cd(2),cd(3),cd(4),reified",
        help="comma-separated: cd, cd(<k>), reified",
    )
    p.add_argument("--timeout", type=float, default=60.0, metavar="SECONDS")
    p.add_argument("--out", default="bench.csv", help="CSV output path")
    p.add_argument("--seed", type=int, default=None, help="defaults to ITE_SEED or 0")
    p.add_argument(
        "--figures",
        action="store_true",
        help="also render PNG charts next to the CSV",
    )

    p = sub.add_parser(
        "oracle-check",
        help="cross-check the solver against brute-force enumeration",
    )
    p.add_argument(
        "--family",
        default="random",
        help="random, a benchmark family name, or a .ite file",
    )
    p.add_argument(
        "--n", type=int, default=4, help="max variables (random) or instance size"
    )
    p.add_argument("--seed", type=int, default=None, help="defaults to ITE_SEED or 0")
    p.add_argument("--cases", type=int, default=100, help="random cases to draw")

    p = sub.add_parser(
        "maximal-k",
        help="find the depth budget where pruning stops improving",
    )
    p.add_argument("file", help="query file")
    p.add_argument("--kmax", type=int, default=8)

    args = parser.parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args)
    if args.command == "bench":
        return cmd_bench(args, parser)
    if args.command == "oracle-check":
        return cmd_oracle_check(args, parser)
    return cmd_maximal_k(args)


if __name__ == "__main__":
    sys.exit(main())
