"""Command-line front end.

Exit codes: 0 the property holds, 1 it fails, 2 undecided because a search
cap was hit, 3 bad input, 4 internal inconsistency (a bug).
"""

import argparse
import json
import re
import sys
from fractions import Fraction

from . import io
from .bernoulli import (
    DEFAULT_MAX_COPIES,
    DEFAULT_MAX_LEAVES,
    BernoulliModel,
    as_bernoulli,
    bernoulli_transform,
    check_honest,
    extract_mgd,
    induce_bernoulli,
    robustness_probe,
)
from .car import (
    DEFAULT_MAX_COVERS,
    CoarseningVariable,
    check_d_car,
    check_d_ccar,
    check_g_car,
    check_g_ccar,
    check_invertible,
    check_m_mar,
    check_m_mcar,
    ignorability_report,
    induced_distribution,
)
from .core import CoarseDistribution, StateSubset, format_rational, naive_condition, update_posterior
from .errors import CarError, InputError, InternalInconsistency, LimitExceeded
from .hypergraph import (
    MAX_ENUM_EDGES,
    MAX_ENUM_NODES,
    SupportHypergraph,
    canonical_masks,
    check_car_compatible,
    compatible_catalogue,
    enumerate_hypergraphs,
    from_distribution,
    from_masks,
    has_nested_masks,
    nested_edges_screen,
    realize,
)
from .procedural import (
    MgdModel,
    PtModel,
    RmcModel,
    TabularSequentialModel,
    build_direct,
    induce,
    mgd_as_tabular,
    rmc_as_tabular,
)
from .simulation import compare_empirical, simulate

EXIT_HOLDS, EXIT_FAILS, EXIT_UNDECIDED, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3, 4


# -- reports -----------------------------------------------------------------


def plain(value):
    """Convert library values to JSON-friendly ones with exact rationals as strings."""
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, StateSubset):
        return str(value)
    if isinstance(value, float):
        return round(value, 6)
    if isinstance(value, dict):
        return {str(plain(k)): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    return value


class Report:
    def __init__(self, command: str, argv):
        self.command = command
        self.argv = list(argv)
        self.verdict = ""
        self.exit_code = EXIT_HOLDS
        self.sections = {}
        self.seed = None
        self.files = []

    def set(self, verdict, code):
        self.verdict, self.exit_code = verdict, code

    def add(self, name, value):
        self.sections[name] = plain(value)

    def as_dict(self) -> dict:
        doc = {"command": self.command, "verdict": self.verdict}
        for key in ("witness", "certificate"):
            if key in self.sections:
                doc[key] = self.sections[key]
        doc["details"] = {k: v for k, v in self.sections.items() if k not in ("witness", "certificate")}
        if self.seed is not None:
            doc["seed"] = self.seed
        doc["exit_code"] = self.exit_code
        doc["provenance"] = self._provenance()
        return doc

    def _provenance(self):
        prov = {"files": self.files, "command": "carcheck " + " ".join(self.argv)}
        if self.seed is not None:
            prov["seed"] = self.seed
        return prov

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return json.dumps(self.as_dict(), indent=2) + "\n"
        lines = [f"verdict: {self.verdict}", f"command: {self.command}"]
        for name, value in self.sections.items():
            lines.append(f"{name}:")
            lines.extend(_text(value, 1))
        lines.append("provenance:")
        lines.extend(_text(self._provenance(), 1))
        return "\n".join(lines) + "\n"


def _text(value, depth):
    pad = "  " * depth
    if isinstance(value, dict):
        out = []
        for k, v in value.items():
            if isinstance(v, (dict, list)) and v:
                out.append(f"{pad}{k}:")
                out.extend(_text(v, depth + 1))
            else:
                out.append(f"{pad}{k}: {_scalar(v)}")
        return out
    if isinstance(value, list):
        out = []
        for v in value:
            if isinstance(v, (dict, list)) and v:
                sub = _text(v, depth + 1)
                out.append(f"{pad}- {sub[0].strip()}")
                out.extend(sub[1:])
            else:
                out.append(f"{pad}- {_scalar(v)}")
        return out
    return [f"{pad}{_scalar(value)}"]


def _scalar(v):
    if isinstance(v, bool):
        return "yes" if v else "no"
    if v is None:
        return "-"
    if isinstance(v, (list, dict)):
        return "[]" if isinstance(v, list) else "{}"
    return str(v)


# -- helpers -----------------------------------------------------------------


def _load(report, path):
    report.files.append(str(path))
    return io.load_model(path)


def _distribution(model) -> CoarseDistribution:
    if isinstance(model, CoarseDistribution):
        return model
    if isinstance(model, CoarseningVariable):
        return induced_distribution(model)
    if isinstance(model, SupportHypergraph):
        raise InputError("a hypergraph is not a distribution; use 'hypergraph realize'")
    if isinstance(model, BernoulliModel):
        return induce_bernoulli(model)
    return induce(model)


def _cond_table(p: CoarseDistribution) -> dict:
    return {f"P(Y={u} | X={x})": v for (x, u), v in p.restricted().cond.items()}


def _dist_section(p: CoarseDistribution) -> dict:
    return {"px": p.px, "cond": _cond_table(p)}


def _split_labels(text: str) -> list:
    text = text.strip()
    if text.startswith("["):
        return [str(v) for v in json.loads(text)]
    text = text.strip("{}")
    return re.findall(r"\([^)]*\)|[^,\s]+", text)


def _tabular(model, args):
    if isinstance(model, TabularSequentialModel):
        return model
    if isinstance(model, MgdModel):
        return mgd_as_tabular(model)
    if isinstance(model, RmcModel):
        return rmc_as_tabular(model)
    if isinstance(model, CoarseDistribution):
        return build_direct(model)
    raise InputError(f"cannot run a transform on a {type(model).__name__}")


def _bernoulli(model, args) -> BernoulliModel:
    if isinstance(model, BernoulliModel):
        model.max_leaves = args.max_gamma
        return model
    if isinstance(model, CoarseDistribution):
        model = _tabular(model, args)
    return as_bernoulli(model, args.max_gamma, args.max_states)


# -- commands ----------------------------------------------------------------


def cmd_check(args, report):
    prop = args.property
    model = _load(report, args.file)
    if prop in ("car", "ccar"):
        p = _distribution(model)
        report.add("distribution", _dist_section(p))
        if prop == "car":
            v = check_d_car(p)
            if v.holds:
                report.set("HOLDS: d-car", EXIT_HOLDS)
                report.add("witness", {str(u): nu for u, nu in v.witness.items()})
            else:
                u, x, x2 = v.violation
                report.set("FAILS: not d-car", EXIT_FAILS)
                report.add("violation", {"U": u, f"P(Y={u} | X={x})": p.p_cond(x, u),
                                         f"P(Y={u} | X={x2})": p.p_cond(x2, u)})
            ign = ignorability_report(p)
            report.add("ignorability", {"naive conditioning valid": ign.ignorable, "max total variation gap": ign.max_gap,
                                        "worst observation": ign.gap_at})
            return
        v = check_d_ccar(p, max_covers=args.max_covers)
        if v.holds:
            report.set("HOLDS: d-ccar", EXIT_HOLDS)
            report.add("witness", [{"blocks": [list(u) for u in blocks], "lambda": lam} for blocks, lam in v.witness])
            report.add("cover count", v.cover_count)
        else:
            report.set(f"FAILS: not d-ccar ({v.reason})", EXIT_FAILS)
            info = {"reason": v.reason, "cover count": v.cover_count}
            if v.car.violation:
                u, x, x2 = v.car.violation
                info["car violation"] = {"U": u, "x": x, "x'": x2}
            report.add("explanation", info)
            if v.certificate is not None:
                report.add("certificate", list(v.certificate))
        return
    if not isinstance(model, CoarseningVariable):
        raise InputError(f"'check {prop}' needs a coarsening_variable file")
    checker = {"gcar": check_g_car, "gccar": check_g_ccar, "mar": check_m_mar, "mcar": check_m_mcar}[prop]
    label = {"gcar": "G-car", "gccar": "G-ccar", "mar": "M-mar", "mcar": "M-mcar"}[prop]
    v = checker(model)
    inv, h = check_invertible(model)
    if v.holds:
        report.set(f"HOLDS: {label}", EXIT_HOLDS)
        report.add("witness", {(f"{k[0]} / {k[1]}" if isinstance(k, tuple) else k): val for k, val in v.witness.items()})
    else:
        report.set(f"FAILS: not {label}", EXIT_FAILS)
        if prop in ("gcar", "mar"):
            u, g, x, x2 = v.violation
            report.add("violation", {"U": u, "g": g, f"P(G={g} | X={x})": model.p_g_given_x(g, x),
                                     f"P(G={g} | X={x2})": model.p_g_given_x(g, x2)})
        else:
            g, x, x2 = v.violation
            report.add("violation", {"g": g, f"P(G={g} | X={x})": model.p_g_given_x(g, x),
                                     f"P(G={g} | X={x2})": model.p_g_given_x(g, x2)})
    report.add("invertible", {"invertible": inv, "h": h})
    report.add("induced d-car", check_d_car(induced_distribution(model)).holds)


def _hypergraph_of(model) -> SupportHypergraph:
    if isinstance(model, SupportHypergraph):
        return model
    return from_distribution(_distribution(model))


def _hg_section(h: SupportHypergraph) -> dict:
    return {"edges": {x: [h.node_labels[j] for j in sorted(h.node_set(x))] for x in h.edges}}


def cmd_hypergraph(args, report):
    if args.action == "enumerate":
        if args.nodes > MAX_ENUM_NODES or args.edges > MAX_ENUM_EDGES:
            raise LimitExceeded(f"enumeration is limited to {MAX_ENUM_NODES} nodes and {MAX_ENUM_EDGES} edges")
        rows = []
        for h in enumerate_hypergraphs(args.nodes, args.edges):
            verdict = check_car_compatible(h)
            if args.compatible_only and not verdict.compatible:
                continue
            rows.append({"nodes": len(h.extents), "edges": [sorted(h.node_labels[j] for j in h.node_set(x)) for x in h.edges],
                         "compatible": verdict.compatible})
        report.set(f"ENUMERATED: {len(rows)} hypergraphs", EXIT_HOLDS)
        report.add("hypergraphs", rows)
        return
    h = _hypergraph_of(_load(report, args.file))
    report.add("hypergraph", _hg_section(h))
    if args.action == "realize":
        p = realize(h)
        report.set("REALIZED", EXIT_HOLDS)
        report.add("witness", io.dump_distribution(p))
        return
    if args.action == "screen":
        pair = nested_edges_screen(h)
        if pair:
            report.set("INCOMPATIBLE: nested edges", EXIT_FAILS)
            report.add("nested pair", {"inner": pair[0], "outer": pair[1]})
        else:
            report.set("NO NESTED EDGES (screen inconclusive)", EXIT_HOLDS)
        return
    v = check_car_compatible(h)
    if v.compatible:
        report.set("COMPATIBLE", EXIT_HOLDS)
        report.add("witness", v.nu)
    else:
        report.set("INCOMPATIBLE", EXIT_FAILS)
        report.add("certificate", list(v.certificate))
        xs, xs2 = v.sequences
        report.add("sequences", {"x": list(xs), "x'": list(xs2), "lengths": [len(xs), len(xs2)], "violated": v.violated})
    if v.nested_pair:
        report.add("nested pair", {"inner": v.nested_pair[0], "outer": v.nested_pair[1]})


def cmd_induce(args, report):
    p = _distribution(_load(report, args.file))
    report.set("INDUCED", EXIT_HOLDS)
    report.add("witness", io.dump_distribution(p))
    report.add("d-car", check_d_car(p).holds)


def cmd_simulate(args, report):
    model = _load(report, args.file)
    if isinstance(model, (CoarseDistribution, SupportHypergraph, CoarseningVariable)):
        raise InputError("simulate needs a procedural model file")
    report.seed = args.seed
    exact = _distribution(model)
    table = simulate(model, args.n, args.seed)
    cmp = compare_empirical(exact, table, args.tolerance)
    report.set(f"{'CONSISTENT' if cmp.passed else 'INCONSISTENT'}: max gap {cmp.gap:.6f} (tolerance {args.tolerance})",
               EXIT_HOLDS if cmp.passed else EXIT_FAILS)
    report.add("counts", {f"({x}, {u})": c for (x, u), c in table.counts.items()})
    report.add("comparison", {"gap": cmp.gap, "at": list(map(str, cmp.at)) if cmp.at else None,
                              "samples": args.n, "aborted": table.aborted})


def cmd_transform(args, report):
    model = _load(report, args.file)
    m = _tabular(model, args)
    b = bernoulli_transform(m, args.max_gamma, args.max_states)
    same = induce_bernoulli(b) == _distribution(m)
    if not same:
        raise InternalInconsistency("transform changed the induced distribution")
    report.set(f"TRANSFORMED: {len(b)} independent components", EXIT_HOLDS)
    report.add("components", {name: dict(mg) for name, mg in zip(b.names, b.marginals)})
    report.add("distribution preserved", same)


def cmd_honesty(args, report):
    b = _bernoulli(_load(report, args.file), args)
    v = check_honest(b)
    if v.honest:
        report.set("HONEST", EXIT_HOLDS)
        e = extract_mgd(b)
        report.add("witness", [{"blocks": [list(u) for u in part], "lambda": lam}
                               for part, lam in zip(e.partitions, e.lambdas)])
    else:
        x, x2, u, g = v.violation
        report.set("NOT HONEST", EXIT_FAILS)
        report.add("violation", {"x": x, "x'": x2, "U": u, "g": dict(zip(b.names, g)),
                                 f"f({x}, g)": b.evaluate(x, g), f"f({x2}, g)": b.evaluate(x2, g)})


def cmd_probe(args, report):
    model = _load(report, args.file)
    if not isinstance(model, (PtModel, MgdModel)):
        model = _bernoulli(model, args)
    report.seed = args.seed
    v = robustness_probe(model, args.mode, args.trials, args.seed)
    if v.robust:
        report.set(f"ROBUST SO FAR: {v.checked} perturbations kept {args.mode}", EXIT_HOLDS)
    else:
        report.set(f"BROKEN: not {args.mode} after perturbing {v.component}", EXIT_FAILS)
        report.add("witness", {"stage": v.stage, "component": v.component,
                               "new value": v.perturbation, "checked": v.checked})
        report.add("perturbed distribution", _dist_section(v.induced))


def cmd_update(args, report):
    p = _distribution(_load(report, args.file))
    u = p.space.subset(_split_labels(args.observe))
    post = update_posterior(p, u)
    naive = naive_condition(p, u)
    valid = post == naive
    report.set(f"{'VALID' if valid else 'INVALID'}: naive conditioning on {u}", EXIT_HOLDS if valid else EXIT_FAILS)
    report.add("posterior", {f"P(X={x} | Y={u})": v for x, v in post.items()})
    report.add("naive", {f"P(X={x} | X in {u})": v for x, v in naive.items()})
    report.add("d-car", check_d_car(p).holds)


def cmd_demo(args, report):
    getattr(sys.modules[__name__], f"_demo_{args.name}")(args, report)


def _demo_monty(args, report):
    rows = {}
    u_label = ["A", "C"]
    for name in ("monty_2_16", "monty_2_17"):
        p = _load(report, name)
        u = p.space.subset(u_label)
        post, naive = update_posterior(p, u), naive_condition(p, u)
        rows[name] = {
            **{f"P(X={x} | Y={u})": post[x] for x in u},
            **{f"P(X={x} | X in {u})": naive[x] for x in u},
            "d-car": check_d_car(p).holds,
            "verdict": "conditioning valid" if post == naive else "conditioning invalid",
        }
    report.set("DEMO: Monty Hall, host rules 2.16 vs 2.17", EXIT_HOLDS)
    report.add("observation {A,C}", rows)


def _demo_tests(args, report):
    p = _load(report, "tests_2_2")
    m = _load(report, "m_2_1")
    g1 = _load(report, "g1_2_10")
    g2 = _load(report, "g2_2_10")
    ccar = check_d_ccar(p)
    report.set("DEMO: two medical tests", EXIT_HOLDS)
    report.add("distribution", _dist_section(p))
    report.add("verdicts", {
        "d-car": check_d_car(p).holds,
        "d-ccar": ccar.holds,
        "M-mar": check_m_mar(m).holds,
        "M-mcar": check_m_mcar(m).holds,
        "G1 G-ccar": check_g_ccar(g1).holds,
        "G2 G-car": check_g_car(g2).holds,
        "M invertible": check_invertible(m)[0],
        "G2 invertible": check_invertible(g2)[0],
    })
    report.add("witness", [{"blocks": [list(u) for u in b], "lambda": lam} for b, lam in ccar.witness])


def _demo_figure3(args, report):
    args.file = "figure3"
    args.action = "check"
    cmd_hypergraph(args, report)
    report.verdict = "DEMO: " + report.verdict
    report.exit_code = EXIT_HOLDS


def _demo_figure4(args, report):
    catalogue = compatible_catalogue(3)
    known = set(catalogue)
    closure = True
    for _, masks in catalogue:
        for t in range(1, 8):
            if t in masks:
                continue
            bigger = tuple(sorted(masks + (t,)))
            if canonical_masks(bigger, 3) not in known and not has_nested_masks(bigger):
                closure = False
    items = []
    for _, masks in catalogue:
        h = from_masks(masks, 3)
        items.append({"edges": [sorted(h.node_labels[j] for j in h.node_set(x)) for x in h.edges],
                      "nu": check_car_compatible(h).nu})
    report.set(f"DEMO: {len(catalogue)} car-compatible hypergraphs with three nodes", EXIT_HOLDS)
    report.add("catalogue", items)
    report.add("closure under adding an edge type", closure)


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--max-states", type=int, default=DEFAULT_MAX_COPIES,
                        help="cap on program states created by the Bernoulli transform")
    common.add_argument("--max-covers", type=int, default=DEFAULT_MAX_COVERS, help="cap on enumerated exact covers")
    common.add_argument("--max-gamma", type=int, default=DEFAULT_MAX_LEAVES, help="cap on enumerated G outcomes")

    parser = argparse.ArgumentParser(prog="carcheck", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="decide car-type properties")
    p.add_argument("property", choices=("car", "ccar", "gcar", "gccar", "mar", "mcar"))
    p.add_argument("file")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("hypergraph", parents=[common], help="support hypergraph tools")
    p.add_argument("action", choices=("check", "realize", "screen", "enumerate"))
    p.add_argument("file", nargs="?")
    p.add_argument("--nodes", type=int, default=3)
    p.add_argument("--edges", type=int, default=MAX_ENUM_EDGES)
    p.add_argument("--compatible-only", action="store_true")
    p.set_defaults(run=cmd_hypergraph)

    p = sub.add_parser("induce", parents=[common], help="exact induced distribution of a model")
    p.add_argument("file")
    p.set_defaults(run=cmd_induce)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo run against exact induction")
    p.add_argument("file")
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tolerance", type=float, default=0.01)
    p.set_defaults(run=cmd_simulate)

    p = sub.add_parser("transform", parents=[common], help="model transforms")
    p.add_argument("target", choices=("bernoulli",))
    p.add_argument("file")
    p.set_defaults(run=cmd_transform)

    p = sub.add_parser("honesty", parents=[common], help="honesty of the Bernoulli form")
    p.add_argument("file")
    p.set_defaults(run=cmd_honesty)

    p = sub.add_parser("probe", parents=[common], help="robustness probe")
    p.add_argument("file")
    p.add_argument("--mode", choices=("car", "ccar"), default="car")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(run=cmd_probe)

    p = sub.add_parser("update", parents=[common], help="posterior vs naive conditioning")
    p.add_argument("file")
    p.add_argument("--observe", required=True, help='observed set, e.g. "A,C" or \'["(n,n)","(n,p)"]\'')
    p.set_defaults(run=cmd_update)

    p = sub.add_parser("demo", parents=[common], help="built-in demonstrations")
    p.add_argument("name", choices=("monty", "tests", "figure3", "figure4"))
    p.set_defaults(run=cmd_demo)
    return parser


def run(argv=None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_HOLDS
    name = args.command
    for attr in ("property", "action", "target", "name"):
        if hasattr(args, attr):
            name += " " + getattr(args, attr)
    report = Report(name, argv)
    try:
        if args.command == "hypergraph" and args.action != "enumerate" and not args.file:
            raise InputError("a file is required")
        args.run(args, report)
    except LimitExceeded as e:
        report.set(f"UNDECIDED: {e}", EXIT_UNDECIDED)
    except InternalInconsistency as e:
        report.set(f"INTERNAL ERROR: {e}", EXIT_INTERNAL)
    except (InputError, json.JSONDecodeError) as e:
        report.set(f"INPUT ERROR: {type(e).__name__}: {e}", EXIT_INPUT)
    except CarError as e:  # pragma: no cover - every CarError is one of the above
        report.set(f"ERROR: {e}", EXIT_INPUT)
    out.write(report.render(args.format))
    return report.exit_code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
