"""JSON model files.

Every file is one object with a ``kind`` field. Probabilities are strings
``"p/q"`` or ``"p"`` (plain integers are accepted too); subsets are lists of
state labels. Bundled example files can be referred to by bare name, e.g.
``monty_2_16``.
"""

import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .car import CoarseningVariable, missingness_coarsening_variable
from .core import (
    MISSING,
    CoarseDistribution,
    ProductSpace,
    StateSpace,
    format_rational,
    parse_rational,
    validate_distribution,
)
from .bernoulli import BernoulliModel
from .errors import CarError, InputError, ParseError, ValidationError
from .hypergraph import SupportHypergraph, validate
from .procedural import (
    FRow,
    KernelRow,
    MgdModel,
    PtModel,
    RmcModel,
    TabularSequentialModel,
    UniformNoiseModel,
    table_f,
    table_kernel,
)

KINDS = ("distribution", "hypergraph", "coarsening_variable", "mgd", "rmc", "noise", "pt", "tabular", "bernoulli")


def bundled_names() -> list:
    return sorted(p.name[:-5] for p in resources.files("carcheck.data").iterdir() if p.name.endswith(".json"))


def resolve(path) -> Path:
    """An existing path, else the bundled file with the same base name."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    candidate = resources.files("carcheck.data").joinpath(f"{name}.json")
    if candidate.is_file():
        return Path(str(candidate))
    raise ParseError(f"no such file or bundled example: {path}")


def load_document(path) -> dict:
    p = resolve(path)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(f"{p}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict) or doc.get("kind") not in KINDS:
        raise ParseError(f"{p}: expected an object whose 'kind' is one of {', '.join(KINDS)}")
    return doc


def load_model(path):
    doc = load_document(path)
    try:
        return parse_model(doc)
    except ValidationError as e:
        raise ValidationError(f"{path}: {e}", e.cause) from e


# -- parsing -----------------------------------------------------------------


def _rat(value, where) -> Fraction:
    try:
        return parse_rational(value)
    except InputError as e:
        raise ValidationError(f"{where}: {e}", e) from None


def _get(doc, key, where):
    try:
        return doc[key]
    except (KeyError, TypeError):
        raise ParseError(f"{where}: missing field '{key}'") from None


def _space(doc):
    if "shape" in doc:
        product = ProductSpace(tuple(tuple(v) for v in doc["shape"]))
        return product.space, product
    return StateSpace(tuple(_get(doc, "states", "document"))), None


def _px(doc, space) -> dict:
    raw = _get(doc, "px", "document")
    out = {}
    for x, v in raw.items():
        if x not in space:
            raise ValidationError(f"px: unknown state {x!r}")
        out[x] = _rat(v, f"px[{x}]")
    return out


def _sub(space, labels, where):
    try:
        return space.subset(labels)
    except InputError as e:
        raise ValidationError(f"{where}: {e}", e) from None


def _dist(raw, where) -> dict:
    return {str(k): _rat(v, f"{where}[{k}]") for k, v in raw.items()}


def parse_model(doc: dict):
    kind = doc.get("kind")
    try:
        return _PARSERS[kind](doc)
    except (ValidationError, ParseError):
        raise
    except CarError as e:
        raise ValidationError(f"{kind}: {type(e).__name__}: {e}", e) from e


def _parse_distribution(doc):
    space, _ = _space(doc)
    px = _px(doc, space)
    cond = {}
    for i, row in enumerate(_get(doc, "cond", "document")):
        where = f"cond[{i}]"
        x = _get(row, "x", where)
        u = _sub(space, _get(row, "U", where), where)
        cond[(x, u)] = cond.get((x, u), Fraction(0)) + _rat(_get(row, "p", where), f"{where}.p")
    p = CoarseDistribution(space, px, cond)
    validate_distribution(p)
    return p


def _parse_hypergraph(doc):
    edges = [str(e) for e in _get(doc, "edges", "document")]
    nodes = _get(doc, "nodes", "document")
    states = list(doc.get("states", []))
    for e in edges:
        if e not in states:
            states.append(e)
    for n in nodes:
        for s in _get(n, "extent", "node"):
            if s not in states:
                states.append(s)
    space = StateSpace(tuple(states))
    h = SupportHypergraph(space, [(n["label"], space.subset(n["extent"])) for n in nodes], edges)
    validate(h)
    return h


def _kernel_rows(raw, where):
    rows = []
    for i, row in enumerate(raw):
        w = f"{where}[{i}]"
        rows.append(KernelRow(str(row.get("x", MISSING)), tuple(str(g) for g in row.get("given", [])),
                              _dist(_get(row, "dist", w), f"{w}.dist")))
    return rows


def _f_rows(space, raw, single=False):
    rows = []
    for i, row in enumerate(raw):
        w = f"f[{i}]"
        g = _get(row, "g", w)
        g = (g,) if single and isinstance(g, str) else tuple(g)
        rows.append(FRow(str(row.get("x", MISSING)), tuple(str(v) for v in g), _sub(space, _get(row, "U", w), w)))
    return rows


def _parse_coarsening_variable(doc):
    space, product = _space(doc)
    px = _px(doc, space)
    kernel = {}
    rows = _kernel_rows(_get(doc, "kernel", "document"), "kernel")
    for x in space.states:
        match = next((r for r in rows if r.x in (x, MISSING)), None)
        if match is not None:
            kernel[x] = match.dist
    if product is not None and "f" not in doc:
        return missingness_coarsening_variable(product).with_kernel(px, kernel)
    gamma = [str(g) for g in _get(doc, "gamma", "document")]
    f_of = table_f(_f_rows(space, _get(doc, "f", "document"), single=True))
    f = {(x, g): f_of(x, (g,)) for x in space.states for g in gamma}
    return CoarseningVariable.from_kernel(space, gamma, f, px, kernel)


def _parse_mgd(doc):
    space, _ = _space(doc)
    parts, lams = [], []
    for i, part in enumerate(_get(doc, "partitions", "document")):
        w = f"partitions[{i}]"
        lams.append(_rat(_get(part, "lambda", w), f"{w}.lambda"))
        parts.append([_sub(space, b, w) for b in _get(part, "blocks", w)])
    return MgdModel(space, parts, lams, _px(doc, space))


def _parse_rmc(doc):
    space, _ = _space(doc)
    tree = {}
    for i, node in enumerate(_get(doc, "tree", "document")):
        w = f"tree[{i}]"
        a = _sub(space, _get(node, "set", w), w)
        splits = [(_sub(space, _get(s, "H", w), w), _rat(_get(s, "p", w), f"{w}.p")) for s in node.get("splits", [])]
        tree[a] = (_rat(node.get("stop", "0"), f"{w}.stop"), splits)
    return RmcModel(space, _px(doc, space), tree)


def _parse_noise(doc):
    space, _ = _space(doc)
    steps = [_rat(p, f"steps[{i}]") for i, p in enumerate(_get(doc, "steps", "document"))]
    h = doc.get("h")
    if h is not None:
        h = [_dist(d, f"h[{i}]") for i, d in enumerate(h)]
    return UniformNoiseModel(space, _px(doc, space), steps, h)


def _proposal(space, raw, where):
    return {_sub(space, _get(r, "U", where), where): _rat(_get(r, "p", where), f"{where}.p") for r in raw}


def _parse_pt(doc):
    space, _ = _space(doc)
    proposal = _proposal(space, _get(doc, "proposal", "document"), "proposal")
    prefix = [_proposal(space, q, f"prefix[{i}]") for i, q in enumerate(doc.get("prefix", []))]
    return PtModel(space, _px(doc, space), proposal, prefix)


def _parse_tabular(doc):
    space, _ = _space(doc)
    gammas = [tuple(str(g) for g in gam) for gam in _get(doc, "gammas", "document")]
    kernels = [_kernel_rows(k, f"kernels[{i}]") for i, k in enumerate(_get(doc, "kernels", "document"))]
    if len(kernels) != len(gammas):
        raise ValidationError("need one kernel table per G variable")
    f = table_f(_f_rows(space, _get(doc, "f", "document")))
    return TabularSequentialModel(space, _px(doc, space), gammas, table_kernel(kernels), f)


def _parse_bernoulli(doc):
    space, _ = _space(doc)
    gammas = [tuple(str(g) for g in gam) for gam in _get(doc, "gammas", "document")]
    marginals = [_dist(m, f"marginals[{i}]") for i, m in enumerate(_get(doc, "marginals", "document"))]
    f_of = table_f(_f_rows(space, _get(doc, "f", "document")))
    k = len(gammas)
    return BernoulliModel(space, _px(doc, space), gammas, marginals,
                          lambda x, g: f_of(x, tuple(g[i] for i in range(k))), doc.get("names"))


_PARSERS = {
    "distribution": _parse_distribution,
    "hypergraph": _parse_hypergraph,
    "coarsening_variable": _parse_coarsening_variable,
    "mgd": _parse_mgd,
    "rmc": _parse_rmc,
    "noise": _parse_noise,
    "pt": _parse_pt,
    "tabular": _parse_tabular,
    "bernoulli": _parse_bernoulli,
}


# -- writing -----------------------------------------------------------------


def dump_distribution(p: CoarseDistribution) -> dict:
    return {
        "kind": "distribution",
        "states": list(p.space.states),
        "px": {x: format_rational(v) for x, v in p.px.items()},
        "cond": [{"x": x, "U": list(u), "p": format_rational(v)} for (x, u), v in p.restricted().cond.items()],
    }


def dump_hypergraph(h: SupportHypergraph) -> dict:
    return {
        "kind": "hypergraph",
        "states": list(h.space.states),
        "edges": list(h.edges),
        "nodes": [{"label": lab, "extent": list(u)} for lab, u in zip(h.node_labels, h.extents)],
    }


def dump_mgd(m: MgdModel) -> dict:
    return {
        "kind": "mgd",
        "states": list(m.space.states),
        "px": {x: format_rational(v) for x, v in m.px.items()},
        "partitions": [
            {"lambda": format_rational(lam), "blocks": [list(u) for u in part]}
            for part, lam in zip(m.partitions, m.lambdas)
        ],
    }
