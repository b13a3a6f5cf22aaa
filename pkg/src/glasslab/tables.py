"""Published regime tables, transcribed as data, and a comparison against classify().

Each row is (condition, alpha case, gamma, dominant clusters). Conditions and
gamma are small arithmetic expressions in p (pure) or pe, po (mixed) and
alpha; clusters use the notation ``a*q,...;l=expr`` with q one of p, pe, po.
The transcription is kept independent of the classifier on purpose.
"""

import ast
import csv
import io
import math
import operator
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from .census import ClusterStructure
from .regimes import HALF, as_alpha, classify, model_orders

ALPHA_CASES = ("gt_alpha_c", "eq_alpha_c", "between", "eq_half", "below_half")

PURE_ROWS = [
    ("p % 2 == 0", "gt_alpha_c", "3*(p-2)/2", "3*p;l=0"),
    ("p % 2 == 1", "gt_alpha_c", "2*(p-2)", "4*p;l=0"),
    ("p % 2 == 0", "eq_alpha_c", "3*(p-2)/2", "3*p;l=0 | 2*p;l=2"),
    ("p % 2 == 1", "eq_alpha_c", "2*(p-2)", "4*p;l=0 | 2*p;l=2 | 3*p;l=1"),
    ("p >= 3", "between", "p+4*alpha-3", "2*p;l=2"),
    ("p >= 3", "eq_half", "p-1", "2*p;l=2 | 1*p;l=p"),
    ("p >= 3", "below_half", "2*alpha*p-1", "1*p;l=p"),
]

MIXED_ROWS = [
    ("pe < po", "gt_alpha_c", "3*(pe-2)/2", "3*pe;l=0"),
    ("po < pe < 2*(po-1)", "gt_alpha_c", "po-3+pe/2", "1*pe,2*po;l=0"),
    ("pe == 2*(po-1)", "gt_alpha_c", "po-3+pe/2", "1*pe,2*po;l=0 | 4*po;l=0"),
    ("pe >= 2*po", "gt_alpha_c", "2*(po-2)", "4*po;l=0"),
    ("pe < po-1", "eq_alpha_c", "3*(pe-2)/2", "3*pe;l=0 | 2*pe;l=2"),
    ("pe == po-1", "eq_alpha_c", "3*(pe-2)/2", "3*pe;l=0 | 1*pe,1*po;l=1"),
    ("pe == po+1", "eq_alpha_c", "po-3+pe/2", "1*pe,2*po;l=0 | 1*pe,1*po;l=1"),
    ("po+1 < pe < 2*(po-1)", "eq_alpha_c", "po-3+pe/2", "1*pe,2*po;l=0 | 2*po;l=2"),
    ("pe == 2*(po-1)", "eq_alpha_c", "po-3+pe/2", "1*pe,2*po;l=0 | 4*po;l=0 | 2*po;l=2 | 3*po;l=1"),
    ("pe >= 2*po", "eq_alpha_c", "2*(po-2)", "4*po;l=0 | 2*po;l=2 | 3*po;l=1"),
    ("pe < po-1", "between", "pe-3+4*alpha", "2*pe;l=2"),
    ("pe == po-1", "between", "pe-2+2*alpha", "1*pe,1*po;l=1"),
    ("pe == po+1", "between", "po-3+4*alpha", "1*pe,1*po;l=1"),
    ("pe > po+1", "between", "po-3+4*alpha", "2*po;l=2"),
    ("pe < po-1", "eq_half", "pe-1", "2*pe;l=2 | 1*pe;l=pe"),
    ("pe == po-1", "eq_half", "pe-1", "1*pe,1*po;l=1 | 1*pe;l=pe"),
    ("pe == po+1", "eq_half", "po-1", "1*pe,1*po;l=1 | 1*po;l=po"),
    ("pe > po+1", "eq_half", "po-1", "2*po;l=2 | 1*po;l=po"),
    ("pe < po", "below_half", "2*alpha*pe-1", "1*pe;l=pe"),
    ("pe > po", "below_half", "2*alpha*po-1", "1*po;l=po"),
]

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Mod: operator.mod}
_CMPOPS = {ast.Lt: operator.lt, ast.LtE: operator.le, ast.Gt: operator.gt,
           ast.GtE: operator.ge, ast.Eq: operator.eq}


def evaluate(expr, env):
    """Evaluate a small arithmetic/comparison expression over Fractions."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return Fraction(node.value)
        if isinstance(node, ast.Name):
            return env[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if isinstance(node, ast.Compare):
            left = ev(node.left)
            for op, comp in zip(node.ops, node.comparators):
                right = ev(comp)
                if not _CMPOPS[type(op)](left, right):
                    return False
                left = right
            return True
        raise ValueError(f"unsupported expression {expr!r}")

    return ev(ast.parse(expr, mode="eval"))


def parse_clusters(text, env):
    out = []
    for item in text.split("|"):
        body, ell = item.strip().split(";l=")
        edges = []
        for tok in body.split(","):
            a, q = tok.split("*")
            edges.append((int(a), int(env[q.strip()])))
        out.append(ClusterStructure(edges, int(evaluate(ell, env))))
    return out


def table_alpha_c(env):
    """Transcribed closed-form alpha_c."""
    if "p" in env:
        p = env["p"]
        return p / 8 if p % 2 == 0 else (p - 1) / 4
    pe, po = env["pe"], env["po"]
    if pe < po - 1:
        return pe / 8
    if pe == po - 1:
        return (pe - 2) / 4
    if po < pe < 2 * (po - 1):
        return pe / 8
    return (po - 1) / 4


def alpha_cases(alpha, alpha_c):
    cases = set()
    if alpha == math.inf or alpha > alpha_c:
        cases.add("gt_alpha_c")
    if alpha == alpha_c:
        cases.add("eq_alpha_c")
    if alpha != math.inf and HALF < alpha < alpha_c:
        cases.add("between")
    if alpha == HALF:
        cases.add("eq_half")
    if alpha != math.inf and alpha < HALF:
        cases.add("below_half")
    return cases


@dataclass(frozen=True)
class TableEntry:
    gammas: tuple
    dominant: frozenset
    rows: tuple


def table_lookup(orders, alpha):
    """Transcribed (gamma set, dominant union) for model orders and alpha.

    Args:
        orders: (p,) for a pure model or (pe, po).
        alpha: field exponent.
    """
    alpha = as_alpha(alpha)
    if len(orders) == 1:
        env, rows = {"p": Fraction(orders[0])}, PURE_ROWS
    else:
        pe, po = sorted(orders, key=lambda q: q % 2)
        env, rows = {"pe": Fraction(pe), "po": Fraction(po)}, MIXED_ROWS
    ac = table_alpha_c(env)
    cases = alpha_cases(alpha, ac)
    env = dict(env, alpha=alpha if alpha != math.inf else Fraction(0))
    gammas, dominant, used = set(), set(), []
    for i, (cond, case, gamma, clusters) in enumerate(rows):
        if case in cases and evaluate(cond, env):
            gammas.add(evaluate(gamma, env))
            dominant.update(parse_clusters(clusters, env))
            used.append(i)
    return TableEntry(tuple(sorted(gammas)), frozenset(dominant), tuple(used))


def probe_alphas(alpha_c):
    """One alpha inside each regime plus both thresholds and infinity."""
    alpha_c = Fraction(alpha_c)
    pts = [math.inf, alpha_c + 1, alpha_c, HALF, Fraction(1, 4), Fraction(3, 8)]
    if alpha_c > HALF:
        pts.append((alpha_c + HALF) / 2)
    return list(dict.fromkeys(pts))


@dataclass(frozen=True)
class Mismatch:
    orders: tuple
    alpha: object
    table_gamma: tuple
    table_dominant: tuple
    gamma: Fraction
    dominant: tuple
    table_alpha_c: Fraction
    alpha_c: Fraction


def compare_with_table(spec_or_orders, alphas=None):
    """List the probe points where classify() disagrees with the transcription."""
    from .model import MixtureSpec
    if isinstance(spec_or_orders, MixtureSpec):
        spec = spec_or_orders
        orders = model_orders(spec)
    else:
        orders = tuple(spec_or_orders)
        spec = MixtureSpec({q: 1.0 for q in orders})
    env = {"p": Fraction(orders[0])} if len(orders) == 1 else dict(zip(("pe", "po"), map(Fraction, sorted(orders, key=lambda q: q % 2))))
    tac = table_alpha_c(env)
    out = []
    for alpha in alphas if alphas is not None else probe_alphas(tac):
        entry = table_lookup(orders, alpha)
        rep = classify(spec, alpha)
        if entry.gammas != (rep.gamma,) or entry.dominant != frozenset(rep.dominant) or rep.alpha_c != tac:
            out.append(Mismatch(orders, alpha, entry.gammas, tuple(sorted(map(str, entry.dominant))),
                                rep.gamma, tuple(map(str, rep.dominant)), tac, rep.alpha_c))
    return out


def rows_as_csv(kind):
    rows = PURE_ROWS if kind == "pure" else MIXED_ROWS
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["condition", "alpha_case", "gamma", "dominant"])
    w.writerows(rows)
    return buf.getvalue()
