#!/usr/bin/env python3
"""MILP adapter: reads an LP file, solves it with HiGHS via scipy, and writes
a solution file.

Usage: highs_adapter.py [--time-limit SECONDS] [--gap REL] MODEL.lp SOLUTION.sol

Solution file layout:
    <status>            optimal | feasible | infeasible | unbounded | error
    obj <value>
    <name> <value>      one line per variable
"""

import argparse
import math
import re
import sys

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

SECTION_RE = re.compile(
    r"^\s*(maximize|maximum|max|minimize|minimum|min|subject\s+to|such\s+that|"
    r"st|s\.t\.|bounds?|binary|binaries|bin|generals?|gen|integers?|end)\s*$",
    re.IGNORECASE,
)
TOKEN_RE = re.compile(
    r"\s*(<=|>=|=<|=>|<|>|=|:|[+-]|"
    r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|"
    r"[A-Za-z_!\"#$%&()/,.;?@`'{}|~][A-Za-z0-9_!\"#$%&()/,.;?@`'{}|~]*)"
)


class LpError(Exception):
    pass


def tokenize(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = TOKEN_RE.match(text, pos)
        if not m:
            raise LpError(f"bad token near {text[pos:pos + 20]!r}")
        out.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


def is_number(tok):
    try:
        float(tok)
        return tok.lower() not in ("inf", "infinity", "nan")
    except ValueError:
        return False


def sense_of(tok):
    return {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "="}.get(tok)


class LpModel:
    def __init__(self):
        self.maximize = False
        self.names = []
        self.index = {}
        self.objective = {}
        self.rows = []  # (name, {var: coef}, sense, rhs)
        self.lower = {}
        self.upper = {}
        self.binary = set()
        self.integer = set()

    def var(self, name):
        if name not in self.index:
            self.index[name] = len(self.names)
            self.names.append(name)
        return self.index[name]


def parse_expression(tokens, i, model):
    """Parses terms starting at tokens[i]; stops at a sense operator or end."""
    terms = {}
    sign = 1.0
    coef = None
    while i < len(tokens) and sense_of(tokens[i]) is None:
        tok = tokens[i]
        if tok == "+":
            pass
        elif tok == "-":
            sign = -sign
        elif is_number(tok):
            coef = float(tok) if coef is None else coef * float(tok)
        else:
            j = model.var(tok)
            terms[j] = terms.get(j, 0.0) + sign * (1.0 if coef is None else coef)
            sign, coef = 1.0, None
        i += 1
    return terms, i


def parse_objective(tokens, model):
    i = 0
    if len(tokens) >= 2 and tokens[1] == ":":
        i = 2
    terms, i = parse_expression(tokens, i, model)
    if i != len(tokens):
        raise LpError("unexpected operator in objective")
    model.objective = terms


def parse_constraints(tokens, model):
    i = 0
    count = 0
    while i < len(tokens):
        name = f"R{count}"
        if i + 1 < len(tokens) and tokens[i + 1] == ":":
            name = tokens[i]
            i += 2
        terms, i = parse_expression(tokens, i, model)
        if i >= len(tokens):
            raise LpError(f"row {name}: missing sense")
        sense = sense_of(tokens[i])
        i += 1
        sign = 1.0
        while tokens[i] in "+-":
            sign = -sign if tokens[i] == "-" else sign
            i += 1
        rhs = sign * float(tokens[i])
        i += 1
        model.rows.append((name, terms, sense, rhs))
        count += 1


def bound_value(tokens):
    sign = 1.0
    for t in tokens[:-1]:
        if t == "-":
            sign = -sign
    last = tokens[-1].lower()
    if last in ("inf", "infinity"):
        return sign * math.inf
    return sign * float(tokens[-1])


def parse_bound_line(line, model):
    toks = tokenize(line)
    if not toks:
        return
    if len(toks) == 2 and toks[1].lower() == "free":
        j = model.var(toks[0])
        model.lower[j], model.upper[j] = -math.inf, math.inf
        return
    ops = [k for k, t in enumerate(toks) if sense_of(t)]
    if len(ops) == 1:
        k = ops[0]
        left, right, sense = toks[:k], toks[k + 1:], sense_of(toks[k])
        if len(left) == 1 and not is_number(left[0]) and left[0].lower() not in ("inf", "infinity"):
            j, v = model.var(left[0]), bound_value(right)
        else:
            j, v = model.var(right[-1]), bound_value(left)
            sense = {"<=": ">=", ">=": "<=", "=": "="}[sense]
        if sense in ("<=", "="):
            model.upper[j] = v
        if sense in (">=", "="):
            model.lower[j] = v
        return
    if len(ops) == 2:
        a, b = ops
        j = model.var(toks[a + 1])
        model.lower[j] = bound_value(toks[:a])
        model.upper[j] = bound_value(toks[b + 1:])
        return
    raise LpError(f"cannot parse bound {line.strip()!r}")


def read_lp(text):
    model = LpModel()
    sections = []
    current = None
    buf = []
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0]
        m = SECTION_RE.match(line)
        if m:
            if current is not None:
                sections.append((current, buf))
            current = re.sub(r"\s+", " ", m.group(1).lower())
            buf = []
            if current == "end":
                break
            continue
        if line.strip():
            buf.append(line)
    if current is not None and current != "end":
        sections.append((current, buf))

    for name, lines in sections:
        if name in ("maximize", "maximum", "max", "minimize", "minimum", "min"):
            model.maximize = name.startswith("max")
            parse_objective(tokenize(" ".join(lines)), model)
        elif name in ("subject to", "such that", "st", "s.t."):
            parse_constraints(tokenize(" ".join(lines)), model)
        elif name.startswith("bound"):
            for line in lines:
                parse_bound_line(line, model)
        elif name in ("binary", "binaries", "bin"):
            for tok in " ".join(lines).split():
                model.binary.add(model.var(tok))
        elif name.startswith("gen") or name.startswith("integer"):
            for tok in " ".join(lines).split():
                model.integer.add(model.var(tok))
    return model


def solve(model, time_limit, gap):
    n = len(model.names)
    if n == 0:
        return "optimal", 0.0, {}
    c = np.zeros(n)
    for j, v in model.objective.items():
        c[j] = v
    if model.maximize:
        c = -c
    lb = np.zeros(n)
    ub = np.full(n, math.inf)
    integrality = np.zeros(n)
    for j in model.binary:
        lb[j], ub[j], integrality[j] = 0.0, 1.0, 1
    for j in model.integer:
        integrality[j] = 1
    for j, v in model.lower.items():
        lb[j] = v
    for j, v in model.upper.items():
        ub[j] = v

    constraints = []
    if model.rows:
        rows, cols, vals = [], [], []
        rlo = np.empty(len(model.rows))
        rhi = np.empty(len(model.rows))
        for r, (_, terms, sense, rhs) in enumerate(model.rows):
            for j, v in terms.items():
                rows.append(r)
                cols.append(j)
                vals.append(v)
            rlo[r] = rhs if sense in (">=", "=") else -math.inf
            rhi[r] = rhs if sense in ("<=", "=") else math.inf
        a = sparse.csr_array((vals, (rows, cols)), shape=(len(model.rows), n))
        constraints.append(LinearConstraint(a, rlo, rhi))

    options = {"disp": True, "mip_rel_gap": gap}
    if time_limit is not None:
        options["time_limit"] = time_limit
    res = milp(c, constraints=constraints, integrality=integrality,
               bounds=Bounds(lb, ub), options=options)
    print(res.message, flush=True)
    if res.status == 0:
        status = "optimal"
    elif res.status == 1 and res.x is not None:
        status = "feasible"
    elif res.status == 2:
        return "infeasible", None, {}
    elif res.status == 3:
        return "unbounded", None, {}
    else:
        return "error", None, {}
    obj = float(res.fun)
    if model.maximize:
        obj = -obj
    values = {name: float(res.x[j]) for j, name in enumerate(model.names)}
    return status, obj, values


def main(argv):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--gap", type=float, default=1e-6)
    ap.add_argument("lp")
    ap.add_argument("solution")
    args = ap.parse_args(argv)

    try:
        with open(args.lp, encoding="utf-8") as f:
            model = read_lp(f.read())
        status, obj, values = solve(model, args.time_limit, args.gap)
    except LpError as e:
        print(f"LP parse error: {e}", file=sys.stderr)
        status, obj, values = "error", None, {}

    with open(args.solution, "w", encoding="utf-8") as out:
        out.write(status + "\n")
        if obj is not None:
            out.write(f"obj {obj!r}\n")
            for name in model.names:
                out.write(f"{name} {values[name]!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
