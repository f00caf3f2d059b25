"""Seeded generator for small benchmark programs with known answers.

Generated programs follow two rules that keep every downstream oracle
honest.  Nondet draws go only into flag variables, and flags are only
ever compared against zero, so the two-value domain {0, 1} covers all
behaviours the solver can reach over unbounded integers.  Data
variables see only linear updates (shifts, division, and bitwise
operators never appear), so the encodings stay within linear
arithmetic and no execution can trap.

The bounded shape additionally gives every loop a strictly increasing
counter with a constant bound, which makes exhaustive enumeration of
draw sequences terminate and yields a ground-truth safe/unsafe label.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .cfa import CFA, Assume, HavocOp, build_cfa
from .interp import ERROR_REACHED, COMPLETED, eval_expr, run
from .lang import parse

DATA_NAMES = ("x", "y", "z")
FLAG_NAMES = ("f", "g")


@dataclass(frozen=True)
class GenConfig:
    max_vars: int = 4
    max_loops: int = 2
    max_body: int = 3
    bounded_only: bool = False
    redraw_in_loops: bool = True
    loop_bound: Tuple[int, int] = (2, 4)
    const_range: Tuple[int, int] = (-3, 3)


class _Gen:
    def __init__(self, rng: random.Random, cfg: GenConfig):
        self.rng = rng
        self.cfg = cfg
        n_data = rng.randint(1, min(2, cfg.max_vars - 1))
        n_flags = rng.randint(1, min(2, cfg.max_vars - n_data))
        self.data = list(DATA_NAMES[:n_data])
        self.flags = list(FLAG_NAMES[:n_flags])
        self.counter = self.data[0]

    def const(self) -> int:
        lo, hi = self.cfg.const_range
        return self.rng.randint(lo, hi)

    def datum(self) -> str:
        return self.rng.choice(self.data)

    def update(self) -> str:
        d = self.datum()
        kind = self.rng.random()
        if kind < 0.35:
            return f"{d} = {d} + {self.rng.randint(1, 3)};"
        if kind < 0.55:
            return f"{d} = {d} - {self.rng.randint(1, 3)};"
        if kind < 0.7:
            return f"{d} = {d} * {self.rng.randint(0, 2)};"
        if kind < 0.85 and len(self.data) > 1:
            other = self.rng.choice([v for v in self.data if v != d])
            return f"{d} = {other} + {self.const()};"
        return f"{d} = {self.const()};"

    def comparison(self) -> str:
        d = self.datum()
        op = self.rng.choice(("<", "<=", ">", ">=", "==", "!="))
        if len(self.data) > 1 and self.rng.random() < 0.3:
            rhs = self.rng.choice([v for v in self.data if v != d])
        else:
            rhs = str(self.const())
        return f"{d} {op} {rhs}"

    def predicate(self, depth: int = 2) -> str:
        roll = self.rng.random()
        if depth == 0 or roll < 0.55:
            return self.comparison()
        if roll < 0.7:
            return f"!({self.predicate(depth - 1)})"
        glue = self.rng.choice(("&&", "||"))
        return (f"{self.comparison()} {glue} "
                f"({self.predicate(depth - 1)})")

    def body_stmt(self, indent: str) -> List[str]:
        roll = self.rng.random()
        if roll < 0.45:
            return [indent + self.update()]
        if roll < 0.6 and self.flags and self.cfg.redraw_in_loops:
            return [indent + f"{self.rng.choice(self.flags)} = nondet();"]
        if roll < 0.85 and self.flags:
            flag = self.rng.choice(self.flags)
            guard = self.rng.choice((f"{flag} != 0", f"{flag} == 0"))
            lines = [indent + f"if ({guard}) {{",
                     indent + "  " + self.update()]
            if self.rng.random() < 0.5:
                lines += [indent + "} else {",
                          indent + "  " + self.update()]
            lines.append(indent + "}")
            return lines
        guard = self.comparison()
        return [indent + f"if ({guard}) {{",
                indent + "  " + self.update(),
                indent + "}"]

    def loop(self, free_allowed: bool) -> List[str]:
        lines: List[str] = []
        body: List[str] = []
        for _ in range(self.rng.randint(1, self.cfg.max_body)):
            body.extend(self.body_stmt("  "))
        if self.rng.random() < 0.3:
            body.insert(self.rng.randrange(len(body) + 1),
                        f"  assert({self.predicate(1)});")
        if free_allowed and self.flags and self.rng.random() < 0.4:
            flag = self.rng.choice(self.flags)
            lines.append(f"{flag} = nondet();")
            lines.append(f"while ({flag} != 0) {{")
            lines.extend(body)
            lines.append(f"  {flag} = nondet();")
        else:
            bound = self.rng.randint(*self.cfg.loop_bound)
            lines.append(f"{self.counter} = 0;")
            lines.append(f"while ({self.counter} < {bound}) {{")
            lines.extend(body)
            lines.append(f"  {self.counter} = {self.counter} + 1;")
        lines.append("}")
        return lines

    def program(self) -> str:
        lines = [f"int {v};" for v in self.data + self.flags]
        lines.append("")
        for v in self.data:
            lines.append(f"{v} = {self.const()};")
        for v in self.flags:
            if self.rng.random() < 0.7:
                lines.append(f"{v} = nondet();")
            else:
                lines.append(f"{v} = {self.rng.randint(0, 1)};")
        if self.rng.random() < 0.15:
            lines.append(f"assert({self.predicate(1)});")
        n_loops = self.rng.randint(0 if not self.cfg.bounded_only else 1,
                                   self.cfg.max_loops)
        for i in range(n_loops):
            lines.extend(self.loop(free_allowed=not self.cfg.bounded_only))
            if i + 1 < n_loops and self.rng.random() < 0.5:
                lines.append(self.update())
        lines.append(f"assert({self.predicate()});")
        return "\n".join(lines) + "\n"


def random_program(rng: random.Random, cfg: GenConfig = GenConfig()) -> str:
    """One program; parses cleanly by construction."""
    return _Gen(rng, cfg).program()


def corpus(n: int, seed: int, cfg: GenConfig = GenConfig()) -> List[str]:
    """n distinct programs from one seed, stable across runs."""
    rng = random.Random(seed)
    out: List[str] = []
    seen = set()
    while len(out) < n:
        src = random_program(rng, cfg)
        if src not in seen:
            seen.add(src)
            out.append(src)
    return out


# -- ground truth by exhaustive enumeration ----------------------------------


def _wants_choice(cfa: CFA, loc: int, env: dict) -> bool:
    """Would the interpreter's next edge from here consume a draw?"""
    for e in cfa.out_edges(loc):
        if isinstance(e.op, Assume):
            if eval_expr(e.op.expr, env) != 0:
                return False
        else:
            return isinstance(e.op, HavocOp)
    return False


def exhaustive_verdict(cfa: CFA, domain: Sequence[int] = (0, 1),
                       max_runs: int = 20000, max_steps: int = 10000,
                       max_draws: int = 24
                       ) -> Tuple[str, Optional[List[int]]]:
    """Classify by running every draw sequence over the given domain.

    Returns ("unsafe", witness) on the first erroring sequence,
    ("safe", None) once the prefix tree is exhausted, and
    ("undecided", None) when a run overruns its step budget or the
    tree outgrows max_runs or max_draws (an unbounded loop, in
    practice).
    """
    pending: List[Tuple[int, ...]] = [()]
    runs = 0
    while pending:
        vec = pending.pop()
        if runs >= max_runs:
            return "undecided", None
        runs += 1
        status, trace = run(cfa, vec, max_steps=max_steps)
        if status == ERROR_REACHED:
            return "unsafe", list(trace.nondet_choices)
        if status != COMPLETED:
            return "undecided", None
        if (len(trace.nondet_choices) == len(vec)
                and _wants_choice(cfa, trace.final.location,
                                  dict(trace.final.env))):
            if len(vec) >= max_draws:
                return "undecided", None
            for c in domain:
                pending.append(vec + (c,))
    return "safe", None


def labeled_corpus(n: int, seed: int, cfg: Optional[GenConfig] = None,
                   balance: bool = False) -> List[Tuple[str, str]]:
    """n (source, expected) pairs, expected in {"true", "false"}.

    Generates bounded-shape programs and keeps only those the
    exhaustive oracle can decide, so the labels are ground truth
    rather than a guess.  With balance set, half the corpus (rounded
    up) is safe; the raw stream leans unsafe.
    """
    # flags drawn once up front keep the draw tree tiny, so the
    # enumeration stays fast even over two sequential loops
    cfg = cfg or GenConfig(bounded_only=True, redraw_in_loops=False,
                           max_body=2, loop_bound=(2, 3))
    rng = random.Random(seed)
    want = {"true": n - n // 2, "false": n // 2} if balance else None
    out: List[Tuple[str, str]] = []
    seen = set()
    while len(out) < n:
        src = random_program(rng, cfg)
        if src in seen:
            continue
        seen.add(src)
        verdict, _ = exhaustive_verdict(build_cfa(parse(src)))
        if verdict not in ("safe", "unsafe"):
            continue
        expected = "true" if verdict == "safe" else "false"
        if want is not None:
            if want[expected] == 0:
                continue
            want[expected] -= 1
        out.append((src, expected))
    return out
