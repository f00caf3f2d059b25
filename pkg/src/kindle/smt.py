"""External SMT solver sessions over the SMT-LIB2 pipe protocol.

A session owns one solver subprocess (a native ``z3 -in -smt2`` when
available, otherwise the bundled WebAssembly shim run under node) and
tracks the assertion stack it has built up.  Every state-changing command
is journaled, so a crashed or timed-out solver is transparently restarted
and brought back to the same stack; the query that died reports
``unknown`` and later queries are unaffected.
"""
from __future__ import annotations

import os
import re
import select
import shutil
import subprocess
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .formula import Term, collect_ufs, render, symbols

DEFAULT_TIMEOUT = 60.0

Verdict = str  # "sat" | "unsat" | "unknown"
Model = Dict[str, int]


class SolverError(RuntimeError):
    """The solver could not be started, or rejected our input."""


class _Timeout(Exception):
    pass


class _Crashed(Exception):
    pass


def default_solver_cmd() -> List[str]:
    if shutil.which("z3"):
        return ["z3", "-in", "-smt2"]
    node = shutil.which("node")
    if node is None:
        raise SolverError("neither z3 nor node found on PATH")
    return [node, str(Path(__file__).with_name("solver_repl.js"))]


class SolverSession:
    """One solver process with a replayable assertion stack.

    Not thread-safe; each owner keeps its own session.
    """

    def __init__(self, cmd: Optional[Sequence[str]] = None,
                 timeout: float = DEFAULT_TIMEOUT,
                 logic: Optional[str] = None):
        self.cmd = list(cmd) if cmd else default_solver_cmd()
        self.timeout = timeout
        self.logic = logic
        self._proc: Optional[subprocess.Popen] = None
        self._buf = b""
        self._journal: List[str] = []
        self._declared: List[Set[str]] = [set()]
        self._ufs: List[Set[Tuple[str, int]]] = [set()]
        self.restarts = 0

    # -- process plumbing --------------------------------------------------

    def _spawn(self) -> None:
        try:
            self._proc = subprocess.Popen(
                self.cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL)
        except OSError as exc:
            raise SolverError("cannot start solver %r: %s" % (self.cmd, exc))
        self._buf = b""

    def _ensure(self) -> None:
        if self._proc is None:
            self._spawn()
            for cmd in self._journal:
                self._write(cmd)
        elif self._proc.poll() is not None:
            self._recover()

    def start(self) -> None:
        if self._proc is None:
            self._spawn()
            self._command("(set-option :produce-models true)")
            if self.logic:
                self._command("(set-logic %s)" % self.logic)

    def close(self) -> None:
        if self._proc is not None:
            try:
                self._write("(exit)")
            except _Crashed:
                pass
            self._proc.stdin.close()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
            self._proc = None

    def __enter__(self) -> "SolverSession":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _write(self, text: str) -> None:
        assert self._proc is not None
        try:
            self._proc.stdin.write((text + "\n").encode())
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise _Crashed()

    def _command(self, text: str) -> None:
        """Journal and send a state-changing command (no output expected)."""
        self._ensure()
        self._journal.append(text)
        try:
            self._write(text)
        except _Crashed:
            self._recover()

    def _recover(self) -> None:
        self.restarts += 1
        if self._proc is not None:
            self._proc.kill()
            self._proc = None
        self._spawn()
        for cmd in self._journal:
            try:
                self._write(cmd)
            except _Crashed:
                raise SolverError("solver died while replaying its stack")

    def _read_line(self, deadline: float) -> str:
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise _Timeout()
            fd = self._proc.stdout.fileno()
            ready, _, _ = select.select([fd], [], [], min(remaining, 0.25))
            if not ready:
                continue
            chunk = os.read(fd, 1 << 16)
            if not chunk:
                raise _Crashed()
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        return line.decode().strip()

    def _read_sexpr(self, deadline: float) -> str:
        """Read one balanced s-expression (the get-model output)."""
        text = ""
        depth = 0
        seen = False
        while True:
            line = self._read_line(deadline)
            text += line + "\n"
            for ch in line:
                if ch == "(":
                    depth += 1
                    seen = True
                elif ch == ")":
                    depth -= 1
            if seen and depth <= 0:
                return text

    def _drain(self) -> None:
        """Discard any stale output (e.g. `unsupported` warnings)."""
        self._buf = b""
        if self._proc is None:
            return
        fd = self._proc.stdout.fileno()
        while True:
            ready, _, _ = select.select([fd], [], [], 0)
            if not ready:
                return
            if not os.read(fd, 1 << 16):
                return

    # -- assertion stack ---------------------------------------------------

    def push(self) -> None:
        self._command("(push 1)")
        self._declared.append(set())
        self._ufs.append(set())

    def pop(self) -> None:
        if len(self._declared) == 1:
            raise SolverError("pop on an empty assertion stack")
        self._command("(pop 1)")
        self._declared.pop()
        self._ufs.pop()

    @property
    def depth(self) -> int:
        return len(self._declared) - 1

    def _declare_for(self, terms: Sequence[Term]) -> None:
        known = set().union(*self._declared)
        for name in sorted(symbols(*terms) - known):
            self._command("(declare-const %s Int)" % name)
            self._declared[-1].add(name)
        ufs: Set[Tuple[str, int]] = set()
        for t in terms:
            collect_ufs(t, ufs)
        known_ufs = set().union(*self._ufs)
        for name, arity in sorted(ufs - known_ufs):
            self._command("(declare-fun %s (%s) Int"
                          % (name, " ".join(["Int"] * arity)) + ")")
            self._ufs[-1].add((name, arity))

    def add(self, formulas: Sequence[Term]) -> None:
        self.start()
        self._declare_for(formulas)
        for f in formulas:
            self._command("(assert %s)" % render(f))

    # -- queries -----------------------------------------------------------

    def check_sat(self, want_model: bool = False
                  ) -> Tuple[Verdict, Optional[Model]]:
        self.start()
        self._ensure()
        self._drain()
        deadline = time.monotonic() + self.timeout
        try:
            self._write("(check-sat)")
            line = self._read_line(deadline)
            while line == "" or line == "unsupported":
                line = self._read_line(deadline)
        except (_Timeout, _Crashed):
            self._recover()
            return "unknown", None
        if line.startswith("(error"):
            raise SolverError("solver error: %s" % line)
        if line not in ("sat", "unsat", "unknown"):
            raise SolverError("unexpected solver reply: %r" % line)
        if line == "sat" and want_model:
            try:
                self._write("(get-model)")
                text = self._read_sexpr(deadline)
            except (_Timeout, _Crashed):
                self._recover()
                return "sat", {}
            return "sat", parse_model(text)
        return line, None

    def check(self, formulas: Sequence[Term], want_model: bool = False
              ) -> Tuple[Verdict, Optional[Model]]:
        """One-shot scoped check: push, assert, check, pop."""
        self.push()
        self.add(formulas)
        out = self.check_sat(want_model)
        self.pop()
        return out

    def reset(self) -> None:
        """Forget everything; the process is kept alive for reuse."""
        self._journal = []
        self._declared = [set()]
        self._ufs = [set()]
        if self._proc is not None and self._proc.poll() is None:
            try:
                self._write("(reset)")
            except _Crashed:
                self._proc = None
        self._command("(set-option :produce-models true)")
        if self.logic:
            self._command("(set-logic %s)" % self.logic)


_DEFINE_RE = re.compile(
    r"\(define-fun\s+(\|[^|]*\||[^\s()]+)\s*\(\)\s*Int\s+"
    r"(-?\d+|\(-\s*\d+\s*\))\s*\)")


def parse_model(text: str) -> Model:
    """Pull variable bindings out of a get-model answer.

    Accepts both the bare parenthesized list and the older variant with a
    leading ``model`` keyword, and both ``3`` and ``(- 3)`` literals.
    Entries that are not zero-ary Int definitions are ignored.
    """
    out: Model = {}
    for name, value in _DEFINE_RE.findall(text):
        if name.startswith("|") and name.endswith("|"):
            name = name[1:-1]
        value = value.strip()
        if value.startswith("("):
            value = "-" + value.strip("()- \t")
        out[name] = int(value)
    return out


def render_script(formulas: Sequence[Term],
                  logic: Optional[str] = None) -> str:
    """Standalone SMT-LIB2 script for the conjunction of formulas."""
    lines = []
    if logic:
        lines.append("(set-logic %s)" % logic)
    ufs: Set[Tuple[str, int]] = set()
    for f in formulas:
        collect_ufs(f, ufs)
    for name in sorted(symbols(*formulas)):
        lines.append("(declare-const %s Int)" % name)
    for name, arity in sorted(ufs):
        lines.append("(declare-fun %s (%s) Int"
                     % (name, " ".join(["Int"] * arity)) + ")")
    for f in formulas:
        lines.append("(assert %s)" % render(f))
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def one_shot_check(formulas: Sequence[Term],
                   cmd: Optional[Sequence[str]] = None,
                   timeout: float = DEFAULT_TIMEOUT,
                   want_model: bool = False) -> Tuple[Verdict, Optional[Model]]:
    """Fresh process, one query, no reuse: the monolithic reference path."""
    with SolverSession(cmd, timeout) as session:
        session.add(list(formulas))
        return session.check_sat(want_model)
