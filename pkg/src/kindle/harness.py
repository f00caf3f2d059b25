"""Corpus driver: run tasks under named configurations, score, emit CSV.

A task is a program file with a known expected verdict, taken from the
`*_true.c` / `*_false.c` filename convention or from a `manifest.json`
in the corpus directory.  Each (task, configuration) pair runs the full
pipeline in isolation and yields a TaskResult; score() folds a result
list into the competition arithmetic (+1 per found bug, +2 per proof,
-6 per wrong alarm, -12 per wrong proof, 0 per unknown) plus a quantile
series: correct results sorted by CPU time, accumulating score, with
the summed wrong-answer penalty as the left endpoint.  CPU times come
from process accounting and include reaped solver children, so the
solver's share is attributed to the task that ran it.

Tasks are independent, so a corpus can fan out over worker processes;
aggregation never depends on completion order.
"""
from __future__ import annotations

import csv
import dataclasses
import glob
import json
import multiprocessing
import os
import time
from dataclasses import dataclass
from statistics import fmean
from typing import Dict, List, Optional, Sequence, Tuple

from .cfa import build_cfa
from .encoder import HavocStrategy
from .invariants import InvariantEngine, SnapshotStore, static_precision
from .kinduction import (RESULT_FALSE, RESULT_TRUE, RESULT_UNKNOWN,
                         KInductionConfig, Verdict, verify)
from .lang import parse
from .normalize import to_single_loop


class HarnessError(Exception):
    pass


HAVOC_BY_NAME = {
    "all": HavocStrategy.SOUND_ALL,
    "loop-modified": HavocStrategy.SOUND_LOOP_MODIFIED,
    "termination-vars": HavocStrategy.UNSOUND_TERMINATION_VARS,
}

CLASSES = ("correct-proof", "correct-alarm", "wrong-proof", "wrong-alarm",
           "unknown")

SCORE_BY_CLASS = {
    "correct-proof": 2,
    "correct-alarm": 1,
    "wrong-proof": -12,
    "wrong-alarm": -6,
    "unknown": 0,
}


def parse_invgen(text: str) -> Tuple[str, Optional[Tuple[int, int, bool]]]:
    """off | continuous | static:s,n,w -> (mode, static arguments)."""
    if text in ("off", "continuous"):
        return text, None
    if text.startswith("static:"):
        parts = text[len("static:"):].split(",")
        if len(parts) == 3:
            try:
                size, depth = int(parts[0]), int(parts[1])
            except ValueError:
                raise HarnessError(f"bad static precision in {text!r}")
            flag = parts[2].strip().lower()
            if flag in ("t", "true", "1"):
                widen = True
            elif flag in ("f", "false", "0"):
                widen = False
            else:
                raise HarnessError(f"widening flag must be t or f: {text!r}")
            if size < 0 or depth < 0:
                raise HarnessError(f"negative static precision: {text!r}")
            return "static", (size, depth, widen)
    raise HarnessError(f"bad invariant generator spec: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    """One named way of running the verifier over a task."""
    name: str
    k_init: int = 1
    k_max: int = 100
    invgen: str = "continuous"
    havoc: str = "all"
    timeout: float = 60.0
    wall_budget: Optional[float] = None
    deterministic_rounds: Optional[int] = None
    solver_cmd: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        parse_invgen(self.invgen)
        if self.havoc not in HAVOC_BY_NAME:
            raise HarnessError(f"unknown havoc strategy {self.havoc!r}; "
                               f"pick from {sorted(HAVOC_BY_NAME)}")


@dataclass(frozen=True)
class TaskResult:
    task: str
    config: str
    expected: str
    actual: Verdict
    cpu_time: float
    wall_time: float
    final_k: int
    invariant_version: int

    @property
    def classification(self) -> str:
        if self.actual.result == RESULT_TRUE:
            return ("correct-proof" if self.expected == "true"
                    else "wrong-proof")
        if self.actual.result == RESULT_FALSE:
            return ("correct-alarm" if self.expected == "false"
                    else "wrong-alarm")
        return "unknown"

    @property
    def score(self) -> int:
        return SCORE_BY_CLASS[self.classification]

    @property
    def correct(self) -> bool:
        return self.score > 0


@dataclass(frozen=True)
class ScoreReport:
    score: int
    correct_proofs: int
    correct_alarms: int
    wrong_proofs: int
    wrong_alarms: int
    unknowns: int
    cpu_total: float
    wall_total: float
    quantile: Tuple[Tuple[float, float], ...]

    @property
    def correct(self) -> int:
        return self.correct_proofs + self.correct_alarms


def score(results: Sequence[TaskResult]) -> ScoreReport:
    """Fold results into totals and the quantile series.

    The series starts at (summed wrong-answer score, fastest correct
    CPU time) and appends one point per correct result in CPU-time
    order, so it is monotone in time and its last x is the total.
    """
    by_class = {c: 0 for c in CLASSES}
    for r in results:
        by_class[r.classification] += 1
    total = sum(r.score for r in results)
    wrong_sum = sum(r.score for r in results if r.score < 0)
    corrects = sorted((r for r in results if r.correct),
                      key=lambda r: r.cpu_time)
    points = [(float(wrong_sum),
               corrects[0].cpu_time if corrects else 0.0)]
    acc = wrong_sum
    for r in corrects:
        acc += r.score
        points.append((float(acc), r.cpu_time))
    return ScoreReport(score=total,
                       correct_proofs=by_class["correct-proof"],
                       correct_alarms=by_class["correct-alarm"],
                       wrong_proofs=by_class["wrong-proof"],
                       wrong_alarms=by_class["wrong-alarm"],
                       unknowns=by_class["unknown"],
                       cpu_total=sum(r.cpu_time for r in results),
                       wall_total=sum(r.wall_time for r in results),
                       quantile=tuple(points))


# -- expected verdicts -------------------------------------------------------


def expected_verdict(path: str, manifest: Optional[Dict[str, str]] = None
                     ) -> str:
    name = os.path.basename(path)
    if manifest and name in manifest:
        value = manifest[name]
        if value not in ("true", "false"):
            raise HarnessError(f"manifest entry for {name} must be "
                               f"true or false, not {value!r}")
        return value
    stem = name[:-2] if name.endswith(".c") else name
    if stem.endswith("_true"):
        return "true"
    if stem.endswith("_false"):
        return "false"
    raise HarnessError(f"no expected verdict for {name}: name it "
                       f"*_true.c / *_false.c or add a manifest entry")


def load_manifest(corpus_dir: str) -> Optional[Dict[str, str]]:
    path = os.path.join(corpus_dir, "manifest.json")
    if not os.path.exists(path):
        return None
    with open(path) as f:
        raw = json.load(f)
    if (not isinstance(raw, dict)
            or not all(isinstance(k, str) and isinstance(v, str)
                       for k, v in raw.items())):
        raise HarnessError(f"{path} must map file names to verdicts")
    return raw


# -- running one task --------------------------------------------------------


def _cpu_now() -> float:
    t = os.times()
    return t.user + t.system + t.children_user + t.children_system


def _invariant_source(ncfa, config: RunConfig
                      ) -> Tuple[Optional[SnapshotStore],
                                 Optional[InvariantEngine]]:
    """Build the configured invariant supply.  Returns the engine only
    when a background thread is running and needs a cancel."""
    mode, static_args = parse_invgen(config.invgen)
    if mode == "off":
        return None, None
    store = SnapshotStore()
    engine = InvariantEngine(ncfa, store)
    if mode == "static":
        size, depth, widen = static_args
        engine.run_static(static_precision(ncfa, size, depth, widen))
        return store, None
    if config.deterministic_rounds is not None:
        engine.run_rounds(config.deterministic_rounds)
        return store, None
    engine.start()
    return store, engine


def _kinduction_config(config: RunConfig) -> KInductionConfig:
    return KInductionConfig(k_init=config.k_init, k_max=config.k_max,
                            strategy=HAVOC_BY_NAME[config.havoc],
                            solver_cmd=config.solver_cmd,
                            solver_timeout=config.timeout,
                            wall_budget=config.wall_budget)


def run_task(path: str, config: RunConfig,
             manifest: Optional[Dict[str, str]] = None) -> TaskResult:
    """Full pipeline on one file.  Pipeline failures of any kind come
    back as an unknown verdict carrying the reason, so a corpus run
    survives a bad task."""
    expected = expected_verdict(path, manifest)
    cpu0, wall0 = _cpu_now(), time.monotonic()
    engine = None
    try:
        with open(path) as f:
            src = f.read()
        ncfa = to_single_loop(build_cfa(parse(src)))
        store, engine = _invariant_source(ncfa, config)
        verdict = verify(ncfa, _kinduction_config(config), store=store)
    except Exception as e:
        verdict = Verdict(RESULT_UNKNOWN, 0,
                          reason=f"{type(e).__name__}: {e}")
    finally:
        if engine is not None:
            engine.cancel()
    return TaskResult(task=os.path.basename(path), config=config.name,
                      expected=expected, actual=verdict,
                      cpu_time=_cpu_now() - cpu0,
                      wall_time=time.monotonic() - wall0,
                      final_k=verdict.final_k,
                      invariant_version=verdict.invariant_version)


# -- corpora -----------------------------------------------------------------


def _run_job(job: Tuple[str, RunConfig, Optional[Dict[str, str]]]
             ) -> TaskResult:
    path, config, manifest = job
    return run_task(path, config, manifest)


def run_corpus(files: Sequence[str], configs: Sequence[RunConfig],
               manifest: Optional[Dict[str, str]] = None,
               jobs: int = 1) -> List[TaskResult]:
    work = [(path, cfg, manifest) for cfg in configs for path in files]
    if jobs <= 1:
        return [_run_job(w) for w in work]
    with multiprocessing.get_context("fork").Pool(jobs) as pool:
        return pool.map(_run_job, work)


def compare_configs(files: Sequence[str], configs: Sequence[RunConfig],
                    manifest: Optional[Dict[str, str]] = None,
                    jobs: int = 1) -> Tuple[List[dict], List[TaskResult]]:
    """One summary row per configuration, plus the raw results."""
    results = run_corpus(files, configs, manifest, jobs)
    rows = []
    for cfg in configs:
        rs = [r for r in results if r.config == cfg.name]
        rep = score(rs)
        rows.append({
            "config": cfg.name,
            "score": rep.score,
            "correct": rep.correct,
            "wrong_proofs": rep.wrong_proofs,
            "wrong_alarms": rep.wrong_alarms,
            "unknowns": rep.unknowns,
            "cpu_s": round(rep.cpu_total, 3),
            "wall_s": round(rep.wall_total, 3),
            "max_final_k": max((r.final_k for r in rs), default=0),
            "avg_final_k": round(fmean(r.final_k for r in rs), 2)
            if rs else 0.0,
        })
    return rows, results


def corpus_files(corpus_dir: str) -> List[str]:
    files = sorted(glob.glob(os.path.join(corpus_dir, "*.c")))
    if not files:
        raise HarnessError(f"no .c files under {corpus_dir}")
    return files


def bench(corpus_dir: str, configs: Sequence[RunConfig],
          out_csv: Optional[str] = None, jobs: int = 1
          ) -> Tuple[List[dict], List[TaskResult]]:
    manifest = load_manifest(corpus_dir)
    files = corpus_files(corpus_dir)
    for path in files:
        expected_verdict(path, manifest)
    rows, results = compare_configs(files, configs, manifest, jobs)
    if out_csv:
        write_csv(results, out_csv)
    return rows, results


# -- emission ----------------------------------------------------------------


CSV_COLUMNS = ("task", "config", "expected", "actual", "class",
               "cpu_s", "wall_s", "final_k", "inv_version")

_CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)}


def write_csv(results: Sequence[TaskResult], path: str) -> None:
    with open(path, "w", newline="") as f:
        out = csv.writer(f)
        out.writerow(CSV_COLUMNS)
        for r in results:
            out.writerow([r.task, r.config, r.expected, r.actual.result,
                          r.classification, f"{r.cpu_time:.3f}",
                          f"{r.wall_time:.3f}", r.final_k,
                          r.invariant_version])


def load_configs(path: str) -> List[RunConfig]:
    """A configs file is a JSON array of objects with a `name` and any
    RunConfig overrides."""
    with open(path) as f:
        raw = json.load(f)
    if not isinstance(raw, list) or not raw:
        raise HarnessError(f"{path} must hold a non-empty JSON array")
    out: List[RunConfig] = []
    names = set()
    for entry in raw:
        if not isinstance(entry, dict) or "name" not in entry:
            raise HarnessError(f"every config in {path} needs a name")
        unknown = set(entry) - _CONFIG_KEYS
        if unknown:
            raise HarnessError(f"unknown config keys {sorted(unknown)}; "
                               f"known: {sorted(_CONFIG_KEYS)}")
        if entry.get("solver_cmd") is not None:
            entry = dict(entry, solver_cmd=tuple(entry["solver_cmd"]))
        try:
            cfg = RunConfig(**entry)
        except TypeError as e:
            raise HarnessError(f"bad config entry in {path}: {e}")
        if cfg.name in names:
            raise HarnessError(f"duplicate config name {cfg.name!r}")
        names.add(cfg.name)
        out.append(cfg)
    return out


def render_table(rows: Sequence[dict]) -> str:
    if not rows:
        return "(no results)"
    cols = list(rows[0])
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    lines = ["  ".join(c.rjust(widths[c]) for c in cols)]
    lines.append("  ".join("-" * widths[c] for c in cols))
    for r in rows:
        lines.append("  ".join(str(r[c]).rjust(widths[c]) for c in cols))
    return "\n".join(lines)
