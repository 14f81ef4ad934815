import json
import os
import random

from collections import Counter
from dataclasses import dataclass, field, fields, replace as clone
from itertools import product

from .effects import EFFECTS, ValidityPair
from .modes import execute_program
from .overlap import OverlapRegistry, infer_overlap_closure, rewrite_program
from .semantics import OUTCOMES, Schedule
from .syntax import (
    MODE_KINDS,
    OPS,
    SITES,
    AccessMode,
    Abstract,
    AnnotatedProgram,
    BufferDecl,
    DeclBlock,
    Effect,
    Element,
    ElementRef,
    If,
    IsValid,
    Noop,
    Opaque,
    RemIsValid,
    Scalar,
    Seq,
    ViewDecl,
    ViewRef,
    While,
    sequence,
)
from .utils import CON, CohereError, MSG_FORMATS as MF, read_from_file

####
# Generation limits.
####

@dataclass(frozen = True)
class GenLimits:
    max_blocks: int = 3
    max_body_depth: int = 2
    max_vars: int = 3
    max_buffer_len: int = 6
    # Maximum number of while loops in one body.
    max_loop_unroll: int = 2
    allow_arrays: bool = True
    allow_overlaps: bool = False
    # Longest straight-line program from enumerate_raw_programs().
    max_raw_length: int = 4

    def __post_init__(self):
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, int) and not isinstance(val, bool) and val < 1:
                raise CohereError(MF.invalid_limit.format(f.name, val))

####
# Generating well-declared programs.
#
# Modes are chosen first and bodies are synthesized to respect them:
# W views are written at the top level of the body, element by element;
# R views are only read; RW views are read or written. Loops are
# conditioned on opaque values and never hold the writes a W mode needs.
####

def gen_well_declared(seed, limits = None):
    rng = random.Random(seed)
    return ProgramGenerator(rng, limits or GenLimits()).program()

class ProgramGenerator:

    def __init__(self, rng, limits):
        self.rng = rng
        self.limits = limits
        self.buffers = []
        self.views = []
        self.loops = 0

    def program(self):
        self.declarations()
        program = AnnotatedProgram(self.buffers, self.views)
        registry = OverlapRegistry.from_program(program)
        n = self.rng.randint(1, self.limits.max_blocks)
        blocks = [self.block(registry) for _ in range(n)]
        return rewrite_program(program.with_blocks(blocks), registry)

    ####
    # Declarations.
    ####

    def declarations(self):
        lim = self.limits
        rng = self.rng
        if lim.allow_arrays and lim.allow_overlaps:
            self.overlapping_views()
            return
        for i in range(rng.randint(1, lim.max_vars)):
            name = f'x{i}'
            if lim.allow_arrays and rng.random() < 0.5:
                buf = BufferDecl(f'b{i}', rng.randint(1, lim.max_buffer_len))
                lo, hi = self.interval(buf.length)
                self.buffers.append(buf)
                self.views.append(ViewDecl(name, buf.name, lo, hi))
            else:
                self.views.append(ViewDecl.scalar(name))

    def overlapping_views(self):
        # Views on one shared buffer; the second intersects the first.
        lim = self.limits
        rng = self.rng
        buf = BufferDecl('b', rng.randint(2, max(2, lim.max_buffer_len)))
        self.buffers.append(buf)
        for i in range(rng.randint(2, max(2, lim.max_vars))):
            if i == 1:
                first = self.views[0]
                shared = rng.randint(first.lo, first.hi)
                lo = rng.randint(0, shared)
                hi = rng.randint(shared, buf.length - 1)
            else:
                lo, hi = self.interval(buf.length)
            self.views.append(ViewDecl(f'x{i}', buf.name, lo, hi))

    def interval(self, n):
        lo = self.rng.randrange(n)
        hi = self.rng.randint(lo, n - 1)
        return (lo, hi)

    ####
    # Blocks.
    ####

    def block(self, registry):
        rng = self.rng
        k = rng.randint(1, len(self.views))
        chosen = rng.sample(self.views, k)
        modes = tuple(
            AccessMode(rng.choice(MODE_KINDS.keys()), rng.choice(SITES.keys()), v.name)
            for v in chosen
        )

        # Modes whose overlap closure would need both sites move to one.
        try:
            infer_overlap_closure(modes, registry)
        except CohereError:
            site = modes[0].site
            modes = tuple(clone(m, site = site) for m in modes)

        self.loops = 0
        return DeclBlock(modes, self.body(modes))

    def body(self, modes):
        stmts = self.statements(modes, depth = 0)
        for m in modes:
            if m.kind == MODE_KINDS.W:
                for e in self.full_write(m):
                    stmts.insert(self.rng.randint(0, len(stmts)), e)
        return sequence(*stmts)

    def full_write(self, mode):
        view = self.view(mode.view)
        return [
            Effect(EFFECTS.write, self.target(view, i), remote = mode.remote)
            for i in range(view.length)
        ]

    def statements(self, modes, depth):
        rng = self.rng
        lim = self.limits
        stmts = []
        for _ in range(rng.randint(0, 3)):
            roll = rng.random()
            if depth < lim.max_body_depth and roll < 0.2:
                stmts.append(If(
                    self.condition(),
                    sequence(*self.statements(modes, depth + 1)),
                    sequence(*self.statements(modes, depth + 1)),
                ))
            elif depth < lim.max_body_depth and roll < 0.3 and self.loops < lim.max_loop_unroll:
                self.loops += 1
                stmts.append(While(
                    Opaque(),
                    sequence(*self.statements(modes, depth + 1)),
                ))
            else:
                stmts.append(self.access(rng.choice(modes)))
        return stmts

    def access(self, mode):
        # A read or a write permitted by the mode, on one element.
        view = self.view(mode.view)
        if mode.kind == MODE_KINDS.R:
            kind = EFFECTS.read
        elif mode.kind == MODE_KINDS.W:
            kind = EFFECTS.write
        else:
            kind = self.rng.choice((EFFECTS.read, EFFECTS.write))
        i = self.rng.randrange(view.length)
        return Effect(kind, self.target(view, i), remote = mode.remote)

    def condition(self):
        rng = self.rng
        roll = rng.random()
        if roll < 0.5:
            return Opaque()
        view = rng.choice(self.views)
        loc = self.target(view, rng.randrange(view.length))
        if roll < 0.75:
            return IsValid(loc)
        else:
            return RemIsValid(loc)

    def target(self, view, i):
        if view.is_scalar:
            return Scalar(view.name)
        else:
            return ElementRef(view.name, i)

    def view(self, name):
        for v in self.views:
            if v.name == name:
                return v

####
# Enumerating straight-line raw programs over one scalar.
####

RAW_VAR = 'x'

def effect_forms(name = RAW_VAR):
    # The ten effect forms: five kinds on each site.
    forms = []
    for op, (kind, remote) in sorted(OPS.items()):
        target = ViewRef(name) if kind in (EFFECTS.push, EFFECTS.pull) else Scalar(name)
        forms.append(Effect(kind, target, remote = remote))
    return tuple(forms)

def enumerate_raw_programs(limits = None):
    # Yields every sequence of at most limits.max_raw_length effects,
    # shortest first, starting with the empty program.
    limits = limits or GenLimits()
    forms = effect_forms()
    for n in range(limits.max_raw_length + 1):
        for combo in product(forms, repeat = n):
            yield sequence(*combo)

def raw_views():
    return (ViewDecl.scalar(RAW_VAR),)

####
# Running a program under every schedule.
####

@dataclass(frozen = True)
class ScheduleSurvey:
    # Pairs of (schedule bits, ProgramRun).
    runs: tuple

    @property
    def outcomes(self):
        return tuple(r.outcome for _, r in self.runs)

    @property
    def outcome_counts(self):
        return Counter(self.outcomes)

    @property
    def abstraction_correct(self):
        return all(r.abstraction_correct for _, r in self.runs)

    @property
    def stuck(self):
        return any(r.outcome == OUTCOMES.stuck for _, r in self.runs)

    @property
    def all_done(self):
        return all(r.outcome == OUTCOMES.done for _, r in self.runs)

def all_schedules_run(program, max_decisions = CON.default_decisions, fuel = CON.default_fuel):
    # Explores the schedules of length <= max_decisions. A run under a
    # prefix reads False past its end; a new run is started for each
    # decision it consumed beyond the prefix, with that decision True.
    # Every distinct behavior is run once.
    runs = []
    stack = [()]
    while stack:
        prefix = stack.pop()
        res = execute_program(program, fuel = fuel, schedule = Schedule(prefix))
        runs.append((prefix, res))
        used = min(res.decisions, max_decisions)
        for i in range(len(prefix), used):
            stack.append(prefix + (False,) * (i - len(prefix)) + (True,))
    return ScheduleSurvey(tuple(runs))

####
# A naive interpreter, written directly from the reduction rules.
#
# It keeps a stack of statements rather than rewriting the program, and
# applies effects through an explicit table of transitions. It serves as
# an oracle for the production interpreter.
####

V, I = 'V', 'I'

NAIVE_TABLE = {
    # (local, remote) => (local, remote). Missing entries are stuck.
    EFFECTS.push: {
        (V, V): (V, V),
        (V, I): (V, V),
    },
    EFFECTS.pull: {
        (V, V): (V, V),
        (I, V): (V, V),
    },
    EFFECTS.read: {
        (V, V): (V, V),
        (V, I): (V, I),
    },
    EFFECTS.write: {
        (V, V): (V, I),
        (V, I): (V, I),
        (I, V): (V, I),
        (I, I): (V, I),
    },
    EFFECTS.noop: {
        (V, V): (V, V),
        (V, I): (V, I),
        (I, V): (I, V),
        (I, I): (I, I),
    },
}

@dataclass(frozen = True)
class NaiveResult:
    outcome: str
    store: dict
    steps: int
    unsafe_seen: bool = False

def naive_transition(kind, remote, pair):
    # A remote effect maps (b, a) to (d, c) when the local one maps
    # (a, b) to (c, d). Returns None when stuck.
    table = NAIVE_TABLE[kind]
    if remote:
        got = table.get((pair[1], pair[0]))
        return None if got is None else (got[1], got[0])
    else:
        return table.get(pair)

def naive_keys(target, views):
    if isinstance(target, (Scalar, Element, Abstract)):
        return [target]
    view = views[target.view]
    if isinstance(target, ElementRef):
        if view.is_scalar:
            return [Scalar(view.name)]
        return [Element(view.buffer, view.lo + target.offset)]
    elif view.is_scalar:
        return [Scalar(view.name)]
    else:
        return [Element(view.buffer, i) for i in range(view.lo, view.hi + 1)]

def naive_run(program, store, fuel, schedule = (), views = None):
    # Takes a statement and a store of ValidityPair. Returns a
    # NaiveResult whose store holds the same keys and pairs.
    views = views or {}
    cells = {k : (p.local, p.remote) for k, p in store.items()}
    decisions = list(schedule)
    cursor = [0]
    unsafe = [False]

    def decide(cond):
        if isinstance(cond, IsValid):
            return cells[naive_keys(cond.target, views)[0]][0] == V
        elif isinstance(cond, RemIsValid):
            return cells[naive_keys(cond.target, views)[0]][1] == V
        i = cursor[0]
        cursor[0] += 1
        return decisions[i] if i < len(decisions) else False

    def finish(outcome, steps):
        return NaiveResult(
            outcome = outcome,
            store = {k : ValidityPair(*p) for k, p in cells.items()},
            steps = steps,
            unsafe_seen = unsafe[0],
        )

    stack = [program]
    steps = 0
    while True:
        # Unfold sequences; Noop vanishes.
        while stack and isinstance(stack[-1], (Seq, Noop)):
            s = stack.pop()
            if isinstance(s, Seq):
                stack.append(s.rest)
                stack.append(s.first)
        if not stack:
            return finish(OUTCOMES.done, steps)
        if steps >= fuel:
            return finish(OUTCOMES.fuel_exhausted, steps)

        s = stack.pop()
        if isinstance(s, Effect):
            keys = naive_keys(s.target, views)
            new = {}
            for k in keys:
                got = naive_transition(s.kind, s.remote, cells[k])
                if got is None:
                    return finish(OUTCOMES.stuck, steps)
                new[k] = got
            cells.update(new)
            unsafe[0] = unsafe[0] or any(p == (I, I) for p in new.values())
        elif isinstance(s, If):
            stack.append(s.then if decide(s.cond) else s.orelse)
        elif isinstance(s, While):
            if decide(s.cond):
                stack.append(s)
                stack.append(s.body)
        steps += 1

####
# Harness settings.
####

@dataclass(frozen = True)
class TestkitSettings:
    corpus_seeds: int = 10_000
    max_decisions: int = CON.default_decisions
    fuel: int = CON.default_fuel
    limits: GenLimits = field(default_factory = GenLimits)

def load_settings(path = None):
    # Reads the harness settings from JSON. The path defaults to the
    # environment variable or, failing that, tests/testkit.json.
    path = path or os.environ.get(CON.testkit_env_var) or os.path.join('tests', 'testkit.json')
    if not os.path.isfile(path):
        return TestkitSettings()
    d = json.loads(read_from_file(path))
    limits = d.pop('limits', {})
    known = {f.name for f in fields(TestkitSettings)}
    invalid = sorted(set(d) - known) + sorted(set(limits) - {f.name for f in fields(GenLimits)})
    if invalid:
        raise CohereError(MF.invalid_settings.format(CON.comma_join.join(invalid)))
    return TestkitSettings(limits = GenLimits(**limits), **d)
