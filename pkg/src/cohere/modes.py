from dataclasses import dataclass

from .effects import EFFECTS, leq
from .semantics import (
    OUTCOMES,
    RunResult,
    Schedule,
    initial_store,
    lookup,
    run,
)
from .syntax import (
    MODE_KINDS,
    NOOP,
    Abstract,
    Effect,
    If,
    IsValid,
    Noop,
    RemIsValid,
    ViewRef,
    sequence,
)
from .utils import CON

####
# Translation of access modes into synchronization code.
#
#   R x^     if isValid x^ then Noop else (Pull x; Pull x^)
#   [R x^]   if remIsValid x^ then Noop else (Push x; Push x^)
#   RW x^    R translation; w x^
#   [RW x^]  [R] translation; [w x^]
#   W x^     w x^
#   [W x^]   [w x^]
#
# For array views, Pull x and Push x synchronize the whole view.
####

def translate_mode(mode):
    view = ViewRef(mode.view)
    abstract = Abstract(mode.view)
    write = Effect(EFFECTS.write, abstract, remote = mode.remote)
    if mode.kind == MODE_KINDS.W:
        return write

    if mode.remote:
        cond = RemIsValid(abstract)
        sync = EFFECTS.push
    else:
        cond = IsValid(abstract)
        sync = EFFECTS.pull
    fetch = sequence(Effect(sync, view), Effect(sync, abstract))
    check = If(cond, NOOP, fetch)

    if mode.kind == MODE_KINDS.R:
        return check
    else:
        return sequence(check, write)

def translate_block(block):
    # Modes in declaration order, then the body.
    modes = tuple(translate_mode(m) for m in block.modes)
    return sequence(*modes, block.body)

def translate_program(program):
    return sequence(*(translate_block(b) for b in program.blocks))

####
# Correct abstraction: every view's abstract pair is below the pair of
# each of its concrete locations.
####

def abstraction_violations(store, views):
    # Returns (view-name, key) for every concrete key whose pair is
    # not abstracted by the view's abstract pair.
    bad = []
    for v in views:
        abstract = lookup(store, v.abstract_key)
        for k in v.concrete_keys:
            if not leq(abstract, lookup(store, k)):
                bad.append((v.name, k))
    return tuple(bad)

def abstraction_correct(store, views):
    return not abstraction_violations(store, views)

####
# Executing an annotated program block by block, so that abstraction
# correctness can be checked when each block completes.
####

@dataclass(frozen = True)
class Checkpoint:
    block: int
    violations: tuple

    @property
    def ok(self):
        return not self.violations

    @property
    def formatted(self):
        return CON.comma_join.join(f'{v}: {k}' for v, k in self.violations)

@dataclass(frozen = True)
class ProgramRun:
    outcome: str
    store: object
    trace: tuple
    checkpoints: tuple
    stuck: object = None
    steps: int = 0
    decisions: int = 0

    @property
    def abstraction_correct(self):
        return all(c.ok for c in self.checkpoints)

    @property
    def failed_checkpoints(self):
        return tuple(c for c in self.checkpoints if not c.ok)

def execute_program(program, fuel = CON.default_fuel, schedule = None, store = None):
    # Runs translate_program(program) one block at a time. Fuel and the
    # schedule cursor are shared by all blocks.
    views = program.view_map
    schedule = Schedule.coerce(schedule)
    store = initial_store(program.views) if store is None else store
    trace = []
    checkpoints = []
    steps = 0
    res = None

    for i, block in enumerate(program.blocks):
        code = translate_block(block)
        remaining = fuel - steps
        if isinstance(code, Noop):
            res = RunResult(OUTCOMES.done, store, ())
        elif remaining < 1:
            res = RunResult(OUTCOMES.fuel_exhausted, store, ())
        else:
            res = run(code, store, remaining, schedule = schedule, views = views)
        trace.extend(res.trace)
        steps += res.steps
        store = res.store
        if not res.done:
            break
        checkpoints.append(Checkpoint(i, abstraction_violations(store, program.views)))

    return ProgramRun(
        outcome = res.outcome if res else OUTCOMES.done,
        store = store,
        trace = tuple(trace),
        checkpoints = tuple(checkpoints),
        stuck = res.stuck if res else None,
        steps = steps,
        decisions = schedule.consumed,
    )
