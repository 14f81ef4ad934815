from collections.abc import Mapping
from dataclasses import dataclass
from short_con import constants

from .effects import FLAGS, VI, apply_effect, expected_pattern, format_pattern
from .syntax import (
    STORE_KEYS,
    Effect,
    ElementRef,
    If,
    IsValid,
    Noop,
    RemIsValid,
    ViewRef,
    While,
    format_statement,
    key_order,
    normalize,
    sequence,
    split_head,
)
from .utils import (
    CON,
    CohereError,
    MissingKeyError,
    MSG_FORMATS as MF,
)

####
# Terminal outcomes and the names of the reduction rules.
####

OUTCOMES = constants('Outcomes', dict(
    done = 'done',
    stuck = 'stuck',
    fuel_exhausted = 'fuel-exhausted',
))

RULES = constants('Rules', dict(
    effect = 'effect',
    remote_effect = 'remote-effect',
    while_true = 'while-true',
    while_false = 'while-false',
    if_true = 'if-true',
    if_false = 'if-false',
))

####
# The store: an immutable mapping from keys to validity pairs.
####

class Store(Mapping):

    def __init__(self, entries = None):
        self._entries = dict(entries or {})

    def __getitem__(self, key):
        return self._entries[key]

    def __iter__(self):
        return iter(self._entries)

    def __len__(self):
        return len(self._entries)

    def __repr__(self):
        items = CON.comma_join.join(f'{k}: {v}' for k, v in self.sorted_items())
        return f'Store({{{items}}})'

    def updated(self, changes):
        d = dict(self._entries)
        d.update(changes)
        return Store(d)

    def sorted_items(self):
        return sorted(self._entries.items(), key = lambda kv: key_order(kv[0]))

    @property
    def as_dict(self):
        return {
            str(k) : v.local + v.remote
            for k, v in self.sorted_items()
        }

####
# Opaque conditions read their value from a schedule: a finite sequence
# of booleans. An exhausted schedule yields False.
####

class Schedule:

    def __init__(self, bits = ()):
        self.bits = tuple(bool(b) for b in bits)
        self.position = 0

    @classmethod
    def from_text(cls, text):
        return cls(c == '1' for c in text or '')

    @classmethod
    def coerce(cls, schedule):
        # Runs accept a Schedule (to continue its cursor) or any booleans.
        if isinstance(schedule, cls):
            return schedule
        elif isinstance(schedule, str):
            return cls.from_text(schedule)
        else:
            return cls(schedule or ())

    def next(self):
        i = self.position
        self.position += 1
        return self.bits[i] if i < len(self.bits) else False

    @property
    def consumed(self):
        return self.position

####
# Configurations and step outcomes.
####

@dataclass(frozen = True)
class Configuration:
    program: object
    store: Store

@dataclass(frozen = True)
class Stepped:
    config: Configuration
    rule: str
    head: object
    delta: tuple

@dataclass(frozen = True)
class Done:
    store: Store

@dataclass(frozen = True)
class Stuck:
    key: object
    kind: str
    actual: object
    expected: tuple
    remote: bool = False
    head: object = None

    @property
    def formatted(self):
        where = format_statement(self.head).rstrip(';') if self.head is not None else self.kind
        pat = format_pattern(self.expected)
        return f'{where}: {self.key} is {self.actual}, expected {pat}'

@dataclass(frozen = True)
class TraceRecord:
    rule: str
    head: object
    delta: tuple

    @property
    def as_dict(self):
        return dict(
            rule = self.rule,
            statement = format_statement(self.head),
            delta = {
                str(k) : [str(old), str(new)]
                for k, old, new in self.delta
            },
        )

@dataclass(frozen = True)
class RunResult:
    outcome: str
    store: Store
    trace: tuple
    stuck: Stuck = None
    steps: int = 0
    decisions: int = 0

    @property
    def done(self):
        return self.outcome == OUTCOMES.done

####
# Resolving targets to store keys.
####

def resolve_keys(target, views = None):
    # Returns the store keys an effect target denotes, in ascending
    # index order for whole-array references.
    if isinstance(target, STORE_KEYS):
        return (target,)
    view = (views or {}).get(target.view)
    if view is None:
        raise CohereError(MF.undeclared_view.format(target.view))
    elif isinstance(target, ElementRef):
        return (view.element(target.offset),)
    elif isinstance(target, ViewRef):
        return view.concrete_keys
    else:
        raise CohereError(MF.undeclared_view.format(target))

def lookup(store, key):
    try:
        return store[key]
    except KeyError:
        raise MissingKeyError(MF.missing_key.format(key), key = key)

####
# Conditions.
####

def condition_key(cond, views = None):
    keys = resolve_keys(cond.target, views)
    if len(keys) != 1:
        raise CohereError(MF.condition_target.format(cond))
    return keys[0]

def eval_condition(cond, store, schedule, views = None):
    if isinstance(cond, IsValid):
        return lookup(store, condition_key(cond, views)).local == FLAGS.V
    elif isinstance(cond, RemIsValid):
        return lookup(store, condition_key(cond, views)).remote == FLAGS.V
    else:
        return schedule.next()

####
# One reduction step.
####

def apply_to_store(effect, store, views = None):
    # Applies an effect to every key of its target. Returns a tuple of
    # (key, old, new) changes, or a Stuck at the first key that does not
    # unify. The store itself is not modified.
    delta = []
    for key in resolve_keys(effect.target, views):
        actual = lookup(store, key)
        new = apply_effect(effect.kind, actual, remote = effect.remote)
        if new is None:
            expected = expected_pattern(effect.kind, remote = effect.remote)
            return Stuck(key, effect.kind, actual, expected, effect.remote, effect)
        elif new != actual:
            delta.append((key, actual, new))
    return tuple(delta)

def step(config, schedule, views = None):
    program = config.program
    store = config.store
    if isinstance(program, Noop):
        return Done(store)

    head, rest = split_head(program)
    if isinstance(head, Effect):
        delta = apply_to_store(head, store, views)
        if isinstance(delta, Stuck):
            return delta
        if delta:
            store = store.updated({k : new for k, _, new in delta})
        rule = RULES.remote_effect if head.remote else RULES.effect
        return Stepped(Configuration(rest, store), rule, head, delta)

    elif isinstance(head, While):
        if eval_condition(head.cond, store, schedule, views):
            nxt = sequence(head.body, program)
            rule = RULES.while_true
        else:
            nxt = rest
            rule = RULES.while_false
        return Stepped(Configuration(nxt, store), rule, head, ())

    elif isinstance(head, If):
        if eval_condition(head.cond, store, schedule, views):
            nxt = sequence(head.then, rest)
            rule = RULES.if_true
        else:
            nxt = sequence(head.orelse, rest)
            rule = RULES.if_false
        return Stepped(Configuration(nxt, store), rule, head, ())

    else:
        raise CohereError(MF.invalid_statement.format(head))

####
# Running to a terminal outcome.
####

def run(program, store, fuel, schedule = None, views = None):
    # Steps until Done, Stuck, or the fuel runs out. Detecting
    # Done does not consume fuel.
    if not isinstance(fuel, int) or fuel < 1:
        raise CohereError(MF.invalid_fuel.format(fuel))
    schedule = Schedule.coerce(schedule)
    config = Configuration(normalize(program), Store(store))
    trace = []
    steps = 0

    def result(outcome, stuck = None):
        return RunResult(
            outcome = outcome,
            store = config.store,
            trace = tuple(trace),
            stuck = stuck,
            steps = steps,
            decisions = schedule.consumed,
        )

    while True:
        if steps >= fuel and not isinstance(config.program, Noop):
            return result(OUTCOMES.fuel_exhausted)
        out = step(config, schedule, views)
        if isinstance(out, Done):
            return result(OUTCOMES.done)
        elif isinstance(out, Stuck):
            return result(OUTCOMES.stuck, stuck = out)
        trace.append(TraceRecord(out.rule, out.head, out.delta))
        config = out.config
        steps += 1

####
# Initial store and the safety predicate.
####

def initial_store(views):
    # Every concrete key and every abstract key starts as (V,I):
    # data lives on the local side.
    entries = {}
    seen = set()
    for v in views:
        if v.name in seen:
            raise CohereError(MF.duplicate_name.format(v.name))
        seen.add(v.name)
        for k in v.concrete_keys:
            entries[k] = VI
        entries[v.abstract_key] = VI
    return Store(entries)

def is_unsafe(store):
    return any(p.unsafe for p in store.values())
