from collections import defaultdict
from dataclasses import dataclass

from .diagnostics import DIAGNOSTIC_RULES as DR, Diagnostic
from .effects import EFFECTS
from .overlap import OverlapRegistry, shared_indices
from .syntax import (
    READ_KINDS,
    SITES,
    WRITE_KINDS,
    MODE_KINDS,
    Abstract,
    DeclBlock,
    Effect,
    ElementRef,
    If,
    Scalar,
    ViewDecl,
    ViewRef,
    effects_in,
    flatten,
    format_statement,
    target_view,
)
from .utils import CON

####
# Access summaries.
#
# Computed from the sub-terms of a body, regardless of the branch or
# loop they sit in. Written offsets are relative to the view; None
# stands for an unknown offset or a write to the whole view.
####

@dataclass(frozen = True)
class AccessSummary:
    reads: dict
    writes: dict
    written: dict
    sync_ops: tuple = ()
    abstract_ops: tuple = ()

    def reads_at(self, view, site):
        return site in self.reads.get(view, ())

    def writes_at(self, view, site):
        return site in self.writes.get(view, ())

    def written_offsets(self, view, site):
        return self.written.get((view, site), frozenset())

    @property
    def sync_ops_present(self):
        return bool(self.sync_ops)

    @property
    def accessed_views(self):
        return tuple(dict.fromkeys(list(self.reads) + list(self.writes)))

def target_offset(target):
    if isinstance(target, Scalar):
        return 0
    elif isinstance(target, ElementRef):
        return target.offset
    else:
        return None

def collect_accesses(body):
    reads = defaultdict(set)
    writes = defaultdict(set)
    written = defaultdict(set)
    sync_ops = []
    abstract_ops = []

    for e in effects_in(body):
        view = target_view(e.target)
        if isinstance(e.target, Abstract):
            abstract_ops.append(e)
        elif e.is_sync:
            sync_ops.append(e)
        elif view is None:
            continue
        elif e.kind == EFFECTS.read:
            reads[view].add(e.site)
        elif e.kind == EFFECTS.write:
            writes[view].add(e.site)
            written[(view, e.site)].add(target_offset(e.target))

    return AccessSummary(
        reads = {k : frozenset(v) for k, v in reads.items()},
        writes = {k : frozenset(v) for k, v in writes.items()},
        written = {k : frozenset(v) for k, v in written.items()},
        sync_ops = tuple(sync_ops),
        abstract_ops = tuple(abstract_ops),
    )

####
# Must-write analysis.
#
# The offsets of a view written on every execution path of a statement.
# Sequencing unions, branching intersects, and a loop contributes
# nothing because it may run zero times. Offsets known only at run time
# never count.
####

def must_written(stmt, view, site = SITES.local):
    # Takes a ViewDecl. Returns a frozenset of offsets.
    found = set()
    for a in flatten(stmt):
        if isinstance(a, Effect):
            found.update(written_by(a, view, site))
        elif isinstance(a, If):
            then = must_written(a.then, view, site)
            orelse = must_written(a.orelse, view, site)
            found.update(then & orelse)
    return frozenset(found)

def written_by(e, view, site):
    t = e.target
    if e.kind != EFFECTS.write or e.site != site or target_view(t) != view.name:
        return ()
    elif isinstance(t, ViewRef):
        return range(view.length)
    elif isinstance(t, Abstract) or target_offset(t) is None:
        return ()
    else:
        return (target_offset(t),)

def must_write(body, view, site = SITES.local):
    # True if every element of the view is written on every path.
    # A str is taken as the name of a scalar.
    if isinstance(view, str):
        view = ViewDecl.scalar(view)
    return not missing_writes(body, view, site)

def missing_writes(body, view, site = SITES.local):
    done = must_written(body, view, site)
    return tuple(i for i in range(view.length) if i not in done)

####
# Checking declaration blocks.
####

def check_block(block, views, registry = None, location = None, notes = False):
    # Takes a DeclBlock and a dict of ViewDecl by name.
    acc = collect_accesses(block.body)
    diags = []

    def add(rule, *xs, view = None):
        diags.append(Diagnostic(rule, *xs, view = view, location = location))

    # No explicit synchronization, no abstract variables.
    for e in acc.sync_ops:
        add(DR.no_sync, format_statement(e), view = target_view(e.target))
    for e in acc.abstract_ops:
        add(DR.abstract_access, format_statement(e), view = target_view(e.target))

    # Every access is covered by a mode at its site.
    for view in acc.accessed_views:
        m = block.mode_for(view)
        for site in SITES.keys():
            if acc.writes_at(view, site) and not mode_covers(m, site, WRITE_KINDS):
                add(DR.undeclared_write, site, view = view)
            if acc.reads_at(view, site) and not mode_covers(m, site, READ_KINDS):
                add(DR.undeclared_read, site, view = view)

    # W modes are honored on all paths (and all elements).
    for m in block.modes:
        decl = views.get(m.view)
        if m.kind != MODE_KINDS.W or decl is None:
            continue
        missing = missing_writes(block.body, decl, m.site)
        if not missing:
            continue
        elif decl.is_scalar:
            add(DR.w_not_all_paths, view = m.view)
        else:
            add(DR.w_not_all_elements, format_offsets(missing), view = m.view)

    # Writes reaching an overlapping view need W or RW on it.
    if registry is not None:
        for (view, site), offsets in acc.written.items():
            decl = views.get(view)
            if decl is None or decl.is_scalar:
                continue
            for y in sorted(registry.query(decl), key = lambda v: v.name):
                if mode_covers(block.mode_for(y.name), site, WRITE_KINDS):
                    continue
                hit = written_indices(decl, offsets) & set(shared_indices(decl, y))
                if hit:
                    add(DR.overlap_missing_rw, format_offsets(sorted(hit)), y.name, site, view = view)

    # Declared modes never exercised.
    if notes:
        used = block_references(block)
        for m in block.modes:
            if not m.shadow and m.view not in used:
                add(DR.unused_mode, m.formatted(markers = False), view = m.view)

    return list(dict.fromkeys(diags))

def mode_covers(mode, site, kinds):
    return mode is not None and mode.site == site and mode.kind in kinds

def written_indices(decl, offsets):
    # Absolute indices a set of written offsets can reach.
    if None in offsets:
        return set(decl.indices)
    else:
        return {decl.lo + o for o in offsets}

def format_offsets(offsets):
    return CON.comma_join.join(str(i) for i in offsets)

def block_references(block):
    # Views named by the body's effects and conditions.
    body_only = DeclBlock((), block.body)
    return set(body_only.views)

####
# Localised access: no variable is accessed from both sites within one
# body. Applies to raw bodies, which have no modes to enforce it.
####

def check_localised(block, location = None):
    # Takes a DeclBlock or a bare statement.
    body = block.body if isinstance(block, DeclBlock) else block
    sites = defaultdict(set)
    for e in effects_in(body):
        view = target_view(e.target)
        if view is not None:
            sites[view].add(e.site)
    return [
        Diagnostic(DR.mixed_site, view = view, location = location)
        for view, ss in sites.items()
        if len(ss) > 1
    ]

####
# Checking programs.
####

def check_program(program, registry = None, spans = None, notes = False):
    # Returns the diagnostics of every block, in order. A program with
    # no error diagnostics is well-declared.
    if registry is None:
        registry = OverlapRegistry.from_program(program)
    spans = spans or {}
    return [
        d
        for i, b in enumerate(program.blocks)
        for d in check_block(
            b,
            program.view_map,
            registry = registry,
            location = spans.get(i),
            notes = notes,
        )
    ]

def errors_in(diags):
    return [d for d in diags if d.is_error]
