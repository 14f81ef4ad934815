import math

from collections import defaultdict
from dataclasses import replace as clone
from short_con import constants
from sortedcontainers import SortedKeyList

from .syntax import MODE_KINDS, WRITE_KINDS, AccessMode, DeclBlock
from .utils import CohereError, MSG_FORMATS as MF

####
# Overlap between two views: same buffer, intersecting intervals.
####

def overlaps(a, b):
    return (
        not a.is_scalar and
        a.buffer == b.buffer and
        a.lo <= b.hi and
        b.lo <= a.hi
    )

def shared_indices(a, b):
    # Absolute indices common to two views (empty if they do not overlap).
    if overlaps(a, b):
        return range(max(a.lo, b.lo), min(a.hi, b.hi) + 1)
    else:
        return range(0)

####
# Interval index backends for the views of one buffer.
#
# Both answer query(view) with the names of registered views whose
# intervals intersect the view's interval.
####

class IntervalList:
    # Views sorted by (lo, hi, name). A query scans the prefix of
    # views starting at or before the queried view's hi.

    def __init__(self):
        self.views = SortedKeyList(key = lambda v: (v.lo, v.hi, v.name))

    def insert(self, view):
        self.views.add(view)

    def remove(self, view):
        self.views.remove(view)

    def query(self, view):
        stop = self.views.bisect_key_right((view.hi, math.inf, ''))
        return {
            v.name
            for v in self.views.islice(0, stop)
            if v.hi >= view.lo
        }

class SegmentTree:
    # A segment tree over the indices [0, length - 1]. Node 1 covers the
    # whole range and node n has children 2n and 2n + 1. Each interval is
    # stored at its canonical nodes: O(log n) of them, partitioning it.
    # A node's count is the number of entries stored in its subtree,
    # letting queries skip empty subtrees.

    def __init__(self, length):
        self.length = length
        self.stored = defaultdict(set)
        self.counts = defaultdict(int)

    def insert(self, view):
        self.update(view, 1, 0, self.length - 1, add = True)

    def remove(self, view):
        self.update(view, 1, 0, self.length - 1, add = False)

    def update(self, view, node, lo, up, add):
        if view.hi < lo or up < view.lo:
            return
        if view.lo <= lo and up <= view.hi:
            if add:
                self.stored[node].add(view.name)
            else:
                self.stored[node].discard(view.name)
        else:
            mid = (lo + up) >> 1
            self.update(view, 2 * node, lo, mid, add)
            self.update(view, 2 * node + 1, mid + 1, up, add)
        self.counts[node] = (
            len(self.stored.get(node, ())) +
            self.counts.get(2 * node, 0) +
            self.counts.get(2 * node + 1, 0)
        )

    def query(self, view):
        found = set()
        self.collect(view, 1, 0, self.length - 1, found)
        return found

    def collect(self, view, node, lo, up, found):
        # Every interval stored at a node that intersects the queried view
        # covers that node, so it overlaps that view too.
        if view.hi < lo or up < view.lo or not self.counts.get(node):
            return
        found.update(self.stored.get(node, ()))
        if lo < up:
            mid = (lo + up) >> 1
            self.collect(view, 2 * node, lo, mid, found)
            self.collect(view, 2 * node + 1, mid + 1, up, found)

####
# The registry: one interval index per buffer.
####

BACKENDS = constants('RegistryBackends', (
    'list',
    'tree',
))

class OverlapRegistry:

    def __init__(self, buffers = (), backend = None):
        self.backend = backend or BACKENDS.list
        if self.backend not in BACKENDS.keys():
            raise CohereError(MF.registry_backend.format(self.backend))
        self.lengths = {b.name : b.length for b in buffers}
        self.indexes = {}
        self.views = {}

    @classmethod
    def from_program(cls, program, backend = None):
        reg = cls(program.buffers, backend = backend)
        for v in program.array_views:
            reg.insert(v)
        return reg

    def index_for(self, buffer):
        ix = self.indexes.get(buffer)
        if ix is None:
            if self.backend == BACKENDS.tree:
                n = self.lengths.get(buffer)
                if n is None:
                    raise CohereError(MF.undeclared_buffer.format(None, buffer))
                ix = SegmentTree(n)
            else:
                ix = IntervalList()
            self.indexes[buffer] = ix
        return ix

    def insert(self, view):
        if view.is_scalar:
            raise CohereError(MF.registry_scalar.format(view.name))
        elif view.name in self.views:
            raise CohereError(MF.registry_duplicate.format(view.name))
        self.index_for(view.buffer).insert(view)
        self.views[view.name] = view

    def remove(self, view):
        if view.name not in self.views:
            raise CohereError(MF.registry_absent.format(view.name))
        registered = self.views.pop(view.name)
        self.index_for(registered.buffer).remove(registered)

    def query(self, view):
        # Registered views, other than the queried one, overlapping it.
        # An unregistered view is queried by its interval.
        if view.is_scalar or view.buffer not in self.indexes:
            return frozenset()
        names = self.indexes[view.buffer].query(view)
        names.discard(view.name)
        return frozenset(self.views[nm] for nm in names)

    def lookup(self, name):
        return self.views.get(name)

    def __contains__(self, view):
        return view.name in self.views

    def __len__(self):
        return len(self.views)

def interval_order(view):
    return (view.lo, view.hi, view.name)

####
# Access mode extension for overlapping arrays.
#
# Declared modes are kept. A W on x infers RW at the same site for every
# y overlapping x unless y is itself declared W at that site; an RW on x
# infers RW for every overlapping y. A view that already has a mode is
# upgraded to RW rather than given a second entry; a view with no mode
# receives a shadow entry. Only declared entries trigger inference.
####

def infer_overlap_closure(modes, registry):
    modes = tuple(modes)
    declared = {}
    for m in modes:
        if m.view in declared:
            raise CohereError(MF.duplicate_mode.format(m.view))
        declared[m.view] = m

    result = dict(declared)
    for m in modes:
        kind = m.declared_kind
        if m.shadow or kind not in WRITE_KINDS:
            continue
        view = registry.lookup(m.view)
        if view is None:
            continue

        for y in sorted(registry.query(view), key = interval_order):
            ym = declared.get(y.name)
            if kind == MODE_KINDS.W and ym and ym.declared_kind == MODE_KINDS.W and ym.site == m.site:
                continue
            current = result.get(y.name)
            if current is None:
                result[y.name] = AccessMode(MODE_KINDS.RW, m.site, y.name, shadow = True)
            elif current.site != m.site:
                raise CohereError(MF.closure_site_conflict.format(y.name))
            elif current.kind != MODE_KINDS.RW:
                result[y.name] = clone(current, kind = MODE_KINDS.RW, upgraded_from = current.kind)

    return tuple(result.values())

def rewrite_program(program, registry = None):
    # Replaces each block's modes by their overlap closure.
    if registry is None:
        registry = OverlapRegistry.from_program(program)
    blocks = tuple(
        DeclBlock(infer_overlap_closure(b.modes, registry), b.body)
        for b in program.blocks
    )
    return program.with_blocks(blocks)
