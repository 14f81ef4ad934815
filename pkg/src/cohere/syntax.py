from dataclasses import dataclass, field
from short_con import constants

from .effects import EFFECTS, SYNC_EFFECTS
from .utils import CON, CohereError, MSG_FORMATS as MF

####
# Sites and access mode kinds.
####

SITES = constants('Sites', (
    'local',
    'remote',
))

MODE_KINDS = constants('ModeKinds', (
    'R',
    'W',
    'RW',
))

READ_KINDS = (MODE_KINDS.R, MODE_KINDS.RW)
WRITE_KINDS = (MODE_KINDS.W, MODE_KINDS.RW)

def site_of(remote):
    return SITES.remote if remote else SITES.local

####
# Store keys.
#
# Scalars and array elements are the concrete locations. Each declared
# view additionally owns one abstract key. Elements are keyed by buffer
# and absolute index, so overlapping views share them.
####

@dataclass(frozen = True)
class Scalar:
    name: str

    def __str__(self):
        return self.name

@dataclass(frozen = True)
class Element:
    buffer: str
    index: int

    def __str__(self):
        return f'{self.buffer}[{self.index}]'

@dataclass(frozen = True)
class Abstract:
    view: str

    def __str__(self):
        return self.view + CON.abstract_suffix

STORE_KEYS = (Scalar, Element, Abstract)

def key_order(key):
    # Sort order for listings: by name, then concrete before abstract.
    if isinstance(key, Scalar):
        return (key.name, 0, 0)
    elif isinstance(key, Element):
        return (key.buffer, 1, key.index)
    else:
        return (key.view, 2, 0)

####
# References to views, resolved against declarations at run time.
####

@dataclass(frozen = True)
class ElementRef:
    # An element x[i], with i relative to the start of the view.
    # An offset of None stands for an index unknown statically.
    view: str
    offset: int = None

    def __str__(self):
        i = '?' if self.offset is None else self.offset
        return f'{self.view}[{i}]'

@dataclass(frozen = True)
class ViewRef:
    # A whole view: the target of Push and Pull.
    view: str

    def __str__(self):
        return self.view

def target_view(target):
    # The view or scalar name a target belongs to.
    if isinstance(target, Scalar):
        return target.name
    elif isinstance(target, Element):
        return None
    else:
        return target.view

####
# Conditions.
#
# IsValid and RemIsValid read the flags of one store location: a
# scalar, an array element, or the abstract key of a view. Elements
# may be given as view-relative ElementRef values.
####

@dataclass(frozen = True)
class IsValid:
    target: object

    def __str__(self):
        return f'valid({self.target})'

@dataclass(frozen = True)
class RemIsValid:
    target: object

    def __str__(self):
        return f'gvalid({self.target})'

FLAG_CONDITIONS = (IsValid, RemIsValid)

@dataclass(frozen = True)
class Opaque:
    tag: str = None

    def __str__(self):
        return 'opaque'

####
# Statements.
####

@dataclass(frozen = True)
class Noop:

    def __str__(self):
        return ''

NOOP = Noop()

@dataclass(frozen = True)
class Effect:
    kind: str
    target: object
    remote: bool = False

    @property
    def op(self):
        prefix = CON.remote_prefix if self.remote else ''
        return prefix + OP_NAMES[self.kind]

    @property
    def site(self):
        return site_of(self.remote)

    @property
    def is_sync(self):
        return self.kind in SYNC_EFFECTS

def remote_effect(kind, target):
    return Effect(kind, target, remote = True)

@dataclass(frozen = True)
class Seq:
    first: object
    rest: object

@dataclass(frozen = True)
class If:
    cond: object
    then: object
    orelse: object = NOOP

@dataclass(frozen = True)
class While:
    cond: object
    body: object

OP_NAMES = {
    EFFECTS.read:  'r',
    EFFECTS.write: 'w',
    EFFECTS.push:  'push',
    EFFECTS.pull:  'pull',
    EFFECTS.noop:  'noop',
}

OPS = {
    prefix + name : (kind, bool(prefix))
    for kind, name in OP_NAMES.items()
    for prefix in ('', CON.remote_prefix)
}

####
# Normalization.
#
# Sequencing is associative with Noop as its neutral element. The
# canonical form is a right-nested Seq of atoms (Effect, If, While),
# or Noop for the empty program.
####

def flatten(stmt):
    # Returns the atoms of a statement's top-level sequence.
    atoms = []
    stack = [stmt]
    while stack:
        s = stack.pop()
        if isinstance(s, Seq):
            stack.append(s.rest)
            stack.append(s.first)
        elif not isinstance(s, Noop):
            atoms.append(s)
    return tuple(atoms)

def sequence(*stmts):
    # Concatenates statements into one normalized sequence.
    # Atoms are assumed normalized already.
    atoms = [a for s in stmts for a in flatten(s)]
    result = NOOP
    for a in reversed(atoms):
        result = a if isinstance(result, Noop) else Seq(a, result)
    return result

def normalize(stmt):
    atoms = []
    for a in flatten(stmt):
        if isinstance(a, If):
            a = If(a.cond, normalize(a.then), normalize(a.orelse))
        elif isinstance(a, While):
            a = While(a.cond, normalize(a.body))
        atoms.append(a)
    return sequence(*atoms)

def split_head(stmt):
    if isinstance(stmt, Seq):
        return (stmt.first, stmt.rest)
    else:
        return (stmt, NOOP)

def walk(stmt):
    # Yields every sub-term of a statement, the statement included.
    stack = [stmt]
    while stack:
        s = stack.pop()
        yield s
        if isinstance(s, Seq):
            stack.extend((s.rest, s.first))
        elif isinstance(s, If):
            stack.extend((s.orelse, s.then))
        elif isinstance(s, While):
            stack.append(s.body)

def effects_in(stmt):
    return tuple(s for s in walk(stmt) if isinstance(s, Effect))

def conditions_in(stmt):
    return tuple(
        s.cond
        for s in walk(stmt)
        if isinstance(s, (If, While))
    )

####
# Printing statements as DSL text.
####

def statement_lines(stmt, depth = 0):
    pad = CON.indent * depth
    lines = []
    for a in flatten(stmt):
        if isinstance(a, Effect):
            lines.append(f'{pad}{a.op} {a.target};')
        elif isinstance(a, If):
            lines.append(f'{pad}if ({a.cond}) {{')
            lines.extend(statement_lines(a.then, depth + 1))
            if not isinstance(a.orelse, Noop):
                lines.append(f'{pad}}} else {{')
                lines.extend(statement_lines(a.orelse, depth + 1))
            lines.append(f'{pad}}}')
        else:
            lines.append(f'{pad}while ({a.cond}) {{')
            lines.extend(statement_lines(a.body, depth + 1))
            lines.append(f'{pad}}}')
    return lines

def format_statement(stmt):
    # One-line form, eg: if (valid(x^)) { } else { pull x; pull x^; }
    return CON.space.join(line.strip() for line in statement_lines(stmt))

####
# Declarations: buffers (the mother vectors) and views onto them.
# A scalar is a degenerate view with no buffer.
####

@dataclass(frozen = True)
class BufferDecl:
    name: str
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise CohereError(MF.invalid_length.format(self.name, self.length))

@dataclass(frozen = True)
class ViewDecl:
    name: str
    buffer: str = None
    lo: int = 0
    hi: int = 0

    def __post_init__(self):
        if not (0 <= self.lo <= self.hi):
            msg = MF.invalid_interval.format(self.name, self.lo, self.hi, self.buffer, None)
            raise CohereError(msg)

    @classmethod
    def scalar(cls, name):
        return cls(name)

    @property
    def is_scalar(self):
        return self.buffer is None

    @property
    def length(self):
        return self.hi - self.lo + 1

    @property
    def indices(self):
        return range(self.lo, self.hi + 1)

    @property
    def abstract_key(self):
        return Abstract(self.name)

    @property
    def concrete_keys(self):
        if self.is_scalar:
            return (Scalar(self.name),)
        else:
            return tuple(Element(self.buffer, i) for i in self.indices)

    def element(self, offset):
        if offset is None:
            raise CohereError(MF.index_unknown.format(self.name))
        elif not (0 <= offset < self.length):
            raise CohereError(MF.index_out_of_range.format(offset, self.name, self.length))
        elif self.is_scalar:
            return Scalar(self.name)
        else:
            return Element(self.buffer, self.lo + offset)

    @property
    def formatted(self):
        if self.is_scalar:
            return f'scalar {self.name}'
        else:
            return f'view {self.name} = {self.buffer}[{self.lo}:{self.hi}]'

####
# Access modes, declaration blocks and annotated programs.
####

@dataclass(frozen = True)
class AccessMode:
    kind: str
    site: str
    view: str
    # Provenance set by overlap inference: a shadow entry names a view
    # absent from the declared modes; an upgraded entry records the
    # declared kind it replaced.
    shadow: bool = False
    upgraded_from: str = None

    @property
    def remote(self):
        return self.site == SITES.remote

    @property
    def declared_kind(self):
        return self.upgraded_from or self.kind

    @property
    def label(self):
        prefix = 'G' if self.remote else ''
        return prefix + self.kind

    @classmethod
    def from_label(cls, label, view):
        # Eg: GRW -> (RW, remote).
        if label.startswith('G'):
            return cls(label[1:], SITES.remote, view)
        else:
            return cls(label, SITES.local, view)

    def formatted(self, markers = True):
        text = f'{self.label}({self.view})'
        if markers and self.shadow:
            text += ' /*shadow*/'
        elif markers and self.upgraded_from:
            prefix = 'G' if self.remote else ''
            text += f' /*upgraded from {prefix}{self.upgraded_from}*/'
        return text

@dataclass(frozen = True)
class DeclBlock:
    modes: tuple
    body: object = NOOP

    def __post_init__(self):
        object.__setattr__(self, 'modes', tuple(self.modes))
        seen = set()
        for m in self.modes:
            if m.view in seen:
                raise CohereError(MF.duplicate_mode.format(m.view))
            seen.add(m.view)

    def mode_for(self, view):
        for m in self.modes:
            if m.view == view:
                return m
        return None

    @property
    def views(self):
        # Names referenced by the modes and by the body.
        names = [m.view for m in self.modes]
        for e in effects_in(self.body):
            names.append(target_view(e.target))
        for c in conditions_in(self.body):
            if isinstance(c, FLAG_CONDITIONS):
                names.append(target_view(c.target))
        return tuple(nm for nm in dict.fromkeys(names) if nm is not None)

@dataclass(frozen = True)
class AnnotatedProgram:
    buffers: tuple = ()
    views: tuple = ()
    blocks: tuple = ()
    view_map: dict = field(init = False, repr = False, compare = False)

    def __post_init__(self):
        for name in ('buffers', 'views', 'blocks'):
            object.__setattr__(self, name, tuple(getattr(self, name)))

        # Names are unique across buffers and views.
        seen = set()
        for d in self.buffers + self.views:
            if d.name in seen:
                raise CohereError(MF.duplicate_name.format(d.name))
            seen.add(d.name)

        # Views lie within their buffers.
        lengths = {b.name : b.length for b in self.buffers}
        for v in self.views:
            if v.is_scalar:
                continue
            elif v.buffer not in lengths:
                raise CohereError(MF.undeclared_buffer.format(v.name, v.buffer))
            elif v.hi >= lengths[v.buffer]:
                n = lengths[v.buffer]
                msg = MF.invalid_interval.format(v.name, v.lo, v.hi, v.buffer, n)
                raise CohereError(msg)

        # Blocks refer only to declared views.
        view_map = {v.name : v for v in self.views}
        for b in self.blocks:
            for nm in b.views:
                if nm not in view_map:
                    raise CohereError(MF.undeclared_view.format(nm))
        object.__setattr__(self, 'view_map', view_map)

    @property
    def array_views(self):
        return tuple(v for v in self.views if not v.is_scalar)

    def with_blocks(self, blocks):
        return AnnotatedProgram(self.buffers, self.views, tuple(blocks))
