from dataclasses import dataclass, field
from lark import Lark, Token, UnexpectedInput

from .effects import EFFECTS, SYNC_EFFECTS
from .syntax import (
    NOOP,
    OPS,
    AccessMode,
    AnnotatedProgram,
    BufferDecl,
    DeclBlock,
    Effect,
    ElementRef,
    If,
    IsValid,
    Opaque,
    RemIsValid,
    Scalar,
    ViewDecl,
    ViewRef,
    While,
    sequence,
    statement_lines,
)
from .utils import CON, CohereError, ParseError, MSG_FORMATS as MF

####
# Grammar.
#
# An annotated program is declarations followed by blocks. A raw program
# is declarations followed by bare statements. Remote modes and effects
# carry a G (or g) prefix.
####

GRAMMAR = r'''
    program: _decl* block*
    raw_program: _decl* _stmt*

    _decl: scalar_decl | buffer_decl | view_decl
    scalar_decl: "scalar" NAME
    buffer_decl: "buffer" NAME "[" INT "]"
    view_decl: "view" NAME "=" NAME "[" INT ":" INT "]"

    block: mode ("," mode)* body
    mode: mode_kind "(" NAME ")"
    !mode_kind: "GRW" | "GR" | "GW" | "RW" | "R" | "W"
    body: "{" _stmt* "}"

    _stmt: effect_stmt | if_stmt | while_stmt
    effect_stmt: op target ";"
    !op: "gpush" | "gpull" | "gnoop" | "push" | "pull" | "noop" | "gr" | "gw" | "r" | "w"
    target: NAME ("[" INT "]")?
    if_stmt: "if" "(" cond ")" body ("else" body)?
    while_stmt: "while" "(" cond ")" body

    ?cond: "valid" "(" target ")"   -> valid
         | "gvalid" "(" target ")"  -> gvalid
         | "opaque"                 -> opaque

    NAME: /[A-Za-z_][A-Za-z0-9_]*/

    %import common.INT
    %import common.WS
    %import common.C_COMMENT
    %import common.CPP_COMMENT
    %ignore WS
    %ignore C_COMMENT
    %ignore CPP_COMMENT
'''

PARSER = Lark(
    GRAMMAR,
    start = ['program', 'raw_program'],
    parser = 'lalr',
    propagate_positions = True,
)

####
# Parsed source.
####

@dataclass(frozen = True)
class SourceProgram:
    text: str
    program: AnnotatedProgram
    body: object = NOOP
    raw: bool = False
    # Block index => (line, col) of the block's first mode.
    spans: dict = field(default_factory = dict, compare = False)

    @property
    def views(self):
        return self.program.view_map

def parse(text, raw = False):
    # Returns a SourceProgram. Raises ParseError, with line and col
    # params, for syntax errors and for declaration errors.
    start = 'raw_program' if raw else 'program'
    try:
        tree = PARSER.parse(text, start = start)
    except UnexpectedInput as e:
        msg = MF.parse_syntax.format(describe_unexpected(e))
        raise ParseError(msg, line = e.line, col = e.column)
    return ProgramBuilder(text, raw).build(tree)

def describe_unexpected(e):
    tok = getattr(e, 'token', None)
    if tok is not None:
        return f'unexpected {str(tok)!r}' if str(tok) else 'unexpected end of input'
    char = getattr(e, 'char', None)
    return f'unexpected character {char!r}' if char else 'unexpected input'

####
# Building the data model from the parse tree.
#
# Names are resolved while walking: declarations come first, so every
# reference in a block can be checked against them.
####

class ProgramBuilder:

    def __init__(self, text, raw = False):
        self.text = text
        self.raw = raw
        self.buffers = {}
        self.views = {}
        self.blocks = []
        self.spans = {}

    def build(self, tree):
        stmts = []
        for node in tree.children:
            if node.data == 'scalar_decl':
                self.scalar_decl(node)
            elif node.data == 'buffer_decl':
                self.buffer_decl(node)
            elif node.data == 'view_decl':
                self.view_decl(node)
            elif node.data == 'block':
                self.block(node)
            else:
                stmts.append(self.statement(node))

        try:
            program = AnnotatedProgram(
                tuple(self.buffers.values()),
                tuple(self.views.values()),
                tuple(self.blocks),
            )
        except CohereError as e:
            raise ParseError(e.msg, line = 1, col = 1)

        return SourceProgram(
            text = self.text,
            program = program,
            body = sequence(*stmts),
            raw = self.raw,
            spans = self.spans,
        )

    ####
    # Declarations.
    ####

    def declare(self, tok, decl, table):
        if tok in self.buffers or tok in self.views:
            self.fail(MF.duplicate_name.format(str(tok)), tok)
        table[str(tok)] = decl

    def scalar_decl(self, node):
        name, = node.children
        self.declare(name, ViewDecl.scalar(str(name)), self.views)

    def buffer_decl(self, node):
        name, n = node.children
        if int(n) < 1:
            self.fail(MF.invalid_length.format(str(name), int(n)), n)
        self.declare(name, BufferDecl(str(name), int(n)), self.buffers)

    def view_decl(self, node):
        name, buf, lo, hi = node.children
        b = self.buffers.get(str(buf))
        if b is None:
            self.fail(MF.undeclared_buffer.format(str(name), str(buf)), buf)
        elif not (int(lo) <= int(hi) < b.length):
            msg = MF.invalid_interval.format(str(name), int(lo), int(hi), b.name, b.length)
            self.fail(msg, lo)
        self.declare(name, ViewDecl(str(name), b.name, int(lo), int(hi)), self.views)

    ####
    # Blocks and statements.
    ####

    def block(self, node):
        *mode_nodes, body = node.children
        modes = []
        seen = set()
        for m in mode_nodes:
            kind, name = m.children
            view = self.resolve(name)
            if view.name in seen:
                self.fail(MF.duplicate_mode.format(view.name), name)
            seen.add(view.name)
            modes.append(AccessMode.from_label(str(kind.children[0]), view.name))
        self.spans[len(self.blocks)] = (node.meta.line, node.meta.column)
        self.blocks.append(DeclBlock(tuple(modes), self.body(body)))

    def body(self, node):
        return sequence(*(self.statement(s) for s in node.children))

    def statement(self, node):
        if node.data == 'effect_stmt':
            op, target = node.children
            kind, remote = OPS[str(op.children[0])]
            return Effect(kind, self.target(target, kind), remote = remote)
        elif node.data == 'if_stmt':
            cond, then, *orelse = node.children
            orelse = self.body(orelse[0]) if orelse else NOOP
            return If(self.condition(cond), self.body(then), orelse)
        else:
            cond, body = node.children
            return While(self.condition(cond), self.body(body))

    def target(self, node, kind):
        name, *index = node.children
        view = self.resolve(name)
        if kind in SYNC_EFFECTS:
            if index:
                self.fail(MF.parse_sync_index.format(view.name), name)
            return ViewRef(view.name)
        elif view.is_scalar:
            if index:
                self.fail(MF.parse_not_array.format(view.name), name)
            return Scalar(view.name)
        elif not index:
            self.fail(MF.parse_needs_index.format(view.name), name)
        else:
            i = int(index[0])
            if i >= view.length:
                self.fail(MF.index_out_of_range.format(i, view.name, view.length), index[0])
            return ElementRef(view.name, i)

    def condition(self, node):
        if node.data == 'opaque':
            return Opaque()
        # Conditions read one concrete location, named like a read target.
        target, = node.children
        loc = self.target(target, EFFECTS.read)
        if node.data == 'valid':
            return IsValid(loc)
        else:
            return RemIsValid(loc)

    ####
    # Names.
    ####

    def resolve(self, tok):
        # Returns the ViewDecl a name refers to. In raw programs an
        # undeclared name is declared as a scalar on first use.
        name = str(tok)
        view = self.views.get(name)
        if view is not None:
            return view
        elif name in self.buffers:
            self.fail(MF.undeclared_view.format(name), tok)
        elif self.raw:
            view = ViewDecl.scalar(name)
            self.views[name] = view
            return view
        else:
            self.fail(MF.undeclared_view.format(name), tok)

    def fail(self, msg, tok):
        if isinstance(tok, Token):
            raise ParseError(msg, line = tok.line, col = tok.column)
        else:
            raise ParseError(msg, line = 1, col = 1)

####
# Printing programs as DSL text.
####

def declaration_lines(program):
    return [
        *(f'buffer {b.name}[{b.length}]' for b in program.buffers),
        *(v.formatted for v in program.views),
    ]

def format_program(program, markers = True):
    # Mode markers are comments, so the output parses back.
    lines = declaration_lines(program)
    for b in program.blocks:
        if lines:
            lines.append('')
        modes = CON.comma_join.join(m.formatted(markers = markers) for m in b.modes)
        lines.append(f'{modes} {{')
        lines.extend(statement_lines(b.body, 1))
        lines.append('}')
    return CON.newline.join(lines) + CON.newline

def format_raw(program, body):
    lines = declaration_lines(program)
    stmts = statement_lines(body)
    if lines and stmts:
        lines.append('')
    lines.extend(stmts)
    return CON.newline.join(lines) + CON.newline
