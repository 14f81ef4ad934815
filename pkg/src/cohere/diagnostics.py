from dataclasses import dataclass
from short_con import constants

####
# Diagnostic rule identifiers and associated messages/formats.
#
# See the --details section of the command-line help for the catalog.
####

DIAGNOSTIC_RULES = DR = constants('DiagnosticRules', dict(
    # Access mode declarations (scalars).
    no_sync            = 'D2-NO-SYNC',
    abstract_access    = 'D2-ABSTRACT-ACCESS',
    undeclared_write   = 'D2-UNDECLARED-WRITE',
    undeclared_read    = 'D2-UNDECLARED-READ',
    w_not_all_paths    = 'D2-W-NOT-ALL-PATHS',
    # Arrays.
    w_not_all_elements = 'D4-W-NOT-ALL-ELEMENTS',
    # Overlapping arrays.
    overlap_missing_rw = 'OVL-MISSING-RW',
    # Lints.
    mixed_site         = 'P3-MIXED-SITE',
    unused_mode        = 'NOTE-UNUSED-MODE',
))

DIAGNOSTIC_FORMATS = {
    DR.no_sync:            'Body performs explicit synchronization: {}',
    DR.abstract_access:    'Body accesses an abstract variable: {}',
    DR.undeclared_write:   'Write on the {} site without a W or RW mode',
    DR.undeclared_read:    'Read on the {} site without an R or RW mode',
    DR.w_not_all_paths:    'W mode declared but the view is not written on every execution path',
    DR.w_not_all_elements: 'W mode declared but elements are not written on every execution path: {}',
    DR.overlap_missing_rw: 'Write to elements {} shared with view {!r}, which lacks a W or RW mode on the {} site',
    DR.mixed_site:         'View is accessed from both the local and the remote site',
    DR.unused_mode:        'Mode {} is declared but the view is never accessed',
}

DIAGNOSTIC_DETAILS = {
    DR.no_sync:            'push or pull inside an annotated body (allowed only with --raw).',
    DR.abstract_access:    'an effect targets an abstract variable directly.',
    DR.undeclared_write:   'w or gw of a view without W/RW (or GW/GRW) for it.',
    DR.undeclared_read:    'r or gr of a view without R/RW (or GR/GRW) for it.',
    DR.w_not_all_paths:    'a W scalar is not written on every path (loops may run zero times).',
    DR.w_not_all_elements: 'a W array view has elements not written on every path.',
    DR.overlap_missing_rw: 'a write reaches elements of an overlapping view lacking W/RW at that site.',
    DR.mixed_site:         'a raw body accesses one variable from both sites.',
    DR.unused_mode:        'informational: a declared mode is never exercised.',
}

SEVERITIES = constants('Severities', (
    'error',
    'note',
))

NOTE_RULES = (DR.unused_mode,)

####
# Data object to represent a diagnostic.
####

@dataclass(init = False, frozen = True)
class Diagnostic:
    rule: str
    msg: str
    view: str = None
    line: int = None
    col: int = None

    def __init__(self, rule, *xs, view = None, msg = None, location = None):
        # Custom initializer, because we need a convenience lookup to build
        # the ultimate message, given a rule and arguments.
        # To keep Diagnostic instances frozen, we modify __dict__ directly.
        line, col = location or (None, None)
        d = self.__dict__
        d['rule'] = rule
        d['msg'] = msg or self.format_for(rule).format(*xs)
        d['view'] = view
        d['line'] = line
        d['col'] = col

    @property
    def severity(self):
        return SEVERITIES.note if self.rule in NOTE_RULES else SEVERITIES.error

    @property
    def is_error(self):
        return self.severity == SEVERITIES.error

    @property
    def formatted(self):
        loc = '' if self.line is None else f'{self.line}:{self.col}: '
        view = '' if self.view is None else f' [{self.view}]'
        return f'{loc}{self.rule}{view} {self.msg}'

    @property
    def as_record(self):
        return dict(
            rule = self.rule,
            view = self.view,
            line = self.line,
            col = self.col,
            message = self.msg,
            severity = self.severity,
        )

    @classmethod
    def format_for(cls, rule):
        return DIAGNOSTIC_FORMATS[rule]

    @classmethod
    def located(cls, diag, location):
        return cls(diag.rule, view = diag.view, msg = diag.msg, location = location)
