from .checker import check_localised, check_program, errors_in
from .dsl import format_program, format_raw, parse
from .modes import ProgramRun, execute_program, translate_program
from .overlap import BACKENDS, OverlapRegistry, rewrite_program
from .semantics import Schedule, initial_store, run
from .syntax import normalize

from .utils import (
    CON,
    CohereError,
    ParseError,
    MSG_FORMATS as MF,
)

class CoherencePlan:

    def __init__(self,
                 # Program source.
                 text,
                 raw = False,
                 path = None,
                 # Overlap inference.
                 overlap = True,
                 backend = None,
                 # Execution.
                 fuel = CON.default_fuel,
                 schedule = None,
                 # Checking.
                 notes = False,
                 ):

        # Inputs.
        self.text = text
        self.raw = raw
        self.path = path
        self.overlap = overlap
        self.backend = backend or BACKENDS.list
        self.fuel = fuel
        self.schedule = schedule or ''
        self.notes = notes

        # Set during prepare():
        # - The parsed source.
        # - The program to check and run (rewritten unless overlap is off).
        # - The overlap registry.
        # - Diagnostics, or the error that stopped preparation.
        self.source = None
        self.program = None
        self.registry = None
        self.diagnostics = []
        self.error = None

        # Set during execute().
        self.result = None

        # Status tracking.
        self.has_prepared = False

    ####
    #
    # Preparation: parse, register views, extend modes for overlapping
    # views, and check.
    #
    # The method does not raise; rather, errors that stop preparation are
    # stored in self.error and diagnostics in self.diagnostics.
    #
    ####

    def prepare(self):
        # Don't prepare more than once.
        if self.has_prepared:
            return
        else:
            self.has_prepared = True

        # Parse.
        try:
            self.source = parse(self.text, raw = self.raw)
        except ParseError as e:
            self.error = e
            return

        # Register the array views and extend the modes.
        try:
            program = self.source.program
            self.registry = OverlapRegistry.from_program(program, backend = self.backend)
            if self.overlap:
                program = rewrite_program(program, self.registry)
            self.program = program
        except CohereError as e:
            self.error = e
            return

        # Check. Raw bodies have no modes: only the localised lint applies.
        if self.raw:
            self.diagnostics = check_localised(self.source.body)
        else:
            self.diagnostics = check_program(
                self.program,
                registry = self.registry,
                spans = self.source.spans,
                notes = self.notes,
            )

    @property
    def failed(self):
        # Preparation stopped before checking.
        return self.error is not None

    @property
    def parse_failed(self):
        return isinstance(self.error, ParseError)

    @property
    def errors(self):
        return errors_in(self.diagnostics)

    @property
    def certified(self):
        return not self.failed and not self.errors

    def ensure_prepared(self):
        self.prepare()
        if self.failed:
            raise CohereError(MF.prepare_failed.format(self.error.msg))

    ####
    # Outputs.
    ####

    def translated(self):
        # The code that run() executes: the translated program, or the
        # normalized body of a raw program.
        self.ensure_prepared()
        if self.raw:
            return normalize(self.source.body)
        else:
            return translate_program(self.program)

    def inferred_text(self):
        self.ensure_prepared()
        if self.raw:
            return format_raw(self.program, self.source.body)
        else:
            return format_program(self.program, markers = True)

    def execute(self):
        # Runs the program from the initial store. Stuck and fuel
        # exhaustion are outcomes in self.result, not errors.
        self.ensure_prepared()
        schedule = Schedule.from_text(self.schedule)
        if self.raw:
            self.result = run(
                self.source.body,
                initial_store(self.program.views),
                self.fuel,
                schedule = schedule,
                views = self.program.view_map,
            )
        else:
            self.result = execute_program(
                self.program,
                fuel = self.fuel,
                schedule = schedule,
            )
        return self.result

    @property
    def checkpoints(self):
        if isinstance(self.result, ProgramRun):
            return self.result.checkpoints
        else:
            return ()

    ####
    # Other info.
    ####

    @property
    def as_dict(self):
        # The plan as a dict.
        res = self.result
        return dict(
            # Primary arguments.
            path = self.path,
            raw = self.raw,
            overlap = self.overlap,
            backend = self.backend,
            fuel = self.fuel,
            schedule = self.schedule,
            # Preparation.
            error = None if self.error is None else self.error.msg,
            diagnostics = [d.as_record for d in self.diagnostics],
            # Execution.
            outcome = None if res is None else res.outcome,
            store = None if res is None else res.store.as_dict,
            stuck = None if res is None or res.stuck is None else res.stuck.formatted,
            checkpoints = [
                dict(block = c.block, violations = [f'{v}: {k}' for v, k in c.violations])
                for c in self.checkpoints
            ],
            trace_length = None if res is None else len(res.trace),
        )
