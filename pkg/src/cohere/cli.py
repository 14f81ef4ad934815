import argparse
import json
import os
import sys
import traceback

from datetime import datetime
from io import StringIO
from pathlib import Path
from textwrap import dedent
from short_con import constants

from .diagnostics import DIAGNOSTIC_DETAILS
from .overlap import BACKENDS
from .plan import CoherencePlan
from .semantics import OUTCOMES
from .syntax import statement_lines
from .version import __version__

from .utils import (
    CON,
    MSG_FORMATS as MF,
    PrefType,
    bitstring,
    bitstring_pref,
    list_of_str,
    posint_pref,
    positive_int,
    read_from_file,
    wrap_text,
)

####
# Entry point.
####

def main(args = None, **kws):
    args = sys.argv[1:] if args is None else args
    cli = CliCohere(args, **kws)
    cli.run()
    sys.exit(cli.exit_code)

####
# A class to do the work of main() in way amenable to convenient testing.
####

class CliCohere:

    COMMANDS = constants('Commands', (
        'check',
        'run',
        'trace',
        'infer',
        'translate',
    ))

    EXIT_CODES = {
        OUTCOMES.done: CON.exit_ok,
        OUTCOMES.stuck: CON.exit_stuck,
        OUTCOMES.fuel_exhausted: CON.exit_fuel,
    }

    ####
    # Initializer.
    ####

    def __init__(self,
                 args,
                 stdout = sys.stdout,
                 stderr = sys.stderr,
                 logfh = None):

        # Attributes received as arguments.
        self.args = args
        self.stdout = stdout
        self.stderr = stderr
        self.logfh = logfh

        # Attributes set during do_prepare():
        # - Command-line arguments and options.
        # - The program text.
        # - The CoherencePlan instance.
        self.opts = None
        self.text = None
        self.plan = None

        # Status tracking:
        # - The exit_code attribute governs the self.done property
        # - Datetime when the log file was written.
        # - Attributes ensure each run() sub-step executes only once.
        self.exit_code = None
        self.logged_at = None
        self.has_prepared = False
        self.has_executed = False

    ####
    # The top-level run() method and its immediate sub-steps.
    ####

    def run(self):
        self.do_prepare()
        if not self.done:
            self.do_command()
        if self.plan is not None:
            self.write_log_file()

    def do_prepare(self):
        # Don't execute more than once.
        if self.has_prepared:
            return
        else:
            self.has_prepared = True

        # Parse args.
        self.opts = self.parse_command_line_args()
        if self.done:
            return
        else:
            opts = self.opts

        # Read the program.
        try:
            self.text = read_from_file(opts.file)
        except Exception as e:
            self.wrapup(CON.exit_usage, MF.file_reading_failed.format(opts.file, e))
            return

        # Initialize and prepare the CoherencePlan.
        self.plan = CoherencePlan(
            self.text,
            raw = opts.raw,
            path = opts.file,
            overlap = not opts.no_overlap,
            backend = opts.backend,
            fuel = opts.fuel,
            schedule = opts.schedule,
            notes = True,
        )
        plan = self.plan
        plan.prepare()

        # Halt if preparation failed.
        if plan.parse_failed:
            e = plan.error
            line = e.params.get('line')
            col = e.params.get('col')
            msg = MF.parse_failed_cli.format(opts.file, line, col, e.msg)
            self.wrapup(CON.exit_usage, msg)
        elif plan.failed:
            self.wrapup(CON.exit_fail, MF.prepare_failed.format(plan.error.msg))

    def do_command(self):
        # Don't execute more than once.
        if self.has_executed:
            return
        else:
            self.has_executed = True

        cmd = self.opts.command
        handlers = {
            self.COMMANDS.check: self.do_check,
            self.COMMANDS.run: self.do_run,
            self.COMMANDS.trace: self.do_run,
            self.COMMANDS.infer: self.do_infer,
            self.COMMANDS.translate: self.do_translate,
        }
        try:
            handlers[cmd]()
        except Exception as e: # pragma: no cover
            self.wrapup_with_tb(MF.command_raised.format(cmd))

    ####
    # Commands.
    ####

    def do_check(self):
        plan = self.plan
        diags = plan.diagnostics
        if self.opts.json:
            self.write_records(d.as_record for d in diags)
        elif diags:
            self.write_lines(d.formatted for d in diags)

        if plan.errors:
            self.wrapup(CON.exit_fail, MF.check_failed.format(len(plan.errors)))
        elif self.opts.json:
            self.wrapup(CON.exit_ok, None)
        elif self.opts.raw:
            self.wrapup(CON.exit_ok, MF.localised)
        else:
            self.wrapup(CON.exit_ok, MF.well_declared)

    def do_run(self):
        res = self.plan.execute()
        tracing = self.opts.trace or self.opts.command == self.COMMANDS.trace

        if self.opts.json:
            if tracing:
                self.write_records(t.as_dict for t in res.trace)
            d = self.plan.as_dict
            summary = {
                k : d[k]
                for k in ('outcome', 'store', 'stuck', 'checkpoints')
            }
            self.write_records([summary])
        else:
            lines = []
            if tracing:
                lines.extend(
                    MF.trace_line.format(i, t.rule, format_head(t.head), format_delta(t.delta))
                    for i, t in enumerate(res.trace, 1)
                )
            lines.append(MF.outcome_line.format(res.outcome))
            lines.extend(
                f'{k} {p.local} {p.remote}'
                for k, p in res.store.sorted_items()
            )
            if res.stuck is not None:
                lines.append(MF.stuck_line.format(res.stuck.formatted))
            lines.extend(
                MF.checkpoint_line.format(c.block, c.formatted)
                for c in self.plan.checkpoints
                if not c.ok
            )
            self.write_lines(lines)

        self.wrapup(self.EXIT_CODES[res.outcome], None)

    def do_infer(self):
        self.stdout.write(self.plan.inferred_text())
        self.wrapup(CON.exit_ok, None)

    def do_translate(self):
        self.write_lines(statement_lines(self.plan.translated()))
        self.wrapup(CON.exit_ok, None)

    ####
    # Output helpers.
    ####

    def write_lines(self, lines):
        for line in lines:
            self.stdout.write(line + CON.newline)

    def write_records(self, records):
        # Newline-delimited JSON.
        self.write_lines(json.dumps(r) for r in records)

    ####
    # Helpers to finish or cut-short the run() sub-steps.
    ####

    @property
    def done(self):
        return self.exit_code is not None

    def wrapup(self, code, msg):
        # Writes a newline-terminated message (if any) and sets exit_code.
        # The latter is used by the run() sub-steps to short-circuit.
        if msg is not None:
            fh = self.stdout if code == CON.exit_ok else self.stderr
            msg = msg if msg.endswith(CON.newline) else msg + CON.newline
            fh.write(msg)
        self.exit_code = code

    def wrapup_with_tb(self, fmt):
        # Called in a raised-exception context.
        # Takes a message format and builds a wrapup() message
        # by adding the traceback.
        tb = traceback.format_exc()
        msg = fmt.format(tb)
        self.wrapup(CON.exit_fail, msg)

    ####
    # Command-line argument handling.
    ####

    def parse_command_line_args(self):
        # Create the parser.
        ap = self.create_arg_parser()

        # Use argparse to parse self.args.
        #
        # In event of parsing failure, argparse tries to exit
        # with usage plus error message. We capture that output
        # to standard error in a StringIO so we can emit the output
        # via our own machinery.
        try:
            real_stderr = sys.stderr
            sys.stderr = StringIO()
            opts = ap.parse_args(self.args)
        except SystemExit as e:
            msg = sys.stderr.getvalue()
            if msg.startswith('usage:'):
                msg = 'U' + msg[1:]
            self.wrapup(CON.exit_usage, msg)
            return None
        finally:
            sys.stderr = real_stderr

        # Load user preferences.
        prefs = self.load_preferences()
        if self.done:
            return None

        # Merge the preferences into the opts.
        opts = self.merge_opts_prefs(opts, prefs)
        if self.done:
            return None

        # Deal with special options that will lead to an early, successful exit.
        if opts.help:
            # Capitalize the initial "Usage".
            msg = 'U' + ap.format_help()[1:]
            self.wrapup(CON.exit_ok, msg)
            return None
        elif opts.details:
            msg = self.wrapped_post_eplilog(ap)
            self.wrapup(CON.exit_ok, msg)
            return None
        elif opts.version:
            self.wrapup(CON.exit_ok, MF.cli_version_msg)
            return None

        # A command needs a program file.
        if not (opts.command and opts.file):
            self.wrapup(CON.exit_usage, MF.file_required)
            return None
        else:
            return opts

    def load_preferences(self):
        # Return empty if there is no user-preferences file.
        path = self.user_prefs_path
        if not path.is_file():
            return {}

        # Try to read the preferences.
        try:
            with open(path, encoding = CON.encoding) as fh:
                return json.load(fh)
        except Exception as e:
            msg = MF.prefs_reading_failed.format(str(path))
            self.wrapup_with_tb(msg)

    def merge_opts_prefs(self, opts, prefs):
        # Use the command-line options configuration data to
        # create a dict of PrefType instances.
        ptypes = {
            pt.name : pt
            for pt in (self.oc_to_preftype(oc) for oc in CLI.opts_config)
        }

        # Confirm that the prefs keys are valid.
        invalid = set(prefs) - set(ptypes)
        if invalid:
            invalid = CON.comma_space.join(sorted(invalid))
            msg = MF.invalid_pref_keys.format(invalid)
            self.wrapup(CON.exit_fail, msg)
            return None

        # Check data types of the prefs.
        for name, val in prefs.items():
            pt = ptypes[name]
            expected = pt.check_value(val)
            if expected:
                msg = MF.invalid_pref_val.format(pt.name, expected, val)
                self.wrapup(CON.exit_fail, msg)
                return None

        # Merge preferences into opts. If the current opts attribute is unset
        # and if the preference was not disabled via --disable, apply the
        # preference to opts.
        for name, val in prefs.items():
            if name not in opts.disable:
                current = getattr(opts, name)
                if current in CLI.unset_opt_vals:
                    setattr(opts, name, val)

        # Apply real defaults to any attributes that were
        # not set either in user-prefs or on the command line.
        for oc in CLI.opts_config:
            if CLI.real_default in oc:
                name = parse_oc_name(oc)
                if getattr(opts, name) in CLI.unset_opt_vals:
                    setattr(opts, name, oc[CLI.real_default])

        return opts

    def oc_to_preftype(self, oc):
        name = parse_oc_name(oc)
        valid = oc[CLI.dtype]
        return PrefType(name, valid)

    @property
    def user_prefs_path(self):
        return self.app_directory / CON.prefs_file_name

    def create_arg_parser(self):
        # Define parser.
        ap = argparse.ArgumentParser(
            prog = CON.app_name,
            description = CLI.description,
            add_help = False,
        )
        # Add arguments, in argument-groups.
        # The presense of CLI.group in the configuration dict (oc)
        # signals the start of each new argument-group.
        arg_group = None
        for oc in CLI.opts_config:
            kws = dict(oc)
            kws.pop(CLI.dtype)
            kws.pop(CLI.real_default, None)
            if CLI.group in kws:
                arg_group = ap.add_argument_group(kws.pop(CLI.group))
            xs = kws.pop(CLI.names).split()
            arg_group.add_argument(*xs, **kws)
        # Return parser.
        return ap

    def wrapped_post_eplilog(self, ap):
        # Use the argparse help text to compute the desired width.
        lines = ap.format_help().split(CON.newline)
        width = max(len(line) for line in lines)

        # Split the post-epilog into paragraphs.
        # Wrap the paragraph unless it is a heading or indented.
        paras = []
        for p in CLI.post_epilog.split(CON.para_break):
            if not p.startswith('  ') and not p.endswith('----'):
                p = wrap_text(p, width)
            paras.append(p)

        # Join the paragraphs back into a block of text.
        return CON.para_break.join(paras)

    ####
    # Logging.
    ####

    def write_log_file(self):
        # Bail if we aren't logging.
        if self.opts.nolog:
            return

        # Otherwise, prepare the log file path and logging data.
        self.logged_at = self.logged_at or datetime.now()
        path = self.log_file_path
        d = self.log_data

        # Try to write the logging data.
        try:
            json_text = json.dumps(d, indent = 4)
            if self.logfh:
                self.logfh.write(json_text)
            Path(path).parent.mkdir(parents = True, exist_ok = True)
            with open(path, 'w', encoding = CON.encoding) as fh:
                fh.write(json_text)
        except Exception as e: # pragma: no cover
            code = self.exit_code
            self.wrapup_with_tb(MF.log_writing_failed)
            self.exit_code = code

    @property
    def app_directory(self):
        app_dir = os.environ.get(CON.app_dir_env_var)
        if app_dir:
            return Path(app_dir)
        else:
            return Path.home() / (CON.period + CON.app_name)

    @property
    def log_file_path(self):
        now = self.logged_at.strftime(CON.datetime_fmt)
        return self.app_directory / f'{now}-{self.opts.command}.{CON.logfile_ext}'

    @property
    def log_data(self):
        d = dict(
            version = __version__,
            current_directory = str(Path.cwd()),
            opts = vars(self.opts),
            exit_code = self.exit_code,
        )
        d.update(**self.plan.as_dict)
        return d

####
# Formatting trace records.
####

def format_head(stmt):
    # The first line of a statement: eg, "if (valid(x)) {".
    lines = statement_lines(stmt)
    return lines[0] if lines else ''

def format_delta(delta):
    if not delta:
        return CON.hyphen
    return CON.comma_join.join(f'{k}: {old} -> {new}' for k, old, new in delta)

####
# Configuration for command-line argument parsing.
####

def parse_oc_name(oc):
    return oc['names'].split()[0].lstrip(CON.hyphen).replace(CON.hyphen, '_')

def catalog_lines():
    return CON.newline.join(
        f'  {rule:<23}{text}'
        for rule, text in DIAGNOSTIC_DETAILS.items()
    )

class CLI:

    # Program help text: description and explanatory text.

    description = dedent('''
        Checks, runs and extends programs annotated with access modes
        for data shared between a local and a remote memory. Each
        location carries a validity pair (local, remote) tracking
        which copies hold usable data.
    ''')

    post_epilog = dedent('''
        Commands
        --------

          check      Report diagnostics; exit 0 if the program is well-declared.
          run        Translate access modes and run from the initial store.
          trace      Same as run --trace.
          infer      Print the program with modes extended for overlapping views.
          translate  Print the synchronization code generated from the modes.

        Programs
        --------

        A program declares scalars, buffers and views onto buffers,
        followed by blocks. A block lists access modes and a body:

          scalar x
          buffer b[10]
          view v = b[0:4]
          RW(x), GW(v) { w x; gw v[0]; gw v[1]; gw v[2]; gw v[3]; gw v[4]; }

        Modes R, W and RW apply to the local site; GR, GW and GRW to the
        remote site. Effects r, w, push, pull and noop act locally; their
        g-prefixed forms act remotely. Conditions are valid(x) and
        gvalid(x), which test the local or remote flag of a scalar or
        an element such as v[2], and opaque, resolved by --schedule (0
        and 1 per decision, false once exhausted). With --raw, a program is
        declarations followed by bare statements, and undeclared names
        are scalars.

        Diagnostics
        -----------

    ''').lstrip() + catalog_lines() + dedent('''


        Exit codes
        ----------

          0  Success: well-declared, or run ended done.
          1  Diagnostics reported, or invalid options or preferences.
          2  Usage error, unreadable file, or parse error.
          3  Run got stuck.
          4  Run exhausted its fuel.
    ''').rstrip()

    # Important key names in opts_config.
    names = 'names'
    group = 'group'
    dtype = 'dtype'
    real_default = 'real_default'

    # Values in the parsed opts indicating that the user did not
    # set the option on the command line. Used when merging
    # the user preferences into opts.
    unset_opt_vals = (False, None, [])

    # Argument configuration for argparse.
    opts_config = (

        #
        # Command and program.
        #
        {
            group: 'Command',
            names: 'command',
            'nargs': '?',
            'choices': CliCohere.COMMANDS.keys(),
            'metavar': 'COMMAND',
            'help': 'One of: ' + CON.comma_join.join(CliCohere.COMMANDS.keys()),
            dtype: str,
        },
        {
            names: 'file',
            'nargs': '?',
            'metavar': 'FILE',
            'help': 'Program file',
            dtype: str,
        },
        {
            names: '--raw',
            'action': 'store_true',
            'help': 'Program is declarations plus bare statements, with no modes',
            dtype: bool,
        },

        #
        # Execution.
        #
        {
            group: 'Execution',
            names: '--fuel',
            'metavar': 'N',
            'type': positive_int,
            'default': None,
            real_default: CON.default_fuel,
            'help': f'Maximum number of reduction steps [default: {CON.default_fuel}]',
            dtype: posint_pref,
        },
        {
            names: '--schedule',
            'metavar': 'BITS',
            'type': bitstring,
            'default': None,
            real_default: '',
            'help': 'Values of opaque conditions, eg 0110 [default: all false]',
            dtype: bitstring_pref,
        },
        {
            names: '--trace',
            'action': 'store_true',
            'help': 'List each reduction step with its rule and store changes',
            dtype: bool,
        },

        #
        # Overlapping views.
        #
        {
            group: 'Overlapping views',
            names: '--no-overlap',
            'action': 'store_true',
            'help': 'Do not extend access modes for overlapping views',
            dtype: bool,
        },
        {
            names: '--backend',
            'choices': BACKENDS.keys(),
            'default': None,
            real_default: BACKENDS.list,
            'help': f'Overlap registry implementation [default: {BACKENDS.list}]',
            dtype: str,
        },

        #
        # Output.
        #
        {
            group: 'Output',
            names: '--json',
            'action': 'store_true',
            'help': 'Emit newline-delimited JSON records',
            dtype: bool,
        },
        {
            names: '--nolog',
            'action': 'store_true',
            'help': 'Suppress logging',
            dtype: bool,
        },

        #
        # Other.
        #
        {
            group: 'Other',
            names: '--disable',
            'nargs': '+',
            'metavar': 'FLAG',
            'default': [],
            'help': 'Disable flag options that were set true in user preferences',
            dtype: list_of_str,
        },
        {
            names: '--help -h',
            'action': 'store_true',
            'help': 'Display this help message and exit',
            dtype: bool,
        },
        {
            names: '--details',
            'action': 'store_true',
            'help': 'Display additional help details and exit',
            dtype: bool,
        },
        {
            names: '--version',
            'action': 'store_true',
            'help': 'Display the version number and exit',
            dtype: bool,
        },

    )

    for oc in opts_config:
        if parse_oc_name(oc) == 'disable':
            oc['choices'] = tuple(
                parse_oc_name(oc)
                for oc in opts_config
                if oc.get('action') == 'store_true'
            )
            break
