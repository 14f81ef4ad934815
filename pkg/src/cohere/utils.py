from dataclasses import dataclass
from kwexception import Kwexception
from short_con import constants

from .version import __version__

####
# General constants.
####

class CON:
    # Application configuration.
    app_name = 'cohere'
    encoding = 'utf-8'
    app_dir_env_var = f'{app_name.upper()}_APP_DIR'
    testkit_env_var = f'{app_name.upper()}_TESTKIT_SETTINGS'

    # Characters and simple tokens.
    newline = '\n'
    para_break = newline + newline
    space = ' '
    period = '.'
    comma_join = ', '
    comma_space = ', '
    hyphen = '-'
    indent = '    '
    abstract_suffix = '^'
    remote_prefix = 'g'
    bits = ('0', '1')

    # Execution defaults.
    default_fuel = 10_000
    default_decisions = 6

    # Command-line exit codes.
    exit_ok = 0
    exit_fail = 1
    exit_usage = 2
    exit_stuck = 3
    exit_fuel = 4

    # Logging.
    datetime_fmt = '%Y-%m-%d_%H-%M-%S'
    logfile_ext = 'json'
    prefs_file_name = 'config.json'

####
# Message formats.
####

MSG_FORMATS = constants('MsgFormats', dict(
    # Construction errors in the data model.
    duplicate_name         = 'Duplicate declaration of name {!r}',
    duplicate_mode         = 'View {!r} appears twice in one access mode declaration',
    undeclared_view        = 'Undeclared view {!r}',
    undeclared_buffer      = 'View {!r} refers to undeclared buffer {!r}',
    invalid_interval       = 'View {!r} has invalid interval [{}:{}] for buffer {!r} of length {}',
    invalid_length         = 'Buffer {!r} must have length >= 1: got {}',
    unbound_post_var       = 'Effect signature post refers to unbound variable {!r}',
    repeated_pre_var       = 'Effect signature pre repeats variable {!r}',
    index_unknown          = 'Element of view {!r} has no static index',
    invalid_statement      = 'Not a statement: {!r}',
    condition_target       = 'Condition must name one location: {}',
    index_out_of_range     = 'Index {} out of range for view {!r} of length {}',
    missing_key            = 'Store has no entry for {}',
    invalid_fuel           = 'Fuel must be a positive int: got {!r}',
    # Overlap registry and closure.
    registry_duplicate     = 'View {!r} is already registered',
    registry_absent        = 'View {!r} is not registered',
    registry_scalar        = 'Scalar {!r} cannot be registered as an array view',
    registry_backend       = 'Invalid registry backend: {!r}',
    closure_site_conflict  = 'View {!r} would need access modes on both the local and the remote site',
    # Parsing.
    parse_syntax           = 'Syntax error: {}',
    parse_needs_index      = 'Array view {!r} requires an element index',
    parse_not_array        = 'Scalar {!r} cannot be indexed',
    parse_sync_index       = 'Synchronization applies to a whole view: {!r}',
    # Testkit.
    invalid_limit          = 'GenLimits.{} must be >= 1: got {!r}',
    invalid_settings       = 'Invalid testkit settings key(s): {}',
    # Error messages in CliCohere.
    file_reading_failed    = 'Could not read program file {!r}: {}',
    file_required          = 'A command and a program FILE are required',
    parse_failed_cli       = '{}:{}:{}: {}',
    prepare_failed         = 'Program preparation failed: {}',
    log_writing_failed     = 'Unexpected error during writing to log file.\n\n{}',
    prefs_reading_failed   = 'Unexpected error during reading of user preferences {!r}.\n\n{{}}',
    command_raised         = 'Unexpected error during {!r} command. Traceback follows:\n\n{{}}',
    invalid_pref_val       = 'User preferences: invalid value for {}: expected {}: got {!r}',
    invalid_pref_keys      = 'User preferences: invalid key(s): {}',
    # Other messages in CliCohere.
    check_failed           = 'Program is not well-declared: {} error(s)',
    well_declared          = 'Program is well-declared.',
    localised              = 'Program accesses every variable from one site.',
    outcome_line           = 'outcome: {}',
    stuck_line             = 'stuck: {}',
    checkpoint_line        = 'warning: abstraction incorrect after block {}: {}',
    trace_line             = 'step {}: {} | {} | {}',
    cli_version_msg        = f'{CON.app_name} v{__version__}',
))

####
# Exception classes for the project.
####

class CohereError(Kwexception):
    pass

class ParseError(CohereError):
    pass

class MissingKeyError(CohereError):
    pass

####
# Read files.
####

def read_from_file(path):
    with open(path, encoding = CON.encoding) as fh:
        return fh.read()

####
# Functions to validate command-line arguments and user preferences.
#
# The preferences checkers return None on success or the expected type
# as a str for use in error messages.
####

def positive_int(x):
    if x.isdigit():
        x = int(x)
        if x >= 1:
            return x
    raise ValueError

def bitstring(x):
    # Schedules arrive as strings of 0 and 1, eg 0101.
    if all(c in CON.bits for c in x):
        return x
    raise ValueError

def posint_pref(x):
    ok = (
        isinstance(x, int) and
        x >= 1 and
        not isinstance(x, bool)
    )
    if ok:
        return None
    else:
        return 'positive int'

def bitstring_pref(x):
    if isinstance(x, str) and all(c in CON.bits for c in x):
        return None
    else:
        return 'str of 0 and 1'

def list_of_str(xs):
    if isinstance(xs, list) and all(isinstance(x, str) for x in xs):
        return None
    else:
        return 'list[str]'

@dataclass(frozen = True)
class PrefType:
    name: str
    validator: object

    def check_value(self, val):
        # If the validator is already a type (bool, int, etc), just
        # check the value's type and return None or the expected type name.
        # Otherwise, the validator is a function that returns what we need.
        f = self.validator
        if isinstance(f, type):
            if isinstance(val, f):
                return None
            else:
                return f.__name__
        else:
            return f(val)

####
# Text wrapping.
####

def wrap_text(text, width):
    # Takes some text and a max width.
    # Wraps the text to the desired width and returns it.

    # Convenience vars.
    NL = CON.newline
    SP = CON.space

    # Split text into words. If none, return immediately.
    words = [
        w
        for line in text.split(NL)
        for w in line.strip().split(SP)
    ]
    if not words: # pragma: no cover
        return ''

    # Assemble the words into a list-of-list, where each
    # inner list will become a line within the width limit.
    lines = [[]]
    tot = 0
    for w in words:
        n = len(w)
        if n == 0: # pragma: no cover
            continue
        elif tot + n + 1 <= width:
            lines[-1].append(w)
            tot += n + 1
        else:
            lines.append([w])
            tot = n

    # Join the words back into a paragraph of text.
    return NL.join(
        SP.join(line)
        for line in lines
    )
