import json
import pytest

from io import StringIO

from cohere.cli import main, CliCohere, CLI
from cohere.diagnostics import DIAGNOSTIC_RULES as DR
from cohere.utils import CON, MSG_FORMATS as MF
from cohere.version import __version__

####
# Helper class to test CliCohere instances.
####

class CliCohereSIO(CliCohere):
    # A thin wrapper around a CliCohere:
    #
    # - Sets I/O handles to be StringIO instances, so we can capture outputs.
    # - Adds a few properties/methods to simplify assertion making.

    def __init__(self, *args):
        super().__init__(
            args,
            stdout = StringIO(),
            stderr = StringIO(),
            logfh = StringIO(),
        )

    @property
    def success(self):
        return self.exit_code == CON.exit_ok

    @property
    def failure(self):
        return self.exit_code == CON.exit_fail

    @property
    def out(self):
        return self.stdout.getvalue()

    @property
    def err(self):
        return self.stderr.getvalue()

    @property
    def log(self):
        text = self.logfh.getvalue()
        return json.loads(text) if text else None

    @property
    def records(self):
        return [json.loads(line) for line in self.out.splitlines()]

def run_cli(*args):
    cli = CliCohereSIO(*args)
    cli.run()
    return cli

####
# Command-line arguments and options.
####

def test_version_and_help(tr):
    # Version.
    cli = run_cli('--version')
    assert cli.success
    assert cli.err == ''
    assert cli.out == MF.cli_version_msg + CON.newline
    assert cli.log is None

    # Help.
    cli = run_cli('--version', '--help')
    assert cli.success
    assert cli.err == ''
    assert cli.out.startswith(f'Usage: {CON.app_name}')
    for opt in ('--fuel', '--schedule', '--no-overlap', '--backend'):
        assert f'\n  {opt}' in cli.out
    for oc in CLI.opts_config:
        assert oc['help'][0:30] in cli.out

    # Details.
    cli = run_cli('--details')
    assert cli.success
    assert cli.err == ''
    assert cli.out.split() == CLI.post_epilog.split()
    assert DR.overlap_missing_rw in cli.out

def test_usage_errors(tr):
    # No command or file.
    for args in ((), ('check',)):
        cli = run_cli(*args)
        assert cli.exit_code == CON.exit_usage
        assert cli.out == ''
        assert cli.err == MF.file_required + CON.newline

    # Invalid command and option values.
    path = tr.program_file('two_block')
    for args in (('compile', path), ('run', path, '--fuel', '0'), ('run', path, '--schedule', '012')):
        cli = run_cli(*args)
        assert cli.exit_code == CON.exit_usage
        assert cli.out == ''
        assert cli.err.startswith(f'Usage: {CON.app_name}')

    # Unreadable file.
    path = str(tr.work_area / 'nope.coh')
    cli = run_cli('check', path)
    assert cli.exit_code == CON.exit_usage
    assert cli.err.startswith(MF.file_reading_failed.split('{')[0])
    assert cli.log is None

def test_main(tr):
    with pytest.raises(SystemExit) as einfo:
        main(['--version'], stdout = StringIO())
    assert einfo.value.code == CON.exit_ok

####
# The check command.
####

def test_check(tr):
    # Well-declared.
    for name in ('two_block', 'array', 'pvectors'):
        cli = run_cli('check', tr.program_file(name))
        assert cli.success
        assert cli.out == MF.well_declared + CON.newline
        assert cli.err == ''

    # Modes not extended for overlapping views.
    path = tr.program_file('pvectors')
    cli = run_cli('check', path, '--no-overlap')
    assert cli.failure
    lines = cli.out.splitlines()
    assert [line.split()[1] for line in lines] == [DR.overlap_missing_rw] * 2
    assert lines[0].startswith('12:1: OVL-MISSING-RW [pv3] Write to elements 7, 8')
    assert cli.err == MF.check_failed.format(2) + CON.newline

    # As JSON.
    cli = run_cli('check', path, '--no-overlap', '--json')
    assert cli.failure
    assert [r['rule'] for r in cli.records] == [DR.overlap_missing_rw] * 2
    assert [r['view'] for r in cli.records] == ['pv3', 'pv4']
    assert cli.records[1]['line'] == 18

    # Notes do not fail the check.
    path = tr.program_file('notes', 'scalar x scalar y RW(x), R(y) { w x; }')
    cli = run_cli('check', path)
    assert cli.success
    assert DR.unused_mode in cli.out
    assert cli.out.endswith(MF.well_declared + CON.newline)

    # Raw programs: one site per variable.
    cli = run_cli('check', tr.program_file('local', 'w x; push x; r x; gr y;\n'), '--raw')
    assert cli.success
    assert cli.out == MF.localised + CON.newline
    cli = run_cli('check', tr.program_file('raw_stuck'), '--raw')
    assert cli.failure
    assert cli.out.startswith(DR.mixed_site)

def test_parse_errors(tr):
    path = tr.program_file('bad', 'scalar x\nRW(x) { w y; }')
    cli = run_cli('check', path)
    assert cli.exit_code == CON.exit_usage
    assert cli.out == ''
    assert cli.err == f"{path}:2:11: Undeclared view 'y'\n"

    path = tr.program_file('bad', 'scalar x\nRW(x) { w x }')
    cli = run_cli('run', path)
    assert cli.exit_code == CON.exit_usage
    assert cli.err.startswith(f'{path}:2:13: Syntax error')

    # Modes needing both sites stop before any output.
    cli = run_cli('run', tr.program_file('site_conflict'))
    assert cli.failure
    assert cli.out == ''
    assert cli.err.startswith(MF.prepare_failed.split('{')[0])

####
# The run and trace commands.
####

def test_run(tr):
    # Done.
    cli = run_cli('run', tr.program_file('raw_pushed'), '--raw')
    assert cli.success
    assert cli.out == tr.OUTS['raw_pushed_run']

    # Stuck.
    cli = run_cli('run', tr.program_file('raw_stuck'), '--raw')
    assert cli.exit_code == CON.exit_stuck
    assert cli.out == tr.OUTS['raw_stuck_run']
    assert cli.err == ''

    # Out of fuel.
    path = tr.program_file('raw_loop')
    cli = run_cli('run', path, '--raw', '--schedule', '1111', '--fuel', '3')
    assert cli.exit_code == CON.exit_fuel
    assert cli.out.startswith('outcome: fuel-exhausted\n')
    cli = run_cli('run', path, '--raw')
    assert cli.success

    # Conditions read the location's own flags.
    path = tr.program_file('branch', 'gw x; if (valid(x)) { r x; }\n')
    cli = run_cli('run', path, '--raw')
    assert cli.success
    assert cli.out.startswith('outcome: done\nx I V\nx^ V I\n')

def test_trace(tr):
    path = tr.program_file('two_block')
    for args in (('trace', path), ('run', path, '--trace')):
        cli = run_cli(*args)
        assert cli.success
        assert cli.out == tr.OUTS['two_block_trace']

    # As JSON: one record per step, then the summary.
    cli = run_cli('trace', path, '--json')
    assert cli.success
    records = cli.records
    assert len(records) == 8
    assert records[4] == dict(
        rule = 'effect',
        statement = 'push x;',
        delta = {'x': ['(V,I)', '(V,V)']},
    )
    assert records[-1] == dict(
        outcome = 'done',
        store = {'x': 'VV', 'x^': 'VV'},
        stuck = None,
        checkpoints = [
            dict(block = 0, violations = []),
            dict(block = 1, violations = []),
        ],
    )

def test_run_overlapping_views(tr):
    path = tr.program_file('pvectors')

    # Both registry backends give the same run.
    outs = []
    for backend in ('list', 'tree'):
        cli = run_cli('run', path, '--backend', backend)
        assert cli.success
        assert 'warning' not in cli.out
        outs.append(cli.out)
    assert outs[0] == outs[1]

    # Without extended modes the run completes, but abstract pairs
    # go stale.
    cli = run_cli('run', path, '--no-overlap')
    assert cli.success
    assert 'warning: abstraction incorrect after block 1: pv2: v[7], pv2: v[8]\n' in cli.out

####
# The infer and translate commands.
####

def test_infer(tr):
    cli = run_cli('infer', tr.program_file('pvectors'))
    assert cli.success
    assert cli.out == tr.OUTS['pvectors_inferred']

    # Without extension, the program comes back unchanged.
    cli = run_cli('infer', tr.program_file('pvectors'), '--no-overlap')
    assert cli.out == tr.PROGRAMS['pvectors']

def test_translate(tr):
    cli = run_cli('translate', tr.program_file('two_block'))
    assert cli.success
    assert cli.out == tr.OUTS['two_block_translated']

####
# Logging and user preferences.
####

def test_log(tr, app_dir):
    cli = run_cli('run', tr.program_file('raw_stuck'), '--raw')
    d = cli.log
    assert d['version'] == __version__
    assert d['exit_code'] == CON.exit_stuck
    assert d['outcome'] == 'stuck'
    assert d['opts']['command'] == 'run'
    assert d['diagnostics'][0]['rule'] == DR.mixed_site
    logs = list(app_dir.glob(f'*-run.{CON.logfile_ext}'))
    assert len(logs) == 1
    assert json.loads(logs[0].read_text()) == d

    # No logging.
    cli = run_cli('run', tr.program_file('raw_stuck'), '--raw', '--nolog')
    assert cli.log is None
    assert cli.logged_at is None

def test_preferences(tr, app_dir):
    path = tr.program_file('two_block')
    prefs = app_dir / CON.prefs_file_name
    app_dir.mkdir(parents = True, exist_ok = True)

    def write_prefs(**kws):
        prefs.write_text(json.dumps(kws))

    # Preferences apply unless set on the command line.
    write_prefs(fuel = 2, json = True)
    cli = run_cli('run', path)
    assert cli.exit_code == CON.exit_fuel
    assert cli.records[-1]['outcome'] == 'fuel-exhausted'
    cli = run_cli('run', path, '--fuel', '100')
    assert cli.success

    # Flags can be disabled.
    cli = run_cli('run', path, '--fuel', '100', '--disable', 'json')
    assert cli.out.startswith('outcome: done\n')

    # Invalid keys and values.
    write_prefs(fuel = 0)
    cli = run_cli('run', path)
    assert cli.failure
    assert cli.err == MF.invalid_pref_val.format('fuel', 'positive int', 0) + CON.newline
    write_prefs(fuel = 10, colour = True)
    cli = run_cli('run', path)
    assert cli.failure
    assert cli.err == MF.invalid_pref_keys.format('colour') + CON.newline

    # Unreadable preferences.
    prefs.write_text('{')
    cli = run_cli('run', path)
    assert cli.failure
    assert cli.err.startswith('Unexpected error during reading of user preferences')

def test_wrapup_with_tb(tr):
    # Exercise the wrapup_with_tb() method directly.
    fmt = 'Blah blah: {}'
    cli = CliCohereSIO('--version')
    try:
        raise ZeroDivisionError('fubb')
    except Exception as e:
        cli.wrapup_with_tb(fmt)
    assert cli.failure
    assert cli.out == ''
    assert cli.err.startswith('Blah blah: Traceback')
    assert 'ZeroDivisionError: fubb' in cli.err
