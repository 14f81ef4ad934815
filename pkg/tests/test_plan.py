import pytest

# Top-level package imports.
from cohere import (
    CoherencePlan,
    CohereError,
    ParseError,
    __version__,
    check_program,
    format_program,
    parse,
)

# Imports for testing.
from cohere.diagnostics import DIAGNOSTIC_RULES as DR
from cohere.overlap import BACKENDS
from cohere.semantics import OUTCOMES
from cohere.syntax import statement_lines
from cohere.utils import CON, MSG_FORMATS as MF

####
# The package's top-level importables.
####

def test_top_level_imports(tr):
    # Do something simple with each top-level import.
    text = tr.PROGRAMS['two_block']
    assert CoherencePlan(text).text == text
    assert CohereError('foo', x = 1).msg == 'foo'
    assert isinstance(ParseError('foo'), CohereError)
    assert isinstance(__version__, str)
    assert format_program(parse(text).program) == text
    assert check_program(parse(text).program) == []

####
# Helper to confirm that a plan failed for the expected reason.
####

def assert_failed_because(einfo, fmt):
    # Compare the portion of the message before any string formatting.
    exp = fmt.split('{')[0]
    msg = einfo.value.msg
    assert msg.startswith(MF.prepare_failed.split('{')[0])
    assert exp in msg

####
# Preparation.
####

def test_prepare(tr):
    plan = CoherencePlan(tr.PROGRAMS['pvectors'])
    assert plan.program is None
    plan.prepare()
    assert plan.certified
    assert not plan.failed
    assert plan.diagnostics == []
    assert len(plan.registry) == 4

    # Preparation runs once.
    program = plan.program
    plan.prepare()
    assert plan.program is program

def test_prepare_without_overlap(tr):
    plan = CoherencePlan(tr.PROGRAMS['pvectors'], overlap = False)
    plan.prepare()
    assert not plan.failed
    assert not plan.certified
    assert [d.rule for d in plan.errors] == [DR.overlap_missing_rw] * 2
    assert [(d.line, d.col) for d in plan.errors] == [(12, 1), (18, 1)]

def test_prepare_failures(tr):
    # Parse errors.
    plan = CoherencePlan('scalar x\nRW(y) { }')
    plan.prepare()
    assert plan.parse_failed
    assert plan.error.params['line'] == 2
    with pytest.raises(CohereError) as einfo:
        plan.execute()
    assert_failed_because(einfo, MF.undeclared_view)

    # Modes that would need both sites.
    plan = CoherencePlan(tr.PROGRAMS['site_conflict'])
    plan.prepare()
    assert plan.failed
    assert not plan.parse_failed
    with pytest.raises(CohereError) as einfo:
        plan.inferred_text()
    assert_failed_because(einfo, MF.closure_site_conflict)

    # The same program is fine when modes are left alone.
    plan = CoherencePlan(tr.PROGRAMS['site_conflict'], overlap = False)
    plan.prepare()
    assert not plan.failed
    assert [d.rule for d in plan.errors] == [DR.overlap_missing_rw]

    # Invalid backends.
    plan = CoherencePlan(tr.PROGRAMS['array'], backend = 'heap')
    plan.prepare()
    assert plan.failed
    assert plan.error.msg == MF.registry_backend.format('heap')

def test_notes(tr):
    text = 'scalar x scalar y RW(x), R(y) { w x; }'
    assert CoherencePlan(text).certified
    plan = CoherencePlan(text, notes = True)
    plan.prepare()
    assert plan.certified
    assert [d.rule for d in plan.diagnostics] == [DR.unused_mode]

####
# Outputs.
####

def test_execute(tr):
    for backend in BACKENDS.keys():
        plan = CoherencePlan(tr.PROGRAMS['pvectors'], backend = backend)
        res = plan.execute()
        assert res.outcome == OUTCOMES.done
        assert res.abstraction_correct
        assert len(plan.checkpoints) == 3

    # Stale abstract pairs when modes are not extended.
    plan = CoherencePlan(tr.PROGRAMS['pvectors'], overlap = False)
    plan.execute()
    assert [c.block for c in plan.checkpoints if not c.ok] == [1, 2]

    # Schedules and fuel.
    plan = CoherencePlan(tr.PROGRAMS['raw_loop'], raw = True, schedule = '11', fuel = 4)
    res = plan.execute()
    assert res.outcome == OUTCOMES.fuel_exhausted
    assert plan.checkpoints == ()

def test_raw_plan(tr):
    plan = CoherencePlan(tr.PROGRAMS['raw_stuck'], raw = True)
    plan.prepare()
    assert [d.rule for d in plan.errors] == [DR.mixed_site]
    assert statement_lines(plan.translated()) == ['w x;', 'gr x;']
    assert plan.inferred_text() == 'scalar x\n\nw x;\ngr x;\n'
    res = plan.execute()
    assert res.outcome == OUTCOMES.stuck

def test_translated_and_inferred(tr):
    plan = CoherencePlan(tr.PROGRAMS['two_block'])
    got = CON.newline.join(statement_lines(plan.translated())) + CON.newline
    assert got == tr.OUTS['two_block_translated']
    assert CoherencePlan(tr.PROGRAMS['pvectors']).inferred_text() == tr.OUTS['pvectors_inferred']

def test_as_dict(tr):
    plan = CoherencePlan(tr.PROGRAMS['raw_stuck'], raw = True, path = 'p.coh')
    d = plan.as_dict
    assert d['outcome'] is None
    assert d['store'] is None
    plan.execute()
    d = plan.as_dict
    assert d['path'] == 'p.coh'
    assert d['backend'] == BACKENDS.list
    assert d['outcome'] == OUTCOMES.stuck
    assert d['store'] == {'x': 'VI', 'x^': 'VI'}
    assert d['stuck'] == 'gr x: x is (V,I), expected (X,V)'
    assert d['trace_length'] == 1
    assert [r['rule'] for r in d['diagnostics']] == [DR.mixed_site]
