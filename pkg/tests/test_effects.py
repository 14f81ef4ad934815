import pytest

from hypothesis import given, strategies as st

from cohere.effects import (
    ALL_PAIRS,
    EFFECTS,
    II,
    IV,
    VI,
    VV,
    EffectSignature,
    ValidityPair,
    apply_effect,
    expected_pattern,
    leq,
)
from cohere.utils import CohereError, MSG_FORMATS as MF

####
# Validity pairs.
####

def test_validity_pairs(tr):
    assert ValidityPair.of('VI') == VI
    assert VI.swap() == IV
    assert VV.swap() == VV
    assert str(IV) == '(I,V)'
    assert [p.unsafe for p in ALL_PAIRS] == [False, False, False, True]

####
# Effect signatures, applied locally and remotely.
####

def test_local_effects(tr):
    # Rows: status => expected result for each kind (None: stuck).
    exp = {
        EFFECTS.push:  {VV: VV, VI: VV, IV: None, II: None},
        EFFECTS.pull:  {VV: VV, VI: None, IV: VV, II: None},
        EFFECTS.read:  {VV: VV, VI: VI, IV: None, II: None},
        EFFECTS.write: {VV: VI, VI: VI, IV: VI, II: VI},
        EFFECTS.noop:  {VV: VV, VI: VI, IV: IV, II: II},
    }
    for kind, rows in exp.items():
        for status, result in rows.items():
            assert apply_effect(kind, status) == result, (kind, status)

def test_remote_effects(tr):
    # A remote effect is the local one with the pair switched.
    assert apply_effect(EFFECTS.push, IV, remote = True) == VV
    assert apply_effect(EFFECTS.push, VI, remote = True) is None
    assert apply_effect(EFFECTS.pull, VI, remote = True) == VV
    assert apply_effect(EFFECTS.read, IV, remote = True) == IV
    assert apply_effect(EFFECTS.read, VI, remote = True) is None
    assert apply_effect(EFFECTS.write, VV, remote = True) == IV
    assert apply_effect(EFFECTS.write, VI, remote = True) == IV

def test_expected_pattern(tr):
    assert expected_pattern(EFFECTS.read) == ('V', 'X')
    assert expected_pattern(EFFECTS.read, remote = True) == ('X', 'V')
    assert expected_pattern(EFFECTS.pull) == ('X', 'V')

def test_signature_validation(tr):
    # Repeated variables in pre.
    with pytest.raises(CohereError) as einfo:
        EffectSignature(('X', 'X'), ('V', 'V'))
    assert einfo.value.msg == MF.repeated_pre_var.format('X')

    # Post variables must be bound by pre.
    with pytest.raises(CohereError) as einfo:
        EffectSignature(('V', 'X'), ('Y', 'V'))
    assert einfo.value.msg == MF.unbound_post_var.format('Y')

@given(
    kind = st.sampled_from(EFFECTS.keys()),
    status = st.sampled_from((VV, VI, IV)),
    remote = st.booleans(),
)
def test_effects_never_reach_unsafe(kind, status, remote):
    # No single effect takes a safe pair to (I,I).
    result = apply_effect(kind, status, remote = remote)
    assert result is None or not result.unsafe

@given(
    kind = st.sampled_from(EFFECTS.keys()),
    status = st.sampled_from(ALL_PAIRS),
)
def test_remote_symmetry(kind, status):
    # The remote effect on a pair is the local effect on the switched
    # pair, switched back.
    local = apply_effect(kind, status.swap())
    remote = apply_effect(kind, status, remote = True)
    assert remote == (None if local is None else local.swap())

####
# The abstraction order.
####

def test_leq(tr):
    for p in ALL_PAIRS:
        assert leq(p, p)
    assert leq(VI, VV)
    assert leq(IV, VV)
    assert not leq(VV, VI)
    assert not leq(VI, IV)
    assert not leq(II, VV)
    assert not leq(VV, II)
