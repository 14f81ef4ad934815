from dataclasses import dataclass
from short_con import constants

from .utils import CohereError, MSG_FORMATS as MF

####
# Validity flags and the (local, remote) pair that the store holds
# for every location.
####

FLAGS = constants('ValidityFlags', dict(
    V = 'V',
    I = 'I',
))

@dataclass(frozen = True)
class ValidityPair:
    local: str
    remote: str

    def swap(self):
        return ValidityPair(self.remote, self.local)

    @property
    def unsafe(self):
        return self.local == FLAGS.I and self.remote == FLAGS.I

    @property
    def flags(self):
        return (self.local, self.remote)

    @classmethod
    def of(cls, text):
        # Eg: ValidityPair.of('VI').
        local, remote = text
        return cls(local, remote)

    def __str__(self):
        return f'({self.local},{self.remote})'

VV = ValidityPair(FLAGS.V, FLAGS.V)
VI = ValidityPair(FLAGS.V, FLAGS.I)
IV = ValidityPair(FLAGS.I, FLAGS.V)
II = ValidityPair(FLAGS.I, FLAGS.I)

ALL_PAIRS = (VV, VI, IV, II)

####
# Effects and their signatures.
#
# A signature is a pre pattern and a post pattern over the flags plus the
# pattern variables X and Y. A variable occurs at most once in the pre
# pattern, so unification is a per-component match.
####

EFFECTS = constants('EffectKinds', (
    'push',
    'pull',
    'read',
    'write',
    'noop',
))

PATTERN_VARS = ('X', 'Y', 'Z', 'T')

def is_pattern_var(x):
    return x in PATTERN_VARS

@dataclass(frozen = True)
class EffectSignature:
    pre: tuple
    post: tuple

    def __post_init__(self):
        bound = [p for p in self.pre if is_pattern_var(p)]
        for p in bound:
            if bound.count(p) > 1:
                raise CohereError(MF.repeated_pre_var.format(p))
        for p in self.post:
            if is_pattern_var(p) and p not in bound:
                raise CohereError(MF.unbound_post_var.format(p))

    def __str__(self):
        return f'{format_pattern(self.pre)} -> {format_pattern(self.post)}'

def format_pattern(pattern):
    return '({})'.format(','.join(pattern))

SIGNATURES = {
    EFFECTS.push:  EffectSignature(('V', 'X'), ('V', 'V')),
    EFFECTS.pull:  EffectSignature(('X', 'V'), ('V', 'V')),
    EFFECTS.read:  EffectSignature(('V', 'X'), ('V', 'X')),
    EFFECTS.write: EffectSignature(('X', 'Y'), ('V', 'I')),
    EFFECTS.noop:  EffectSignature(('X', 'Y'), ('X', 'Y')),
}

SYNC_EFFECTS = (EFFECTS.push, EFFECTS.pull)

def effect_signature(kind):
    return SIGNATURES[kind]

def apply_signature(sig, status):
    # Unifies the pre pattern with the status. Returns the instantiated
    # post pattern, or None when the status does not unify.
    binding = {}
    for pat, flag in zip(sig.pre, status.flags):
        if is_pattern_var(pat):
            binding[pat] = flag
        elif pat != flag:
            return None
    local, remote = (binding.get(p, p) for p in sig.post)
    return ValidityPair(local, remote)

def apply_effect(kind, status, remote = False):
    # A remote effect sees the pair with its components switched,
    # and the result is switched back before it is stored.
    sig = SIGNATURES[kind]
    if remote:
        result = apply_signature(sig, status.swap())
        return None if result is None else result.swap()
    else:
        return apply_signature(sig, status)

def expected_pattern(kind, remote = False):
    # The pre pattern as it constrains the stored pair.
    pre = SIGNATURES[kind].pre
    return tuple(reversed(pre)) if remote else pre

####
# The abstraction order: (V,I) and (I,V) both safely abstract (V,V),
# and every pair abstracts itself.
####

def leq(abstract, concrete):
    if abstract == concrete:
        return True
    else:
        return concrete == VV and abstract in (VI, IV)
