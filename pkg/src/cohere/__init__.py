from .checker import check_program
from .dsl import parse, format_program
from .plan import CoherencePlan
from .utils import CohereError, ParseError
from .version import __version__
