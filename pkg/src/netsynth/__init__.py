"""Symbolic regression of network generators.

Generators are small expression trees that weight candidate edges; networks
are grown edge by edge from them and compared with a target through
ER-normalised structural dissimilarities.
"""

from .dsl import evaluate, parse, simplify
from .errors import GeneratorSyntaxError, InputError
from .evolve import SearchConfig, evolve, evolve_from_initial
from .graph import Network, read_edgelist, write_edgelist
from .metrics import fitness, null_baseline, profile
from .netgen import GenerationConfig, generate, generate_from

__all__ = [
    "GenerationConfig", "GeneratorSyntaxError", "InputError", "Network", "SearchConfig",
    "evaluate", "evolve", "evolve_from_initial", "fitness", "generate", "generate_from",
    "null_baseline", "parse", "profile", "read_edgelist", "simplify", "write_edgelist",
]
