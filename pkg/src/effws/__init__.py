"""effws: a workbench for algebraic effect handlers over multi-prompt
delimited control.

Three evaluation routes for one source language: a denotational
interpreter for the effect calculus, a bubble-up denotational
interpreter for the delimited-control calculus it translates into, and
a small-step machine for the same; plus the translation, a golden
corpus, and a differential-testing harness.
"""

__version__ = "0.1.0"

from .pipeline import load_text, run_all_routes, run_route, surface_to_core  # noqa: F401
from .runtime import Outcome  # noqa: F401
