"""Front-end pipeline: parse, expand dynamic sugar, desugar multi-op
effects, lower to Core Eff, and run under any of the three routes."""

from __future__ import annotations

from . import core_eff as ce
from .delimcc_denot import run_delimcc
from .delimcc_step import run_step
from .desugar import desugar_multi_op
from .dyneff import expand_dynamic
from .eff_denot import run_eff
from .lower import lower
from .runtime import DEFAULT_FUEL, DEFAULT_MAX_DEPTH, Outcome
from .surface import SurfaceProgram, parse
from .translate import translate

ROUTES = ("eff", "trans", "step")


def surface_to_core(program: SurfaceProgram) -> ce.CoreEffProgram:
    return lower(desugar_multi_op(expand_dynamic(program)))


def load_text(text: str) -> ce.CoreEffProgram:
    """Parse source text all the way down to a typechecked core program."""
    core = surface_to_core(parse(text))
    ce.typecheck(core)
    return core


def run_route(
    core: ce.CoreEffProgram,
    route: str,
    fuel: int = DEFAULT_FUEL,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> Outcome:
    if route == "eff":
        return run_eff(core, fuel=fuel, max_depth=max_depth)
    if route == "trans":
        return run_delimcc(translate(core), fuel=fuel, max_depth=max_depth)
    if route == "step":
        return run_step(translate(core), fuel=fuel, max_depth=max_depth)
    raise ValueError(f"unknown route {route!r} (expected one of {ROUTES})")


def run_all_routes(core: ce.CoreEffProgram, fuel: int = DEFAULT_FUEL, max_depth: int = DEFAULT_MAX_DEPTH):
    d = translate(core)
    return (
        run_eff(core, fuel=fuel, max_depth=max_depth),
        run_delimcc(d, fuel=fuel, max_depth=max_depth),
        run_step(d, fuel=fuel, max_depth=max_depth),
    )
