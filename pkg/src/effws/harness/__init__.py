from .diff import DiffReport, diff_run  # noqa: F401
from .generate import GenConfig, gen_program  # noqa: F401
from .queens import BenchResult, bench_queens  # noqa: F401
