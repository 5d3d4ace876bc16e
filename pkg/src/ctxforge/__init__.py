"""ctxforge: rewrite math problems around student interests, validate the
rewrites mechanically, and review them before release."""

__version__ = "0.1.0"

from .model import ContextVariant, Interest, LifecycleState, ProblemTemplate, new_problem
from .prompting import build_prompt, default_template
from .validation import ValidationReport, validate

__all__ = [
    "ContextVariant",
    "Interest",
    "LifecycleState",
    "ProblemTemplate",
    "ValidationReport",
    "build_prompt",
    "default_template",
    "new_problem",
    "validate",
    "__version__",
]
