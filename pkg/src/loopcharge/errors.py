"""Exception hierarchy shared across the toolkit."""


class LoopchargeError(Exception):
    """Base class for all toolkit errors."""


class DomainError(LoopchargeError, ValueError):
    """An argument is outside its documented domain (bad bounds, non-positive rate, ...)."""


class PreconditionError(LoopchargeError):
    """A primitive was applied in a state that violates its precondition.

    ``clause`` names the violated clause so callers and reports can point at it.
    """

    def __init__(self, clause: str, detail: str = ""):
        self.clause = clause
        super().__init__(f"{clause}: {detail}" if detail else clause)


class EnergyError(PreconditionError):
    """Motion would drive the battery below zero."""


class OverchargeError(PreconditionError):
    """Recharge would push the battery above its capacity."""


class LoopOrderError(PreconditionError):
    """A motion primitive does not match the working loop's expected move at the cursor."""


class ScenarioError(LoopchargeError):
    """A scenario file is malformed or violates an invariant; message names the field."""


class BundleError(LoopchargeError):
    """A plan bundle file is malformed or internally inconsistent."""


class EncodingError(LoopchargeError):
    """A constraint program contains a term shape the emitter does not support."""


class BridgeError(LoopchargeError):
    """The external solver process crashed or produced unparsable output."""

    def __init__(self, message: str, output_excerpt: str = ""):
        self.output_excerpt = output_excerpt
        if output_excerpt:
            message = f"{message}\n--- solver output excerpt ---\n{output_excerpt}"
        super().__init__(message)


class SolverTimeout(LoopchargeError):
    """The solver exceeded its configured wall-clock budget."""


class InfeasibleError(LoopchargeError):
    """The instance admits no plan under the requested constraints."""


class PlanningError(LoopchargeError):
    """A planner failed for a reason other than infeasibility (caps, unreachable robots)."""
