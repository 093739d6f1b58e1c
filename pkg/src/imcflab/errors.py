"""Exception types shared by the solvers and diagnostics."""


class FlowError(Exception):
    """Base class for numerical failures of the flow machinery."""


class DomainError(FlowError, ValueError):
    """Input outside the mathematical domain of an operation."""


class SandwichViolation(FlowError):
    """Initial data escapes the confining cone pair."""

    def __init__(self, node, magnitude, message=None):
        self.node = node
        self.magnitude = magnitude
        super().__init__(message or
                         f"sandwich violated at node {node} by {magnitude:.3e}")


class MeanConvexityViolation(FlowError):
    """Mean curvature is nonpositive somewhere on the state."""

    def __init__(self, node, value, message=None):
        self.node = node
        self.value = value
        super().__init__(message or f"H = {value:.3e} <= 0 at node {node}")


class VertexSingularity(FlowError):
    """Discrete curvature concentrates at the axis (unresolved vertex)."""


class CurvatureFloor(FlowError):
    """Mean curvature dropped to the configured floor."""

    def __init__(self, node, value, t=None):
        self.node = node
        self.value = value
        self.t = t
        super().__init__(f"H = {value:.3e} at node {node} hit the floor"
                         + (f" at t = {t:.6g}" if t is not None else ""))


class NewtonDiverged(FlowError):
    """Damped Newton failed to reduce the step residual below tolerance."""

    def __init__(self, residual, iterations, t=None):
        self.residual = residual
        self.iterations = iterations
        self.t = t
        super().__init__(f"Newton residual {residual:.3e} after "
                         f"{iterations} iterations"
                         + (f" at t = {t:.6g}" if t is not None else ""))


class SlopeBlowDown(FlowError):
    """Slope ODE integration reached extinction before the requested time."""

    def __init__(self, crossing_time):
        self.crossing_time = crossing_time
        super().__init__(f"slope reached zero at t = {crossing_time:.12g}")


class NotFlattened(FlowError):
    """A flattening-based estimate was requested on a run that did not flatten."""


class NotConverged(FlowError):
    """An extrapolated limit did not satisfy its convergence criterion."""


class SeriesStartInvalid(FlowError):
    """Self-similar shooting left the admissible region near the axis."""


class BlowUp(FlowError):
    """Self-similar shooting exceeded the overflow guard before r_max."""


class ConfigError(ValueError):
    """Malformed or semantically invalid run configuration."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        loc = ""
        if key is not None:
            loc += f" (key {key})"
        if line is not None:
            loc += f" (line {line})"
        super().__init__(message + loc)
