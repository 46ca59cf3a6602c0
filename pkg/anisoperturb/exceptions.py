"""Errors raised by the anisoperturb laboratory."""

from __future__ import annotations

from typing import Any


class AnisoPerturbError(Exception):
    """Base class for all laboratory errors."""


class InputDomainError(AnisoPerturbError, ValueError):
    """A parameter lies outside its admissible domain."""

    def __init__(self, name: str, value: Any, requirement: str) -> None:
        self.name = name
        self.value = value
        self.requirement = requirement
        super().__init__(f"{name}={value!r} violates {requirement}")


class DegenerateManifoldError(AnisoPerturbError):
    """The bulk potential has no admissible vacuum manifold."""

    def __init__(self, a2: float, b2: float, c2: float, reason: str) -> None:
        self.params = (a2, b2, c2)
        super().__init__(f"Degenerate vacuum manifold for (a2, b2, c2)=({a2}, {b2}, {c2}): {reason}")


class ProjectionUndefinedError(AnisoPerturbError):
    """The nearest point projection onto the vacuum manifold is not defined."""

    def __init__(self, count: int, reason: str) -> None:
        self.count = count
        super().__init__(f"Projection undefined at {count} point(s): {reason}")


class NonuniqueGeodesicError(AnisoPerturbError):
    """Two points of the vacuum manifold are joined by more than one minimizing geodesic."""

    def __init__(self, count: int) -> None:
        self.count = count
        super().__init__(f"Geodesic not unique at {count} point pair(s) (orthogonal directors)")


class GeometryError(AnisoPerturbError):
    """A ball or patch does not fit the grid, or two grids do not match."""


class InsufficientDataError(AnisoPerturbError):
    """Too few valid radii to fit a decay exponent."""

    def __init__(self, valid: int, required: int = 2) -> None:
        self.valid = valid
        super().__init__(f"Only {valid} valid radii, at least {required} required")


class SolverStagnationError(AnisoPerturbError):
    """The Armijo line search could not find a decreasing step."""

    def __init__(self, iteration: int, energy: float, residual: float, step: float) -> None:
        self.iteration = iteration
        self.energy = energy
        self.residual = residual
        self.step = step
        super().__init__(f"Line search stagnated at iteration {iteration}: energy={energy:.6e} max residual={residual:.3e} last step={step:.3e}")


class SolverSetupError(AnisoPerturbError):
    """The descent rejected the problem it was handed."""

    def __init__(self, cause: Exception) -> None:
        self.cause = cause
        super().__init__(f"Solver could not start: {cause}")


class SweepStageError(AnisoPerturbError):
    """An epsilon sweep stage failed."""

    def __init__(self, stage: int, epsilon: float, cause: Exception) -> None:
        self.stage = stage
        self.epsilon = epsilon
        self.cause = cause
        super().__init__(f"Sweep stage {stage} (epsilon={epsilon:.4g}) failed: {cause}")


class SmallnessViolationError(AnisoPerturbError):
    """The harmonic extension on a mesh face leaves the projection neighbourhood of N."""

    def __init__(self, face: int, reason: str) -> None:
        self.face = face
        super().__init__(f"Smallness violated on face {face}: {reason}")


class PreconditionError(AnisoPerturbError):
    """Quantitative preconditions of a construction are not met."""


class ConfigError(AnisoPerturbError):
    """Experiment configuration could not be parsed or validated."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None, violations: list[str] | None = None) -> None:
        self.key = key
        self.line = line
        self.violations = violations or []
        where = ""
        if key:
            where += f" [key: {key}]"
        if line is not None:
            where += f" [line: {line}]"
        details = "".join(f"\n  - {v}" for v in self.violations)
        super().__init__(f"{message}{where}{details}")
