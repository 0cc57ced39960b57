"""Exception types shared across the library."""


class CurvedNBodyError(Exception):
    """Base class for all errors raised by this package."""


class OffManifold(CurvedNBodyError):
    """A point is too far from the curvature-kappa manifold to be trusted."""


class NegativeSeparationSquare(OffManifold):
    """Lorentz separation square was negative beyond tolerance (kappa < 0)."""


class ZeroCurvature(CurvedNBodyError):
    """Operation is only defined for kappa != 0."""


class ZeroCurvatureShift(ZeroCurvature):
    """Centered/North-Pole frame shift needs kappa != 0."""


class AtProjectionPole(CurvedNBodyError):
    """Stereographic projection evaluated at the projection pole."""


class OutsideDisk(CurvedNBodyError):
    """For kappa < 0 stereographic coordinates must lie strictly inside the
    disk of radius (-kappa)**-0.5."""


class SingularMetric(CurvedNBodyError):
    """Conformal factor requested where 1 + kappa*(u**2 + v**2) vanishes."""


class SingularConfiguration(CurvedNBodyError):
    """Two bodies are at (or numerically at) a singularity of the force
    function."""


class Collision(SingularConfiguration):
    """Pair separation below the collision threshold."""


class AntipodalSingularity(SingularConfiguration):
    """kappa > 0 pair numerically at diametrically opposite points."""


class FrameMismatch(CurvedNBodyError):
    """State is in the wrong coordinate frame for the requested operation."""


class FormulationInvalidAtKappa(CurvedNBodyError):
    """The requested formulation is not defined at the state's curvature."""


class LiftOutOfRange(CurvedNBodyError):
    """Flat initial data cannot be lifted to the requested curvature
    (kappa * |position|**2 >= 1)."""


class SingularityReached(CurvedNBodyError):
    """Integration stopped at a singular approach.

    ``flag`` is "collision_near" or "antipodal_near"; ``time`` is the
    simulation time of the last accepted step.
    """

    def __init__(self, flag: str, time: float, detail: str = ""):
        self.flag = flag
        self.time = time
        msg = f"singular approach ({flag}) at t={time:.6g}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class StepUnderflow(CurvedNBodyError):
    """Adaptive step size collapsed below the resolvable scale."""


class MaxStepsExceeded(CurvedNBodyError):
    """Integration exceeded the configured step budget."""


class ScenarioValidationError(CurvedNBodyError):
    """Scenario file failed validation; ``field`` identifies the offender."""

    def __init__(self, message: str, field: str = ""):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
