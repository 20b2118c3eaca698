"""Exception vocabulary shared across the toolkit."""


class NrflowError(Exception):
    """Base class for all toolkit errors."""


class ReferenceDomainError(NrflowError):
    """Reference signal evaluated outside its defined time domain."""

    def __init__(self, t, domain):
        self.t = t
        self.domain = domain
        super().__init__(f"reference evaluated at t={t:.6g}, domain is [{domain[0]:.6g}, {domain[1]:.6g}]")


class NumericOverflowError(NrflowError):
    """Integration produced a non-finite value.

    Carries the simulation time at which the overflow occurred, plus an
    optional context tag (e.g. ("prediction", x, u)).
    """

    def __init__(self, t, context=None):
        self.t = t
        self.context = context
        msg = f"non-finite value during integration at t={t:.6g}"
        if context is not None:
            msg += f" (context: {context[0]})"
        super().__init__(msg)


class SingularJacobianError(NrflowError):
    """Input-to-prediction Jacobian too ill-conditioned to invert.

    The closed loop is only defined along trajectories where dg/du is
    nonsingular; this error turns that assumption into a runtime check.
    """

    def __init__(self, t, x, u, rcond):
        self.t = t
        self.x = x
        self.u = u
        self.rcond = rcond
        super().__init__(f"singular input Jacobian at t={t:.6g} (rcond={rcond:.3e})")


class SingularPredictorError(NrflowError):
    """Constant predictor Jacobian dg/du is singular (construction-time)."""


class InsufficientDataError(NrflowError):
    """Trace too short for the requested statistic."""


class DegenerateStructureError(NrflowError):
    """Bivariate characteristic polynomial violates its degree structure."""


class UnsupportedDimensionError(NrflowError):
    """Problem dimension outside the supported range."""


class NegativeArclengthError(NrflowError):
    """Follower projects ahead of its leader on the path (overtaking)."""

    def __init__(self, s_leader, s_follower):
        self.s_leader = s_leader
        self.s_follower = s_follower
        super().__init__(
            f"follower arclength {s_follower:.6g} exceeds leader arclength {s_leader:.6g}"
        )


class CoincidentAgentsError(NrflowError):
    """Leader prediction and follower position coincide; target line undefined."""
