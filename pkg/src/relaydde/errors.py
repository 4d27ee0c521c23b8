"""Exception types shared across the package."""


class RelayDDEError(Exception):
    """Base class for all package-specific errors."""


class InvalidState(RelayDDEError):
    """A state vector violates its invariants (e.g. negative inter-event gap)."""


class NoCrossing(RelayDDEError):
    """The requested zero crossing does not exist for this state."""


class NoRoot(RelayDDEError):
    """No root of the switching-interval equation inside the search bracket."""


class NoConvergence(RelayDDEError):
    """A refinement loop exceeded its iteration budget (tolerance misconfiguration)."""


class Degenerate(RelayDDEError):
    """A formula divides by y_Z* + 1 = 0; the parameter point is recorded in args."""


class CornerCollision(RelayDDEError):
    """H-type and Z-type event times coincide within the tie tolerance.

    The event-to-event map is not well defined at such points; downstream
    analysis must handle them explicitly rather than rely on silent ordering.
    """

    def __init__(self, t, h_delay, z_delay):
        super().__init__(
            f"event tie at t={t!r}: h_delay={h_delay!r}, z_delay={z_delay!r}"
        )
        self.t = t
        self.h_delay = h_delay
        self.z_delay = z_delay


class NonoscillatoryEnd(RelayDDEError):
    """Both next-event times are undefined: the orbit heads to the ODE node."""


class LostBranch(RelayDDEError):
    """Branch continuation failed; carries the last good sample."""

    def __init__(self, message, last_good=None):
        super().__init__(message)
        self.last_good = last_good
