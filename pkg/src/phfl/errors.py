"""Exception types shared across the package."""


class PhflError(Exception):
    """Base class for all package errors.

    ``context`` (e.g. the client and round being processed) is prefixed to
    the message when set.
    """
    context = ""

    def __str__(self):
        base = super().__str__()
        return f"{self.context}: {base}" if self.context else base


class ConfigError(PhflError):
    """Invalid or incomplete experiment configuration."""


class IoError(PhflError):
    """Reading or writing an artifact failed."""


class EmptyTier(PhflError):
    """A tier of the hierarchy has no children."""


class WeightSumMismatch(PhflError):
    """Aggregation weights at one level do not sum to one."""


class IndexOutOfRange(PhflError):
    """A round index lies outside its schedule range."""


class DeadlineExhaustedByCompute(PhflError):
    """Local computation alone does not fit inside the deadline."""


class ZeroRate(PhflError):
    """A positive payload must be sent over a zero-rate link."""


class EmptyBatch(PhflError):
    """A gradient was requested on an empty batch."""


class NonFiniteLoss(PhflError):
    """Training diverged to a non-finite loss or weight."""


class TooFewSamples(PhflError):
    """The dataset cannot give every client at least one sample."""


class SingularAnchor(PhflError):
    """The linearization anchor has a nonpositive compute slack."""


class InfeasibleClient(PhflError):
    """A client cannot meet its budgets even at the most relaxed corner."""

    def __init__(self, clients, reasons=None):
        self.clients = list(clients)
        self.reasons = dict(reasons or {})
        detail = ", ".join(f"{c}: {self.reasons.get(c, 'infeasible')}" for c in self.clients)
        super().__init__(f"infeasible clients: {detail}")


class NoFeasibleStart(InfeasibleClient):
    """No feasible initial anchor exists for the SCA loop."""


class ScheduleViolation(PhflError):
    """An aggregation was triggered out of order."""


class ZeroProbability(PhflError):
    """A reception probability of zero appeared where 1/p is required."""


class EmptyGroup(PhflError):
    """A CDF or summary was requested for an empty group."""
