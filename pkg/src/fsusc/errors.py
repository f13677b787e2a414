"""Exception hierarchy for fsusc."""


class FsuscError(Exception):
    """Base class for all errors raised by the package."""


class EmptyDomainError(FsuscError):
    def __init__(self):
        super().__init__("empty domain")


class MeshMismatchError(FsuscError):
    pass


class NotEquilibriumError(FsuscError):
    def __init__(self, residual):
        self.residual = float(residual)
        super().__init__(f"not an equilibrium state (max residual {self.residual:.3e})")


class MaxStepsExceeded(FsuscError):
    def __init__(self, residual, steps):
        self.residual = float(residual)
        self.steps = int(steps)
        super().__init__(f"max_steps exceeded after {steps} steps (residual {self.residual:.3e})")


class BlowUpError(FsuscError):
    def __init__(self, deviation, step):
        self.deviation = float(deviation)
        self.step = int(step)
        super().__init__(f"blow-up at step {step}: |m| deviated from 1 by {self.deviation:.3e}")


class DenseLimitExceeded(FsuscError):
    def __init__(self, n, limit):
        self.n = n
        self.limit = limit
        super().__init__(f"dense_limit exceeded: {n} unknowns > limit {limit}")


class SingularPreconditioner(FsuscError):
    pass


class CGNBreakdown(FsuscError):
    pass


class ConfigError(FsuscError):
    pass


class CheckpointError(FsuscError):
    pass
