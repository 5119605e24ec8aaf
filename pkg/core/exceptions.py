class QpiError(Exception):
    code      = 'QPI_ERROR'
    exit_code = 1

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def __str__(self):
        if not self.context:
            return self.message
        details = ', '.join(f'{key}={value}' for key, value in self.context.items())
        return f'{self.message} ({details})'

    def at_tick(self, tick):
        self.context['tick'] = tick
        return self


class DomainError(QpiError):
    code      = 'DOMAIN_ERROR'
    exit_code = 4


class SingularityError(DomainError):
    code = 'SINGULAR_CONFIGURATION'

    def __init__(self, message, condition_number, **context):
        super().__init__(message, condition_number=condition_number, **context)
        self.condition_number = condition_number


class NumericalError(QpiError):
    code      = 'NUMERICAL_FAILURE'
    exit_code = 4


class RankError(NumericalError):
    code = 'RANK_DEFICIENT'

    def __init__(self, message, rank, **context):
        super().__init__(message, rank=rank, **context)
        self.rank = rank


class ScenarioError(QpiError):
    code      = 'INVALID_SCENARIO'
    exit_code = 2


class SimulationError(QpiError):
    code      = 'SIMULATION_INFEASIBLE'
    exit_code = 3


class DistributionError(SimulationError):
    code = 'DISTRIBUTION_FAILED'


class InfeasibleStanceError(SimulationError):
    code = 'INFEASIBLE_STANCE'


class UsageError(QpiError):
    code      = 'INVALID_ARGUMENT'
    exit_code = 2
