"""Error types shared by all modules.

Every error carries a short machine-readable ``code`` and the name of the
module that raised it, so the command line can emit structured reports.
"""


class NetcompError(Exception):
    code = "error"
    module = "netcomp"

    def __init__(self, message, *, code=None, module=None):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code
        if module is not None:
            self.module = module

    def as_dict(self):
        return {"code": self.code, "message": self.message, "module": self.module}


class DistributionError(NetcompError, ValueError):
    code = "invalid_distribution"
    module = "degree"


class SeriesError(NetcompError, ValueError):
    code = "series_error"
    module = "convolution"


class MemoryBudgetError(NetcompError, MemoryError):
    code = "memory_budget"
    module = "convolution"


class ComponentError(NetcompError, ValueError):
    code = "component_error"
    module = "components"


class AsymptoteError(NetcompError, ValueError):
    code = "asymptote_undefined"
    module = "asymptotics"


class SimulationError(NetcompError, RuntimeError):
    code = "simulation_error"
    module = "simulator"


class IngestError(NetcompError, ValueError):
    code = "ingest_error"
    module = "ingest"
