"""Monte Carlo estimate records and their CSV rendering."""
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EstimateRecord:
    estimand: str
    mean: float
    stderr: float
    trials: int
    master_seed: int
    params: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_samples(cls, estimand, samples, master_seed, **params):
        """Mean and standard error (sample sd / sqrt(trials)) of per-trial values."""
        x = np.asarray(samples, dtype=float)
        n = len(x)
        if n == 0:
            raise ValueError("need at least one trial")
        se = float(x.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return cls(estimand, float(x.mean()), se, n, int(master_seed), dict(params))

    @property
    def z_upper(self):
        return self.mean + 3.0 * self.stderr

    def row(self, param_names):
        return [self.estimand, *(self.params.get(k, "") for k in param_names), self.mean, self.stderr, self.trials, self.master_seed]


def fmt(value):
    """Lossless text for CSV output: 17 significant digits for floats."""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    return str(value)
