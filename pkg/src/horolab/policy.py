"""Central numeric policy: every tolerance and cap lives here."""

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class NumericPolicy:
    structural: float = 1e-9        # det, recomposition, invariance residuals
    quadrature: float = 1e-6        # deterministic quadrature agreement
    jacobi_offdiag: float = 1e-12   # cyclic Jacobi stopping rule (relative)
    jacobi_max_sweeps: int = 60
    rank_threshold: float = 1e-8    # Gram eigenvalue cut for primitive dimension
    reduce_max_steps: int = 1_000_000
    enumeration_cap: int = 1_000_000
    min_sublevel_hits: int = 100
    fourier_budget: int = 2 ** 27   # max quadrature nodes for a single transform
    diag_min_ratio: float = 0.25    # completing-the-square denominators / lambda_i

    def with_(self, **changes) -> "NumericPolicy":
        return replace(self, **changes)


POLICY = NumericPolicy()
