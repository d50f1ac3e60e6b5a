"""Nearest product states by alternating optimization of the stationarity equations.

For a product state phi = A x B x C x ... with squared factor norms
N_A, N_B, ..., the squared distance |phi - psi|^2 is stationary exactly when
each factor equals the contraction of the state against the conjugates of the
other factors, divided by the product of the other factors' squared norms.
At any such critical point <phi|psi> = N_A N_B N_C ... is real, the angle
satisfies cos(theta) = sqrt(N_A N_B ...), and the distance is sin^2(theta).

The solver cycles through the factors, solving each stationarity row exactly
(which can only decrease the distance), and multistarts from one deterministic
and several random initial products. Factor norms are rebalanced to their
geometric mean after every factor update: only the product of the norms is
determined at a critical point, and equal norms avoid under/overflow.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field

import numpy as np

from .tensor_state import (
    StateVector,
    SubsystemSplit,
    assemble_product,
    distance_squared,
    multi_index,
)
from .schmidt_core import hermitian_eig, reduced_density_matrix

_REL_CHANGE_TOL = 1e-12
_CRITICAL_VALUE_TIE = 1e-12
_ZERO_NORM_SQ = 1e-280
_DEGENERACY_GAP = 1e-10


class ZeroContractionError(RuntimeError):
    """The state is orthogonal to the current partial product; restart needed."""


class ConvergenceError(RuntimeError):
    """No start converged; carries the best partial result found."""

    def __init__(self, message: str, best: "GeometricResult"):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SolverConfig:
    starts: int = 16
    max_sweeps: int = 10_000
    tol: float = 1e-10
    seed: int = 0


@dataclass(frozen=True)
class ProductState:
    """Per-factor coefficient vectors of an (unnormalized) product state."""

    factors: tuple[np.ndarray, ...]

    def __init__(self, factors):
        frozen = []
        for f in factors:
            f = np.asarray(f, dtype=complex).reshape(-1).copy()
            f.setflags(write=False)
            frozen.append(f)
        object.__setattr__(self, "factors", tuple(frozen))

    @property
    def factor_norms(self) -> tuple[float, ...]:
        """Squared norm of each factor vector."""
        return tuple(float(np.real(np.vdot(f, f))) for f in self.factors)

    @property
    def norm_product(self) -> float:
        return math.prod(self.factor_norms)

    def assemble(self, split: SubsystemSplit) -> StateVector:
        return assemble_product(self.factors, split)


@dataclass(frozen=True)
class GeometricResult:
    """Converged nearest-product-state data and the identities derived from it.

    ``lam`` is the overlap with the closest normalized product state and equals
    sqrt(norm_product) = cos_theta_c by construction; sin2_theta_c is the
    entanglement measure. d2_unnormalized and d2_normalized are the measured
    squared distances from the unnormalized and unit-norm product states.
    critical_values lists the distinct converged values of the norm product
    (for the bipartite closed form: the full marginal spectrum).
    """

    split: SubsystemSplit
    product_state: ProductState
    lam: float
    cos_theta_c: float
    sin2_theta_c: float
    d2_unnormalized: float
    d2_normalized: float
    residual: float
    sweeps: int
    starts_used: int
    starts_converged: int
    converged: bool
    critical_values: tuple[float, ...]
    variant: str
    warnings: tuple[str, ...] = field(default=())


def _check_shapes(split: SubsystemSplit, factors) -> None:
    fdims = split.factor_dims
    if len(factors) != len(fdims):
        raise ValueError(f"{len(factors)} factors for a {len(fdims)}-factor split")
    for f, (vec, d) in enumerate(zip(factors, fdims)):
        if vec.size != d:
            raise ValueError(f"factor {f} has length {vec.size}, expected {d}")


def _contract_all_but(chi: np.ndarray, factors, skip: int) -> np.ndarray:
    """Contract chi against the conjugates of every factor except one."""
    m = chi.ndim
    letters = string.ascii_lowercase[:m]
    subs = [letters]
    operands = [chi]
    for g in range(m):
        if g == skip:
            continue
        subs.append(letters[g])
        operands.append(np.conj(factors[g]))
    return np.einsum(",".join(subs) + "->" + letters[skip], *operands)


def _residual(chi: np.ndarray, factors) -> float:
    norms = [float(np.real(np.vdot(f, f))) for f in factors]
    worst = 0.0
    for f in range(len(factors)):
        n_rest = math.prod(norms[g] for g in range(len(factors)) if g != f)
        t = _contract_all_but(chi, factors, f)
        worst = max(worst, float(np.max(np.abs(factors[f] * n_rest - t))))
    return worst


def _rebalanced(factors) -> list[np.ndarray]:
    """Scale every factor to the geometric-mean norm, preserving the product."""
    norms = [float(np.real(np.vdot(f, f))) for f in factors]
    product = math.prod(norms)
    if product <= 0.0:
        raise ZeroContractionError("product state collapsed to zero")
    mean = product ** (1.0 / len(factors))
    return [f * math.sqrt(mean / n) for f, n in zip(factors, norms)]


def _sweep(chi: np.ndarray, factors) -> list[np.ndarray]:
    """One cyclic pass solving each factor's stationarity row exactly."""
    factors = list(factors)
    for f in range(len(factors)):
        norms = [float(np.real(np.vdot(g, g))) for g in factors]
        n_rest = math.prod(norms[g] for g in range(len(factors)) if g != f)
        t = _contract_all_but(chi, factors, f)
        t_norm_sq = float(np.real(np.vdot(t, t)))
        if t_norm_sq < _ZERO_NORM_SQ or n_rest < _ZERO_NORM_SQ:
            raise ZeroContractionError(f"contraction annihilated factor {f}")
        factors[f] = t / n_rest
        factors = _rebalanced(factors)
    return factors


def fixed_point_residual(psi: StateVector, split: SubsystemSplit, ps: ProductState) -> float:
    """Max-norm violation of the stationarity equations; zero at a critical point."""
    _check_shapes(split, ps.factors)
    return _residual(split.tensor_of(psi), ps.factors)


def sweep_update(psi: StateVector, split: SubsystemSplit, ps: ProductState) -> ProductState:
    """One full cyclic factor update (with norm rebalancing after each factor)."""
    _check_shapes(split, ps.factors)
    return ProductState(_sweep(split.tensor_of(psi), ps.factors))


def _deterministic_start(chi: np.ndarray, split: SubsystemSplit) -> list[np.ndarray]:
    """Basis product state at the largest-magnitude amplitude."""
    mi = multi_index(int(np.argmax(np.abs(chi))), split)
    factors = []
    for component, d in zip(mi, split.factor_dims):
        e = np.zeros(d, dtype=complex)
        e[component] = 1.0
        factors.append(e)
    return factors


def _random_start(rng: np.random.Generator, split: SubsystemSplit) -> list[np.ndarray]:
    factors = []
    for d in split.factor_dims:
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        factors.append(v / np.linalg.norm(v))
    return factors


@dataclass
class _Run:
    factors: list[np.ndarray]
    norm_product: float
    residual: float
    sweeps: int
    converged: bool


def _iterate(chi, factors, max_sweeps: int, tol: float, normalized: bool) -> _Run:
    track = 0.0
    residual = math.inf
    for sweep in range(1, max_sweeps + 1):
        if normalized:
            factors, value = _sweep_normalized(chi, factors)
        else:
            factors = _sweep(chi, factors)
            value = math.prod(float(np.real(np.vdot(f, f))) for f in factors)
        if abs(value - track) <= _REL_CHANGE_TOL * max(value, _ZERO_NORM_SQ):
            residual = (
                _residual_normalized(chi, factors, value)
                if normalized
                else _residual(chi, factors)
            )
            if residual < tol:
                return _Run(factors, value, residual, sweep, True)
        track = value
    residual = (
        _residual_normalized(chi, factors, track) if normalized else _residual(chi, factors)
    )
    return _Run(factors, track, residual, max_sweeps, False)


def _sweep_normalized(chi, factors):
    """Cyclic pass keeping every factor at unit norm; returns the overlap."""
    factors = list(factors)
    value = 0.0
    for f in range(len(factors)):
        t = _contract_all_but(chi, factors, f)
        nrm = float(np.linalg.norm(t))
        if nrm * nrm < _ZERO_NORM_SQ:
            raise ZeroContractionError(f"contraction annihilated factor {f}")
        factors[f] = t / nrm
        value = nrm
    return factors, value


def _residual_normalized(chi, factors, lam: float) -> float:
    worst = 0.0
    for f in range(len(factors)):
        t = _contract_all_but(chi, factors, f)
        worst = max(worst, float(np.max(np.abs(t - lam * factors[f]))))
    return worst


def _multistart(psi, split, config, normalized: bool):
    psi.require_normalized()
    chi = split.tensor_of(psi)
    rng = np.random.default_rng(config.seed)
    initial = [_deterministic_start(chi, split)]
    initial += [_random_start(rng, split) for _ in range(max(config.starts - 1, 0))]
    runs: list[_Run] = []
    starts_used = 0
    for factors in initial:
        for attempt in range(2):  # a zero contraction earns one fresh replacement
            starts_used += 1
            try:
                runs.append(_iterate(chi, factors, config.max_sweeps, config.tol, normalized))
                break
            except ZeroContractionError:
                if attempt == 0:
                    factors = _random_start(rng, split)
    if not runs:
        raise ConvergenceError(
            "every start collapsed to a zero product state",
            _empty_result(psi, split, starts_used, normalized),
        )
    converged = [r for r in runs if r.converged]
    pool = converged if converged else runs
    best = max(pool, key=lambda r: (r.norm_product, -r.residual))
    near_best = [
        r for r in pool if abs(r.norm_product - best.norm_product) <= _CRITICAL_VALUE_TIE
    ]
    best = min(near_best, key=lambda r: r.residual)
    critical = _distinct_values([r.norm_product for r in converged])
    result = _build_result(
        psi, split, best, starts_used, len(converged), critical, normalized
    )
    if not converged:
        raise ConvergenceError(
            f"no start converged within {config.max_sweeps} sweeps "
            f"(best residual {best.residual:.3e})",
            result,
        )
    return result


def _distinct_values(values) -> tuple[float, ...]:
    out: list[float] = []
    for v in sorted(values, reverse=True):
        if not out or abs(out[-1] - v) > _CRITICAL_VALUE_TIE:
            out.append(v)
    return tuple(out)


def _build_result(psi, split, run: _Run, starts_used, starts_converged, critical, normalized):
    if normalized:
        # run.norm_product holds the overlap; scale unit factors so the
        # assembled product state is the matching unnormalized critical point.
        overlap = max(run.norm_product, 0.0)
        scale = overlap ** (1.0 / len(run.factors))
        factors = [f * scale for f in run.factors]
    else:
        factors = run.factors
    ps = ProductState(factors)
    norm_product = ps.norm_product
    lam = math.sqrt(max(norm_product, 0.0))
    phi = ps.assemble(split)
    phi_norm = math.sqrt(max(phi.norm_sq(), _ZERO_NORM_SQ))
    phi_unit = StateVector(split.dims, phi.amps / phi_norm)
    residual = _residual(split.tensor_of(psi), ps.factors)
    return GeometricResult(
        split=split,
        product_state=ps,
        lam=lam,
        cos_theta_c=lam,
        sin2_theta_c=1.0 - norm_product,
        d2_unnormalized=distance_squared(phi, psi),
        d2_normalized=distance_squared(phi_unit, psi),
        residual=residual,
        sweeps=run.sweeps,
        starts_used=starts_used,
        starts_converged=starts_converged,
        converged=run.converged,
        critical_values=critical,
        variant="normalized" if normalized else "unnormalized",
    )


def _empty_result(psi, split, starts_used, normalized) -> GeometricResult:
    factors = [np.zeros(d, dtype=complex) for d in split.factor_dims]
    run = _Run(factors, 0.0, math.inf, 0, False)
    return _build_result(psi, split, run, starts_used, 0, (), normalized)


def nearest_product_state(
    psi: StateVector, split: SubsystemSplit, config: SolverConfig | None = None
) -> GeometricResult:
    """Best critical point of the unnormalized product-state distance.

    Runs multistart alternating optimization and returns the converged result
    with the largest norm product (ties broken by smaller residual). Raises
    ConvergenceError, carrying the best partial result, if no start converges.
    """
    return _multistart(psi, split, config or SolverConfig(), normalized=False)


def normalized_variant(
    psi: StateVector, split: SubsystemSplit, config: SolverConfig | None = None
) -> GeometricResult:
    """Same search restricted to unit-norm factors (nonlinear eigenvalue form).

    Each factor is rescaled to unit norm after its update and the overlap is
    read off as <phi_N|psi> at convergence. The reported product state is the
    equivalent unnormalized critical point (factors scaled so the norm product
    equals the squared overlap), so the same identities hold for both variants;
    d2_normalized measures the distance from the unit-norm product state.
    """
    return _multistart(psi, split, config or SolverConfig(), normalized=True)


def bipartite_closed_form(psi: StateVector, split: SubsystemSplit) -> GeometricResult:
    """Exact nearest product state of a bipartite split via the marginal spectrum.

    For two factors the stationarity equations decouple into eigenvalue
    problems for the reduced density matrices: the norm product of a critical
    point is a marginal eigenvalue and the factors are the paired eigenvectors.
    The returned result uses the largest eigenvalue; critical_values carries
    the whole spectrum.
    """
    if split.num_factors != 2:
        raise ValueError(f"closed form needs a bipartite split, got {split.num_factors} factors")
    psi.require_normalized()
    chi = split.tensor_of(psi)
    evals, evecs = hermitian_eig(reduced_density_matrix(psi, split, "A"))
    top = float(max(evals[0], 0.0))
    a_dir = evecs[:, 0]
    b_raw = a_dir.conj() @ chi
    b_nrm = float(np.linalg.norm(b_raw))
    if b_nrm * b_nrm < _ZERO_NORM_SQ:
        raise RuntimeError("top eigenvector contracted to zero against the state")
    scale = top**0.25
    ps = ProductState([a_dir * scale, (b_raw / b_nrm) * scale])
    warnings = ()
    if len(evals) > 1 and evals[0] - evals[1] < _DEGENERACY_GAP:
        warnings = (
            f"degenerate top eigenvalue (gap {evals[0] - evals[1]:.3e}); "
            "the critical product state is not unique",
        )
    lam = math.sqrt(top)
    phi = ps.assemble(split)
    phi_norm = math.sqrt(max(phi.norm_sq(), _ZERO_NORM_SQ))
    phi_unit = StateVector(split.dims, phi.amps / phi_norm)
    return GeometricResult(
        split=split,
        product_state=ps,
        lam=lam,
        cos_theta_c=lam,
        sin2_theta_c=1.0 - top,
        d2_unnormalized=distance_squared(phi, psi),
        d2_normalized=distance_squared(phi_unit, psi),
        residual=_residual(chi, ps.factors),
        sweeps=0,
        starts_used=0,
        starts_converged=0,
        converged=True,
        critical_values=tuple(float(max(v, 0.0)) for v in evals),
        variant="bipartite-closed-form",
        warnings=warnings,
    )
