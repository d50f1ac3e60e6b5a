"""Reduced density matrices, Schmidt decomposition, and entropy measures.

The eigensolver is a self-contained cyclic Jacobi iteration on the Hermitian
matrix, so the package carries no linear-algebra solver dependency; it sweeps
until the off-diagonal Frobenius norm falls below 1e-13 times the dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor_state import StateVector, SubsystemSplit

HERMITICITY_TOL = 1e-10
RANK_CUTOFF = 1e-12
_JACOBI_OFF_SCALE = 1e-13
_JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix of a marginal."""

    dim: int
    entries: np.ndarray

    def __init__(self, entries: np.ndarray):
        entries = np.asarray(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {entries.shape}")
        entries = entries.copy()
        entries.setflags(write=False)
        object.__setattr__(self, "dim", entries.shape[0])
        object.__setattr__(self, "entries", entries)

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))


@dataclass(frozen=True)
class SchmidtResult:
    """Bipartite decomposition psi = sum_k sqrt(p_k) |alpha_k> x |beta_k>.

    coefficients are sorted descending and sum to 1; left_basis / right_basis
    hold |alpha_k> / |beta_k> as orthonormal columns. The right vectors are
    built by contraction against the left ones, so relative phases reconstruct
    the state exactly. rank counts coefficients above 1e-12.
    """

    split: SubsystemSplit
    coefficients: np.ndarray
    left_basis: np.ndarray
    right_basis: np.ndarray
    entropy_bits: float
    entropy_nats: float
    participation: float
    rank: int

    def reconstruct(self) -> StateVector:
        """Rebuild the state from the coefficients and paired bases."""
        u, v = self.split.factor_dims
        tensor = np.zeros((u, v), dtype=complex)
        for k, p in enumerate(self.coefficients):
            tensor += math.sqrt(max(p, 0.0)) * np.outer(
                self.left_basis[:, k], self.right_basis[:, k]
            )
        return self.split.state_from_tensor(tensor)


@dataclass(frozen=True)
class QubitSplitResult:
    """Closed-form spectrum for a qubit x (n/2) bipartition.

    mu_plus/mu_minus solve the quadratic for the marginal eigenvalues in
    terms of the generalized concurrence C (the sum of squared 2x2 minors of
    the amplitude matrix). theta_max uses the convention cos(theta_max) =
    mu_plus; theta_max_amplitude uses cos(theta) = sqrt(mu_plus), matching
    the amplitudes sqrt(mu_+-) of the decomposition. Both are exposed because
    the two conventions differ whenever the state is entangled.
    """

    concurrence_sq: float
    mu_plus: float
    mu_minus: float
    theta_max: float
    theta_max_amplitude: float


def _require_bipartite(split: SubsystemSplit) -> None:
    if split.num_factors != 2:
        raise ValueError(f"expected a bipartite split, got {split.num_factors} factors")


def reduced_density_matrix(psi: StateVector, split: SubsystemSplit, keep: str = "A") -> DensityMatrix:
    """Marginal of |psi><psi| on one factor of a bipartite split.

    keep="A" traces out the second factor: (rho_A)_kl = sum_t chi[k,t] chi[l,t]*.
    keep="B" traces out the first: (rho_B)_qr = sum_t chi[t,q] chi[t,r]*.
    """
    _require_bipartite(split)
    psi.require_normalized()
    chi = split.tensor_of(psi)
    f = split.label_index(keep)
    if f == 0:
        rho = chi @ chi.conj().T
    else:
        rho = chi.T @ chi.conj()
    return DensityMatrix(rho)


def hermitian_eig(m: DensityMatrix | np.ndarray, hermiticity_tol: float = HERMITICITY_TOL):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues sorted descending and
    eigenvectors as orthonormal columns; each column's largest-magnitude
    component is made real and positive. For degenerate clusters any
    orthonormal basis of the cluster subspace may be returned.
    """
    a = m.entries if isinstance(m, DensityMatrix) else np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if np.max(np.abs(a - a.conj().T)) > hermiticity_tol:
        raise ValueError("matrix is not Hermitian within tolerance")
    a = (a + a.conj().T) / 2.0
    v = np.eye(n, dtype=complex)
    target = _JACOBI_OFF_SCALE * n
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = a - np.diag(np.diag(a))
        if math.sqrt(float(np.sum(np.abs(off) ** 2))) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                phase = apq / r
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # 2x2 unitary: phase removal diag(1, conj(phase)) then rotation.
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                a[:, [p, q]] = a[:, [p, q]] @ g
                a[[p, q], :] = g.conj().T @ a[[p, q], :]
                v[:, [p, q]] = v[:, [p, q]] @ g
    else:
        raise RuntimeError("Jacobi iteration failed to reach its off-diagonal target")
    evals = np.diag(a).real.copy()
    order = np.argsort(evals, kind="stable")[::-1]
    evals = evals[order]
    vecs = v[:, order]
    for k in range(n):
        lead = np.argmax(np.abs(vecs[:, k]))
        pivot = vecs[lead, k]
        if abs(pivot) > 0.0:
            vecs[:, k] *= np.conj(pivot) / abs(pivot)
    return evals, vecs


def entropy_bits(p) -> float:
    """Shannon entropy -sum p_k log2 p_k of a coefficient distribution."""
    p = _checked_coefficients(p)
    nz = p[p > 0.0]
    return float(-np.sum(nz * np.log2(nz)))


def entropy_nats(p) -> float:
    """Same as entropy_bits but in natural-log units."""
    return entropy_bits(p) * math.log(2.0)


def participation(p) -> float:
    """Effective number of terms 1 / sum p_k^2; equals 1 iff separable."""
    p = _checked_coefficients(p)
    s = float(np.sum(p * p))
    if s == 0.0:
        raise ValueError("all coefficients are zero")
    return 1.0 / s


def _checked_coefficients(p, require_unit_sum: bool = True) -> np.ndarray:
    p = np.asarray(p, dtype=float).reshape(-1)
    if np.any(p < -RANK_CUTOFF):
        raise ValueError(f"negative coefficient {p.min():.3e}")
    p = np.clip(p, 0.0, None)
    if require_unit_sum and abs(p.sum() - 1.0) > 1e-8:
        raise ValueError(f"coefficients sum to {p.sum():.12g}, expected 1")
    return p


def schmidt_decompose(psi: StateVector, split: SubsystemSplit) -> SchmidtResult:
    """Schmidt decomposition of a normalized state across a bipartite split.

    The coefficients are the eigenvalues of the first factor's marginal and
    the left basis its eigenvectors; right vectors come from contracting the
    state against each left vector (and orthonormal filler for zero
    coefficients), so that the reconstruction holds with exact phases.
    """
    _require_bipartite(split)
    psi.require_normalized()
    chi = split.tensor_of(psi)
    u, v = split.factor_dims
    k = min(u, v)
    evals, evecs = hermitian_eig(reduced_density_matrix(psi, split, "A"))
    coeffs = np.clip(evals[:k], 0.0, None)
    left = evecs[:, :k]
    right = np.zeros((v, k), dtype=complex)
    filler = []
    for i in range(k):
        b = left[:, i].conj() @ chi
        if coeffs[i] > RANK_CUTOFF:
            right[:, i] = b / math.sqrt(coeffs[i])
        else:
            filler.append(i)
    done = [i for i in range(k) if i not in filler]
    for i in filler:
        right[:, i] = _orthonormal_filler([right[:, j] for j in done], v)
        done.append(i)
    ent_bits = entropy_bits(coeffs)
    return SchmidtResult(
        split=split,
        coefficients=coeffs,
        left_basis=left,
        right_basis=right,
        entropy_bits=ent_bits,
        entropy_nats=ent_bits * math.log(2.0),
        participation=participation(coeffs),
        rank=int(np.sum(coeffs > RANK_CUTOFF)),
    )


def _orthonormal_filler(used: list[np.ndarray], v_dim: int) -> np.ndarray:
    """A unit vector orthogonal to the given vectors (Gram-Schmidt over the basis)."""
    for e in range(v_dim):
        cand = np.zeros(v_dim, dtype=complex)
        cand[e] = 1.0
        for w in used:
            cand = cand - np.vdot(w, cand) * w
        nrm = float(np.linalg.norm(cand))
        if nrm > 1e-6:
            return cand / nrm
    raise RuntimeError("could not complete an orthonormal basis")


def qubit_split_closed_form(psi: StateVector, split: SubsystemSplit) -> QubitSplitResult:
    """Marginal spectrum of a qubit x rest bipartition via the minor sum.

    C sums the squared 2x2 minors of the 2 x u amplitude matrix; the marginal
    eigenvalues are mu_+- = (1 +- sqrt(1 - 4C)) / 2.
    """
    _require_bipartite(split)
    if split.factor_dims[0] != 2:
        raise ValueError(f"first factor has dimension {split.factor_dims[0]}, need a qubit")
    psi.require_normalized()
    chi = split.tensor_of(psi)
    u = chi.shape[1]
    c = 0.0
    for j in range(1, u):
        for t in range(j):
            c += abs(chi[0, j] * chi[1, t] - chi[1, j] * chi[0, t]) ** 2
    disc = math.sqrt(max(1.0 - 4.0 * c, 0.0))
    mu_plus = 0.5 * (1.0 + disc)
    mu_minus = 0.5 * (1.0 - disc)
    return QubitSplitResult(
        concurrence_sq=c,
        mu_plus=mu_plus,
        mu_minus=mu_minus,
        theta_max=math.acos(min(mu_plus, 1.0)),
        theta_max_amplitude=math.acos(min(math.sqrt(mu_plus), 1.0)),
    )
