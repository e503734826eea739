"""Locally unbiased estimator: commuting score operators, POVM, and errors.

The covariant score operators weight each first-order output eigenvector
by the logarithmic derivative of its eigenvalue shift; raising the index
with the inverse divergent Fisher matrix gives bounded operators whose
joint spectral decomposition defines a projective estimator.  Its
mean-square-error matrix matches the inverse divergent Fisher matrix to
second order in the noise strengths.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import LowNoiseChannel, pure_state_density
from .errors import BadProbabilities, DimensionMismatch, EmptySum
from .fisher import FisherMatrix, fisher_inverse, fisher_pseudo_inverse
from .linalg import dagger
from .spectral import OutputSpectrum

MERGE_RTOL = 1e-10


@dataclass(frozen=True)
class ScoreOperators:
    """Commuting Hermitian score operators built at a reference noise point."""

    covariant: tuple[np.ndarray, ...]
    contravariant: tuple[np.ndarray, ...] | None
    included: tuple[int, ...]  # shift indices (0-based into probs[1:])
    reference_eps: np.ndarray
    estimates: np.ndarray | None  # per included shift, D-vector of eigenvalues
    basis: np.ndarray
    pseudo: bool = False


def build_score_operators(
    spec: OutputSpectrum,
    shift_values: np.ndarray,
    shift_grads: np.ndarray,
    included,
) -> ScoreOperators:
    """Covariant score operators A_mu = sum_n (d_mu shift_n / shift_n) P_n.

    Only order-1 shifts enter; higher-or-zero shifts carry no first-order
    information and their projectors are left to the kernel outcome.
    """
    included = tuple(included)
    if not included:
        raise EmptySum("no first-order shift to build an estimator from")
    shift_values = np.asarray(shift_values, dtype=float)
    shift_grads = np.asarray(shift_grads, dtype=float)
    num_params = shift_grads.shape[0]
    dim = spec.dim
    ops = []
    for mu in range(num_params):
        acc = np.zeros((dim, dim), dtype=complex)
        for n in included:
            vec = spec.basis[:, n + 1]
            acc = acc + (shift_grads[mu, n] / shift_values[n]) * np.outer(vec, vec.conj())
        ops.append(acc)
    return ScoreOperators(
        covariant=tuple(ops),
        contravariant=None,
        included=included,
        reference_eps=np.asarray(spec.eps, dtype=float),
        estimates=None,
        basis=spec.basis,
    )


def raise_index(partial: ScoreOperators, jdiv: FisherMatrix, pseudo: bool = False) -> ScoreOperators:
    """Contravariant operators A^mu = sum_nu (Jdiv^-1)_{mu nu} A_nu.

    With pseudo=True a Moore-Penrose inverse is used when the divergent
    Fisher matrix is singular (negative-control path); the estimator is
    then unbiased only inside the row space and the flag is recorded.
    """
    inv_holder = fisher_pseudo_inverse(jdiv) if pseudo else fisher_inverse(jdiv)
    inv = inv_holder.inverse
    num_params = len(partial.covariant)
    contra = []
    for mu in range(num_params):
        acc = np.zeros_like(partial.covariant[0])
        for nu in range(num_params):
            acc = acc + inv[mu, nu] * partial.covariant[nu]
        contra.append(acc)
    # shared eigenbasis: the estimate vector of shift n is inv @ gradlog_n,
    # recovered from the covariant construction
    estimates = []
    for n in partial.included:
        vec = partial.basis[:, n + 1]
        glog = np.array([float(np.real(np.vdot(vec, a @ vec))) for a in partial.covariant])
        estimates.append(inv @ glog)
    return ScoreOperators(
        covariant=partial.covariant,
        contravariant=tuple(contra),
        included=partial.included,
        reference_eps=partial.reference_eps,
        estimates=np.asarray(estimates),
        basis=partial.basis,
        pseudo=pseudo,
    )


@dataclass(frozen=True)
class EstimatorPOVM:
    """Projective estimator: orthogonal projectors with estimate vectors."""

    projectors: tuple[np.ndarray, ...]
    estimates: np.ndarray  # (num outcomes, D)
    reference_eps: np.ndarray
    pseudo: bool = False

    def completeness_residual(self) -> float:
        dim = self.projectors[0].shape[0]
        return float(np.linalg.norm(sum(self.projectors) - np.eye(dim)))


def build_povm(score: ScoreOperators) -> EstimatorPOVM:
    """Joint spectral decomposition of the contravariant score operators.

    One projector per distinct estimate vector; the kernel of all score
    operators (the near-unit eigenvector and any excluded shifts) forms
    the completion outcome with estimate zero.
    """
    if score.contravariant is None or score.estimates is None:
        raise EmptySum("raise_index must run before building the estimator")
    dim = score.basis.shape[0]
    num_params = len(score.contravariant)
    groups: list[tuple[np.ndarray, np.ndarray]] = []  # (estimate, projector)
    for pos, n in enumerate(score.included):
        vec = score.basis[:, n + 1]
        proj = np.outer(vec, vec.conj())
        x = score.estimates[pos]
        merged = False
        for gi, (gx, gp) in enumerate(groups):
            if np.max(np.abs(gx - x)) <= MERGE_RTOL * max(1.0, float(np.max(np.abs(gx)))):
                groups[gi] = (gx, gp + proj)
                merged = True
                break
        if not merged:
            groups.append((x, proj))
    kernel = np.eye(dim, dtype=complex) - sum(p for _, p in groups)
    zero = np.zeros(num_params)
    zero_group = [gi for gi, (gx, _) in enumerate(groups) if np.max(np.abs(gx)) <= MERGE_RTOL]
    if zero_group:
        gi = zero_group[0]
        groups[gi] = (zero, groups[gi][1] + kernel)
    else:
        groups.append((zero, kernel))
    projectors = tuple((p + dagger(p)) / 2 for _, p in groups)
    estimates = np.asarray([x for x, _ in groups])
    return EstimatorPOVM(
        projectors=projectors,
        estimates=estimates,
        reference_eps=score.reference_eps,
        pseudo=score.pseudo,
    )


def outcome_probabilities(povm: EstimatorPOVM, rho: np.ndarray) -> np.ndarray:
    return np.array([float(np.real(np.trace(p @ rho))) for p in povm.projectors])


def unbiasedness_residual(povm: EstimatorPOVM, ch: LowNoiseChannel, phi: np.ndarray, eps_true) -> np.ndarray:
    """|E[x_mu] - eps_mu| per parameter at the true noise point."""
    eps_true = np.asarray(eps_true, dtype=float)
    rho = ch.apply(pure_state_density(phi), eps_true)
    q = outcome_probabilities(povm, rho)
    mean = povm.estimates.T @ q
    return np.abs(mean - eps_true)


@dataclass(frozen=True)
class MSEMatrix:
    """Mean-square-error matrix about the true noise point."""

    entries: np.ndarray
    source: str  # "analytic" | "monte-carlo"
    sample_count: int | None = None
    standard_error: np.ndarray | None = None
    mean: np.ndarray | None = None
    mean_standard_error: np.ndarray | None = None


def analytic_mse(povm: EstimatorPOVM, ch: LowNoiseChannel, phi: np.ndarray, eps_true) -> MSEMatrix:
    """Exact second moment sum_n q_n (x_n - eps)(x_n - eps)^T."""
    eps_true = np.asarray(eps_true, dtype=float)
    rho = ch.apply(pure_state_density(phi), eps_true)
    q = outcome_probabilities(povm, rho)
    num_params = eps_true.shape[0]
    entries = np.zeros((num_params, num_params))
    mean = np.zeros(num_params)
    for qn, x in zip(q, povm.estimates):
        d = x - eps_true
        entries += qn * np.outer(d, d)
        mean += qn * x
    return MSEMatrix(entries=entries, source="analytic", mean=mean)


def score_second_moment(povm: EstimatorPOVM, ch: LowNoiseChannel, phi: np.ndarray, eps_true) -> np.ndarray:
    """Tr[rho {A^mu, A^nu}]/2 evaluated through the estimator's outcomes."""
    rho = ch.apply(pure_state_density(phi), np.asarray(eps_true, dtype=float))
    q = outcome_probabilities(povm, rho)
    num_params = povm.estimates.shape[1]
    out = np.zeros((num_params, num_params))
    for qn, x in zip(q, povm.estimates):
        out += qn * np.outer(x, x)
    return out


def cr_gap(mse: MSEMatrix, jinv: FisherMatrix) -> np.ndarray:
    """Gap matrix V - J^-1 (point-wise; aggregate order fits live in sweeps)."""
    if jinv.inverse is None:
        raise DimensionMismatch("Fisher matrix must carry its inverse")
    if mse.entries.shape != jinv.inverse.shape:
        raise DimensionMismatch("MSE and Fisher inverse have different sizes")
    return mse.entries - jinv.inverse


def cr_direction_margin(gap: np.ndarray, num_directions: int, seed: int) -> float:
    """min over random unit directions u of u (V - J^-1) u."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 0x6372]))
    num_params = gap.shape[0]
    worst = np.inf
    for _ in range(num_directions):
        u = rng.normal(size=num_params)
        u /= np.linalg.norm(u)
        worst = min(worst, float(u @ gap @ u))
    return worst


def _block_count(q: np.ndarray, block: int, n: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=[seed, block]))
    return rng.multinomial(n, q)


def sample_measurements(
    povm: EstimatorPOVM,
    ch: LowNoiseChannel,
    phi: np.ndarray,
    eps_true,
    shots: int,
    seed: int,
    block_size: int = 1 << 16,
    workers: int = 1,
) -> MSEMatrix:
    """Monte Carlo estimate of the mean and mean-square-error matrix.

    Counter-based RNG keyed by (seed, block index) over a fixed block grid:
    the same seed yields the same stream on any platform.  Workers take
    blocks round-robin and their integer counts merge commutatively, so the
    result is independent of the worker count.
    """
    if shots < 1:
        raise BadProbabilities("shots must be >= 1")
    eps_true = np.asarray(eps_true, dtype=float)
    rho = ch.apply(pure_state_density(phi), eps_true)
    q = outcome_probabilities(povm, rho)
    if np.any(q < -1e-8):
        raise BadProbabilities(f"negative outcome probability {np.min(q):g}")
    total = float(np.sum(q))
    if abs(total - 1.0) > 1e-8:
        raise BadProbabilities(f"outcome probabilities sum to {total!r}")
    q = np.clip(q, 0.0, None)
    q = q / np.sum(q)

    num_blocks = (shots + block_size - 1) // block_size
    last = shots - block_size * (num_blocks - 1)
    counts = np.zeros(len(q), dtype=np.int64)
    for w in range(max(1, workers)):
        for b in range(w, num_blocks, max(1, workers)):
            n = last if b == num_blocks - 1 else block_size
            counts += _block_count(q, b, n, seed)

    num_params = eps_true.shape[0]
    xs = povm.estimates
    dev = xs - eps_true
    weights = counts / shots
    mean = xs.T @ weights
    entries = np.zeros((num_params, num_params))
    se = np.zeros((num_params, num_params))
    for mu in range(num_params):
        for nu in range(num_params):
            w = dev[:, mu] * dev[:, nu]
            m1 = float(w @ weights)
            m2 = float((w * w) @ weights)
            entries[mu, nu] = m1
            var = max(m2 - m1 * m1, 0.0)
            se[mu, nu] = np.sqrt(var / shots)
    mean_se = np.zeros(num_params)
    for mu in range(num_params):
        m1 = float(xs[:, mu] @ weights)
        m2 = float((xs[:, mu] * xs[:, mu]) @ weights)
        mean_se[mu] = np.sqrt(max(m2 - m1 * m1, 0.0) / shots)
    return MSEMatrix(
        entries=entries,
        source="monte-carlo",
        sample_count=shots,
        standard_error=se,
        mean=mean,
        mean_standard_error=mean_se,
    )
