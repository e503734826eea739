"""Output-state spectral analysis: eigenvalue shifts of the channel output.

For a pure input, the output state has one near-unit eigenvalue and
N-1 small ones that grow linearly in the noise strengths.  This module
extracts those shifts three ways: directly from the output spectrum,
from the deviation matrix (the output-minus-input operator compressed
onto the orthogonal complement of the input), and from the K x K
covariance matrix of the jump operators on the input state, which
carries the same nonzero spectrum whenever K <= N-1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import LowNoiseChannel, pure_state_density
from .errors import ConfigInvalid, ReductionInvalid
from .linalg import PowerFit, dagger, fit_or_floor
from . import curves

ORDER_ONE_BAND = (0.85, 1.15)
SHIFT_FLOOR = 1e-13


@dataclass(frozen=True)
class OutputSpectrum:
    """Diagonalized channel output for a pure input state."""

    eps: np.ndarray
    probs: np.ndarray  # descending
    basis: np.ndarray  # unitary, columns are eigenvectors
    input_state: np.ndarray

    @property
    def dim(self) -> int:
        return self.probs.shape[0]

    def shifts(self) -> np.ndarray:
        """Small eigenvalues p_1..p_{N-1}; they vanish at eps = 0."""
        return self.probs[1:]


def _fix_phases(basis: np.ndarray, phi: np.ndarray) -> np.ndarray:
    out = basis.copy()
    for k in range(out.shape[1]):
        col = out[:, k]
        overlap = np.vdot(phi, col)
        if abs(overlap) > 1e-8:
            out[:, k] = col * (overlap.conjugate() / abs(overlap))
        else:
            j = int(np.argmax(np.abs(col)))
            pivot = col[j]
            if abs(pivot) > 0:
                out[:, k] = col * (pivot.conjugate() / abs(pivot))
    return out


def diagonalize_output(ch: LowNoiseChannel, phi: np.ndarray, eps) -> OutputSpectrum:
    """Spectrum of channel[|phi><phi|] with eigenvalues sorted descending.

    Eigenvector phases are fixed so <phi|n> is real and non-negative
    whenever it is nonzero, making the basis deterministic.
    """
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    rho = ch.apply(pure_state_density(phi), eps)
    w, v = np.linalg.eigh((rho + dagger(rho)) / 2)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    v = _fix_phases(v, phi)
    return OutputSpectrum(eps=np.asarray(eps, dtype=float), probs=w, basis=v, input_state=phi)


def complement_basis(phi: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the complement of phi (N x (N-1)).

    Gram-Schmidt over the standard basis, skipping the basis vector with
    the largest overlap with phi.
    """
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    n = phi.shape[0]
    if not np.isclose(np.linalg.norm(phi), 1.0, atol=1e-12):
        raise ConfigInvalid("input state must be normalized")
    skip = int(np.argmax(np.abs(phi)))
    cols = [phi] + [np.eye(n, dtype=complex)[:, j] for j in range(n) if j != skip]
    ortho: list[np.ndarray] = []
    for c in cols:
        for q in ortho:
            c = c - np.vdot(q, c) * q
        nc = np.linalg.norm(c)
        c = c / nc
        ortho.append(c)
    return np.column_stack(ortho[1:])


@dataclass(frozen=True)
class DeviationMatrix:
    """Output-minus-input operator compressed to the complement of the input.

    variant "full" holds the exact compression at the given eps; variant
    "leading" holds the rank-structured first-order part built from the
    jump operators alone (a Gram sum, positive semidefinite).
    """

    entries: np.ndarray
    variant: str
    frame: np.ndarray
    eps: np.ndarray


def deviation_matrix(
    ch: LowNoiseChannel,
    phi: np.ndarray,
    eps,
    variant: str = "full",
    frame: np.ndarray | None = None,
) -> DeviationMatrix:
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    eps = np.asarray(eps, dtype=float)
    if frame is None:
        frame = complement_basis(phi)
    else:
        frame = np.asarray(frame, dtype=complex)
        gram = dagger(frame) @ frame
        if np.linalg.norm(gram - np.eye(frame.shape[1])) > 1e-10:
            raise ConfigInvalid("frame columns must be orthonormal")
        if np.linalg.norm(dagger(frame) @ phi) > 1e-10:
            raise ConfigInvalid("frame columns must be orthogonal to the input state")
    if variant == "full":
        rho_in = pure_state_density(phi)
        delta = ch.apply(rho_in, eps) - rho_in
        entries = dagger(frame) @ delta @ frame
    elif variant == "leading":
        entries = np.zeros((frame.shape[1], frame.shape[1]), dtype=complex)
        for t in ch.jump_terms:
            u = dagger(frame) @ (t.base @ phi)
            entries = entries + eps[t.param] * np.outer(u, u.conj())
    else:
        raise ConfigInvalid(f"unknown deviation-matrix variant {variant!r}")
    entries = (entries + dagger(entries)) / 2
    return DeviationMatrix(entries=entries, variant=variant, frame=frame, eps=eps)


def deviation_eigenvalues(dm: DeviationMatrix) -> np.ndarray:
    """Eigenvalue shifts carried by the deviation matrix, descending."""
    return np.linalg.eigvalsh(dm.entries)[::-1].copy()


@dataclass(frozen=True)
class SpectralShifts:
    """Shift values at one eps with order classification from a scale sweep."""

    values: np.ndarray
    labels: tuple[str, ...]  # "order-1" | "higher-or-zero"
    fits: tuple[PowerFit | None, ...]

    def order_one_indices(self) -> list[int]:
        return [i for i, lab in enumerate(self.labels) if lab == "order-1"]


def classify_shift_curves(scales, curve_rows, band=ORDER_ONE_BAND) -> tuple[tuple[str, ...], tuple[PowerFit | None, ...]]:
    """Label each shift curve order-1 or higher-or-zero by its log-log slope.

    curve_rows[t][i] is the i-th largest shift at scale scales[t].  Curves
    whose magnitude never rises above the numerical floor are
    higher-or-zero regardless of slope (exactly degenerate directions).
    """
    rows = np.asarray(curve_rows, dtype=float)
    scales = np.asarray(scales, dtype=float)
    labels = []
    fits = []
    floor = SHIFT_FLOOR * max(1.0, float(np.max(np.abs(rows))) if rows.size else 1.0)
    for i in range(rows.shape[1]):
        vals = np.abs(rows[:, i])
        fit = fit_or_floor(scales, vals, floor)
        fits.append(fit)
        if fit is None:
            labels.append("higher-or-zero")
        elif band[0] <= fit.slope <= band[1]:
            labels.append("order-1")
        else:
            labels.append("higher-or-zero")
    return tuple(labels), tuple(fits)


def delta_shift_classification(
    ch: LowNoiseChannel,
    phi: np.ndarray,
    direction: np.ndarray,
    scales,
    variant: str = "full",
    frame: np.ndarray | None = None,
) -> SpectralShifts:
    """Deviation-matrix shifts at the largest scale, classified over the sweep."""
    direction = np.asarray(direction, dtype=float)
    rows = []
    for s in scales:
        dm = deviation_matrix(ch, phi, s * direction, variant=variant, frame=frame)
        rows.append(deviation_eigenvalues(dm))
    labels, fits = classify_shift_curves(scales, rows)
    return SpectralShifts(values=np.asarray(rows[-1]), labels=labels, fits=fits)


@dataclass(frozen=True)
class JumpCovariance:
    """eps-weighted covariance matrix of the jump operators on the input state."""

    entries: np.ndarray  # K x K Hermitian PSD
    index: tuple[tuple[int, int], ...]  # (param, within-param) per row
    eps: np.ndarray


def jump_covariance(ch: LowNoiseChannel, phi: np.ndarray, eps) -> JumpCovariance:
    """Entries sqrt(eps_mu) Cov(M_i, M_j) sqrt(eps_nu) over all jump operators.

    Cov(A, B) = <phi|A^dag B|phi> - <phi|A^dag|phi><phi|B|phi>.
    """
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    eps = np.asarray(eps, dtype=float)
    terms = ch.jump_terms
    k = len(terms)
    entries = np.zeros((k, k), dtype=complex)
    means = [np.vdot(phi, t.base @ phi) for t in terms]
    images = [t.base @ phi for t in terms]
    for i in range(k):
        for j in range(k):
            cov = np.vdot(images[i], images[j]) - np.conj(means[i]) * means[j]
            entries[i, j] = np.sqrt(eps[terms[i].param] * eps[terms[j].param]) * cov
    entries = (entries + dagger(entries)) / 2
    counters: dict[int, int] = {}
    index = []
    for t in terms:
        a = counters.get(t.param, 0)
        counters[t.param] = a + 1
        index.append((t.param, a))
    return JumpCovariance(entries=entries, index=tuple(index), eps=eps)


def reduced_shifts(lm: JumpCovariance, dim: int) -> np.ndarray:
    """Nonzero eigenvalue shifts recovered from the jump covariance matrix.

    Valid when the total number of jump operators K is at most dim - 1;
    the K eigenvalues then equal the nonzero leading-variant deviation
    eigenvalues (pad with dim - 1 - K zeros to compare full spectra).
    """
    k = lm.entries.shape[0]
    if k > dim - 1:
        raise ReductionInvalid(f"reduction needs K <= N-1, got K={k}, N={dim}")
    return np.linalg.eigvalsh(lm.entries)[::-1].copy()


def trace_power_residual(dm_leading: DeviationMatrix, lm: JumpCovariance, kmax: int) -> float:
    """max_k |Tr Delta^k - Tr Lambda^k| for k = 1..kmax (leading variant)."""
    if dm_leading.variant != "leading":
        raise ConfigInvalid("trace-power identity applies to the leading variant")
    worst = 0.0
    a = np.eye(dm_leading.entries.shape[0], dtype=complex)
    b = np.eye(lm.entries.shape[0], dtype=complex)
    for _ in range(kmax):
        a = a @ dm_leading.entries
        b = b @ lm.entries
        worst = max(worst, abs(np.trace(a) - np.trace(b)))
    return float(worst)


def output_spectrum_with_gradients(
    ch: LowNoiseChannel,
    phi: np.ndarray,
    eps: np.ndarray,
    fd_step: float,
) -> tuple[OutputSpectrum, np.ndarray]:
    """Output spectrum plus per-parameter eigenvalue derivatives at one point.

    The returned spectrum's basis is the cluster-refined eigenbasis from the
    differentiation, so degenerate eigenvectors pair correctly with their
    shift derivatives; downstream estimator construction relies on this.
    """
    phi = np.asarray(phi, dtype=complex).reshape(-1)
    rho_in = pure_state_density(phi)
    values, vectors, derivs = curves.eigencurve_derivatives(
        lambda e: ch.apply(rho_in, e), np.asarray(eps, dtype=float), fd_step
    )
    vectors = _fix_phases(vectors, phi)
    spec = OutputSpectrum(
        eps=np.asarray(eps, dtype=float), probs=values, basis=vectors, input_state=phi
    )
    return spec, derivs


def output_shift_curves(
    ch: LowNoiseChannel,
    phi: np.ndarray,
    direction: np.ndarray,
    scales,
    fd_step: float | None = None,
):
    """Output-spectrum shift data across a scale sweep.

    Returns (spectra, shift_rows, grad_rows): per scale, the OutputSpectrum,
    the N-1 shifts, and the (D, N) eigenvalue-derivative array (index 0 is
    the near-unit eigenvalue).
    """
    direction = np.asarray(direction, dtype=float)
    spectra = []
    shift_rows = []
    grad_rows = []
    for s in scales:
        eps = s * direction
        step = fd_step if fd_step is not None else s / 100.0
        spec, derivs = output_spectrum_with_gradients(ch, phi, eps, step)
        spectra.append(spec)
        shift_rows.append(spec.shifts())
        grad_rows.append(derivs)
    return spectra, shift_rows, grad_rows
