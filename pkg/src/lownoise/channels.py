"""Multi-parameter low-noise channels in Kraus form.

A channel here is a family of completely positive trace-preserving maps
indexed by a vector of small non-negative noise strengths eps = (eps_1,
..., eps_D).  Two Kraus families enter: identity-like terms that reduce
to kappa * 1 at eps = 0, and jump (dissipator) terms whose contribution
is weighted linearly by the corresponding eps component.

Channels are immutable after construction and all operations are pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConfigInvalid,
    DimensionMismatch,
    InconsistentKrausData,
    StepTooLarge,
    TPCPViolation,
)
from .linalg import dagger, frobenius, hermiticity_residual, require_hermitian

TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-12


# ---------------------------------------------------------------------------
# density-matrix helpers


def pure_state_density(vec: np.ndarray) -> np.ndarray:
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    n = np.linalg.norm(vec)
    if not np.isclose(n, 1.0, atol=1e-12):
        raise ConfigInvalid("state vector must be normalized")
    return np.outer(vec, vec.conj())


def density_residuals(rho: np.ndarray) -> tuple[float, float, float]:
    """(Hermiticity, trace-1, negativity) residuals of a candidate density matrix."""
    rho = np.asarray(rho, dtype=complex)
    herm = hermiticity_residual(rho)
    tr = abs(np.trace(rho).real - 1.0) + abs(np.trace(rho).imag)
    w = np.linalg.eigvalsh((rho + dagger(rho)) / 2)
    neg = max(0.0, -float(w[0]))
    return float(herm), float(tr), neg


def is_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> bool:
    herm, tr, neg = density_residuals(rho)
    return herm <= 1e-12 * max(1.0, frobenius(rho)) and tr <= 1e-12 * 10 and neg <= tol


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# Kraus terms


@dataclass(frozen=True)
class IdentityKrausTerm:
    """Kraus operator of the form weight * 1 - sum_mu eps_mu linear[mu] + higher(eps)."""

    weight: complex
    linear: tuple[np.ndarray, ...]
    higher: Callable[[np.ndarray], np.ndarray] | None = None

    def evaluate(self, eps: np.ndarray) -> np.ndarray:
        dim = self.linear[0].shape[0]
        out = self.weight * np.eye(dim, dtype=complex)
        for mu, n_mu in enumerate(self.linear):
            out = out - eps[mu] * n_mu
        if self.higher is not None:
            out = out + self.higher(eps)
        return out


@dataclass(frozen=True)
class JumpKrausTerm:
    """Kraus operator base + higher(eps), entering with weight eps[param]."""

    param: int  # 0-based parameter index
    base: np.ndarray
    higher: Callable[[np.ndarray], np.ndarray] | None = None

    def evaluate(self, eps: np.ndarray) -> np.ndarray:
        if self.higher is None:
            return self.base
        return self.base + self.higher(eps)


def _validate_eps(eps, num_params: int) -> np.ndarray:
    eps = np.asarray(eps, dtype=float).reshape(-1)
    if eps.shape[0] != num_params:
        raise DimensionMismatch(f"expected {num_params} noise parameters, got {eps.shape[0]}")
    if np.any(eps < 0):
        raise ConfigInvalid("noise parameters must be non-negative")
    return eps


class LowNoiseChannel:
    """A D-parameter dissipative low-noise channel on an N-dimensional system.

    Use the module-level builders ``explicit_channel`` and
    ``sqrt_completion_channel`` rather than the constructor.
    """

    def __init__(
        self,
        dim: int,
        num_params: int,
        identity_terms: Sequence[IdentityKrausTerm],
        jump_terms: Sequence[JumpKrausTerm],
        builder: str = "explicit",
        validate: bool = True,
    ):
        self.dim = int(dim)
        self.num_params = int(num_params)
        self.identity_terms = tuple(identity_terms)
        self.jump_terms = tuple(jump_terms)
        self.builder = builder
        self._hamiltonians: tuple[np.ndarray, ...] | None = None
        if validate:
            self._validate()

    # -- structure helpers -------------------------------------------------

    def jumps_for(self, mu: int) -> list[np.ndarray]:
        return [t.base for t in self.jump_terms if t.param == mu]

    def jump_counts(self) -> list[int]:
        return [len(self.jumps_for(mu)) for mu in range(self.num_params)]

    def total_jumps(self) -> int:
        return len(self.jump_terms)

    def dissipator_sum(self, mu: int) -> np.ndarray:
        """sum_a M_a^dag M_a over the jump operators of parameter mu."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for m in self.jumps_for(mu):
            out = out + dagger(m) @ m
        return out

    # -- validation ---------------------------------------------------------

    def _validate(self) -> None:
        wsum = sum(abs(t.weight) ** 2 for t in self.identity_terms)
        if abs(wsum - 1.0) > 1e-12:
            raise InconsistentKrausData(f"identity-term weights give sum |kappa|^2 = {wsum!r}")
        for t in self.identity_terms:
            if len(t.linear) != self.num_params:
                raise ConfigInvalid("each identity term needs one linear coefficient per parameter")
        for t in self.jump_terms:
            if not 0 <= t.param < self.num_params:
                raise ConfigInvalid(f"jump term parameter index {t.param} out of range")
            if frobenius(t.base) == 0.0:
                raise ConfigInvalid("jump operators must be non-vanishing")
        for mu in range(self.num_params):
            ms = self.jumps_for(mu)
            for i in range(len(ms)):
                for j in range(i + 1, len(ms)):
                    inner = abs(np.vdot(ms[i], ms[j]))
                    if abs(inner - frobenius(ms[i]) * frobenius(ms[j])) < 1e-12:
                        raise ConfigInvalid(
                            f"jump operators {i} and {j} of parameter {mu + 1} are proportional"
                        )
        res = self.identity_limit_residual()
        if res > 1e-12:
            raise InconsistentKrausData(f"channel does not reduce to identity at eps=0 ({res:g})")
        # first-order trace preservation, checked via the Hamiltonian split
        self._hamiltonians = tuple(self._hamiltonian(mu) for mu in range(self.num_params))
        nmax = max((np.linalg.norm(n, 2) for t in self.identity_terms for n in t.linear), default=0.0)
        quad = 10.0 * (1.0 + nmax + len(self.identity_terms)) ** 2
        for s in (1e-6, 1e-4, 1e-2):
            eps = np.full(self.num_params, s / self.num_params)
            if self.tpcp_residual(eps) > 1e-10 + quad * s * s:
                raise TPCPViolation(f"trace-preservation residual too large at scale {s:g}")

    # -- evaluation ---------------------------------------------------------

    def kraus_operators(self, eps) -> list[np.ndarray]:
        """All Kraus operators at eps, jump terms carrying their sqrt(eps) weight."""
        eps = _validate_eps(eps, self.num_params)
        ops = [t.evaluate(eps) for t in self.identity_terms]
        for t in self.jump_terms:
            ops.append(np.sqrt(eps[t.param]) * t.evaluate(eps))
        return ops

    def apply(self, rho: np.ndarray, eps) -> np.ndarray:
        """Output state of the channel at noise vector eps."""
        eps = _validate_eps(eps, self.num_params)
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"state has shape {rho.shape}, channel dimension {self.dim}")
        out = np.zeros_like(rho)
        for t in self.identity_terms:
            b = t.evaluate(eps)
            out = out + b @ rho @ dagger(b)
        for t in self.jump_terms:
            c = t.evaluate(eps)
            out = out + eps[t.param] * (c @ rho @ dagger(c))
        tr = np.trace(out)
        if abs(tr - np.trace(rho)) > TRACE_TOL:
            raise TPCPViolation(f"output trace deviates by {abs(tr - np.trace(rho)):g}; eps outside validity region")
        return out

    def tpcp_residual(self, eps) -> float:
        """Frobenius deviation of the Kraus completeness sum from the identity."""
        eps = _validate_eps(eps, self.num_params)
        acc = np.zeros((self.dim, self.dim), dtype=complex)
        for t in self.identity_terms:
            b = t.evaluate(eps)
            acc = acc + dagger(b) @ b
        for t in self.jump_terms:
            c = t.evaluate(eps)
            acc = acc + eps[t.param] * (dagger(c) @ c)
        return frobenius(acc - np.eye(self.dim))

    def identity_limit_residual(self) -> float:
        """max ||channel_0[rho] - rho|| over basis projectors and random pure probes."""
        zero = np.zeros(self.num_params)
        probes = [np.outer(e, e.conj()) for e in np.eye(self.dim, dtype=complex)]
        rng = np.random.Generator(np.random.Philox(key=[916023, self.dim]))
        for _ in range(2 * self.dim):
            v = random_pure_state(self.dim, rng)
            probes.append(np.outer(v, v.conj()))
        worst = 0.0
        for rho in probes:
            out = np.zeros_like(rho)
            for t in self.identity_terms:
                b = t.evaluate(zero)
                out = out + b @ rho @ dagger(b)
            worst = max(worst, frobenius(out - rho))
        return worst

    # -- derivatives ---------------------------------------------------------

    def _hamiltonian(self, mu: int) -> np.ndarray:
        for t in self.identity_terms:
            if len(t.linear) <= mu:
                raise InconsistentKrausData("identity terms carry no linear coefficients")
        x = np.zeros((self.dim, self.dim), dtype=complex)
        for t in self.identity_terms:
            x = x + np.conj(t.weight) * t.linear[mu]
        x = x - 0.5 * self.dissipator_sum(mu)
        h = -1j * x
        res = hermiticity_residual(h)
        if res > 1e-8:
            raise InconsistentKrausData(
                f"effective Hamiltonian for parameter {mu + 1} has Hermiticity residual {res:g}"
            )
        return (h + dagger(h)) / 2

    def hamiltonian_generator(self, mu: int) -> np.ndarray:
        """Hermitian generator of the unitary part of the first-order motion."""
        if self._hamiltonians is not None:
            return self._hamiltonians[mu]
        return self._hamiltonian(mu)

    def derivative_at_zero(self, mu: int, rho: np.ndarray) -> np.ndarray:
        """First derivative of the output state in eps_mu at eps = 0.

        Lindblad form: dissipation by the parameter's jump operators plus
        commutator motion under the effective Hamiltonian. The result is
        Hermitian and traceless.
        """
        rho = np.asarray(rho, dtype=complex)
        out = np.zeros_like(rho)
        for m in self.jumps_for(mu):
            md = dagger(m)
            out = out + m @ rho @ md - 0.5 * (md @ m @ rho + rho @ md @ m)
        h = self.hamiltonian_generator(mu)
        out = out - 1j * (h @ rho - rho @ h)
        return out

    def finite_difference_derivative(self, rho: np.ndarray, mu: int, eps0, h: float) -> np.ndarray:
        """Second-order finite difference of eps -> channel[rho] along parameter mu.

        Uses a one-sided stencil at the eps_mu = 0 boundary (the noise
        parameters cannot go negative) and a central stencil inside.
        """
        eps0 = _validate_eps(eps0, self.num_params)
        if h <= 0:
            raise StepTooLarge("step must be positive")
        e = np.zeros_like(eps0)
        e[mu] = 1.0
        try:
            if eps0[mu] < h:
                probes = [eps0, eps0 + h * e, eps0 + 2 * h * e]
                for p in probes:
                    if self.tpcp_residual(p) > TRACE_TOL:
                        raise StepTooLarge("probe point violates trace preservation")
                f0 = self.apply(rho, probes[0])
                f1 = self.apply(rho, probes[1])
                f2 = self.apply(rho, probes[2])
                return (4 * f1 - 3 * f0 - f2) / (2 * h)
            probes = [eps0 - h * e, eps0 + h * e]
            for p in probes:
                if self.tpcp_residual(p) > TRACE_TOL:
                    raise StepTooLarge("probe point violates trace preservation")
            return (self.apply(rho, probes[1]) - self.apply(rho, probes[0])) / (2 * h)
        except TPCPViolation as exc:
            raise StepTooLarge(str(exc)) from exc

    # -- extension ------------------------------------------------------------

    def ancilla_extend(self) -> "LowNoiseChannel":
        """Extend to system + same-size ancilla, acting trivially on the ancilla."""
        eye = np.eye(self.dim, dtype=complex)

        def lift(x: np.ndarray) -> np.ndarray:
            return np.kron(x, eye)

        def lift_fn(f):
            if f is None:
                return None
            return lambda eps: np.kron(f(eps), eye)

        id_terms = [
            IdentityKrausTerm(
                weight=t.weight,
                linear=tuple(lift(n) for n in t.linear),
                higher=lift_fn(t.higher),
            )
            for t in self.identity_terms
        ]
        jump_terms = [
            JumpKrausTerm(param=t.param, base=lift(t.base), higher=lift_fn(t.higher))
            for t in self.jump_terms
        ]
        return LowNoiseChannel(
            dim=self.dim**2,
            num_params=self.num_params,
            identity_terms=id_terms,
            jump_terms=jump_terms,
            builder=self.builder,
        )


# ---------------------------------------------------------------------------
# builders


def _sqrtm_psd(a: np.ndarray) -> np.ndarray:
    a = (a + dagger(a)) / 2
    w, v = np.linalg.eigh(a)
    if w[0] < -POSITIVITY_TOL:
        raise TPCPViolation(f"completion argument has negative eigenvalue {w[0]:g}; eps outside validity region")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dagger(v)


def _expm_antiherm(h: np.ndarray) -> np.ndarray:
    """exp(-i h) for Hermitian h."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w)) @ dagger(v)


def sqrt_completion_channel(
    jump_operators: Sequence[Sequence[np.ndarray]],
    generators: Sequence[np.ndarray] | None = None,
    validate: bool = True,
) -> LowNoiseChannel:
    """Build an exactly trace-preserving channel from jump operators alone.

    jump_operators[mu] lists the jump operators of parameter mu+1. The single
    identity-family operator is exp(-i sum eps_mu G_mu) times the principal
    square root of (1 - sum_mu eps_mu sum_a M^dag M), which cancels the jump
    contribution in the completeness sum exactly for eps inside the
    positivity region.
    """
    num_params = len(jump_operators)
    if num_params == 0 or any(len(ms) == 0 for ms in jump_operators):
        raise ConfigInvalid("need at least one jump operator per parameter")
    dim = np.asarray(jump_operators[0][0]).shape[0]
    jumps = []
    for mu, ms in enumerate(jump_operators):
        for m in ms:
            m = np.asarray(m, dtype=complex)
            if m.shape != (dim, dim):
                raise DimensionMismatch("jump operators must share one square shape")
            jumps.append(JumpKrausTerm(param=mu, base=m))
    ssum = []
    for mu in range(num_params):
        acc = np.zeros((dim, dim), dtype=complex)
        for t in jumps:
            if t.param == mu:
                acc = acc + dagger(t.base) @ t.base
        ssum.append(acc)
    gens = None
    if generators is not None:
        if len(generators) != num_params:
            raise ConfigInvalid("need one Hermitian generator per parameter")
        gens = [require_hermitian(np.asarray(g, dtype=complex), 1e-10) for g in generators]

    linear = []
    for mu in range(num_params):
        n_mu = 0.5 * ssum[mu]
        if gens is not None:
            n_mu = n_mu + 1j * gens[mu]
        linear.append(n_mu)

    def higher(eps: np.ndarray) -> np.ndarray:
        arg = np.eye(dim, dtype=complex)
        for mu in range(num_params):
            arg = arg - eps[mu] * ssum[mu]
        b = _sqrtm_psd(arg)
        if gens is not None:
            htot = np.zeros((dim, dim), dtype=complex)
            for mu in range(num_params):
                htot = htot + eps[mu] * gens[mu]
            b = _expm_antiherm(htot) @ b
        trunc = np.eye(dim, dtype=complex)
        for mu in range(num_params):
            trunc = trunc - eps[mu] * linear[mu]
        return b - trunc

    term = IdentityKrausTerm(weight=1.0 + 0j, linear=tuple(linear), higher=higher)
    return LowNoiseChannel(
        dim=dim,
        num_params=num_params,
        identity_terms=[term],
        jump_terms=jumps,
        builder="sqrt-completion",
        validate=validate,
    )


def explicit_channel(
    dim: int,
    num_params: int,
    identity_terms: Sequence[IdentityKrausTerm],
    jump_terms: Sequence[JumpKrausTerm],
    validate: bool = True,
) -> LowNoiseChannel:
    """Build a channel from explicitly supplied Kraus data."""
    return LowNoiseChannel(
        dim=dim,
        num_params=num_params,
        identity_terms=identity_terms,
        jump_terms=jump_terms,
        builder="explicit",
        validate=validate,
    )


# ---------------------------------------------------------------------------
# config serialization (complex entries as [re, im] pairs)


def matrix_to_json(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def matrix_from_json(data) -> np.ndarray:
    return np.array([[complex(c[0], c[1]) for c in row] for row in data], dtype=complex)


def channel_to_config(ch: LowNoiseChannel) -> dict:
    """JSON-able description of a channel.

    Explicit channels are serialized through their stored coefficients; any
    ``higher`` closures are not representable and are dropped, so a
    round-tripped explicit channel is trace preserving to second order only.
    Square-root-completion channels round-trip exactly.
    """
    cfg: dict = {
        "dim": ch.dim,
        "num_params": ch.num_params,
        "builder": ch.builder,
        "jump_operators": [
            {"param": t.param + 1, "matrix": matrix_to_json(t.base)} for t in ch.jump_terms
        ],
    }
    if ch.builder == "sqrt-completion":
        gens = []
        for mu in range(ch.num_params):
            n_mu = ch.identity_terms[0].linear[mu]
            g = (n_mu - 0.5 * ch.dissipator_sum(mu)) / 1j
            gens.append(g)
        if any(frobenius(g) > 1e-14 for g in gens):
            cfg["generators"] = [matrix_to_json(g) for g in gens]
    else:
        cfg["identity_terms"] = [
            {
                "weight": [float(t.weight.real), float(t.weight.imag)],
                "linear": [matrix_to_json(n) for n in t.linear],
            }
            for t in ch.identity_terms
        ]
    return cfg


def channel_from_config(cfg: dict) -> LowNoiseChannel:
    try:
        dim = int(cfg["dim"])
        num_params = int(cfg["num_params"])
        builder = cfg.get("builder", "explicit")
        raw_jumps = cfg["jump_operators"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"malformed channel config: {exc}") from exc
    per_param: list[list[np.ndarray]] = [[] for _ in range(num_params)]
    for item in raw_jumps:
        mu = int(item["param"]) - 1
        if not 0 <= mu < num_params:
            raise ConfigInvalid(f"jump operator has parameter index {item['param']}")
        per_param[mu].append(matrix_from_json(item["matrix"]))
    if builder == "sqrt-completion":
        gens = None
        if cfg.get("generators"):
            gens = [matrix_from_json(g) for g in cfg["generators"]]
        return sqrt_completion_channel(per_param, gens)
    if builder != "explicit":
        raise ConfigInvalid(f"unknown builder {builder!r}")
    id_terms = []
    for item in cfg.get("identity_terms", []):
        w = complex(item["weight"][0], item["weight"][1])
        linear = tuple(matrix_from_json(n) for n in item["linear"])
        id_terms.append(IdentityKrausTerm(weight=w, linear=linear))
    jump_terms = [
        JumpKrausTerm(param=mu, base=m) for mu in range(num_params) for m in per_param[mu]
    ]
    return explicit_channel(dim, num_params, id_terms, jump_terms)
