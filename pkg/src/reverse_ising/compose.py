"""Assemble a full-circuit Hamiltonian ``H = S + lambda R``.

``S`` comes from the augmented-constraint certificate and ``R`` is the sum
of per-component neutralizing Hamiltonians, each lifted into the global
spin layout (inputs, outputs, auxiliaries).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .feasibility import is_feasible
from .functions import AuxiliaryFunction, ThresholdFunction, as_auxiliary
from .lp import LPOptions
from .oracle import MAX_VERIFY_SPINS, VerificationResult, verify_hamiltonian
from .pseudobool import PLUS_MINUS, QuadraticHamiltonian
from .spincore import Circuit
from .thresholds import (
    MAX_NEUTRAL_SPINS,
    check_strong_neutralizable,
    check_weak_neutralizable,
)

logger = logging.getLogger(__name__)

ALPHA_MIN = 1e-9


class CompositionError(RuntimeError):
    pass


@dataclass
class LocalCertificate:
    """A neutralizing Hamiltonian on a few spins plus where they live globally.

    ``spins[i]`` is the global index of local spin ``i``; the last local spin
    is the component's own auxiliary bit.
    """

    R: QuadraticHamiltonian
    spins: tuple
    kind: str
    gap: float

    def lifted(self, n: int) -> QuadraticHamiltonian:
        return lift(self.R, self.spins, n)

    def to_dict(self) -> dict:
        return {"R": self.R.to_dict(), "spins": list(self.spins), "kind": self.kind, "gap": self.gap}

    @classmethod
    def from_dict(cls, d: dict) -> "LocalCertificate":
        return cls(QuadraticHamiltonian.from_dict(d["R"]), tuple(d["spins"]), d["kind"], d["gap"])


def lift(R: QuadraticHamiltonian, spins, n: int) -> QuadraticHamiltonian:
    """Re-index ``R`` so that local spin ``i`` becomes global spin ``spins[i]``."""
    spins = np.asarray(spins, dtype=np.int64)
    if spins.shape[0] != R.n:
        raise ValueError("index map does not match the Hamiltonian size")
    if len(set(spins.tolist())) != spins.shape[0] or spins.max(initial=-1) >= n:
        raise ValueError("overlapping or out-of-range spin indices")
    if R.convention is not PLUS_MINUS:
        R = R.converted(PLUS_MINUS)
    h = np.zeros(n)
    h[spins] = R.h
    J = np.zeros((n, n))
    a, b = np.meshgrid(spins, spins, indexing="ij")
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    np.add.at(J, (lo, hi), R.J)
    return QuadraticHamiltonian(h, J, R.constant, PLUS_MINUS)


def support(t: ThresholdFunction, tol: float = 0.0) -> np.ndarray:
    return np.flatnonzero(np.abs(t.weights) > tol)


class ComponentCertifier:
    """Finds and caches neutralizability certificates for components of ``g``.

    Components that ignore every earlier auxiliary bit are tried for weak
    neutralizability against the circuit; the rest need a strong certificate,
    which only involves the variables with nonzero weight.
    """

    def __init__(self, c: Circuit):
        self.c = c
        self._cache: dict = {}

    def certify(self, t: ThresholdFunction, k: int) -> LocalCertificate | None:
        base = self.c.n_spins
        own = base + k
        w = t.weights
        reads_aux = w.shape[0] > base and np.any(w[base:] != 0)
        key = (own, w.tobytes(), t.bias)
        if key in self._cache:
            return self._cache[key]
        cert = None
        if not reads_aux and base + 1 <= MAX_NEUTRAL_SPINS:
            tb = ThresholdFunction(w[:base], t.bias)
            nc = check_weak_neutralizable(tb, self.c)
            if nc is not None:
                cert = LocalCertificate(nc.R, (*range(base), own), "weak", nc.gap)
        if cert is None:
            sup = support(t)
            if sup.shape[0] + 1 <= MAX_NEUTRAL_SPINS:
                nc = check_strong_neutralizable(ThresholdFunction(w[sup], t.bias))
                if nc is not None:
                    cert = LocalCertificate(nc.R, (*sup.tolist(), own), "strong", nc.gap)
        self._cache[key] = cert
        return cert

    def certify_all(self, g: AuxiliaryFunction) -> list[LocalCertificate]:
        certs = []
        for k, t in enumerate(g.components):
            cert = self.certify(t, k)
            if cert is None:
                raise CompositionError(f"component {k} is not neutralizable")
            certs.append(cert)
        return certs


def glue_aux(g1: AuxiliaryFunction, g2: AuxiliaryFunction) -> AuxiliaryFunction:
    return AuxiliaryFunction.glue(g1, g2)


def glue_certificates(certs, n: int) -> QuadraticHamiltonian:
    """``R = sum_k R_k`` after lifting each into ``n`` spins."""
    R = QuadraticHamiltonian.zeros(n)
    for cert in certs:
        R = R + (cert.lifted(n) if isinstance(cert, LocalCertificate) else cert.padded(n))
    return R


def _graph_states(c: Circuit, g: AuxiliaryFunction):
    """``g`` on every base word, and the correct full state for every input."""
    N, M, A = c.n_in, c.n_out, len(g)
    base = np.arange(1 << (N + M), dtype=np.int64)
    gw = g.evaluate_words(base) if A else np.zeros_like(base)
    correct = c.graph_words()
    correct_full = correct | (gw[correct] << (N + M))
    return gw, correct_full


@dataclass
class CertificateAnalysis:
    alpha: float
    beta: float
    weak_margin: float

    @property
    def valid(self) -> bool:
        return self.alpha > ALPHA_MIN and self.weak_margin >= -1e-7


def analyze(c: Circuit, g: AuxiliaryFunction, S: QuadraticHamiltonian, R: QuadraticHamiltonian,
            block: int = 1 << 18) -> CertificateAnalysis:
    """``alpha``, ``beta`` and the weak-condition margin by enumeration.

    ``alpha = min R(s, w, e) - R(s, f(s), g_f)`` over ``e != g(s, w)``,
    ``beta = max S(s, f(s), g_f) - S(s, w, e)`` over the same states, and the
    weak margin is ``min R(s, w, g(s, w)) - R(s, f(s), g_f)``.
    """
    N, M, A = c.n_in, c.n_out, len(g)
    n = N + M + A
    if n > MAX_VERIFY_SPINS:
        raise ValueError(f"enumeration limited to {MAX_VERIFY_SPINS} spins")
    gw, correct_full = _graph_states(c, g)
    R_ref = R.energies(correct_full)
    S_ref = S.energies(correct_full)
    alpha, beta, weak = np.inf, -np.inf, np.inf
    for start in range(0, 1 << n, block):
        words = np.arange(start, min(start + block, 1 << n), dtype=np.int64)
        sigma = words & ((1 << N) - 1)
        bw = words & ((1 << (N + M)) - 1)
        eta = words >> (N + M)
        on_graph = eta == gw[bw]
        dR = R.energies(words) - R_ref[sigma]
        dS = S_ref[sigma] - S.energies(words)
        off = ~on_graph
        if off.any():
            alpha = min(alpha, float(dR[off].min()))
            beta = max(beta, float(dS[off].max()))
        if on_graph.any():
            weak = min(weak, float(dR[on_graph].min()))
    if A == 0:
        alpha, beta = np.inf, 0.0
    return CertificateAnalysis(alpha, beta, weak)


def choose_lambda(S: QuadraticHamiltonian, R: QuadraticHamiltonian, c: Circuit, g: AuxiliaryFunction) -> float:
    """``lambda = max(beta, 0) / alpha + 1``."""
    if not len(g):
        return 0.0
    an = analyze(c, g, S, R)
    if an.alpha <= ALPHA_MIN:
        raise CompositionError(f"alpha = {an.alpha:.3g}: the neutralizing certificate is invalid")
    return max(an.beta, 0.0) / an.alpha + 1.0


def compose_hamiltonian(S: QuadraticHamiltonian, R: QuadraticHamiltonian, lam: float) -> QuadraticHamiltonian:
    if S.n != R.n:
        raise ValueError("S and R act on different spin counts")
    S = S.converted(PLUS_MINUS)
    R = R.converted(PLUS_MINUS)
    return S + R.scaled(lam)


@dataclass
class SolutionRecord:
    circuit: Circuit
    g: AuxiliaryFunction
    S: QuadraticHamiltonian
    R: QuadraticHamiltonian
    lam: float
    H: QuadraticHamiltonian
    verification: VerificationResult
    certificates: list = field(default_factory=list)
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_aux(self) -> int:
        return len(self.g)

    def to_dict(self) -> dict:
        c = self.circuit
        return {
            "version": __version__,
            "circuit": {"name": c.name, "n_in": c.n_in, "n_out": c.n_out, "table": c.table.tolist()},
            "n_aux": self.n_aux,
            "aux": self.g.to_dict(),
            "certificates": [ct.to_dict() for ct in self.certificates],
            "S": self.S.to_dict(),
            "R": self.R.to_dict(),
            "lambda": self.lam,
            "H": self.H.to_dict(),
            "verified": self.verification.passed,
            "gap": self.verification.gap,
            "seed": self.seed,
            "meta": self.meta,
        }

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def load_solution(path) -> dict:
    """Parsed solution file: ``circuit``, ``g`` and ``H`` objects plus the raw dict."""
    with open(path) as fh:
        raw = json.load(fh)
    c = raw["circuit"]
    circuit = Circuit(c["n_in"], c["n_out"], c["table"], c.get("name", ""))
    return {
        "raw": raw,
        "circuit": circuit,
        "g": AuxiliaryFunction.from_dict(raw["aux"]),
        "H": QuadraticHamiltonian.from_dict(raw["H"]),
        "n_aux": int(raw["n_aux"]),
    }


def compose_solution(c: Circuit, g=None, S: QuadraticHamiltonian | None = None,
                     certifier: ComponentCertifier | None = None, lp_opts: LPOptions | None = None,
                     seed: int | None = None, lam_scale: float = 1.0) -> SolutionRecord:
    """Certify ``g``, build ``S`` (if not given), glue ``R``, pick lambda and verify.

    Raises :class:`CompositionError` when any step fails; the returned record
    has always passed exhaustive verification.
    """
    g = as_auxiliary(c.n_spins, g)
    n = c.n_spins + len(g)
    if S is None:
        feas = is_feasible(c, g, lp_opts)
        if not feas.feasible:
            raise CompositionError(f"augmented constraints infeasible (rho = {feas.objective:.6g})")
        S = feas.hamiltonian()
    certifier = certifier or ComponentCertifier(c)
    certs = certifier.certify_all(g)
    R = glue_certificates(certs, n)
    lam = choose_lambda(S, R, c, g) * lam_scale
    H = compose_hamiltonian(S, R, lam)
    result = verify_hamiltonian(c, H, len(g))
    if not result.passed:
        raise CompositionError(f"composed Hamiltonian failed verification at {result.witness}")
    return SolutionRecord(c, g, S, R, lam, H, result, certs, seed)
