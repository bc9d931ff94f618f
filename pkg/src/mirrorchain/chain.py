"""XY spin chains: Hamiltonians, propagators, and the mirror condition.

The chain Hamiltonian is

    H = (1/2) sum_i J_i (X_i X_{i+1} + Y_i Y_{i+1})
      + (1/2) sum_i h_i (Z_i + 1),

which conserves the number of '1' labels.  Its one-excitation block, in the
basis |i> = '0...010...0' with the 1 at site i, is the real tridiagonal
matrix with diagonal h and off-diagonal J.  For the engineered couplings
J_i = sqrt(i (N - i)) and h = 0 that block is twice the angular-momentum
operator Jx of a spin (N-1)/2, so its spectrum is the integer ladder
-(N-1), -(N-3), ..., N-1, and evolution for time tau = pi/2 swaps site i
with site N+1-i in every excitation sector at once.

The mirror condition is checked spectrally: with R the site-reversal
permutation, exp(-i H1 tau) = e^{i phi0} R exactly when every
one-excitation eigenpair satisfies eps_nu tau = [2 n(nu) +- nu] pi - phi0
for integers n(nu), where the +- alternation records the reversal parity
of the eigenvector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .pauli import MAX_DENSE_SITES, PauliString, pauli_matrix
from .states import QuantumState

__all__ = [
    "ChainSpec",
    "engineered_couplings",
    "build_hamiltonian",
    "single_excitation_matrix",
    "propagator",
    "chain_propagator",
    "evolve",
    "SpectralReport",
    "check_mirror_condition",
    "MIRROR_TIME",
]

#: Evolution time at which the engineered chain realizes site reversal.
MIRROR_TIME = math.pi / 2.0

HERMITICITY_TOL = 1e-10
PHASE_TOL = 1e-9
SYMMETRY_TOL = 1e-9
DEGENERACY_TOL = 1e-8
MAX_WITNESS = 64


def engineered_couplings(n_sites: int) -> tuple[float, ...]:
    """J_i = sqrt(i (N - i)) for i = 1 .. N-1."""
    if n_sites < 2:
        raise ValueError("engineered couplings need at least 2 sites")
    return tuple(math.sqrt(i * (n_sites - i)) for i in range(1, n_sites))


@dataclass(frozen=True)
class ChainSpec:
    """An XY chain: nearest-neighbor couplings and on-site fields."""

    couplings: tuple[float, ...]
    fields: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "couplings", tuple(float(j) for j in self.couplings))
        object.__setattr__(self, "fields", tuple(float(h) for h in self.fields))
        if len(self.fields) != len(self.couplings) + 1:
            raise ValueError(
                f"{len(self.couplings)} couplings need {len(self.couplings) + 1} fields, "
                f"got {len(self.fields)}"
            )
        if not all(math.isfinite(v) for v in self.couplings + self.fields):
            raise ValueError("couplings and fields must be finite")

    @property
    def n_sites(self) -> int:
        return len(self.fields)

    @classmethod
    def engineered(cls, n_sites: int) -> "ChainSpec":
        return cls(engineered_couplings(n_sites), (0.0,) * n_sites)

    @property
    def is_engineered(self) -> bool:
        if any(abs(h) > SYMMETRY_TOL for h in self.fields):
            return False
        ref = engineered_couplings(self.n_sites)
        return all(abs(a - b) <= SYMMETRY_TOL for a, b in zip(self.couplings, ref))

    @property
    def mirror_symmetric(self) -> bool:
        """Palindromic couplings and fields, within tolerance."""
        return all(
            abs(a - b) <= SYMMETRY_TOL
            for a, b in zip(self.couplings, self.couplings[::-1])
        ) and all(
            abs(a - b) <= SYMMETRY_TOL for a, b in zip(self.fields, self.fields[::-1])
        )

    def to_json(self) -> dict:
        return {
            "n": self.n_sites,
            "couplings": list(self.couplings),
            "fields": list(self.fields),
            "engineered": self.is_engineered,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ChainSpec":
        """Parse the chain record; engineered records may omit the arrays."""
        try:
            n = int(data["n"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed chain record: {exc}") from exc
        engineered = bool(data.get("engineered", False))
        if engineered and "couplings" not in data and "fields" not in data:
            return cls.engineered(n)
        try:
            couplings = tuple(data["couplings"])
            fields = tuple(data["fields"])
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed chain record: {exc}") from exc
        spec = cls(couplings, fields)
        if spec.n_sites != n:
            raise ValueError(f"record claims {n} sites but lists {spec.n_sites} fields")
        if engineered and not spec.is_engineered:
            raise ValueError("record marked engineered but lists other couplings")
        return spec

    @classmethod
    def load(cls, path: str) -> "ChainSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _two_site_word(n: int, i: int, letter: str) -> PauliString:
    letters = ["I"] * n
    letters[i - 1] = letter
    letters[i] = letter
    return PauliString("".join(letters))


def build_hamiltonian(spec: ChainSpec) -> np.ndarray:
    """Dense 2^N x 2^N chain Hamiltonian (real, symmetric)."""
    n = spec.n_sites
    if n > MAX_DENSE_SITES:
        raise ValueError(f"{n} sites exceeds the dense cap of {MAX_DENSE_SITES}")
    d = 1 << n
    H = np.zeros((d, d), dtype=complex)
    for i, J in enumerate(spec.couplings, start=1):
        if J == 0.0:
            continue
        H += (0.5 * J) * (
            pauli_matrix(_two_site_word(n, i, "X"))
            + pauli_matrix(_two_site_word(n, i, "Y"))
        )
    for i, h in enumerate(spec.fields, start=1):
        if h == 0.0:
            continue
        letters = ["I"] * n
        letters[i - 1] = "Z"
        H += (0.5 * h) * (pauli_matrix(PauliString("".join(letters))) + np.eye(d))
    return H.real


def single_excitation_matrix(spec: ChainSpec) -> np.ndarray:
    """Tridiagonal one-excitation block: diag = fields, offdiag = couplings."""
    H1 = np.diag(np.array(spec.fields, dtype=float))
    off = np.array(spec.couplings, dtype=float)
    return H1 + np.diag(off, 1) + np.diag(off, -1)


def propagator(H: np.ndarray, t: float) -> np.ndarray:
    """exp(-i H t) of a Hermitian matrix, via exact diagonalization."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if np.abs(H - H.conj().T).max() > HERMITICITY_TOL:
        raise ValueError("matrix is not Hermitian")
    evals, evecs = np.linalg.eigh(H)
    phases = np.exp(-1j * float(t) * evals)
    return (evecs * phases) @ evecs.conj().T


def chain_propagator(spec: ChainSpec, tau: float) -> np.ndarray:
    """Full-register propagator exp(-i H tau) of the chain."""
    return propagator(build_hamiltonian(spec), tau)


def evolve(state: QuantumState, U: np.ndarray) -> QuantumState:
    """Apply a unitary: kets map to U|psi>, matrices to U rho U^dag."""
    if U.shape[0] != state.data.shape[0]:
        raise ValueError(
            f"unitary dimension {U.shape[0]} does not match state "
            f"dimension {state.data.shape[0]}"
        )
    return state.evolved(U)


@dataclass(frozen=True)
class SpectralReport:
    """Outcome of the one-excitation mirror test at a given time."""

    mirror_time: float
    eigenvalues: tuple[float, ...]
    parities: tuple[int, ...]
    satisfied: bool
    global_phase: float | None
    witnesses: tuple[int, ...] | None
    degenerate: bool

    def to_json(self) -> dict:
        return {
            "mirror_time": self.mirror_time,
            "eigenvalues": list(self.eigenvalues),
            "parities": list(self.parities),
            "satisfied": self.satisfied,
            "global_phase": self.global_phase,
            "witnesses": None if self.witnesses is None else list(self.witnesses),
            "degenerate": self.degenerate,
        }


def _phase_distance(a: float) -> float:
    """Distance of the angle `a` from 0 modulo 2 pi."""
    return abs(math.remainder(a, 2.0 * math.pi))


def check_mirror_condition(spec: ChainSpec, tau: float) -> SpectralReport:
    """Decide whether exp(-i H1 tau) equals a phase times site reversal.

    Requires a mirror-symmetric spec with strictly positive couplings (the
    regime where one-excitation eigenvectors provably alternate in
    reversal parity).  The measured parities s_nu and eigenvalues eps_nu
    satisfy the mirror condition exactly when

        exp(-i eps_nu tau) = exp(i phi0) s_nu     for every nu,

    and the reported integer witnesses n(nu) locate each phase on the
    2 pi lattice.  phi0 carries the only phase freedom and is fixed by the
    bottom level, then reduced to (-pi, pi].
    """
    if not spec.mirror_symmetric:
        raise ValueError("mirror condition requires a mirror-symmetric chain")
    if any(j <= 0.0 for j in spec.couplings):
        raise ValueError("mirror condition requires strictly positive couplings")
    H1 = single_excitation_matrix(spec)
    evals, evecs = np.linalg.eigh(H1)
    degenerate = bool(len(evals) > 1 and np.diff(evals).min() < DEGENERACY_TOL)
    if degenerate:
        # Positive palindromic couplings forbid degeneracy; this path only
        # fires on near-degenerate numerics and checks the operator directly.
        return _mirror_check_direct(tau, evals, evecs)

    parities = []
    for k in range(len(evals)):
        v = evecs[:, k]
        s = float(np.dot(v[::-1], v))
        if abs(abs(s) - 1.0) > 1e-6:
            raise AssertionError("eigenvector of a symmetric chain lost its parity")
        parities.append(1 if s > 0 else -1)

    # The bottom level fixes the only phase freedom: exp(i phi0) must equal
    # exp(-i eps_0 tau) / s_0, i.e. phi0 = -eps_0 tau plus pi when the
    # bottom eigenvector is reversal-odd.
    phi0 = -float(evals[0]) * tau
    if parities[0] < 0:
        phi0 += math.pi
    phi0 = math.remainder(phi0, 2.0 * math.pi)

    witnesses = []
    ok = True
    for eps, s in zip(evals, parities):
        target = float(eps) * tau + phi0 - (0.0 if s > 0 else math.pi)
        n = round(target / (2.0 * math.pi))
        if abs(n) > MAX_WITNESS or _phase_distance(target) > PHASE_TOL:
            ok = False
            break
        witnesses.append(int(n))

    return SpectralReport(
        mirror_time=float(tau),
        eigenvalues=tuple(float(e) for e in evals),
        parities=tuple(parities),
        satisfied=ok,
        global_phase=float(phi0) if ok else None,
        witnesses=tuple(witnesses) if ok else None,
        degenerate=False,
    )


def _mirror_check_direct(
    tau: float, evals: np.ndarray, evecs: np.ndarray
) -> SpectralReport:
    """Degenerate fallback: compare R @ U1 against a phase times identity."""
    U1 = (evecs * np.exp(-1j * float(tau) * evals)) @ evecs.conj().T
    M = U1[::-1, :]  # R @ U1 with R the index-reversal permutation
    diag = np.diag(M)
    phase = diag[np.argmax(np.abs(diag))]
    ok = (
        abs(abs(phase) - 1.0) < PHASE_TOL
        and np.abs(M - phase * np.eye(len(evals))).max() < PHASE_TOL
    )
    phi0 = math.remainder(float(np.angle(phase)), 2.0 * math.pi) if ok else None
    return SpectralReport(
        mirror_time=float(tau),
        eigenvalues=tuple(float(e) for e in evals),
        parities=(),
        satisfied=bool(ok),
        global_phase=phi0,
        witnesses=None,
        degenerate=True,
    )
