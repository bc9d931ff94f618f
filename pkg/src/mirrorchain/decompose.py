"""Product synthesis of unitaries over a descending tower of Pauli groups.

Given a unitary whose Pauli expansion lies inside a word group G0 and a
strictly descending chain G0 > G1 > ... > {identity}, the synthesizer
works level by level: at each level it greedily picks a coset word D and
an angle theta so that U <- U exp(+i theta D) concentrates as much weight
as possible inside the child group, repeating until the child holds all
of it, then descends.  When every level succeeds the residual is a pure
phase c, which proves

    U = c * exp(-i theta_m D_m) * ... * exp(-i theta_1 D_1),

returned with factors in operator order (the first listed factor is the
leftmost operator, hence the last applied to a state).

The per-factor objective is exactly sinusoidal.  With A the child-group
weight of U, B the weight of the coset D*child, and W the cross weight,

    weight(theta) = A cos^2(theta) + B sin^2(theta) + W sin(2 theta)
                  = (A+B)/2 + R cos(2 theta - alpha),

where R = hypot((A-B)/2, W) and alpha = atan2(W, (A-B)/2), so the best
angle is alpha/2 in closed form; no numerical search is involved.  Word
selection maximizes |W|; when every cross term vanishes, candidates are
ranked by the weight they can reach instead (the objective is a sinusoid,
so evaluating its exact stationary point per candidate dominates any
angle grid).  That fallback handles residuals that are already a phase
times a single coset word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import (
    PauliGroup,
    PauliString,
    SubgroupChain,
    _pack,
    pauli_matrix,
    pauli_mul,
    support_group,
    word_trace,
)

__all__ = [
    "DecompositionError",
    "StallError",
    "ProductDecomposition",
    "PeelStep",
    "PeelTrace",
    "AngleChoice",
    "expand",
    "group_norm",
    "w_value",
    "optimal_angle",
    "peel_level",
    "decompose",
    "reconstruct",
    "closed_form",
    "gate_fidelity",
]

#: Maximum tolerated weight leakage (1 - child-group norm) after a level.
PEEL_TOL = 1e-9
#: Below this, cross terms / gains count as exactly zero.
STALL_TOL = 1e-12
#: Required overlap between the reassembled product and the input.
RECONSTRUCTION_TOL = 1e-9
#: Factors with |angle| at or below this are dropped from the output.
ZERO_ANGLE_TOL = 1e-12

UNITARITY_TOL = 1e-10


class DecompositionError(RuntimeError):
    """Peel could not complete; `trace` holds the steps taken so far."""

    def __init__(self, message: str, trace: "PeelTrace | None" = None) -> None:
        super().__init__(message)
        self.trace = trace


class StallError(DecompositionError):
    """The weight objective is flat in the requested direction (W = delta = 0)."""


@dataclass(frozen=True)
class ProductDecomposition:
    """A unitary written as global_phase * prod_k exp(-i angle_k word_k).

    Factors are stored in operator order: factors[0] is the leftmost
    exponential in the product, i.e. the last one applied to a ket.
    """

    n_sites: int
    factors: tuple[tuple[PauliString, float], ...]
    global_phase: complex

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "factors",
            tuple((w, float(a)) for w, a in self.factors),
        )
        for word, _ in self.factors:
            if word.n_sites != self.n_sites:
                raise ValueError(f"factor word {word} does not have {self.n_sites} sites")
            if word.is_identity:
                raise ValueError("factor words must be non-identity")
        phase = complex(self.global_phase)
        if abs(abs(phase) - 1.0) > 1e-9:
            raise ValueError("global phase must have unit modulus")
        object.__setattr__(self, "global_phase", phase / abs(phase))

    @property
    def words(self) -> tuple[PauliString, ...]:
        return tuple(w for w, _ in self.factors)

    def to_json(self) -> dict:
        return {
            "n": self.n_sites,
            "global_phase": [self.global_phase.real, self.global_phase.imag],
            "factors": [
                {"word": w.letters, "angle": a} for w, a in self.factors
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ProductDecomposition":
        try:
            n = int(data["n"])
            re, im = data["global_phase"]
            factors = tuple(
                (PauliString(f["word"]), float(f["angle"])) for f in data["factors"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed decomposition record: {exc}") from exc
        return cls(n, factors, complex(re, im))


@dataclass(frozen=True)
class PeelStep:
    """One applied factor: U <- U exp(+i angle word), taken at `level`."""

    level: int
    word: PauliString
    angle: float
    w_value: float
    delta: float
    norm_before: float
    norm_after: float

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "word": self.word.letters,
            "angle": self.angle,
            "w_value": self.w_value,
            "delta": self.delta,
            "norm_before": self.norm_before,
            "norm_after": self.norm_after,
        }


@dataclass(frozen=True)
class PeelTrace:
    """The per-factor record of a peel run, successful or not."""

    steps: tuple[PeelStep, ...]

    def to_json(self) -> dict:
        return {"steps": [s.to_json() for s in self.steps]}


def _check_square(U: np.ndarray, n_sites: int) -> int:
    d = 1 << n_sites
    if U.shape != (d, d):
        raise ValueError(f"matrix shape {U.shape} does not match {n_sites} sites")
    return d


def expand(U: np.ndarray, group: PauliGroup) -> dict[PauliString, complex]:
    """Pauli coefficients c_w = Tr(w U) / 2^n for every word in the group."""
    d = _check_square(U, group.n_sites)
    return {w: word_trace(U, w) / d for w in group}


def group_norm(U: np.ndarray, group: PauliGroup) -> float:
    """Total squared coefficient weight of U inside the group."""
    return float(sum(abs(c) ** 2 for c in expand(U, group).values()))


def w_value(U: np.ndarray, D: PauliString, child: PauliGroup) -> float:
    """Cross weight W between the child group and the coset D*child.

    This is the coefficient of sin(2 theta) in the child-group weight of
    U exp(+i theta D); in particular d(weight)/d(theta) at 0 equals 2 W.
    """
    d = _check_square(U, child.n_sites)
    if D.n_sites != child.n_sites:
        raise ValueError("word and group site counts differ")
    total = 0.0
    for w in child:
        prod = pauli_mul(D, w)
        c_w = word_trace(U, w) / d
        c_m = word_trace(U, prod.word) / d
        total += (prod.phase.conjugate() * c_w * c_m.conjugate()).imag
    return total


def _weight_terms(
    coeffs: dict[PauliString, complex], D: PauliString, child: PauliGroup
) -> tuple[float, float]:
    """(B, W) for candidate word D, from precomputed parent coefficients."""
    B = 0.0
    W = 0.0
    for w in child:
        prod = pauli_mul(D, w)
        c_w = coeffs[w]
        c_m = coeffs[prod.word]
        B += abs(c_m) ** 2
        W += (prod.phase.conjugate() * c_w * c_m.conjugate()).imag
    return B, W


def _sinusoid(A: float, B: float, W: float, t: float) -> float:
    return A * math.cos(t) ** 2 + B * math.sin(t) ** 2 + W * math.sin(2.0 * t)


def _stationary_angle(A: float, B: float, W: float) -> tuple[float, float]:
    """Best angle in (-pi/2, pi/2] for A cos^2 + B sin^2 + W sin(2 theta).

    Returns (theta, value).  Both stationary branches are compared on the
    realized value; exact ties go to the smaller |theta|.
    """
    if math.hypot(0.5 * (A - B), W) < STALL_TOL:
        return 0.0, _sinusoid(A, B, W, 0.0)
    theta = 0.5 * math.atan2(W, 0.5 * (A - B))
    other = theta - math.pi / 2.0 if theta > 0.0 else theta + math.pi / 2.0
    cands = [
        (theta, _sinusoid(A, B, W, theta)),
        (other, _sinusoid(A, B, W, other)),
    ]
    cands.sort(key=lambda tv: (-tv[1], abs(tv[0])))
    return cands[0]


@dataclass(frozen=True)
class AngleChoice:
    """Closed-form angle solution for one candidate word."""

    theta: float
    w_value: float
    delta: float
    norm_before: float
    predicted_norm: float


def optimal_angle(U: np.ndarray, D: PauliString, child: PauliGroup) -> AngleChoice:
    """Angle maximizing the child-group weight of U exp(+i theta D).

    Raises :class:`StallError` when both W and delta vanish, i.e. the
    weight does not depend on the angle at all.
    """
    d = _check_square(U, child.n_sites)
    if D in child:
        raise ValueError(f"word {D} lies inside the child group")
    A = 0.0
    B = 0.0
    W = 0.0
    for w in child:
        prod = pauli_mul(D, w)
        c_w = word_trace(U, w) / d
        c_m = word_trace(U, prod.word) / d
        A += abs(c_w) ** 2
        B += abs(c_m) ** 2
        W += (prod.phase.conjugate() * c_w * c_m.conjugate()).imag
    delta = 0.5 * (A - B)
    if math.hypot(delta, W) < STALL_TOL:
        raise StallError(
            f"flat weight objective for {D}: W and delta both vanish"
        )
    theta, best = _stationary_angle(A, B, W)
    return AngleChoice(
        theta=theta,
        w_value=W,
        delta=delta,
        norm_before=A,
        predicted_norm=best,
    )


def peel_level(
    U: np.ndarray, parent: PauliGroup, child: PauliGroup, level: int = 1
) -> tuple[np.ndarray, tuple[PeelStep, ...]]:
    """Strip factors until all of U's weight sits inside the child group.

    Each pass selects the coset word with the largest |W| (ties resolved
    in canonical word order), applies the closed-form optimal exponential
    on the right, and repeats.  When every cross term vanishes while
    weight is still missing, candidates are re-ranked by the exact weight
    their best angle attains; if even that cannot improve, the peel has
    stalled and a :class:`DecompositionError` is raised carrying this
    level's partial trace.

    Returns the residual and the steps taken (empty when U already lies
    in the child's span).
    """
    if not child.is_subgroup_of(parent) or len(child) >= len(parent):
        raise ValueError("child must be a strictly smaller subgroup of parent")
    d = _check_square(U, parent.n_sites)
    candidates = [e for e in parent.sorted_elements if e not in child.elements]
    steps: list[PeelStep] = []
    max_passes = 4 * len(parent)

    for _ in range(max_passes):
        coeffs = expand(U, parent)
        A = float(sum(abs(coeffs[w]) ** 2 for w in child))
        if 1.0 - A <= PEEL_TOL:
            return U, tuple(steps)

        best_word: PauliString | None = None
        best_B = best_W = 0.0
        for D in candidates:
            B, W = _weight_terms(coeffs, D, child)
            if best_word is None or abs(W) > abs(best_W) + STALL_TOL:
                best_word, best_B, best_W = D, B, W

        if abs(best_W) <= STALL_TOL:
            # No informative cross term: rank by reachable weight instead.
            best_gain = -1.0
            for D in candidates:
                B, W = _weight_terms(coeffs, D, child)
                _, reachable = _stationary_angle(A, B, W)
                if reachable > best_gain + STALL_TOL:
                    best_word, best_B, best_W = D, B, W
                    best_gain = reachable
            if best_gain <= A + STALL_TOL:
                raise DecompositionError(
                    f"peel stalled at level {level}: no single factor improves "
                    f"the child-group weight beyond {A:.12f}",
                    PeelTrace(tuple(steps)),
                )

        theta, predicted = _stationary_angle(A, best_B, best_W)
        rot = (
            math.cos(theta) * np.eye(d)
            + 1j * math.sin(theta) * pauli_matrix(best_word)
        )
        U = U @ rot
        norm_after = float(
            sum(abs(word_trace(U, w)) ** 2 for w in child) / d**2
        )
        if norm_after < A - 1e-9 or abs(norm_after - predicted) > 1e-8:
            raise DecompositionError(
                f"level {level} weight bookkeeping diverged: before={A:.12f} "
                f"predicted={predicted:.12f} after={norm_after:.12f}",
                PeelTrace(tuple(steps)),
            )
        steps.append(
            PeelStep(
                level=level,
                word=best_word,
                angle=theta,
                w_value=best_W,
                delta=0.5 * (A - best_B),
                norm_before=A,
                norm_after=norm_after,
            )
        )

    raise DecompositionError(
        f"level {level} did not converge within {max_passes} factors",
        PeelTrace(tuple(steps)),
    )


def _heaviest_maximal_subgroup(U: np.ndarray, group: PauliGroup) -> PauliGroup:
    """The index-two subgroup retaining the largest coefficient weight of U.

    Every maximal subgroup is the kernel of a nonzero F2 functional on the
    group; with rank r there are only 2^r - 1 of them, so they are scanned
    exhaustively.  Ties keep the first functional in mask order over the
    canonical basis, making the choice deterministic.
    """
    n = group.n_sites
    elems = group.sorted_elements
    # Gaussian elimination with coordinate tracking, in canonical order.
    table: dict[int, tuple[int, int]] = {}
    coords = []
    rank = 0
    for e in elems:
        v = _pack(e, n)
        m = 0
        while v:
            piv = v.bit_length() - 1
            if piv not in table:
                break
            tv, tm = table[piv]
            v ^= tv
            m ^= tm
        if v:
            table[v.bit_length() - 1] = (v, 1 << rank)
            m |= 1 << rank
            rank += 1
        coords.append(m)

    weights = [abs(word_trace(U, e)) ** 2 for e in elems]
    scale = 1.0 / (1 << (2 * n))
    best_mask = 0
    best_weight = -1.0
    for mask in range(1, 1 << rank):
        kept = sum(
            w for w, c in zip(weights, coords) if not (mask & c).bit_count() & 1
        )
        if kept > best_weight:
            best_mask, best_weight = mask, kept * scale
    return PauliGroup(
        n,
        frozenset(
            e for e, c in zip(elems, coords) if not (best_mask & c).bit_count() & 1
        ),
    )


def _adaptive_peel(
    U: np.ndarray, top: PauliGroup
) -> tuple[np.ndarray, list[PeelStep]]:
    """Peel with children re-chosen per level to hug the residual's weight."""
    steps: list[PeelStep] = []
    parent = top
    level = 1
    while len(parent) > 1:
        child = _heaviest_maximal_subgroup(U, parent)
        try:
            U, level_steps = peel_level(U, parent, child, level=level)
        except DecompositionError as exc:
            partial = exc.trace.steps if exc.trace is not None else ()
            raise DecompositionError(
                str(exc), PeelTrace(tuple(steps) + tuple(partial))
            ) from None
        steps.extend(level_steps)
        parent = child
        level += 1
    return U, steps


def decompose(
    U: np.ndarray, chain: SubgroupChain | None = None
) -> tuple[ProductDecomposition, PeelTrace]:
    """Synthesize U as a phase times a product of word exponentials.

    With no chain given, the tower is derived from the Pauli support of U
    by repeatedly taking canonical maximal subgroups; if that tower stalls,
    the peel restarts with each child instead chosen to retain the most of
    the current residual's weight.  Raises :class:`DecompositionError`
    (with the partial trace attached) when the input is not supported in
    the top group or every descent stalls.
    """
    U = np.asarray(U, dtype=complex)
    d = U.shape[0]
    n = int(d).bit_length() - 1
    if U.shape != (d, d) or d != 1 << n:
        raise ValueError(f"matrix shape {U.shape} is not 2^n x 2^n")
    if np.abs(U @ U.conj().T - np.eye(d)).max() > UNITARITY_TOL:
        raise ValueError("input matrix is not unitary")

    top = None
    if chain is None:
        top = support_group(U)
        chain = SubgroupChain.automatic(top)
    elif chain.n_sites != n:
        raise ValueError(f"chain is over {chain.n_sites} sites, matrix over {n}")

    top_weight = group_norm(U, chain.levels[0])
    if 1.0 - top_weight > PEEL_TOL:
        raise DecompositionError(
            f"input carries weight {1.0 - top_weight:.3e} outside the top group",
            PeelTrace(()),
        )

    U0 = U
    steps: list[PeelStep] = []
    try:
        for level, (parent, child) in enumerate(
            zip(chain.levels, chain.levels[1:]), 1
        ):
            try:
                U, level_steps = peel_level(U, parent, child, level=level)
            except DecompositionError as exc:
                partial = exc.trace.steps if exc.trace is not None else ()
                raise DecompositionError(
                    str(exc), PeelTrace(tuple(steps) + tuple(partial))
                ) from None
            steps.extend(level_steps)
    except DecompositionError:
        if top is None:
            raise
        U, steps = _adaptive_peel(U0, top)

    phase = complex(np.trace(U)) / d
    phase /= abs(phase)
    factors = tuple(
        (s.word, s.angle) for s in reversed(steps) if abs(s.angle) > ZERO_ANGLE_TOL
    )
    result = ProductDecomposition(n_sites=n, factors=factors, global_phase=phase)

    overlap = complex(np.trace(reconstruct(result).conj().T @ U0)) / d
    if abs(overlap - 1.0) > RECONSTRUCTION_TOL:
        raise DecompositionError(
            f"reconstruction overlap {overlap!r} deviates from unity",
            PeelTrace(tuple(steps)),
        )
    return result, PeelTrace(tuple(steps))


def reconstruct(decomposition: ProductDecomposition) -> np.ndarray:
    """Dense matrix global_phase * prod_k exp(-i angle_k word_k)."""
    d = 1 << decomposition.n_sites
    out = decomposition.global_phase * np.eye(d, dtype=complex)
    for word, angle in decomposition.factors:
        out = out @ (
            math.cos(angle) * np.eye(d)
            - 1j * math.sin(angle) * pauli_matrix(word)
        )
    return out


def gate_fidelity(U: np.ndarray, V: np.ndarray) -> float:
    """|Tr(U^dag V)| / d, the phase-insensitive overlap of two unitaries."""
    if U.shape != V.shape:
        raise ValueError("shape mismatch")
    return float(abs(np.trace(U.conj().T @ V))) / U.shape[0]


def closed_form(n_sites: int) -> ProductDecomposition:
    """Explicit product form of the engineered chain's mirror propagator.

    The propagator at the mirror time factors into two-site exponentials
    conjugated by the Z strings lying between their end sites: one X..X /
    Y..Y pair (X..Y / Y..X for odd lengths) per mirror-symmetric site pair
    at angle pi/4 from the outside in, plus, for odd lengths, one final
    alternating-word factor at angle pi/2.  The overall sign alternates
    with floor(n/2).  For even lengths every word commutes with every
    other and the product closes with global phase one; for odd lengths
    the final word anticommutes with each pair word, so it stays
    rightmost (applied first) and the product closes with phase -i times
    an alternating sign.
    """
    if n_sites < 2:
        raise ValueError("the product form needs at least 2 sites")
    sign = -1.0 if (n_sites // 2) % 2 else 1.0
    quarter = -sign * math.pi / 4.0
    half = -sign * math.pi / 2.0
    factors: list[tuple[PauliString, float]] = []
    for j in range(1, n_sites // 2 + 1):
        pad = "I" * (j - 1)
        mid = "Z" * (n_sites - 2 * j)
        if n_sites % 2 == 0:
            first, second = ("X", "X"), ("Y", "Y")
        else:
            first, second = ("X", "Y"), ("Y", "X")
        factors.append((PauliString(pad + first[0] + mid + first[1] + pad), quarter))
        factors.append((PauliString(pad + second[0] + mid + second[1] + pad), quarter))
    phase = 1.0 + 0.0j
    if n_sites % 2 == 1:
        center = (n_sites + 1) // 2
        letters = []
        for s in range(1, n_sites + 1):
            if s == center:
                letters.append("I")
            else:
                t = min(s, n_sites + 1 - s)
                letters.append("X" if t % 2 == 1 else "Y")
        factors.append((PauliString("".join(letters)), half))
        phase = -1.0j if ((n_sites // 2) // 2) % 2 == 0 else 1.0j
    return ProductDecomposition(n_sites, tuple(factors), phase)
