"""Pauli word algebra, dense lifts, groups, and subgroup chains."""

import itertools
import math

import numpy as np
import pytest

from mirrorchain.pauli import (
    LETTERS,
    PauliGroup,
    PauliString,
    PhasedPauli,
    SubgroupChain,
    commutes,
    group_closure,
    maximal_subgroup,
    pauli_matrix,
    pauli_mul,
    support_group,
    word_trace,
)

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
ONE_QUBIT = {"I": I2, "X": SX, "Y": SY, "Z": SZ}


def kron_word(letters: str) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for ch in letters:
        out = np.kron(out, ONE_QUBIT[ch])
    return out


def random_word(rng, n, allow_identity=True) -> PauliString:
    while True:
        w = PauliString("".join(LETTERS[k] for k in rng.integers(0, 4, n)))
        if allow_identity or not w.is_identity:
            return w


class TestPauliString:
    def test_valid_letters_only(self):
        with pytest.raises(ValueError):
            PauliString("XQ")
        with pytest.raises(ValueError):
            PauliString("")

    def test_ordering_is_site_major(self):
        words = [PauliString(w) for w in ("ZI", "IX", "XX", "II")]
        assert [w.letters for w in sorted(words)] == ["II", "IX", "XX", "ZI"]

    def test_mask_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            w = random_word(rng, n)
            x, z = w.masks
            assert PauliString.from_masks(x, z, n) == w

    def test_identity(self):
        assert PauliString.identity(3).letters == "III"
        assert PauliString("III").is_identity
        assert not PauliString("IIX").is_identity


class TestMultiplication:
    def test_example(self):
        r = pauli_mul(PauliString("XI"), PauliString("YI"))
        assert r.phase == 1j
        assert r.word == PauliString("ZI")

    def test_single_site_table(self):
        # the full 1-site multiplication table against dense matrices
        for a, b in itertools.product("IXYZ", repeat=2):
            r = pauli_mul(PauliString(a), PauliString(b))
            assert np.allclose(ONE_QUBIT[a] @ ONE_QUBIT[b],
                               r.phase * ONE_QUBIT[r.word.letters])

    def test_matrix_agreement_random(self):
        rng = np.random.default_rng(1)
        for _ in range(150):
            n = int(rng.integers(1, 5))
            a, b = random_word(rng, n), random_word(rng, n)
            r = pauli_mul(a, b)
            assert np.allclose(
                pauli_matrix(a) @ pauli_matrix(b),
                r.phase * pauli_matrix(r.word),
            )

    def test_product_word_linear_in_masks(self):
        # the product word (but not the phase) only xors the masks
        rng = np.random.default_rng(2)
        for _ in range(150):
            n = int(rng.integers(1, 7))
            a, b = random_word(rng, n), random_word(rng, n)
            xa, za = a.masks
            xb, zb = b.masks
            assert pauli_mul(a, b).word == PauliString.from_masks(xa ^ xb, za ^ zb, n)

    def test_commutes_matches_matrices(self):
        rng = np.random.default_rng(3)
        for _ in range(150):
            n = int(rng.integers(1, 5))
            a, b = random_word(rng, n), random_word(rng, n)
            A, B = pauli_matrix(a), pauli_matrix(b)
            assert commutes(a, b) == np.allclose(A @ B, B @ A)

    def test_site_count_mismatch(self):
        with pytest.raises(ValueError):
            pauli_mul(PauliString("X"), PauliString("XX"))


class TestPhasedPauli:
    def test_phase_snapping(self):
        p = PhasedPauli(1j + 1e-12, PauliString("X"))
        assert p.phase == 1j

    def test_bad_phase(self):
        with pytest.raises(ValueError):
            PhasedPauli(0.5 + 0.5j, PauliString("X"))

    def test_json_round_trip(self):
        for phase in (1, -1, 1j, -1j):
            p = PhasedPauli(phase, PauliString("XZ"))
            assert PhasedPauli.from_json(p.to_json()) == p


class TestPauliMatrix:
    def test_z(self):
        assert np.array_equal(pauli_matrix(PauliString("Z")), np.diag([1.0, -1.0]))

    def test_phased(self):
        assert np.allclose(
            pauli_matrix(PhasedPauli(-1j, PauliString("Y"))), -1j * SY
        )

    def test_kron_order_site_one_first(self):
        assert np.allclose(pauli_matrix(PauliString("XZ")), np.kron(SX, SZ))
        rng = np.random.default_rng(4)
        for _ in range(40):
            n = int(rng.integers(1, 6))
            w = random_word(rng, n)
            assert np.allclose(pauli_matrix(w), kron_word(w.letters))

    def test_size_cap(self):
        with pytest.raises(ValueError):
            pauli_matrix(PauliString.identity(13))


class TestWordTrace:
    def test_against_dense_trace(self):
        rng = np.random.default_rng(5)
        for _ in range(120):
            n = int(rng.integers(1, 5))
            d = 1 << n
            M = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            w = random_word(rng, n)
            assert word_trace(M, w) == pytest.approx(
                complex(np.trace(M @ pauli_matrix(w))), abs=1e-9
            )

    def test_orthogonality(self):
        # Tr(P Q) = d [P == Q] over words up to 5 sites (spot-checked pairs)
        rng = np.random.default_rng(6)
        for _ in range(80):
            n = int(rng.integers(1, 6))
            a, b = random_word(rng, n), random_word(rng, n)
            t = word_trace(pauli_matrix(a), b)
            want = float(1 << n) if a == b else 0.0
            assert t == pytest.approx(want, abs=1e-9)


class TestGroups:
    def test_closure_example(self):
        g = group_closure([PauliString("IZ"), PauliString("ZI")])
        assert set(g) == {PauliString(w) for w in ("II", "IZ", "ZI", "ZZ")}

    def test_closure_empty_seed(self):
        g = group_closure([], n_sites=3)
        assert set(g) == {PauliString("III")}
        with pytest.raises(ValueError):
            group_closure([])

    def test_closure_cardinality_power_of_two(self):
        rng = np.random.default_rng(7)
        for _ in range(120):
            n = int(rng.integers(1, 9))
            seeds = [random_word(rng, n) for _ in range(int(rng.integers(0, 5)))]
            size = len(group_closure(seeds, n_sites=n))
            assert size & (size - 1) == 0

    def test_closure_is_closed(self):
        rng = np.random.default_rng(8)
        for _ in range(40):
            n = int(rng.integers(1, 5))
            g = group_closure([random_word(rng, n) for _ in range(3)], n_sites=n)
            elems = list(g)
            for a in elems:
                for b in elems:
                    assert pauli_mul(a, b).word in g

    def test_group_rejects_non_closed_sets(self):
        with pytest.raises(ValueError):
            PauliGroup(2, frozenset({PauliString("II"), PauliString("XX"),
                                     PauliString("YY")}))
        with pytest.raises(ValueError):
            PauliGroup(2, frozenset({PauliString("XX")}))  # no identity

    def test_complete(self):
        g = PauliGroup.complete(2)
        assert len(g) == 16
        with pytest.raises(ValueError):
            PauliGroup.complete(7)


class TestSupportGroup:
    def test_two_site_rotation(self):
        U = math.cos(0.3) * np.eye(4) - 1j * math.sin(0.3) * kron_word("ZZ")
        assert set(support_group(U)) == {PauliString("II"), PauliString("ZZ")}

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            support_group(np.ones((4, 4), dtype=complex))

    def test_random_products(self):
        rng = np.random.default_rng(9)
        for _ in range(25):
            n = int(rng.integers(1, 4))
            d = 1 << n
            words = [random_word(rng, n, allow_identity=False) for _ in range(2)]
            U = np.eye(d, dtype=complex)
            for w in words:
                th = rng.uniform(0.2, 1.3)
                U = U @ (math.cos(th) * np.eye(d) - 1j * math.sin(th) * pauli_matrix(w))
            g = support_group(U)
            for w in words:
                assert w in g


class TestMaximalSubgroup:
    def test_example(self):
        g = group_closure([PauliString("ZZ")])
        m = maximal_subgroup(g)
        assert set(m) == {PauliString("II")}

    def test_index_two(self):
        rng = np.random.default_rng(10)
        for _ in range(60):
            n = int(rng.integers(1, 6))
            g = group_closure([random_word(rng, n) for _ in range(3)], n_sites=n)
            if len(g) == 1:
                continue
            m = maximal_subgroup(g)
            assert 2 * len(m) == len(g)
            assert m.is_subgroup_of(g)

    def test_exclusion(self):
        g = PauliGroup.complete(1)
        m = maximal_subgroup(g, exclude=[PauliString("Z")])
        assert PauliString("Z") not in m
        assert len(m) == 2

    def test_exclusion_respected_randomly(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            n = int(rng.integers(1, 4))
            g = PauliGroup.complete(n)
            excl = [random_word(rng, n, allow_identity=False)]
            m = maximal_subgroup(g, exclude=excl)
            assert excl[0] not in m
            assert 2 * len(m) == len(g)

    def test_identity_exclusion_is_an_error(self):
        g = group_closure([PauliString("ZZ")])
        with pytest.raises(ValueError):
            maximal_subgroup(g, exclude=[PauliString("II")])

    def test_trivial_group_has_no_proper_subgroup(self):
        with pytest.raises(ValueError):
            maximal_subgroup(PauliGroup.identity_group(2))


class TestSubgroupChain:
    def test_automatic_reaches_identity(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            n = int(rng.integers(1, 5))
            g = group_closure([random_word(rng, n) for _ in range(3)], n_sites=n)
            chain = SubgroupChain.automatic(g)
            assert chain.levels[0] == g
            assert len(chain.levels[-1]) == 1
            for a, b in zip(chain.levels, chain.levels[1:]):
                assert b.is_subgroup_of(a)
                assert 2 * len(b) == len(a)

    def test_rejects_non_nested_levels(self):
        a = group_closure([PauliString("XX")])
        b = group_closure([PauliString("ZZ")])
        with pytest.raises(ValueError):
            SubgroupChain((a, b))
