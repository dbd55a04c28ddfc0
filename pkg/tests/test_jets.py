import numpy as np
import pytest

from jetgeom import (
    CosetInvariant,
    Jet2Element,
    Jet3Element1d,
    SingularJetError,
    VerificationError,
    compose2,
    compose3_1d,
    coset_invariant,
    coset_transport,
    identity2,
    inverse2,
    project,
    recover_conjugator,
    split_epsilon,
    split_schwarzian,
)

from oracles import compose_taylor, jet_from_coeffs, taylor_coeffs


def rand_jet2(n, rng, spread=1.0):
    """Well conditioned random element: orthogonal x diagonal first block."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    d = np.diag(rng.uniform(0.5, 2.0, size=n))
    return Jet2Element(q @ d, spread * rng.standard_normal((n, n, n)))


def rand_orthogonal(n, rng):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def jet1d(a1, a2):
    return Jet2Element([[a1]], [[[a2]]])


def assert_jets_close(a, b, tol=1e-12):
    assert np.max(np.abs(a.a1 - b.a1)) <= tol
    assert np.max(np.abs(a.a2 - b.a2)) <= tol


class TestCompose2:
    def test_scalar_example_against_taylor_oracle(self):
        a, b = jet1d(2, 3), jet1d(4, 5)
        c = compose2(a, b)
        assert (c.a1[0, 0], c.a2[0, 0, 0]) == (8.0, 58.0)
        # oracle: compose the degree-2 Taylor polynomials directly

        class J2:
            def __init__(self, a1, a2):
                self.a1, self.a2 = a1, a2

        coeffs = compose_taylor(np.array([2.0, 1.5]), np.array([4.0, 2.5]))
        want = jet_from_coeffs(coeffs, J2)
        assert (want.a1, want.a2) == (8.0, 58.0)

    def test_identity_neutral(self):
        rng = np.random.default_rng(0)
        for n in (1, 2, 3):
            a = rand_jet2(n, rng)
            assert_jets_close(compose2(identity2(n), a), a)
            assert_jets_close(compose2(a, identity2(n)), a)

    def test_kernel_is_additive(self):
        rng = np.random.default_rng(1)
        n = 3
        ka = rng.standard_normal((n, n, n))
        kb = rng.standard_normal((n, n, n))
        a = Jet2Element(np.eye(n), ka)
        b = Jet2Element(np.eye(n), kb)
        c = compose2(a, b)
        assert np.max(np.abs(c.a1 - np.eye(n))) == 0.0
        assert np.max(np.abs(c.a2 - (a.a2 + b.a2))) <= 1e-14

    def test_preserves_lower_symmetry(self):
        rng = np.random.default_rng(2)
        for n in (2, 3):
            a, b = rand_jet2(n, rng), rand_jet2(n, rng)
            c = compose2(a, b)
            assert np.max(np.abs(c.a2 - c.a2.swapaxes(1, 2))) <= 1e-13
            i = inverse2(a)
            assert np.max(np.abs(i.a2 - i.a2.swapaxes(1, 2))) <= 1e-13


class TestInverse2:
    def test_kernel_inverse_is_negation(self):
        n = 2
        k = np.random.default_rng(3).standard_normal((n, n, n))
        a = Jet2Element(np.eye(n), k)
        inv = inverse2(a)
        assert np.max(np.abs(inv.a1 - np.eye(n))) <= 1e-15
        assert np.max(np.abs(inv.a2 + a.a2)) <= 1e-15

    def test_scalar_example(self):
        inv = inverse2(jet1d(2, 3))
        assert inv.a1[0, 0] == 0.5
        assert inv.a2[0, 0, 0] == -0.375
        assert_jets_close(compose2(jet1d(2, 3), inv), identity2(1))

    def test_identity(self):
        assert_jets_close(inverse2(identity2(3)), identity2(3))

    def test_two_sided(self):
        rng = np.random.default_rng(4)
        for n in (1, 2, 3):
            a = rand_jet2(n, rng)
            assert_jets_close(compose2(a, inverse2(a)), identity2(n), 1e-12)
            assert_jets_close(compose2(inverse2(a), a), identity2(n), 1e-12)

    def test_singular_rejected(self):
        with pytest.raises(SingularJetError):
            Jet2Element(np.zeros((2, 2)), np.zeros((2, 2, 2)))


class TestProjectionSplitting:
    def test_project_returns_first_block(self):
        rng = np.random.default_rng(5)
        a = rand_jet2(2, rng)
        assert np.array_equal(project(a), a.a1)
        assert np.array_equal(project(identity2(2)), np.eye(2))

    def test_project_is_homomorphism(self):
        a, b = jet1d(2, 3), jet1d(4, 5)
        assert project(compose2(a, b))[0, 0] == 8.0

    def test_epsilon_splits(self):
        rng = np.random.default_rng(6)
        for n in (2, 3):
            r = rand_orthogonal(n, rng)
            s = rand_orthogonal(n, rng)
            lhs = compose2(split_epsilon(r), split_epsilon(s))
            rhs = split_epsilon(r @ s)
            assert_jets_close(lhs, rhs, 1e-14)
            assert np.array_equal(project(split_epsilon(r)), r)

    def test_epsilon_of_identity(self):
        assert_jets_close(split_epsilon(np.eye(2)), identity2(2))


class TestCosetInvariant:
    def test_identity(self):
        F = coset_invariant(identity2(2))
        assert np.array_equal(F.F1, np.eye(2))
        assert np.max(np.abs(F.F2)) == 0.0

    def test_scalar_example(self):
        F = coset_invariant(jet1d(2, 3))
        assert F.F1[0, 0] == 4.0
        assert F.F2[0, 0, 0] == 1.5
        # defining property cross-check with h = -1 in the 1d orthogonal group
        moved = compose2(split_epsilon(np.array([[-1.0]])), jet1d(2, 3))
        Fm = coset_invariant(moved)
        assert Fm.F1[0, 0] == 4.0 and Fm.F2[0, 0, 0] == 1.5

    def test_left_orthogonal_invariance(self):
        rng = np.random.default_rng(7)
        for n in (2, 3):
            a = rand_jet2(n, rng)
            h = rand_orthogonal(n, rng)
            Fa = coset_invariant(a)
            Fb = coset_invariant(compose2(split_epsilon(h), a))
            assert np.max(np.abs(Fa.F1 - Fb.F1)) <= 1e-12
            assert np.max(np.abs(Fa.F2 - Fb.F2)) <= 1e-12

    def test_equal_invariant_implies_orthogonal_quotient(self):
        rng = np.random.default_rng(8)
        for n in (2, 3):
            a = rand_jet2(n, rng)
            b = compose2(split_epsilon(rand_orthogonal(n, rng)), a)
            q = compose2(a, inverse2(b))
            assert np.max(np.abs(q.a1.T @ q.a1 - np.eye(n))) <= 1e-10
            assert np.max(np.abs(q.a2)) <= 1e-10

    def test_affine_kind_drops_metric_block(self):
        F = coset_invariant(jet1d(2, 3), kind="affine")
        assert F.F1 is None
        assert F.F2[0, 0, 0] == 1.5


class TestCosetTransport:
    def test_identity_transport(self):
        rng = np.random.default_rng(9)
        a = rand_jet2(2, rng)
        Fa = coset_invariant(a)
        Ft = coset_transport(Fa, identity2(2))
        assert np.max(np.abs(Ft.F1 - Fa.F1)) == 0.0
        assert np.max(np.abs(Ft.F2 - Fa.F2)) == 0.0

    def test_scalar_example_against_oracle(self):
        # F((2,3)) = (4, 1.5) transported by (4, 5) must equal
        # F(compose2((2,3),(4,5))) = F((8,58)) = (64, 58/8)
        Fa = coset_invariant(jet1d(2, 3))
        Ft = coset_transport(Fa, jet1d(4, 5))
        assert Ft.F1[0, 0] == pytest.approx(64.0, abs=1e-12)
        assert Ft.F2[0, 0, 0] == pytest.approx(58.0 / 8.0, abs=1e-12)

    def test_agrees_with_invariant_of_product(self):
        rng = np.random.default_rng(10)
        for n in (1, 2, 3):
            a, b = rand_jet2(n, rng), rand_jet2(n, rng)
            want = coset_invariant(compose2(a, b))
            got = coset_transport(coset_invariant(a), b)
            assert np.max(np.abs(want.F1 - got.F1)) <= 1e-12 * (1 + np.max(np.abs(want.F1)))
            assert np.max(np.abs(want.F2 - got.F2)) <= 1e-12 * (1 + np.max(np.abs(want.F2)))

    def test_group_law(self):
        rng = np.random.default_rng(11)
        for n in (2, 3):
            a, b, c = (rand_jet2(n, rng) for _ in range(3))
            Fa = coset_invariant(a)
            one = coset_transport(coset_transport(Fa, b), c)
            two = coset_transport(Fa, compose2(b, c))
            assert np.max(np.abs(one.F1 - two.F1)) <= 1e-11 * (1 + np.max(np.abs(two.F1)))
            assert np.max(np.abs(one.F2 - two.F2)) <= 1e-11 * (1 + np.max(np.abs(two.F2)))

    def test_affine_transport(self):
        rng = np.random.default_rng(12)
        a, b = rand_jet2(2, rng), rand_jet2(2, rng)
        got = coset_transport(coset_invariant(a, kind="affine"), b)
        want = coset_invariant(compose2(a, b), kind="affine")
        assert got.F1 is None
        assert np.max(np.abs(got.F2 - want.F2)) <= 1e-12 * (1 + np.max(np.abs(want.F2)))


class TestRecoverConjugator:
    def _sigma_from(self, k0):
        n = k0.shape[0]
        pos = Jet2Element(np.eye(n), k0)
        neg = Jet2Element(np.eye(n), -k0)

        def sigma(b1):
            return compose2(pos, compose2(split_epsilon(b1), neg))

        return sigma

    def test_epsilon_gives_zero(self):
        rng = np.random.default_rng(13)
        mats = [rng.standard_normal((2, 2)) + 2 * np.eye(2) for _ in range(3)]
        k = recover_conjugator(lambda b: split_epsilon(b), mats)
        assert np.max(np.abs(k)) <= 1e-14

    def test_recovers_conjugation_kernel(self):
        rng = np.random.default_rng(14)
        for n in (1, 2, 3):
            k0 = rng.standard_normal((n, n, n))
            k0 = 0.5 * (k0 + k0.swapaxes(1, 2))
            mats = [rng.standard_normal((n, n)) + 2 * np.eye(n) for _ in range(4)]
            k = recover_conjugator(self._sigma_from(k0), mats)
            assert np.max(np.abs(k - k0)) <= 1e-10 * (1 + np.max(np.abs(k0)))

    def test_lambda_independence(self):
        rng = np.random.default_rng(15)
        k0 = rng.standard_normal((2, 2, 2))
        k0 = 0.5 * (k0 + k0.swapaxes(1, 2))
        mats = [rng.standard_normal((2, 2)) + 2 * np.eye(2) for _ in range(3)]
        k2 = recover_conjugator(self._sigma_from(k0), mats, lam=2.0)
        k3 = recover_conjugator(self._sigma_from(k0), mats, lam=3.0)
        assert np.max(np.abs(k2 - k3)) <= 1e-10 * (1 + np.max(np.abs(k0)))

    def test_rejects_non_splitting(self):
        rng = np.random.default_rng(16)
        mats = [rng.standard_normal((2, 2)) + 2 * np.eye(2) for _ in range(3)]

        def bogus(b1):
            return Jet2Element(b1, np.ones((2, 2, 2)))

        with pytest.raises(VerificationError):
            recover_conjugator(bogus, mats)

    def test_rejects_bad_lambda(self):
        with pytest.raises(ValueError):
            recover_conjugator(lambda b: split_epsilon(b), [np.eye(2)], lam=1.0)


class TestScalarThirdOrder:
    def test_kernel_additive(self):
        a = compose3_1d(Jet3Element1d(1, 0, 2.5), Jet3Element1d(1, 0, -1.0))
        assert (a.a1, a.a2, a.a3) == (1.0, 0.0, 1.5)

    def test_moebius_self_composition(self):
        # jets of x/(1-x) at 0 are (1, 2, 6); the square is x/(1-2x)
        j = Jet3Element1d(1, 2, 6)
        sq = compose3_1d(j, j)
        assert (sq.a1, sq.a2, sq.a3) == (1.0, 4.0, 24.0)

    def test_identity_neutral(self):
        e = Jet3Element1d(1, 0, 0)
        a = Jet3Element1d(2.0, -1.0, 0.5)
        for left, right in ((e, a), (a, e)):
            c = compose3_1d(left, right)
            assert (c.a1, c.a2, c.a3) == (a.a1, a.a2, a.a3)

    def test_against_taylor_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            a = Jet3Element1d(rng.uniform(0.5, 2), rng.standard_normal(),
                              rng.standard_normal())
            b = Jet3Element1d(rng.uniform(0.5, 2), rng.standard_normal(),
                              rng.standard_normal())
            got = compose3_1d(a, b)
            coeffs = compose_taylor(taylor_coeffs(a), taylor_coeffs(b))
            want = jet_from_coeffs(coeffs, Jet3Element1d)
            assert abs(got.a1 - want.a1) <= 1e-12 * (1 + abs(want.a1))
            assert abs(got.a2 - want.a2) <= 1e-12 * (1 + abs(want.a2))
            assert abs(got.a3 - want.a3) <= 1e-12 * (1 + abs(want.a3))

    def test_associativity(self):
        rng = np.random.default_rng(18)
        for _ in range(200):
            a, b, c = (Jet3Element1d(rng.uniform(0.5, 2), rng.standard_normal(),
                                     rng.standard_normal()) for _ in range(3))
            lhs = compose3_1d(compose3_1d(a, b), c)
            rhs = compose3_1d(a, compose3_1d(b, c))
            scale = 1 + abs(rhs.a3)
            assert abs(lhs.a1 - rhs.a1) <= 1e-12 * scale
            assert abs(lhs.a2 - rhs.a2) <= 1e-12 * scale
            assert abs(lhs.a3 - rhs.a3) <= 1e-12 * scale


class TestSchwarzian:
    def test_splitting_image_has_zero_part(self):
        rng = np.random.default_rng(19)
        for _ in range(20):
            a1, a2 = rng.uniform(0.5, 2), rng.standard_normal()
            head = Jet3Element1d(a1, a2, 1.5 * a2 * a2 / a1)
            _, s = split_schwarzian(head)
            assert abs(s) <= 1e-14 * (1 + abs(head.a3))

    def test_moebius_jet_is_pure_head(self):
        _, s = split_schwarzian(Jet3Element1d(1, 2, 6))
        assert s == 0.0

    def test_kernel_jet(self):
        head, s = split_schwarzian(Jet3Element1d(1, 0, 3.25))
        assert s == 3.25
        assert (head.a1, head.a2, head.a3) == (1.0, 0.0, 0.0)

    def test_factorization_reconstructs(self):
        rng = np.random.default_rng(20)
        for _ in range(50):
            a = Jet3Element1d(rng.uniform(0.5, 2), rng.standard_normal(),
                              rng.standard_normal())
            head, s = split_schwarzian(a)
            rebuilt = compose3_1d(head, Jet3Element1d(1.0, 0.0, s / a.a1))
            assert abs(rebuilt.a1 - a.a1) <= 1e-13
            assert abs(rebuilt.a2 - a.a2) <= 1e-13
            assert abs(rebuilt.a3 - a.a3) <= 1e-12 * (1 + abs(a.a3))

    def test_splitting_is_homomorphism(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            u = Jet3Element1d(rng.uniform(0.5, 2), rng.standard_normal(), 0.0)
            v = Jet3Element1d(rng.uniform(0.5, 2), rng.standard_normal(), 0.0)
            eu, _ = split_schwarzian(Jet3Element1d(u.a1, u.a2, 1.5 * u.a2**2 / u.a1))
            ev, _ = split_schwarzian(Jet3Element1d(v.a1, v.a2, 1.5 * v.a2**2 / v.a1))
            prod = compose3_1d(eu, ev)
            _, s = split_schwarzian(prod)
            assert abs(s) <= 1e-12 * (1 + abs(prod.a3))


class TestValidation:
    def test_a2_symmetrized_at_construction(self):
        a2 = np.zeros((2, 2, 2))
        a2[0, 0, 1] = 2.0
        j = Jet2Element(np.eye(2), a2)
        assert j.a2[0, 0, 1] == 1.0 and j.a2[0, 1, 0] == 1.0

    def test_immutable_blocks(self):
        j = identity2(2)
        with pytest.raises(ValueError):
            j.a1[0, 0] = 5.0

    def test_coset_invariant_validation(self):
        with pytest.raises(ValueError):
            CosetInvariant(F2=np.zeros((2, 2, 2)))  # riemannian needs F1

    def test_scalar_jet_rejects_zero_slope(self):
        with pytest.raises(SingularJetError):
            Jet3Element1d(0.0, 1.0, 1.0)
