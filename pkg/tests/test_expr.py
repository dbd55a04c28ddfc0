import math

import numpy as np
import pytest

from jetgeom import (
    EvalDomainError,
    ExprSyntaxError,
    UnknownIdentifierError,
    compile_grid,
    diff,
    evaluate,
    parse_expr,
)

from oracles import fd_derivative


class TestParse:
    def test_variable_identity(self):
        e = parse_expr("x1", 2)
        assert evaluate(e, (7.0, 1.0)) == 7.0
        assert str(e) == "x1"

    def test_nested_literal(self):
        e = parse_expr("4/(1+x1^2+x2^2)^2", 2)
        assert evaluate(e, (0.0, 0.0)) == 4.0

    def test_unknown_function(self):
        with pytest.raises(UnknownIdentifierError) as err:
            parse_expr("foo(x1)", 2)
        assert err.value.name == "foo"

    def test_unknown_variable(self):
        with pytest.raises(UnknownIdentifierError) as err:
            parse_expr("x3 + 1", 2)
        assert err.value.name == "x3"

    def test_syntax_error_offset(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse_expr("1 + * 2", 2)
        assert err.value.offset == 4

    def test_trailing_garbage(self):
        with pytest.raises(ExprSyntaxError):
            parse_expr("1 + 2 )", 2)

    def test_empty(self):
        with pytest.raises(ExprSyntaxError):
            parse_expr("   ", 2)

    def test_precedence(self):
        assert evaluate(parse_expr("2 + 3 * 4", 1), (0.0,)) == 14.0
        assert evaluate(parse_expr("2 * 3 ^ 2", 1), (0.0,)) == 18.0
        assert evaluate(parse_expr("-2 ^ 2", 1), (0.0,)) == -4.0
        assert evaluate(parse_expr("2 ^ -1", 1), (0.0,)) == 0.5
        # right associativity: 2^(3^2) = 512, not (2^3)^2 = 64
        assert evaluate(parse_expr("2 ^ 3 ^ 2", 1), (0.0,)) == 512.0
        assert evaluate(parse_expr("8 / 4 / 2", 1), (0.0,)) == 1.0
        assert evaluate(parse_expr("8 - 4 - 2", 1), (0.0,)) == 2.0

    def test_scientific_literals(self):
        assert evaluate(parse_expr("1e-3 + 2.5E+1", 1), (0.0,)) == 1e-3 + 25.0


class TestEval:
    def test_product(self):
        assert evaluate(parse_expr("x1*x2", 2), (2.0, 3.0)) == 6.0

    def test_sin(self):
        assert evaluate(parse_expr("sin(x1)", 1), (0.0,)) == 0.0

    def test_rational(self):
        got = evaluate(parse_expr("4/(1-x1^2-x2^2)^2", 2), (0.5, 0.0))
        assert got == pytest.approx(4.0 / 0.75**2, rel=1e-15)

    def test_division_by_zero(self):
        with pytest.raises(EvalDomainError):
            evaluate(parse_expr("1/(x1-1)", 1), (1.0,))

    def test_log_domain(self):
        with pytest.raises(EvalDomainError):
            evaluate(parse_expr("log(x1)", 1), (-2.0,))
        with pytest.raises(EvalDomainError):
            evaluate(parse_expr("log(x1)", 1), (0.0,))

    def test_sqrt_domain(self):
        with pytest.raises(EvalDomainError):
            evaluate(parse_expr("sqrt(x1)", 1), (-1.0,))

    def test_fractional_power_of_negative(self):
        with pytest.raises(EvalDomainError):
            evaluate(parse_expr("x1^0.5", 1), (-1.0,))

    def test_all_functions(self):
        p = (0.37,)
        for name, fn in [("sin", math.sin), ("cos", math.cos), ("tan", math.tan),
                         ("exp", math.exp), ("log", math.log), ("sqrt", math.sqrt)]:
            got = evaluate(parse_expr(f"{name}(x1)", 1), p)
            assert got == pytest.approx(fn(0.37), rel=1e-15)


_SAMPLES = [
    ("x1^2", 1),
    ("x2", 2),
    ("sin(x1*x2)", 2),
    ("4/(1+x1^2+x2^2)^2", 2),
    ("exp(x1) * log(2 + x2^2) - sqrt(1 + x1^2)", 2),
    ("tan(x1/3) + x2^3 / (1 + x1^2)", 2),
    ("x1^x2", 2),
    ("-x1 + 2^-x2", 2),
]


class TestDiff:
    def test_power_rule(self):
        d = diff(parse_expr("x1^2", 1), 0)
        assert evaluate(d, (3.0,)) == 6.0

    def test_chain_rule(self):
        d = diff(parse_expr("sin(x1*x2)", 2), 1)
        assert evaluate(d, (1.0, math.pi)) == pytest.approx(-1.0, rel=1e-12)

    def test_constant_direction(self):
        d = diff(parse_expr("x2", 2), 0)
        for p in [(0.0, 0.0), (3.0, -2.0)]:
            assert evaluate(d, p) == 0.0

    @pytest.mark.parametrize("text,n", _SAMPLES)
    def test_matches_finite_difference(self, text, n):
        e = parse_expr(text, n)
        rng = np.random.default_rng(42)
        pts = 0.2 + 0.6 * rng.random((100, n))
        for axis in range(n):
            d = diff(e, axis)
            for p in pts:
                want = fd_derivative(lambda q: evaluate(e, q), p, axis)
                got = evaluate(d, tuple(p))
                assert abs(got - want) <= 1e-6 * (1.0 + abs(got))

    @pytest.mark.parametrize("text,n", _SAMPLES)
    def test_mixed_partials_commute(self, text, n):
        if n < 2:
            return
        e = parse_expr(text, n)
        d01 = diff(diff(e, 0), 1)
        d10 = diff(diff(e, 1), 0)
        rng = np.random.default_rng(7)
        for p in 0.2 + 0.6 * rng.random((40, n)):
            a = evaluate(d01, tuple(p))
            b = evaluate(d10, tuple(p))
            assert abs(a - b) <= 1e-10 * (1.0 + abs(a))

    def test_linearity(self):
        e1 = parse_expr("sin(x1*x2)", 2)
        e2 = parse_expr("x1^3 / (1 + x2^2)", 2)
        combo = 2.5 * e1 + e2
        d_combo = diff(combo, 0)
        d_split = 2.5 * diff(e1, 0) + diff(e2, 0)
        rng = np.random.default_rng(3)
        for p in rng.random((50, 2)):
            a = evaluate(d_combo, tuple(p))
            b = evaluate(d_split, tuple(p))
            assert abs(a - b) <= 1e-12 * (1.0 + abs(a))


class TestPrinting:
    @pytest.mark.parametrize("text,n", _SAMPLES + [
        ("x1 - (x2 - 1)", 2),
        ("(x1 + x2) * x1", 2),
        ("-(x1 + x2)", 2),
        ("x1/(x2*x1)", 2),
        ("(-x1)^2", 2),
        ("2^(x1 + 1)", 2),
    ])
    def test_roundtrip_normal_form(self, text, n):
        printed = str(parse_expr(text, n))
        again = str(parse_expr(printed, n))
        assert again == printed

    def test_roundtrip_of_derivatives(self):
        rng = np.random.default_rng(11)
        for text, n in _SAMPLES:
            e = diff(parse_expr(text, n), 0)
            printed = str(e)
            reparsed = parse_expr(printed, n)
            assert str(reparsed) == printed
            for p in 0.3 + 0.4 * rng.random((10, n)):
                assert evaluate(reparsed, tuple(p)) == pytest.approx(
                    evaluate(e, tuple(p)), rel=1e-15, abs=1e-300)


class TestCompiledGrid:
    def test_matches_recursive_eval(self):
        n = 2
        grid = np.array([[parse_expr("x1*x2", n), parse_expr("sin(x1)", n)],
                         [parse_expr("4/(1+x1^2+x2^2)^2", n), parse_expr("7", n)]],
                        dtype=object)
        fn = compile_grid(grid)
        rng = np.random.default_rng(5)
        for p in rng.random((20, 2)):
            got = fn(tuple(p))
            want = np.array([[evaluate(grid[i, j], tuple(p)) for j in range(2)]
                             for i in range(2)])
            assert np.allclose(got, want, rtol=0, atol=0)

    def test_domain_error(self):
        grid = np.array([parse_expr("1/x1", 1)], dtype=object)
        fn = compile_grid(grid)
        with pytest.raises(EvalDomainError):
            fn((0.0,))
