import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from erodewave.model import ErosionModel, ModelError, make_model


def test_builtin_quadratic_values(quad):
    assert quad.h(0.5) == pytest.approx(1.5, abs=1e-14)
    assert quad.h(1.0) == pytest.approx(2.0, abs=1e-14)  # cached limit -g'(1)
    assert quad.h0 == 1.0
    assert quad.h1 == 2.0
    assert quad.hprime1 == pytest.approx(1.0, abs=1e-14)  # -g''(1)/2


def test_builtin_example5_values(ex5):
    assert ex5.h(0.0) == pytest.approx(0.5, abs=1e-14)
    assert ex5.h0 == 0.5
    assert ex5.h1 == 1.5


def test_unknown_builtin_rejected():
    with pytest.raises(ModelError):
        make_model("cubic-mystery")


def test_short_coefficient_list_rejected():
    with pytest.raises(ModelError):
        make_model([1.0])


@pytest.mark.parametrize("name", ["quadratic", "example5"])
def test_builtins_validate(name):
    assert make_model(name).validate().ok


def test_linear_g_constructs_but_fails_validation():
    model = make_model([1.0, -1.0])  # g = 1 - z, g'' = 0
    report = model.validate()
    assert not report.ok
    failed = {c.name for c in report.failed()}
    assert "g'' < 0" in failed


def test_validation_report_names_all_hypotheses(quad):
    names = [c.name for c in quad.validate().checks]
    assert names == ["g(1) = 0", "g(0) >= 0", "g'' < 0", "h >= 0", "h' > 0", "h'' < 2h'/(1-z)"]


def test_eval_selectors(quad):
    assert quad.eval("h", 0.5) == pytest.approx(1.5)
    assert quad.eval("h", 1.0) == pytest.approx(2.0)
    assert quad.eval("g", 0.5) == pytest.approx(0.75)
    assert quad.eval("h_prime", 1.0) == pytest.approx(1.0)
    with pytest.raises(ModelError):
        quad.eval("h", 1.5)
    with pytest.raises(ModelError):
        quad.eval("h", -0.1)
    with pytest.raises(ModelError):
        quad.eval("nope", 0.5)


def test_limit_window_switches_to_cached_values(quad):
    # inside |1-z| < 1e-7 the h selectors return the stored limits
    assert quad.h(1.0 - 5e-8) == quad.h1
    assert quad.h_prime(1.0 - 5e-8) == quad.hprime1


def test_h_inverse_examples(quad, ex5):
    assert quad.h_inverse(1.5) == pytest.approx(0.5, abs=1e-12)
    assert quad.h_inverse(quad.h1) == 1.0
    assert ex5.h_inverse(1.0) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ModelError):
        quad.h_inverse(0.5)  # below h(0)
    with pytest.raises(ModelError):
        quad.h_inverse(2.5)  # above h(1)


def test_h_inverse_roundtrip_grid(quad, ex5):
    zs = np.linspace(0.0, 1.0, 1001)
    for model in (quad, ex5):
        back = model.h_inverse(model.h(zs))
        assert np.max(np.abs(back - zs)) < 1e-9


def test_h_matches_quotient_on_grid(quad, ex5):
    zs = np.linspace(0.0, 1.0 - 1e-3, 1001)
    for model in (quad, ex5):
        quotient = model.g(zs) / (1.0 - zs)
        assert np.max(np.abs(model.h(zs) - quotient)) < 1e-10


def test_f_examples(quad, ex5):
    assert quad.f(2.0) == pytest.approx(1.5, abs=1e-14)
    assert quad.f(1.0) == pytest.approx(0.0, abs=1e-14)
    assert ex5.f_prime_at_inf == pytest.approx(0.5)
    with pytest.raises(ModelError):
        quad.f(0.9)


def test_f_g_composition(quad, ex5):
    ws = np.linspace(1.0, 100.0, 500)
    for model in (quad, ex5):
        lhs = model.f(ws) / ws
        rhs = model.g(1.0 / ws)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_f_prime_limits(quad):
    assert quad.f_prime_at_one == quad.h1
    assert quad.f_prime(1.0) == pytest.approx(quad.h1, abs=1e-12)


def test_model_is_hashable_and_frozen(quad):
    hash(quad)
    with pytest.raises(Exception):
        quad.h0 = 3.0


@settings(max_examples=40, deadline=None)
@given(
    a=st.floats(min_value=0.1, max_value=3.0),
    b=st.floats(min_value=0.0, max_value=2.0),
)
def test_concave_family_validates_and_inverts(a, b):
    # g = a(1 - z^2) + b(1 - z): g(1)=0, g''=-2a<0, h = a(1+z) + b
    model = make_model([a + b, -b, -a])
    assert model.validate().ok
    zs = np.linspace(0.0, 1.0, 101)
    hs = np.asarray(model.h(zs))
    assert np.all(np.diff(hs) > 0.0)
    back = model.h_inverse(hs)
    assert np.max(np.abs(back - zs)) < 1e-8


def test_g_spec_preserved():
    m = make_model([0.75, 0.25, -1.0])
    assert isinstance(m, ErosionModel)
    assert m.g_spec == (0.75, 0.25, -1.0)
    assert make_model("quadratic").g_spec == "quadratic"
