"""Dicke-basis states, collective operators, and the dephasing + loss map."""

import math

import numpy as np
import pytest

from spinbath import (
    DickeState,
    EvolutionInputs,
    cat_state,
    collective_operator,
    css_general,
    css_plus_x,
    evolve,
)


def random_density_matrix(n_atoms, rng):
    dim = n_atoms + 1
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / rho.trace().real


def test_jz_is_diagonal_magnetization():
    jz = collective_operator(6, "z")
    assert np.array_equal(np.diag(jz).real, np.arange(7) - 3.0)
    assert np.count_nonzero(jz - np.diag(np.diag(jz))) == 0


def test_ladder_amplitudes_n2():
    jp = collective_operator(2, "+")
    want = np.zeros((3, 3))
    want[1, 0] = want[2, 1] = math.sqrt(2.0)
    assert np.allclose(jp, want, atol=1e-15)
    assert np.array_equal(collective_operator(2, "-"), jp.conj().T)


def test_su2_commutator():
    jx = collective_operator(5, "x")
    jy = collective_operator(5, "y")
    jz = collective_operator(5, "z")
    assert np.allclose(jx @ jy - jy @ jx, 1j * jz, atol=1e-13)
    # Casimir j(j+1)
    j = 2.5
    casimir = jx @ jx + jy @ jy + jz @ jz
    assert np.allclose(casimir, j * (j + 1.0) * np.eye(6), atol=1e-13)


def test_operator_cache_returns_readonly_singleton():
    a = collective_operator(8, "x")
    b = collective_operator(8, "x")
    assert a is b
    assert not a.flags.writeable
    with pytest.raises(ValueError):
        a[0, 0] = 1.0
    with pytest.raises(ValueError):
        collective_operator(3, "q")
    with pytest.raises(ValueError):
        collective_operator(0, "z")


def test_css_plus_x_amplitudes():
    psi = css_plus_x(4)
    want = np.sqrt([1.0, 4.0, 6.0, 4.0, 1.0]) / 4.0
    assert np.allclose(psi, want, atol=1e-15)
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-14)
    state = DickeState.from_vector(psi)
    assert state.expectation(collective_operator(4, "x")).real == pytest.approx(2.0, abs=1e-13)
    assert abs(state.expectation(collective_operator(4, "z"))) < 1e-14


def test_css_general_reproduces_plus_x():
    assert np.allclose(css_general(7, 0.5 * math.pi, 0.0), css_plus_x(7), atol=1e-13)


def test_css_general_points_where_told(rng):
    n = 6
    ops = {ax: collective_operator(n, ax) for ax in "xyz"}
    for theta, phi in [(0.3, 1.2), (2.1, -0.7), (1.5707, 4.0)]:
        state = DickeState.from_vector(css_general(n, theta, phi))
        direction = np.array([math.sin(theta) * math.cos(phi),
                              math.sin(theta) * math.sin(phi),
                              math.cos(theta)])
        mean = np.array([state.expectation(ops[ax]).real for ax in "xyz"])
        assert np.allclose(mean, 0.5 * n * direction, atol=1e-12)
        # coherent states saturate the |<J>| = j bound
        assert np.linalg.norm(mean) == pytest.approx(0.5 * n, abs=1e-12)


def test_cat_state_branch_structure():
    for n in (4, 6, 10):
        cat = cat_state(n)
        assert np.linalg.norm(cat) == pytest.approx(1.0, abs=1e-13)
        plus = css_general(n, 0.5 * math.pi, 0.0)
        minus = css_general(n, 0.5 * math.pi, math.pi)
        # antipodal coherent branches are exactly orthogonal, weight 1/2 each
        assert abs(plus.conj() @ minus) < 1e-13
        assert abs(plus.conj() @ cat) ** 2 == pytest.approx(0.5, abs=1e-12)
        assert abs(minus.conj() @ cat) ** 2 == pytest.approx(0.5, abs=1e-12)


def test_evolve_matches_elementwise_oracle(rng):
    n = 4
    rho0 = random_density_matrix(n, rng)
    inp = EvolutionInputs(time=1.7, delta=0.23, gamma=0.011,
                          gamma_loss=0.03, lambda_prime=-0.4)
    out = evolve(DickeState(n, rho0), inp)

    m = np.arange(n + 1) - 0.5 * n
    want = np.empty_like(rho0)
    for a in range(n + 1):
        for b in range(n + 1):
            phase = inp.delta * (m[a] ** 2 - m[b] ** 2) - inp.lambda_prime * (m[a] - m[b])
            mag = (-inp.gamma_loss * (m[a] + m[b] + n)
                   - inp.gamma * (m[a] - m[b]) ** 2)
            want[a, b] = rho0[a, b] * np.exp(inp.time * (1j * phase + mag))
    assert np.allclose(out.rho, want, atol=1e-15, rtol=1e-13)


def test_pure_dephasing_preserves_diagonal(rng):
    n = 5
    rho0 = random_density_matrix(n, rng)
    out = evolve(DickeState(n, rho0),
                 EvolutionInputs(time=2.0, delta=0.5, gamma=0.2, lambda_prime=1.0))
    assert np.allclose(np.diag(out.rho), np.diag(rho0), atol=1e-15)
    assert out.trace == pytest.approx(1.0, abs=1e-13)
    # off-diagonal magnitudes shrink monotonically with |m - n|
    assert abs(out.rho[0, n]) < abs(rho0[0, n]) * 1e-3


def test_loss_trace_law():
    # from a coherent state the survival weight is (e^{-loss t} cosh(loss t))^N
    for n in (2, 7, 20):
        state = DickeState.coherent_plus_x(n)
        for lt in (0.05, 0.3):
            out = evolve(state, EvolutionInputs(time=1.0, delta=0.0, gamma=0.0,
                                                gamma_loss=lt))
            want = (math.exp(-lt) * math.cosh(lt)) ** n
            assert out.trace == pytest.approx(want, rel=1e-13)


def test_dephasing_destroys_purity(rng):
    n = 8
    state = DickeState.coherent_plus_x(n)
    assert state.purity() == pytest.approx(1.0, abs=1e-12)
    out = evolve(state, EvolutionInputs(time=5.0, delta=0.1, gamma=0.05))
    assert out.purity() < 0.5


def test_positivity_guard_clips_dust_and_rejects_garbage():
    n = 2
    rho = np.diag([0.6, 0.4 + 1e-13, -1e-13]).astype(np.complex128)
    state = evolve(DickeState(n, rho), EvolutionInputs(time=0.1, delta=0.0, gamma=0.0))
    assert np.linalg.eigvalsh(state.rho)[0] >= 0.0
    assert state.trace == pytest.approx(1.0, abs=1e-12)

    bad = np.diag([0.8, 0.3, -0.1]).astype(np.complex128)
    with pytest.raises(ValueError):
        evolve(DickeState(n, bad), EvolutionInputs(time=0.1, delta=0.0, gamma=0.0))
    # and the escape hatch skips the check
    evolve(DickeState(n, bad), EvolutionInputs(time=0.1, delta=0.0, gamma=0.0),
           check_positivity=False)


def test_state_validation_and_shapes():
    with pytest.raises(ValueError):
        DickeState(3, np.eye(3))
    with pytest.raises(ValueError):
        DickeState.from_vector(np.zeros(4))
    s = DickeState.from_vector(np.array([3.0, 4.0]))
    assert s.n_atoms == 1
    assert s.trace == pytest.approx(1.0, abs=1e-15)
    assert s.rho[0, 0] == pytest.approx(0.36, abs=1e-15)


def test_normalized_restores_unit_trace():
    state = evolve(DickeState.coherent_plus_x(6),
                   EvolutionInputs(time=2.0, delta=0.0, gamma=0.0, gamma_loss=0.2))
    assert state.trace < 0.5
    norm = state.normalized()
    assert norm.trace == pytest.approx(1.0, abs=1e-14)
    assert norm.n_atoms == 6


def test_evolution_inputs_validation():
    with pytest.raises(ValueError):
        EvolutionInputs(time=-1.0, delta=0.0, gamma=0.0)
    with pytest.raises(ValueError):
        EvolutionInputs(time=1.0, delta=0.0, gamma=-0.1)
    with pytest.raises(ValueError):
        EvolutionInputs(time=1.0, delta=0.0, gamma=0.0, gamma_loss=-0.1)


def test_write_csv_roundtrip(tmp_path):
    state = DickeState.coherent_plus_x(2)
    path = tmp_path / "state.csv"
    state.write_csv(path, header_lines=("run tag", "second line"))
    lines = path.read_text().splitlines()
    assert lines[0] == "# run tag"
    assert lines[1] == "# second line"
    assert lines[2] == "m,n,re,im"
    rows = [line.split(",") for line in lines[3:]]
    assert len(rows) == 9
    back = np.array([float(r[2]) + 1j * float(r[3]) for r in rows]).reshape(3, 3)
    assert np.allclose(back, state.rho, atol=1e-12)
    assert [r[0] for r in rows[:3]] == ["-1.0", "-1.0", "-1.0"]
