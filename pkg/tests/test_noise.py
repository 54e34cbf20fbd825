import numpy as np
import pytest

from ifmcnot.core import DensityMatrix, PureState, apply_ops, embed, partial_trace, to_density
from ifmcnot.gate import GateInput, Scheme, gate_channel, gate_dims, initial_state, route, run_gate
from ifmcnot.metrics import avg_gate_fidelity
from ifmcnot.noise import (EpsilonDist, NoiseModel, apply_noise_hooks, dephase_kraus, dephase_path,
                           record_unitary, sample_epsilon)
from conftest import random_state

EPS_GRID = np.linspace(0.0, 0.3, 12)
P_GRID = np.linspace(0.0, 1.0, 11)


def test_zero_dephasing_is_identity(rng):
    rho = to_density(random_state(rng, (4, 2, 2)))
    assert np.abs(dephase_path(rho, 0.0).matrix - rho.matrix).max() < 1e-15


def test_full_dephasing_of_two_label_superposition():
    psi = PureState((4, 2), np.array([0, 0, 1, 0, 1, 0, 0, 0]) / np.sqrt(2))
    out = dephase_path(psi, 1.0)
    # |pi_2>|1> and |pi_3>|0> with equal weight, coherence gone
    expected = np.zeros((8, 8))
    expected[2, 2] = expected[4, 4] = 0.5
    assert np.abs(out.matrix - expected).max() < 1e-15
    assert partial_trace(out, [0]).matrix[1, 2] == 0


@pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
def test_coherences_scaled(rng, p):
    rho = to_density(random_state(rng, (4, 2)))
    out = dephase_path(rho, p).matrix.reshape(4, 2, 4, 2)
    m = rho.matrix.reshape(4, 2, 4, 2)
    for j in range(4):
        for k in range(4):
            f = 1.0 if j == k else 1 - p
            assert np.abs(out[j, :, k, :] - f * m[j, :, k, :]).max() < 1e-14


def test_dephasing_kraus_is_trace_preserving():
    for p in P_GRID:
        ops = dephase_kraus((4, 2, 2), p)
        s = sum(k.conj().T @ k for k in ops)
        assert np.abs(s - np.eye(16)).max() < 1e-12


def test_dephasing_rejects_bad_probability(rng):
    with pytest.raises(ValueError):
        dephase_path(to_density(random_state(rng, (4, 2))), 1.2)


@pytest.mark.parametrize("p", [0.1, 0.5, 1.0])
def test_record_dilation_reproduces_channel(rng, p):
    psi = random_state(rng, (4, 2, 2))
    dims = (4, 5, 2, 2)
    rec0 = np.zeros(5)
    rec0[0] = 1
    v = np.einsum("act,r->arct", psi.tensor(), rec0).ravel()
    big = PureState(dims, v)
    u = embed(record_unitary(4, p), [0, 1], dims)
    assert np.abs(u.conj().T @ u - np.eye(u.shape[0])).max() < 1e-14
    marked = apply_ops(big, [u])
    reduced = partial_trace(marked, [0, 2, 3])
    assert np.abs(reduced.matrix - dephase_path(psi, p).matrix).max() < 1e-14


def test_sample_epsilon():
    rng = np.random.default_rng(1)
    assert sample_epsilon(EpsilonDist(), rng) == 0.0
    assert sample_epsilon(EpsilonDist.fixed(0.05), rng) == 0.05
    draws = np.array([sample_epsilon(EpsilonDist.uniform(0.1), rng) for _ in range(10_000)])
    assert draws.min() >= 0 and draws.max() <= 0.1
    assert abs(draws.mean() - 0.05) < 0.005
    a = [sample_epsilon(EpsilonDist.uniform(0.1), np.random.default_rng(7)) for _ in range(3)]
    assert a[0] == a[1] == a[2]


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(p_dephase=-0.1)
    with pytest.raises(ValueError):
        NoiseModel(eta=1.0)
    with pytest.raises(ValueError):
        EpsilonDist("gauss", 0.1)
    with pytest.raises(ValueError):
        EpsilonDist.fixed(0.5)
    assert NoiseModel(epsilon=EpsilonDist.uniform(0.1)).seed_consumed
    assert not NoiseModel(epsilon=EpsilonDist.fixed(0.1)).seed_consumed


def test_all_zero_hooks_are_identity():
    psi = initial_state(Scheme(), GateInput.bell())
    psi = route(Scheme(), psi)
    rng = np.random.default_rng(0)
    for stage in ("post-route", "post-interact"):
        out, draws = apply_noise_hooks(stage, psi, NoiseModel(), rng)
        assert isinstance(out, PureState)
        assert np.array_equal(out.amplitudes, psi.amplitudes)
    assert draws == {}
    with pytest.raises(ValueError):
        apply_noise_hooks("pre-route", psi, NoiseModel(), rng)


def test_hooks_record_epsilon_draws():
    psi = route(Scheme("dual"), initial_state(Scheme("dual"), GateInput.bell()))
    _, draws = apply_noise_hooks("post-route", psi, NoiseModel(epsilon=EpsilonDist.fixed(0.1)),
                                 np.random.default_rng(0), dual=True)
    assert draws == {"eps_pi": 0.1, "eps_2pi": 0.1}


def test_hook_without_records_gives_density():
    psi = route(Scheme(), initial_state(Scheme(), GateInput.bell()))
    out, _ = apply_noise_hooks("post-route", psi, NoiseModel(p_dephase=1.0), np.random.default_rng(0))
    assert isinstance(out, DensityMatrix)
    assert abs(partial_trace(out, [0]).matrix[1, 2]) < 1e-15


def test_full_dephasing_single_pulse_gives_classical_mixture():
    rep = run_gate(Scheme(), GateInput.bell(), NoiseModel(p_dephase=1.0))
    # 1/2 (|0,+><0,+| + |1,-><1,-|), derived by hand
    expected = np.diag([0.5, 0, 0, 0.5])
    assert np.abs(rep.output.matrix - expected).max() < 1e-12
    assert rep.output_fidelity == pytest.approx(0.5, abs=1e-12)
    assert rep.concurrence == pytest.approx(0.0, abs=1e-12)


def test_fixed_epsilon_matches_closed_form():
    eps = 0.1
    nm = NoiseModel(epsilon=EpsilonDist.fixed(eps))
    # single pulse: U = P0 (x) I + P1 (x) R(1 - eps), |Tr(CNOT^dag U)|^2 = 10 + 6 cos(eps pi)
    single, _ = gate_channel(Scheme(), nm)
    assert 1 - avg_gate_fidelity(single) == pytest.approx(0.3 * (1 - np.cos(eps * np.pi)), abs=1e-14)
    # dual pulse: both pulses short by eps, |Tr|^2 = 8 (1 + cos(eps pi))
    dual, _ = gate_channel(Scheme("dual"), nm)
    assert 1 - avg_gate_fidelity(dual) == pytest.approx(0.4 * (1 - np.cos(eps * np.pi)), abs=1e-14)


def test_dual_beats_single_under_dephasing():
    nm = NoiseModel(p_dephase=0.2)
    single = run_gate(Scheme(), GateInput.bell(), nm)
    dual = run_gate(Scheme("dual"), GateInput.bell(), nm)
    assert dual.avg_gate_fidelity > single.avg_gate_fidelity
    assert dual.avg_gate_fidelity == pytest.approx(1.0, abs=1e-12)
    partly = run_gate(Scheme("dual"), GateInput.bell(), NoiseModel(p_dephase=0.2, kappa=0.5))
    assert single.avg_gate_fidelity < partly.avg_gate_fidelity < dual.avg_gate_fidelity


@pytest.mark.parametrize("variant", ["single", "dual"])
def test_fidelity_monotone_in_p(variant):
    vals = [avg_gate_fidelity(gate_channel(Scheme(variant), NoiseModel(p_dephase=p, kappa=1.0))[0])
            for p in P_GRID]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] < vals[0]


@pytest.mark.parametrize("variant", ["single", "dual"])
@pytest.mark.parametrize("conv", ["ideal", "su2"])
def test_fidelity_monotone_in_epsilon(variant, conv):
    s = Scheme(variant, conv)
    vals = [avg_gate_fidelity(gate_channel(s, NoiseModel(epsilon=EpsilonDist.fixed(e)))[0],
                              gate_channel(s)[0][0]) for e in EPS_GRID]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_channels_trace_preserving_without_loss(rng):
    nm = NoiseModel(p_dephase=0.4, epsilon=EpsilonDist.uniform(0.2), kappa=0.7)
    for variant in ("single", "dual"):
        kraus, _ = gate_channel(Scheme(variant), nm, rng)
        s = sum(k.conj().T @ k for k in kraus)
        assert np.abs(s - np.eye(4)).max() < 1e-10


def test_small_epsilon_scaling_exponent():
    eps = np.arange(1, 11) * 0.01
    for variant in ("single", "dual"):
        infid = [1 - avg_gate_fidelity(gate_channel(Scheme(variant), NoiseModel(epsilon=EpsilonDist.fixed(e)))[0])
                 for e in eps]
        slope = np.polyfit(np.log(eps), np.log(infid), 1)[0]
        assert abs(slope - 2.0) < 0.1
