"""Simulation of a CNOT gate mediated by interaction-free measurement."""
from .cavity import CavityParams, airy_transmission, routing_error
from .core import (DensityMatrix, PureState, apply_ops, embed, normalize, partial_trace, purity,
                   tensor, to_density)
from .gate import (ChainReport, GateInput, Scheme, Variant, chain, gate_channel, gate_unitary,
                   initial_state, interact, route, run_gate, unroute)
from .metrics import (CNOT, GateReport, avg_gate_fidelity, concurrence, makhlin_invariants,
                      state_fidelity, truth_table)
from .noise import EpsilonDist, NoiseModel, apply_noise_hooks, dephase_path, sample_epsilon
from .pulses import PhaseConvention, PulseArea, apply_to_qubit, perturb_area, rabi_unitary

__version__ = "0.1.0"
