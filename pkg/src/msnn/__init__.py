"""Fully memristive spiking neural network: MIF neurons, memristive STDP synapses and
the memory-retrieval / pattern-recognition experiments built from them."""

__version__ = "0.1.0"

from .encoder import Pattern, PresentationSchedule, builtin_patterns, load_pattern, save_pattern
from .memristor import MemristorParams, MemristorState, memductance, step_state
from .network import Network, NetworkConfig, build_topology, type1_config, type2_config
from .neuron import MifNeuron, MifParams, SimulationFault, SpikeEvent, rest_state, step_neuron
from .synapse import AlphaChannel, PlasticSynapse, StdpParams, stdp_window

__all__ = [
    "AlphaChannel", "MemristorParams", "MemristorState", "MifNeuron", "MifParams", "Network",
    "NetworkConfig", "Pattern", "PlasticSynapse", "PresentationSchedule", "SimulationFault",
    "SpikeEvent", "StdpParams", "builtin_patterns", "build_topology", "load_pattern",
    "memductance", "rest_state", "save_pattern", "stdp_window", "step_neuron", "step_state",
    "type1_config", "type2_config",
]
