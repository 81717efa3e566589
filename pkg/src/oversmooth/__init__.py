"""Dirichlet-energy analysis of over-smoothing in graph convolutional networks."""

from .energy import dirichlet_energy_edgesum, dirichlet_energy_quadratic, rayleigh_quotient
from .gcn import (Activation, EnergyTrace, LayerSpec, NetworkSpec, apply_layer, forward_trace,
                  random_layer, random_network)
from .graph import (BarabasiAlbert, EdgeListFile, ErdosRenyi, Graph, RandomGeometric,
                    RandomRegular, StochasticBlock, WattsStrogatz, augmented_laplacian,
                    connected_components, generate, is_regular, load_edge_list,
                    propagation_operator)
from .perturb import PerturbationSpec, perturb, run_experiment, summarize
from .spectral import (ContractionFactors, Spectrum, contraction_factors, eigendecompose,
                       low_eig_mix, spectral_norm_squared)

__version__ = "0.1.0"
