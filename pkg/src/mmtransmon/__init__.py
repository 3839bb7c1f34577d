"""Simulation and calibration toolkit for a 72 GHz transmon qubit.

Units are GHz and ns unless a function says otherwise; factors of 2 pi are
applied inside the integrator and the analytic formulas.
"""
from ._version import __version__
from .device import (DeviceParams, build_system_hamiltonian, charging_energy,
                     critical_photon_number, derived_quantities, dispersive_shift,
                     dispersive_shift_exact, dressed_shift, plasma_frequency,
                     temperature_bound, thermal_population, transmon_f01)
from .experiments import (ReadoutModel, SimulationSettings, SweepResult, pi_pulse,
                          run_chevron, run_punchout, run_purcell_sweep, run_rabi_time,
                          run_ramsey, run_t1, run_two_tone)
from .fitting import (FitResult, dephasing_decomposition, fit_damped_cosine, fit_exponential,
                      fit_peaks, power_broadening_fit, quality_factor, stark_calibration)
from .freqplan import ChainSpec, assign_features, direct_conversion_spurs, harmonics, sidebands
from .lindblad import Hamiltonian, TimeGrid, collapse_channels, evolve, steady_state
from .operators import (HilbertSpec, Operator, annihilation_op, creation_op, expectation,
                        ket_dm, number_op, tensor_product)
from .pulses import PulseEnvelope, PulseSequence, calibrate_amplitude, pulse_area
from .purcell import (JunctionBranch, analytic_purcell, mode_frequencies, purcell_time)

__all__ = [n for n in dir() if not n.startswith("_")] + ["__version__"]
