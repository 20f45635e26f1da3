"""Quantum RL with trainable non-local observables.

Statevector VQC function approximators whose measurement operators are
learned jointly with the circuit parameters, driven by DQN and A3C
trainers on classic-control and grid environments, behind a FastAPI
service with a thin CLI client.
"""

__version__ = "0.1.0"
