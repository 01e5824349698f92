"""G4 formation propensity prediction: PQS mining, dataset construction and
a framework-free Conv1D + Bi-LSTM + attention classifier."""

__version__ = "0.1.0"
