import numpy as np

# Register size limits
MIN_QUBITS = 1
MAX_QUBITS = 24
# 2^24 complex128 amplitudes is 256 MB; the experiments stay at or below 16 qubits

# Storage precision of amplitudes
COMPLEX_DTYPE = np.complex128

# Numerical tolerances
NORM_TOLERANCE = 1e-10
# Allowed drift of the squared norm away from 1 after construction or a gate.
# Absorbs rounding accumulated over a few thousand gate applications.

SUPPORT_TOLERANCE = 1e-12
# Feasible probability mass at or below this value counts as zero support:
# the in-constraint state cannot be normalized and E_IC is undefined.
