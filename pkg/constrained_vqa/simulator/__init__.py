# Statevector simulation and ansatz circuits
