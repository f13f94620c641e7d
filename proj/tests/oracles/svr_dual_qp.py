"""Reference solution of the epsilon-SVR dual for the 30-point linear instance.

Solves  min 1/2 b'Kb + eps*sum(a + a*) - y'b,  b = a - a*,
        sum(b) = 0,  0 <= a, a* <= C
with cvxopt over the stacked variable [a; a*], then prints predictions at
fixed query points as a C++ initializer list. The unit tests freeze them.
"""

import numpy as np
from cvxopt import matrix, solvers

solvers.options["show_progress"] = False
solvers.options["abstol"] = 1e-12
solvers.options["reltol"] = 1e-12
solvers.options["feastol"] = 1e-12

n = 30
a = np.arange(1, n + 1, dtype=float)
y = a + 1.0
C, eps, gamma = 1000.0, 0.01, 1.0

z = (a - a.mean()) / a.std()  # population std; the other two inputs are constant
K = np.exp(-gamma * (z[:, None] - z[None, :]) ** 2)

P = np.block([[K, -K], [-K, K]])
q = np.concatenate([eps - y, eps + y])
G = np.vstack([-np.eye(2 * n), np.eye(2 * n)])
h = np.concatenate([np.zeros(2 * n), np.full(2 * n, C)])
A = np.concatenate([np.ones(n), -np.ones(n)])[None, :]
sol = solvers.qp(matrix(P), matrix(q), matrix(G), matrix(h), matrix(A), matrix(0.0))
x = np.array(sol["x"]).ravel()
beta = x[:n] - x[n:]

f = K @ beta
free = (np.abs(beta) > 1e-6 * C) & (np.abs(beta) < C * (1 - 1e-6))
bias = np.mean(y[free] - f[free] - eps * np.sign(beta[free]))

queries = [1.0, 1.5, 4.0, 7.25, 10.0, 15.5, 19.75, 22.0, 27.5, 30.0]
zq = (np.array(queries) - a.mean()) / a.std()
Kq = np.exp(-gamma * (zq[:, None] - z[None, :]) ** 2)
pred = Kq @ beta + bias

print("// query a-values")
print("{" + ", ".join(f"{v!r}" for v in queries) + "}")
print("// reference predictions")
print("{" + ", ".join(f"{v:.10f}" for v in pred) + "}")
print(f"// max |beta| = {np.abs(beta).max():.6f}, free SVs = {free.sum()}")
